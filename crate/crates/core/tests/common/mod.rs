//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

/// Two-variable q-series truncated at `q^order`: `coeffs[k]` maps a z-exponent to its
/// coefficient.
pub type Series2 = Vec<BTreeMap<i64, i64>>;

/// Alternating theta sum `sum_n z^{a+2nk} q^{kn^2+an} - z^{-a+2nk} q^{kn^2-an}`.
pub fn theta_difference(a: i64, k: i64, order: usize) -> Series2 {
    let mut out: Series2 = vec![BTreeMap::new(); order + 1];
    for n in -20i64..=20 {
        let p1 = k * n * n + a * n;
        if p1 >= 0 && (p1 as usize) <= order {
            *out[p1 as usize].entry(a + 2 * n * k).or_insert(0) += 1;
        }
        let p2 = k * n * n - a * n;
        if p2 >= 0 && (p2 as usize) <= order {
            *out[p2 as usize].entry(-a + 2 * n * k).or_insert(0) -= 1;
        }
    }
    out
}

/// Exact division of a Laurent polynomial in `z` by `z - 1/z`.
pub fn divide_by_z_minus_inverse(p: &BTreeMap<i64, i64>) -> BTreeMap<i64, i64> {
    let mut rem = p.clone();
    rem.retain(|_, c| *c != 0);
    let mut out = BTreeMap::new();
    while let Some((&top, &c)) = rem.iter().next_back() {
        // c z^top = c z^{top-1} (z - 1/z) + c z^{top-2}
        out.insert(top - 1, c);
        rem.remove(&top);
        *rem.entry(top - 2).or_insert(0) += c;
        rem.retain(|_, c| *c != 0);
        assert!(top > -1000, "division did not terminate");
    }
    out
}

pub fn mul_laurent(a: &BTreeMap<i64, i64>, b: &BTreeMap<i64, i64>) -> BTreeMap<i64, i64> {
    let mut out = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            *out.entry(ea + eb).or_insert(0) += ca * cb;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

/// Character of the level-`level` module of highest weight `mu`, graded by relative
/// energy and sl2 weight.
pub fn character(mu: i64, level: i64, order: usize) -> Series2 {
    let num = theta_difference(mu + 1, level + 2, order);
    let den = theta_difference(1, 2, order);
    let mut chi: Series2 = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut rhs = num[k].clone();
        for j in 1..=k {
            for (e, c) in mul_laurent(&den[j], &chi[k - j]) {
                *rhs.entry(e).or_insert(0) -= c;
            }
        }
        assert_eq!(den[0], BTreeMap::from([(1, 1), (-1, -1)]));
        chi.push(divide_by_z_minus_inverse(&rhs));
    }
    chi
}

pub fn oracle_dims(mu: i64, level: i64, order: usize) -> Vec<usize> {
    character(mu, level, order)
        .iter()
        .map(|c| c.values().sum::<i64>() as usize)
        .collect()
}

/// Truncated Clebsch–Gordan rule for SU(2) at level k (labels are twice the spin).
pub fn su2_fusion(k: i64, i: i64, j: i64, m: i64) -> i64 {
    let ok = (i - j).abs() <= m && m <= (i + j).min(2 * k - i - j) && (i + j + m) % 2 == 0;
    i64::from(ok)
}

pub fn su2_s(k: usize, i: usize, j: usize) -> f64 {
    let n = (k + 2) as f64;
    (2.0 / n).sqrt() * (std::f64::consts::PI * ((i + 1) * (j + 1)) as f64 / n).sin()
}

/// Coefficients of `prod_{n>=1} (1 + q^n)^m` up to `q^order`.
pub fn fermion_series(m: usize, order: usize) -> Vec<u64> {
    let mut c = vec![0u64; order + 1];
    c[0] = 1;
    for n in 1..=order {
        for _ in 0..m {
            for e in (n..=order).rev() {
                c[e] += c[e - n];
            }
        }
    }
    c
}

