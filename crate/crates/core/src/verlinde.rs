//! Level-`l` alcove weights, the modular S-matrix and Verlinde fusion rings.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie::{weyl_group, RootSystem, WeylGroup, Q};
use crate::scalar::{Cx, Hp, Real};

/// Tolerance on `S S^dagger` being a multiple of the identity before normalization.
pub const UNITARIZE_TOL: f64 = 1e-8;
/// Largest acceptable distance of a Verlinde sum from the nearest integer.
pub const ROUNDING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    High,
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "double" => Ok(Precision::Double),
            "high" => Ok(Precision::High),
            other => Err(Error::Config(format!("precision must be double or high, got {other:?}"))),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Double => "double",
            Precision::High => "high",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlcoveWeight {
    pub dynkin_labels: Vec<i64>,
    pub index: usize,
}

/// Dominant integral weights of level at most `level`, vacuum first, then
/// lexicographic on Dynkin labels.
pub fn level_weights(rs: &RootSystem, level: u32) -> Vec<AlcoveWeight> {
    let r = rs.rank();
    let level = level as i64;
    let mut out: Vec<Vec<i64>> = Vec::new();
    let mut cur = vec![0i64; r];
    fn rec(rs: &RootSystem, level: i64, pos: usize, used: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        let a = rs.comarks[pos];
        let mut v = 0;
        while used + a * v <= level {
            cur[pos] = v;
            rec(rs, level, pos + 1, used + a * v, cur, out);
            v += 1;
        }
        cur[pos] = 0;
    }
    rec(rs, level, 0, 0, &mut cur, &mut out);
    out.sort();
    out.into_iter()
        .enumerate()
        .map(|(index, dynkin_labels)| AlcoveWeight { dynkin_labels, index })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SMatrix {
    pub level: u32,
    pub n: usize,
    /// Row-major entries.
    pub entries: Vec<Complex64>,
    pub precision: Precision,
    hp_entries: Option<Vec<Cx<Hp>>>,
}

impl SMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    /// `max |S S^dagger - 1|`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.get(i, k) * self.get(j, k).conj();
                }
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    pub fn symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).norm());
            }
        }
        worst
    }

    /// `max |S^2 - C|` for the permutation `i -> conjugation[i]`.
    pub fn charge_conjugation_residual(&self, conjugation: &[usize]) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.get(i, k) * self.get(k, j);
                }
                if conjugation[i] == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }
}

/// Unnormalized Weyl sums `sum_w det(w) exp(-2 pi i (w(l+rho), m+rho)/(k+h))`.
fn weyl_sums<T: Real>(rs: &RootSystem, weights: &[AlcoveWeight], level: u32, w: &WeylGroup) -> Vec<Cx<T>> {
    let n = weights.len();
    let r = rs.rank();
    let kh = level as i64 + rs.dual_coxeter;
    let form = rs.weight_form();
    let shifted: Vec<Vec<i64>> = weights
        .iter()
        .map(|a| a.dynkin_labels.iter().map(|x| x + 1).collect())
        .collect();
    // Images w(l + rho) for every weight.
    let images: Vec<Vec<(Vec<i64>, i8)>> = shifted
        .iter()
        .map(|v| w.elements.iter().map(|g| (g.apply(v), g.sign)).collect())
        .collect();
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (a, b) = (idx / n, idx % n);
            let mu = &shifted[b];
            // F * (mu + rho), so (x, mu + rho) = x . fm
            let fm: Vec<Q> = (0..r)
                .map(|i| (0..r).fold(Q::from_integer(0), |acc, j| acc + form[i][j] * Q::from_integer(mu[j])))
                .collect();
            let mut acc = Cx::<T>::zero();
            for (img, sign) in &images[a] {
                let ip = img
                    .iter()
                    .zip(&fm)
                    .fold(Q::from_integer(0), |acc, (x, y)| acc + Q::from_integer(*x) * *y);
                let turns = -ip / Q::from_integer(kh);
                let (c, s) = T::cis_turns(turns);
                let term = Cx { re: c, im: s };
                acc = if *sign > 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        })
        .collect()
}

fn unitarize<T: Real>(raw: Vec<Cx<T>>, n: usize) -> Result<Vec<Cx<T>>> {
    let gram = |i: usize, j: usize| -> Cx<T> {
        (0..n).fold(Cx::zero(), |acc, k| acc.add(&raw[i * n + k].mul(&raw[j * n + k].conj())))
    };
    let c = gram(0, 0).re;
    let cf = c.to_f64();
    if cf.is_nan() || cf <= 0.0 {
        return Err(Error::InternalConsistency("S-matrix Weyl sums vanish".into()));
    }
    for i in 0..n {
        for j in 0..n {
            let mut g = gram(i, j);
            if i == j {
                g.re = g.re.sub(&c);
            }
            if g.abs().to_f64() > UNITARIZE_TOL * cf {
                return Err(Error::InternalConsistency(format!(
                    "S S^dagger is not scalar at ({i},{j}); the Weyl sum is not unitarizable"
                )));
            }
        }
    }
    let scale = c.sqrt();
    let s00 = raw[0].clone();
    let phase = s00.conj().scale(&T::from_ratio(1, 1).div(&s00.abs()));
    Ok(raw
        .iter()
        .map(|x| {
            let y = x.mul(&phase);
            Cx { re: y.re.div(&scale), im: y.im.div(&scale) }
        })
        .collect())
}

/// Modular S-matrix at level `level`, double precision.
pub fn s_matrix(rs: &RootSystem, level: u32) -> Result<SMatrix> {
    let w = weyl_group(rs)?;
    s_matrix_with(rs, level, &w, Precision::Double)
}

pub fn s_matrix_with(rs: &RootSystem, level: u32, w: &WeylGroup, precision: Precision) -> Result<SMatrix> {
    if level == 0 {
        return Err(Error::Config("level must be ≥ 1".into()));
    }
    let weights = level_weights(rs, level);
    let n = weights.len();
    match precision {
        Precision::Double => {
            let s = unitarize(weyl_sums::<f64>(rs, &weights, level, w), n)?;
            Ok(SMatrix {
                level,
                n,
                entries: s.iter().map(Cx::to_c64).collect(),
                precision,
                hp_entries: None,
            })
        }
        Precision::High => {
            let s = unitarize(weyl_sums::<Hp>(rs, &weights, level, w), n)?;
            Ok(SMatrix {
                level,
                n,
                entries: s.iter().map(Cx::to_c64).collect(),
                precision,
                hp_entries: Some(s),
            })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FusionRing {
    pub n: usize,
    pub weights: Vec<AlcoveWeight>,
    /// `tensor[(i*n + j)*n + k] = N_ij^k`.
    pub tensor: Vec<i64>,
    /// `conjugation[i] = i-bar`.
    pub conjugation: Vec<usize>,
    /// Largest distance of a Verlinde sum from its rounded value.
    pub max_rounding_residual: f64,
}

impl FusionRing {
    /// Wraps a given tensor, deriving the conjugation from `N_ij^0`.
    pub fn from_tensor(weights: Vec<AlcoveWeight>, tensor: Vec<i64>) -> Self {
        let n = weights.len();
        let conjugation = (0..n)
            .map(|i| (0..n).find(|&j| tensor[(i * n + j) * n] == 1).unwrap_or(i))
            .collect();
        FusionRing {
            n,
            weights,
            tensor,
            conjugation,
            max_rounding_residual: 0.0,
        }
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize, k: usize) -> i64 {
        self.tensor[(i * self.n + j) * self.n + k]
    }

    /// Regular representation `(N_i)_{jk} = N_ij^k`.
    pub fn regular_rep(&self, i: usize) -> Vec<Vec<i64>> {
        (0..self.n)
            .map(|j| (0..self.n).map(|k| self.coeff(i, j, k)).collect())
            .collect()
    }

    pub fn regular_reps(&self) -> Vec<Vec<Vec<i64>>> {
        (0..self.n).map(|i| self.regular_rep(i)).collect()
    }

    /// Ring product in the sector basis.
    pub fn multiply(&self, x: &[i64], y: &[i64]) -> Vec<i64> {
        let n = self.n;
        let mut out = vec![0i64; n];
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            for j in 0..n {
                if y[j] == 0 {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += x[i] * y[j] * self.coeff(i, j, k);
                }
            }
        }
        out
    }

    /// Nonzero entries as `(i, j, k, N_ij^k)`.
    pub fn triples(&self) -> Vec<(usize, usize, usize, i64)> {
        let n = self.n;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let c = self.coeff(i, j, k);
                    if c != 0 {
                        out.push((i, j, k, c));
                    }
                }
            }
        }
        out
    }
}

fn fusion_sums<T: Real>(s: &[Cx<T>], n: usize) -> Result<Vec<(i64, f64)>> {
    for m in 0..n {
        if s[m].abs().to_f64() < 1e-300 {
            return Err(Error::Precision(format!("S_0{m} vanishes")));
        }
    }
    let ratio: Vec<Vec<Cx<T>>> = (0..n)
        .map(|k| (0..n).map(|m| s[k * n + m].conj().div(&s[m])).collect())
        .collect();
    Ok((0..n * n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            let mut acc = Cx::<T>::zero();
            for m in 0..n {
                acc = acc.add(&s[i * n + m].mul(&s[j * n + m]).mul(&ratio[k][m]));
            }
            let re = acc.re.to_f64();
            let im = acc.im.to_f64();
            let rounded = re.round();
            let resid = (re - rounded).abs().max(im.abs());
            (rounded as i64, resid)
        })
        .collect())
}

/// Fusion tensor from the Verlinde formula, rounded to integers with a residual guard.
pub fn fusion_coefficients(s: &SMatrix, weights: Vec<AlcoveWeight>) -> Result<FusionRing> {
    let n = s.n;
    let raw = match &s.hp_entries {
        Some(hp) => fusion_sums(hp, n)?,
        None => {
            let cx: Vec<Cx<f64>> = s.entries.iter().map(|z| Cx { re: z.re, im: z.im }).collect();
            fusion_sums(&cx, n)?
        }
    };
    let max_res = raw.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    if max_res >= ROUNDING_TOL {
        return Err(Error::Precision(format!(
            "Verlinde sum is {max_res:.3e} away from an integer"
        )));
    }
    if raw.iter().any(|(v, _)| *v < 0) {
        return Err(Error::InternalConsistency("negative fusion coefficient".into()));
    }
    let mut ring = FusionRing::from_tensor(weights, raw.into_iter().map(|(v, _)| v).collect());
    ring.max_rounding_residual = max_res;
    Ok(ring)
}

/// S-matrix and fusion ring together.
pub fn fusion_ring(rs: &RootSystem, level: u32, precision: Precision) -> Result<(SMatrix, FusionRing)> {
    let w = weyl_group(rs)?;
    let s = s_matrix_with(rs, level, &w, precision)?;
    let ring = fusion_coefficients(&s, level_weights(rs, level))?;
    Ok((s, ring))
}

/// `(x-bar)_i = x_{i-bar}`.
pub fn conjugate_class(ring: &FusionRing, x: &[i64]) -> Vec<i64> {
    (0..ring.n).map(|i| x[ring.conjugation[i]]).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomCheck {
    pub name: String,
    pub max_violation: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RingAxiomReport {
    pub checks: Vec<AxiomCheck>,
}

impl RingAxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.max_violation == 0)
    }

    pub fn violation(&self, name: &str) -> Option<i64> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.max_violation)
    }
}

fn matmul_int(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

/// Checks the fusion-ring identities exactly over the integers.
pub fn verify_ring_axioms(ring: &FusionRing) -> RingAxiomReport {
    let n = ring.n;
    let c = |i, j, k| ring.coeff(i, j, k);
    let bar = &ring.conjugation;
    let mut unit = 0i64;
    let mut comm = 0i64;
    let mut conj = 0i64;
    let mut nonneg = 0i64;
    for i in 0..n {
        for j in 0..n {
            let expect = i64::from(bar[i] == j);
            unit = unit.max((c(i, j, 0) - expect).abs());
            for k in 0..n {
                comm = comm.max((c(i, j, k) - c(j, i, k)).abs());
                conj = conj
                    .max((c(i, j, bar[k]) - c(j, k, bar[i])).abs())
                    .max((c(i, j, bar[k]) - c(bar[k], bar[j], i)).abs());
                nonneg = nonneg.max(-c(i, j, k));
            }
        }
    }
    // Conjugation must be an involution for the identities above to be meaningful.
    let involution = (0..n).map(|i| i64::from(bar[bar[i]] != i)).max().unwrap_or(0);
    let reps = ring.regular_reps();
    let mut assoc = 0i64;
    let mut reps_commute = 0i64;
    for i in 0..n {
        for j in 0..n {
            let lhs = matmul_int(&reps[i], &reps[j]);
            let rev = matmul_int(&reps[j], &reps[i]);
            for a in 0..n {
                for b in 0..n {
                    let rhs: i64 = (0..n).map(|k| c(i, j, k) * reps[k][a][b]).sum();
                    assoc = assoc.max((lhs[a][b] - rhs).abs());
                    reps_commute = reps_commute.max((lhs[a][b] - rev[a][b]).abs());
                }
            }
        }
    }
    let mut unit_rep = 0i64;
    for a in 0..n {
        for b in 0..n {
            unit_rep = unit_rep.max((reps[0][a][b] - i64::from(a == b)).abs());
        }
    }
    let checks = [
        ("unit_pairing", unit),
        ("commutativity", comm),
        ("conjugation_symmetry", conj),
        ("conjugation_involution", involution),
        ("associativity", assoc),
        ("vacuum_identity", unit_rep),
        ("regular_reps_commute", reps_commute),
        ("nonnegativity", nonneg),
    ]
    .into_iter()
    .map(|(name, max_violation)| AxiomCheck { name: name.into(), max_violation })
    .collect();
    RingAxiomReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::root_system;

    fn rs(s: &str) -> RootSystem {
        root_system(s.parse().unwrap()).unwrap()
    }

    #[test]
    fn weight_enumeration() {
        for l in 1..6 {
            assert_eq!(level_weights(&rs("A1"), l).len(), l as usize + 1);
        }
        let w: Vec<Vec<i64>> = level_weights(&rs("A2"), 1).into_iter().map(|a| a.dynkin_labels).collect();
        assert_eq!(w, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        // G2 comarks are (1, 2): level 1 has (0,0) and (1,0).
        assert_eq!(level_weights(&rs("G2"), 1).len(), 2);
    }

    #[test]
    fn a1_level1_s_matrix() {
        let s = s_matrix(&rs("A1"), 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [h, h, h, -h];
        for (z, e) in s.entries.iter().zip(expect) {
            assert!((z.re - e).abs() < 1e-14 && z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn a1_level1_fusion() {
        let (_, ring) = fusion_ring(&rs("A1"), 1, Precision::Double).unwrap();
        assert_eq!(ring.coeff(1, 1, 0), 1);
        assert_eq!(ring.coeff(1, 1, 1), 0);
    }

    #[test]
    fn a2_level1_is_z3() {
        let (s, ring) = fusion_ring(&rs("A2"), 1, Precision::Double).unwrap();
        // sectors 1 and 2 are (0,1) and (1,0); conjugation swaps them
        assert_eq!(ring.conjugation, vec![0, 2, 1]);
        for i in 0..3 {
            for j in 0..3 {
                // group law of Z/3 after identifying (1,0) with the generator
                let g = |x: usize| [0usize, 2, 1][x];
                let k = [0usize, 2, 1][(g(i) + g(j)) % 3];
                for kk in 0..3 {
                    assert_eq!(ring.coeff(i, j, kk), i64::from(kk == k));
                }
            }
        }
        assert!(s.unitarity_residual() < 1e-12);
        assert!(s.charge_conjugation_residual(&ring.conjugation) < 1e-12);
        assert_eq!(conjugate_class(&ring, &[0, 1, 0]), vec![0, 0, 1]);
    }

    #[test]
    fn conjugation_examples() {
        let (_, ring) = fusion_ring(&rs("A1"), 2, Precision::Double).unwrap();
        assert_eq!(conjugate_class(&ring, &[0, 1, 0]), vec![0, 1, 0]);
        assert_eq!(conjugate_class(&ring, &[1, 0, 0]), vec![1, 0, 0]);
    }

    #[test]
    fn corrupted_tensor_reported() {
        let (_, ring) = fusion_ring(&rs("A1"), 4, Precision::Double).unwrap();
        assert!(verify_ring_axioms(&ring).passed());
        let mut bad = ring.clone();
        bad.tensor[0] = 2;
        let report = verify_ring_axioms(&bad);
        assert!(!report.passed());
        assert_eq!(report.violation("unit_pairing"), Some(1));
    }

    #[test]
    fn high_precision_agrees() {
        let r = rs("A2");
        let w = weyl_group(&r).unwrap();
        let lo = s_matrix_with(&r, 2, &w, Precision::Double).unwrap();
        let hi = s_matrix_with(&r, 2, &w, Precision::High).unwrap();
        for (a, b) in lo.entries.iter().zip(&hi.entries) {
            assert!((a - b).norm() < 1e-13);
        }
        let r1 = fusion_coefficients(&lo, level_weights(&r, 2)).unwrap();
        let r2 = fusion_coefficients(&hi, level_weights(&r, 2)).unwrap();
        assert_eq!(r1.tensor, r2.tensor);
        assert!(r2.max_rounding_residual < 1e-15);
    }

    #[test]
    fn level_zero_rejected() {
        assert!(matches!(s_matrix(&rs("A1"), 0), Err(Error::Config(_))));
    }

    #[test]
    fn other_types_satisfy_axioms() {
        for (name, level) in [("B2", 1), ("B2", 2), ("G2", 1), ("G2", 2), ("C3", 1), ("D4", 1)] {
            let (s, ring) = fusion_ring(&rs(name), level, Precision::Double).unwrap();
            assert!(s.unitarity_residual() < 1e-10, "{name} {level}");
            assert!(s.symmetry_residual() < 1e-10, "{name} {level}");
            assert!(s.charge_conjugation_residual(&ring.conjugation) < 1e-10);
            assert!(verify_ring_axioms(&ring).passed(), "{name} {level}");
            assert!(s.get(0, 0).re > 0.0);
            for m in 0..s.n {
                assert!(s.get(0, m).re > 0.0 && s.get(0, m).im.abs() < 1e-12);
            }
        }
        // D4 level 1: four sectors, each squaring to the vacuum.
        let (_, ring) = fusion_ring(&rs("D4"), 1, Precision::Double).unwrap();
        assert_eq!(ring.n, 4);
        for i in 0..4 {
            assert_eq!(ring.coeff(i, i, 0), 1);
        }
    }
}
