//! Exact rational linear algebra used by the module construction and the KK model.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type BigQ = BigRational;

pub fn bq(n: i128) -> BigQ {
    BigQ::from_integer(BigInt::from(n))
}

/// Symmetric `L D L^T` factorization with pivots taken greedily in index order.
///
/// For a positive semidefinite matrix a zero Schur-complement diagonal forces a zero
/// row; such indices are skipped, so the pivot set spans the quotient by the radical.
#[derive(Debug, Clone)]
pub struct PivotedLdl {
    /// Indices of the rows kept as pivots.
    pub pivots: Vec<usize>,
    /// Unit lower-triangular factor restricted to the pivots (`rank x rank`).
    pub l: Vec<Vec<BigQ>>,
    /// Positive pivot values.
    pub d: Vec<BigQ>,
}

impl PivotedLdl {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Factorizes a symmetric positive semidefinite rational matrix; a negative pivot or a
/// zero pivot with a nonzero row is reported as a unitarity violation.
pub fn pivoted_ldl(g: &[Vec<BigQ>]) -> Result<PivotedLdl> {
    let n = g.len();
    let mut a: Vec<Vec<BigQ>> = g.to_vec();
    // lfull[i][k] = multiplier of pivot k in row i
    let mut lfull: Vec<Vec<BigQ>> = vec![Vec::new(); n];
    let mut pivots = Vec::new();
    let mut d = Vec::new();
    for k in 0..n {
        let dk = a[k][k].clone();
        if dk.is_zero() {
            if ((k + 1)..n).any(|j| !a[k][j].is_zero()) {
                return Err(Error::UnitarityViolation(
                    "contravariant form has a zero pivot with a nonzero row".into(),
                ));
            }
            continue;
        }
        if dk.is_negative() {
            return Err(Error::UnitarityViolation(format!(
                "contravariant form has negative pivot {dk}"
            )));
        }
        let col: Vec<BigQ> = ((k + 1)..n).map(|i| &a[i][k] / &dk).collect();
        for (off, i) in ((k + 1)..n).enumerate() {
            if col[off].is_zero() {
                continue;
            }
            for j in i..n {
                if a[k][j].is_zero() {
                    continue;
                }
                let upd = &col[off] * &a[k][j];
                a[i][j] -= &upd;
                if j != i {
                    a[j][i] = a[i][j].clone();
                }
            }
        }
        for (off, i) in ((k + 1)..n).enumerate() {
            lfull[i].push(col[off].clone());
        }
        pivots.push(k);
        d.push(dk);
    }
    let r = pivots.len();
    let mut l = vec![vec![BigQ::zero(); r]; r];
    for (a_idx, &p) in pivots.iter().enumerate() {
        for b in 0..a_idx {
            l[a_idx][b] = lfull[p].get(b).cloned().unwrap_or_else(BigQ::zero);
        }
        l[a_idx][a_idx] = BigQ::one();
    }
    Ok(PivotedLdl { pivots, l, d })
}

/// `L^{-1} B` for unit lower-triangular `L`.
pub fn solve_unit_lower(l: &[Vec<BigQ>], b: &[Vec<BigQ>]) -> Vec<Vec<BigQ>> {
    let n = l.len();
    let cols = b.first().map_or(0, Vec::len);
    let mut x: Vec<Vec<BigQ>> = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            if l[i][k].is_zero() {
                continue;
            }
            for c in 0..cols {
                if x[k][c].is_zero() {
                    continue;
                }
                let upd = &l[i][k] * &x[k][c];
                x[i][c] -= upd;
            }
        }
    }
    x
}

pub fn transpose<T: Clone>(m: &[Vec<T>]) -> Vec<Vec<T>> {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Rank of an integer matrix, computed exactly.
pub fn integer_rank(m: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<BigQ>> = m.iter().map(|r| r.iter().map(|&x| bq(x as i128)).collect()).collect();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else { continue };
        a.swap(rank, p);
        for r in 0..rows {
            if r != rank && !a[r][c].is_zero() {
                let f = &a[r][c] / &a[rank][c];
                for k in c..cols {
                    let upd = &f * &a[rank][k];
                    a[r][k] -= upd;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// `"p/q"` (or `"p"`) rendering used for portable serialization.
pub fn q_to_string(x: &BigQ) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_from_string(s: &str) -> Result<BigQ> {
    let parse = |t: &str| t.trim().parse::<BigInt>().map_err(|_| Error::Config(format!("bad rational {s:?}")));
    match s.split_once('/') {
        Some((p, q)) => {
            let den = parse(q)?;
            if den.is_zero() {
                return Err(Error::Config(format!("zero denominator in {s:?}")));
            }
            Ok(BigQ::new(parse(p)?, den))
        }
        None => Ok(BigQ::from_integer(parse(s)?)),
    }
}

pub fn q_to_f64(x: &BigQ) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[i128]]) -> Vec<Vec<BigQ>> {
        rows.iter().map(|r| r.iter().map(|&x| bq(x)).collect()).collect()
    }

    #[test]
    fn ldl_rank_deficient() {
        // Gram matrix of vectors (1,0), (1,1), (2,1): rank 2, third is a combination.
        let g = m(&[&[1, 1, 2], &[1, 2, 3], &[2, 3, 5]]);
        let f = pivoted_ldl(&g).unwrap();
        assert_eq!(f.pivots, vec![0, 1]);
        assert_eq!(f.d, vec![bq(1), bq(1)]);
        assert_eq!(f.l[1][0], bq(1));
    }

    #[test]
    fn ldl_detects_indefinite() {
        assert!(matches!(pivoted_ldl(&m(&[&[1, 2], &[2, 1]])), Err(Error::UnitarityViolation(_))));
        assert!(matches!(pivoted_ldl(&m(&[&[0, 1], &[1, 0]])), Err(Error::UnitarityViolation(_))));
    }

    #[test]
    fn rational_strings_roundtrip() {
        for s in ["3", "-7/4", "0", "12345678901234567890/7"] {
            assert_eq!(q_to_string(&q_from_string(s).unwrap()), s);
        }
        assert!(q_from_string("1/0").is_err());
    }

    #[test]
    fn integer_rank_examples() {
        assert_eq!(integer_rank(&[vec![1, 2], vec![2, 4]]), 1);
        assert_eq!(integer_rank(&[vec![0, 1], vec![1, 0], vec![1, 1]]), 2);
    }

    proptest! {
        /// For a Gram matrix B^T B the factorization reconstructs the pivot block and
        /// its rank equals the rank of B.
        #[test]
        fn ldl_reconstructs_gram(entries in proptest::collection::vec(-3i64..4, 12)) {
            let b: Vec<Vec<i64>> = entries.chunks(4).map(|c| c.to_vec()).collect(); // 3 x 4
            let g: Vec<Vec<BigQ>> = (0..4)
                .map(|i| (0..4).map(|j| bq((0..3).map(|k| (b[k][i] * b[k][j]) as i128).sum())).collect())
                .collect();
            let f = pivoted_ldl(&g).unwrap();
            prop_assert_eq!(f.rank(), integer_rank(&b));
            let r = f.rank();
            for x in 0..r {
                for y in 0..r {
                    let mut acc = BigQ::zero();
                    for k in 0..r {
                        acc += &f.l[x][k] * &f.d[k] * &f.l[y][k];
                    }
                    prop_assert_eq!(&acc, &g[f.pivots[x]][f.pivots[y]]);
                }
            }
        }
    }
}
