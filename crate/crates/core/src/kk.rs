//! Integer model of `K_0 = Z^N`, `K^0 = Z^N` and `KK = End(Z^N)` over a fusion ring.
//!
//! Conventions: a KK class is an `N x N` integer matrix acting on K-homology coordinates
//! (column vectors in the `epsilon` basis) from the left; a K_0 class (row vector in the
//! `[p]` basis) is multiplied from the left, `r * M`; the K_0 x K-homology pairing is the dot
//! product. With `phi_0(e_i)[k][j] = N_ij^k` these reproduce
//! `[p_jbar] x phi_0(e_i) = sum_k N_ij^k [p_kbar]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::integer_rank;
use crate::verlinde::{conjugate_class, FusionRing};

pub type IntMatrix = Vec<Vec<i64>>;

pub const DEFAULT_KK_SEED: u64 = 20_240_601;
pub const DEFAULT_KK_SAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum KClass {
    /// K_0 class in the basis `[p_i]`.
    K0(Vec<i64>),
    /// K-homology class in the basis `epsilon_i`.
    KHom(Vec<i64>),
    /// KK class as an integer matrix.
    KK(IntMatrix),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum KProduct {
    Class(KClass),
    Integer(i64),
}

fn mat_vec(m: &IntMatrix, v: &[i64]) -> Vec<i64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn vec_mat(v: &[i64], m: &IntMatrix) -> Vec<i64> {
    let n = m.first().map_or(0, Vec::len);
    (0..n).map(|j| v.iter().zip(m).map(|(a, row)| a * row[j]).sum()).collect()
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| (0..n).map(|j| row.iter().zip(b).map(|(x, br)| x * br[j]).sum()).collect())
        .collect()
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect()
}

pub fn basis_vector(n: usize, i: usize) -> Vec<i64> {
    (0..n).map(|j| (i == j) as i64).collect()
}

fn check_len(v: &[i64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::KindMismatch(format!("vector of length {} in a rank-{n} model", v.len())));
    }
    Ok(())
}

/// `phi_{-1}(x)`: the class `sum x_i [p_i]`.
pub fn phi_minus1(ring: &FusionRing, x: &[i64]) -> Result<KClass> {
    check_len(x, ring.n)?;
    Ok(KClass::K0(x.to_vec()))
}

/// `phi_1(x)`: the class `sum x_i epsilon_i`.
pub fn phi_1(ring: &FusionRing, x: &[i64]) -> Result<KClass> {
    check_len(x, ring.n)?;
    Ok(KClass::KHom(x.to_vec()))
}

/// `phi_0(x)` with entries `[k][j] = sum_i x_i N_ij^k`.
pub fn phi_0_matrix(ring: &FusionRing, x: &[i64]) -> IntMatrix {
    let n = ring.n;
    (0..n)
        .map(|k| (0..n).map(|j| (0..n).map(|i| x[i] * ring.coeff(i, j, k)).sum()).collect())
        .collect()
}

pub fn phi_0(ring: &FusionRing, x: &[i64]) -> Result<KClass> {
    check_len(x, ring.n)?;
    Ok(KClass::KK(phi_0_matrix(ring, x)))
}

fn kind(c: &KClass) -> &'static str {
    match c {
        KClass::K0(_) => "K0",
        KClass::KHom(_) => "K-hom",
        KClass::KK(_) => "KK",
    }
}

/// Kasparov product of composable classes.
pub fn kasparov(a: &KClass, b: &KClass) -> Result<KProduct> {
    let dims = |c: &KClass| match c {
        KClass::K0(v) | KClass::KHom(v) => v.len(),
        KClass::KK(m) => m.len(),
    };
    if dims(a) != dims(b) {
        return Err(Error::KindMismatch(format!("rank {} against rank {}", dims(a), dims(b))));
    }
    Ok(match (a, b) {
        (KClass::K0(r), KClass::KK(m)) => KProduct::Class(KClass::K0(vec_mat(r, m))),
        (KClass::KK(m), KClass::KHom(v)) => KProduct::Class(KClass::KHom(mat_vec(m, v))),
        (KClass::KK(x), KClass::KK(y)) => KProduct::Class(KClass::KK(mat_mul(x, y))),
        (KClass::K0(r), KClass::KHom(v)) => KProduct::Integer(r.iter().zip(v).map(|(a, b)| a * b).sum()),
        _ => {
            return Err(Error::KindMismatch(format!("{} x {} is not defined", kind(a), kind(b))));
        }
    })
}

/// `[p_j] x epsilon_i` for all sectors, as a matrix `[i][j]`.
pub fn k_pairing_matrix(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match kasparov(&KClass::K0(basis_vector(n, j)), &KClass::KHom(basis_vector(n, i))) {
                    Ok(KProduct::Integer(v)) => v,
                    _ => unreachable!("K0 x K-hom is an integer"),
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KkReport {
    pub convention: String,
    pub rank: usize,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<IdentityCheck>,
}

impl KkReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures == 0)
    }

    pub fn check(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Basis vectors followed by `count` seeded random vectors with entries in `-3..=3`.
pub fn sample_vectors(n: usize, count: usize, seed: u64) -> Vec<Vec<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<i64>> = (0..n).map(|i| basis_vector(n, i)).collect();
    for _ in 0..count {
        out.push((0..n).map(|_| rng.random_range(-3..=3)).collect());
    }
    out
}

struct Recorder {
    check: IdentityCheck,
}

impl Recorder {
    fn new(name: &str) -> Self {
        Recorder { check: IdentityCheck { name: name.into(), cases: 0, failures: 0, counterexample: None } }
    }

    fn record<T: PartialEq + std::fmt::Debug>(&mut self, got: T, want: T, context: impl FnOnce() -> String) {
        self.check.cases += 1;
        if got != want {
            self.check.failures += 1;
            if self.check.counterexample.is_none() {
                self.check.counterexample = Some(format!("{}: got {got:?}, expected {want:?}", context()));
            }
        }
    }
}

fn class_of(p: Result<KProduct>) -> KClass {
    match p {
        Ok(KProduct::Class(c)) => c,
        other => panic!("expected a class, got {other:?}"),
    }
}

/// Checks the `phi` identities, the triple products and the homomorphism properties.
pub fn verify_pairing2(ring: &FusionRing) -> KkReport {
    verify_pairing2_with(ring, DEFAULT_KK_SAMPLES, DEFAULT_KK_SEED)
}

pub fn verify_pairing2_with(ring: &FusionRing, samples: usize, seed: u64) -> KkReport {
    let n = ring.n;
    let vs = sample_vectors(n, samples, seed);
    let mats: Vec<IntMatrix> = vs.iter().map(|x| phi_0_matrix(ring, x)).collect();
    let e0 = basis_vector(n, 0);

    let mut right = Recorder::new("phi0(x) x phi1(y) = phi1(xy)");
    let mut left = Recorder::new("phi-1(y) x phi0(x) = phi-1(xbar y)");
    let mut unit_r = Recorder::new("phi1(x) = phi0(x) x eps_0");
    let mut unit_l = Recorder::new("phi-1(x) = [p_0] x phi0(xbar)");
    let mut triple = Recorder::new("[p_k] x phi0(e_i) x eps_j = N_ij^k");
    let mut conj = Recorder::new("[p_jbar] x phi0(e_i) = sum_k N_ij^k [p_kbar]");
    let mut hom = Recorder::new("phi0(x) phi0(y) = phi0(xy)");
    let mut comm = Recorder::new("phi0(x) phi0(y) = phi0(y) phi0(x)");
    let mut unit = Recorder::new("phi0(e_0) = 1");
    let mut inj = Recorder::new("phi0 injective");

    for (a, x) in vs.iter().enumerate() {
        let px = KClass::KK(mats[a].clone());
        for (b, y) in vs.iter().enumerate() {
            let ctx = || format!("x = {x:?}, y = {y:?}");
            let xy = ring.multiply(x, y);
            right.record(class_of(kasparov(&px, &phi_1(ring, y).unwrap())), KClass::KHom(xy.clone()), ctx);
            let xbar_y = ring.multiply(&conjugate_class(ring, x), y);
            left.record(class_of(kasparov(&phi_minus1(ring, y).unwrap(), &px)), KClass::K0(xbar_y), ctx);
            hom.record(mat_mul(&mats[a], &mats[b]), phi_0_matrix(ring, &xy), ctx);
            comm.record(mat_mul(&mats[a], &mats[b]), mat_mul(&mats[b], &mats[a]), ctx);
        }
        let ctx = || format!("x = {x:?}");
        unit_r.record(class_of(kasparov(&px, &KClass::KHom(e0.clone()))), KClass::KHom(x.clone()), ctx);
        let pxbar = phi_0(ring, &conjugate_class(ring, x)).unwrap();
        unit_l.record(class_of(kasparov(&KClass::K0(e0.clone()), &pxbar)), KClass::K0(x.clone()), ctx);
    }
    for i in 0..n {
        let m = KClass::KK(phi_0_matrix(ring, &basis_vector(n, i)));
        for j in 0..n {
            let lhs = class_of(kasparov(&KClass::K0(basis_vector(n, ring.conjugation[j])), &m));
            let mut rhs = vec![0i64; n];
            for k in 0..n {
                rhs[ring.conjugation[k]] += ring.coeff(i, j, k);
            }
            conj.record(lhs, KClass::K0(rhs), || format!("i = {i}, j = {j}"));
            for k in 0..n {
                let pk = class_of(kasparov(&KClass::K0(basis_vector(n, k)), &m));
                let v = kasparov(&pk, &KClass::KHom(basis_vector(n, j))).unwrap();
                triple.record(v, KProduct::Integer(ring.coeff(i, j, k)), || format!("i = {i}, j = {j}, k = {k}"));
            }
        }
    }
    unit.record(phi_0_matrix(ring, &e0), identity(n), || "e_0".into());
    // Rank of x -> phi0(x) as an N x N^2 integer matrix.
    let stacked: IntMatrix = (0..n).map(|i| phi_0_matrix(ring, &basis_vector(n, i)).concat()).collect();
    inj.record(integer_rank(&stacked), n, || "rank of the stacked phi0 images".into());

    KkReport {
        convention: "KK acts on K-homology columns from the left; K0 rows multiply KK from the left; \
                     phi0(e_i)[k][j] = N_ij^k"
            .into(),
        rank: n,
        seed,
        samples,
        checks: [right, left, unit_r, unit_l, triple, conj, hom, comm, unit, inj].into_iter().map(|r| r.check).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::root_system;
    use crate::verlinde::{fusion_ring, Precision};

    fn ring(ct: &str, level: u32) -> FusionRing {
        fusion_ring(&root_system(ct.parse().unwrap()).unwrap(), level, Precision::Double).unwrap().1
    }

    #[test]
    fn phi_maps_on_basis() {
        let r = ring("A1", 1);
        assert_eq!(phi_0_matrix(&r, &[1, 0]), identity(2));
        assert_eq!(phi_0_matrix(&r, &[0, 1]), vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(phi_minus1(&r, &[1, 0]).unwrap(), KClass::K0(vec![1, 0]));
        assert_eq!(phi_1(&r, &[0, 1]).unwrap(), KClass::KHom(vec![0, 1]));
        let r3 = ring("A1", 3);
        assert_eq!(phi_minus1(&r3, &[0, 1, 1, 0]).unwrap(), KClass::K0(vec![0, 1, 1, 0]));
        assert!(phi_0(&r, &[1, 0, 0]).is_err());
    }

    #[test]
    fn kinds_compose() {
        let a = KClass::K0(vec![1, 0]);
        let e = KClass::KHom(vec![0, 1]);
        let m = KClass::KK(identity(2));
        assert_eq!(kasparov(&a, &e).unwrap(), KProduct::Integer(0));
        assert!(matches!(kasparov(&e, &a), Err(Error::KindMismatch(_))));
        assert!(matches!(kasparov(&e, &m), Err(Error::KindMismatch(_))));
        assert!(matches!(kasparov(&a, &KClass::KHom(vec![1, 0, 0])), Err(Error::KindMismatch(_))));
        assert_eq!(k_pairing_matrix(3), identity(3));
    }

    #[test]
    fn pairing2_identities() {
        for (ct, level) in [("A1", 3), ("A2", 1), ("A1", 1)] {
            let rep = verify_pairing2(&ring(ct, level));
            assert!(rep.passed(), "{ct} {level}: {:?}", rep.checks);
        }
        let r = ring("A2", 1);
        let m = phi_0_matrix(&r, &basis_vector(3, 1));
        let mut cube = identity(3);
        for _ in 0..3 {
            cube = mat_mul(&cube, &m);
        }
        assert_eq!(cube, identity(3));
        assert!(m.iter().all(|row| row.iter().sum::<i64>() == 1) && m != identity(3));
    }

    #[test]
    fn detects_a_broken_ring() {
        let mut r = ring("A1", 2);
        let n = r.n;
        r.tensor[(n + 1) * n + 2] += 1;
        let rep = verify_pairing2(&r);
        assert!(!rep.passed());
        assert!(rep.checks.iter().any(|c| c.counterexample.is_some()));
    }

    #[test]
    fn samples_are_seeded() {
        assert_eq!(sample_vectors(3, 5, 7), sample_vectors(3, 5, 7));
        assert_eq!(sample_vectors(3, 5, 7).len(), 8);
    }
}
