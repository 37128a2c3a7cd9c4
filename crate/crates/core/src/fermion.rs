//! Ramond-sector Fock space of `2d` Majorana fermions, truncated in energy.
//!
//! Positive modes of each Majorana fermion pair into creation/annihilation operators
//! `F^a_{-n} = c^dagger_{a,n}`, `F^a_n = c_{a,n}`. The zero modes act on a `2^d`
//! dimensional Clifford module built by a Jordan–Wigner pattern, `F^a_0 = gamma_a / sqrt 2`.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::Csc;

/// Default cap on the Fock-space dimension.
pub const DEFAULT_MAX_FERMION_DIM: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockState {
    /// Bit `o` set when positive mode `o` is occupied, with `o = (n - 1) * 2d + a`.
    pub occupation: u128,
    /// Basis index in the zero-mode Clifford module.
    pub zero: u32,
    pub energy: u32,
}

#[derive(Debug, Clone)]
pub struct FermionSpace {
    /// `d`: number of zero-mode qubits; there are `2d` Majorana fermions.
    pub d: usize,
    pub cutoff: u32,
    pub states: Vec<FockState>,
    index: HashMap<(u128, u32), usize>,
    /// Mode matrices indexed `[a][n + cutoff]`.
    pub modes: Vec<Vec<Csc>>,
    /// Eigenvalues `+1`/`-1` of the grading.
    pub grading: Vec<i8>,
}

impl FermionSpace {
    pub fn num_fermions(&self) -> usize {
        2 * self.d
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn mode(&self, a: usize, n: i32) -> &Csc {
        &self.modes[a][(n + self.cutoff as i32) as usize]
    }

    /// Zero matrix if `|n|` exceeds the cutoff (the mode then vanishes on the space).
    pub fn mode_or_zero(&self, a: usize, n: i32) -> Csc {
        if n.unsigned_abs() > self.cutoff {
            Csc::zeros(self.dim(), self.dim())
        } else {
            self.mode(a, n).clone()
        }
    }

    pub fn index_of(&self, occupation: u128, zero: u32) -> Option<usize> {
        self.index.get(&(occupation, zero)).copied()
    }

    /// Relative energies (the eigenvalues of `L_0 - d/8`).
    pub fn energies(&self) -> Vec<u32> {
        self.states.iter().map(|s| s.energy).collect()
    }

    /// `L_0` eigenvalue of basis vector `i`.
    pub fn l0(&self, i: usize) -> f64 {
        self.d as f64 / 8.0 + self.states[i].energy as f64
    }

    pub fn dim_up_to(&self, e: i64) -> usize {
        if e < 0 {
            return 0;
        }
        self.states.iter().take_while(|s| (s.energy as i64) <= e).count()
    }

    /// `sum exp(-t L_0)` over the truncated basis.
    pub fn partition_function(&self, t: f64) -> f64 {
        (0..self.dim()).map(|i| (-t * self.l0(i)).exp()).sum()
    }
}

fn mode_index(d: usize, a: usize, n: u32) -> u32 {
    (n - 1) * 2 * d as u32 + a as u32
}

fn parity_below(mask: u128, bit: u32) -> f64 {
    let below = if bit == 0 { 0 } else { mask & ((1u128 << bit) - 1) };
    if below.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Builds the Ramond Fock space with `2d` Majorana fermions and energy cutoff `cutoff`.
pub fn ramond_fock(d: usize, cutoff: u32) -> Result<FermionSpace> {
    ramond_fock_bounded(d, cutoff, DEFAULT_MAX_FERMION_DIM)
}

pub fn ramond_fock_bounded(d: usize, cutoff: u32, max_dim: usize) -> Result<FermionSpace> {
    if d == 0 {
        return Err(Error::Config("number of fermion pairs must be ≥ 1".into()));
    }
    let nmodes = 2 * d * cutoff as usize;
    if nmodes > 128 {
        return Err(Error::DimensionGuard {
            what: "fermion modes".into(),
            needed: nmodes,
            limit: 128,
        });
    }
    if d > 24 {
        return Err(Error::DimensionGuard { what: "zero-mode qubits".into(), needed: d, limit: 24 });
    }
    // Occupation sets of total energy <= cutoff, each with its energy.
    let mut occs: Vec<(u32, Vec<u32>, u128)> = Vec::new();
    fn rec(d: usize, cutoff: u32, start: u32, energy: u32, cur: &mut Vec<u32>, mask: u128, out: &mut Vec<(u32, Vec<u32>, u128)>) {
        out.push((energy, cur.clone(), mask));
        let nmodes = 2 * d as u32 * cutoff;
        for o in start..nmodes {
            let n = o / (2 * d as u32) + 1;
            if energy + n > cutoff {
                break;
            }
            cur.push(o);
            rec(d, cutoff, o + 1, energy + n, cur, mask | (1u128 << o), out);
            cur.pop();
        }
    }
    rec(d, cutoff, 0, 0, &mut Vec::new(), 0, &mut occs);
    let zdim = 1usize << d;
    let total = occs.len().saturating_mul(zdim);
    if total > max_dim {
        return Err(Error::DimensionGuard { what: "fermion Fock space".into(), needed: total, limit: max_dim });
    }
    occs.sort_by(|x, y| (x.0, &x.1).cmp(&(y.0, &y.1)));
    let mut states = Vec::with_capacity(total);
    for (energy, _, mask) in &occs {
        for z in 0..zdim as u32 {
            states.push(FockState { occupation: *mask, zero: z, energy: *energy });
        }
    }
    let index: HashMap<(u128, u32), usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.occupation, s.zero), i))
        .collect();
    let grading = states
        .iter()
        .map(|s| if (s.occupation.count_ones() + s.zero.count_ones()) % 2 == 0 { 1 } else { -1 })
        .collect();
    let dim = states.len();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;

    let build = |a: usize, n: i32| -> Csc {
        let cols: Vec<Vec<(usize, Complex64)>> = states
            .par_iter()
            .map(|s| {
                let mut col = Vec::new();
                if n == 0 {
                    let j = (a / 2) as u32;
                    let zsign = parity_below(s.zero as u128, j);
                    let osign = if s.occupation.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    let bit_set = (s.zero >> j) & 1 == 1;
                    let phase = if a.is_multiple_of(2) {
                        Complex64::new(1.0, 0.0)
                    } else if bit_set {
                        Complex64::new(0.0, -1.0)
                    } else {
                        Complex64::new(0.0, 1.0)
                    };
                    let target = index[&(s.occupation, s.zero ^ (1 << j))];
                    col.push((target, phase * (zsign * osign * inv_sqrt2)));
                } else {
                    let depth = n.unsigned_abs();
                    let o = mode_index(d, a, depth);
                    let occupied = (s.occupation >> o) & 1 == 1;
                    let sign = parity_below(s.occupation, o);
                    if n < 0 && !occupied && s.energy + depth <= cutoff {
                        let t = index[&(s.occupation | (1u128 << o), s.zero)];
                        col.push((t, Complex64::new(sign, 0.0)));
                    } else if n > 0 && occupied {
                        let t = index[&(s.occupation ^ (1u128 << o), s.zero)];
                        col.push((t, Complex64::new(sign, 0.0)));
                    }
                }
                col
            })
            .collect();
        Csc::from_columns(dim, cols)
    };
    let c = cutoff as i32;
    let modes = (0..2 * d).map(|a| (-c..=c).map(|n| build(a, n)).collect()).collect();
    Ok(FermionSpace { d, cutoff, states, index, modes, grading })
}

/// Max residual of `{F^a_m, F^b_n} = delta_{m+n,0} delta_ab` over modes `|m|, |n| <= range`,
/// on inputs of energy at most `cutoff - |m| - |n|`.
pub fn check_car_range(fs: &FermionSpace, range: u32) -> f64 {
    let r = range.min(fs.cutoff) as i32;
    let nf = fs.num_fermions();
    let mut jobs = Vec::new();
    for a in 0..nf {
        for b in 0..nf {
            for m in -r..=r {
                for n in -r..=r {
                    jobs.push((a, b, m, n));
                }
            }
        }
    }
    jobs.par_iter()
        .map(|&(a, b, m, n)| {
            let budget = fs.cutoff as i64 - m.abs() as i64 - n.abs() as i64;
            let cols = fs.dim_up_to(budget);
            if cols == 0 {
                return 0.0;
            }
            let fa = fs.mode(a, m);
            let fb = fs.mode(b, n);
            let mut ac = fa.mul(&fb.first_cols(cols)).add(&fb.mul(&fa.first_cols(cols)));
            if a == b && m + n == 0 {
                let id = Csc::identity(fs.dim()).first_cols(cols);
                ac = ac.sub(&id);
            }
            ac.max_abs()
        })
        .reduce(|| 0.0, f64::max)
}

pub fn check_car(fs: &FermionSpace) -> f64 {
    check_car_range(fs, fs.cutoff)
}

/// Largest deviation of `{Gamma, F^a_n}` from zero.
pub fn grading_anticommutator_residual(fs: &FermionSpace) -> f64 {
    let g: Vec<Complex64> = fs.grading.iter().map(|&s| Complex64::new(s as f64, 0.0)).collect();
    let gm = Csc::diagonal(&g);
    let mut worst = 0.0f64;
    for per_mode in &fs.modes {
        for f in per_mode {
            worst = worst.max(gm.mul(f).add(&f.mul(&gm)).max_abs());
        }
    }
    worst
}

/// Index of the lowest-energy even basis vector selected by `choice` (0 = first, 1 = second).
pub fn ramond_vacuum_index(fs: &FermionSpace, choice: usize) -> Result<usize> {
    fs.states
        .iter()
        .enumerate()
        .filter(|(i, s)| s.energy == 0 && fs.grading[*i] == 1)
        .map(|(i, _)| i)
        .nth(choice)
        .ok_or_else(|| Error::Config(format!("no even lowest-energy vector number {choice}")))
}

/// Rank-one projection onto the chosen even lowest-energy vector, as a sparse matrix.
pub fn ramond_vacuum_projection(fs: &FermionSpace, choice: usize) -> Result<Csc> {
    let i = ramond_vacuum_index(fs, choice)?;
    Ok(Csc::from_triplets(fs.dim(), fs.dim(), &[(i, i, Complex64::new(1.0, 0.0))]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mode_space() {
        let fs = ramond_fock(3, 0).unwrap();
        assert_eq!(fs.dim(), 8);
        assert!((0..8).all(|i| fs.l0(i) == 3.0 / 8.0));
        assert_eq!(fs.grading.iter().filter(|&&g| g == 1).count(), 4);
        let gamma_trace: i32 = fs.grading.iter().map(|&g| g as i32).sum();
        assert_eq!(gamma_trace, 0);
    }

    #[test]
    fn first_excited_level() {
        let fs = ramond_fock(3, 1).unwrap();
        assert_eq!(fs.states.iter().filter(|s| s.energy == 1).count(), 48);
    }

    #[test]
    fn single_zero_mode_squares_to_half() {
        let fs = ramond_fock(1, 0).unwrap();
        for a in 0..2 {
            let f = fs.mode(a, 0);
            let sq = f.mul(f).to_dense();
            for r in 0..2 {
                for c in 0..2 {
                    let e = if r == c { 0.5 } else { 0.0 };
                    assert!((sq[(r, c)] - Complex64::new(e, 0.0)).norm() < 1e-15);
                }
            }
        }
        assert_eq!(ramond_vacuum_index(&fs, 0).unwrap(), 0);
        assert!(ramond_vacuum_index(&fs, 1).is_err());
    }

    #[test]
    fn car_and_grading() {
        let fs = ramond_fock(3, 2).unwrap();
        assert!(check_car(&fs) < 1e-12);
        assert_eq!(grading_anticommutator_residual(&fs), 0.0);
        for a in 0..6 {
            for n in 1..=2 {
                assert_eq!(fs.mode(a, n).adjoint(), *fs.mode(a, -n));
                // {F_1^a, F_1^b} = 0 exactly
                let x = fs.mode(a, n);
                assert_eq!(x.mul(x).max_abs(), 0.0);
            }
            assert!(fs.mode(a, 0).adjoint().max_abs_diff(fs.mode(a, 0)) < 1e-16);
        }
    }

    #[test]
    fn vacuum_projection() {
        let fs = ramond_fock(3, 1).unwrap();
        let p = ramond_vacuum_projection(&fs, 0).unwrap();
        let i = ramond_vacuum_index(&fs, 0).unwrap();
        assert_eq!(p.nnz(), 1);
        assert_eq!(fs.grading[i], 1);
        assert_eq!(fs.l0(i), 3.0 / 8.0);
        assert_eq!(p.mul(&p), p);
        assert_eq!(p.adjoint(), p);
        let j = ramond_vacuum_index(&fs, 1).unwrap();
        assert_ne!(i, j);
        assert_eq!(fs.states[j].energy, 0);
    }

    #[test]
    fn dimension_guard() {
        assert!(matches!(ramond_fock_bounded(3, 4, 100), Err(Error::DimensionGuard { .. })));
    }
}
