//! Super-Sugawara construction on `H_mu ⊗ H_0 ⊗ F_R`: the Ramond super-Virasoro modes
//! `G_n`, `L_n`, the Dirac operator `D = G_0`, and checks of their relations.
//!
//! Every factor operator is assembled as an exact compression: products are ordered so
//! that the operator lowering the energy acts first, which keeps every intermediate state
//! below `max(input, output)` energy.

use std::collections::HashMap;
use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::affine::{irreducible_truncation_with, ModuleOptions, TruncatedModule};
use crate::error::{Error, Result};
use crate::fermion::{ramond_fock_bounded, FermionSpace, DEFAULT_MAX_FERMION_DIM};
use crate::lie::{CartanType, Q};
use crate::sparse::Csc;

pub const DEFAULT_MAX_HAT_DIM: usize = 400_000;
/// Blocks up to this size are diagonalized densely; larger ones use a perturbation bound.
pub const DEFAULT_DENSE_LIMIT: usize = 1024;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy)]
pub struct HatOptions {
    /// Extra fermion energy levels beyond the total cutoff.
    pub headroom: u32,
    pub max_dim: usize,
    pub max_fermion_dim: usize,
    pub module: ModuleOptions,
}

impl Default for HatOptions {
    fn default() -> Self {
        HatOptions {
            headroom: 2,
            max_dim: DEFAULT_MAX_HAT_DIM,
            max_fermion_dim: DEFAULT_MAX_FERMION_DIM,
            module: ModuleOptions::default(),
        }
    }
}

/// Truncated `H_mu ⊗ H_0 ⊗ F_R` with total relative energy at most `cutoff`.
#[derive(Debug, Clone)]
pub struct HatSpace {
    pub algebra: CartanType,
    pub level: u32,
    pub highest_weight: u32,
    pub cutoff: u32,
    pub module_i: TruncatedModule,
    pub module_0: TruncatedModule,
    pub fermions: FermionSpace,
    /// Factor indices `(x, y, z)` ordered by total energy, then lexicographically.
    pub basis: Vec<(u32, u32, u32)>,
    pub energies: Vec<u32>,
    pub grading: Vec<i8>,
    /// `dim g`; there are `2d` currents and `2d` Majorana fermions.
    pub d: usize,
    pub h_dual: i64,
    /// Conformal weight of the first factor.
    pub conformal_weight: Q,
    index: HashMap<(u32, u32, u32), u32>,
    currents_i: Vec<Vec<Csc>>,
    currents_0: Vec<Vec<Csc>>,
}

/// One summand `coef * (A ⊗ B ⊗ C)`; `None` stands for the identity.
pub struct Term<'a> {
    pub ops: [Option<&'a Csc>; 3],
    pub coef: Complex64,
}

fn dense_to_csc(m: &DMatrix<Complex64>) -> Csc {
    Csc::from_dense(m)
}

pub fn assemble_hat_space(mu: u32, level: u32, cutoff: u32, algebra: CartanType) -> Result<HatSpace> {
    assemble_hat_space_with(mu, level, cutoff, algebra, HatOptions::default())
}

pub fn assemble_hat_space_with(
    mu: u32,
    level: u32,
    cutoff: u32,
    algebra: CartanType,
    opts: HatOptions,
) -> Result<HatSpace> {
    let module_i = irreducible_truncation_with(algebra, mu, level, cutoff, opts.module)?;
    let module_0 = irreducible_truncation_with(algebra, 0, level, cutoff, opts.module)?;
    hat_space_from_modules(module_i, module_0, opts)
}

/// Assembles the hat space from prebuilt modules of equal level and cutoff, the second
/// one being the vacuum module.
pub fn hat_space_from_modules(module_i: TruncatedModule, module_0: TruncatedModule, opts: HatOptions) -> Result<HatSpace> {
    if module_0.highest_weight != 0
        || module_0.level != module_i.level
        || module_0.cutoff != module_i.cutoff
        || module_0.algebra != module_i.algebra
    {
        return Err(Error::Config("hat space needs a vacuum module of the same level and cutoff".into()));
    }
    let (algebra, level, cutoff, mu) = (module_i.algebra, module_i.level, module_i.cutoff, module_i.highest_weight);
    let d = module_i.structure.dim;
    let fermions = ramond_fock_bounded(d, cutoff + opts.headroom, opts.max_fermion_dim)?;

    let fe = fermions.energies();
    let count: usize = module_i
        .energies
        .iter()
        .map(|&e1| {
            module_0
                .energies
                .iter()
                .filter(|&&e2| e1 + e2 <= cutoff)
                .map(|&e2| fermions.dim_up_to((cutoff - e1 - e2) as i64))
                .sum::<usize>()
        })
        .sum();
    if count > opts.max_dim {
        return Err(Error::DimensionGuard { what: "hat space".into(), needed: count, limit: opts.max_dim });
    }
    let mut basis = Vec::with_capacity(count);
    for (x, &e1) in module_i.energies.iter().enumerate() {
        for (y, &e2) in module_0.energies.iter().enumerate() {
            if e1 + e2 > cutoff {
                continue;
            }
            for z in 0..fermions.dim_up_to((cutoff - e1 - e2) as i64) {
                basis.push((x as u32, y as u32, z as u32));
            }
        }
    }
    let total = |t: &(u32, u32, u32)| module_i.energies[t.0 as usize] + module_0.energies[t.1 as usize] + fe[t.2 as usize];
    basis.sort_by_key(|t| (total(t), *t));
    let energies: Vec<u32> = basis.iter().map(total).collect();
    let grading = basis.iter().map(|t| fermions.grading[t.2 as usize]).collect();
    let index = basis.iter().enumerate().map(|(i, &t)| (t, i as u32)).collect();
    let to_csc = |m: &TruncatedModule| -> Vec<Vec<Csc>> {
        m.currents.iter().map(|per| per.iter().map(dense_to_csc).collect()).collect()
    };
    let currents_i = to_csc(&module_i);
    let currents_0 = to_csc(&module_0);
    Ok(HatSpace {
        algebra,
        level,
        highest_weight: mu,
        cutoff,
        d,
        h_dual: module_i.structure.h_dual,
        conformal_weight: module_i.conformal_weight,
        module_i,
        module_0,
        fermions,
        basis,
        energies,
        grading,
        index,
        currents_i,
        currents_0,
    })
}

impl HatSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, t: (u32, u32, u32)) -> Option<usize> {
        self.index.get(&t).map(|&i| i as usize)
    }

    pub fn num_fermions(&self) -> usize {
        2 * self.d
    }

    pub fn headroom(&self) -> u32 {
        self.fermions.cutoff - self.cutoff
    }

    /// `c = d + 2 d level / (level + h_dual)`.
    pub fn central_charge(&self) -> Q {
        let d = self.d as i64;
        let l = self.level as i64;
        Q::from_integer(d) + Q::new(2 * d * l, l + self.h_dual)
    }

    /// `d (1/12 - level / (12 (level + h_dual)))`.
    pub fn gap_bound(&self) -> Q {
        let l = self.level as i64;
        Q::from_integer(self.d as i64) * (Q::new(1, 12) - Q::new(l, 12 * (l + self.h_dual)))
    }

    /// Lowest eigenvalue of the total conformal Hamiltonian, `h + d/8`.
    pub fn lowest_l0(&self) -> Q {
        self.conformal_weight + Q::new(self.d as i64, 8)
    }

    /// Exact eigenvalue of the total conformal Hamiltonian on basis vector `i`.
    pub fn l0_exact(&self, i: usize) -> Q {
        self.lowest_l0() + Q::from_integer(self.energies[i] as i64)
    }

    pub fn l0_hat(&self, i: usize) -> f64 {
        q_f64(self.l0_exact(i))
    }

    pub fn dim_up_to(&self, e: i64) -> usize {
        if e < 0 {
            return 0;
        }
        self.energies.iter().take_while(|&&x| (x as i64) <= e).count()
    }

    /// Index ranges of the energy blocks, lowest first.
    pub fn blocks(&self) -> Vec<(u32, Range<usize>)> {
        let mut out = Vec::new();
        let mut start = 0;
        while start < self.dim() {
            let e = self.energies[start];
            let end = start + self.energies[start..].iter().take_while(|&&x| x == e).count();
            out.push((e, start..end));
            start = end;
        }
        out
    }

    /// Structure constants of `g ⊕ g` in the doubled orthonormal basis.
    pub fn f2(&self, a: usize, b: usize, c: usize) -> f64 {
        let d = self.d;
        let s = &self.module_i.structure;
        if a < d && b < d && c < d {
            s.get(a, b, c)
        } else if a >= d && b >= d && c >= d {
            s.get(a - d, b - d, c - d)
        } else {
            0.0
        }
    }

    /// Current `J^a_n` of the doubled algebra as a factor operator: `a < d` acts on the
    /// first factor, `a >= d` on the second.
    pub fn factor_current(&self, a: usize, n: i32) -> Option<(usize, &Csc)> {
        if n.unsigned_abs() > self.cutoff {
            return None;
        }
        let slot = (n + self.cutoff as i32) as usize;
        if a < self.d {
            Some((0, &self.currents_i[a][slot]))
        } else {
            Some((1, &self.currents_0[a - self.d][slot]))
        }
    }

    /// Sum of tensor-product terms, compressed to the hat basis.
    pub fn embed(&self, terms: &[Term]) -> Csc {
        let cols: Vec<Vec<(usize, Complex64)>> = self
            .basis
            .par_iter()
            .map(|&(x, y, z)| {
                let mut col = Vec::new();
                let src = [x as usize, y as usize, z as usize];
                for t in terms {
                    let parts: Vec<Vec<(usize, Complex64)>> = (0..3)
                        .map(|f| match t.ops[f] {
                            Some(op) => op.col(src[f]).collect(),
                            None => vec![(src[f], ONE)],
                        })
                        .collect();
                    for &(r1, v1) in &parts[0] {
                        for &(r2, v2) in &parts[1] {
                            for &(r3, v3) in &parts[2] {
                                if let Some(&i) = self.index.get(&(r1 as u32, r2 as u32, r3 as u32)) {
                                    col.push((i as usize, t.coef * v1 * v2 * v3));
                                }
                            }
                        }
                    }
                }
                col
            })
            .collect();
        Csc::from_columns(self.dim(), cols)
    }

    /// `J^a_n` on the hat space.
    pub fn current(&self, a: usize, n: i32) -> Csc {
        match self.factor_current(a, n) {
            None => Csc::zeros(self.dim(), self.dim()),
            Some((f, op)) => {
                let mut ops = [None, None, None];
                ops[f] = Some(op);
                self.embed(&[Term { ops, coef: ONE }])
            }
        }
    }

    /// `F^a_n` on the hat space.
    pub fn fermion(&self, a: usize, n: i32) -> Csc {
        if n.unsigned_abs() > self.fermions.cutoff {
            return Csc::zeros(self.dim(), self.dim());
        }
        self.embed(&[Term { ops: [None, None, Some(self.fermions.mode(a, n))], coef: ONE }])
    }

    pub fn grading_matrix(&self) -> Csc {
        Csc::diagonal(&self.grading.iter().map(|&g| Complex64::new(g as f64, 0.0)).collect::<Vec<_>>())
    }

    /// Diagonal of the total conformal Hamiltonian.
    pub fn l0_matrix(&self) -> Csc {
        Csc::diagonal(&(0..self.dim()).map(|i| Complex64::new(self.l0_hat(i), 0.0)).collect::<Vec<_>>())
    }
}

pub fn q_f64(q: Q) -> f64 {
    Ratio::new(*q.numer(), *q.denom()).to_f64().unwrap_or(f64::NAN)
}

/// `A B` if the mode of `B` is at least that of `A`, else `sign * B A`: the operator
/// lowering energy more acts first.
fn lowering_first(a: &Csc, ma: i32, b: &Csc, mb: i32, sign: f64) -> Csc {
    if ma <= mb {
        a.mul(b)
    } else {
        b.mul(a).scale(Complex64::new(sign, 0.0))
    }
}

/// Super-Virasoro modes on the hat space, and the fermion bilinears `J'` on the fermion factor.
#[derive(Debug, Clone)]
pub struct SugawaraModes {
    pub max_mode: u32,
    pub g: Vec<Csc>,
    pub l: Vec<Csc>,
    /// `J'^a_m` on the fermion factor, `[a][m + fermion cutoff]`.
    pub jprime: Vec<Vec<Csc>>,
    fermion_cutoff: u32,
}

impl SugawaraModes {
    pub fn g(&self, n: i32) -> &Csc {
        &self.g[(n + self.max_mode as i32) as usize]
    }

    pub fn l(&self, n: i32) -> &Csc {
        &self.l[(n + self.max_mode as i32) as usize]
    }

    pub fn dirac(&self) -> &Csc {
        self.g(0)
    }

    pub fn has_mode(&self, n: i32) -> bool {
        n.unsigned_abs() <= self.max_mode
    }

    pub fn jprime(&self, a: usize, m: i32) -> Result<&Csc> {
        if m.unsigned_abs() > self.fermion_cutoff {
            return Err(Error::InsufficientHeadroom {
                have: self.fermion_cutoff as usize,
                required: m.unsigned_abs() as usize,
            });
        }
        Ok(&self.jprime[a][(m + self.fermion_cutoff as i32) as usize])
    }
}

/// `J'^a_m = -(i/2) sum_{b,c,k} f_abc F^b_k F^c_{m-k}` on the fermion factor.
pub fn jprime_factor(hs: &HatSpace) -> Vec<Vec<Csc>> {
    let fs = &hs.fermions;
    let nf = fs.cutoff as i32;
    let dim = fs.dim();
    let nferm = hs.num_fermions();
    let jobs: Vec<(usize, i32)> = (0..nferm).flat_map(|a| (-nf..=nf).map(move |m| (a, m))).collect();
    let mats: Vec<Csc> = jobs
        .par_iter()
        .map(|&(a, m)| {
            let mut acc = Csc::zeros(dim, dim);
            for b in 0..nferm {
                for c in 0..nferm {
                    let f = hs.f2(a, b, c);
                    if f == 0.0 {
                        continue;
                    }
                    for k in (m - nf).max(-nf)..=(m + nf).min(nf) {
                        // b != c here, so the two fermions anticommute.
                        let p = lowering_first(fs.mode(b, k), k, fs.mode(c, m - k), m - k, -1.0);
                        acc = acc.add_scaled(&p, Complex64::new(0.0, -0.5 * f));
                    }
                }
            }
            acc
        })
        .collect();
    let width = (2 * nf + 1) as usize;
    mats.chunks(width).map(|c| c.to_vec()).collect()
}

/// Sugawara `L_n` of a single module, `1/(2(level+h)) sum_a sum_m :J^a_m J^a_{n-m}:`.
fn module_virasoro(m: &TruncatedModule, n: i32, level: u32, h_dual: i64) -> Csc {
    let c = m.cutoff as i32;
    let dim = m.dim();
    let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
    for a in 0..m.structure.dim {
        for k in (n - c).max(-c)..=(n + c).min(c) {
            let (p, q) = (k, n - k);
            acc += if p <= q { m.current(a, p) * m.current(a, q) } else { m.current(a, q) * m.current(a, p) };
        }
    }
    let s = 1.0 / (2.0 * (level as f64 + h_dual as f64));
    Csc::from_dense(&(acc * Complex64::new(s, 0.0)))
}

/// Fermionic `L_n` without the zero-point shift: `-1/2 sum_a sum_m m :F^a_m F^a_{n-m}:`.
fn fermion_virasoro(fs: &FermionSpace, n: i32) -> Csc {
    let nf = fs.cutoff as i32;
    let dim = fs.dim();
    let mut terms: Vec<Csc> = Vec::new();
    let mut coefs = Vec::new();
    for a in 0..fs.num_fermions() {
        for m in (n - nf).max(-nf)..=(n + nf).min(nf) {
            if m == 0 {
                continue;
            }
            let k = n - m;
            let prod = lowering_first(fs.mode(a, m), m, fs.mode(a, k), k, -1.0);
            terms.push(prod);
            coefs.push(Complex64::new(-0.5 * m as f64, 0.0));
        }
    }
    let refs: Vec<(&Csc, Complex64)> = terms.iter().zip(coefs).collect();
    Csc::linear_combination(dim, dim, &refs)
}

/// `sum_a sum_m J'^a_m F^a_{n-m}` on the fermion factor.
fn cubic_fermion(fs: &FermionSpace, jprime: &[Vec<Csc>], n: i32) -> Csc {
    let nf = fs.cutoff as i32;
    let dim = fs.dim();
    let mut terms = Vec::new();
    for (a, jp) in jprime.iter().enumerate() {
        for m in (n - nf).max(-nf)..=(n + nf).min(nf) {
            let j = &jp[(m + nf) as usize];
            if j.nnz() == 0 {
                continue;
            }
            // J'^a and F^a commute.
            terms.push(lowering_first(j, m, fs.mode(a, n - m), n - m, 1.0));
        }
    }
    let refs: Vec<(&Csc, Complex64)> = terms.iter().map(|t| (t, ONE)).collect();
    Csc::linear_combination(dim, dim, &refs)
}

/// Builds `G_n`, `L_n` for `|n| <= max_mode`.
pub fn sugawara_modes(hs: &HatSpace, max_mode: u32) -> Result<SugawaraModes> {
    if max_mode > hs.cutoff {
        return Err(Error::Config(format!("mode range {max_mode} exceeds the cutoff {}", hs.cutoff)));
    }
    let fs = &hs.fermions;
    let jprime = jprime_factor(hs);
    let big_m = max_mode as i32;
    let n_mod = hs.cutoff as i32;
    let nf = fs.cutoff as i32;
    let lh = hs.level as f64 + hs.h_dual as f64;
    let norm = Complex64::new(1.0 / lh.sqrt(), 0.0);

    let mut g = Vec::new();
    let mut l = Vec::new();
    for n in -big_m..=big_m {
        let cubic = cubic_fermion(fs, &jprime, n);
        let mut terms: Vec<Term> = Vec::new();
        for a in 0..hs.num_fermions() {
            for m in (n - nf).max(-n_mod)..=(n + nf).min(n_mod) {
                let (f, j) = hs.factor_current(a, m).expect("mode within cutoff");
                let mut ops = [None, None, Some(fs.mode(a, n - m))];
                ops[f] = Some(j);
                terms.push(Term { ops, coef: norm });
            }
        }
        terms.push(Term { ops: [None, None, Some(&cubic)], coef: norm / 3.0 });
        g.push(hs.embed(&terms));

        let li = module_virasoro(&hs.module_i, n, hs.level, hs.h_dual);
        let l0 = module_virasoro(&hs.module_0, n, hs.level, hs.h_dual);
        let lf = fermion_virasoro(fs, n);
        let mut lterms = vec![
            Term { ops: [Some(&li), None, None], coef: ONE },
            Term { ops: [None, Some(&l0), None], coef: ONE },
            Term { ops: [None, None, Some(&lf)], coef: ONE },
        ];
        if n == 0 {
            lterms.push(Term { ops: [None, None, None], coef: Complex64::new(hs.d as f64 / 8.0, 0.0) });
        }
        l.push(hs.embed(&lterms));
    }
    Ok(SugawaraModes { max_mode, g, l, jprime, fermion_cutoff: fs.cutoff })
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationResidual {
    pub relation: &'static str,
    pub m: i32,
    pub n: i32,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperVirasoroReport {
    pub table: Vec<RelationResidual>,
    pub max_ll: f64,
    pub max_lg: f64,
    pub max_gg: f64,
    /// Central charge recovered from the scalar part of `[G_m, G_{-m}]_+ - 2 L_0`, per `m`.
    pub central_fits: Vec<(i32, f64)>,
    pub central_fit_error: f64,
}

impl SuperVirasoroReport {
    pub fn max_residual(&self) -> f64 {
        self.max_ll.max(self.max_lg).max(self.max_gg)
    }
}

/// Residuals of the Ramond super-Virasoro relations for `|m|, |n| <= range`, on input vectors
/// of energy at most `cutoff - |m| - |n|`.
pub fn check_super_virasoro(hs: &HatSpace, modes: &SugawaraModes, range: u32) -> SuperVirasoroReport {
    let r = range as i32;
    let c = q_f64(hs.central_charge());
    let mut jobs = Vec::new();
    for m in -r..=r {
        for n in -r..=r {
            for rel in ["LL", "LG", "GG"] {
                jobs.push((rel, m, n));
            }
        }
    }
    let table: Vec<RelationResidual> = jobs
        .par_iter()
        .filter_map(|&(rel, m, n)| {
            let budget = hs.cutoff as i64 - m.abs() as i64 - n.abs() as i64;
            let cols = hs.dim_up_to(budget);
            if cols == 0 || !modes.has_mode(m) || !modes.has_mode(n) {
                return None;
            }
            let dim = hs.dim();
            let target = |x: &Csc| -> Csc {
                if modes.has_mode(m + n) {
                    x.first_cols(cols)
                } else {
                    Csc::zeros(dim, cols)
                }
            };
            let mut out = match rel {
                "LL" => {
                    let (a, b) = (modes.l(m), modes.l(n));
                    let lhs = a.mul(&b.first_cols(cols)).sub(&b.mul(&a.first_cols(cols)));
                    let rhs = if modes.has_mode(m + n) { target(modes.l(m + n)) } else { Csc::zeros(dim, cols) };
                    lhs.add_scaled(&rhs, Complex64::new(-(m - n) as f64, 0.0))
                }
                "LG" => {
                    let (a, b) = (modes.l(m), modes.g(n));
                    let lhs = a.mul(&b.first_cols(cols)).sub(&b.mul(&a.first_cols(cols)));
                    let rhs = if modes.has_mode(m + n) { target(modes.g(m + n)) } else { Csc::zeros(dim, cols) };
                    lhs.add_scaled(&rhs, Complex64::new(-(m as f64 / 2.0 - n as f64), 0.0))
                }
                _ => {
                    let (a, b) = (modes.g(m), modes.g(n));
                    let lhs = a.mul(&b.first_cols(cols)).add(&b.mul(&a.first_cols(cols)));
                    let rhs = if modes.has_mode(m + n) { target(modes.l(m + n)) } else { Csc::zeros(dim, cols) };
                    lhs.add_scaled(&rhs, Complex64::new(-2.0, 0.0))
                }
            };
            if m + n == 0 {
                let central = match rel {
                    "LL" => c / 12.0 * (m.pow(3) - m) as f64,
                    "LG" => 0.0,
                    _ => c / 3.0 * (m as f64 * m as f64 - 0.25),
                };
                if central != 0.0 {
                    let id = Csc::identity(dim).first_cols(cols);
                    out = out.add_scaled(&id, Complex64::new(-central, 0.0));
                }
            }
            Some(RelationResidual { relation: rel, m, n, residual: out.max_abs() })
        })
        .collect();
    let max_of = |rel: &str| table.iter().filter(|t| t.relation == rel).map(|t| t.residual).fold(0.0, f64::max);

    let mut central_fits = Vec::new();
    for m in 0..=r {
        let cols = hs.dim_up_to(hs.cutoff as i64 - 2 * m as i64);
        if cols == 0 || !modes.has_mode(m) {
            continue;
        }
        let (a, b) = (modes.g(m), modes.g(-m));
        let x = a.mul(&b.first_cols(cols)).add(&b.mul(&a.first_cols(cols)));
        let x = x.add_scaled(&modes.l(0).first_cols(cols), Complex64::new(-2.0, 0.0));
        let mean: f64 = (0..cols).map(|i| x.get(i, i).re).sum::<f64>() / cols as f64;
        central_fits.push((m, 3.0 * mean / (m as f64 * m as f64 - 0.25)));
    }
    let central_fit_error = central_fits.iter().map(|(_, f)| (f - c).abs()).fold(0.0, f64::max);
    SuperVirasoroReport {
        max_ll: max_of("LL"),
        max_lg: max_of("LG"),
        max_gg: max_of("GG"),
        table,
        central_fits,
        central_fit_error,
    }
}

/// `max |L_0 - L0_hat|` between the Sugawara zero mode and the total conformal Hamiltonian.
pub fn l0_consistency(hs: &HatSpace, modes: &SugawaraModes) -> f64 {
    modes.l(0).max_abs_diff(&hs.l0_matrix())
}

/// Largest entry of `X` connecting basis vectors of equal (`odd = true`) or opposite grading.
pub fn grading_violation(hs: &HatSpace, x: &Csc, odd: bool) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..x.ncols {
        for (r, v) in x.col(c) {
            let same = hs.grading[r] == hs.grading[c];
            if same == odd {
                worst = worst.max(v.norm());
            }
        }
    }
    worst
}

/// Largest entry of `X` connecting different energy blocks.
pub fn energy_leak(hs: &HatSpace, x: &Csc) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..x.ncols {
        for (r, v) in x.col(c) {
            if hs.energies[r] != hs.energies[c] {
                worst = worst.max(v.norm());
            }
        }
    }
    worst
}

/// `max_n |G_n^dagger - G_{-n}|` and the same for `L_n`.
pub fn adjoint_residuals(modes: &SugawaraModes) -> (f64, f64) {
    let r = modes.max_mode as i32;
    let mut g = 0.0f64;
    let mut l = 0.0f64;
    for n in -r..=r {
        g = g.max(modes.g(n).adjoint().max_abs_diff(modes.g(-n)));
        l = l.max(modes.l(n).adjoint().max_abs_diff(modes.l(-n)));
    }
    (g, l)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiracBlock {
    pub energy: u32,
    pub dim: usize,
    pub even_dim: usize,
    pub odd_dim: usize,
    /// Exact value of `L0_hat - c/24` on the block, as `p/q`.
    pub expected_d2: String,
    /// Upper bound `sqrt(|R|_1 |R|_inf)` on the spectral norm of `R = D^2 - (L0_hat - c/24)`.
    pub d2_residual: f64,
    /// `dense` (full diagonalization) or `bound` (Weyl perturbation bound only).
    pub method: &'static str,
    pub min_d2: f64,
    pub symmetry_residual: f64,
    pub eigenvalues: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiracReport {
    pub central_charge: String,
    pub gap_bound: String,
    pub gap_bound_value: f64,
    pub blocks: Vec<DiracBlock>,
    pub min_d2: f64,
    pub max_d2_residual: f64,
    pub max_symmetry_residual: f64,
    pub oddness: f64,
    pub hermiticity: f64,
    pub energy_leak: f64,
}

impl DiracReport {
    /// Checks the Dirac identities at tolerance `tol`; the error names the first offending block.
    pub fn verify(&self, tol: f64) -> Result<()> {
        let gap = self.gap_bound_value;
        for b in &self.blocks {
            if b.d2_residual >= tol {
                return Err(Error::Verification(format!(
                    "block {}: |D^2 - (L0 - c/24)| bound {:e} ≥ {tol:e}",
                    b.energy, b.d2_residual
                )));
            }
            if b.min_d2 < gap - tol {
                return Err(Error::Verification(format!(
                    "block {}: min eigenvalue of D^2 {} below the gap bound {}",
                    b.energy, b.min_d2, self.gap_bound
                )));
            }
            if b.symmetry_residual >= tol {
                return Err(Error::Verification(format!(
                    "block {}: spectrum asymmetry {:e}",
                    b.energy, b.symmetry_residual
                )));
            }
        }
        if self.oddness != 0.0 || self.hermiticity >= tol || self.energy_leak != 0.0 {
            return Err(Error::Verification(format!(
                "D not odd, self-adjoint and energy preserving (oddness {:e}, hermiticity {:e}, leak {:e})",
                self.oddness, self.hermiticity, self.energy_leak
            )));
        }
        Ok(())
    }
}

fn q_string(q: Q) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn dirac(hs: &HatSpace, modes: &SugawaraModes) -> DiracReport {
    dirac_with(hs, modes, DEFAULT_DENSE_LIMIT)
}

/// Blockwise spectral report of `D = G_0`.
pub fn dirac_with(hs: &HatSpace, modes: &SugawaraModes, dense_limit: usize) -> DiracReport {
    let dmat = modes.dirac();
    let c = hs.central_charge();
    let d2 = dmat.mul(dmat);
    let blocks: Vec<DiracBlock> = hs
        .blocks()
        .into_par_iter()
        .map(|(energy, range)| {
            let dim = range.len();
            let even_dim = range.clone().filter(|&i| hs.grading[i] == 1).count();
            let expected_q = hs.l0_exact(range.start) - c / Q::from_integer(24);
            let expected = q_f64(expected_q);
            // Residual R restricted to the block (D is block diagonal).
            let mut one = vec![0.0f64; dim];
            let mut inf = vec![0.0f64; dim];
            for (j, col) in range.clone().enumerate() {
                for (r, v) in d2.col(col) {
                    let mut v = v;
                    if r == col {
                        v -= expected;
                    }
                    if range.contains(&r) {
                        one[j] += v.norm();
                        inf[r - range.start] += v.norm();
                    }
                }
                if d2.get(col, col) == Complex64::new(0.0, 0.0) {
                    one[j] += expected.abs();
                    inf[j] += expected.abs();
                }
            }
            let n1 = one.iter().cloned().fold(0.0, f64::max);
            let ni = inf.iter().cloned().fold(0.0, f64::max);
            let d2_residual = (n1 * ni).sqrt();
            if dim <= dense_limit {
                let block = dmat.dense_block(range.clone(), range.clone());
                let herm = (&block + block.adjoint()) * Complex64::new(0.5, 0.0);
                let eig = herm.symmetric_eigenvalues();
                let mut ev: Vec<f64> = eig.iter().cloned().collect();
                ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = ev.len();
                let symmetry_residual = (0..n).map(|k| (ev[k] + ev[n - 1 - k]).abs()).fold(0.0, f64::max);
                let min_d2 = ev.iter().map(|x| x * x).fold(f64::INFINITY, f64::min);
                DiracBlock {
                    energy,
                    dim,
                    even_dim,
                    odd_dim: dim - even_dim,
                    expected_d2: q_string(expected_q),
                    d2_residual,
                    method: "dense",
                    min_d2,
                    symmetry_residual,
                    eigenvalues: Some(ev),
                }
            } else {
                // D odd with D^2 invertible forces equal even and odd dimensions and a
                // spectrum {±singular values of the odd-even block}, symmetric by construction.
                let symmetry_residual = if even_dim == dim - even_dim { 0.0 } else { f64::INFINITY };
                DiracBlock {
                    energy,
                    dim,
                    even_dim,
                    odd_dim: dim - even_dim,
                    expected_d2: q_string(expected_q),
                    d2_residual,
                    method: "bound",
                    min_d2: expected - d2_residual,
                    symmetry_residual,
                    eigenvalues: None,
                }
            }
        })
        .collect();
    DiracReport {
        central_charge: q_string(c),
        gap_bound: q_string(hs.gap_bound()),
        gap_bound_value: q_f64(hs.gap_bound()),
        min_d2: blocks.iter().map(|b| b.min_d2).fold(f64::INFINITY, f64::min),
        max_d2_residual: blocks.iter().map(|b| b.d2_residual).fold(0.0, f64::max),
        max_symmetry_residual: blocks.iter().map(|b| b.symmetry_residual).fold(0.0, f64::max),
        oddness: grading_violation(hs, dmat, true),
        hermiticity: dmat.adjoint().max_abs_diff(dmat),
        energy_leak: energy_leak(hs, dmat),
        blocks,
    }
}

/// Residuals of `[J'^a_m, J'^b_n] = i f_abc J'^c_{m+n} + m h delta_ab delta_{m+n,0}` and
/// `[J'^a_m, F^b_n] = i f_abc F^c_{m+n}` on the fermion factor, `|m|, |n| <= range`.
pub fn check_jprime_relations(hs: &HatSpace, modes: &SugawaraModes, range: u32) -> (f64, f64) {
    let fs = &hs.fermions;
    let nf = fs.cutoff as i32;
    let r = (range as i32).min(nf);
    let nferm = hs.num_fermions();
    let i = Complex64::i();
    let mut jobs = Vec::new();
    for a in 0..nferm {
        for b in 0..nferm {
            for m in -r..=r {
                for n in -r..=r {
                    jobs.push((a, b, m, n));
                }
            }
        }
    }
    jobs.par_iter()
        .map(|&(a, b, m, n)| {
            let cols = fs.dim_up_to(nf as i64 - m.abs() as i64 - n.abs() as i64);
            if cols == 0 {
                return (0.0, 0.0);
            }
            let ja = modes.jprime(a, m).unwrap();
            let jb = modes.jprime(b, n).unwrap();
            let mut jj = ja.mul(&jb.first_cols(cols)).sub(&jb.mul(&ja.first_cols(cols)));
            let fb = fs.mode(b, n);
            let mut jf = ja.mul(&fb.first_cols(cols)).sub(&fb.mul(&ja.first_cols(cols)));
            for c in 0..nferm {
                let f = hs.f2(a, b, c);
                if f == 0.0 || (m + n).abs() > nf {
                    continue;
                }
                jj = jj.add_scaled(&modes.jprime(c, m + n).unwrap().first_cols(cols), -i * f);
                jf = jf.add_scaled(&fs.mode(c, m + n).first_cols(cols), -i * f);
            }
            if a == b && m + n == 0 {
                let id = Csc::identity(fs.dim()).first_cols(cols);
                jj = jj.add_scaled(&id, Complex64::new(-(m as f64) * hs.h_dual as f64, 0.0));
            }
            (jj.max_abs(), jf.max_abs())
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a1() -> CartanType {
        "A1".parse().unwrap()
    }

    #[test]
    fn lowest_spaces_and_central_charges() {
        let hs = assemble_hat_space(0, 1, 0, a1()).unwrap();
        assert_eq!(hs.dim(), 8);
        assert!((0..8).all(|i| hs.l0_exact(i) == Q::new(3, 8)));
        assert_eq!(hs.central_charge(), Q::from_integer(5));
        assert_eq!(hs.gap_bound(), Q::new(1, 6));
        let trace: i32 = hs.grading.iter().map(|&g| g as i32).sum();
        assert_eq!(trace, 0);
        let hs2 = assemble_hat_space(0, 2, 0, a1()).unwrap();
        assert_eq!(hs2.central_charge(), Q::from_integer(6));
    }

    #[test]
    fn lowest_block_dirac_square() {
        let hs = assemble_hat_space(0, 1, 1, a1()).unwrap();
        let modes = sugawara_modes(&hs, 1).unwrap();
        let rep = dirac(&hs, &modes);
        let b0 = &rep.blocks[0];
        assert_eq!(b0.expected_d2, "1/6");
        assert!((b0.min_d2 - 1.0 / 6.0).abs() < 1e-12);
        assert!(rep.verify(1e-9).is_ok());
        let d = modes.dirac();
        let g = hs.grading_matrix();
        let d2 = d.mul(d);
        assert_eq!(d2.mul(&g).max_abs_diff(&g.mul(&d2)), 0.0);
    }

    #[test]
    fn zero_mode_of_sugawara_is_the_hamiltonian() {
        for mu in 0..=1 {
            let hs = assemble_hat_space(mu, 1, 2, a1()).unwrap();
            let modes = sugawara_modes(&hs, 2).unwrap();
            assert!(l0_consistency(&hs, &modes) < 1e-9);
            assert_eq!(grading_violation(&hs, modes.g(0), true), 0.0);
            assert_eq!(grading_violation(&hs, modes.l(1), false), 0.0);
            let (g, l) = adjoint_residuals(&modes);
            assert!(g < 1e-9 && l < 1e-9);
        }
    }

    #[test]
    fn bilinear_currents() {
        let hs = assemble_hat_space(0, 1, 1, a1()).unwrap();
        let modes = sugawara_modes(&hs, 1).unwrap();
        let (jj, jf) = check_jprime_relations(&hs, &modes, 1);
        assert!(jj < 1e-12 && jf < 1e-12, "{jj} {jf}");
        // level h_dual on the lowest fermion block, per direction
        let fs = &hs.fermions;
        let zdim = 1 << hs.d;
        for a in 0..hs.num_fermions() {
            let x = modes.jprime(a, 1).unwrap();
            let y = modes.jprime(a, -1).unwrap();
            let comm = x.mul(y).sub(&y.mul(x));
            let avg: f64 = (0..zdim).map(|i| comm.get(i, i).re).sum::<f64>() / zdim as f64;
            assert!((avg - 2.0).abs() < 1e-12);
            // bilinears are even
            let g = Csc::diagonal(&fs.grading.iter().map(|&s| Complex64::new(s as f64, 0.0)).collect::<Vec<_>>());
            assert_eq!(g.mul(x).mul(&g).max_abs_diff(x), 0.0);
        }
        assert!(matches!(modes.jprime(0, 99), Err(Error::InsufficientHeadroom { .. })));
    }

    #[test]
    fn headroom_does_not_change_the_modes() {
        let opts = |h| HatOptions { headroom: h, ..HatOptions::default() };
        let a = assemble_hat_space_with(1, 1, 2, a1(), opts(0)).unwrap();
        let b = assemble_hat_space_with(1, 1, 2, a1(), opts(2)).unwrap();
        assert_eq!(a.basis, b.basis);
        let ma = sugawara_modes(&a, 2).unwrap();
        let mb = sugawara_modes(&b, 2).unwrap();
        for n in -2..=2 {
            assert!(ma.g(n).max_abs_diff(mb.g(n)) < 1e-13);
            assert!(ma.l(n).max_abs_diff(mb.l(n)) < 1e-13);
        }
    }

    #[test]
    fn small_super_virasoro() {
        let hs = assemble_hat_space(0, 1, 2, a1()).unwrap();
        let modes = sugawara_modes(&hs, 2).unwrap();
        let rep = check_super_virasoro(&hs, &modes, 1);
        assert!(rep.max_residual() < 1e-9, "{:?}", rep.table);
        assert!(rep.central_fit_error < 1e-9);
    }

    #[test]
    fn rejects_mode_range_beyond_cutoff() {
        let hs = assemble_hat_space(0, 1, 1, a1()).unwrap();
        assert!(sugawara_modes(&hs, 2).is_err());
    }
}
