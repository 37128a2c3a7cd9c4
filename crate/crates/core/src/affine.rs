//! Energy-truncated integrable highest-weight modules of affine `sl2`.
//!
//! The module is realized as the quotient of the Verma module by the radical of its
//! contravariant form. Monomials in the lowering operators span each (energy, weight)
//! block of the Verma module; their Gram matrices are computed exactly by commuting
//! raising operators to the right, and a pivoted `L D L^T` factorization selects a
//! basis of the quotient and orthonormalizes it.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{bq, pivoted_ldl, q_to_f64, solve_unit_lower, transpose, BigQ};
use crate::lie::{orthonormal_structure_constants, root_system, CartanType, Series, StructureConstants, Q};

/// Default cap on the number of Verma monomials enumerated for one module.
pub const DEFAULT_MAX_STATES: usize = 400_000;

/// Chevalley generators of `sl2`, ordered `e < h < f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gen {
    E,
    H,
    F,
}

impl Gen {
    pub const ALL: [Gen; 3] = [Gen::E, Gen::H, Gen::F];

    pub fn weight(self) -> i32 {
        match self {
            Gen::E => 2,
            Gen::H => 0,
            Gen::F => -2,
        }
    }

    pub fn id(self) -> usize {
        self as usize
    }
}

/// A loop generator `x_n`; ordering is by mode, then generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode {
    pub mode: i32,
    pub gen: Gen,
}

impl Mode {
    pub fn new(gen: Gen, mode: i32) -> Self {
        Mode { mode, gen }
    }

    /// Lowering operators are the negative modes together with `f_0`.
    pub fn is_lowering(self) -> bool {
        self.mode < 0 || (self.mode == 0 && self.gen == Gen::F)
    }

    /// Adjoint for the contravariant form: `e_n^+ = f_{-n}`, `h_n^+ = h_{-n}`.
    pub fn adjoint(self) -> Self {
        let gen = match self.gen {
            Gen::E => Gen::F,
            Gen::H => Gen::H,
            Gen::F => Gen::E,
        };
        Mode { mode: -self.mode, gen }
    }
}

type Mono = Vec<Mode>;
type Comb = Vec<(Mono, i128)>;

/// Normal-ordered PBW monomial applied to the highest-weight vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PbwMonomial {
    pub factors: Vec<Mode>,
    pub energy: u32,
    pub sl2_weight: i32,
}

impl PbwMonomial {
    fn new(factors: Mono, mu: i32) -> Self {
        let energy = factors.iter().map(|m| (-m.mode) as u32).sum();
        let sl2_weight = mu + factors.iter().map(|m| m.gen.weight()).sum::<i32>();
        PbwMonomial { factors, energy, sl2_weight }
    }
}

fn overflow() -> Error {
    Error::InternalConsistency("integer overflow in contravariant form".into())
}

/// `[y, x] = sum c z + central`.
fn commutator(y: Mode, x: Mode, level: i128) -> (Vec<(Mode, i128)>, i128) {
    let s = y.mode + x.mode;
    let m = y.mode as i128;
    let delta = i128::from(s == 0);
    use Gen::*;
    match (y.gen, x.gen) {
        (H, E) => (vec![(Mode::new(E, s), 2)], 0),
        (H, F) => (vec![(Mode::new(F, s), -2)], 0),
        (E, H) => (vec![(Mode::new(E, s), -2)], 0),
        (F, H) => (vec![(Mode::new(F, s), 2)], 0),
        (E, F) => (vec![(Mode::new(H, s), 1)], m * level * delta),
        (F, E) => (vec![(Mode::new(H, s), -1)], m * level * delta),
        (H, H) => (Vec::new(), 2 * m * level * delta),
        _ => (Vec::new(), 0),
    }
}

struct VermaBlock {
    monomials: Vec<Mono>,
    index: HashMap<Mono, usize>,
    gram: Vec<Vec<i128>>,
}

/// Verma module `M(mu, level)` of affine `sl2` with memoized straightening.
struct Verma {
    mu: i32,
    level: i128,
    memo: HashMap<(Mode, Mono), Rc<Comb>>,
    blocks: HashMap<(u32, i32), Rc<VermaBlock>>,
    parts: HashMap<u32, Rc<Vec<Mono>>>,
    states: usize,
    max_states: usize,
}

impl Verma {
    fn new(mu: i32, level: u32, max_states: usize) -> Self {
        Verma {
            mu,
            level: level as i128,
            memo: HashMap::new(),
            blocks: HashMap::new(),
            parts: HashMap::new(),
            states: 0,
            max_states,
        }
    }

    fn weight_of(&self, m: &[Mode]) -> i32 {
        self.mu + m.iter().map(|x| x.gen.weight()).sum::<i32>()
    }

    /// `y . m` expanded in normal-ordered monomials.
    fn apply(&mut self, y: Mode, m: &[Mode]) -> Result<Rc<Comb>> {
        let key = (y, m.to_vec());
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let out: Comb = if y.mode == 0 && y.gen == Gen::H {
            let w = self.weight_of(m) as i128;
            if w == 0 {
                Vec::new()
            } else {
                vec![(m.to_vec(), w)]
            }
        } else if m.is_empty() {
            if y.is_lowering() {
                vec![(vec![y], 1)]
            } else {
                Vec::new()
            }
        } else if y.is_lowering() && y <= m[0] {
            let mut v = Vec::with_capacity(m.len() + 1);
            v.push(y);
            v.extend_from_slice(m);
            vec![(v, 1)]
        } else {
            let x1 = m[0];
            let rest = &m[1..];
            let mut acc: BTreeMap<Mono, i128> = BTreeMap::new();
            let add = |acc: &mut BTreeMap<Mono, i128>, k: Mono, c: i128| -> Result<()> {
                let e = acc.entry(k).or_insert(0);
                *e = e.checked_add(c).ok_or_else(overflow)?;
                Ok(())
            };
            let inner = self.apply(y, rest)?;
            for (c, k) in inner.iter() {
                let outer = self.apply(x1, c)?;
                for (c2, k2) in outer.iter() {
                    add(&mut acc, c2.clone(), k.checked_mul(*k2).ok_or_else(overflow)?)?;
                }
            }
            let (terms, central) = commutator(y, x1, self.level);
            for (z, kz) in terms {
                let r = self.apply(z, rest)?;
                for (c, k) in r.iter() {
                    add(&mut acc, c.clone(), kz.checked_mul(*k).ok_or_else(overflow)?)?;
                }
            }
            if central != 0 {
                add(&mut acc, rest.to_vec(), central)?;
            }
            acc.into_iter().filter(|(_, c)| *c != 0).collect()
        };
        let rc = Rc::new(out);
        self.memo.insert(key, rc.clone());
        Ok(rc)
    }

    /// Normal-ordered monomials of positive-depth generators with total depth `energy`.
    fn parts(&mut self, energy: u32) -> Rc<Vec<Mono>> {
        if let Some(p) = self.parts.get(&energy) {
            return p.clone();
        }
        fn rec(remaining: u32, min: Mode, cur: &mut Mono, out: &mut Vec<Mono>) {
            if remaining == 0 {
                out.push(cur.clone());
                return;
            }
            // next factor must be >= min in (mode, gen) order, with depth <= remaining
            for depth in (1..=remaining).rev() {
                for gen in Gen::ALL {
                    let x = Mode::new(gen, -(depth as i32));
                    if x < min {
                        continue;
                    }
                    cur.push(x);
                    rec(remaining - depth, x, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(energy, Mode::new(Gen::E, i32::MIN), &mut Vec::new(), &mut out);
        let rc = Rc::new(out);
        self.parts.insert(energy, rc.clone());
        rc
    }

    /// Verma monomials of the given energy and weight, sorted.
    fn block_monomials(&mut self, energy: u32, weight: i32) -> Vec<Mono> {
        let parts = self.parts(energy);
        let mut out = Vec::new();
        for p in parts.iter() {
            let w0 = self.weight_of(p);
            let diff = w0 - weight;
            if diff >= 0 && diff % 2 == 0 {
                let mut m = p.clone();
                m.extend(std::iter::repeat_n(Mode::new(Gen::F, 0), (diff / 2) as usize));
                out.push(m);
            }
        }
        out.sort();
        out
    }

    fn block(&mut self, energy: u32, weight: i32) -> Result<Rc<VermaBlock>> {
        if let Some(b) = self.blocks.get(&(energy, weight)) {
            return Ok(b.clone());
        }
        let monomials = self.block_monomials(energy, weight);
        self.states += monomials.len();
        if self.states > self.max_states {
            return Err(Error::DimensionGuard {
                what: "Verma monomials".into(),
                needed: self.states,
                limit: self.max_states,
            });
        }
        let index: HashMap<Mono, usize> = monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let n = monomials.len();
        let mut gram = vec![vec![0i128; n]; n];
        for i in 0..n {
            let mi = &monomials[i];
            if mi.is_empty() {
                gram[i][i] = 1;
                continue;
            }
            let x1 = mi[0];
            let lower = self.block(energy - (-x1.mode) as u32, weight - x1.gen.weight())?;
            let ri = *lower
                .index
                .get(&mi[1..])
                .ok_or_else(|| Error::InternalConsistency("monomial tail outside its block".into()))?;
            for j in i..n {
                let exp = self.apply(x1.adjoint(), &monomials[j])?;
                let mut v: i128 = 0;
                for (c, k) in exp.iter() {
                    let cj = *lower
                        .index
                        .get(c)
                        .ok_or_else(|| Error::InternalConsistency("raising image outside its block".into()))?;
                    v = v
                        .checked_add(k.checked_mul(lower.gram[ri][cj]).ok_or_else(overflow)?)
                        .ok_or_else(overflow)?;
                }
                gram[i][j] = v;
                gram[j][i] = v;
            }
        }
        let b = Rc::new(VermaBlock { monomials, index, gram });
        self.blocks.insert((energy, weight), b.clone());
        Ok(b)
    }
}

/// Lowest sl2 weight kept when enumerating blocks of a module truncated at `cutoff`.
pub fn weight_floor(level: u32, cutoff: u32) -> i32 {
    -((level + 2 * cutoff) as i32)
}

fn check_hw(mu: u32, level: u32) -> Result<()> {
    if level == 0 {
        return Err(Error::Config("level must be ≥ 1".into()));
    }
    if mu > level {
        return Err(Error::Config(format!("highest weight {mu} exceeds level {level}")));
    }
    Ok(())
}

/// Verma monomials keyed by `(energy, sl2 weight)`.
pub type VermaBlocks = Vec<((u32, i32), Vec<PbwMonomial>)>;

/// Verma monomials of energy at most `cutoff` and weight at least the floor, grouped by
/// `(energy, sl2 weight)`; blocks sorted by energy, then by decreasing weight.
pub fn verma_basis(mu: u32, level: u32, cutoff: u32) -> Result<VermaBlocks> {
    check_hw(mu, level)?;
    let mut v = Verma::new(mu as i32, level, usize::MAX);
    let floor = weight_floor(level, cutoff);
    let mut out = Vec::new();
    for e in 0..=cutoff {
        let mut w = mu as i32 + 2 * e as i32;
        while w >= floor {
            let ms = v.block_monomials(e, w);
            if !ms.is_empty() {
                out.push(((e, w), ms.into_iter().map(|m| PbwMonomial::new(m, mu as i32)).collect()));
            }
            w -= 2;
        }
    }
    Ok(out)
}

/// Exact Gram matrix of the contravariant form on one Verma block.
pub fn shapovalov_gram(mu: u32, level: u32, energy: u32, weight: i32) -> Result<Vec<Vec<BigQ>>> {
    check_hw(mu, level)?;
    let mut v = Verma::new(mu as i32, level, DEFAULT_MAX_STATES);
    let b = v.block(energy, weight)?;
    Ok(b.gram.iter().map(|r| r.iter().map(|&x| bq(x)).collect()).collect())
}

/// One `(energy, weight)` block of the irreducible quotient.
#[derive(Debug, Clone)]
pub struct ModuleBlock {
    pub energy: u32,
    pub sl2_weight: i32,
    /// Position of the first basis vector of the block in the module basis.
    pub offset: usize,
    pub verma_dim: usize,
    /// Monomials whose images form a basis of the quotient block.
    pub pivot_monomials: Vec<PbwMonomial>,
    /// Positive pivots of the contravariant form.
    pub pivot_values: Vec<BigQ>,
    /// Unit lower-triangular factor on the pivots.
    pub pivot_factor: Vec<Vec<BigQ>>,
}

impl ModuleBlock {
    pub fn dim(&self) -> usize {
        self.pivot_monomials.len()
    }
}

/// Number of loop modes stored per generator for cutoff `n`: modes `-n..=n`.
fn mode_slot(n: i32, cutoff: u32) -> usize {
    (n + cutoff as i32) as usize
}

/// Truncated irreducible highest-weight module with orthonormal basis and currents.
#[derive(Debug, Clone)]
pub struct TruncatedModule {
    pub algebra: CartanType,
    pub level: u32,
    pub highest_weight: u32,
    pub cutoff: u32,
    pub blocks: Vec<ModuleBlock>,
    /// Relative energy of every basis vector (the diagonal of `L_0 - h`).
    pub energies: Vec<u32>,
    pub sl2_weights: Vec<i32>,
    /// Real matrices of the Chevalley modes, indexed `[gen][n + cutoff]`.
    pub chevalley: Vec<Vec<DMatrix<f64>>>,
    /// Orthonormal-basis currents `J^a_n`, indexed `[a][n + cutoff]`.
    pub currents: Vec<Vec<DMatrix<Complex64>>>,
    pub structure: StructureConstants,
    /// Conformal weight `h = mu (mu + 2) / (4 (level + 2))`.
    pub conformal_weight: Q,
    /// Index of the highest-weight vector.
    pub lowest_vector: usize,
}

impl TruncatedModule {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn current(&self, a: usize, n: i32) -> &DMatrix<Complex64> {
        &self.currents[a][mode_slot(n, self.cutoff)]
    }

    pub fn chevalley_mode(&self, gen: Gen, n: i32) -> &DMatrix<f64> {
        &self.chevalley[gen.id()][mode_slot(n, self.cutoff)]
    }

    /// Number of basis vectors with relative energy at most `e`.
    pub fn dim_up_to(&self, e: i64) -> usize {
        if e < 0 {
            return 0;
        }
        self.energies.iter().take_while(|&&x| (x as i64) <= e).count()
    }
}

/// Options controlling module construction.
#[derive(Debug, Clone, Copy)]
pub struct ModuleOptions {
    pub max_states: usize,
}

impl Default for ModuleOptions {
    fn default() -> Self {
        ModuleOptions { max_states: DEFAULT_MAX_STATES }
    }
}

pub fn irreducible_truncation(mu: u32, level: u32, cutoff: u32) -> Result<TruncatedModule> {
    irreducible_truncation_with(CartanType { series: Series::A, rank: 1 }, mu, level, cutoff, ModuleOptions::default())
}

/// Builds the quotient module. Only `A1` is supported.
pub fn irreducible_truncation_with(
    algebra: CartanType,
    mu: u32,
    level: u32,
    cutoff: u32,
    opts: ModuleOptions,
) -> Result<TruncatedModule> {
    if algebra != (CartanType { series: Series::A, rank: 1 }) {
        return Err(Error::UnsupportedAlgebra(algebra.to_string()));
    }
    check_hw(mu, level)?;
    let rs = root_system(algebra)?;
    let structure = orthonormal_structure_constants(&rs)?;
    let mut verma = Verma::new(mu as i32, level, opts.max_states);
    let floor = weight_floor(level, cutoff);

    let mut blocks: Vec<ModuleBlock> = Vec::new();
    let mut offset = 0;
    let mut energies = Vec::new();
    let mut sl2_weights = Vec::new();
    for e in 0..=cutoff {
        let top = mu as i32 + 2 * e as i32;
        let mut w = top;
        let mut dims: BTreeMap<i32, usize> = BTreeMap::new();
        while w >= floor {
            let vb = verma.block(e, w)?;
            if !vb.monomials.is_empty() {
                let gram: Vec<Vec<BigQ>> = vb.gram.iter().map(|r| r.iter().map(|&x| bq(x)).collect()).collect();
                let ldl = pivoted_ldl(&gram).map_err(|err| match err {
                    Error::UnitarityViolation(s) => {
                        Error::UnitarityViolation(format!("block (energy {e}, weight {w}): {s}"))
                    }
                    other => other,
                })?;
                if ldl.rank() > 0 {
                    let mb = ModuleBlock {
                        energy: e,
                        sl2_weight: w,
                        offset,
                        verma_dim: vb.monomials.len(),
                        pivot_monomials: ldl
                            .pivots
                            .iter()
                            .map(|&p| PbwMonomial::new(vb.monomials[p].clone(), mu as i32))
                            .collect(),
                        pivot_values: ldl.d.clone(),
                        pivot_factor: ldl.l.clone(),
                    };
                    offset += mb.dim();
                    energies.extend(std::iter::repeat_n(e, mb.dim()));
                    sl2_weights.extend(std::iter::repeat_n(w, mb.dim()));
                    dims.insert(w, mb.dim());
                    blocks.push(mb);
                }
            }
            w -= 2;
        }
        // The quotient is integrable, so its weight diagram is symmetric under w -> -w.
        // Anything the enumeration floor cut off must therefore be absent.
        for (&w, &d) in &dims {
            let mirror = dims.get(&-w).copied().unwrap_or(0);
            if -w <= top && -w >= floor && mirror != d {
                return Err(Error::InternalConsistency(format!(
                    "weight diagram at energy {e} is not symmetric: dim({w}) = {d}, dim({}) = {mirror}",
                    -w
                )));
            }
            if -w > top && d != 0 {
                return Err(Error::InternalConsistency(format!(
                    "weight {w} at energy {e} survives below the enumeration floor's mirror"
                )));
            }
        }
    }

    let dim = offset;
    let index: HashMap<(u32, i32), usize> = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| ((b.energy, b.sl2_weight), i))
        .collect();
    let c = cutoff as i32;
    let mut chevalley: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(3);
    for gen in Gen::ALL {
        let mut per_mode = Vec::with_capacity(2 * cutoff as usize + 1);
        for n in -c..=c {
            let x = Mode::new(gen, n);
            let mut mat = DMatrix::<f64>::zeros(dim, dim);
            for src in &blocks {
                let te = src.energy as i64 - n as i64;
                if te < 0 || te > cutoff as i64 {
                    continue;
                }
                let tw = src.sl2_weight + gen.weight();
                let Some(&ti) = index.get(&(te as u32, tw)) else { continue };
                let tgt = &blocks[ti];
                let tv = verma.block(te as u32, tw)?;
                // M[i][j] = <p'_i, x p_j>
                let mut m = vec![vec![BigQ::zero(); src.dim()]; tgt.dim()];
                let rows: Vec<usize> = tgt
                    .pivot_monomials
                    .iter()
                    .map(|p| tv.index[&p.factors])
                    .collect();
                for (j, pj) in src.pivot_monomials.iter().enumerate() {
                    let img = verma.apply(x, &pj.factors)?;
                    for (cm, k) in img.iter() {
                        let cj = *tv
                            .index
                            .get(cm)
                            .ok_or_else(|| Error::InternalConsistency("current image outside target block".into()))?;
                        for (i, &ri) in rows.iter().enumerate() {
                            let g = tv.gram[ri][cj];
                            if g != 0 {
                                m[i][j] += bq(k.checked_mul(g).ok_or_else(overflow)?);
                            }
                        }
                    }
                }
                // R = L'^{-1} M L^{-T}
                let left = solve_unit_lower(&tgt.pivot_factor, &m);
                let r = transpose(&solve_unit_lower(&src.pivot_factor, &transpose(&left)));
                for (q, row) in r.iter().enumerate() {
                    for (k, val) in row.iter().enumerate() {
                        if val.is_zero() {
                            continue;
                        }
                        let scale = q_to_f64(&(&tgt.pivot_values[q] * &src.pivot_values[k])).sqrt();
                        mat[(tgt.offset + q, src.offset + k)] = q_to_f64(val) / scale;
                    }
                }
            }
            per_mode.push(mat);
        }
        chevalley.push(per_mode);
    }

    // Chevalley basis order in the structure data is (h, e, f).
    let gen_of_chevalley = [Gen::H, Gen::E, Gen::F];
    let currents = (0..structure.dim)
        .map(|a| {
            (-c..=c)
                .map(|n| {
                    let mut j = DMatrix::<Complex64>::zeros(dim, dim);
                    for (x, coeff) in structure.hermitian_generators[a].iter().enumerate() {
                        if coeff.norm() == 0.0 {
                            continue;
                        }
                        let cm = &chevalley[gen_of_chevalley[x].id()][mode_slot(n, cutoff)];
                        j.zip_apply(cm, |t, s| *t += coeff * s);
                    }
                    j
                })
                .collect()
        })
        .collect();

    let conformal_weight = rs.weight_inner(&[mu as i64], &[mu as i64 + 2]) / Q::from_integer(2 * (level as i64 + rs.dual_coxeter));
    Ok(TruncatedModule {
        algebra,
        level,
        highest_weight: mu,
        cutoff,
        blocks,
        energies,
        sl2_weights,
        chevalley,
        currents,
        structure,
        conformal_weight,
        lowest_vector: 0,
    })
}

/// Dimension of each energy level `0..=cutoff`.
pub fn graded_character(m: &TruncatedModule) -> Vec<usize> {
    let mut dims = vec![0; m.cutoff as usize + 1];
    for &e in &m.energies {
        dims[e as usize] += 1;
    }
    dims
}

/// `max |[J^a_m, J^b_n] - i f_abc J^c_{m+n} - m level delta_ab delta_{m+n,0}|` over
/// `|m| + |n| <= cutoff`, on input vectors of energy at most `cutoff - |m| - |n|`.
pub fn check_affine_relations(m: &TruncatedModule) -> f64 {
    let d = m.structure.dim;
    let c = m.cutoff as i32;
    let i = Complex64::i();
    let mut worst = 0.0f64;
    for mm in -c..=c {
        for nn in -c..=c {
            let budget = c - mm.abs() - nn.abs();
            if budget < 0 {
                continue;
            }
            let cols = m.dim_up_to(budget as i64);
            if cols == 0 {
                continue;
            }
            for a in 0..d {
                for b in 0..d {
                    let ja = m.current(a, mm);
                    let jb = m.current(b, nn);
                    let mut lhs = ja * jb.columns(0, cols) - jb * ja.columns(0, cols);
                    if (mm + nn).abs() <= c {
                        for cc in 0..d {
                            let f = m.structure.get(a, b, cc);
                            if f != 0.0 {
                                lhs -= m.current(cc, mm + nn).columns(0, cols) * (i * f);
                            }
                        }
                    }
                    if a == b && mm + nn == 0 {
                        let central = Complex64::from(mm as f64 * m.level as f64);
                        for k in 0..cols {
                            lhs[(k, k)] -= central;
                        }
                    }
                    worst = worst.max(lhs.iter().map(|z| z.norm()).fold(0.0, f64::max));
                }
            }
        }
    }
    worst
}

/// `max |J^a_n - (J^a_{-n})^dagger|`.
pub fn hermiticity_residual(m: &TruncatedModule) -> f64 {
    let c = m.cutoff as i32;
    let mut worst = 0.0f64;
    for a in 0..m.structure.dim {
        for n in -c..=c {
            let diff = m.current(a, n) - m.current(a, -n).adjoint();
            worst = worst.max(diff.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    worst
}

/// Checks that every current moves energy by exactly `-n`.
pub fn energy_shift_violation(m: &TruncatedModule) -> usize {
    let c = m.cutoff as i32;
    let mut bad = 0;
    for a in 0..m.structure.dim {
        for n in -c..=c {
            let j = m.current(a, n);
            for r in 0..m.dim() {
                for s in 0..m.dim() {
                    if j[(r, s)].norm() != 0.0 && m.energies[r] as i64 != m.energies[s] as i64 - n as i64 {
                        bad += 1;
                    }
                }
            }
        }
    }
    bad
}
