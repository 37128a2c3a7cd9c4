//! Lowest-energy sector projections, their Fredholm index against the Dirac operator, and
//! a truncated evaluation of the JLO heat-kernel pairing.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fermion::ramond_vacuum_index;
use crate::sparse::Csc;
use crate::sugawara::HatSpace;

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_THRESHOLD: f64 = 1e-7;

/// Image of the lowest-energy projection of sector `j` in the representation built on sector `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SectorProjection {
    pub i: u32,
    pub j: u32,
    /// Basis vector spanning the (rank one) image; `None` for the zero projection.
    pub vector: Option<usize>,
}

impl SectorProjection {
    pub fn rank(&self) -> usize {
        self.vector.is_some() as usize
    }

    pub fn matrix(&self, dim: usize) -> Csc {
        match self.vector {
            Some(v) => Csc::from_triplets(dim, dim, &[(v, v, Complex64::new(1.0, 0.0))]),
            None => Csc::zeros(dim, dim),
        }
    }
}

/// `p_j` represented on the hat space of sector `i = hs.highest_weight`; `vacuum_choice`
/// selects the even lowest fermion vector used for the Ramond projection.
pub fn hat_representation(hs: &HatSpace, j: u32, vacuum_choice: usize) -> Result<SectorProjection> {
    if j > hs.level {
        return Err(Error::Config(format!("sector {j} exceeds the level {}", hs.level)));
    }
    let i = hs.highest_weight;
    if i != j {
        return Ok(SectorProjection { i, j, vector: None });
    }
    let z = ramond_vacuum_index(&hs.fermions, vacuum_choice)?;
    let t = (hs.module_i.lowest_vector as u32, hs.module_0.lowest_vector as u32, z as u32);
    let v = hs
        .index_of(t)
        .ok_or_else(|| Error::InternalConsistency("lowest vector missing from the hat basis".into()))?;
    Ok(SectorProjection { i, j, vector: Some(v) })
}

/// Numerical rank via singular values, relative threshold [`RANK_THRESHOLD`].
pub fn numerical_rank(m: &DMatrix<Complex64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_THRESHOLD * top).count()
}

/// Index of `p D p` from the even to the odd part of the range of `p`:
/// `dim ker - dim coker`.
pub fn fredholm_index(hs: &HatSpace, dirac: &Csc, p: &SectorProjection) -> i64 {
    let support: Vec<usize> = p.vector.into_iter().collect();
    let even: Vec<usize> = support.iter().cloned().filter(|&v| hs.grading[v] == 1).collect();
    let odd: Vec<usize> = support.iter().cloned().filter(|&v| hs.grading[v] == -1).collect();
    let b = DMatrix::from_fn(odd.len(), even.len(), |r, c| dirac.get(odd[r], even[c]));
    let rank = numerical_rank(&b) as i64;
    (even.len() as i64 - rank) - (odd.len() as i64 - rank)
}

/// `e^{-x}[x_0, ..., x_n]`, the divided difference of `x -> e^{-x}`, including confluent
/// points. Computed as the corner entry of `exp(-J)` for the bidiagonal `J` with diagonal `x`.
pub fn exp_divided_difference(xs: &[f64]) -> f64 {
    let n = xs.len();
    assert!(n > 0);
    let shift = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let j = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            -(xs[r] - shift)
        } else if c == r + 1 {
            -1.0
        } else {
            0.0
        }
    });
    // exp(-J) with J = diag + superdiagonal ones has corner (-1)^{n-1} times the divided
    // difference; the superdiagonal of -J is -1, which supplies that sign.
    (-shift).exp() * j.exp()[(0, n - 1)]
}

/// Dense restriction of `sD` to the span of the lowest energy blocks, with the spectral
/// resolution of `(sD)^2`.
pub struct JloContext {
    pub dim: usize,
    pub d: DMatrix<Complex64>,
    pub grading: Vec<f64>,
    /// Distinct eigenvalues of `(sD)^2` and their spectral projections.
    pub groups: Vec<(f64, DMatrix<Complex64>)>,
}

impl JloContext {
    /// Restricts to basis vectors of energy at most `max_energy`.
    pub fn new(hs: &HatSpace, dirac: &Csc, scale: f64, max_energy: u32) -> Result<Self> {
        let dim = hs.dim_up_to(max_energy as i64);
        let d = dirac.dense_block(0..dim, 0..dim) * Complex64::new(scale, 0.0);
        let d = (&d + d.adjoint()) * Complex64::new(0.5, 0.0);
        let d2 = &d * &d;
        let eig = d2.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for k in order {
            let mu = eig.eigenvalues[k];
            if mu < -1e-9 {
                return Err(Error::InternalConsistency(format!("negative eigenvalue {mu} of D^2")));
            }
            match groups.last_mut() {
                Some((m0, idx)) if (mu - *m0).abs() <= 1e-9 * m0.abs().max(1.0) => idx.push(k),
                _ => groups.push((mu, vec![k])),
            }
        }
        let groups = groups
            .into_iter()
            .map(|(_, idx)| {
                let u = DMatrix::from_fn(dim, idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
                let mean = idx.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / idx.len() as f64;
                (mean.max(0.0), &u * u.adjoint())
            })
            .collect();
        let grading = (0..dim).map(|i| hs.grading[i] as f64).collect();
        Ok(JloContext { dim, d, grading, groups })
    }

    /// `[sD, a]`.
    pub fn delta(&self, a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        &self.d * a - a * &self.d
    }

    fn gamma_times(&self, a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = a.clone();
        for (r, g) in self.grading.iter().enumerate() {
            if *g < 0.0 {
                out.row_mut(r).neg_mut();
            }
        }
        out
    }

    /// `Str(p e^{-t (sD)^2} p)` for a projection `p` on the context space.
    pub fn projected_supertrace(&self, p: &DMatrix<Complex64>, t: f64) -> Complex64 {
        let mut heat = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for (mu, proj) in &self.groups {
            heat += proj * Complex64::new((-t * mu).exp(), 0.0);
        }
        self.gamma_times(&(p * heat * p)).trace()
    }
}

/// `int_{0 <= t_1 <= ... <= t_n <= 1} Str(a_0 e^{-t_1 D^2} [D, a_1] e^{-(t_2 - t_1) D^2} ...
/// [D, a_n] e^{-(1 - t_n) D^2})` with `D` the scaled Dirac operator of the context.
///
/// The trace is taken on the context space, which must contain the support of at least
/// one argument (all arguments are block diagonal).
pub fn jlo_term(ctx: &JloContext, ops: &[DMatrix<Complex64>]) -> Complex64 {
    let n = ops.len() - 1;
    let deltas: Vec<DMatrix<Complex64>> = ops[1..].iter().map(|a| ctx.delta(a)).collect();
    let start = ctx.gamma_times(&ops[0]);
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut total = Complex64::new(0.0, 0.0);
    let mut path: Vec<usize> = Vec::with_capacity(n + 1);
    fn walk(
        ctx: &JloContext,
        deltas: &[DMatrix<Complex64>],
        y: DMatrix<Complex64>,
        path: &mut Vec<usize>,
        sign: f64,
        total: &mut Complex64,
    ) {
        let k = path.len();
        for (g, (_, proj)) in ctx.groups.iter().enumerate() {
            let next = if k == 0 { &y * proj } else { &y * &deltas[k - 1] * proj };
            if next.iter().all(|z| z.norm() == 0.0) {
                continue;
            }
            path.push(g);
            if k == deltas.len() {
                let xs: Vec<f64> = path.iter().map(|&h| ctx.groups[h].0).collect();
                *total += next.trace() * (sign * exp_divided_difference(&xs));
            } else {
                walk(ctx, deltas, next, path, sign, total);
            }
            path.pop();
        }
    }
    walk(ctx, &deltas, start, &mut path, sign, &mut total);
    total
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct JloConfig {
    /// Highest cochain degree, even.
    pub order: u32,
    /// `D` is replaced by `scale * D`.
    pub scale: f64,
}

impl JloConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.order.is_multiple_of(2) {
            return Err(Error::Config(format!("JLO order must be even, got {}", self.order)));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!("JLO scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JloResult {
    pub value_re: f64,
    pub value_im: f64,
    /// Contribution of each even degree `0, 2, ..., order`.
    pub terms: Vec<f64>,
    pub last_term: f64,
    pub converged: bool,
}

/// Tolerance on the last series term for `converged`.
pub const JLO_CONVERGENCE: f64 = 1e-3;

/// `tau_0(p) + sum_{k=1}^{K/2} (-1)^k (2k)!/k! tau_{2k}(p - 1/2, p, ..., p)`.
pub fn jlo_pairing(hs: &HatSpace, dirac: &Csc, p: &SectorProjection, cfg: JloConfig) -> Result<JloResult> {
    cfg.validate()?;
    let kmax = (cfg.order / 2) as usize;
    let Some(v) = p.vector else {
        return Ok(JloResult {
            value_re: 0.0,
            value_im: 0.0,
            terms: vec![0.0; kmax + 1],
            last_term: 0.0,
            converged: true,
        });
    };
    let ctx = JloContext::new(hs, dirac, cfg.scale, hs.energies[v])?;
    let pm = DMatrix::from_fn(ctx.dim, ctx.dim, |r, c| {
        if r == v && c == v {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let shifted = &pm - DMatrix::<Complex64>::identity(ctx.dim, ctx.dim) * Complex64::new(0.5, 0.0);
    let mut value = Complex64::new(0.0, 0.0);
    let mut terms = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let t = if k == 0 {
            jlo_term(&ctx, std::slice::from_ref(&pm))
        } else {
            let mut ops = vec![shifted.clone()];
            ops.extend(std::iter::repeat_n(pm.clone(), 2 * k));
            let coef = (k + 1..=2 * k).map(|x| x as f64).product::<f64>();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            jlo_term(&ctx, &ops) * (sign * coef)
        };
        value += t;
        terms.push(t.re);
    }
    let last_term = terms.last().map(|t| t.abs()).unwrap_or(0.0);
    Ok(JloResult { value_re: value.re, value_im: value.im, terms, last_term, converged: last_term < JLO_CONVERGENCE })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sugawara::{assemble_hat_space, q_f64, sugawara_modes};
    use proptest::prelude::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|x| x as f64).product()
    }

    #[test]
    fn divided_difference_kernels() {
        let (a, b) = (0.3f64, 1.7f64);
        let closed = ((-b).exp() - (-a).exp()) / (a - b);
        assert!((-exp_divided_difference(&[a, b]) - closed).abs() < 1e-14);
        for n in 0..6 {
            let xs = vec![0.8; n + 1];
            let want = (-0.8f64).exp() / factorial(n) * if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((exp_divided_difference(&xs) - want).abs() < 1e-14);
        }
    }

    fn recursive_dd(xs: &[f64]) -> f64 {
        if xs.len() == 1 {
            return (-xs[0]).exp();
        }
        let n = xs.len();
        (recursive_dd(&xs[1..]) - recursive_dd(&xs[..n - 1])) / (xs[n - 1] - xs[0])
    }

    proptest! {
        #[test]
        fn divided_difference_matches_recursion(mut xs in proptest::collection::vec(0.0f64..4.0, 1..5)) {
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.dedup_by(|a, b| (*a - *b).abs() < 0.3);
            let got = exp_divided_difference(&xs);
            let want = recursive_dd(&xs);
            prop_assert!((got - want).abs() < 1e-11, "{xs:?}: {got} vs {want}");
        }

        #[test]
        fn divided_difference_is_symmetric(xs in proptest::collection::vec(0.0f64..3.0, 2..5)) {
            let mut rev = xs.clone();
            rev.reverse();
            prop_assert!((exp_divided_difference(&xs) - exp_divided_difference(&rev)).abs() < 1e-12);
        }
    }

    #[test]
    fn sector_projections_and_index() {
        let hs = assemble_hat_space(0, 1, 1, "A1".parse().unwrap()).unwrap();
        let modes = sugawara_modes(&hs, 0).unwrap();
        let d = modes.dirac();
        let p = hat_representation(&hs, 0, 0).unwrap();
        assert_eq!(p.rank(), 1);
        let v = p.vector.unwrap();
        assert_eq!(hs.energies[v], 0);
        assert_eq!(hs.grading[v], 1);
        let pm = p.matrix(hs.dim());
        let g = hs.grading_matrix();
        assert_eq!(pm.mul(&g), pm);
        assert_eq!(g.mul(&pm), pm);
        assert_eq!(fredholm_index(&hs, d, &p), 1);
        let q = hat_representation(&hs, 1, 0).unwrap();
        assert_eq!(q.rank(), 0);
        assert_eq!(q.matrix(hs.dim()).nnz(), 0);
        assert_eq!(fredholm_index(&hs, d, &q), 0);
        let alt = hat_representation(&hs, 0, 1).unwrap();
        assert_ne!(alt.vector, p.vector);
        assert_eq!(fredholm_index(&hs, d, &alt), 1);
        assert!(hat_representation(&hs, 2, 0).is_err());
    }

    #[test]
    fn degree_zero_term_and_heat_traces() {
        let hs = assemble_hat_space(0, 1, 1, "A1".parse().unwrap()).unwrap();
        let modes = sugawara_modes(&hs, 0).unwrap();
        let ctx = JloContext::new(&hs, modes.dirac(), 1.0, 1).unwrap();
        let p = hat_representation(&hs, 0, 0).unwrap();
        let v = p.vector.unwrap();
        let pm = DMatrix::from_fn(ctx.dim, ctx.dim, |r, c| {
            Complex64::new(if r == v && c == v { 1.0 } else { 0.0 }, 0.0)
        });
        // Direct matrix exponential of -D^2 as the independent reference.
        let heat = (-(&ctx.d * &ctx.d)).exp();
        let mut direct = Complex64::new(0.0, 0.0);
        for r in 0..ctx.dim {
            direct += (&pm * &heat)[(r, r)] * ctx.grading[r];
        }
        let lam = q_f64(hs.lowest_l0() - hs.central_charge() / crate::lie::Q::from_integer(24));
        let t0 = jlo_term(&ctx, std::slice::from_ref(&pm));
        assert!((t0 - direct).norm() < 1e-12);
        assert!((t0.re - (-lam).exp()).abs() < 1e-12);
        let zero = DMatrix::<Complex64>::zeros(ctx.dim, ctx.dim);
        assert_eq!(jlo_term(&ctx, &[zero]), Complex64::new(0.0, 0.0));
        for t in [0.5, 1.0, 2.0] {
            let st = ctx.projected_supertrace(&pm, t);
            assert!((st.re - (-t * lam).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_is_a_derivation() {
        let hs = assemble_hat_space(1, 1, 1, "A1".parse().unwrap()).unwrap();
        let modes = sugawara_modes(&hs, 0).unwrap();
        let ctx = JloContext::new(&hs, modes.dirac(), 1.0, 1).unwrap();
        let n = ctx.dim;
        let a = DMatrix::from_fn(n, n, |r, c| Complex64::new(((r * 7 + c * 3) % 5) as f64, (r % 3) as f64 - 1.0));
        let b = DMatrix::from_fn(n, n, |r, c| Complex64::new(((r + 2 * c) % 4) as f64, 0.0));
        let lhs = ctx.delta(&(&a * &b));
        let rhs = ctx.delta(&a) * &b + &a * ctx.delta(&b);
        let scale = lhs.iter().map(|z| z.norm()).fold(1.0, f64::max);
        assert!((lhs - rhs).iter().all(|z| z.norm() < 1e-12 * scale));
    }

    #[test]
    fn single_chain_matches_simplex_quadrature() {
        // Two eigenvalue groups: a first-order term against midpoint quadrature.
        let hs = assemble_hat_space(0, 1, 1, "A1".parse().unwrap()).unwrap();
        let modes = sugawara_modes(&hs, 0).unwrap();
        let ctx = JloContext::new(&hs, modes.dirac(), 1.0, 1).unwrap();
        assert_eq!(ctx.groups.len(), 2);
        let n = ctx.dim;
        let a0 = DMatrix::from_fn(n, n, |r, c| Complex64::new(((r * c) % 3) as f64, 0.0));
        let a1 = DMatrix::from_fn(n, n, |r, c| Complex64::new(((r + c) % 2) as f64, 0.0));
        let got = jlo_term(&ctx, &[a0.clone(), a1.clone()]);
        let eig = (&ctx.d * &ctx.d).symmetric_eigen();
        let heat = |t: f64| {
            let diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new((-t * l).exp(), 0.0)));
            &eig.eigenvectors * diag * eig.eigenvectors.adjoint()
        };
        let steps = 120;
        let grid: Vec<DMatrix<Complex64>> = (0..steps).map(|k| heat((k as f64 + 0.5) / steps as f64)).collect();
        let da1 = ctx.delta(&a1);
        let mut quad = Complex64::new(0.0, 0.0);
        for k in 0..steps {
            let m = ctx.gamma_times(&(&a0 * &grid[k] * &da1 * &grid[steps - 1 - k]));
            quad += m.trace() / steps as f64;
        }
        assert!((got - quad).norm() < 1e-4 * quad.norm().max(1.0), "{got} vs {quad}");
    }

    #[test]
    fn pairing_series() {
        let hs = assemble_hat_space(0, 1, 1, "A1".parse().unwrap()).unwrap();
        let modes = sugawara_modes(&hs, 0).unwrap();
        let p = hat_representation(&hs, 0, 0).unwrap();
        let cfg = JloConfig { order: 8, scale: 2.0 };
        let r = jlo_pairing(&hs, modes.dirac(), &p, cfg).unwrap();
        // With x = s^2 (h + d/8 - c/24), the series is e^{-x} sum_{k <= K/2} x^k / k!.
        let x: f64 = 4.0 / 6.0;
        let want = (-x).exp() * (0..=4).map(|k| x.powi(k) / factorial(k as usize)).sum::<f64>();
        assert!((r.value_re - want).abs() < 1e-12, "{} vs {want}", r.value_re);
        assert!(r.value_im.abs() < 1e-12);
        let q = hat_representation(&hs, 1, 0).unwrap();
        let z = jlo_pairing(&hs, modes.dirac(), &q, cfg).unwrap();
        assert_eq!(z.value_re, 0.0);
        assert!(z.terms.iter().all(|&t| t == 0.0));
        assert!(jlo_pairing(&hs, modes.dirac(), &p, JloConfig { order: 3, scale: 1.0 }).is_err());
    }
}
