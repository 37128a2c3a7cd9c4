//! Root systems, Weyl groups and structure constants of simple Lie algebras.
//!
//! Roots are realized in the usual Euclidean coordinates with exact rational
//! entries. For the types whose standard coordinates would make long roots
//! longer than `sqrt(2)` (C and G) the inner product carries a rational scale
//! factor instead, so every quantity stays exact.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = Ratio<i64>;

/// Default cap on the number of Weyl group elements we are willing to enumerate.
pub const DEFAULT_WEYL_BOUND: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Series {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl Series {
    pub fn letter(self) -> char {
        match self {
            Series::A => 'A',
            Series::B => 'B',
            Series::C => 'C',
            Series::D => 'D',
            Series::E => 'E',
            Series::F => 'F',
            Series::G => 'G',
        }
    }

    fn from_letter(c: char) -> Option<Self> {
        Some(match c.to_ascii_uppercase() {
            'A' => Series::A,
            'B' => Series::B,
            'C' => Series::C,
            'D' => Series::D,
            'E' => Series::E,
            'F' => Series::F,
            'G' => Series::G,
            _ => return None,
        })
    }
}

/// A simple type such as `A1` or `E6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CartanType {
    pub series: Series,
    pub rank: usize,
}

impl CartanType {
    pub fn new(series: Series, rank: usize) -> Result<Self> {
        let ok = match series {
            Series::A => rank >= 1,
            Series::B => rank >= 2,
            Series::C => rank >= 3,
            Series::D => rank >= 4,
            Series::E => (6..=8).contains(&rank),
            Series::F => rank == 4,
            Series::G => rank == 2,
        };
        if ok {
            Ok(CartanType { series, rank })
        } else {
            let reason = match series {
                Series::A => "A_n needs n >= 1",
                Series::B => "B_n needs n >= 2",
                Series::C => "C_n needs n >= 3",
                Series::D => "D_n needs n >= 4",
                Series::E => "only E6, E7 and E8 exist",
                Series::F => "only F4 exists",
                Series::G => "only G2 exists",
            };
            Err(Error::InvalidAlgebra {
                series: series.letter(),
                rank,
                reason: reason.to_string(),
            })
        }
    }
}

impl fmt::Display for CartanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.series.letter(), self.rank)
    }
}

impl FromStr for CartanType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        let letter = chars.next().ok_or_else(|| Error::Config("empty algebra name".into()))?;
        let series = Series::from_letter(letter)
            .ok_or_else(|| Error::Config(format!("unknown series letter in {s:?}")))?;
        let rank: usize = chars
            .as_str()
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse rank in {s:?}")))?;
        CartanType::new(series, rank)
    }
}

/// Root data of a simple Lie algebra, normalized so long roots have squared length 2.
#[derive(Debug, Clone)]
pub struct RootSystem {
    pub cartan_type: CartanType,
    /// `cartan_matrix[i][j] = 2 (a_i, a_j) / (a_j, a_j)`.
    pub cartan_matrix: Vec<Vec<i64>>,
    pub simple_roots: Vec<Vec<Q>>,
    pub fundamental_weights: Vec<Vec<Q>>,
    /// The inner product is `form_scale * (x . y)` in ambient coordinates.
    pub form_scale: Q,
    /// Positive roots in ambient coordinates, sorted by height then lexicographically
    /// by their simple-root coordinates.
    pub positive_roots: Vec<Vec<Q>>,
    /// The same roots in simple-root coordinates.
    pub positive_root_coords: Vec<Vec<i64>>,
    pub highest_root: Vec<Q>,
    /// Coefficients of the highest root in the simple roots.
    pub marks: Vec<i64>,
    /// Coefficients of the highest coroot in the simple coroots.
    pub comarks: Vec<i64>,
    pub dual_coxeter: i64,
}

fn q(n: i64) -> Q {
    Q::from_integer(n)
}

fn half(n: i64) -> Q {
    Q::new(n, 2)
}

fn unit(dim: usize, i: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); dim];
    v[i] = Q::one();
    v
}

fn diff(dim: usize, i: usize, j: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); dim];
    v[i] += Q::one();
    v[j] -= Q::one();
    v
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Bourbaki realization of the simple roots together with the form scale.
fn simple_roots_for(ct: CartanType) -> (Vec<Vec<Q>>, Q) {
    let n = ct.rank;
    match ct.series {
        Series::A => ((0..n).map(|i| diff(n + 1, i, i + 1)).collect(), Q::one()),
        Series::B => {
            let mut r: Vec<_> = (0..n - 1).map(|i| diff(n, i, i + 1)).collect();
            r.push(unit(n, n - 1));
            (r, Q::one())
        }
        Series::C => {
            let mut r: Vec<_> = (0..n - 1).map(|i| diff(n, i, i + 1)).collect();
            let mut last = vec![Q::zero(); n];
            last[n - 1] = q(2);
            r.push(last);
            (r, half(1))
        }
        Series::D => {
            let mut r: Vec<_> = (0..n - 1).map(|i| diff(n, i, i + 1)).collect();
            let mut last = vec![Q::zero(); n];
            last[n - 2] = Q::one();
            last[n - 1] = Q::one();
            r.push(last);
            (r, Q::one())
        }
        Series::E => {
            let mut r = Vec::with_capacity(n);
            let mut a1 = vec![half(-1); 8];
            a1[0] = half(1);
            a1[7] = half(1);
            r.push(a1);
            let mut a2 = vec![Q::zero(); 8];
            a2[0] = Q::one();
            a2[1] = Q::one();
            r.push(a2);
            for k in 3..=n {
                // a_k = e_{k-2} - e_{k-3} (1-based ambient indices)
                r.push(diff(8, k - 2, k - 3));
            }
            (r, Q::one())
        }
        Series::F => {
            let r = vec![
                diff(4, 1, 2),
                diff(4, 2, 3),
                unit(4, 3),
                vec![half(1), half(-1), half(-1), half(-1)],
            ];
            (r, Q::one())
        }
        Series::G => {
            let r = vec![vec![q(1), q(-1), q(0)], vec![q(-2), q(1), q(1)]];
            (r, Q::new(1, 3))
        }
    }
}

fn invert_rational(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut inv: Vec<Vec<Q>> = (0..n).map(|i| unit(n, i)).collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for k in 0..n {
            a[col][k] /= p;
            inv[col][k] /= p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for k in 0..n {
                    let (ack, ick) = (a[col][k], inv[col][k]);
                    a[r][k] -= f * ack;
                    inv[r][k] -= f * ick;
                }
            }
        }
    }
    Some(inv)
}

impl RootSystem {
    pub fn rank(&self) -> usize {
        self.cartan_type.rank
    }

    /// Dimension of the Lie algebra.
    pub fn dim(&self) -> usize {
        self.rank() + 2 * self.positive_roots.len()
    }

    /// Bilinear form on ambient vectors.
    pub fn form(&self, a: &[Q], b: &[Q]) -> Q {
        self.form_scale * dot(a, b)
    }

    /// Gram matrix `(a_i, a_j)` of the simple roots.
    pub fn simple_root_form(&self) -> Vec<Vec<Q>> {
        let r = self.rank();
        (0..r)
            .map(|i| (0..r).map(|j| self.form(&self.simple_roots[i], &self.simple_roots[j])).collect())
            .collect()
    }

    /// Gram matrix `(w_i, w_j)` of the fundamental weights.
    pub fn weight_form(&self) -> Vec<Vec<Q>> {
        let r = self.rank();
        (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| self.form(&self.fundamental_weights[i], &self.fundamental_weights[j]))
                    .collect()
            })
            .collect()
    }

    /// Pairing `<b, a_i^vee>` for a root given in simple-root coordinates.
    pub fn coroot_pairing(&self, coords: &[i64], i: usize) -> i64 {
        coords
            .iter()
            .enumerate()
            .map(|(j, c)| c * self.cartan_matrix[j][i])
            .sum()
    }

    fn to_ambient(&self, coords: &[i64]) -> Vec<Q> {
        let dim = self.simple_roots[0].len();
        let mut v = vec![Q::zero(); dim];
        for (c, root) in coords.iter().zip(&self.simple_roots) {
            for (x, y) in v.iter_mut().zip(root) {
                *x += q(*c) * *y;
            }
        }
        v
    }

    /// Weyl vector in Dynkin labels, `rho = (1, ..., 1)`.
    pub fn rho_labels(&self) -> Vec<i64> {
        vec![1; self.rank()]
    }

    /// `(lambda, mu)` for weights given by Dynkin labels.
    pub fn weight_inner(&self, lambda: &[i64], mu: &[i64]) -> Q {
        let f = self.weight_form();
        let mut acc = Q::zero();
        for i in 0..lambda.len() {
            for j in 0..mu.len() {
                acc += f[i][j] * q(lambda[i] * mu[j]);
            }
        }
        acc
    }

    /// `(lambda, theta^vee)` for a weight in Dynkin labels.
    pub fn level_of(&self, labels: &[i64]) -> i64 {
        labels.iter().zip(&self.comarks).map(|(l, a)| l * a).sum()
    }
}

/// Builds the root system of the simple type `(series, rank)` with Bourbaki numbering.
pub fn build_root_system(series: Series, rank: usize) -> Result<RootSystem> {
    let ct = CartanType::new(series, rank)?;
    let (simple_roots, form_scale) = simple_roots_for(ct);
    let n = rank;
    let form = |a: &[Q], b: &[Q]| form_scale * dot(a, b);

    let mut cartan = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let v = q(2) * form(&simple_roots[i], &simple_roots[j]) / form(&simple_roots[j], &simple_roots[j]);
            if !v.is_integer() {
                return Err(Error::InternalConsistency(format!("non-integral Cartan entry for {ct}")));
            }
            cartan[i][j] = v.to_integer();
        }
    }

    // Positive roots by the string algorithm, height by height.
    let mut layers: Vec<Vec<Vec<i64>>> = vec![(0..n)
        .map(|i| {
            let mut c = vec![0; n];
            c[i] = 1;
            c
        })
        .collect()];
    let mut known: HashSet<Vec<i64>> = layers[0].iter().cloned().collect();
    loop {
        let mut next: Vec<Vec<i64>> = Vec::new();
        for beta in layers.last().unwrap() {
            for i in 0..n {
                let mut p = 0;
                let mut probe = beta.clone();
                loop {
                    probe[i] -= 1;
                    if known.contains(&probe) {
                        p += 1;
                    } else {
                        break;
                    }
                }
                let pairing: i64 = beta.iter().enumerate().map(|(j, c)| c * cartan[j][i]).sum();
                if p - pairing > 0 {
                    let mut up = beta.clone();
                    up[i] += 1;
                    if known.insert(up.clone()) {
                        next.push(up);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        layers.push(next);
    }
    let positive_root_coords: Vec<Vec<i64>> = layers.into_iter().flatten().collect();
    let highest = positive_root_coords.last().unwrap().clone();

    let cartan_q: Vec<Vec<Q>> = cartan.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
    let inv = invert_rational(&cartan_q)
        .ok_or_else(|| Error::InternalConsistency("singular Cartan matrix".into()))?;

    let mut rs = RootSystem {
        cartan_type: ct,
        cartan_matrix: cartan,
        simple_roots,
        fundamental_weights: Vec::new(),
        form_scale,
        positive_roots: Vec::new(),
        positive_root_coords,
        highest_root: Vec::new(),
        marks: highest.clone(),
        comarks: Vec::new(),
        dual_coxeter: 0,
    };
    // w_i = sum_k (C^{-1})_{ik} a_k, because <a_k, a_j^vee> = C[k][j].
    rs.fundamental_weights = (0..n)
        .map(|i| {
            let mut v = vec![Q::zero(); rs.simple_roots[0].len()];
            for k in 0..n {
                for (x, y) in v.iter_mut().zip(&rs.simple_roots[k]) {
                    *x += inv[i][k] * *y;
                }
            }
            v
        })
        .collect();
    rs.positive_roots = rs.positive_root_coords.iter().map(|c| rs.to_ambient(c)).collect();
    rs.highest_root = rs.to_ambient(&highest);
    let mut comarks = Vec::with_capacity(n);
    for i in 0..n {
        let len = rs.form(&rs.simple_roots[i], &rs.simple_roots[i]);
        let a = q(highest[i]) * len / q(2);
        if !a.is_integer() {
            return Err(Error::InternalConsistency("non-integral comark".into()));
        }
        comarks.push(a.to_integer());
    }
    rs.dual_coxeter = 1 + comarks.iter().sum::<i64>();
    rs.comarks = comarks;
    Ok(rs)
}

/// Convenience wrapper taking a parsed type.
pub fn root_system(ct: CartanType) -> Result<RootSystem> {
    build_root_system(ct.series, ct.rank)
}

/// A Weyl group element acting on Dynkin labels by an integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeylElement {
    /// Row-major `rank x rank` matrix acting on Dynkin-label column vectors.
    pub matrix: Vec<i64>,
    /// Determinant, `+1` or `-1`.
    pub sign: i8,
}

impl WeylElement {
    pub fn apply(&self, labels: &[i64]) -> Vec<i64> {
        let r = labels.len();
        (0..r)
            .map(|i| (0..r).map(|j| self.matrix[i * r + j] * labels[j]).sum())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct WeylGroup {
    pub rank: usize,
    pub elements: Vec<WeylElement>,
}

impl WeylGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

/// Simple reflection `s_i` in Dynkin-label coordinates: `(s_i l)_j = l_j - C[i][j] l_i`.
fn simple_reflection(rs: &RootSystem, i: usize) -> Vec<i64> {
    let r = rs.rank();
    let mut m = vec![0i64; r * r];
    for j in 0..r {
        m[j * r + j] = 1;
        m[j * r + i] -= rs.cartan_matrix[i][j];
    }
    m
}

fn matmul(a: &[i64], b: &[i64], r: usize) -> Vec<i64> {
    let mut c = vec![0i64; r * r];
    for i in 0..r {
        for k in 0..r {
            let aik = a[i * r + k];
            if aik != 0 {
                for j in 0..r {
                    c[i * r + j] += aik * b[k * r + j];
                }
            }
        }
    }
    c
}

/// Enumerates the Weyl group by closing the simple reflections, refusing to exceed `bound`.
pub fn weyl_group_bounded(rs: &RootSystem, bound: usize) -> Result<WeylGroup> {
    let r = rs.rank();
    let gens: Vec<Vec<i64>> = (0..r).map(|i| simple_reflection(rs, i)).collect();
    let mut ident = vec![0i64; r * r];
    for i in 0..r {
        ident[i * r + i] = 1;
    }
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut elements = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(ident.clone());
    queue.push_back((ident, 1i8));
    while let Some((m, sign)) = queue.pop_front() {
        for g in &gens {
            let next = matmul(g, &m, r);
            if !seen.contains(&next) {
                if seen.len() >= bound {
                    return Err(Error::WeylBoundExceeded { bound });
                }
                seen.insert(next.clone());
                queue.push_back((next, -sign));
            }
        }
        elements.push(WeylElement { matrix: m, sign });
    }
    Ok(WeylGroup { rank: r, elements })
}

pub fn weyl_group(rs: &RootSystem) -> Result<WeylGroup> {
    weyl_group_bounded(rs, DEFAULT_WEYL_BOUND)
}

/// Classical order of the Weyl group of a simple type.
pub fn classical_weyl_order(ct: CartanType) -> u128 {
    let fact = |n: usize| (1..=n as u128).product::<u128>();
    let n = ct.rank;
    match ct.series {
        Series::A => fact(n + 1),
        Series::B | Series::C => (1u128 << n) * fact(n),
        Series::D => (1u128 << (n - 1)) * fact(n),
        Series::E => match n {
            6 => 51_840,
            7 => 2_903_040,
            _ => 696_729_600,
        },
        Series::F => 1152,
        Series::G => 12,
    }
}

/// Lie algebra in a Chevalley basis `h_1..h_r, e_a (a > 0), e_{-a} (a > 0)`.
#[derive(Debug, Clone)]
pub struct ChevalleyAlgebra {
    pub rank: usize,
    /// Root coordinates (simple-root basis) for basis indices `rank..dim`.
    pub roots: Vec<Vec<i64>>,
    /// Sparse bracket table: `bracket[x][y]` lists `(z, c)` with `[x, y] = sum c z`.
    pub bracket: Vec<Vec<Vec<(usize, Q)>>>,
}

impl ChevalleyAlgebra {
    pub fn dim(&self) -> usize {
        self.bracket.len()
    }

    /// Basis index of the root vector `e_beta`, if `beta` is a root.
    pub fn root_index(&self, beta: &[i64]) -> Option<usize> {
        self.roots.iter().position(|r| r == beta).map(|k| k + self.rank)
    }

    /// Adjoint matrices `ad(x)` as dense float matrices, column `y` holding `[x, y]`.
    pub fn adjoint(&self) -> Vec<Vec<Vec<f64>>> {
        let d = self.dim();
        (0..d)
            .map(|x| {
                let mut m = vec![vec![0.0; d]; d];
                for y in 0..d {
                    for (z, c) in &self.bracket[x][y] {
                        m[*z][y] += c.to_f64().unwrap();
                    }
                }
                m
            })
            .collect()
    }
}

struct StructureSolver {
    roots: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
    npos: usize,
    extraspecial: HashMap<usize, (usize, usize)>,
    memo: HashMap<(usize, usize), Q>,
    b: Vec<Vec<Q>>,
}

impl StructureSolver {
    fn new(rs: &RootSystem) -> Self {
        let pos = rs.positive_root_coords.clone();
        let npos = pos.len();
        let mut roots = pos.clone();
        roots.extend(pos.iter().map(|r| r.iter().map(|x| -x).collect::<Vec<_>>()));
        let index: HashMap<Vec<i64>, usize> = roots.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect();
        let mut extraspecial = HashMap::new();
        for (xi_idx, xi) in pos.iter().enumerate() {
            if xi.iter().sum::<i64>() == 1 {
                continue;
            }
            for (a_idx, a) in pos.iter().enumerate() {
                let rest: Vec<i64> = xi.iter().zip(a).map(|(x, y)| x - y).collect();
                if let Some(&b_idx) = index.get(&rest) {
                    if b_idx < npos {
                        extraspecial.insert(xi_idx, (a_idx, b_idx));
                        break;
                    }
                }
            }
        }
        StructureSolver {
            roots,
            index,
            npos,
            extraspecial,
            memo: HashMap::new(),
            b: rs.simple_root_form(),
        }
    }

    fn norm(&self, coords: &[i64]) -> Q {
        let mut acc = Q::zero();
        for i in 0..coords.len() {
            for j in 0..coords.len() {
                acc += self.b[i][j] * q(coords[i] * coords[j]);
            }
        }
        acc
    }

    fn add(&self, x: usize, y: usize) -> Option<usize> {
        let s: Vec<i64> = self.roots[x].iter().zip(&self.roots[y]).map(|(a, b)| a + b).collect();
        self.index.get(&s).copied()
    }

    fn neg(&self, x: usize) -> usize {
        if x < self.npos {
            x + self.npos
        } else {
            x - self.npos
        }
    }

    fn is_pos(&self, x: usize) -> bool {
        x < self.npos
    }

    /// Largest `p` with `beta - p alpha` a root.
    fn string_down(&self, alpha: usize, beta: usize) -> i64 {
        let mut p = 0;
        let mut cur: Vec<i64> = self.roots[beta].clone();
        loop {
            for (c, a) in cur.iter_mut().zip(&self.roots[alpha]) {
                *c -= a;
            }
            if self.index.contains_key(&cur) {
                p += 1;
            } else {
                return p;
            }
        }
    }

    /// Structure constant `N_{x,y}` with `[e_x, e_y] = N_{x,y} e_{x+y}`.
    fn n(&mut self, x: usize, y: usize) -> Q {
        if self.add(x, y).is_none() {
            return Q::zero();
        }
        if let Some(v) = self.memo.get(&(x, y)) {
            return *v;
        }
        let val = match (self.is_pos(x), self.is_pos(y)) {
            (true, true) => self.n_positive(x, y),
            (false, false) => {
                let (nx, ny) = (self.neg(x), self.neg(y));
                -self.n(nx, ny)
            }
            (false, true) => -self.n(y, x),
            (true, false) => {
                let z = self.neg(self.add(x, y).unwrap());
                let zc = self.roots[z].clone();
                let xc = self.roots[x].clone();
                let yc = self.roots[y].clone();
                if self.is_pos(z) {
                    // N_{xy}/(z,z) = N_{zx}/(y,y)
                    self.norm(&zc) / self.norm(&yc) * self.n(z, x)
                } else {
                    // N_{xy}/(z,z) = N_{yz}/(x,x)
                    self.norm(&zc) / self.norm(&xc) * self.n(y, z)
                }
            }
        };
        self.memo.insert((x, y), val);
        val
    }

    fn n_positive(&mut self, a: usize, b: usize) -> Q {
        let xi = self.add(a, b).unwrap();
        let (g, d) = self.extraspecial[&xi];
        if (a, b) == (g, d) {
            return q(self.string_down(a, b) + 1);
        }
        if (b, a) == (g, d) {
            return -q(self.string_down(b, a) + 1);
        }
        let n_gd = q(self.string_down(g, d) + 1);
        let xi_c = self.roots[xi].clone();
        let (mg, md) = (self.neg(g), self.neg(d));
        let mut acc = Q::zero();
        if let Some(bg) = self.add(b, mg) {
            let c = self.roots[bg].clone();
            acc += self.n(b, mg) * self.n(a, md) / self.norm(&c);
        }
        if let Some(ag) = self.add(a, mg) {
            let c = self.roots[ag].clone();
            acc += self.n(mg, a) * self.n(b, md) / self.norm(&c);
        }
        self.norm(&xi_c) / n_gd * acc
    }
}

/// Exact Chevalley-basis structure constants via extraspecial pairs.
pub fn chevalley_algebra(rs: &RootSystem) -> Result<ChevalleyAlgebra> {
    let r = rs.rank();
    let mut solver = StructureSolver::new(rs);
    let roots = solver.roots.clone();
    let nroots = roots.len();
    let d = r + nroots;
    let mut bracket: Vec<Vec<Vec<(usize, Q)>>> = vec![vec![Vec::new(); d]; d];
    let lens: Vec<Q> = (0..r).map(|i| solver.b[i][i]).collect();
    for i in 0..r {
        for (k, root) in roots.iter().enumerate() {
            let c = rs.coroot_pairing(root, i);
            if c != 0 {
                bracket[i][r + k].push((r + k, q(c)));
                bracket[r + k][i].push((r + k, q(-c)));
            }
        }
    }
    for x in 0..nroots {
        for y in 0..nroots {
            let sum: Vec<i64> = roots[x].iter().zip(&roots[y]).map(|(a, b)| a + b).collect();
            if sum.iter().all(|&s| s == 0) {
                // [e_a, e_{-a}] = h_a = sum_i c_i (a_i,a_i)/(a,a) h_i
                let norm = solver.norm(&roots[x]);
                for i in 0..r {
                    let c = q(roots[x][i]) * lens[i] / norm;
                    if !c.is_zero() {
                        bracket[r + x][r + y].push((i, c));
                    }
                }
            } else if let Some(&z) = solver.index.get(&sum) {
                let c = solver.n(x, y);
                if !c.is_integer() {
                    return Err(Error::InternalConsistency("non-integral structure constant".into()));
                }
                if !c.is_zero() {
                    bracket[r + x][r + y].push((r + z, c));
                }
            }
        }
    }
    Ok(ChevalleyAlgebra { rank: r, roots, bracket })
}

/// Real structure constants `f_abc` in an orthonormal basis of the compact form.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    pub dim: usize,
    pub h_dual: i64,
    /// Dense `d*d*d` tensor, index `(a*d + b)*d + c`.
    pub f: Vec<f64>,
    /// Hermitian generators `T_a = i e_a` as complex coefficient vectors over the
    /// Chevalley basis. With `e_a^dagger = e_{-a}` these are self-adjoint.
    pub hermitian_generators: Vec<Vec<Complex64>>,
}

impl StructureConstants {
    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.f[(a * self.dim + b) * self.dim + c]
    }

    /// Max over `(a, c, d)` of `|sum_e f_abe f_ecd + f_cbe f_aed + f_dbe f_ace|` for every `b`.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for dd in 0..d {
                        let mut s = 0.0;
                        for e in 0..d {
                            s += self.get(a, b, e) * self.get(e, c, dd)
                                + self.get(c, b, e) * self.get(a, e, dd)
                                + self.get(dd, b, e) * self.get(a, c, e);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Max of `|-(1/2h) tr(ad e_a ad e_b) - delta_ab|`.
    pub fn killing_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                // ad(e_a)_{ec} = f_{a c e}
                let mut tr = 0.0;
                for c in 0..d {
                    for e in 0..d {
                        tr += self.get(a, c, e) * self.get(b, e, c);
                    }
                }
                let v = -tr / (2.0 * self.h_dual as f64) - if a == b { 1.0 } else { 0.0 };
                worst = worst.max(v.abs());
            }
        }
        worst
    }

    /// Max deviation from total antisymmetry.
    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let v = self.get(a, b, c);
                    worst = worst
                        .max((v + self.get(b, a, c)).abs())
                        .max((v - self.get(b, c, a)).abs())
                        .max((v + self.get(a, c, b)).abs());
                }
            }
        }
        worst
    }
}

fn complex_bracket(alg: &ChevalleyAlgebra, x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    let d = alg.dim();
    let mut out = vec![Complex64::zero(); d];
    for (i, xi) in x.iter().enumerate() {
        if xi.is_zero() {
            continue;
        }
        for (j, yj) in y.iter().enumerate() {
            if yj.is_zero() {
                continue;
            }
            for (z, c) in &alg.bracket[i][j] {
                out[*z] += xi * yj * c.to_f64().unwrap();
            }
        }
    }
    out
}

fn complex_ad(alg: &ChevalleyAlgebra, x: &[Complex64]) -> Vec<Vec<Complex64>> {
    let d = alg.dim();
    (0..d)
        .map(|col| {
            let mut basis = vec![Complex64::zero(); d];
            basis[col] = Complex64::one();
            complex_bracket(alg, x, &basis)
        })
        .collect()
}

fn killing(alg: &ChevalleyAlgebra, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let ax = complex_ad(alg, x);
    let ay = complex_ad(alg, y);
    let d = alg.dim();
    // ax[col][row]
    let mut tr = Complex64::zero();
    for i in 0..d {
        for k in 0..d {
            tr += ax[k][i] * ay[i][k];
        }
    }
    tr
}

/// Orthonormal compact-form basis (Cartan part first, then root planes by height) and
/// its structure constants, normalized by `-(1/2h) tr(ad ad) = 1`.
pub fn orthonormal_structure_constants(rs: &RootSystem) -> Result<StructureConstants> {
    let alg = chevalley_algebra(rs)?;
    let r = rs.rank();
    let d = alg.dim();
    let npos = rs.positive_roots.len();
    let h = rs.dual_coxeter as f64;
    let i = Complex64::i();
    let inner = |x: &[Complex64], y: &[Complex64]| -killing(&alg, x, y) / (2.0 * h);

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for k in 0..r {
        let mut v = vec![Complex64::zero(); d];
        v[k] = i;
        for prev in basis.clone() {
            let c = inner(&v, &prev);
            for (a, b) in v.iter_mut().zip(&prev) {
                *a -= c * b;
            }
        }
        let n = inner(&v, &v);
        if n.re <= 0.0 || n.im.abs() > 1e-9 {
            return Err(Error::InternalConsistency("Cartan part of the form is not positive".into()));
        }
        let s = n.re.sqrt();
        v.iter_mut().for_each(|a| *a /= s);
        basis.push(v);
    }
    for k in 0..npos {
        let (pos, neg) = (r + k, r + npos + k);
        let mut u = vec![Complex64::zero(); d];
        u[pos] = Complex64::one();
        u[neg] = -Complex64::one();
        let mut v = vec![Complex64::zero(); d];
        v[pos] = i;
        v[neg] = i;
        for mut w in [u, v] {
            let n = inner(&w, &w);
            if n.re <= 0.0 || n.im.abs() > 1e-9 {
                return Err(Error::InternalConsistency("root plane is not compact".into()));
            }
            let s = n.re.sqrt();
            w.iter_mut().for_each(|a| *a /= s);
            basis.push(w);
        }
    }

    let mut f = vec![0.0; d * d * d];
    for a in 0..d {
        for b in 0..d {
            let br = complex_bracket(&alg, &basis[a], &basis[b]);
            for c in 0..d {
                let v = inner(&br, &basis[c]);
                if v.im.abs() > 1e-9 {
                    return Err(Error::InternalConsistency("complex structure constant".into()));
                }
                f[(a * d + b) * d + c] = v.re;
            }
        }
    }
    let hermitian_generators = basis.iter().map(|v| v.iter().map(|c| c * i).collect()).collect();
    Ok(StructureConstants {
        dim: d,
        h_dual: rs.dual_coxeter,
        f,
        hermitian_generators,
    })
}

/// Checks that every element of `w` permutes the root set (roots expressed in Dynkin labels).
pub fn weyl_permutes_roots(rs: &RootSystem, w: &WeylGroup) -> bool {
    let r = rs.rank();
    let to_labels = |coords: &[i64]| -> Vec<i64> { (0..r).map(|i| rs.coroot_pairing(coords, i)).collect() };
    let mut all: Vec<Vec<i64>> = rs.positive_root_coords.iter().map(|c| to_labels(c)).collect();
    let negs: Vec<Vec<i64>> = all.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
    all.extend(negs);
    let set: HashSet<Vec<i64>> = all.iter().cloned().collect();
    w.elements
        .iter()
        .all(|g| all.iter().all(|root| set.contains(&g.apply(root))))
}

impl fmt::Display for RootSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.cartan_type)
    }
}
