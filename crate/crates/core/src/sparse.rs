//! Compressed sparse column matrices over `Complex64`, with just the operations the
//! operator algebra needs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Entries with magnitude at or below this are dropped when assembling.
const DROP: f64 = 0.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Csc {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowidx: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl Csc {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Csc {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowidx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn diagonal(d: &[Complex64]) -> Self {
        let n = d.len();
        let mut cols: Vec<Vec<(usize, Complex64)>> = Vec::with_capacity(n);
        for (i, &v) in d.iter().enumerate() {
            cols.push(if v.norm() > DROP { vec![(i, v)] } else { Vec::new() });
        }
        Self::from_columns(n, cols)
    }

    /// Builds from per-column `(row, value)` lists; duplicates are summed.
    pub fn from_columns(nrows: usize, cols: Vec<Vec<(usize, Complex64)>>) -> Self {
        let ncols = cols.len();
        let mut colptr = Vec::with_capacity(ncols + 1);
        let mut rowidx = Vec::new();
        let mut values = Vec::new();
        colptr.push(0);
        for mut col in cols {
            col.sort_by_key(|(r, _)| *r);
            let mut k = 0;
            while k < col.len() {
                let r = col[k].0;
                let mut v = col[k].1;
                k += 1;
                while k < col.len() && col[k].0 == r {
                    v += col[k].1;
                    k += 1;
                }
                if v.norm() > DROP {
                    debug_assert!(r < nrows);
                    rowidx.push(r);
                    values.push(v);
                }
            }
            colptr.push(rowidx.len());
        }
        Csc { nrows, ncols, colptr, rowidx, values }
    }

    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, Complex64)]) -> Self {
        let mut cols: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); ncols];
        for &(r, c, v) in triplets {
            cols[c].push((r, v));
        }
        Self::from_columns(nrows, cols)
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        let cols = (0..m.ncols())
            .map(|c| {
                (0..m.nrows())
                    .filter_map(|r| {
                        let v = m[(r, c)];
                        (v.norm() > DROP).then_some((r, v))
                    })
                    .collect()
            })
            .collect();
        Self::from_columns(m.nrows(), cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn col(&self, c: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let (a, b) = (self.colptr[c], self.colptr[c + 1]);
        self.rowidx[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let (a, b) = (self.colptr[c], self.colptr[c + 1]);
        match self.rowidx[a..b].binary_search(&r) {
            Ok(k) => self.values[a + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for c in 0..self.ncols {
            for (r, v) in self.col(c) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Dense copy of the block `rows x cols` given as half-open ranges.
    pub fn dense_block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(rows.len(), cols.len());
        for (j, c) in cols.clone().enumerate() {
            for (r, v) in self.col(c) {
                if rows.contains(&r) {
                    m[(r - rows.start, j)] = v;
                }
            }
        }
        m
    }

    /// Keeps only the first `k` columns.
    pub fn first_cols(&self, k: usize) -> Csc {
        let k = k.min(self.ncols);
        let end = self.colptr[k];
        Csc {
            nrows: self.nrows,
            ncols: k,
            colptr: self.colptr[..=k].to_vec(),
            rowidx: self.rowidx[..end].to_vec(),
            values: self.values[..end].to_vec(),
        }
    }

    pub fn adjoint(&self) -> Csc {
        let mut cols: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.nrows];
        for c in 0..self.ncols {
            for (r, v) in self.col(c) {
                cols[r].push((c, v.conj()));
            }
        }
        Self::from_columns(self.ncols, cols)
    }

    pub fn scale(&self, s: Complex64) -> Csc {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Csc, s: Complex64) -> Csc {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let cols = (0..self.ncols)
            .map(|c| {
                let mut col: Vec<(usize, Complex64)> = self.col(c).collect();
                col.extend(other.col(c).map(|(r, v)| (r, v * s)));
                col
            })
            .collect();
        Self::from_columns(self.nrows, cols)
    }

    pub fn add(&self, other: &Csc) -> Csc {
        self.add_scaled(other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Csc) -> Csc {
        self.add_scaled(other, Complex64::new(-1.0, 0.0))
    }

    /// Sum of `s_k * m_k` in one pass.
    pub fn linear_combination(nrows: usize, ncols: usize, terms: &[(&Csc, Complex64)]) -> Csc {
        let cols = (0..ncols)
            .into_par_iter()
            .map(|c| {
                let mut col = Vec::new();
                for (m, s) in terms {
                    col.extend(m.col(c).map(|(r, v)| (r, v * *s)));
                }
                col
            })
            .collect();
        Self::from_columns(nrows, cols)
    }

    /// Product `self * other`, columns computed in parallel.
    pub fn mul(&self, other: &Csc) -> Csc {
        assert_eq!(self.ncols, other.nrows, "dimension mismatch in sparse product");
        let n = self.nrows;
        let cols: Vec<Vec<(usize, Complex64)>> = (0..other.ncols)
            .into_par_iter()
            .map_init(
                || (vec![Complex64::new(0.0, 0.0); n], vec![false; n], Vec::<usize>::new()),
                |(acc, mark, touched), c| {
                    for (k, b) in other.col(c) {
                        for (r, a) in self.col(k) {
                            if !mark[r] {
                                mark[r] = true;
                                touched.push(r);
                            }
                            acc[r] += a * b;
                        }
                    }
                    let mut col = Vec::with_capacity(touched.len());
                    for &r in touched.iter() {
                        col.push((r, acc[r]));
                        acc[r] = Complex64::new(0.0, 0.0);
                        mark[r] = false;
                    }
                    touched.clear();
                    col
                },
            )
            .collect();
        Self::from_columns(n, cols)
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        for (c, &xc) in x.iter().enumerate() {
            if xc.norm() == 0.0 {
                continue;
            }
            for (r, v) in self.col(c) {
                y[r] += v * xc;
            }
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |self - other|` entrywise.
    pub fn max_abs_diff(&self, other: &Csc) -> f64 {
        self.sub(other).max_abs()
    }

    /// Largest absolute column sum (the induced 1-norm).
    pub fn norm_one(&self) -> f64 {
        (0..self.ncols)
            .map(|c| self.col(c).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute row sum (the induced infinity-norm).
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.nrows];
        for (r, v) in self.rowidx.iter().zip(&self.values) {
            rows[*r] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}
