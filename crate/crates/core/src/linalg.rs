//! Dense linear algebra kernels.
//!
//! Everything here is deliberately small and allocation-light: row-major
//! matrices over `f64`, an LDLᵀ factorization for symmetric quasi-definite
//! systems (the KKT matrices produced by the QP solver), and a cyclic Jacobi
//! iteration for symmetric eigenvalues (used for convexity checks). Problem
//! sizes are tens of variables, so O(n³) dense algorithms are the right tool.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from row slices. All rows must have equal length.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "all rows must have the same length");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    /// Borrow row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable borrow of row `i`.
    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `out = self * x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for i in 0..self.rows {
            out[i] = dot(self.row(i), x);
        }
    }

    /// `out += scale * selfᵀ * y`.
    pub fn matvec_t_acc(&self, y: &[f64], scale: f64, out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for i in 0..self.rows {
            let w = scale * y[i];
            if w != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.row(i)) {
                    *o += w * a;
                }
            }
        }
    }

    /// Largest absolute deviation from symmetry, `max |A_ij - A_ji|`.
    pub fn symmetry_gap(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let mut gap = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                gap = gap.max((self.at(i, j) - self.at(j, i)).abs());
            }
        }
        gap
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
    }
}

/// Dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Infinity norm.
#[inline]
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|&x| x * x).sum())
}

/// LDLᵀ factorization of a symmetric quasi-definite matrix.
///
/// Quasi-definite matrices (block form `[P, Aᵀ; A, -R]` with `P ⪰ 0`,
/// `R ≻ 0` plus a positive shift on the top-left block) admit a stable
/// LDLᵀ factorization without pivoting; that is exactly the shape of the
/// solver's KKT systems.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    /// Unit lower-triangular factor, packed row-major; diagonal omitted.
    l: Vec<f64>,
    /// Diagonal of D.
    d: Vec<f64>,
}

/// Factorization failure: a pivot collapsed to (near) zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularMatrix {
    /// Index of the failing pivot.
    pub pivot: usize,
}

impl LdlFactor {
    /// Factors symmetric `a` (only the lower triangle is read).
    pub fn factor(a: &Mat) -> Result<Self, SingularMatrix> {
        assert_eq!(a.rows(), a.cols(), "LDLT needs a square matrix");
        let n = a.rows();
        let mut l = vec![0.0; n * n];
        let mut d = vec![0.0; n];
        let scale = a.max_abs().max(1.0);
        let tiny = f64::EPSILON * scale * (n as f64).max(1.0);
        for j in 0..n {
            let mut dj = a.at(j, j);
            for k in 0..j {
                dj -= l[j * n + k] * l[j * n + k] * d[k];
            }
            if dj.abs() <= tiny {
                return Err(SingularMatrix { pivot: j });
            }
            d[j] = dj;
            for i in (j + 1)..n {
                let mut v = a.at(i, j);
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k] * d[k];
                }
                l[i * n + j] = v / dj;
            }
        }
        Ok(LdlFactor { n, l, d })
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= self.l[i * n + k] * b[k];
            }
            b[i] = v;
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in (i + 1)..n {
                v -= self.l[k * n + i] * b[k];
            }
            b[i] = v;
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix, via cyclic Jacobi rotations.
///
/// Converges quadratically; 30 sweeps is far more than needed for the
/// matrix orders (≲ 100) seen here.
pub fn min_symmetric_eigenvalue(a: &Mat) -> f64 {
    assert_eq!(a.rows(), a.cols(), "eigenvalues need a square matrix");
    let n = a.rows();
    if n == 0 {
        return 0.0;
    }
    let mut w = a.clone();
    // Symmetrize first so tiny asymmetries cannot bias the rotations.
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (w.at(i, j) + w.at(j, i));
            w.set(i, j, s);
            w.set(j, i, s);
        }
    }
    let scale = w.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let tol = 1e-14 * scale;
    for _sweep in 0..30 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(w.at(p, q).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w.at(p, q);
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = w.at(p, p);
                let aqq = w.at(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::hypot(1.0, theta))
                } else {
                    1.0 / (theta - math::hypot(1.0, theta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = w.at(k, p);
                    let akq = w.at(k, q);
                    w.set(k, p, c * akp - s * akq);
                    w.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = w.at(p, k);
                    let aqk = w.at(q, k);
                    w.set(p, k, c * apk - s * aqk);
                    w.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut min = f64::INFINITY;
    for i in 0..n {
        min = min.min(w.at(i, i));
    }
    min
}
