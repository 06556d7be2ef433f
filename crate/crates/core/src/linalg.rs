//! Small dense kernels on row-major matrices. The symmetric eigensolver is
//! cyclic Jacobi; rank and nullspace queries go through a one-sided Jacobi SVD.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::Error;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Matrix whose columns are the given vectors (all of length `rows`).
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for i in 0..rows {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Mat {
        Mat::from_fn(self.rows, end - start, |i, j| self[(i, start + j)])
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "transposed matvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            axpy(v[i], self.row(i), &mut out);
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |s, (x, y)| s + x * y)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(alpha: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|v| alpha * v).collect()
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi rotations.
///
/// Returns unsorted eigenvalues and the orthogonal matrix of eigenvectors
/// (column `k` belongs to eigenvalue `k`). Only the lower triangle is read.
pub fn jacobi_eigen(a: &Mat) -> Result<(Vec<f64>, Mat), Error> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "jacobi_eigen needs a square matrix");
    let mut w = Mat::from_fn(n, n, |i, j| if i >= j { a[(i, j)] } else { a[(j, i)] });
    let mut v = Mat::identity(n);
    if n <= 1 {
        return Ok((w.data.clone(), v));
    }
    let scale = w.frobenius_norm();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += w[(p, q)] * w[(p, q)];
            }
        }
        if libm::sqrt(off) <= f64::EPSILON * 1e-3 * scale {
            let eig = (0..n).map(|i| w[(i, i)]).collect();
            return Ok((eig, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = w[(p, p)];
                let aqq = w[(q, q)];
                // Rutishauser's stable rotation.
                let theta = (aqq - app) / (2.0 * apq);
                let t = {
                    let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                    s / (theta.abs() + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                let tau = s / (1.0 + c);
                w[(p, p)] = app - t * apq;
                w[(q, q)] = aqq + t * apq;
                w[(p, q)] = 0.0;
                w[(q, p)] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = w[(r, p)];
                        let arq = w[(r, q)];
                        let nrp = arp - s * (arq + tau * arp);
                        let nrq = arq + s * (arp - tau * arq);
                        w[(r, p)] = nrp;
                        w[(p, r)] = nrp;
                        w[(r, q)] = nrq;
                        w[(q, r)] = nrq;
                    }
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp - s * (vrq + tau * vrp);
                    v[(r, q)] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }
    Err(Error::EigenNonConvergence {
        sweeps: JACOBI_MAX_SWEEPS,
    })
}

/// Thin singular value decomposition `A V = W`, `σ_j = ‖W e_j‖`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Singular values, one per column of the input (unsorted, may be zero).
    pub singular_values: Vec<f64>,
    /// Orthogonal `cols × cols` right singular vectors.
    pub right: Mat,
}

impl Svd {
    pub fn max_singular_value(&self) -> f64 {
        self.singular_values.iter().fold(0.0, |m, s| m.max(*s))
    }

    fn is_null(&self, j: usize, rel_tol: f64) -> bool {
        let smax = self.max_singular_value();
        smax == 0.0 || self.singular_values[j] <= rel_tol * smax
    }

    /// Number of singular values above `rel_tol · σ_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        (0..self.singular_values.len())
            .filter(|&j| !self.is_null(j, rel_tol))
            .count()
    }

    /// Orthonormal basis (as columns) of the numerical nullspace.
    pub fn nullspace(&self, rel_tol: f64) -> Mat {
        let n = self.right.rows();
        let cols: Vec<Vec<f64>> = (0..self.singular_values.len())
            .filter(|&j| self.is_null(j, rel_tol))
            .map(|j| self.right.column(j))
            .collect();
        Mat::from_columns(n, &cols)
    }
}

/// One-sided (Hestenes) Jacobi SVD. Works for any shape, including zero rows.
pub fn jacobi_svd(a: &Mat) -> Result<Svd, Error> {
    let (r, n) = (a.rows(), a.cols());
    // Work with columns stored contiguously.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v = Mat::identity(n);
    let mut converged = n <= 1 || r == 0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = {
                    let s = if zeta >= 0.0 { 1.0 } else { -1.0 };
                    s / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..r {
                    let xp = cols[p][i];
                    let xq = cols[q][i];
                    cols[p][i] = c * xp - s * xq;
                    cols[q][i] = s * xp + c * xq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::EigenNonConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }
    Ok(Svd {
        singular_values: cols.iter().map(|c| norm(c)).collect(),
        right: v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalizes_2x2_swap() {
        let a = Mat::from_row_major(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let (mut eig, v) = jacobi_eigen(&a).unwrap();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((eig[0] - 1.0).abs() < 1e-15 && (eig[1] + 1.0).abs() < 1e-15);
        let vtv = v.transpose().matmul(&v);
        assert!(vtv.sub(&Mat::identity(2)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn svd_rank_and_nullspace() {
        // rank-1 2x3 matrix
        let a = Mat::from_row_major(2, 3, vec![1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        let svd = jacobi_svd(&a).unwrap();
        assert_eq!(svd.rank(1e-10), 1);
        let z = svd.nullspace(1e-10);
        assert_eq!(z.cols(), 2);
        assert!(a.matmul(&z).max_abs() < 1e-12);
        let ztz = z.transpose().matmul(&z);
        assert!(ztz.sub(&Mat::identity(2)).max_abs() < 1e-12);
    }

    #[test]
    fn svd_without_rows_is_all_null() {
        let a = Mat::zeros(0, 3);
        let svd = jacobi_svd(&a).unwrap();
        assert_eq!(svd.rank(1e-8), 0);
        assert_eq!(svd.nullspace(1e-8).cols(), 3);
    }
}
