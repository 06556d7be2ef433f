//! Dense symmetric-matrix calculus around the PSD cone.
//!
//! Eigendecompositions come ordered with their sign index sets. On top of
//! them sit the projection and one fixed element of its Clarke generalized
//! Jacobian.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, Mat};

/// Symmetric matrix stored as its packed lower triangle, row-major:
/// `(0,0), (1,0), (1,1), (2,0), ...`.
///
/// Order 0 is allowed and represents an absent cone block.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    packed: Vec<f64>,
}

#[inline]
pub const fn packed_len(order: usize) -> usize {
    order * (order + 1) / 2
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymMatrix {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            packed: vec![0.0; packed_len(order)],
        }
    }

    pub fn identity(order: usize) -> Self {
        Self::diag(&vec![1.0; order])
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    pub fn from_packed(order: usize, packed: Vec<f64>) -> Result<Self> {
        if packed.len() != packed_len(order) {
            return Err(Error::Dimension {
                what: "packed symmetric matrix",
                expected: packed_len(order),
                got: packed.len(),
            });
        }
        Ok(Self { order, packed })
    }

    /// Fills the lower triangle from `f(i, j)` with `i >= j`.
    pub fn from_lower_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut packed = Vec::with_capacity(packed_len(order));
        for i in 0..order {
            for j in 0..=i {
                packed.push(f(i, j));
            }
        }
        Self { order, packed }
    }

    /// Symmetric part `(A + Aᵀ)/2` of a square dense matrix.
    pub fn from_dense(a: &Mat) -> Self {
        assert_eq!(a.rows(), a.cols(), "from_dense needs a square matrix");
        Self::from_lower_fn(a.rows(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
    }

    /// Rank-one matrix `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        Self::from_lower_fn(v.len(), |i, j| v[i] * v[j])
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.packed[packed_index(i, j)] = v;
    }

    pub fn to_dense(&self) -> Mat {
        Mat::from_fn(self.order, self.order, |i, j| self.get(i, j))
    }

    fn check_same_order(&self, other: &SymMatrix) -> Result<()> {
        crate::error::check_dim("symmetric matrix order", self.order, other.order)
    }

    fn zip_with(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> Result<SymMatrix> {
        self.check_same_order(other)?;
        Ok(SymMatrix {
            order: self.order,
            packed: self.packed.iter().zip(&other.packed).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: f64) -> SymMatrix {
        SymMatrix {
            order: self.order,
            packed: self.packed.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self += alpha * other`; panics on order mismatch.
    pub fn axpy(&mut self, alpha: f64, other: &SymMatrix) {
        assert_eq!(self.order, other.order, "axpy order mismatch");
        for (a, b) in self.packed.iter_mut().zip(&other.packed) {
            *a += alpha * b;
        }
    }

    pub fn neg(&self) -> SymMatrix {
        self.scale(-1.0)
    }

    /// Trace inner product `⟨A, B⟩ = tr(AB)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.order, other.order, "inner product order mismatch");
        let mut s = 0.0;
        let mut k = 0;
        for i in 0..self.order {
            for j in 0..=i {
                let w = if i == j { 1.0 } else { 2.0 };
                s += w * self.packed[k] * other.packed[k];
                k += 1;
            }
        }
        s
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.inner(self))
    }

    /// Dense product `self · other` (not symmetric in general).
    pub fn mul(&self, other: &SymMatrix) -> Mat {
        self.to_dense().matmul(&other.to_dense())
    }

    /// `Uᵀ · self · U` for a dense `order × k` matrix `U`.
    pub fn congruence(&self, u: &Mat) -> SymMatrix {
        let au = self.to_dense().matmul(u);
        SymMatrix::from_dense(&u.transpose().matmul(&au))
    }

    /// `uᵀ · self · v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.order {
            for j in 0..self.order {
                s += u[i] * self.get(i, j) * v[j];
            }
        }
        s
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Block-diagonal matrix `diag(a, b)`.
    pub fn block_diag(a: &SymMatrix, b: &SymMatrix) -> SymMatrix {
        let (na, nb) = (a.order, b.order);
        SymMatrix::from_lower_fn(na + nb, |i, j| {
            if i < na {
                a.get(i, j)
            } else if j >= na {
                b.get(i - na, j - na)
            } else {
                0.0
            }
        })
    }

    pub fn is_finite(&self) -> bool {
        self.packed.iter().all(|v| v.is_finite())
    }

    fn max_abs(&self) -> f64 {
        self.packed.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Eigenvalue tolerance used to classify eigenvalues as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigTol {
    /// Fixed absolute threshold.
    Absolute(f64),
    /// `factor · max(1, |λ|_max)`.
    Relative(f64),
}

impl Default for EigTol {
    fn default() -> Self {
        EigTol::Relative(1e-8)
    }
}

impl From<f64> for EigTol {
    fn from(t: f64) -> Self {
        EigTol::Absolute(t)
    }
}

impl EigTol {
    pub fn resolve(self, max_abs_eig: f64) -> f64 {
        match self {
            EigTol::Absolute(t) => t,
            EigTol::Relative(f) => f * max_abs_eig.max(1.0),
        }
    }
}

/// Ordered spectral decomposition `M = U diag(λ) Uᵀ` with `λ` non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Orthogonal matrix; column `k` is the eigenvector of `eigenvalues[k]`.
    pub basis: Mat,
    /// Indices of eigenvalues `> tol_used`.
    pub alpha: Vec<usize>,
    /// Indices of eigenvalues with `|λ| <= tol_used`.
    pub beta: Vec<usize>,
    /// Indices of eigenvalues `< -tol_used`.
    pub gamma: Vec<usize>,
    pub tol_used: f64,
}

impl SymSpectrum {
    pub fn order(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `U diag(f(λ)) Uᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let u = &self.basis;
        let vals: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        SymMatrix::from_lower_fn(self.order(), |i, j| {
            vals.iter().enumerate().map(|(k, l)| u[(i, k)] * l * u[(j, k)]).sum()
        })
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }

    /// Columns of `U` at the given indices.
    pub fn columns(&self, idx: &[usize]) -> Mat {
        let cols: Vec<Vec<f64>> = idx.iter().map(|&k| self.basis.column(k)).collect();
        Mat::from_columns(self.order(), &cols)
    }
}

fn normalize_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Ordered eigendecomposition with sign index sets.
///
/// Eigenvalues are sorted non-increasing; exact ties are ordered by the
/// sign-normalized eigenvector columns in decreasing lexicographic order, so
/// the result is a deterministic function of `m`.
pub fn decompose(m: &SymMatrix, tol: impl Into<EigTol>) -> Result<SymSpectrum> {
    let tol = tol.into();
    if !m.is_finite() {
        return Err(Error::InvalidInstance(format!(
            "non-finite entry in a symmetric matrix of order {}",
            m.order()
        )));
    }
    let n = m.order();
    let (vals, vecs) = jacobi_eigen(&m.to_dense())?;
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let mut c = vecs.column(k);
            normalize_sign(&mut c);
            (vals[k], c)
        })
        .collect();
    pairs.sort_by(|a, b| match b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal) {
        Ordering::Equal => lex_cmp(&b.1, &a.1),
        o => o,
    });
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let cols: Vec<Vec<f64>> = pairs.into_iter().map(|p| p.1).collect();
    let basis = Mat::from_columns(n, &cols);
    let max_abs = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol_used = tol.resolve(max_abs);
    let (mut alpha, mut beta, mut gamma) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &l) in eigenvalues.iter().enumerate() {
        if l > tol_used {
            alpha.push(i);
        } else if l < -tol_used {
            gamma.push(i);
        } else {
            beta.push(i);
        }
    }
    Ok(SymSpectrum {
        eigenvalues,
        basis,
        alpha,
        beta,
        gamma,
        tol_used,
    })
}

/// Projection onto the PSD cone, `U diag([λ]_+) Uᵀ`.
pub fn project_psd(m: &SymMatrix) -> Result<SymMatrix> {
    let s = decompose(m, EigTol::default())?;
    Ok(project_from_spectrum(&s))
}

pub(crate) fn project_from_spectrum(s: &SymSpectrum) -> SymMatrix {
    if s.eigenvalues.iter().all(|&l| l <= 0.0) {
        return SymMatrix::zeros(s.order());
    }
    s.reconstruct_with(|l| l.max(0.0))
}

/// Moore-Penrose pseudoinverse with eigenvalues `|λ| <= τ` treated as zero.
pub fn pseudoinverse(m: &SymMatrix, tol: impl Into<EigTol>) -> Result<SymMatrix> {
    let s = decompose(m, tol)?;
    let t = s.tol_used;
    Ok(s.reconstruct_with(|l| if l.abs() <= t { 0.0 } else { 1.0 / l }))
}

/// Jordan product `(AB + BA)/2`.
pub fn jordan(a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    a.check_same_order(b)?;
    let ab = a.mul(b);
    Ok(SymMatrix::from_dense(&ab))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Pos,
    Zero,
    Neg,
}

/// One fixed element `V ∈ ∂Π_{S⁺}(-M)` of the Clarke generalized Jacobian of
/// the PSD projection, built from the ordered spectrum of `M`.
///
/// In the eigenbasis of `M`, `V[H] = U (W ⊙ UᵀHU) Uᵀ` with `W` zero on the
/// positive×(positive ∪ zero) blocks, `|λⱼ|/(λᵢ + |λⱼ|)` on positive×negative,
/// and one elsewhere. The zero×zero block takes the identity element.
#[derive(Debug, Clone)]
pub struct ClarkeElement {
    spectrum: SymSpectrum,
    weights: SymMatrix,
}

impl ClarkeElement {
    pub fn at(m: &SymMatrix, tol: impl Into<EigTol>) -> Result<Self> {
        Ok(Self::from_spectrum(decompose(m, tol)?))
    }

    pub fn from_spectrum(spectrum: SymSpectrum) -> Self {
        let n = spectrum.order();
        let mut class = vec![Class::Zero; n];
        for &i in &spectrum.alpha {
            class[i] = Class::Pos;
        }
        for &i in &spectrum.gamma {
            class[i] = Class::Neg;
        }
        let lam = &spectrum.eigenvalues;
        let weights = SymMatrix::from_lower_fn(n, |i, j| match (class[i], class[j]) {
            (Class::Pos, Class::Pos) | (Class::Pos, Class::Zero) | (Class::Zero, Class::Pos) => 0.0,
            (Class::Pos, Class::Neg) => lam[j].abs() / (lam[i] + lam[j].abs()),
            (Class::Neg, Class::Pos) => lam[i].abs() / (lam[j] + lam[i].abs()),
            _ => 1.0,
        });
        Self { spectrum, weights }
    }

    pub fn spectrum(&self) -> &SymSpectrum {
        &self.spectrum
    }

    /// `true` when `V` is the zero map (`M ≻ 0` under the tolerance).
    pub fn is_zero(&self) -> bool {
        self.weights.max_abs() == 0.0
    }

    pub fn apply(&self, h: &SymMatrix) -> Result<SymMatrix> {
        crate::error::check_dim("Clarke element argument order", self.spectrum.order(), h.order())?;
        if self.is_zero() {
            return Ok(SymMatrix::zeros(h.order()));
        }
        let u = &self.spectrum.basis;
        let ht = h.congruence(u);
        let n = h.order();
        let wt = SymMatrix::from_lower_fn(n, |i, j| self.weights.get(i, j) * ht.get(i, j));
        Ok(wt.congruence(&u.transpose()))
    }
}

/// Applies the fixed Clarke element of `Π_{S⁺}` at `-M` to `H`.
pub fn clarke_psd_apply(m: &SymMatrix, h: &SymMatrix, tol: impl Into<EigTol>) -> Result<SymMatrix> {
    crate::error::check_dim("Clarke element argument order", m.order(), h.order())?;
    ClarkeElement::at(m, tol)?.apply(h)
}
