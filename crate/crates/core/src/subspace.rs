//! Critical and perturbed critical subspaces, and the weak-constant-rank
//! (WCR) diagnostic.
//!
//! Both subspaces are nullspaces of one stacked row system evaluated at `x`:
//! the gradients `∇hᵢ(x)` and the vectors `v̄ᵢⱼ(x)_ℓ = ūᵢᵀ ∂_ℓG(x) ūⱼ`
//! (`i <= j`), where the `ū` span the eigenvectors of the `|β̄|` smallest
//! eigenvalues of `G(x)` and `|β̄|` is the kernel dimension at the reference
//! point.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{jacobi_svd, norm, Mat};
use crate::merit::ConeState;
use crate::problem::{EvalBundle, Model};
use crate::spectral::{decompose, EigTol, SymSpectrum};

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Rows with norm below this are treated as zero and dropped.
const ZERO_ROW: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    /// `n × q`, orthonormal columns.
    pub z: Mat,
    pub ref_point: Vec<f64>,
    pub eval_point: Vec<f64>,
    pub beta_dim: usize,
    pub constraint_rank: usize,
    /// The `|β̄|`-th and `(|β̄|+1)`-th smallest eigenvalues of `G(x)` are
    /// closer than `10·τ_eig`, so the eigenvector selection is unstable.
    pub unstable: bool,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.z.cols()
    }

    /// Orthogonal projector `Z Zᵀ`.
    pub fn projector(&self) -> Mat {
        self.z.matmul(&self.z.transpose())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WcrReport {
    pub center_rank: usize,
    pub sampled_ranks: Vec<usize>,
    pub radius: f64,
    pub holds: bool,
}

/// Kernel classification of `G(x̄)` at a reference point.
#[derive(Debug, Clone)]
pub struct ReferenceKernel {
    pub spectrum: SymSpectrum,
    /// Threshold below which eigenvalues of `G(x̄)` count as active.
    pub active_tol: f64,
    /// `|β̄|`: number of eigenvalues `<= active_tol` (the smallest ones).
    pub beta_dim: usize,
}

impl ReferenceKernel {
    /// Indices of the inactive (clearly positive) eigenvalues, `ᾱ`.
    pub fn alpha(&self) -> Vec<usize> {
        (0..self.spectrum.order() - self.beta_dim).collect()
    }
}

/// Classifies the kernel of `G(x̄)`. The threshold is the default eigenvalue
/// tolerance, widened to `sqrt(‖Π(−G(x̄))‖_F)` when the reference point is
/// slightly infeasible (e.g. a penalty iterate).
pub fn reference_kernel<M: Model + ?Sized>(model: &M, x_ref: &[f64]) -> Result<ReferenceKernel> {
    let b = model.eval(x_ref)?;
    reference_kernel_from(&b)
}

pub(crate) fn reference_kernel_from(b: &EvalBundle) -> Result<ReferenceKernel> {
    let cone = ConeState::new(b)?;
    let infeas = cone.neg_part.frobenius_norm();
    let active_tol = cone.spectrum.tol_used.max(libm::sqrt(infeas));
    let beta_dim = cone.spectrum.eigenvalues.iter().filter(|&&l| l <= active_tol).count();
    Ok(ReferenceKernel {
        spectrum: cone.spectrum,
        active_tol,
        beta_dim,
    })
}

/// Orthonormal basis of the invariant subspace of the `q` smallest
/// eigenvalues of `G(x)`.
pub fn smallest_eig_basis<M: Model + ?Sized>(model: &M, x: &[f64], q: usize) -> Result<Mat> {
    let b = model.eval(x)?;
    let m = b.g_val.order();
    if q > m {
        return Err(Error::Dimension {
            what: "smallest-eigenvalue basis size (at most m)",
            expected: m,
            got: q,
        });
    }
    let s = decompose(&b.g_val, EigTol::default())?;
    Ok(s.basis.columns(m - q, m))
}

fn constraint_rows(b: &EvalBundle, u: &Mat) -> Mat {
    let n = b.x.len();
    let mut rows: Vec<Vec<f64>> = (0..b.jac_h.rows()).map(|i| b.jac_h.row(i).to_vec()).collect();
    let q = u.cols();
    let cols: Vec<Vec<f64>> = (0..q).map(|k| u.column(k)).collect();
    for i in 0..q {
        for j in i..q {
            rows.push(b.dg.iter().map(|g| g.bilinear(&cols[i], &cols[j])).collect());
        }
    }
    let kept: Vec<f64> = rows
        .into_iter()
        .filter_map(|r| {
            let s = norm(&r);
            (s >= ZERO_ROW).then(|| r.into_iter().map(|v| v / s).collect::<Vec<_>>())
        })
        .flatten()
        .collect();
    Mat::from_row_major(kept.len() / n.max(1), n, kept)
}

fn unstable_split(spectrum: &SymSpectrum, beta_dim: usize) -> bool {
    let m = spectrum.order();
    if beta_dim == 0 || beta_dim >= m {
        return false;
    }
    let l = &spectrum.eigenvalues;
    l[m - beta_dim - 1] - l[m - beta_dim] < 10.0 * spectrum.tol_used
}

fn subspace_from(b: &EvalBundle, u: &Mat, x_ref: &[f64], rank_tol: f64, unstable: bool) -> Result<SubspaceBasis> {
    let rows = constraint_rows(b, u);
    let svd = jacobi_svd(&rows)?;
    let z = svd.nullspace(rank_tol);
    let constraint_rank = if rows.rows() == 0 { 0 } else { svd.rank(rank_tol) };
    Ok(SubspaceBasis {
        z,
        ref_point: x_ref.to_vec(),
        eval_point: b.x.clone(),
        beta_dim: u.cols(),
        constraint_rank,
        unstable,
    })
}

pub(crate) fn perturbed_from(b: &EvalBundle, x_ref: &[f64], beta_dim: usize, rank_tol: f64) -> Result<SubspaceBasis> {
    let m = b.g_val.order();
    let s = decompose(&b.g_val, EigTol::default())?;
    let u = s.basis.columns(m - beta_dim, m);
    subspace_from(b, &u, x_ref, rank_tol, unstable_split(&s, beta_dim))
}

/// Perturbed critical subspace
/// `S(x, x̄) = {d : Dh(x)d = 0, Ūᵀ DG(x)[d] Ū = 0}`.
pub fn perturbed_subspace_basis<M: Model + ?Sized>(
    model: &M,
    x: &[f64],
    x_ref: &[f64],
    rank_tol: f64,
) -> Result<SubspaceBasis> {
    check_dim("reference point", model.dims().n, x_ref.len())?;
    let kernel = reference_kernel(model, x_ref)?;
    let b = model.eval(x)?;
    perturbed_from(&b, x_ref, kernel.beta_dim, rank_tol)
}

/// Same subspace as [`perturbed_subspace_basis`] but with a caller-supplied
/// `m × |β̄|` orthonormal basis `Ū` of the small-eigenvalue subspace.
pub fn perturbed_subspace_with_basis<M: Model + ?Sized>(
    model: &M,
    x: &[f64],
    x_ref: &[f64],
    u_beta: &Mat,
    rank_tol: f64,
) -> Result<SubspaceBasis> {
    let b = model.eval(x)?;
    check_dim("kernel basis rows", b.g_val.order(), u_beta.rows())?;
    subspace_from(&b, u_beta, x_ref, rank_tol, false)
}

/// Critical subspace `S(x̄)` (the perturbed subspace evaluated at `x = x̄`).
pub fn critical_subspace_basis<M: Model + ?Sized>(model: &M, x_ref: &[f64], rank_tol: f64) -> Result<SubspaceBasis> {
    perturbed_subspace_basis(model, x_ref, x_ref, rank_tol)
}

fn constraint_rank_at(b: &EvalBundle, beta_dim: usize, rank_tol: f64) -> Result<usize> {
    Ok(perturbed_from(b, &b.x, beta_dim, rank_tol)?.constraint_rank)
}

/// Samples the rank of `{v̄ᵢⱼ(x)} ∪ {∇hᵢ(x)}` at `x̄` and at `n_samples`
/// points drawn uniformly from the ball of the given radius.
pub fn wcr_diagnostic<M: Model + ?Sized>(
    model: &M,
    x_ref: &[f64],
    radius: f64,
    n_samples: usize,
    rank_tol: f64,
    seed: u64,
) -> Result<WcrReport> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidConfig(alloc::format!(
            "WCR radius must be positive, got {radius}"
        )));
    }
    let n = model.dims().n;
    check_dim("reference point", n, x_ref.len())?;
    let center = model.eval(x_ref)?;
    let kernel = reference_kernel_from(&center)?;
    let center_rank = constraint_rank_at(&center, kernel.beta_dim, rank_tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled_ranks = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let offset = loop {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            if norm(&v) <= 1.0 {
                break v;
            }
        };
        let x: Vec<f64> = x_ref.iter().zip(&offset).map(|(a, o)| a + radius * o).collect();
        let b = model.eval(&x)?;
        sampled_ranks.push(constraint_rank_at(&b, kernel.beta_dim, rank_tol)?);
    }
    let holds = sampled_ranks.iter().all(|&r| r == center_rank);
    Ok(WcrReport {
        center_rank,
        sampled_ranks,
        radius,
        holds,
    })
}
