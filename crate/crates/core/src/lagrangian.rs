//! Lagrangian `L(x, μ, Ω) = f − ⟨h, μ⟩ − ⟨G, Ω⟩` and its sigma-term.
//! Multiplier estimates from a penalty iterate are here as well.

use alloc::vec::Vec;

use crate::error::{check_dim, Result};
use crate::linalg::dot;
use crate::merit::ConeState;
use crate::problem::{EvalBundle, Model};
use crate::spectral::{pseudoinverse, EigTol, SymMatrix};

/// One outer step with its multipliers and schedule values.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub mu: Vec<f64>,
    pub omega: SymMatrix,
    pub rho: f64,
    pub eps: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianBundle {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SymMatrix,
}

pub(crate) fn lagrangian_from(b: &EvalBundle, mu: &[f64], omega: &SymMatrix) -> LagrangianBundle {
    let value = b.f_val - dot(&b.h_val, mu) - b.g_val.inner(omega);
    let mut gradient = b.grad_f.clone();
    let jt_mu = b.jac_h.tr_matvec(mu);
    let dg_om = b.dg_adjoint(omega);
    for (i, g) in gradient.iter_mut().enumerate() {
        *g -= jt_mu[i] + dg_om[i];
    }
    let mut hessian = b.hess_f.clone();
    for (mi, qi) in mu.iter().zip(&b.hess_h) {
        hessian.axpy(-mi, qi);
    }
    if !b.d2g.is_empty() {
        hessian.axpy(-1.0, &b.d2g_adjoint(omega));
    }
    LagrangianBundle {
        value,
        gradient,
        hessian,
    }
}

fn check_multipliers<M: Model + ?Sized>(model: &M, x: &[f64], mu: &[f64], omega: &SymMatrix) -> Result<()> {
    let d = model.dims();
    check_dim("point", d.n, x.len())?;
    check_dim("equality multiplier", d.p, mu.len())?;
    check_dim("cone multiplier order", d.m, omega.order())
}

pub fn lagrangian_eval<M: Model + ?Sized>(
    model: &M,
    x: &[f64],
    mu: &[f64],
    omega: &SymMatrix,
) -> Result<LagrangianBundle> {
    check_multipliers(model, x, mu, omega)?;
    Ok(lagrangian_from(&model.eval(x)?, mu, omega))
}

pub(crate) fn sigma_from(b: &EvalBundle, omega: &SymMatrix, tol: EigTol) -> Result<SymMatrix> {
    let n = b.x.len();
    if omega.packed().iter().all(|&v| v == 0.0) {
        return Ok(SymMatrix::zeros(n));
    }
    let gp = pseudoinverse(&b.g_val, tol)?.to_dense();
    let om = omega.to_dense();
    // σ_ij = 2 tr(Ω ∂ᵢG G⁺ ∂ⱼG)
    let left: Vec<_> = b.dg.iter().map(|gi| om.matmul(&gi.to_dense()).matmul(&gp)).collect();
    let right: Vec<_> = b.dg.iter().map(|gj| gj.to_dense()).collect();
    let trace_prod = |a: &crate::linalg::Mat, c: &crate::linalg::Mat| -> f64 {
        let k = a.rows();
        let mut s = 0.0;
        for r in 0..k {
            for q in 0..k {
                s += a[(r, q)] * c[(q, r)];
            }
        }
        s
    };
    Ok(SymMatrix::from_lower_fn(n, |i, j| {
        trace_prod(&left[i], &right[j]) + trace_prod(&left[j], &right[i])
    }))
}

/// Sigma-term `σ(x, Ω)_ij = 2⟨Ω, ∂ᵢG(x) G(x)⁺ ∂ⱼG(x)⟩`.
///
/// The returned matrix is the symmetric part, which carries the whole
/// quadratic form `dᵀσd`.
pub fn sigma_term<M: Model + ?Sized>(
    model: &M,
    x: &[f64],
    omega: &SymMatrix,
    tol: impl Into<EigTol>,
) -> Result<SymMatrix> {
    let d = model.dims();
    check_dim("point", d.n, x.len())?;
    check_dim("cone multiplier order", d.m, omega.order())?;
    sigma_from(&model.eval(x)?, omega, tol.into())
}

pub(crate) fn multipliers_from(b: &EvalBundle, cone: &ConeState, rho: f64) -> (Vec<f64>, SymMatrix) {
    let mu = b.h_val.iter().map(|h| -rho * h).collect();
    (mu, cone.neg_part.scale(rho))
}

/// `μ = −ρh(x)`, `Ω = ρΠ_{S⁺}(−G(x))`.
pub fn multipliers_from_penalty<M: Model + ?Sized>(model: &M, x: &[f64], rho: f64) -> Result<(Vec<f64>, SymMatrix)> {
    let b = model.eval(x)?;
    let cone = ConeState::new(&b)?;
    Ok(multipliers_from(&b, &cone, rho))
}
