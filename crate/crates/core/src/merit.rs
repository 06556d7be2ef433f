//! Constraint-violation merit `P` and the penalty objective `φ_ρ = f + ρP`,
//! with an explicit generalized-Hessian element of `φ_ρ`.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm, sub};
use crate::problem::{EvalBundle, Model};
use crate::spectral::{decompose, ClarkeElement, EigTol, SymMatrix, SymSpectrum};

/// `P(x)` and `∇P(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// `φ_ρ(x)` and its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub rho: f64,
}

/// Cone quantities shared by the merit computations at one point.
#[derive(Debug, Clone)]
pub(crate) struct ConeState {
    pub spectrum: SymSpectrum,
    /// `Π_{S⁺}(-G(x))`
    pub neg_part: SymMatrix,
}

impl ConeState {
    pub fn new(bundle: &EvalBundle) -> Result<Self> {
        let spectrum = decompose(&bundle.g_val, EigTol::default())?;
        let neg_part = if spectrum.eigenvalues.iter().all(|&l| l >= 0.0) {
            SymMatrix::zeros(spectrum.order())
        } else {
            spectrum.reconstruct_with(|l| (-l).max(0.0))
        };
        Ok(Self { spectrum, neg_part })
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(alloc::format!(
            "penalty parameter must be positive, got {rho}"
        )))
    }
}

pub(crate) fn violation_from(bundle: &EvalBundle, cone: &ConeState) -> Violation {
    let value = 0.5 * (dot(&bundle.h_val, &bundle.h_val) + cone.neg_part.inner(&cone.neg_part));
    let mut gradient = bundle.jac_h.tr_matvec(&bundle.h_val);
    for (g, c) in gradient.iter_mut().zip(bundle.dg_adjoint(&cone.neg_part)) {
        *g -= c;
    }
    Violation { value, gradient }
}

/// `P(x) = ½(‖h(x)‖² + ‖Π_{S⁺}(−G(x))‖²_F)` and
/// `∇P(x) = Dh(x)ᵀh(x) − DG(x)*[Π_{S⁺}(−G(x))]`.
pub fn violation_eval<M: Model + ?Sized>(model: &M, x: &[f64]) -> Result<Violation> {
    let bundle = model.eval(x)?;
    let cone = ConeState::new(&bundle)?;
    Ok(violation_from(&bundle, &cone))
}

pub(crate) fn penalty_from(bundle: &EvalBundle, cone: &ConeState, rho: f64) -> PenaltyEval {
    let v = violation_from(bundle, cone);
    let mut gradient = bundle.grad_f.clone();
    for (g, vp) in gradient.iter_mut().zip(&v.gradient) {
        *g += rho * vp;
    }
    PenaltyEval {
        value: bundle.f_val + rho * v.value,
        gradient,
        rho,
    }
}

pub fn penalty_eval<M: Model + ?Sized>(model: &M, x: &[f64], rho: f64) -> Result<PenaltyEval> {
    check_rho(rho)?;
    let bundle = model.eval(x)?;
    let cone = ConeState::new(&bundle)?;
    Ok(penalty_from(&bundle, &cone, rho))
}

/// Cone-curvature matrix `K_ab = ρ⟨∂ₐG, V[∂_bG]⟩` for the fixed Clarke element
/// `V` at `-G(x)`, symmetrized.
pub(crate) fn cone_curvature(bundle: &EvalBundle, cone: &ConeState, rho: f64) -> Result<SymMatrix> {
    let n = bundle.x.len();
    let v = ClarkeElement::from_spectrum(cone.spectrum.clone());
    if v.is_zero() {
        return Ok(SymMatrix::zeros(n));
    }
    let applied: Vec<SymMatrix> = bundle.dg.iter().map(|g| v.apply(g)).collect::<Result<_>>()?;
    Ok(SymMatrix::from_lower_fn(n, |a, b| {
        0.5 * rho * (bundle.dg[a].inner(&applied[b]) + bundle.dg[b].inner(&applied[a]))
    }))
}

pub(crate) fn penalty_hessian_from(bundle: &EvalBundle, cone: &ConeState, rho: f64) -> Result<SymMatrix> {
    let mut h = bundle.hess_f.clone();
    // −Σ μᵢ ∇²hᵢ with μ = −ρh
    for (hi, qi) in bundle.h_val.iter().zip(&bundle.hess_h) {
        h.axpy(rho * hi, qi);
    }
    // −D²G*[Ω] with Ω = ρΠ(−G)
    if !bundle.d2g.is_empty() {
        h.axpy(-rho, &bundle.d2g_adjoint(&cone.neg_part));
    }
    let j = &bundle.jac_h;
    let n = bundle.x.len();
    if j.rows() > 0 {
        let jtj = SymMatrix::from_lower_fn(n, |a, b| (0..j.rows()).map(|r| j[(r, a)] * j[(r, b)]).sum());
        h.axpy(rho, &jtj);
    }
    h.axpy(1.0, &cone_curvature(bundle, cone, rho)?);
    Ok(h)
}

/// Explicit element `H̄ ∈ ∂²φ_ρ(x)`:
/// `∇²f − Σμᵢ∇²hᵢ − D²G*[Ω] + ρDhᵀDh + K` with `μ = −ρh`, `Ω = ρΠ(−G)`.
pub fn penalty_hessian_element<M: Model + ?Sized>(model: &M, x: &[f64], rho: f64) -> Result<SymMatrix> {
    check_rho(rho)?;
    let bundle = model.eval(x)?;
    let cone = ConeState::new(&bundle)?;
    penalty_hessian_from(&bundle, &cone, rho)
}

/// `Ψ(x) = φ_ρ(x) + ¼‖x − x_ref‖⁴` and its gradient.
pub fn regularized_penalty_eval<M: Model + ?Sized>(
    model: &M,
    x: &[f64],
    x_ref: &[f64],
    rho: f64,
) -> Result<(f64, Vec<f64>)> {
    check_dim("reference point", x.len(), x_ref.len())?;
    let pe = penalty_eval(model, x, rho)?;
    let diff = sub(x, x_ref);
    let r2 = dot(&diff, &diff);
    let value = pe.value + 0.25 * r2 * r2;
    let gradient = pe.gradient.iter().zip(&diff).map(|(g, d)| g + r2 * d).collect();
    Ok((value, gradient))
}

pub(crate) fn grad_norm(pe: &PenaltyEval) -> f64 {
    norm(&pe.gradient)
}
