//! Residuals at single iterates and the second-order check built on them.
//! The constraint-qualification and curvature-gap diagnostics live here too.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::lagrangian::{lagrangian_from, sigma_from, Iterate};
use crate::linalg::{dot, jacobi_svd, norm, Mat};
use crate::merit::{violation_from, ConeState};
use crate::problem::{ConeMap, ConeQuadTerm, EvalBundle, Model, ProblemInstance, Quadratic};
use crate::solver::{run_penalty, SolverConfig};
use crate::spectral::{decompose, jordan, ClarkeElement, EigTol, SymMatrix};
use crate::subspace::{
    critical_subspace_basis, perturbed_from, reference_kernel_from, SubspaceBasis, DEFAULT_RANK_TOL,
};

/// All residuals at one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `‖h(x)‖`
    pub feas_eq: f64,
    /// `‖Π_{S⁺}(−G(x))‖_F`
    pub feas_cone: f64,
    /// `‖∇ₓL(x, μ, Ω)‖`
    pub stationarity: f64,
    /// `‖G(x) ∘ Ω‖_F`
    pub compl_cakkt: f64,
    /// `‖U_ᾱᵀ Ω U_ᾱ‖_F` with `ᾱ` from the reference point.
    pub compl_akkt: f64,
    /// `⟨G(x), Ω⟩`
    pub inner_gap: f64,
    /// `λ_min(Zᵀ(∇²ₓₓL + σ)Z)`, `+∞` on the zero subspace.
    pub so_residual: f64,
    pub subspace_dim: usize,
    pub eps_used: f64,
    pub rho_used: f64,
    /// Small-eigenvalue split at `x` is nearly degenerate.
    pub subspace_unstable: bool,
}

impl ResidualReport {
    /// First-order KKT residuals all within `tol`.
    pub fn first_order_within(&self, tol: f64) -> bool {
        self.feas_eq <= tol && self.feas_cone <= tol && self.stationarity <= tol && self.inner_gap.abs() <= tol
    }
}

pub(crate) fn so_residual_from(b: &EvalBundle, mu: &[f64], omega: &SymMatrix, z: &Mat) -> Result<f64> {
    if z.cols() == 0 {
        return Ok(f64::INFINITY);
    }
    let lag = lagrangian_from(b, mu, omega);
    let mut w = lag.hessian;
    w.axpy(1.0, &sigma_from(b, omega, EigTol::default())?);
    let projected = w.congruence(z);
    Ok(decompose(&projected, EigTol::default())?.min_eigenvalue())
}

/// `λ_min(Zᵀ(∇²ₓₓL(x, μ, Ω) + σ(x, Ω))Z)`; `+∞` when `Z` is empty.
pub fn so_residual<M: Model + ?Sized>(
    model: &M,
    x: &[f64],
    mu: &[f64],
    omega: &SymMatrix,
    z: &SubspaceBasis,
) -> Result<f64> {
    let d = model.dims();
    check_dim("point", d.n, x.len())?;
    check_dim("equality multiplier", d.p, mu.len())?;
    check_dim("cone multiplier order", d.m, omega.order())?;
    check_dim("subspace basis rows", d.n, z.z.rows())?;
    so_residual_from(&model.eval(x)?, mu, omega, &z.z)
}

pub(crate) fn report_from(b: &EvalBundle, ref_b: &EvalBundle, it: &Iterate) -> Result<ResidualReport> {
    let cone = ConeState::new(b)?;
    let lag = lagrangian_from(b, &it.mu, &it.omega);
    let kernel = reference_kernel_from(ref_b)?;
    let u_alpha = kernel.spectrum.columns(&kernel.alpha());
    let compl_akkt = it.omega.congruence(&u_alpha).frobenius_norm();
    let z = perturbed_from(b, &ref_b.x, kernel.beta_dim, DEFAULT_RANK_TOL)?;
    let so = so_residual_from(b, &it.mu, &it.omega, &z.z)?;
    Ok(ResidualReport {
        feas_eq: norm(&b.h_val),
        feas_cone: cone.neg_part.frobenius_norm(),
        stationarity: norm(&lag.gradient),
        compl_cakkt: jordan(&b.g_val, &it.omega)?.frobenius_norm(),
        compl_akkt,
        inner_gap: b.g_val.inner(&it.omega),
        so_residual: so,
        subspace_dim: z.dim(),
        eps_used: it.eps,
        rho_used: it.rho,
        subspace_unstable: z.unstable,
    })
}

/// Residual report of `it` against the reference point `x_ref`.
pub fn residual_report<M: Model + ?Sized>(model: &M, it: &Iterate, x_ref: &[f64]) -> Result<ResidualReport> {
    let d = model.dims();
    check_dim("point", d.n, it.x.len())?;
    check_dim("equality multiplier", d.p, it.mu.len())?;
    check_dim("cone multiplier order", d.m, it.omega.order())?;
    check_dim("reference point", d.n, x_ref.len())?;
    let b = model.eval(&it.x)?;
    if x_ref == it.x.as_slice() {
        report_from(&b, &b, it)
    } else {
        report_from(&b, &model.eval(x_ref)?, it)
    }
}

/// Weak second-order necessary condition at a KKT triple.
///
/// Errors with [`Error::NotKkt`] if `(x_ref, μ, Ω)` is not KKT within `tol`.
pub fn wsonc_check<M: Model + ?Sized>(
    model: &M,
    x_ref: &[f64],
    mu: &[f64],
    omega: &SymMatrix,
    tol: f64,
) -> Result<bool> {
    let it = Iterate {
        x: x_ref.to_vec(),
        mu: mu.to_vec(),
        omega: omega.clone(),
        rho: f64::NAN,
        eps: tol,
        k: 0,
    };
    let r = residual_report(model, &it, x_ref)?;
    let om_min = decompose(omega, EigTol::default())?.min_eigenvalue();
    if !r.first_order_within(tol) || om_min < -tol {
        return Err(Error::NotKkt {
            tol,
            detail: format!(
                "feas_eq={:e} feas_cone={:e} stationarity={:e} inner_gap={:e} lambda_min(Omega)={:e}",
                r.feas_eq, r.feas_cone, r.stationarity, r.inner_gap, om_min
            ),
        });
    }
    let s = critical_subspace_basis(model, x_ref, DEFAULT_RANK_TOL)?;
    Ok(so_residual(model, x_ref, mu, omega, &s)? >= -tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobinsonReport {
    /// `Dh(x̄)` has full row rank.
    pub rank_ok: bool,
    /// Certified lower bound on `max t` with `G + DG[d] − tI ⪰ 0`, `Dh d = 0`, `‖d‖ <= R`.
    pub slater_margin: f64,
    /// `rank_ok && slater_margin > tol`.
    pub holds: bool,
}

/// Default ball radius for the Slater-direction search.
pub const ROBINSON_RADIUS: f64 = 10.0;

/// Auxiliary instance in `(d, t)`: minimize `−t` subject to `Dh(x̄)d = 0`,
/// `[G(x̄) + DG(x̄)[d] − tI] ⊕ [R² − ‖d‖²] ⪰ 0`.
pub fn robinson_auxiliary(b: &EvalBundle, radius: f64) -> ProblemInstance {
    let d = b.dims();
    let (n, m) = (d.n, d.m);
    let mut objective = Quadratic::zero(n + 1);
    objective.linear[n] = -1.0;
    let equalities = (0..d.p)
        .map(|i| {
            let mut row = b.jac_h.row(i).to_vec();
            row.push(0.0);
            Quadratic::affine(0.0, row)
        })
        .collect();
    let ball = |v: f64| SymMatrix::diag(&[v]);
    let mut linear: Vec<SymMatrix> = b.dg.iter().map(|g| SymMatrix::block_diag(g, &ball(0.0))).collect();
    linear.push(SymMatrix::block_diag(&SymMatrix::identity(m).neg(), &ball(0.0)));
    let quadratic = (0..n)
        .map(|i| ConeQuadTerm {
            i,
            j: i,
            mat: SymMatrix::block_diag(&SymMatrix::zeros(m), &ball(-2.0)),
        })
        .collect();
    ProblemInstance {
        name: "robinson-auxiliary".into(),
        n: n + 1,
        p: d.p,
        m: m + 1,
        objective,
        equalities,
        cone: ConeMap {
            constant: SymMatrix::block_diag(&b.g_val, &ball(radius * radius)),
            linear,
            quadratic,
        },
    }
}

/// Robinson's CQ diagnostic with the default radius and solver settings.
pub fn robinson_diagnostic<M: Model + ?Sized>(model: &M, x_ref: &[f64], tol: f64) -> Result<RobinsonReport> {
    robinson_diagnostic_with(model, x_ref, tol, ROBINSON_RADIUS, &SolverConfig::default())
}

pub fn robinson_diagnostic_with<M: Model + ?Sized>(
    model: &M,
    x_ref: &[f64],
    tol: f64,
    radius: f64,
    cfg: &SolverConfig,
) -> Result<RobinsonReport> {
    check_dim("reference point", model.dims().n, x_ref.len())?;
    let b = model.eval(x_ref)?;
    let d = b.dims();
    let rank_ok = d.p == 0 || jacobi_svd(&b.jac_h)?.rank(DEFAULT_RANK_TOL) == d.p;
    let slater_margin = if d.m == 0 {
        f64::INFINITY
    } else {
        let aux = robinson_auxiliary(&b, radius);
        let trace = run_penalty(&aux, cfg, &vec![0.0; d.n + 1])?;
        // any successful outer iterate is a valid witness; the margin is
        // evaluated directly below
        if trace.iterates.is_empty() {
            return Err(Error::Inconclusive(format!(
                "auxiliary Slater solve ended with status {}",
                trace.status.as_str()
            )));
        }
        let last = &trace.iterates[trace.iterates.len() - 1].x;
        let mut dir = last[..d.n].to_vec();
        if d.p > 0 {
            let z = jacobi_svd(&b.jac_h)?.nullspace(DEFAULT_RANK_TOL);
            dir = z.matvec(&z.tr_matvec(&dir));
        }
        let len = norm(&dir);
        if len > radius {
            dir.iter_mut().for_each(|v| *v *= radius / len);
        }
        let witness = decompose(&b.g_val.add(&b.dg_apply(&dir))?, EigTol::default())?.min_eigenvalue();
        let at_zero = decompose(&b.g_val, EigTol::default())?.min_eigenvalue();
        witness.max(at_zero)
    };
    Ok(RobinsonReport {
        rank_ok,
        slater_margin,
        holds: rank_ok && slater_margin > tol,
    })
}

pub(crate) fn lemma_gap_from(b: &EvalBundle, ref_b: &EvalBundle, rho: f64) -> Result<f64> {
    let kernel = reference_kernel_from(ref_b)?;
    let z = perturbed_from(b, &ref_b.x, kernel.beta_dim, DEFAULT_RANK_TOL)?;
    if z.dim() == 0 {
        return Ok(f64::INFINITY);
    }
    let cone = ConeState::new(b)?;
    let omega = cone.neg_part.scale(rho);
    let sigma = sigma_from(b, &omega, EigTol::default())?;
    let v = ClarkeElement::from_spectrum(cone.spectrum);
    let mut gap = f64::INFINITY;
    for k in 0..z.dim() {
        let col = z.z.column(k);
        let h = b.dg_apply(&col);
        let curv = rho * h.inner(&v.apply(&h)?);
        gap = gap.min(dot(&col, &sigma.matvec(&col)) - curv);
    }
    Ok(gap)
}

/// `min_z zᵀσ(x, Ω)z − ρ⟨DG(x)[z], V[DG(x)[z]]⟩` over the columns of the
/// perturbed subspace basis, with `Ω = ρΠ(−G(x))`. Nonnegative near `x̄`.
pub fn lemma_gap_check<M: Model + ?Sized>(model: &M, x: &[f64], x_ref: &[f64], rho: f64) -> Result<f64> {
    check_dim("reference point", model.dims().n, x_ref.len())?;
    let b = model.eval(x)?;
    let ref_b = model.eval(x_ref)?;
    lemma_gap_from(&b, &ref_b, rho)
}

/// `P(xᵏ) / max(‖∇P(xᵏ)‖, 1e-300)` along a trace.
pub fn kl_diagnostic<M: Model + ?Sized>(model: &M, trace: &[Iterate]) -> Result<Vec<(usize, f64)>> {
    trace
        .iter()
        .map(|it| {
            let b = model.eval(&it.x)?;
            let v = violation_from(&b, &ConeState::new(&b)?);
            Ok((it.k, v.value / norm(&v.gradient).max(1e-300)))
        })
        .collect()
}
