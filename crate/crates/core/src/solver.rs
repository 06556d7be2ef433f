//! Second-order penalty method: an outer schedule `ρₖ ↑ ∞`, `εₖ ↓ 0` around
//! an inner solver that returns ε-approximate second-order stationary points
//! of `φ_ρ`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::certify::{report_from, ResidualReport};
use crate::error::{check_dim, Error, Result};
use crate::lagrangian::{multipliers_from, Iterate};
use crate::linalg::{dot, norm};
use crate::merit::{grad_norm, penalty_from, penalty_hessian_from, violation_from, ConeState, PenaltyEval};
use crate::problem::{EvalBundle, Model};
use crate::spectral::{decompose, EigTol, SymSpectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rho0: f64,
    pub rho_mult: f64,
    pub eps0: f64,
    pub eps_mult: f64,
    pub tol_outer: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub curvature_step: f64,
    /// Inner iterations continue until `‖∇φ‖ <= ε·inner_rtol` or progress stalls.
    pub inner_rtol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            rho_mult: 10.0,
            eps0: 1e-2,
            eps_mult: 0.25,
            tol_outer: 1e-6,
            max_outer: 20,
            max_inner: 500,
            armijo_c: 1e-4,
            backtrack: 0.5,
            curvature_step: 1.0,
            inner_rtol: 1e-6,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return bad(format!("rho0 must be positive, got {}", self.rho0));
        }
        if !(self.rho_mult > 1.0 && self.rho_mult.is_finite()) {
            return bad(format!("rho_mult must exceed 1, got {}", self.rho_mult));
        }
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return bad(format!("eps0 must be positive, got {}", self.eps0));
        }
        if !(self.eps_mult > 0.0 && self.eps_mult < 1.0) {
            return bad(format!("eps_mult must lie in (0, 1), got {}", self.eps_mult));
        }
        if !(self.tol_outer > 0.0 && self.tol_outer.is_finite()) {
            return bad(format!("tol_outer must be positive, got {}", self.tol_outer));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad(format!("armijo_c must lie in (0, 1), got {}", self.armijo_c));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad(format!("backtrack must lie in (0, 1), got {}", self.backtrack));
        }
        if !(self.curvature_step > 0.0 && self.curvature_step.is_finite()) {
            return bad(format!("curvature_step must be positive, got {}", self.curvature_step));
        }
        if !(self.inner_rtol > 0.0 && self.inner_rtol <= 1.0) {
            return bad(format!("inner_rtol must lie in (0, 1], got {}", self.inner_rtol));
        }
        if self.max_inner == 0 {
            return bad("max_inner must be at least 1".into());
        }
        Ok(())
    }

    pub fn rho_at(&self, k: usize) -> f64 {
        self.rho0 * libm::pow(self.rho_mult, k as f64)
    }

    pub fn eps_at(&self, k: usize) -> f64 {
        self.eps0 * libm::pow(self.eps_mult, k as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    BudgetExhausted,
    InfeasibleStationary,
    InnerFailure,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::BudgetExhausted => "budget_exhausted",
            SolverStatus::InfeasibleStationary => "infeasible_stationary",
            SolverStatus::InnerFailure => "inner_failure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            SolverStatus::Converged,
            SolverStatus::BudgetExhausted,
            SolverStatus::InfeasibleStationary,
            SolverStatus::InnerFailure,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub iterates: Vec<Iterate>,
    /// Reports recomputed against `x_ref_used`.
    pub reports: Vec<ResidualReport>,
    pub inner_iterations: Vec<usize>,
    pub status: SolverStatus,
    pub x_ref_used: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub min_curvature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InnerFailureReason {
    MaxIterations,
    LineSearch,
    Numerical(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerFailure {
    /// Point with the smallest gradient norm seen.
    pub best_x: Vec<f64>,
    pub iterations: usize,
    pub reason: InnerFailureReason,
}

struct InnerState {
    x: Vec<f64>,
    pe: PenaltyEval,
    spectrum: SymSpectrum,
    gnorm: f64,
}

impl InnerState {
    fn at<M: Model + ?Sized>(model: &M, x: Vec<f64>, rho: f64) -> Result<Self> {
        let b = model.eval(&x)?;
        let cone = ConeState::new(&b)?;
        let pe = penalty_from(&b, &cone, rho);
        let h = penalty_hessian_from(&b, &cone, rho)?;
        let spectrum = decompose(&h, EigTol::default())?;
        let gnorm = grad_norm(&pe);
        Ok(Self { x, pe, spectrum, gnorm })
    }

    fn lambda_min(&self) -> f64 {
        if self.spectrum.order() == 0 {
            0.0
        } else {
            self.spectrum.min_eigenvalue()
        }
    }

    fn approx_stationary(&self, eps: f64) -> bool {
        self.gnorm <= eps && self.lambda_min() >= -eps
    }

    /// Regularized Newton direction `−(H̄ + shift·I)⁻¹ g`.
    fn newton_direction(&self) -> Vec<f64> {
        let shift = (-self.lambda_min() + 1e-8).max(0.0);
        let n = self.x.len();
        let mut d = vec![0.0; n];
        for (k, &lam) in self.spectrum.eigenvalues.iter().enumerate() {
            let u = self.spectrum.basis.column(k);
            let c = -dot(&u, &self.pe.gradient) / (lam + shift);
            for i in 0..n {
                d[i] += c * u[i];
            }
        }
        d
    }
}

fn moved(x: &[f64], d: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

fn penalty_value<M: Model + ?Sized>(model: &M, x: &[f64], rho: f64) -> Result<f64> {
    let b = model.eval(x)?;
    let cone = ConeState::new(&b)?;
    Ok(penalty_from(&b, &cone, rho).value)
}

/// Finds `x` with `‖∇φ_ρ(x)‖ <= ε` and `λ_min(H̄(x)) >= −ε`, starting from `x0`.
///
/// Negative-curvature steps are taken whenever `λ_min(H̄) < −ε`; otherwise a
/// regularized Newton step with Armijo backtracking on `φ_ρ`.
pub fn solve_subproblem<M: Model + ?Sized>(
    model: &M,
    rho: f64,
    eps: f64,
    x0: &[f64],
    cfg: &SolverConfig,
) -> core::result::Result<InnerSolution, InnerFailure> {
    let mut best = x0.to_vec();
    let mut best_norm = f64::INFINITY;
    let fail = |best: &[f64], iterations, reason| InnerFailure {
        best_x: best.to_vec(),
        iterations,
        reason,
    };
    if x0.len() != model.dims().n {
        let err = check_dim("point", model.dims().n, x0.len()).unwrap_err();
        return Err(fail(x0, 0, InnerFailureReason::Numerical(err)));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        let err = Error::InvalidConfig(format!("penalty parameter must be positive, got {rho}"));
        return Err(fail(x0, 0, InnerFailureReason::Numerical(err)));
    }
    let mut st = match InnerState::at(model, x0.to_vec(), rho) {
        Ok(s) => s,
        Err(e) => return Err(fail(x0, 0, InnerFailureReason::Numerical(e))),
    };
    let done = |st: &InnerState, it: usize| InnerSolution {
        x: st.x.clone(),
        iterations: it,
        grad_norm: st.gnorm,
        min_curvature: st.lambda_min(),
    };

    for iter in 0..cfg.max_inner {
        if st.gnorm < best_norm {
            best_norm = st.gnorm;
            best.clone_from(&st.x);
        }
        let ok = st.approx_stationary(eps);
        if ok && st.gnorm <= eps * cfg.inner_rtol {
            return Ok(done(&st, iter));
        }
        let step: Result<Option<InnerState>> = (|| {
            if ok {
                // polish: full Newton step, kept only if it lowers ‖∇φ‖
                let d = st.newton_direction();
                let cand = InnerState::at(model, moved(&st.x, &d, 1.0), rho)?;
                return Ok((cand.approx_stationary(eps) && cand.gnorm < st.gnorm).then_some(cand));
            }
            let phi = st.pe.value;
            let lam = st.lambda_min();
            if lam < -eps {
                let k = st.spectrum.order() - 1;
                let mut d = st.spectrum.basis.column(k);
                if dot(&d, &st.pe.gradient) > 0.0 {
                    d.iter_mut().for_each(|v| *v = -*v);
                }
                let mut t = cfg.curvature_step;
                while t >= 1e-16 {
                    let xt = moved(&st.x, &d, t);
                    if penalty_value(model, &xt, rho)? <= phi - cfg.armijo_c * lam.abs() * t * t / 2.0 {
                        return Ok(Some(InnerState::at(model, xt, rho)?));
                    }
                    t *= cfg.backtrack;
                }
                return Ok(None);
            }
            let d = st.newton_direction();
            let slope = dot(&st.pe.gradient, &d);
            let mut t = 1.0;
            while t >= 1e-16 {
                let xt = moved(&st.x, &d, t);
                if penalty_value(model, &xt, rho)? <= phi + cfg.armijo_c * t * slope {
                    return Ok(Some(InnerState::at(model, xt, rho)?));
                }
                t *= cfg.backtrack;
            }
            Ok(None)
        })();
        match step {
            Ok(Some(next)) => st = next,
            Ok(None) if ok => return Ok(done(&st, iter)),
            Ok(None) => return Err(fail(&best, iter, InnerFailureReason::LineSearch)),
            Err(e) => return Err(fail(&best, iter, InnerFailureReason::Numerical(e))),
        }
    }
    if st.approx_stationary(eps) {
        return Ok(done(&st, cfg.max_inner));
    }
    if st.gnorm < best_norm {
        best.clone_from(&st.x);
    }
    Err(fail(&best, cfg.max_inner, InnerFailureReason::MaxIterations))
}

fn converged(r: &ResidualReport, tol: f64, eps: f64) -> bool {
    r.feas_eq + r.feas_cone <= tol && r.stationarity <= tol && r.compl_cakkt <= tol && r.so_residual >= -eps.max(tol)
}

fn build_iterate(b: &EvalBundle, cone: &ConeState, rho: f64, eps: f64, k: usize) -> Iterate {
    let (mu, omega) = multipliers_from(b, cone, rho);
    Iterate {
        x: b.x.clone(),
        mu,
        omega,
        rho,
        eps,
        k,
    }
}

/// Runs the outer penalty loop from `x0`.
///
/// Each inner solve is warm-started at the previous iterate. The returned
/// reports are recomputed against the final iterate as reference point.
pub fn run_penalty<M: Model + ?Sized>(model: &M, cfg: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    cfg.validate()?;
    check_dim("starting point", model.dims().n, x0.len())?;
    let mut iterates = Vec::new();
    let mut inner_iterations = Vec::new();
    let mut status = SolverStatus::BudgetExhausted;
    let mut x = x0.to_vec();

    for k in 0..cfg.max_outer {
        let (rho, eps) = (cfg.rho_at(k), cfg.eps_at(k));
        let sol = match solve_subproblem(model, rho, eps, &x, cfg) {
            Ok(s) => s,
            Err(f) => {
                if let InnerFailureReason::Numerical(e @ Error::EigenNonConvergence { .. }) = f.reason {
                    return Err(e);
                }
                status = SolverStatus::InnerFailure;
                break;
            }
        };
        let b = model.eval(&sol.x)?;
        let cone = ConeState::new(&b)?;
        // post-condition re-checked independently of the inner loop
        let pe = penalty_from(&b, &cone, rho);
        let lam = decompose(&penalty_hessian_from(&b, &cone, rho)?, EigTol::default())?;
        let lam_min = if lam.order() == 0 { 0.0 } else { lam.min_eigenvalue() };
        if grad_norm(&pe) > eps || lam_min < -eps {
            status = SolverStatus::InnerFailure;
            break;
        }
        let it = build_iterate(&b, &cone, rho, eps, k);
        let report = report_from(&b, &b, &it)?;
        let viol = violation_from(&b, &cone);
        x = sol.x;
        iterates.push(it);
        inner_iterations.push(sol.iterations);
        if converged(&report, cfg.tol_outer, eps) {
            status = SolverStatus::Converged;
            break;
        }
        if norm(&viol.gradient) <= cfg.tol_outer && viol.value > cfg.tol_outer {
            status = SolverStatus::InfeasibleStationary;
            break;
        }
    }

    let x_ref_used = iterates.last().map_or_else(|| x0.to_vec(), |it| it.x.clone());
    let ref_b = model.eval(&x_ref_used)?;
    let reports = iterates
        .iter()
        .map(|it| report_from(&model.eval(&it.x)?, &ref_b, it))
        .collect::<Result<Vec<_>>>()?;
    Ok(SolverTrace {
        iterates,
        reports,
        inner_iterations,
        status,
        x_ref_used,
    })
}
