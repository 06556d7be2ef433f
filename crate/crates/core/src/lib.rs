//! Penalty solver for degenerate nonlinear semidefinite programs
//!
//! ```text
//! min f(x)  s.t.  h(x) = 0,  G(x) ⪰ 0
//! ```
//!
//! with quadratic data. Residual diagnostics certify approximate first- and
//! second-order stationarity of the iterates without assuming a constraint
//! qualification.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod certify;
pub mod corpus;
pub mod error;
pub mod lagrangian;
pub mod linalg;
pub mod merit;
pub mod problem;
pub mod solver;
pub mod spectral;
pub mod subspace;

pub use certify::{
    kl_diagnostic, lemma_gap_check, residual_report, robinson_diagnostic, so_residual, wsonc_check, ResidualReport,
    RobinsonReport,
};
pub use corpus::{corpus, corpus_instance, CORPUS_NAMES};
pub use error::{Error, Result};
pub use lagrangian::{lagrangian_eval, multipliers_from_penalty, sigma_term, Iterate, LagrangianBundle};
pub use merit::{penalty_eval, penalty_hessian_element, regularized_penalty_eval, violation_eval};
pub use problem::{ConeMap, ConeQuadTerm, Dims, EvalBundle, Model, ProblemInstance, Quadratic};
pub use solver::{run_penalty, solve_subproblem, SolverConfig, SolverStatus, SolverTrace};
pub use spectral::{clarke_psd_apply, decompose, project_psd, EigTol, SymMatrix, SymSpectrum};
pub use subspace::{critical_subspace_basis, perturbed_subspace_basis, wcr_diagnostic, SubspaceBasis, WcrReport};
