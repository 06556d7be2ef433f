//! Built-in degenerate test instances.
//!
//! | name | problem | what it exercises |
//! |---|---|---|
//! | `squared-scalar` | min x s.t. −x² ⪰ 0 | feasible set {0}; no KKT point, CAKKT2 holds |
//! | `degenerate-equality` | min x₁ s.t. x₁² = 0 (cone ≡ 1) | rank-deficient Dh; no KKT point |
//! | `lsdp-strict` | min x₁ s.t. x₂ = 2, [[x₁,1],[1,x₂]] ⪰ 0 | Robinson's CQ; solution (1/2, 2) |
//! | `affine-2x2` | min x₁² + (x₂−1)² s.t. diag(x₁,x₂) ⪰ 0 | one active eigenvalue; constant rank |
//! | `neg-curvature` | min −‖x‖² s.t. 1 − ‖x‖² ⪰ 0 | quadratic cone map, boundary minimizers |

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::problem::{ConeMap, ConeQuadTerm, ProblemInstance, Quadratic};
use crate::spectral::SymMatrix;

pub const CORPUS_NAMES: [&str; 5] = [
    "squared-scalar",
    "degenerate-equality",
    "lsdp-strict",
    "affine-2x2",
    "neg-curvature",
];

fn scalar(v: f64) -> SymMatrix {
    SymMatrix::diag(&[v])
}

fn squared_scalar() -> ProblemInstance {
    ProblemInstance {
        name: "squared-scalar".into(),
        n: 1,
        p: 0,
        m: 1,
        objective: Quadratic::affine(0.0, vec![1.0]),
        equalities: Vec::new(),
        cone: ConeMap {
            constant: scalar(0.0),
            linear: vec![scalar(0.0)],
            quadratic: vec![ConeQuadTerm {
                i: 0,
                j: 0,
                mat: scalar(-2.0),
            }],
        },
    }
}

fn degenerate_equality() -> ProblemInstance {
    ProblemInstance {
        name: "degenerate-equality".into(),
        n: 1,
        p: 1,
        m: 1,
        objective: Quadratic::affine(0.0, vec![1.0]),
        equalities: vec![Quadratic {
            constant: 0.0,
            linear: vec![0.0],
            hessian: scalar(2.0),
        }],
        cone: ConeMap {
            constant: scalar(1.0),
            linear: vec![scalar(0.0)],
            quadratic: Vec::new(),
        },
    }
}

fn lsdp_strict() -> ProblemInstance {
    ProblemInstance {
        name: "lsdp-strict".into(),
        n: 2,
        p: 1,
        m: 2,
        objective: Quadratic::affine(0.0, vec![1.0, 0.0]),
        equalities: vec![Quadratic::affine(-2.0, vec![0.0, 1.0])],
        cone: ConeMap {
            constant: SymMatrix::from_lower_fn(2, |i, j| if i != j { 1.0 } else { 0.0 }),
            linear: vec![SymMatrix::diag(&[1.0, 0.0]), SymMatrix::diag(&[0.0, 1.0])],
            quadratic: Vec::new(),
        },
    }
}

fn affine_2x2() -> ProblemInstance {
    ProblemInstance {
        name: "affine-2x2".into(),
        n: 2,
        p: 0,
        m: 2,
        objective: Quadratic {
            constant: 1.0,
            linear: vec![0.0, -2.0],
            hessian: SymMatrix::diag(&[2.0, 2.0]),
        },
        equalities: Vec::new(),
        cone: ConeMap {
            constant: SymMatrix::zeros(2),
            linear: vec![SymMatrix::diag(&[1.0, 0.0]), SymMatrix::diag(&[0.0, 1.0])],
            quadratic: Vec::new(),
        },
    }
}

fn neg_curvature() -> ProblemInstance {
    ProblemInstance {
        name: "neg-curvature".into(),
        n: 2,
        p: 0,
        m: 1,
        objective: Quadratic {
            constant: 0.0,
            linear: vec![0.0, 0.0],
            hessian: SymMatrix::diag(&[-2.0, -2.0]),
        },
        equalities: Vec::new(),
        cone: ConeMap {
            constant: scalar(1.0),
            linear: vec![scalar(0.0), scalar(0.0)],
            quadratic: vec![
                ConeQuadTerm {
                    i: 0,
                    j: 0,
                    mat: scalar(-2.0),
                },
                ConeQuadTerm {
                    i: 1,
                    j: 1,
                    mat: scalar(-2.0),
                },
            ],
        },
    }
}

/// Returns the named built-in instance.
pub fn corpus_instance(name: &str) -> Result<ProblemInstance> {
    match name {
        "squared-scalar" => Ok(squared_scalar()),
        "degenerate-equality" => Ok(degenerate_equality()),
        "lsdp-strict" => Ok(lsdp_strict()),
        "affine-2x2" => Ok(affine_2x2()),
        "neg-curvature" => Ok(neg_curvature()),
        _ => Err(Error::UnknownInstance {
            name: String::from(name),
            available: CORPUS_NAMES.join(", "),
        }),
    }
}

pub fn corpus() -> Vec<ProblemInstance> {
    CORPUS_NAMES
        .iter()
        .map(|n| corpus_instance(n).expect("corpus names are valid"))
        .collect()
}
