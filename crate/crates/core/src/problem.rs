//! Problem data: quadratic NSDP instances with exact derivatives, and the
//! [`Model`] hook through which every algorithm in this crate evaluates the
//! problem functions.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, Mat};
use crate::spectral::SymMatrix;

/// `c + aᵀx + ½ xᵀQx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub constant: f64,
    pub linear: Vec<f64>,
    pub hessian: SymMatrix,
}

impl Quadratic {
    pub fn zero(n: usize) -> Self {
        Self {
            constant: 0.0,
            linear: vec![0.0; n],
            hessian: SymMatrix::zeros(n),
        }
    }

    pub fn affine(constant: f64, linear: Vec<f64>) -> Self {
        let n = linear.len();
        Self {
            constant,
            linear,
            hessian: SymMatrix::zeros(n),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant + dot(&self.linear, x) + 0.5 * dot(x, &self.hessian.matvec(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.hessian.matvec(x);
        for (gi, ai) in g.iter_mut().zip(&self.linear) {
            *gi += ai;
        }
        g
    }
}

/// Second-order coefficient `B_ij` of the cone map, stored once with `i <= j`
/// (0-based indices).
#[derive(Debug, Clone, PartialEq)]
pub struct ConeQuadTerm {
    pub i: usize,
    pub j: usize,
    pub mat: SymMatrix,
}

/// `G(x) = A0 + Σᵢ xᵢ Aᵢ + ½ Σᵢ Σⱼ xᵢ xⱼ B_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeMap {
    pub constant: SymMatrix,
    pub linear: Vec<SymMatrix>,
    pub quadratic: Vec<ConeQuadTerm>,
}

impl ConeMap {
    pub fn zero(n: usize, m: usize) -> Self {
        Self {
            constant: SymMatrix::zeros(m),
            linear: vec![SymMatrix::zeros(m); n],
            quadratic: Vec::new(),
        }
    }
}

/// Quadratic NSDP instance: minimize `f(x)` s.t. `h(x) = 0`, `G(x) ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub objective: Quadratic,
    pub equalities: Vec<Quadratic>,
    pub cone: ConeMap,
}

/// Problem sizes `(n, p, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub p: usize,
    pub m: usize,
}

/// Values and exact derivatives of `f`, `h`, `G` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalBundle {
    pub x: Vec<f64>,
    pub f_val: f64,
    pub grad_f: Vec<f64>,
    pub hess_f: SymMatrix,
    pub h_val: Vec<f64>,
    /// `p × n`, row `i` is `∇hᵢ(x)ᵀ`.
    pub jac_h: Mat,
    pub hess_h: Vec<SymMatrix>,
    pub g_val: SymMatrix,
    /// `∂ᵢG(x)` for `i = 0..n`.
    pub dg: Vec<SymMatrix>,
    /// Nonzero `∂ᵢ∂ⱼG(x)` with `i <= j`.
    pub d2g: Vec<ConeQuadTerm>,
}

impl EvalBundle {
    pub fn dims(&self) -> Dims {
        Dims {
            n: self.x.len(),
            p: self.h_val.len(),
            m: self.g_val.order(),
        }
    }

    /// `DG(x)[d] = Σᵢ dᵢ ∂ᵢG(x)`.
    pub fn dg_apply(&self, d: &[f64]) -> SymMatrix {
        let mut out = SymMatrix::zeros(self.g_val.order());
        for (di, gi) in d.iter().zip(&self.dg) {
            if *di != 0.0 {
                out.axpy(*di, gi);
            }
        }
        out
    }

    /// Adjoint `DG(x)*[W] = (⟨∂ᵢG(x), W⟩)ᵢ`.
    pub fn dg_adjoint(&self, w: &SymMatrix) -> Vec<f64> {
        self.dg.iter().map(|gi| gi.inner(w)).collect()
    }

    /// `D²G(x)*[W]`, the `n × n` matrix `(⟨∂ᵢ∂ⱼG(x), W⟩)ᵢⱼ`.
    pub fn d2g_adjoint(&self, w: &SymMatrix) -> SymMatrix {
        let mut out = SymMatrix::zeros(self.x.len());
        for t in &self.d2g {
            out.set(t.i, t.j, out.get(t.i, t.j) + t.mat.inner(w));
        }
        out
    }
}

/// Evaluation hook: anything that can produce an [`EvalBundle`].
///
/// [`ProblemInstance`] implements it exactly; user routines must honour the
/// same contract (exact first and second derivatives).
pub trait Model {
    fn dims(&self) -> Dims;
    fn eval(&self, x: &[f64]) -> Result<EvalBundle>;
}

impl<T: Model + ?Sized> Model for &T {
    fn dims(&self) -> Dims {
        (**self).dims()
    }
    fn eval(&self, x: &[f64]) -> Result<EvalBundle> {
        (**self).eval(x)
    }
}

impl ProblemInstance {
    /// Checks the dimensional consistency of all blocks.
    pub fn validate(&self) -> Result<()> {
        let (n, p, m) = (self.n, self.p, self.m);
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        let check_quad = |q: &Quadratic, path: &str| -> Result<()> {
            if q.linear.len() != n {
                return bad(format!(
                    "{path}: linear part has {} entries, expected n = {n}",
                    q.linear.len()
                ));
            }
            if q.hessian.order() != n {
                return bad(format!(
                    "{path}: Hessian has order {}, expected n = {n}",
                    q.hessian.order()
                ));
            }
            Ok(())
        };
        check_quad(&self.objective, "objective")?;
        if self.equalities.len() != p {
            return bad(format!(
                "equalities: {} records, expected p = {p}",
                self.equalities.len()
            ));
        }
        for (i, q) in self.equalities.iter().enumerate() {
            check_quad(q, &format!("equalities[{i}]"))?;
        }
        if self.cone.constant.order() != m {
            return bad(format!(
                "cone.A0: order {}, expected m = {m}",
                self.cone.constant.order()
            ));
        }
        if self.cone.linear.len() != n {
            return bad(format!("cone.A: {} matrices, expected n = {n}", self.cone.linear.len()));
        }
        for (i, a) in self.cone.linear.iter().enumerate() {
            if a.order() != m {
                return bad(format!("cone.A[{i}]: order {}, expected m = {m}", a.order()));
            }
        }
        let mut seen: Vec<(usize, usize)> = Vec::new();
        for (k, t) in self.cone.quadratic.iter().enumerate() {
            if t.i > t.j || t.j >= n {
                return bad(format!(
                    "cone.B[{k}]: index pair ({}, {}) must satisfy i <= j < n",
                    t.i, t.j
                ));
            }
            if seen.contains(&(t.i, t.j)) {
                return bad(format!("cone.B[{k}]: duplicate index pair ({}, {})", t.i, t.j));
            }
            seen.push((t.i, t.j));
            if t.mat.order() != m {
                return bad(format!("cone.B[{k}]: order {}, expected m = {m}", t.mat.order()));
            }
        }
        Ok(())
    }

    /// `true` when the cone map has no second-order terms.
    pub fn cone_is_affine(&self) -> bool {
        self.cone.quadratic.is_empty()
    }

    pub fn eval_bundle(&self, x: &[f64]) -> Result<EvalBundle> {
        check_dim("point", self.n, x.len())?;
        let n = self.n;
        let f_val = self.objective.value(x);
        let grad_f = self.objective.gradient(x);
        let h_val: Vec<f64> = self.equalities.iter().map(|q| q.value(x)).collect();
        let mut jac_h = Mat::zeros(self.p, n);
        for (i, q) in self.equalities.iter().enumerate() {
            jac_h.set_row(i, &q.gradient(x));
        }

        let mut g_val = self.cone.constant.clone();
        let mut dg = self.cone.linear.clone();
        for (xi, ai) in x.iter().zip(&self.cone.linear) {
            g_val.axpy(*xi, ai);
        }
        for t in &self.cone.quadratic {
            if t.i == t.j {
                g_val.axpy(0.5 * x[t.i] * x[t.i], &t.mat);
                dg[t.i].axpy(x[t.i], &t.mat);
            } else {
                g_val.axpy(x[t.i] * x[t.j], &t.mat);
                dg[t.i].axpy(x[t.j], &t.mat);
                dg[t.j].axpy(x[t.i], &t.mat);
            }
        }
        Ok(EvalBundle {
            x: x.to_vec(),
            f_val,
            grad_f,
            hess_f: self.objective.hessian.clone(),
            h_val,
            jac_h,
            hess_h: self.equalities.iter().map(|q| q.hessian.clone()).collect(),
            g_val,
            dg,
            d2g: self.cone.quadratic.clone(),
        })
    }
}

impl Model for ProblemInstance {
    fn dims(&self) -> Dims {
        Dims {
            n: self.n,
            p: self.p,
            m: self.m,
        }
    }

    fn eval(&self, x: &[f64]) -> Result<EvalBundle> {
        self.eval_bundle(x)
    }
}

impl Mat {
    pub(crate) fn set_row(&mut self, i: usize, v: &[f64]) {
        for (j, vj) in v.iter().enumerate() {
            self[(i, j)] = *vj;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_instance;

    #[test]
    fn squared_scalar_at_minus_one() {
        let inst = corpus_instance("squared-scalar").unwrap();
        let b = inst.eval_bundle(&[-1.0]).unwrap();
        assert_eq!(b.f_val, -1.0);
        assert_eq!(b.grad_f, vec![1.0]);
        assert_eq!(b.g_val.get(0, 0), -1.0);
        assert_eq!(b.dg[0].get(0, 0), 2.0);
        assert_eq!(b.d2g.len(), 1);
        assert_eq!(b.d2g[0].mat.get(0, 0), -2.0);
    }

    #[test]
    fn constant_terms_at_origin() {
        for name in crate::corpus::CORPUS_NAMES {
            let inst = corpus_instance(name).unwrap();
            let b = inst.eval_bundle(&vec![0.0; inst.n]).unwrap();
            assert_eq!(b.f_val, inst.objective.constant);
            let c: Vec<f64> = inst.equalities.iter().map(|q| q.constant).collect();
            assert_eq!(b.h_val, c);
            assert_eq!(b.g_val, inst.cone.constant);
        }
    }

    #[test]
    fn lsdp_strict_hand_evaluation() {
        let inst = corpus_instance("lsdp-strict").unwrap();
        let b = inst.eval_bundle(&[0.5, 2.0]).unwrap();
        assert_eq!(b.g_val, SymMatrix::from_packed(2, vec![0.5, 1.0, 2.0]).unwrap());
        assert_eq!(b.h_val, vec![0.0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let inst = corpus_instance("lsdp-strict").unwrap();
        assert!(matches!(inst.eval_bundle(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn validate_rejects_bad_quadratic_index() {
        let mut inst = corpus_instance("neg-curvature").unwrap();
        inst.cone.quadratic[0].i = 1;
        inst.cone.quadratic[0].j = 0;
        assert!(inst.validate().is_err());
    }
}
