//! Point files: `{"x": [..], "mu": [..], "Omega": [packed], "rho": r, "eps": e}`
//! with everything but `x` optional. Trace lines written by [`crate::write_trace`]
//! are valid point files.

use nsdp_core::{multipliers_from_penalty, Error, Iterate, ProblemInstance, SymMatrix};
use serde::Deserialize;

use crate::FormatError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PointFile {
    pub x: Vec<f64>,
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    #[serde(default, rename = "Omega")]
    pub omega: Option<Vec<f64>>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub k: Option<usize>,
}

pub fn parse_point(text: &str) -> Result<PointFile, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::Syntax(e.to_string()))
}

/// One point per non-empty line; trace status lines are skipped.
pub fn parse_point_lines(text: &str) -> Result<Vec<PointFile>, FormatError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value =
            serde_json::from_str(line).map_err(|e| FormatError::Syntax(format!("line {}: {e}", no + 1)))?;
        if v.get("status").is_some() && v.get("x").is_none() {
            continue;
        }
        out.push(serde_json::from_value(v).map_err(|e| FormatError::Schema {
            path: format!("line {}", no + 1),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

impl PointFile {
    /// Builds an iterate for `inst`. Missing multipliers come from the penalty
    /// formulas when `rho` is given and are zero otherwise.
    pub fn to_iterate(&self, inst: &ProblemInstance, k: usize) -> Result<Iterate, FormatError> {
        let dim = |what, expected, got| FormatError::Core(Error::Dimension { what, expected, got });
        if self.x.len() != inst.n {
            return Err(dim("point", inst.n, self.x.len()));
        }
        let (pen_mu, pen_om) = match self.rho {
            Some(rho) => multipliers_from_penalty(inst, &self.x, rho)?,
            None => (vec![0.0; inst.p], SymMatrix::zeros(inst.m)),
        };
        let mu = match &self.mu {
            Some(mu) if mu.len() != inst.p => return Err(dim("equality multiplier", inst.p, mu.len())),
            Some(mu) => mu.clone(),
            None => pen_mu,
        };
        let omega = match &self.omega {
            Some(om) => {
                let len = inst.m * (inst.m + 1) / 2;
                if om.len() != len {
                    return Err(dim("packed cone multiplier", len, om.len()));
                }
                SymMatrix::from_packed(inst.m, om.clone())?
            }
            None => pen_om,
        };
        Ok(Iterate {
            x: self.x.clone(),
            mu,
            omega,
            rho: self.rho.unwrap_or(f64::NAN),
            eps: self.eps.unwrap_or(f64::NAN),
            k: self.k.unwrap_or(k),
        })
    }
}
