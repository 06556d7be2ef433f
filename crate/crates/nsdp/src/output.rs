//! JSON encodings of reports, diagnostics and traces.
//!
//! Non-finite numbers are written as the strings `"inf"` / `"-inf"`, and NaN
//! (an absent penalty parameter, say) as `null`.

use std::io::Write;

use nsdp_core::{Iterate, ResidualReport, RobinsonReport, SolverTrace, WcrReport};
use serde_json::{json, Map, Value};

pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        Value::Null
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().copied().map(num).collect())
}

/// Flat object with one key per report field.
pub fn report_json(r: &ResidualReport) -> Value {
    let mut o = Map::new();
    o.insert("feas_eq".into(), num(r.feas_eq));
    o.insert("feas_cone".into(), num(r.feas_cone));
    o.insert("stationarity".into(), num(r.stationarity));
    o.insert("compl_cakkt".into(), num(r.compl_cakkt));
    o.insert("compl_akkt".into(), num(r.compl_akkt));
    o.insert("inner_gap".into(), num(r.inner_gap));
    o.insert("so_residual".into(), num(r.so_residual));
    o.insert("subspace_dim".into(), json!(r.subspace_dim));
    o.insert("eps_used".into(), num(r.eps_used));
    o.insert("rho_used".into(), num(r.rho_used));
    o.insert("subspace_unstable".into(), json!(r.subspace_unstable));
    Value::Object(o)
}

pub fn iterate_json(it: &Iterate) -> Map<String, Value> {
    let mut o = Map::new();
    o.insert("k".into(), json!(it.k));
    o.insert("x".into(), nums(&it.x));
    o.insert("mu".into(), nums(&it.mu));
    o.insert("Omega".into(), nums(it.omega.packed()));
    o.insert("rho".into(), num(it.rho));
    o.insert("eps".into(), num(it.eps));
    o
}

pub fn wcr_json(w: &WcrReport) -> Value {
    json!({"wcr": {
        "center_rank": w.center_rank,
        "sampled_ranks": w.sampled_ranks,
        "radius": num(w.radius),
        "holds": w.holds,
    }})
}

pub fn robinson_json(r: &RobinsonReport) -> Value {
    json!({"robinson": {
        "rank_ok": r.rank_ok,
        "slater_margin": num(r.slater_margin),
        "holds": r.holds,
    }})
}

/// JSON lines for a trace: one object per outer iterate with its report and
/// inner iteration count, then `{"status", "x_ref_used"}`.
pub fn trace_lines(trace: &SolverTrace) -> Vec<String> {
    let mut lines = Vec::with_capacity(trace.iterates.len() + 1);
    for (k, (it, rep)) in trace.iterates.iter().zip(&trace.reports).enumerate() {
        let mut o = iterate_json(it);
        o.insert("inner_iterations".into(), json!(trace.inner_iterations[k]));
        o.insert("report".into(), report_json(rep));
        lines.push(Value::Object(o).to_string());
    }
    lines.push(json!({"status": trace.status.as_str(), "x_ref_used": nums(&trace.x_ref_used)}).to_string());
    lines
}

pub fn write_trace(trace: &SolverTrace, out: &mut impl Write) -> std::io::Result<()> {
    for line in trace_lines(trace) {
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Co-decay summary of a report sequence: whether `compl_cakkt` strictly
/// decreases, and the smallest `C` with `compl_akkt <= C·√δ` where `δ` bounds
/// both the CAKKT residual and the infeasibility.
pub fn codecay_summary(reports: &[ResidualReport], kl: &[(usize, f64)]) -> Value {
    let decreasing = reports.windows(2).all(|w| w[1].compl_cakkt < w[0].compl_cakkt);
    let constant = reports
        .iter()
        .filter_map(|r| {
            let delta = r.compl_cakkt.max(r.feas_eq + r.feas_cone);
            (delta > 0.0).then(|| r.compl_akkt / delta.sqrt())
        })
        .fold(0.0_f64, f64::max);
    json!({"summary": {
        "points": reports.len(),
        "compl_cakkt_decreasing": decreasing,
        "akkt_cakkt_constant": num(constant),
        "kl_ratios": Value::Array(kl.iter().map(|&(_, r)| num(r)).collect()),
    }})
}
