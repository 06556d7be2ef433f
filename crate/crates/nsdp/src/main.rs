use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nsdp::output::{codecay_summary, report_json, robinson_json, wcr_json};
use nsdp::{load_instance, parse_point, parse_point_lines, read_text, serialize_instance, write_trace};
use nsdp_core::subspace::DEFAULT_RANK_TOL;
use nsdp_core::{
    corpus_instance, kl_diagnostic, residual_report, robinson_diagnostic, run_penalty, wcr_diagnostic, wsonc_check,
    SolverConfig, SolverStatus, CORPUS_NAMES,
};
use serde_json::json;

/// Penalty solver and stationarity certificates for nonlinear SDPs.
#[derive(Parser)]
#[command(name = "nsdp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the penalty method and write a JSON-lines trace.
    Solve {
        /// Instance file, or `corpus:NAME`.
        path: String,
        #[command(flatten)]
        solver: SolverFlags,
        /// Starting point file (default: the origin).
        #[arg(long)]
        start: Option<PathBuf>,
        /// Trace destination (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print residual reports and diagnostics for given points.
    Certify {
        path: String,
        #[arg(long, required_unless_present = "seq")]
        point: Option<PathBuf>,
        /// Reference point (default: the certified point, or the last point of --seq).
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        /// JSON-lines file of points; solver traces are accepted.
        #[arg(long)]
        seq: Option<PathBuf>,
        /// Weak constant-rank sampling diagnostic at the reference point.
        #[arg(long)]
        wcr: bool,
        #[arg(long, default_value_t = 1e-3)]
        wcr_radius: f64,
        #[arg(long, default_value_t = 50)]
        wcr_samples: usize,
        /// Robinson constraint qualification diagnostic at the reference point.
        #[arg(long)]
        robinson: bool,
        /// Weak second-order necessary condition at the point.
        #[arg(long)]
        wsonc: bool,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Built-in instances.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    List,
    Show {
        name: String,
    },
    Export {
        name: String,
        path: PathBuf,
    },
    /// Solve every corpus instance with default settings, one summary line each.
    Batch {
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        solver: SolverFlags,
    },
}

#[derive(Args, Clone)]
struct SolverFlags {
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    rho_mult: Option<f64>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    eps_mult: Option<f64>,
    /// Outer convergence tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
    #[arg(long)]
    armijo_c: Option<f64>,
    #[arg(long)]
    backtrack: Option<f64>,
    #[arg(long)]
    curvature_step: Option<f64>,
    #[arg(long)]
    inner_rtol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SolverFlags {
    fn config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            rho0: self.rho0.unwrap_or(d.rho0),
            rho_mult: self.rho_mult.unwrap_or(d.rho_mult),
            eps0: self.eps0.unwrap_or(d.eps0),
            eps_mult: self.eps_mult.unwrap_or(d.eps_mult),
            tol_outer: self.tol.unwrap_or(d.tol_outer),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            max_inner: self.max_inner.unwrap_or(d.max_inner),
            armijo_c: self.armijo_c.unwrap_or(d.armijo_c),
            backtrack: self.backtrack.unwrap_or(d.backtrack),
            curvature_step: self.curvature_step.unwrap_or(d.curvature_step),
            inner_rtol: self.inner_rtol.unwrap_or(d.inner_rtol),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

fn status_code(s: SolverStatus) -> u8 {
    match s {
        SolverStatus::Converged => 0,
        SolverStatus::InfeasibleStationary => 2,
        SolverStatus::BudgetExhausted | SolverStatus::InnerFailure => 3,
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("{}: cannot create", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn solve(path: &str, flags: &SolverFlags, start: Option<&Path>, out: Option<&Path>) -> Result<u8> {
    let inst = load_instance(path)?;
    let x0 = match start {
        Some(p) => {
            let pt = parse_point(&read_text(p)?).with_context(|| p.display().to_string())?;
            if pt.x.len() != inst.n {
                bail!(
                    "{}: starting point has {} entries, instance has n = {}",
                    p.display(),
                    pt.x.len(),
                    inst.n
                );
            }
            pt.x
        }
        None => vec![0.0; inst.n],
    };
    let trace = run_penalty(&inst, &flags.config(), &x0)?;
    let mut w = output(out)?;
    write_trace(&trace, &mut w)?;
    w.flush()?;
    Ok(status_code(trace.status))
}

#[allow(clippy::too_many_arguments)]
fn certify(
    path: &str,
    point: Option<&Path>,
    reference: Option<&Path>,
    seq: Option<&Path>,
    wcr: Option<(f64, usize)>,
    robinson: bool,
    wsonc: bool,
    tol: f64,
    seed: u64,
) -> Result<u8> {
    let inst = load_instance(path)?;
    let mut points = Vec::new();
    if let Some(p) = point {
        points.push(parse_point(&read_text(p)?).with_context(|| p.display().to_string())?);
    }
    if let Some(s) = seq {
        points.extend(parse_point_lines(&read_text(s)?).with_context(|| s.display().to_string())?);
    }
    if points.is_empty() {
        bail!("no points to certify");
    }
    let iterates = points
        .iter()
        .enumerate()
        .map(|(k, p)| p.to_iterate(&inst, k))
        .collect::<Result<Vec<_>, _>>()?;
    let x_ref = match reference {
        Some(r) => {
            let x = parse_point(&read_text(r)?).with_context(|| r.display().to_string())?.x;
            if x.len() != inst.n {
                bail!(
                    "{}: reference point has {} entries, instance has n = {}",
                    r.display(),
                    x.len(),
                    inst.n
                );
            }
            x
        }
        None => iterates[iterates.len() - 1].x.clone(),
    };
    let mut w = output(None)?;
    let mut reports = Vec::with_capacity(iterates.len());
    for it in &iterates {
        let r = residual_report(&inst, it, &x_ref)?;
        writeln!(w, "{}", report_json(&r))?;
        reports.push(r);
    }
    if seq.is_some() {
        let kl = kl_diagnostic(&inst, &iterates)?;
        writeln!(w, "{}", codecay_summary(&reports, &kl))?;
    }
    if let Some((radius, samples)) = wcr {
        let r = wcr_diagnostic(&inst, &x_ref, radius, samples, DEFAULT_RANK_TOL, seed)?;
        writeln!(w, "{}", wcr_json(&r))?;
    }
    if robinson {
        writeln!(w, "{}", robinson_json(&robinson_diagnostic(&inst, &x_ref, tol)?))?;
    }
    if wsonc {
        let it = &iterates[iterates.len() - 1];
        let line = match wsonc_check(&inst, &it.x, &it.mu, &it.omega, tol) {
            Ok(holds) => json!({"wsonc": holds}),
            Err(e @ nsdp_core::Error::NotKkt { .. }) => json!({"wsonc": null, "reason": e.to_string()}),
            Err(e) => return Err(e.into()),
        };
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(0)
}

fn batch(jobs: usize, flags: &SolverFlags) -> Result<u8> {
    let cfg = flags.config();
    let names: Vec<&str> = CORPUS_NAMES.to_vec();
    let jobs = jobs.clamp(1, names.len());
    let mut lines = vec![String::new(); names.len()];
    std::thread::scope(|s| -> Result<()> {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                let (names, cfg) = (&names, &cfg);
                s.spawn(move || -> Result<Vec<(usize, String)>> {
                    let mut out = Vec::new();
                    for (i, name) in names.iter().enumerate().skip(j).step_by(jobs) {
                        let inst = corpus_instance(name)?;
                        let t = run_penalty(&inst, cfg, &vec![0.0; inst.n])?;
                        let last = t.reports.last().map(report_json);
                        let line = json!({
                            "name": name,
                            "status": t.status.as_str(),
                            "outer_iterations": t.iterates.len(),
                            "x": t.x_ref_used,
                            "report": last,
                        });
                        out.push((i, line.to_string()));
                    }
                    Ok(out)
                })
            })
            .collect();
        for h in handles {
            for (i, line) in h.join().expect("batch worker panicked")? {
                lines[i] = line;
            }
        }
        Ok(())
    })?;
    let mut w = output(None)?;
    for l in lines {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(0)
}

fn corpus(action: &CorpusAction) -> Result<u8> {
    match action {
        CorpusAction::List => {
            for n in CORPUS_NAMES {
                println!("{n}");
            }
        }
        CorpusAction::Show { name } => print!("{}", serialize_instance(&corpus_instance(name)?)),
        CorpusAction::Export { name, path } => {
            let text = serialize_instance(&corpus_instance(name)?);
            std::fs::write(path, text).with_context(|| format!("{}: cannot write", path.display()))?;
        }
        CorpusAction::Batch { jobs, solver } => return batch(*jobs, solver),
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve {
            path,
            solver,
            start,
            out,
        } => solve(&path, &solver, start.as_deref(), out.as_deref()),
        Command::Certify {
            path,
            point,
            reference,
            seq,
            wcr,
            wcr_radius,
            wcr_samples,
            robinson,
            wsonc,
            tol,
            seed,
        } => certify(
            &path,
            point.as_deref(),
            reference.as_deref(),
            seq.as_deref(),
            wcr.then_some((wcr_radius, wcr_samples)),
            robinson,
            wsonc,
            tol,
            seed,
        ),
        Command::Corpus { action } => corpus(&action),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("nsdp: {e:#}");
            ExitCode::from(1)
        }
    }
}
