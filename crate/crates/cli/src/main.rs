mod config;

use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use maxint_core::analysis::{self, normalize, LimitSide};
use maxint_core::landmarks::{landmarks, m_position_certificate};
use maxint_core::measure::{moment_report, restricted_measure, Side};
use maxint_core::solver::{solve_multistart, SolveOptions};
use maxint_core::Error as CoreError;
use serde_json::{json, Value};

use config::{load_body, require_method, resolve_method, solver_options, Cli, Command, RunConfig};

const VERSION: &str = concat!("maxint ", env!("CARGO_PKG_VERSION"));

struct Report {
    parameters: Value,
    result: Value,
    csv: Vec<(&'static str, String)>,
    summary: String,
    converged: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("MAXINT_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("MAXINT_THREADS={v} is not a number"))?;
        if n == 0 {
            bail!("MAXINT_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cmd: &Command) -> Result<bool> {
    let common = cmd.common();
    let (body, source) = load_body(common)?;
    let method = resolve_method(common, body.dim())?;
    let opts = solver_options(common, method)?;
    let report = match cmd {
        Command::Solve { r, multistart, .. } => {
            let method = require_method(method)?;
            let opts = SolveOptions { method, ..opts.clone() };
            let runs = solve_multistart(&body, *r, &opts, *multistart, common.seed.unwrap_or(0))?;
            let best = &runs[0];
            Report {
                parameters: json!({ "r": r, "multistart": multistart }),
                summary: format!(
                    "solve r={r} m={} grad_norm={:.3e} residual={} regime={} status={} flags={}",
                    best.m_value,
                    best.grad_norm,
                    fmt_opt(best.isotropy_residual),
                    label(&best.regime),
                    label(&best.status),
                    best.flags.len()
                ),
                converged: runs.iter().all(|s| !s.status.is_failure()),
                csv: vec![("trace", best.trace_csv())],
                result: json!({ "best": best, "starts": if runs.len() > 1 { json!(runs) } else { Value::Null } }),
            }
        }
        Command::Sweep { radii, .. } => {
            let method = require_method(method)?;
            let opts = SolveOptions { method, ..opts.clone() };
            let p = analysis::sweep(&body, radii, &opts)?;
            Report {
                parameters: json!({ "radii": radii }),
                summary: format!(
                    "sweep {} radii m=[{}] violations={}",
                    p.samples.len(),
                    p.samples
                        .iter()
                        .map(|s| format!("{:.6}", s.m_value))
                        .collect::<Vec<_>>()
                        .join(","),
                    p.violations.len()
                ),
                converged: !p.any_failed(),
                csv: vec![("profile", p.to_csv())],
                result: serde_json::to_value(&p)?,
            }
        }
        Command::Landmarks { .. } => {
            let vol_method = method.unwrap_or(maxint_core::Method::Exact2d);
            let l = landmarks(&body, vol_method)?;
            let cert = match method {
                Some(m) => Some(m_position_certificate(&body, m)?),
                None => None,
            };
            Report {
                parameters: json!({}),
                summary: format!(
                    "landmarks r_J={} r_L={} r_M={} vol_K={}{}",
                    l.r_j,
                    l.r_l,
                    l.r_m,
                    l.vol_k,
                    cert.as_ref()
                        .map(|c| format!(" rho={} C={}", c.rho, c.c))
                        .unwrap_or_default()
                ),
                converged: true,
                csv: Vec::new(),
                result: json!({ "landmarks": l, "m_position": cert }),
            }
        }
        Command::Limit {
            side,
            radii,
            cluster_window,
            ..
        } => {
            let method = require_method(method)?;
            let opts = SolveOptions { method, ..opts.clone() };
            let side: LimitSide = (*side).into();
            let (positioned, normalization) = match normalize(&body, side) {
                Ok((b, n)) => (b, Some(n)),
                Err(CoreError::Unsupported(_)) => (body.clone(), None),
                Err(e) => return Err(e.into()),
            };
            let rep = analysis::limit_measure(&positioned, side, radii, &opts, *cluster_window)?;
            let masses: Vec<String> = rep.final_clusters.iter().map(|c| format!("{:.4}", c.mass)).collect();
            Report {
                parameters: json!({ "side": side, "radii": radii, "cluster_window_deg": cluster_window }),
                summary: format!(
                    "limit side={} clusters={} masses=[{}] residual={:.3e} flags={}",
                    label(&side),
                    rep.final_clusters.len(),
                    masses.join(","),
                    rep.final_isotropy_residual,
                    rep.flags.len()
                ),
                converged: rep.steps.iter().all(|s| !s.status.is_failure()),
                csv: vec![("clusters", rep.clusters_csv()), ("steps", rep.steps_csv())],
                result: json!({ "normalization": normalization, "report": rep }),
            }
        }
        Command::Bprobe {
            lambda,
            t_min,
            t_max,
            t_step,
            ..
        } => {
            let method = require_method(method)?;
            let grid = analysis::uniform_grid(*t_min, *t_max, *t_step)?;
            let rep = analysis::b_probe(&body, lambda, &grid, method)?;
            Report {
                parameters: json!({ "lambda": lambda, "t_min": t_min, "t_max": t_max, "t_step": t_step }),
                summary: format!(
                    "bprobe points={} min_margin={:.3e} min_midpoint={:.3e} verdict={}",
                    rep.t.len(),
                    rep.min_concavity_margin,
                    rep.min_midpoint_residual,
                    label(&rep.verdict)
                ),
                converged: true,
                csv: vec![("table", rep.to_csv()), ("midpoints", rep.midpoints_csv())],
                result: serde_json::to_value(&rep)?,
            }
        }
        Command::Isotropy { r, region, .. } => {
            let method = require_method(method)?;
            let side: Side = (*region).into();
            let m = restricted_measure(&body, *r, side, method)?;
            let rep = moment_report(&m)?;
            Report {
                parameters: json!({ "r": r, "region": region }),
                summary: format!(
                    "isotropy r={r} mass={} residual={:.6e} degenerate={}",
                    rep.mass,
                    rep.residual,
                    rep.degeneracy.is_some()
                ),
                converged: true,
                csv: vec![("measure", m.to_csv())],
                result: json!({ "moment": rep, "mass_std_error": m.mass.std_error }),
            }
        }
    };

    let config = RunConfig {
        command: cmd.name().to_string(),
        body_source: source,
        body: body.to_spec(),
        method,
        solver: opts,
        out_dir: common.out_dir.display().to_string(),
        parameters: report.parameters,
    };
    write_artifacts(&common.out_dir, cmd.name(), &config, &report.result, &report.csv)?;
    println!("{}", report.summary);
    Ok(report.converged)
}

fn write_artifacts(dir: &Path, name: &str, config: &RunConfig, result: &Value, csv: &[(&str, String)]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let doc = json!({ "version": VERSION, "config": config, "result": result });
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    for (suffix, body) in csv {
        let path = dir.join(format!("{name}_{suffix}.csv"));
        std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn label<T: serde::Serialize>(x: &T) -> String {
    serde_json::to_value(x)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "none".into())
}
