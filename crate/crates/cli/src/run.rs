//! Executes a validated [`RunConfig`].

use std::path::PathBuf;

use clockwork::devol::optimize;
use clockwork::lindblad::Liouvillian;
use clockwork::machines::{
    cop, dimer_scatter, rectification, rectification_sweep, refrigerator_map, solve_point, sweep, switch_sweep,
    RectificationResult, ScatterSample,
};
use clockwork::thermo::{format_float, CurrentsReport};

use crate::config::{Job, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{write_run, Artifact};

/// What a successful run printed and wrote.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: String,
    pub written: Vec<PathBuf>,
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

fn list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|&v| sci(v)).collect();
    format!("[{}]", items.join(","))
}

fn rectification_row(r: &RectificationResult) -> Vec<String> {
    let mut row = r.csv_row();
    row.push(u8::from(r.forward_larger).to_string());
    row
}

fn rectification_header() -> Vec<String> {
    let mut h: Vec<String> = RectificationResult::CSV_HEADER.iter().map(|s| s.to_string()).collect();
    h.push("forward_larger".into());
    h
}

/// Computes every artifact in memory, then writes them; a failed run leaves
/// no partial outputs behind.
pub fn run(cfg: &RunConfig) -> CliResult<Outcome> {
    let tol = &cfg.tolerances;
    let cmd = cfg.command;
    let (artifacts, summary) = match &cfg.job {
        Job::Steady {
            system,
            channels,
            superoperator,
        } => {
            let s = solve_point(system, tol, false)?;
            let mut header = CurrentsReport::csv_header(system.n_baths(), system.n_rotors);
            header.push("residual".into());
            let mut row = s.report.csv_row();
            row.push(format_float(s.residual));
            let mut artifacts = vec![Artifact::table(format!("{cmd}.csv"), &header, &[row])];
            if *channels || *superoperator {
                let l = Liouvillian::with_tolerances(system.clone(), *tol)?;
                if *channels {
                    artifacts.push(render(format!("{cmd}.channels.csv"), |w| l.write_channel_table(w))?);
                }
                if *superoperator {
                    artifacts.push(render(format!("{cmd}.superoperator.csv"), |w| l.write_superoperator(w))?);
                }
            }
            let cop_text = cop(&s.report).map_or_else(|| "undefined".to_string(), sci);
            let summary = format!(
                "{cmd} residual={} q_dot_total={} sigma_dot={} cop={cop_text}",
                sci(s.residual),
                list(&s.report.q_dot_total),
                sci(s.report.sigma_dot),
            );
            (artifacts, summary)
        }
        Job::Sweep { system, axis, grid } => {
            let r = sweep(system, *axis, grid, tol)?;
            let max_res = r.points.iter().map(|p| p.residual).fold(0.0, f64::max);
            let summary = format!(
                "{cmd} axis={} points={} max_residual={}",
                axis.name(),
                r.points.len(),
                sci(max_res)
            );
            (vec![Artifact::table(format!("{cmd}.csv"), &r.csv_header(), &r.csv_rows())], summary)
        }
        Job::Scatter {
            samples,
            seed,
            zero_tau,
            ranges,
        } => {
            let out = dimer_scatter(*samples, ranges, *seed, *zero_tau, tol)?;
            let rows: Vec<Vec<String>> = out.iter().map(ScatterSample::csv_row).collect();
            let cooling = out.iter().filter(|s| s.q_dot_d[0] > 1e-12).count();
            let negative_nd = out.iter().filter(|s| s.q_dot_nd_sum < -1e-10).count();
            let summary = format!("{cmd} samples={} refrigerating={cooling} negative_nd={negative_nd}", out.len());
            (vec![Artifact::table(format!("{cmd}.csv"), &ScatterSample::CSV_HEADER, &rows)], summary)
        }
        Job::RefrigeratorMap { system, k12, k13 } => {
            let map = refrigerator_map(system, k12, k13, tol)?;
            let region = map.refrigeration_region();
            let best = map
                .reports
                .iter()
                .map(|r| r.q_dot_d[0])
                .fold(f64::NEG_INFINITY, f64::max);
            let summary = format!(
                "{cmd} cells={} refrigerating={} max_q_dot_d_0={}",
                map.reports.len(),
                region.len(),
                sci(best)
            );
            (vec![Artifact::table(format!("{cmd}.csv"), &map.csv_header(), &map.csv_rows())], summary)
        }
        Job::Switch { system, grid } => {
            let r = switch_sweep(system, grid, tol)?;
            let degenerate = r.points.iter().filter(|p| p.degenerate).count();
            let summary = format!("{cmd} points={} degenerate={degenerate}", r.points.len());
            (vec![Artifact::table(format!("{cmd}.csv"), &r.csv_header(), &r.csv_rows())], summary)
        }
        Job::Rectify { system, sweep: None } => {
            let r = rectification(system, tol)?;
            let ratio = r.ratio_max_min.map_or_else(|| "undefined".to_string(), sci);
            let summary = format!(
                "{cmd} q_forward={} q_backward={} ratio_max_min={ratio}",
                sci(r.q_forward),
                sci(r.q_backward)
            );
            let table = Artifact::table(format!("{cmd}.csv"), &rectification_header(), &[rectification_row(&r)]);
            (vec![table], summary)
        }
        Job::Rectify {
            system,
            sweep: Some((axis, grid)),
        } => {
            let out = rectification_sweep(system, *axis, grid, tol)?;
            let mut header = vec![axis.name()];
            header.extend(rectification_header());
            let rows: Vec<Vec<String>> = out
                .iter()
                .map(|(v, r)| {
                    let mut row = vec![format_float(*v)];
                    row.extend(rectification_row(r));
                    row
                })
                .collect();
            let peak = out
                .iter()
                .filter_map(|(v, r)| r.ratio_max_min.map(|x| (*v, x)))
                .fold(None, |acc: Option<(f64, f64)>, (v, x)| match acc {
                    Some((_, best)) if best >= x => acc,
                    _ => Some((v, x)),
                });
            let peak_text = peak.map_or_else(|| "undefined".to_string(), |(v, x)| format!("{} at {}", sci(x), sci(v)));
            let summary = format!("{cmd} axis={} points={} peak_ratio={peak_text}", axis.name(), out.len());
            (vec![Artifact::table(format!("{cmd}.csv"), &header, &rows)], summary)
        }
        Job::Optimize { problem, settings } => {
            let r = optimize(problem, settings)?;
            let history: Vec<Vec<String>> = r
                .history
                .iter()
                .enumerate()
                .map(|(k, v)| vec![(k + 1).to_string(), format_float(*v)])
                .collect();
            let best: Vec<Vec<String>> = problem
                .parameters
                .iter()
                .zip(&r.best)
                .map(|(p, v)| vec![p.binding.name(), format_float(*v)])
                .collect();
            let summary = format!(
                "{cmd} best={} iterations={} evaluations={}",
                sci(r.best_value),
                r.history.len(),
                r.evaluations
            );
            let artifacts = vec![
                Artifact::table(format!("{cmd}.csv"), &["iteration", "best_value"], &history),
                Artifact::table(format!("{cmd}.best.csv"), &["parameter", "value"], &best),
            ];
            (artifacts, summary)
        }
    };
    let written = write_run(&cfg.output_dir, cmd, cfg.job.seed(), &artifacts, &cfg.resolved, &summary)?;
    Ok(Outcome { summary, written })
}

fn render<F>(name: String, f: F) -> CliResult<Artifact>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::io(&name, e))?;
    let contents = String::from_utf8(buf).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
    let rows = contents.lines().count().saturating_sub(1);
    Ok(Artifact { name, contents, rows })
}
