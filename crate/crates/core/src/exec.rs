//! Data-parallel batch execution: parameter sweeps and batches of QPs.
//!
//! With the `parallel` feature, work is spread over a rayon pool; without it,
//! or with [`Execution::Sequential`], items run in order on the caller's
//! thread. Results are always returned in input order.

use std::io::Write;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::qp::{QpProblem, QpSettings, QpSolution, QpSolver};
use crate::sim::{run, RunSummary};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Ordered map over `items`.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Solves independent QPs; each worker uses its own solver.
pub fn solve_batch(
    problems: &[QpProblem],
    settings: QpSettings,
    exec: Execution,
) -> Vec<Result<QpSolution>> {
    map(exec, problems, |p| QpSolver::new(settings).solve(p, None))
}

/// One swept parameter: a dotted config key and the values it takes.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

impl SweepAxis {
    /// Parses `key=v1,v2,...`; each value is read as a TOML literal, falling
    /// back to a bare string.
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, values) = spec.split_once('=').ok_or_else(|| {
            crate::error::Error::invalid("sweep", format!("expected key=v1,v2,..., got `{spec}`"))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(crate::error::Error::invalid("sweep", "empty key"));
        }
        let values = split_top_level(values)
            .into_iter()
            .map(|v| parse_value(v.trim()))
            .collect::<Vec<_>>();
        if values.is_empty() {
            return Err(crate::error::Error::invalid(
                format!("sweep.{key}"),
                "no values",
            ));
        }
        Ok(Self {
            key: key.to_string(),
            values,
        })
    }
}

/// Splits on commas that are not inside brackets or quotes.
fn split_top_level(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut quoted, mut start) = (0i32, false, 0);
    for (i, ch) in text.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '[' | '{' if !quoted => depth += 1,
            ']' | '}' if !quoted => depth -= 1,
            ',' if !quoted && depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

fn parse_value(text: &str) -> toml::Value {
    let doc = format!("v = {text}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(text.to_string())),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

/// Cartesian product of the axes, first axis varying slowest.
pub fn grid(axes: &[SweepAxis]) -> Vec<Vec<(String, toml::Value)>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for p in &points {
            for v in &axis.values {
                let mut q: Vec<(String, toml::Value)> = p.clone();
                q.push((axis.key.clone(), v.clone()));
                next.push(q);
            }
        }
        points = next;
    }
    points
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub point: Vec<(String, toml::Value)>,
    /// Summary, or the error message that stopped this point.
    pub outcome: std::result::Result<RunSummary, String>,
}

/// Runs `base` once per grid point. A failing point is recorded in its row
/// and does not stop the others.
pub fn run_sweep(base: &ScenarioConfig, axes: &[SweepAxis], exec: Execution) -> Vec<SweepRow> {
    let points = grid(axes);
    map(exec, &points, |point| {
        let outcome = point
            .iter()
            .try_fold(base.clone(), |cfg, (k, v)| cfg.with_value(k, v.clone()))
            .map_err(|e| e.to_string())
            .and_then(|cfg| {
                run(&cfg)
                    .map(|o| o.summary)
                    .map_err(|f| f.error.to_string())
            });
        SweepRow {
            point: point.clone(),
            outcome,
        }
    })
}

/// Writes sweep rows as CSV: one column per axis, then the summary fields.
pub fn write_sweep_csv<W: Write>(axes: &[SweepAxis], rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
    header.extend(
        [
            "status",
            "mean_velocity",
            "mean_velocity_error",
            "max_velocity_error",
            "final_m_hat",
            "final_theta_x",
            "slip_events",
            "qp_failures",
            "error",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<String> = row.point.iter().map(|(_, v)| value_text(v)).collect();
        match &row.outcome {
            Ok(s) => {
                rec.push("ok".into());
                rec.extend(
                    [
                        s.mean_velocity,
                        s.mean_velocity_error,
                        s.max_velocity_error,
                        s.final_m_hat,
                        s.final_theta_x,
                    ]
                    .map(|v| format!("{v:?}")),
                );
                rec.push(s.slip_events.to_string());
                rec.push(s.qp_failures.to_string());
                rec.push(String::new());
            }
            Err(e) => {
                rec.push("error".into());
                rec.extend(std::iter::repeat_n(String::new(), 7));
                rec.push(e.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn value_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
