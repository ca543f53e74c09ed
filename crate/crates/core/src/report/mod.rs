//! Deterministic CSV/JSON output, run manifests, configuration files and the
//! reproduction report.
//!
//! Reals are written with 9 significant digits: fixed notation when the
//! decimal exponent lies in `-5..9`, scientific (`d.dddddddde±XX`) otherwise.
//! Integers are written exactly, undefined values as empty fields.

pub mod checks;
pub mod config;
pub mod tolerances;

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::RunReport;

pub use checks::{run_checks, Check, ReportBundle};
pub use config::{parse_config, ConfigFile};
pub use tolerances::{parse_tolerances, Tolerances};

/// Formats `x` with 9 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0.00000000".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        format!("{x:.prec$}", prec = (8 - exp) as usize)
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// `step,i,count,density,ratio,theory_ratio` for every step and every weight
/// up to the larger of the observed support and the compared range.
pub fn run_report_csv(report: &RunReport) -> String {
    let mut out = String::from("step,i,count,density,ratio,theory_ratio\n");
    for s in &report.steps {
        let h = &s.histogram;
        for i in 0..s.ratios.len() {
            let density = if h.total_cells > 0 {
                Some(h.density(i))
            } else {
                None
            };
            writeln!(
                out,
                "{},{i},{},{},{},{}",
                s.step,
                h.count(i),
                fmt_opt(density),
                fmt_opt(s.ratios[i]),
                fmt_opt(s.theory_ratios.get(i).copied().flatten()),
            )
            .unwrap();
        }
    }
    out
}

/// CSV with a header row and one row per record of reals.
pub fn real_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_num).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Record of one command invocation. Only `wall_clock_seconds` varies
/// between identical runs, which is why it lives apart from the outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            parameters,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }
}

/// Writes `contents` to `dir/name`, creating `dir`, and returns the path.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<String> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path.display().to_string())
}
