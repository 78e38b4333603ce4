//! CSV emission: one curves file per entry plus a summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::experiment::ExperimentReport;

pub const CURVES_HEADER: &str = "iter,original_err,derivative_err";
pub const SUMMARY_HEADER: &str = "algorithm,final_original_err,final_derivative_err,predicted_rate";
pub const SUMMARY_FILE: &str = "summary.csv";

/// 17 significant digits: parses back to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn curves_file_name(label: &str) -> String {
    format!("curves_{label}.csv")
}

/// Curves file text for entry `index` of the report; `None` for failed
/// entries.
pub fn curves_csv(report: &ExperimentReport, index: usize) -> Option<String> {
    let res = report.entries[index].outcome.as_ref().ok()?;
    let rows = res.original_errors.len().max(
        res.derivative_iterations.map_or(0, |n| n + 1),
    );
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    for k in 0..rows {
        let orig = res.original_errors.get(k).map(|&v| fmt_num(v)).unwrap_or_default();
        let deriv = match (&res.derivative_errors, res.derivative_iterations) {
            (Some(curve), _) => curve.get(k).map(|&v| fmt_num(v)),
            (None, Some(n)) if n == k => res.final_derivative_err.map(fmt_num),
            _ => None,
        }
        .unwrap_or_default();
        let _ = writeln!(out, "{k},{orig},{deriv}");
    }
    Some(out)
}

/// Summary rows in config order; failed entries keep their label with
/// empty fields.
pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for e in &report.entries {
        match &e.outcome {
            Ok(res) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    e.entry,
                    fmt_num(res.final_original_err),
                    res.final_derivative_err.map(fmt_num).unwrap_or_default(),
                    fmt_num(res.predicted_rate.q),
                );
            }
            Err(_) => {
                let _ = writeln!(out, "{},,,", e.entry);
            }
        }
    }
    out
}

/// Writes the curves files and `summary.csv` into directory `dir`,
/// creating it if needed. Returns the written paths.
pub fn emit_csv(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut write = |name: String, text: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for (i, e) in report.entries.iter().enumerate() {
        if let Some(text) = curves_csv(report, i) {
            write(curves_file_name(e.entry.label()), text)?;
        }
    }
    write(SUMMARY_FILE.to_string(), summary_csv(report))?;
    Ok(written)
}
