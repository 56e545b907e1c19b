use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use fconv_core::PropertyReport;
use serde::Serialize;

use crate::config::Format;

pub const REPORT_SCHEMA: &str = include_str!("../assets/report.schema.json");

#[derive(Serialize)]
struct ReportDocument<'a> {
    tool: &'static str,
    version: &'static str,
    /// Unix seconds; the only field that differs between identical runs.
    generated_at: u64,
    #[serde(flatten)]
    report: &'a PropertyReport,
}

pub fn write_report(dir: &Path, format: Format, report: &PropertyReport) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    match format {
        Format::Json => {
            let path = dir.join(format!("{}.json", report.suite));
            let doc = ReportDocument {
                tool: "fconv",
                version: env!("CARGO_PKG_VERSION"),
                generated_at: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
                report,
            };
            let mut text = serde_json::to_string_pretty(&doc)?;
            text.push('\n');
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            Ok(path)
        }
        Format::Csv => {
            let path = dir.join(format!("{}.csv", report.suite));
            let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
            w.write_record([
                "suite",
                "index",
                "dim",
                "operator",
                "check",
                "pathway",
                "raw_residual",
                "error_estimate",
                "allowance",
                "residual",
                "note",
            ])?;
            for c in &report.cases {
                w.write_record([
                    report.suite.clone(),
                    c.index.to_string(),
                    c.dim.to_string(),
                    c.operator.clone(),
                    c.check.clone(),
                    serde_json::to_value(c.pathway)?.as_str().unwrap_or_default().to_string(),
                    c.raw_residual.to_string(),
                    c.error_estimate.to_string(),
                    c.allowance.to_string(),
                    c.residual.to_string(),
                    c.note.clone().unwrap_or_default(),
                ])?;
            }
            w.flush()?;
            Ok(path)
        }
    }
}

fn color_enabled() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stdout().is_terminal()
}

pub fn print_summary(reports: &[PropertyReport]) -> std::io::Result<()> {
    let color = color_enabled();
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{:<24} {:>7} {:>12} {:>10} {:>9}  result",
        "suite", "cases", "max resid", "tolerance", "mode"
    )?;
    for r in reports {
        let status = match (r.pass, color) {
            (true, true) => "\x1b[32mpass\x1b[0m",
            (false, true) => "\x1b[31mFAIL\x1b[0m",
            (true, false) => "pass",
            (false, false) => "FAIL",
        };
        let mode = serde_json::to_value(r.mode)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        writeln!(
            out,
            "{:<24} {:>7} {:>12.3e} {:>10.1e} {:>9}  {}",
            r.suite, r.case_count, r.max_residual, r.tolerance, mode, status
        )?;
    }
    Ok(())
}
