//! CSV report persistence and TOML config I/O.
//!
//! Floats are written with 17 significant digits ('.' decimal separator),
//! which round-trips f64 exactly; identical runs therefore produce
//! byte-identical files.

use crate::error::{Error, Result};
use crate::scenarios::{ScenarioConfig, ScenarioReport};
use std::io::Write;
use std::path::Path;

/// 17-significant-digit scientific form; parses back to the same bits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const REPORT_HEADER: &str = "scenario,estimator,lambda,repetition,mse,lip,hnorm,seed";

/// Render the per-repetition rows as CSV text.
pub fn report_csv(report: &ScenarioReport) -> String {
    let mut out = String::with_capacity(64 + 96 * report.rows.len());
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.estimator,
            format_f64(r.lambda),
            r.repetition,
            format_f64(r.mse),
            format_f64(r.lip),
            format_f64(r.hnorm),
            r.seed
        ));
    }
    out
}

pub fn write_report_csv(report: &ScenarioReport, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(report_csv(report).as_bytes())?;
    Ok(())
}

/// Parse a scenario config from TOML; unknown keys are rejected with the
/// offending key named in the error.
pub fn read_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn write_config(cfg: &ScenarioConfig, path: &Path) -> Result<()> {
    let text =
        toml::to_string_pretty(cfg).map_err(|e| Error::Config(format!("serialize: {e}")))?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
