//! JSON and CSV rendering of robustness results.
//!
//! Numbers use the shortest decimal form that parses back to the same `f64`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::RobustnessResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(format!("unknown format `{s}` (expected json or csv)")),
        }
    }
}

pub const CSV_HEADER: &str = "threshold,delta,nominal,worst_case";

fn csv_row(r: &RobustnessResult) -> String {
    format!("{},{},{},{}", r.threshold, r.delta, r.nominal_value, r.worst_case_value)
}

/// Renders one result. JSON carries every field; CSV a header and one data row.
pub fn write_result(r: &RobustnessResult, fmt: OutputFormat) -> String {
    match fmt {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("result serializes");
            s.push('\n');
            s
        }
        OutputFormat::Csv => write_sweep(std::slice::from_ref(r), OutputFormat::Csv),
    }
}

/// Renders a list of results: a JSON array or CSV rows in input order.
pub fn write_sweep(rs: &[RobustnessResult], fmt: OutputFormat) -> String {
    match fmt {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(rs).expect("results serialize");
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in rs {
                let _ = writeln!(out, "{}", csv_row(r));
            }
            out
        }
    }
}

pub fn parse_result(json: &str) -> Result<RobustnessResult> {
    serde_json::from_str(json).map_err(|e| Error::MalformedResult(e.to_string()))
}
