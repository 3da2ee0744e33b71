//! Rendering coverage reports as CSV or markdown tables.

use serde::{Deserialize, Serialize};

use super::coverage::CoverageReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(Error::Config(format!("unknown table format `{other}`"))),
        }
    }
}

/// One parsed table row; numbers carry the printed precision.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub case: usize,
    pub mechanism: String,
    pub params: [f64; 2],
    pub n: usize,
    pub level: f64,
    pub scb: (f64, f64),
    pub cc: (f64, f64),
}

const CSV_HEADER: &str = "case,mechanism,alpha0,alpha1,n,level,scb_coverage,scb_width,cc_coverage,cc_width,replications,failures";

/// Rows ordered by report then level, as in the published layout (rows by n
/// and level, SCB and SCB-CC side by side).
pub fn emit_table(reports: &[CoverageReport], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
        }
        TableFormat::Markdown => {
            out.push_str("| Case | Mechanism | (α0, α1) | n | 1-α | SCB | SCB-CC |\n");
            out.push_str("|---|---|---|---|---|---|---|\n");
        }
    }
    for r in reports {
        let s = &r.scenario;
        for l in &r.levels {
            match format {
                TableFormat::Csv => out.push_str(&format!(
                    "{},{},{},{},{},{},{:.3},{:.3},{:.3},{:.3},{},{}\n",
                    s.case.index(),
                    s.mechanism,
                    s.params[0],
                    s.params[1],
                    s.n,
                    l.level,
                    l.scb.coverage,
                    l.scb.width,
                    l.cc.coverage,
                    l.cc.width,
                    r.used,
                    r.failures
                )),
                TableFormat::Markdown => out.push_str(&format!(
                    "| {} | {} | ({}, {}) | {} | {} | {:.3}({:.3}) | {:.3}({:.3}) |\n",
                    s.case.index(),
                    s.mechanism,
                    s.params[0],
                    s.params[1],
                    s.n,
                    l.level,
                    l.scb.coverage,
                    l.scb.width,
                    l.cc.coverage,
                    l.cc.width
                )),
            }
        }
    }
    out
}

fn num(s: &str, line: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Schema { line, message: format!("not a number: `{s}`") })
}

/// Parses the CSV form back into rows.
pub fn parse_csv_table(text: &str) -> Result<Vec<TableRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(Error::Schema { line: 1, message: "unexpected table header".into() }),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line = i + 1;
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 12 {
                return Err(Error::Schema { line, message: format!("expected 12 fields, got {}", f.len()) });
            }
            Ok(TableRow {
                case: num(f[0], line)? as usize,
                mechanism: f[1].to_string(),
                params: [num(f[2], line)?, num(f[3], line)?],
                n: num(f[4], line)? as usize,
                level: num(f[5], line)?,
                scb: (num(f[6], line)?, num(f[7], line)?),
                cc: (num(f[8], line)?, num(f[9], line)?),
            })
        })
        .collect()
}
