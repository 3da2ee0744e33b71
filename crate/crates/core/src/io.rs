//! CSV ingestion of observed samples and serialization of band artifacts.
//!
//! Input files carry the header `delta,x,y`. `x` is blank exactly when
//! `delta = 0`; `y` is required on every row.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::band::{BandEstimate, NullTestResult};
use crate::error::{Error, Result};
use crate::numeric::round_sig;
use crate::sample::{ObservedSample, Record};

/// Version of the JSON artifact layout written by [`crate::analysis`].
pub const SCHEMA_VERSION: u32 = 1;

/// Significant digits used for every serialized number.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub sample: ObservedSample,
    /// 1-based file line of each record.
    pub lines: Vec<usize>,
    pub warnings: Vec<String>,
}

pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Ingested> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    ingest_reader(file)
}

pub fn ingest_reader(reader: impl Read) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Schema { line: 1, message: e.to_string() })?;
    let names: Vec<&str> = header.iter().map(|h| h.trim_start_matches('\u{feff}')).collect();
    if names != ["delta", "x", "y"] {
        return Err(Error::Schema { line: 1, message: format!("expected header `delta,x,y`, found `{}`", names.join(",")) });
    }

    let mut records = Vec::new();
    let mut lines = Vec::new();
    let mut warnings = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Schema {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let schema = |message: String| Error::Schema { line, message };
        if row.len() != 3 {
            return Err(schema(format!("expected 3 fields, got {}", row.len())));
        }
        let delta = match &row[0] {
            "1" => true,
            "0" => false,
            other => return Err(schema(format!("delta must be 0 or 1, got `{other}`"))),
        };
        let y: f64 = match row[2].parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => return Err(schema(format!("response y is missing or not numeric: `{}`", &row[2]))),
        };
        let x_field = &row[1];
        let record = if delta {
            match x_field.parse::<f64>() {
                Ok(x) if x.is_finite() => Record::complete(x, y),
                _ => return Err(schema(format!("delta = 1 requires a numeric x, got `{x_field}`"))),
            }
        } else {
            if !x_field.is_empty() {
                warnings.push(format!("line {line}: x present with delta = 0; discarded"));
            }
            Record::missing(y)
        };
        records.push(record);
        lines.push(line);
    }
    let sample = ObservedSample::new(records).map_err(|e| Error::Schema { line: 0, message: e.to_string() })?;
    Ok(Ingested { sample, lines, warnings })
}

/// Writes a sample with full float precision so that it re-ingests bit for bit.
pub fn write_sample_csv(sample: &ObservedSample, mut out: impl Write) -> Result<()> {
    writeln!(out, "delta,x,y")?;
    for r in sample.records() {
        match r.x {
            Some(x) => writeln!(out, "1,{x:e},{:e}", r.y)?,
            None => writeln!(out, "0,,{:e}", r.y)?,
        }
    }
    Ok(())
}

fn r12(v: f64) -> f64 {
    round_sig(v, SIGNIFICANT_DIGITS)
}

/// CSV cell for a value: rounded, shortest round-trip form with an exponent
/// for very small or large magnitudes, empty when not finite.
pub fn csv_number(v: f64) -> String {
    if v.is_finite() {
        format!("{:?}", r12(v))
    } else {
        String::new()
    }
}

/// One grid row of a band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub x: f64,
    pub m_hat: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub d_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandArtifact {
    pub alpha: f64,
    pub level: f64,
    pub q_alpha: f64,
    pub excluded: Vec<usize>,
    pub rows: Vec<BandRow>,
}

impl BandArtifact {
    pub fn from_band(band: &BandEstimate) -> Self {
        let opt = |v: f64| v.is_finite().then(|| r12(v));
        Self {
            alpha: band.alpha,
            level: r12(1.0 - band.alpha),
            q_alpha: r12(band.q_alpha),
            excluded: band.excluded.clone(),
            rows: (0..band.grid.len())
                .map(|i| BandRow {
                    x: r12(band.grid[i]),
                    m_hat: opt(band.m_hat[i]),
                    lower: opt(band.lower[i]),
                    upper: opt(band.upper[i]),
                    d_hat: opt(band.d_hat[i]),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullArtifact {
    /// "linear" or "external"
    pub kind: String,
    pub intercept: Option<f64>,
    pub slope: Option<f64>,
    pub sup_stat: f64,
    pub t_star: f64,
    pub pvalue: f64,
    pub min_cover_level: f64,
    pub argmax: f64,
    pub excluded: Vec<usize>,
}

impl NullArtifact {
    pub fn new(kind: &str, line: Option<(f64, f64)>, result: &NullTestResult) -> Self {
        Self {
            kind: kind.to_string(),
            intercept: line.map(|l| r12(l.0)),
            slope: line.map(|l| r12(l.1)),
            sup_stat: r12(result.sup_stat),
            t_star: r12(result.t_star),
            pvalue: r12(result.pvalue),
            min_cover_level: r12(result.min_cover_level),
            argmax: r12(result.argmax),
            excluded: result.excluded.clone(),
        }
    }
}

/// Band rows as CSV: `level,x,m_hat,lower,upper,d_hat`, blank cells for
/// excluded grid points.
pub fn band_csv(bands: &[BandArtifact]) -> String {
    let mut out = String::from("level,x,m_hat,lower,upper,d_hat\n");
    let cell = |v: Option<f64>| v.map_or(String::new(), csv_number);
    for b in bands {
        for r in &b.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_number(b.level),
                csv_number(r.x),
                cell(r.m_hat),
                cell(r.lower),
                cell(r.upper),
                cell(r.d_hat)
            ));
        }
    }
    out
}

/// Rounds a value to the artifact precision.
pub fn artifact_number(v: f64) -> f64 {
    r12(v)
}

/// Reads a two-column `x,value` CSV describing a null curve.
pub fn read_curve_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    let mut pts = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Schema { line: 0, message: e.to_string() })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != 2 {
            return Err(Error::Schema { line, message: "null curve rows need x,value".into() });
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Schema { line, message: format!("not a number: `{s}`") })
        };
        pts.push((parse(&row[0])?, parse(&row[1])?));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 2 {
        return Err(Error::Schema { line: 0, message: "null curve needs at least two points".into() });
    }
    Ok(pts)
}

/// Piecewise-linear interpolation of a sorted curve; errors outside its range.
pub fn interpolate(curve: &[(f64, f64)], x: f64) -> Result<f64> {
    let (first, last) = (curve[0].0, curve[curve.len() - 1].0);
    if x < first || x > last {
        return Err(Error::Precondition(format!("null curve does not cover x = {x} (range [{first}, {last}])")));
    }
    let j = curve.partition_point(|p| p.0 < x);
    if j == 0 {
        return Ok(curve[0].1);
    }
    let (x0, y0) = curve[j - 1];
    let (x1, y1) = curve[j];
    if x1 == x0 {
        return Ok(y1);
    }
    Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_row_file() {
        let text = "delta,x,y\n1,0.5,1.2\n0,,0.7\n1,-0.3,0.1\n";
        let got = ingest_reader(text.as_bytes()).unwrap();
        assert_eq!(got.sample.n(), 3);
        assert_eq!(got.sample.n_complete(), 2);
        assert!((got.sample.r_n() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(got.lines, vec![2, 3, 4]);
        assert!(got.warnings.is_empty());
    }

    #[test]
    fn schema_errors_carry_line() {
        let err = ingest_reader("delta,x,y\n0,,1\n1,,0.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { line: 3, .. }), "{err:?}");
        let err = ingest_reader("delta,x,y\n1,0.2,\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { line: 2, .. }));
        let err = ingest_reader("d,x,y\n1,0.2,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { line: 1, .. }));
        let err = ingest_reader("delta,x,y\n2,0.2,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Schema { line: 2, .. }));
    }

    #[test]
    fn present_x_with_missing_flag_is_discarded() {
        let got = ingest_reader("delta,x,y\n0,0.4,1\n1,1e-1,2.5E0\n".as_bytes()).unwrap();
        assert_eq!(got.warnings.len(), 1);
        assert_eq!(got.sample.records()[0], Record::missing(1.0));
        assert_eq!(got.sample.records()[1], Record::complete(0.1, 2.5));
    }

    #[test]
    fn interpolation() {
        let c = vec![(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)];
        assert_eq!(interpolate(&c, 0.5).unwrap(), 2.0);
        assert_eq!(interpolate(&c, 2.0).unwrap(), 2.0);
        assert_eq!(interpolate(&c, 0.0).unwrap(), 1.0);
        assert!(interpolate(&c, 2.5).is_err());
    }
}
