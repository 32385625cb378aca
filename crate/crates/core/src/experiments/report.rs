//! Report files: replicate rows as CSV, summaries and provenance as JSON,
//! figures as SVG.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::runner::{Row, ScenarioReport};
use super::summary::verify_summaries;
use super::svg::render_svg;

/// Relative tolerance for summaries recomputed from loaded rows.
pub const VERIFY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }

    /// Parses a comma-separated list such as `csv,json`.
    pub fn parse_list(list: &str) -> Result<Vec<Format>> {
        let mut out: Vec<Format> = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(Format::from_str)
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

pub fn write_rows_csv<W: Write>(rows: &[Row], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: Read>(input: R) -> std::result::Result<Vec<Row>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn rows_csv_bytes(rows: &[Row]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_rows_csv(rows, &mut buf).expect("writing to memory");
    buf
}

pub fn report_json(report: &ScenarioReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `<out_dir>/<scenario>.<ext>` for each requested format and returns
/// the paths written.
pub fn emit_report(report: &ScenarioReport, formats: &[Format], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if formats.is_empty() {
        return Ok(Vec::new());
    }
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::with_capacity(formats.len());
    for &format in formats {
        let path = out_dir.join(format!("{}.{}", report.scenario.name, format.extension()));
        let bytes = match format {
            Format::Csv => rows_csv_bytes(&report.rows),
            Format::Json => report_json(report)?.into_bytes(),
            Format::Svg => render_svg(report).into_bytes(),
        };
        write_file(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}

/// Loads a report from its JSON and CSV files and checks that the stored
/// summaries match ones recomputed from the rows.
pub fn load_report(json_path: &Path, csv_path: &Path) -> Result<ScenarioReport> {
    let text = fs::read_to_string(json_path).map_err(|source| Error::Io {
        path: json_path.to_path_buf(),
        source,
    })?;
    let mut report: ScenarioReport = serde_json::from_str(&text)?;
    let file = fs::File::open(csv_path).map_err(|source| Error::Io {
        path: csv_path.to_path_buf(),
        source,
    })?;
    report.rows = read_rows_csv(file).map_err(|source| Error::Csv {
        path: csv_path.to_path_buf(),
        source,
    })?;
    verify_report(&report)?;
    Ok(report)
}

/// Row count and summary consistency checks.
pub fn verify_report(report: &ScenarioReport) -> Result<()> {
    let s = &report.scenario;
    let expected = s.replicates * s.methods.len() * crate::models::Param::ALL.len();
    if report.rows.len() != expected {
        return Err(Error::ReportMismatch(format!(
            "expected {expected} rows, found {}",
            report.rows.len()
        )));
    }
    if report.provenance.config_hash != s.config_hash() {
        return Err(Error::ReportMismatch("config hash does not match scenario".into()));
    }
    verify_summaries(&report.summaries, &report.rows, &s.methods, &report.truth, s.level, VERIFY_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_lists() {
        assert_eq!(
            Format::parse_list("svg, csv,csv").unwrap(),
            vec![Format::Csv, Format::Svg]
        );
        assert!(Format::parse_list("").unwrap().is_empty());
        assert!(Format::parse_list("png").is_err());
    }
}
