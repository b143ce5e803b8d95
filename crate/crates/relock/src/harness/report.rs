//! CSV rows and JSON summaries.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{CampaignResult, HarnessError, RunRecord};

pub const CSV_HEADER: [&str; 9] = [
    "benchmark",
    "percent",
    "error_spec",
    "N",
    "K",
    "seed",
    "outcome",
    "iterations",
    "wall_ms",
];

#[derive(Debug, Serialize)]
pub struct CsvRow<'a> {
    pub benchmark: &'a str,
    pub percent: f64,
    pub error_spec: &'a str,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub outcome: &'static str,
    pub iterations: usize,
    pub wall_ms: Option<u64>,
}

impl<'a> From<&'a RunRecord> for CsvRow<'a> {
    fn from(r: &'a RunRecord) -> Self {
        CsvRow {
            benchmark: &r.benchmark,
            percent: r.percent,
            error_spec: &r.error_spec,
            n: r.n,
            k: r.k,
            seed: r.seed,
            outcome: r.outcome.as_str(),
            iterations: r.iterations,
            wall_ms: r.wall_ms,
        }
    }
}

/// Writes records in index order. An empty slice yields the header only.
pub fn write_csv<W: Write>(records: &[RunRecord], w: W) -> Result<(), HarnessError> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.index);
    for r in sorted {
        wtr.serialize(CsvRow::from(r))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn to_csv(records: &[RunRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("in-memory CSV");
    String::from_utf8(buf).expect("utf-8")
}

pub fn write_summary(result: &CampaignResult, path: &Path) -> Result<(), HarnessError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, result)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}
