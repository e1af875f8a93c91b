//! Serializable result containers shared by the CLI and the test harness.
//! Reports carry the seed and configuration that produced them so runs can
//! be reproduced from the output alone.

use crate::error::{Error, Result};
use crate::eval::{DivergenceReport, ErrorReport, SweepRow};
use crate::throughput::ThroughputReport;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidConfig(format!(
                "format '{other}' is not json or csv"
            ))),
        }
    }
}

/// Everything one `eval` invocation produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub bit_depth: u32,
    pub block_size: u32,
    pub case_count: u64,
    pub modes: Vec<i32>,
    pub errors: Vec<ErrorReport>,
    pub divergences: Vec<DivergenceReport>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Flat per-grouping rows; the run parameters repeat on every row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "seed",
            "bit_depth",
            "block_size",
            "cases",
            "grouping",
            "max_abs_error",
            "mean_abs_error",
            "psnr_db",
            "divergence_rate",
        ])?;
        for e in &self.errors {
            let div = self
                .divergences
                .iter()
                .find(|d| d.grouping == e.grouping)
                .map(|d| d.rate.to_string())
                .unwrap_or_default();
            w.write_record([
                self.seed.to_string(),
                self.bit_depth.to_string(),
                self.block_size.to_string(),
                self.case_count.to_string(),
                e.grouping.to_string(),
                e.max_abs_error.to_string(),
                e.mean_abs_error.to_string(),
                e.psnr_db.map(|p| p.to_string()).unwrap_or_default(),
                div,
            ])?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Input(e.to_string()))?)
            .map_err(|e| Error::Input(e.to_string()))
    }
}

pub fn sweep_to_json(rows: &[SweepRow]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Input(e.to_string()))?)
        .map_err(|e| Error::Input(e.to_string()))
}

pub fn throughput_to_json(report: &ThroughputReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

pub fn throughput_to_csv(report: &ThroughputReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "cycles_per_region",
        "cycles_per_frame_num",
        "cycles_per_frame_den",
        "frequency_hz_num",
        "frequency_hz_den",
        "frequency_hz_ceil",
    ])?;
    w.write_record([
        report.cycles_per_region.to_string(),
        report.cycles_per_frame.0.to_string(),
        report.cycles_per_frame.1.to_string(),
        report.frequency_hz.0.to_string(),
        report.frequency_hz.1.to_string(),
        report.frequency_hz_ceil.to_string(),
    ])?;
    String::from_utf8(w.into_inner().map_err(|e| Error::Input(e.to_string()))?)
        .map_err(|e| Error::Input(e.to_string()))
}
