//! Metrics rows and the versioned CSV they are written to.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// Column order of every metrics CSV.
pub const HEADER: [&str; 15] = [
    "schema_version",
    "run_id",
    "seed",
    "phase",
    "step",
    "episodic_return_mean",
    "success_rate",
    "policy_loss",
    "value_loss",
    "q_loss",
    "approx_kl",
    "clip_fraction",
    "epochs_completed",
    "sym_policy_loss",
    "sym_value_loss",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Eval,
}

/// One logged record. `step` counts environment steps (online) or gradient
/// steps (offline); empty metrics are left blank in the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub schema_version: u32,
    pub run_id: String,
    pub seed: u64,
    pub phase: Phase,
    pub step: u64,
    pub episodic_return_mean: Option<f64>,
    pub success_rate: Option<f64>,
    pub policy_loss: Option<f64>,
    pub value_loss: Option<f64>,
    pub q_loss: Option<f64>,
    pub approx_kl: Option<f64>,
    pub clip_fraction: Option<f64>,
    pub epochs_completed: Option<u32>,
    pub sym_policy_loss: Option<f64>,
    pub sym_value_loss: Option<f64>,
}

impl MetricsRow {
    pub fn new(run_id: impl Into<String>, seed: u64, phase: Phase, step: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            run_id: run_id.into(),
            seed,
            phase,
            step,
            episodic_return_mean: None,
            success_rate: None,
            policy_loss: None,
            value_loss: None,
            q_loss: None,
            approx_kl: None,
            clip_fraction: None,
            epochs_completed: None,
            sym_policy_loss: None,
            sym_value_loss: None,
        }
    }
}

/// CSV writer that emits the header exactly once.
pub struct MetricsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl MetricsWriter<File> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(File::create(path)?))
    }
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(sink: W) -> Self {
        Self {
            inner: csv::WriterBuilder::new().has_headers(true).from_writer(sink),
        }
    }

    pub fn write(&mut self, row: &MetricsRow) -> Result<()> {
        self.inner.serialize(row)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
    }
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let rows = reader.deserialize().collect::<std::result::Result<Vec<MetricsRow>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_written_once_in_order() {
        let mut w = MetricsWriter::new(Vec::new());
        let mut row = MetricsRow::new("r", 1, Phase::Train, 10);
        row.episodic_return_mean = Some(-0.5);
        w.write(&row).unwrap();
        w.write(&MetricsRow::new("r", 1, Phase::Eval, 20)).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], HEADER.join(","));
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,r,1,train,10,-0.5,"));
        assert!(lines[2].contains(",eval,"));
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let mut w = MetricsWriter::create(&path).unwrap();
        let mut row = MetricsRow::new("x", 3, Phase::Train, 5);
        row.approx_kl = Some(1e-4);
        row.epochs_completed = Some(2);
        w.write(&row).unwrap();
        w.flush().unwrap();
        assert_eq!(read_metrics(&path).unwrap(), vec![row]);
    }
}
