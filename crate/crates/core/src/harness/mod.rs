//! Experiment configuration, orchestration and CSV output.
//!
//! Every command returns a typed report and renders it as CSV. The CSV
//! starts with `#` comment lines naming the command, the config hash and
//! the units, followed by an ordinary header row.

mod bound;
mod config;
mod select;
mod sweep;
mod train;

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use bound::{bound_validate, BoundRow, BoundValidation};
pub use config::{
    AirCompConfig, BoundsConfig, ChannelConfig, CostConfig, ExperimentConfig, ExperimentKind,
    LearnerConfig, Overrides, SelectConfig, Task,
};
pub use select::{select_m, sigma_sweep, SelectReport, SigmaSweepReport};
pub use sweep::{
    baseline_compare, mse_sweep, BaselineCell, BaselineReport, MseCell, MseSweepReport,
};
pub use train::{train, TrainReport, TrainRun};

/// A rendered-to-be CSV table with its comment preamble.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub command: &'static str,
    pub config_hash: String,
    pub notes: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(command: &'static str, cfg: &ExperimentConfig, header: &[&str]) -> Self {
        Self {
            command,
            config_hash: cfg.hash(),
            notes: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "# airrecomp {}\n# config-hash: {}\n",
            self.command, self.config_hash
        );
        for n in &self.notes {
            out.push_str("# ");
            out.push_str(n);
            out.push('\n');
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            writer.write_record(row).expect("in-memory write");
        }
        let body = writer.into_inner().expect("in-memory flush");
        out.push_str(&String::from_utf8(body).expect("CSV is UTF-8"));
        out
    }
}

/// Number formatting used in every CSV: shortest round-trip form.
pub(crate) fn num(v: f64) -> String {
    v.to_string()
}

/// Run `f` for every trial index in parallel; results come back in index
/// order regardless of scheduling.
pub(crate) fn fan_out<T, F>(trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..trials as u64).into_par_iter().map(f).collect()
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Validate, run the configured experiment and render its CSV.
pub fn run(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate()?;
    let table = match cfg.kind()? {
        ExperimentKind::MseSweep => mse_sweep(cfg)?.to_csv(cfg),
        ExperimentKind::BaselineCompare => baseline_compare(cfg)?.to_csv(cfg),
        ExperimentKind::Train => train(cfg)?.to_csv(cfg),
        ExperimentKind::SelectM => select_m(cfg)?.to_csv(cfg),
        ExperimentKind::SigmaSweep => sigma_sweep(cfg)?.to_csv(cfg),
        ExperimentKind::BoundValidate => bound_validate(cfg)?.to_csv(cfg),
    };
    Ok(table.render())
}

/// Write to the configured output path, or return the text for stdout.
pub fn emit(cfg: &ExperimentConfig, csv: &str) -> Result<Option<String>> {
    match &cfg.output {
        Some(path) => {
            write_file(path, csv)?;
            Ok(None)
        }
        None => Ok(Some(csv.to_string())),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
