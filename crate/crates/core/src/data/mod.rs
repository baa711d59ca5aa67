//! Datasets, device sharding and synthetic problems.

mod idx;
mod synth;

use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

pub use idx::{
    encode_idx_images, encode_idx_labels, load_mnist_idx, parse_idx_images, parse_idx_labels,
};
pub use synth::{make_quadratic_problem, synth_regression, REGRESSION_FEATURES};

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Labels(Vec<usize>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Labels(l) => l.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> Targets {
        match self {
            Targets::Labels(l) => Targets::Labels(rows.iter().map(|&i| l[i]).collect()),
            Targets::Values(v) => Targets::Values(rows.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Samples as rows of `features`, one target per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub targets: Targets,
}

/// The part of a dataset held by one device.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    pub data: Dataset,
    pub device_id: usize,
}

impl Dataset {
    pub fn new(features: Array2<f64>, targets: Targets) -> Result<Self> {
        if features.nrows() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows but {} targets",
                features.nrows(),
                targets.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("features must be finite".into()));
        }
        Ok(Self { features, targets })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            targets: self.targets.select(rows),
        }
    }

    /// First `n` rows.
    pub fn head(&self, n: usize) -> Dataset {
        let rows: Vec<usize> = (0..n.min(self.len())).collect();
        self.select(&rows)
    }

    /// Standardise every feature column to zero mean and unit variance.
    /// Constant columns are centred only.
    pub fn standardize(&mut self) {
        for mut col in self.features.columns_mut() {
            let n = col.len() as f64;
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            col.mapv_inplace(|v| {
                if std > 0.0 {
                    (v - mean) / std
                } else {
                    v - mean
                }
            });
        }
    }

    /// Shuffle and split off `test_len` rows for evaluation.
    pub fn train_test_split<R: Rng + ?Sized>(
        &self,
        test_len: usize,
        rng: &mut R,
    ) -> Result<(Dataset, Dataset)> {
        if test_len >= self.len() {
            return Err(Error::Domain(format!(
                "test split of {test_len} leaves no training data out of {}",
                self.len()
            )));
        }
        let mut rows: Vec<usize> = (0..self.len()).collect();
        rows.shuffle(rng);
        let (test, train) = rows.split_at(test_len);
        Ok((self.select(train), self.select(test)))
    }

    /// Plain CSV dump: one column per feature followed by the target.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (1..=self.input_dim()).map(|i| format!("x{i}")).collect();
        header.push("target".into());
        writer.write_record(&header)?;
        for (i, row) in self.features.rows().into_iter().enumerate() {
            let mut record: Vec<String> = row.iter().map(f64::to_string).collect();
            record.push(match &self.targets {
                Targets::Labels(l) => l[i].to_string(),
                Targets::Values(v) => v[i].to_string(),
            });
            writer.write_record(&record)?;
        }
        writer.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionScheme {
    /// Shuffle, then deal out contiguous chunks of near-equal size.
    #[default]
    IidEqual,
}

/// Split `dataset` across `num_devices`. The first `n % K` shards get one
/// extra sample.
pub fn partition<R: Rng + ?Sized>(
    dataset: &Dataset,
    num_devices: usize,
    scheme: PartitionScheme,
    rng: &mut R,
) -> Result<Vec<Shard>> {
    let n = dataset.len();
    if num_devices == 0 || num_devices > n {
        return Err(Error::Domain(format!(
            "cannot split {n} samples across {num_devices} devices"
        )));
    }
    let PartitionScheme::IidEqual = scheme;
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(rng);

    let base = n / num_devices;
    let extra = n % num_devices;
    let mut start = 0;
    Ok((0..num_devices)
        .map(|k| {
            let len = base + usize::from(k < extra);
            let shard = Shard {
                data: dataset.select(&rows[start..start + len]),
                device_id: k,
            };
            start += len;
            shard
        })
        .collect())
}
