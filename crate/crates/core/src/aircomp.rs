//! Analog uplink aggregation: normalisation at the devices, power-scaled
//! superposition repeated `M` times, averaging and denormalisation at the
//! server.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::powerctl::PowerPolicy;

/// Standard deviations below this are treated as a constant update.
pub const STD_EPSILON: f64 = 1e-12;

/// A device's local update, `(W_n - W_{n,k}(E)) / beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelUpdate {
    pub values: Vec<f64>,
    pub device_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedUpdate {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Whether devices standardise their updates before transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Per-device mean/std standardisation with the statistics sent on an
    /// ideal side channel.
    #[default]
    PerDevice,
    /// Transmit raw updates, i.e. mean 0 and std 1 assumed.
    Identity,
}

impl ModelUpdate {
    pub fn new(values: Vec<f64>, device_id: usize) -> Self {
        Self { values, device_id }
    }
}

impl NormalizedUpdate {
    /// Wrap a raw update as if it were already standardised.
    pub fn identity(update: &ModelUpdate) -> Self {
        Self {
            values: update.values.clone(),
            mean: 0.0,
            std: 1.0,
        }
    }

    pub fn stats(&self) -> (f64, f64) {
        (self.mean, self.std)
    }
}

/// Standardise an update with its sample mean and `d - 1` sample deviation.
pub fn normalize(update: &ModelUpdate) -> Result<NormalizedUpdate> {
    let d = update.values.len();
    if d < 2 {
        return Err(Error::Dimension(format!(
            "update of device {} has {d} elements, need at least 2",
            update.device_id
        )));
    }
    let mean = update.values.iter().sum::<f64>() / d as f64;
    let var = update
        .values
        .iter()
        .map(|v| (v - mean).powi(2))
        .sum::<f64>()
        / (d - 1) as f64;
    let std = var.sqrt();
    if std < STD_EPSILON {
        return Ok(NormalizedUpdate {
            values: vec![0.0; d],
            mean,
            std: 0.0,
        });
    }
    let values = update.values.iter().map(|v| (v - mean) / std).collect();
    Ok(NormalizedUpdate { values, mean, std })
}

pub fn prepare(update: &ModelUpdate, mode: Normalization) -> Result<NormalizedUpdate> {
    match mode {
        Normalization::PerDevice => normalize(update),
        Normalization::Identity => Ok(NormalizedUpdate::identity(update)),
    }
}

/// Server-side estimate of the mean normalised update after `M`
/// transmissions of the same power-scaled signals over a static channel.
pub fn aggregate_uplink<R: Rng + ?Sized>(
    updates: &[NormalizedUpdate],
    policy: &PowerPolicy,
    chan: &ChannelRealization,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let k = chan.num_devices();
    if updates.len() != k || policy.num_devices() != k {
        return Err(Error::Dimension(format!(
            "{} updates, {} powers, {} channel gains",
            updates.len(),
            policy.num_devices(),
            k
        )));
    }
    if policy.num_retx == 0 {
        return Err(Error::Domain("number of transmissions must be >= 1".into()));
    }
    if !(policy.eta > 0.0) {
        return Err(Error::Domain(format!(
            "eta must be positive, got {}",
            policy.eta
        )));
    }
    let signals: Vec<Vec<f64>> = updates
        .iter()
        .zip(&policy.powers)
        .map(|(u, p)| {
            let amp = p.sqrt();
            u.values.iter().map(|v| amp * v).collect()
        })
        .collect();

    let mut accumulated = chan.transmit_once(&signals, rng)?;
    for _ in 1..policy.num_retx {
        let y = chan.transmit_once(&signals, rng)?;
        for (acc, v) in accumulated.iter_mut().zip(y) {
            *acc += v;
        }
    }
    let scale = 1.0 / (policy.num_retx as f64 * policy.eta.sqrt() * k as f64);
    accumulated.iter_mut().for_each(|v| *v *= scale);
    Ok(accumulated)
}

/// Undo the normalisation with the device-averaged statistics:
/// `Re(Y) * mean(std_k) + mean(mean_k)`. The signal is already real here.
pub fn denormalize(aggregate: &[f64], stats: &[(f64, f64)]) -> Result<Vec<f64>> {
    if stats.is_empty() {
        return Err(Error::Dimension(
            "no device statistics to denormalise with".into(),
        ));
    }
    let k = stats.len() as f64;
    let mean = stats.iter().map(|s| s.0).sum::<f64>() / k;
    let std = stats.iter().map(|s| s.1).sum::<f64>() / k;
    Ok(aggregate.iter().map(|y| y * std + mean).collect())
}

/// Full uplink round: prepare every update, aggregate and denormalise.
pub fn estimate_global_update<R: Rng + ?Sized>(
    updates: &[ModelUpdate],
    mode: Normalization,
    policy: &PowerPolicy,
    chan: &ChannelRealization,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let prepared = updates
        .iter()
        .map(|u| prepare(u, mode))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate_uplink(&prepared, policy, chan, rng)?;
    let stats: Vec<(f64, f64)> = prepared.iter().map(NormalizedUpdate::stats).collect();
    denormalize(&aggregate, &stats)
}
