//! Aggregation-error Monte Carlo: scalar unit-normal updates, Rayleigh
//! channels and noise, compared against the exact device average.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{fan_out, mean_se, num, CsvTable, ExperimentConfig};
use crate::aircomp::{aggregate_uplink, NormalizedUpdate};
use crate::channel::ChannelRealization;
use crate::error::Result;
use crate::powerctl::{
    analytic_mse, solve_power_control, solve_power_control_unaware, PowerPolicy,
};
use crate::rng::{trial_rng, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct MseCell {
    pub num_retx: u32,
    pub sigma_z: f64,
    pub mse: f64,
    pub mse_se: f64,
    pub analytic_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseSweepReport {
    pub trials: usize,
    pub cells: Vec<MseCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineCell {
    pub num_retx: u32,
    pub sigma_z: f64,
    pub aware_mse: f64,
    pub unaware_mse: f64,
    /// Mean of the per-trial difference `unaware - aware`.
    pub gap: f64,
    pub gap_se: f64,
    pub aware_analytic: f64,
    pub unaware_analytic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub trials: usize,
    pub cells: Vec<BaselineCell>,
}

struct Draw {
    chan: ChannelRealization,
    values: Vec<f64>,
}

/// Channel and update values for one trial. The same trial index yields the
/// same gains, values and noise stream at every `(M, sigma_z)`.
fn draw(num_devices: usize, sigma_sq: f64, master: u64, trial: u64) -> Result<(Draw, SimRng)> {
    let mut rng = trial_rng(master, trial);
    let chan = ChannelRealization::draw(num_devices, sigma_sq, &mut rng)?;
    let values = (0..num_devices)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    Ok((Draw { chan, values }, rng))
}

/// Squared error of the uplink estimate of the mean value.
fn squared_error(d: &Draw, policy: &PowerPolicy, rng: &mut SimRng) -> Result<f64> {
    let updates: Vec<NormalizedUpdate> = d
        .values
        .iter()
        .map(|&v| NormalizedUpdate {
            values: vec![v],
            mean: 0.0,
            std: 1.0,
        })
        .collect();
    let estimate = aggregate_uplink(&updates, policy, &d.chan, rng)?[0];
    let target = d.values.iter().sum::<f64>() / d.values.len() as f64;
    Ok((target - estimate).powi(2))
}

pub fn mse_sweep(cfg: &ExperimentConfig) -> Result<MseSweepReport> {
    let seed = cfg.seed()?;
    let trials = cfg.trials()?;
    let k = cfg.channel.num_devices;
    let p_max = cfg.channel.p_max;
    let mut cells = Vec::new();
    for &m in cfg.num_retx() {
        for (sigma_z, sigma_sq) in cfg.noise_levels()? {
            let per_trial = fan_out(trials, |t| {
                let (d, mut rng) = draw(k, sigma_sq, seed, t)?;
                let policy = solve_power_control(&d.chan, p_max, m)?;
                let err = squared_error(&d, &policy, &mut rng)?;
                Ok((err, analytic_mse(&policy, &d.chan)?))
            })?;
            let errs: Vec<f64> = per_trial.iter().map(|p| p.0).collect();
            let (mse, mse_se) = mean_se(&errs);
            let analytic = per_trial.iter().map(|p| p.1).sum::<f64>() / trials as f64;
            cells.push(MseCell {
                num_retx: m,
                sigma_z,
                mse,
                mse_se,
                analytic_mse: analytic,
            });
        }
    }
    Ok(MseSweepReport { trials, cells })
}

impl MseSweepReport {
    pub fn cell(&self, num_retx: u32, sigma_z: f64) -> Option<&MseCell> {
        self.cells
            .iter()
            .find(|c| c.num_retx == num_retx && c.sigma_z == sigma_z)
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig) -> CsvTable {
        let mut t = CsvTable::new(
            "mse-sweep",
            cfg,
            &[
                "M",
                "sigma_z",
                "sigma_z_sq",
                "mse",
                "mse_se",
                "analytic_mse",
                "trials",
            ],
        );
        t.note("units: sigma_z is the noise standard deviation per real sample; mse is the squared error of the estimated mean of unit-normal updates (dimensionless)");
        for c in &self.cells {
            t.rows.push(vec![
                c.num_retx.to_string(),
                num(c.sigma_z),
                num(c.sigma_z * c.sigma_z),
                num(c.mse),
                num(c.mse_se),
                num(c.analytic_mse),
                self.trials.to_string(),
            ]);
        }
        t
    }
}

pub fn baseline_compare(cfg: &ExperimentConfig) -> Result<BaselineReport> {
    let seed = cfg.seed()?;
    let trials = cfg.trials()?;
    let k = cfg.channel.num_devices;
    let p_max = cfg.channel.p_max;
    let mut cells = Vec::new();
    for &m in cfg.num_retx() {
        for (sigma_z, sigma_sq) in cfg.noise_levels()? {
            let per_trial = fan_out(trials, |t| {
                let (d, rng) = draw(k, sigma_sq, seed, t)?;
                let aware = solve_power_control(&d.chan, p_max, m)?;
                let unaware = solve_power_control_unaware(&d.chan, p_max, m)?;
                // identical noise for both policies
                let e_aware = squared_error(&d, &aware, &mut rng.clone())?;
                let e_unaware = squared_error(&d, &unaware, &mut rng.clone())?;
                Ok([
                    e_aware,
                    e_unaware,
                    analytic_mse(&aware, &d.chan)?,
                    analytic_mse(&unaware, &d.chan)?,
                ])
            })?;
            let column = |i: usize| per_trial.iter().map(|r| r[i]).collect::<Vec<f64>>();
            let gaps: Vec<f64> = per_trial.iter().map(|r| r[1] - r[0]).collect();
            let (gap, gap_se) = mean_se(&gaps);
            cells.push(BaselineCell {
                num_retx: m,
                sigma_z,
                aware_mse: mean_se(&column(0)).0,
                unaware_mse: mean_se(&column(1)).0,
                gap,
                gap_se,
                aware_analytic: mean_se(&column(2)).0,
                unaware_analytic: mean_se(&column(3)).0,
            });
        }
    }
    Ok(BaselineReport { trials, cells })
}

impl BaselineReport {
    pub fn to_csv(&self, cfg: &ExperimentConfig) -> CsvTable {
        let mut t = CsvTable::new(
            "baseline-compare",
            cfg,
            &[
                "M",
                "sigma_z",
                "sigma_z_sq",
                "aware_mse",
                "unaware_mse",
                "gap",
                "gap_se",
                "aware_analytic",
                "unaware_analytic",
                "trials",
            ],
        );
        t.note("units: sigma_z is the noise standard deviation per real sample; mse columns are dimensionless squared errors; gap = unaware_mse - aware_mse");
        for c in &self.cells {
            t.rows.push(vec![
                c.num_retx.to_string(),
                num(c.sigma_z),
                num(c.sigma_z * c.sigma_z),
                num(c.aware_mse),
                num(c.unaware_mse),
                num(c.gap),
                num(c.gap_se),
                num(c.aware_analytic),
                num(c.unaware_analytic),
                self.trials.to_string(),
            ]);
        }
        t
    }
}
