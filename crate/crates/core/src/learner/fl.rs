//! The training loop: broadcast, local training, analog uplink with
//! retransmissions, server step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{global_step, local_train, GlobalModel, LocalProblem, Objective};
use crate::aircomp::{estimate_global_update, ModelUpdate, Normalization};
use crate::channel::{ChannelRealization, FadingMode};
use crate::error::{Error, Result};
use crate::mselect::CostModel;
use crate::powerctl::{solve_power_control, solve_power_control_unaware, PowerPolicy};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerScheme {
    /// MSE-optimal policy for the actual number of transmissions.
    #[default]
    Optimal,
    /// Policy optimised for a single transmission, then retransmitted.
    Unaware,
    /// Invert every channel with `eta = p_max * min_k |h_k|^2`.
    Inversion,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSource {
    Draw(FadingMode),
    /// Fixed gains for every round.
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlConfig {
    pub num_retx: u32,
    pub noise_variance: f64,
    pub p_max: f64,
    pub epochs: usize,
    pub step_size: f64,
    pub cost: CostModel,
    pub channel: ChannelSource,
    pub power: PowerScheme,
    pub normalization: Normalization,
    /// Stop earlier than the budget allows.
    pub max_rounds: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub round: usize,
    pub loss: f64,
    pub metric: f64,
    pub cum_cost: f64,
    #[serde(rename = "M")]
    pub num_retx: u32,
    /// Empty for the initial model.
    pub eta: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    /// Round 0 is the initial model.
    pub rows: Vec<TraceRow>,
    pub policies: Vec<PowerPolicy>,
    pub final_model: GlobalModel,
    pub trajectory: Vec<Vec<f64>>,
}

impl TrainingTrace {
    pub fn rounds(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn final_row(&self) -> &TraceRow {
        self.rows.last().expect("trace has the initial row")
    }
}

fn policy_for(
    scheme: PowerScheme,
    chan: &ChannelRealization,
    p_max: f64,
    num_retx: u32,
) -> Result<PowerPolicy> {
    match scheme {
        PowerScheme::Optimal => solve_power_control(chan, p_max, num_retx),
        PowerScheme::Unaware => solve_power_control_unaware(chan, p_max, num_retx),
        PowerScheme::Inversion => {
            let weakest = chan.gains().iter().copied().fold(f64::INFINITY, f64::min);
            if !(weakest > 0.0) {
                return Err(Error::NoSignal("cannot invert a zero channel".into()));
            }
            let eta = p_max * weakest * weakest;
            Ok(PowerPolicy {
                powers: chan.gains().iter().map(|h| eta / (h * h)).collect(),
                eta,
                p_max,
                num_retx,
            })
        }
    }
}

fn mean_loss<O: Objective>(devices: &[O], weights: &[f64]) -> f64 {
    devices.iter().map(|d| d.loss(weights)).sum::<f64>() / devices.len() as f64
}

/// Run federated training until the budget is spent (or `max_rounds`).
/// `metric` is evaluated on the global model after every round.
pub fn run_airrecomp<O, F>(
    devices: &[O],
    init: GlobalModel,
    cfg: &FlConfig,
    metric: F,
) -> Result<TrainingTrace>
where
    O: Objective,
    F: Fn(&GlobalModel) -> Result<f64>,
{
    if devices.is_empty() {
        return Err(Error::Domain("no devices".into()));
    }
    cfg.cost.validate()?;
    let rounds = cfg
        .cost
        .rounds_for(cfg.num_retx)
        .ok_or_else(|| Error::Budget(format!("M={} affords no round", cfg.num_retx)))?;
    let rounds = cfg.max_rounds.map_or(rounds, |cap| rounds.min(cap));
    let k = devices.len();
    let mut rng = seeded(cfg.seed);

    let fixed = match &cfg.channel {
        ChannelSource::Fixed(gains) => {
            if gains.len() != k {
                return Err(Error::Dimension(format!(
                    "{} fixed gains for {k} devices",
                    gains.len()
                )));
            }
            Some(ChannelRealization::new(gains.clone(), cfg.noise_variance)?)
        }
        ChannelSource::Draw(FadingMode::Frozen) => {
            Some(ChannelRealization::draw(k, cfg.noise_variance, &mut rng)?)
        }
        ChannelSource::Draw(FadingMode::PerRound) => None,
    };

    let mut model = init;
    let row = |model: &GlobalModel, eta: Option<f64>| -> Result<TraceRow> {
        Ok(TraceRow {
            round: model.round,
            loss: mean_loss(devices, &model.weights),
            metric: metric(model)?,
            cum_cost: model.round as f64 * cfg.cost.round_cost(cfg.num_retx),
            num_retx: cfg.num_retx,
            eta,
            seed: cfg.seed,
        })
    };
    let mut rows = vec![row(&model, None)?];
    let mut policies = Vec::with_capacity(rounds);
    let mut trajectory = vec![model.weights.clone()];

    for _ in 0..rounds {
        let chan = match &fixed {
            Some(c) => c.clone(),
            None => ChannelRealization::draw(k, cfg.noise_variance, &mut rng)?,
        };
        let updates = devices
            .par_iter()
            .enumerate()
            .map(|(id, dev)| {
                let prob = LocalProblem::new(dev, cfg.epochs, cfg.step_size)?;
                local_train(&model, &prob, id)
            })
            .collect::<Result<Vec<ModelUpdate>>>()?;
        let policy = policy_for(cfg.power, &chan, cfg.p_max, cfg.num_retx)?;
        let estimate =
            estimate_global_update(&updates, cfg.normalization, &policy, &chan, &mut rng).map_err(
                |e| match e {
                    Error::Domain(msg) | Error::Dimension(msg) => Error::Numerical {
                        round: model.round + 1,
                        context: msg,
                    },
                    other => other,
                },
            )?;
        model = global_step(&model, &estimate, cfg.step_size)?;
        rows.push(row(&model, Some(policy.eta))?);
        trajectory.push(model.weights.clone());
        policies.push(policy);
    }
    Ok(TrainingTrace {
        rows,
        policies,
        final_model: model,
        trajectory,
    })
}
