//! Empirical loss gap on the synthetic quadratic problem against the
//! strongly convex and convex bounds.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{fan_out, mean_se, num, CsvTable, ExperimentConfig};
use crate::bounds::{check_step_size, BoundParams, BoundReport, Convexity};
use crate::channel::ChannelRealization;
use crate::data::make_quadratic_problem;
use crate::error::{Error, Result};
use crate::learner::{run_airrecomp, ChannelSource, FlConfig, GlobalModel, PowerScheme};
use crate::mselect::CostModel;
use crate::powerctl::solve_power_control;
use crate::rng::{seeded, trial_rng, trial_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub num_retx: u32,
    pub round: usize,
    pub convexity: Convexity,
    pub c1: f64,
    pub c2: Option<f64>,
    pub c3: f64,
    pub diminishing: f64,
    pub post_convergence: f64,
    pub total: f64,
    pub empirical_gap: f64,
    pub empirical_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundValidation {
    pub beta: f64,
    pub trials: usize,
    /// Mean over trials of `||W_0 - W*||^2`.
    pub r0_sq: f64,
    /// Mean over trials of the measured update spread.
    pub sigma_sq: f64,
    pub rows: Vec<BoundRow>,
}

impl BoundValidation {
    /// Rows where `mean - slack * se` exceeds the bound.
    pub fn violations(&self, slack: f64) -> Vec<&BoundRow> {
        self.rows
            .iter()
            .filter(|r| r.empirical_gap - slack * r.empirical_se > r.total)
            .collect()
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig) -> CsvTable {
        let mut t = CsvTable::new(
            "bound-validate",
            cfg,
            &[
                "M",
                "n",
                "convexity",
                "c1",
                "c2",
                "c3",
                "diminishing",
                "post_convergence",
                "total",
                "empirical_gap",
                "empirical_se",
            ],
        );
        t.note(format!(
            "units: loss gaps F(W_n) - F(W*) of the quadratic problem; beta = {}, r0_sq = {}, sigma_sq = {}, trials = {}",
            num(self.beta),
            num(self.r0_sq),
            num(self.sigma_sq),
            self.trials
        ));
        for r in &self.rows {
            t.rows.push(vec![
                r.num_retx.to_string(),
                r.round.to_string(),
                match r.convexity {
                    Convexity::Strong => "strong".into(),
                    Convexity::Convex => "convex".into(),
                },
                num(r.c1),
                r.c2.map(num).unwrap_or_default(),
                num(r.c3),
                num(r.diminishing),
                num(r.post_convergence),
                num(r.total),
                num(r.empirical_gap),
                num(r.empirical_se),
            ]);
        }
        t
    }
}

pub fn bound_validate(cfg: &ExperimentConfig) -> Result<BoundValidation> {
    let master = cfg.seed()?;
    let trials = cfg.trials()?;
    let b = &cfg.bounds;
    let k = cfg.channel.num_devices;
    let p_max = cfg.channel.p_max;
    let sigma_sq_noise = cfg.noise_variance()?;
    let chan = ChannelRealization::draw(k, sigma_sq_noise, &mut seeded(b.channel_seed))?;
    let policies = cfg
        .num_retx()
        .iter()
        .map(|&m| solve_power_control(&chan, p_max, m))
        .collect::<Result<Vec<_>>>()?;

    let template =
        |policy: &crate::powerctl::PowerPolicy, beta: f64, sigma_sq: f64, r0_sq: f64| BoundParams {
            mu: 1.0,
            lipschitz: 1.0,
            beta,
            sigma_sq,
            dim: b.dim,
            r0_sq,
            policy: policy.clone(),
            chan: chan.clone(),
        };
    let beta = match b.beta {
        Some(beta) => beta,
        None => {
            let sup = policies
                .iter()
                .flat_map(|p| {
                    let params = template(p, 1.0, 0.0, 0.0);
                    [Convexity::Strong, Convexity::Convex]
                        .map(|c| check_step_size(&params, c).supremum)
                })
                .fold(f64::INFINITY, f64::min);
            b.beta_fraction * sup
        }
    };

    let per_trial = fan_out(trials, |t| {
        let mut rng = trial_rng(master, t);
        let problem = make_quadratic_problem(k, b.dim, b.spread, &mut rng)?;
        let w0: Vec<f64> = (0..b.dim).map(|_| rng.sample(StandardNormal)).collect();
        let r0_sq = problem.distance_sq(&w0);
        let init = GlobalModel::new(w0)?;
        let gaps = cfg
            .num_retx()
            .iter()
            .map(|&m| {
                let fl = FlConfig {
                    num_retx: m,
                    noise_variance: sigma_sq_noise,
                    p_max,
                    epochs: 1,
                    step_size: beta,
                    cost: CostModel::new(0.0, 1.0, f64::from(m) * b.rounds as f64)?,
                    channel: ChannelSource::Fixed(chan.gains().to_vec()),
                    power: PowerScheme::Optimal,
                    normalization: cfg.aircomp.normalization,
                    max_rounds: Some(b.rounds),
                    seed: trial_seed(master, t),
                };
                let trace = run_airrecomp(problem.devices(), init.clone(), &fl, |model| {
                    Ok(problem.loss_gap(&model.weights))
                })?;
                Ok(trace.rows.iter().map(|r| r.metric).collect::<Vec<f64>>())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((r0_sq, problem.update_spread(), gaps))
    })?;

    let r0_sq = per_trial.iter().map(|p| p.0).sum::<f64>() / trials as f64;
    let sigma_sq = per_trial.iter().map(|p| p.1).sum::<f64>() / trials as f64;
    let mut rows = Vec::new();
    for (i, (&m, policy)) in cfg.num_retx().iter().zip(&policies).enumerate() {
        let params = template(policy, beta, sigma_sq, r0_sq);
        let reports = [Convexity::Strong, Convexity::Convex]
            .map(|c| BoundReport::new(&params, c))
            .into_iter()
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::StepSize { .. } => {
                    Error::Config(format!("beta = {beta} is not admissible at M = {m}: {e}"))
                }
                other => other,
            })?;
        for n in 0..=b.rounds {
            let gaps: Vec<f64> = per_trial.iter().map(|p| p.2[i][n]).collect();
            let (gap, se) = mean_se(&gaps);
            for rep in &reports {
                if rep.convexity == Convexity::Convex && n == 0 {
                    continue;
                }
                let diminishing = rep.diminishing(n)?;
                let post = rep.post_convergence();
                rows.push(BoundRow {
                    num_retx: m,
                    round: n,
                    convexity: rep.convexity,
                    c1: rep.c1,
                    c2: rep.c2,
                    c3: rep.c3,
                    diminishing,
                    post_convergence: post,
                    total: diminishing + post,
                    empirical_gap: gap,
                    empirical_se: se,
                });
            }
        }
    }
    Ok(BoundValidation {
        beta,
        trials,
        r0_sq,
        sigma_sq,
        rows,
    })
}
