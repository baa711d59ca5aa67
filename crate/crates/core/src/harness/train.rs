//! Federated training runs over a list of `M`, several seeds each.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{fan_out, mean_se, num, CsvTable, ExperimentConfig, Task};
use crate::data::{
    load_mnist_idx, make_quadratic_problem, partition, synth_regression, Dataset, PartitionScheme,
    REGRESSION_FEATURES,
};
use crate::error::{Error, Result};
use crate::learner::{
    eval_model, run_airrecomp, ChannelSource, FlConfig, GlobalModel, MlpObjective, MlpSpec,
    TrainingTrace,
};
use crate::rng::{seeded, trial_rng, trial_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub num_retx: u32,
    pub trial: u64,
    pub trace: TrainingTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub task: Task,
    pub runs: Vec<TrainRun>,
}

impl TrainReport {
    /// Final metric per trial for one `M`, in trial order.
    pub fn final_metrics(&self, num_retx: u32) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.num_retx == num_retx)
            .map(|r| r.trace.final_row().metric)
            .collect()
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig) -> CsvTable {
        let mut t = CsvTable::new(
            "train",
            cfg,
            &["round", "loss", "metric", "cum_cost", "M", "eta", "seed"],
        );
        let metric = match self.task {
            Task::Mnist => "test accuracy (fraction)",
            Task::Regression => "test normalised MSE (dimensionless)",
            Task::Quadratic => "loss gap F(W) - F(W*)",
        };
        t.note(format!(
            "units: loss is the mean training loss over devices; metric is {metric}; cum_cost in cost units; eta is the receive scaling of the round"
        ));
        t.note("rows with seed = mean average the per-seed traces of the same M");
        for r in &self.runs {
            for row in &r.trace.rows {
                t.rows.push(vec![
                    row.round.to_string(),
                    num(row.loss),
                    num(row.metric),
                    num(row.cum_cost),
                    row.num_retx.to_string(),
                    row.eta.map(num).unwrap_or_default(),
                    row.seed.to_string(),
                ]);
            }
        }
        let mut ms: Vec<u32> = self.runs.iter().map(|r| r.num_retx).collect();
        ms.dedup();
        for m in ms {
            let traces: Vec<&TrainingTrace> = self
                .runs
                .iter()
                .filter(|r| r.num_retx == m)
                .map(|r| &r.trace)
                .collect();
            let len = traces.iter().map(|tr| tr.rows.len()).min().unwrap_or(0);
            for i in 0..len {
                let col = |f: fn(&crate::learner::TraceRow) -> f64| {
                    mean_se(&traces.iter().map(|tr| f(&tr.rows[i])).collect::<Vec<_>>()).0
                };
                let eta = if i == 0 {
                    String::new()
                } else {
                    num(col(|r| r.eta.unwrap_or(f64::NAN)))
                };
                t.rows.push(vec![
                    i.to_string(),
                    num(col(|r| r.loss)),
                    num(col(|r| r.metric)),
                    num(traces[0].rows[i].cum_cost),
                    m.to_string(),
                    eta,
                    "mean".into(),
                ]);
            }
        }
        t
    }
}

fn fl_config(cfg: &ExperimentConfig, num_retx: u32, seed: u64) -> Result<FlConfig> {
    Ok(FlConfig {
        num_retx,
        noise_variance: cfg.noise_variance()?,
        p_max: cfg.channel.p_max,
        epochs: cfg.learner.epochs,
        step_size: cfg.learner.step_size,
        cost: cfg.cost_model()?,
        channel: ChannelSource::Draw(cfg.channel.fading),
        power: cfg.aircomp.power,
        normalization: cfg.aircomp.normalization,
        max_rounds: cfg.learner.max_rounds,
        seed,
    })
}

fn train_mlp(
    cfg: &ExperimentConfig,
    spec: MlpSpec,
    train_pool: &Dataset,
    test: &Dataset,
    samples_per_device: Option<usize>,
) -> Result<Vec<TrainRun>> {
    let master = cfg.seed()?;
    let k = cfg.channel.num_devices;
    let needed = samples_per_device.map_or(train_pool.len(), |s| s * k);
    if needed > train_pool.len() {
        return Err(Error::Config(format!(
            "{k} devices with {} samples each need {needed} training samples, the data has {}",
            needed / k,
            train_pool.len()
        )));
    }
    let per_trial = fan_out(cfg.trials()?, |t| {
        let mut rng = trial_rng(master, t);
        let mut rows: Vec<usize> = (0..train_pool.len()).collect();
        rows.shuffle(&mut rng);
        rows.truncate(needed);
        let subset = train_pool.select(&rows);
        let shards = partition(&subset, k, PartitionScheme::IidEqual, &mut rng)?;
        let objectives = shards
            .iter()
            .map(|s| MlpObjective::new(spec, &s.data))
            .collect::<Result<Vec<_>>>()?;
        let init = spec.init(&mut rng);
        cfg.num_retx()
            .iter()
            .map(|&m| {
                let fl = fl_config(cfg, m, trial_seed(master, t))?;
                let trace = run_airrecomp(&objectives, init.clone(), &fl, |model| {
                    eval_model(&spec, model, test)
                })?;
                Ok(TrainRun {
                    num_retx: m,
                    trial: t,
                    trace,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(regroup(per_trial))
}

/// Trial-major results to M-major order.
fn regroup(per_trial: Vec<Vec<TrainRun>>) -> Vec<TrainRun> {
    let mut runs: Vec<TrainRun> = per_trial.into_iter().flatten().collect();
    // stable: keeps trial order within each M, M in config order
    let order: Vec<u32> = {
        let mut seen = Vec::new();
        for r in &runs {
            if !seen.contains(&r.num_retx) {
                seen.push(r.num_retx);
            }
        }
        seen
    };
    runs.sort_by_key(|r| order.iter().position(|&m| m == r.num_retx));
    runs
}

fn train_quadratic(cfg: &ExperimentConfig) -> Result<Vec<TrainRun>> {
    let master = cfg.seed()?;
    let k = cfg.channel.num_devices;
    let b = &cfg.bounds;
    let per_trial = fan_out(cfg.trials()?, |t| {
        let mut rng = trial_rng(master, t);
        let problem = make_quadratic_problem(k, b.dim, b.spread, &mut rng)?;
        let w0: Vec<f64> = (0..b.dim).map(|_| rng.sample(StandardNormal)).collect();
        let init = GlobalModel::new(w0)?;
        cfg.num_retx()
            .iter()
            .map(|&m| {
                let fl = fl_config(cfg, m, trial_seed(master, t))?;
                let trace = run_airrecomp(problem.devices(), init.clone(), &fl, |model| {
                    Ok(problem.loss_gap(&model.weights))
                })?;
                Ok(TrainRun {
                    num_retx: m,
                    trial: t,
                    trace,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(regroup(per_trial))
}

pub fn train(cfg: &ExperimentConfig) -> Result<TrainReport> {
    let l = &cfg.learner;
    let runs = match l.task {
        Task::Mnist => {
            let dir = cfg.data_dir();
            let train = load_mnist_idx(
                &dir.join("train-images-idx3-ubyte.gz"),
                &dir.join("train-labels-idx1-ubyte.gz"),
            )?;
            let mut test = load_mnist_idx(
                &dir.join("t10k-images-idx3-ubyte.gz"),
                &dir.join("t10k-labels-idx1-ubyte.gz"),
            )?;
            if let Some(n) = l.test_samples {
                test = test.head(n);
            }
            let mut spec = MlpSpec::classifier(train.input_dim(), l.hidden, 10);
            spec.activation = l.activation;
            train_mlp(cfg, spec, &train, &test, Some(cfg.samples_per_device()))?
        }
        Task::Regression => {
            let mut rng = seeded(cfg.seed()?);
            let all = synth_regression(l.regression_samples, l.regression_noise, &mut rng)?;
            let (train, test) = all.train_test_split(l.regression_test, &mut rng)?;
            let mut spec = MlpSpec::regressor(REGRESSION_FEATURES, l.hidden);
            spec.activation = l.activation;
            train_mlp(cfg, spec, &train, &test, None)?
        }
        Task::Quadratic => train_quadratic(cfg)?,
    };
    Ok(TrainReport { task: l.task, runs })
}
