//! Federated learning: global model state, local gradient descent and the
//! server step, with an MLP and a synthetic quadratic problem as workloads.

mod fl;
mod mlp;
mod quadratic;

use serde::{Deserialize, Serialize};

use crate::aircomp::ModelUpdate;
use crate::error::{Error, Result};

pub use fl::{run_airrecomp, ChannelSource, FlConfig, PowerScheme, TraceRow, TrainingTrace};
pub use mlp::{accuracy, eval_model, normalized_mse, Activation, Head, MlpObjective, MlpSpec};
pub use quadratic::{QuadraticDevice, QuadraticProblem};

/// A differentiable local loss over a flat parameter vector.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn loss(&self, weights: &[f64]) -> f64;

    fn gradient(&self, weights: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalModel {
    pub weights: Vec<f64>,
    pub round: usize,
}

impl GlobalModel {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numerical {
                round: 0,
                context: "initial weights are not finite".into(),
            });
        }
        Ok(Self { weights, round: 0 })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// One device's share of a round: `epochs` full-batch gradient steps of
/// size `step_size` on `objective`.
#[derive(Debug, Clone, Copy)]
pub struct LocalProblem<'a, O: ?Sized> {
    pub objective: &'a O,
    pub epochs: usize,
    pub step_size: f64,
}

impl<'a, O: Objective + ?Sized> LocalProblem<'a, O> {
    pub fn new(objective: &'a O, epochs: usize, step_size: f64) -> Result<Self> {
        if epochs == 0 {
            return Err(Error::Domain(
                "local training needs at least one epoch".into(),
            ));
        }
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(Error::Domain(format!(
                "step size must be positive, got {step_size}"
            )));
        }
        Ok(Self {
            objective,
            epochs,
            step_size,
        })
    }
}

/// Run local gradient descent from the global weights and return
/// `(W_n - W(E)) / beta`. With one epoch this is the local gradient at `W_n`.
pub fn local_train<O: Objective + ?Sized>(
    model: &GlobalModel,
    prob: &LocalProblem<'_, O>,
    device_id: usize,
) -> Result<ModelUpdate> {
    if prob.objective.dim() != model.dim() {
        return Err(Error::Dimension(format!(
            "model has {} weights, local problem expects {}",
            model.dim(),
            prob.objective.dim()
        )));
    }
    let beta = prob.step_size;
    if prob.epochs == 1 {
        let grad = prob.objective.gradient(&model.weights);
        check_finite(&grad, model.round, device_id)?;
        return Ok(ModelUpdate::new(grad, device_id));
    }
    let mut w = model.weights.clone();
    for _ in 0..prob.epochs {
        let grad = prob.objective.gradient(&w);
        check_finite(&grad, model.round, device_id)?;
        w.iter_mut().zip(&grad).for_each(|(wi, g)| *wi -= beta * g);
    }
    let values = model
        .weights
        .iter()
        .zip(&w)
        .map(|(w0, we)| (w0 - we) / beta)
        .collect();
    Ok(ModelUpdate::new(values, device_id))
}

fn check_finite(grad: &[f64], round: usize, device_id: usize) -> Result<()> {
    if grad.iter().all(|g| g.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical {
            round,
            context: format!("non-finite local gradient on device {device_id}"),
        })
    }
}

/// `W_{n+1} = W_n - beta * update`.
pub fn global_step(model: &GlobalModel, update: &[f64], beta: f64) -> Result<GlobalModel> {
    if update.len() != model.dim() {
        return Err(Error::Dimension(format!(
            "update has {} elements, model has {}",
            update.len(),
            model.dim()
        )));
    }
    let weights: Vec<f64> = model
        .weights
        .iter()
        .zip(update)
        .map(|(w, u)| w - beta * u)
        .collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Numerical {
            round: model.round + 1,
            context: "global model diverged".into(),
        });
    }
    Ok(GlobalModel {
        weights,
        round: model.round + 1,
    })
}
