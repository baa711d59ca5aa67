//! Convergence-bound constants, step-size admissibility and loss-gap bounds
//! for strongly convex and convex objectives.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::powerctl::PowerPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convexity {
    Strong,
    Convex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    /// Strong-convexity modulus, 0 for merely convex losses.
    pub mu: f64,
    pub lipschitz: f64,
    pub beta: f64,
    /// Squared norm of the coordinate-wise update-variance bound.
    pub sigma_sq: f64,
    pub dim: usize,
    /// Expected squared distance from the initial weights to the optimum.
    pub r0_sq: f64,
    pub policy: PowerPolicy,
    pub chan: ChannelRealization,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lipschitz > 0.0) {
            return Err(Error::Domain(format!(
                "L must be positive, got {}",
                self.lipschitz
            )));
        }
        if !(self.mu >= 0.0) || self.mu > self.lipschitz {
            return Err(Error::Domain(format!(
                "need 0 <= mu <= L, got mu={} L={}",
                self.mu, self.lipschitz
            )));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Domain(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.sigma_sq >= 0.0) || !(self.r0_sq >= 0.0) {
            return Err(Error::Domain("sigma^2 and r0^2 must be nonnegative".into()));
        }
        if self.policy.num_devices() != self.chan.num_devices() {
            return Err(Error::Dimension("policy and channel disagree on K".into()));
        }
        Ok(())
    }

    fn num_devices(&self) -> f64 {
        self.chan.num_devices() as f64
    }
}

fn amplitude_sum(policy: &PowerPolicy, chan: &ChannelRealization) -> f64 {
    policy
        .powers
        .iter()
        .zip(chan.gains())
        .map(|(p, h)| p.sqrt() * h)
        .sum()
}

fn power_gain_sum(policy: &PowerPolicy, chan: &ChannelRealization) -> f64 {
    policy
        .powers
        .iter()
        .zip(chan.gains())
        .map(|(p, h)| p * h * h)
        .sum()
}

/// `c1 = sum_k sqrt(p_k) |h_k| / sqrt(eta)`.
pub fn compute_c1(policy: &PowerPolicy, chan: &ChannelRealization) -> f64 {
    amplitude_sum(policy, chan) / policy.eta.sqrt()
}

/// `c2 = 1 - (2 beta / K) (mu L / (mu + L)) c1`; strongly convex only.
pub fn compute_c2(params: &BoundParams) -> Result<f64> {
    if params.mu <= 0.0 {
        return Err(Error::NotApplicable(
            "c2 is defined for strongly convex losses only (mu > 0)".into(),
        ));
    }
    let (mu, l) = (params.mu, params.lipschitz);
    let c1 = compute_c1(&params.policy, &params.chan);
    Ok(1.0 - 2.0 * params.beta / params.num_devices() * (mu * l / (mu + l)) * c1)
}

/// `c3 = ||sigma||^2 sum_k p_k |h_k|^2 / (K eta) + d sigma_z^2 / (M K^2 eta)`.
pub fn compute_c3(params: &BoundParams) -> f64 {
    let k = params.num_devices();
    let eta = params.policy.eta;
    let m = f64::from(params.policy.num_retx);
    params.sigma_sq * power_gain_sum(&params.policy, &params.chan) / (k * eta)
        + params.dim as f64 * params.chan.noise_variance() / (m * k * k * eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizeCheck {
    /// Admissible step sizes are strictly below this value.
    pub supremum: f64,
    pub admissible: bool,
}

pub fn check_step_size(params: &BoundParams, convexity: Convexity) -> StepSizeCheck {
    let k = params.num_devices();
    let root_eta = params.policy.eta.sqrt();
    let amp = amplitude_sum(&params.policy, &params.chan);
    let pow = power_gain_sum(&params.policy, &params.chan);
    let (mu, l) = (params.mu, params.lipschitz);
    let supremum = match convexity {
        Convexity::Strong => {
            let contraction = k * root_eta * (mu + l) / (2.0 * mu * l * amp);
            let smoothness = 2.0 * root_eta / (mu + l) * amp / pow;
            contraction.min(smoothness)
        }
        Convexity::Convex => root_eta / l * amp / pow,
    };
    StepSizeCheck {
        supremum,
        admissible: params.beta < supremum,
    }
}

/// Bound constants for one parameter set; evaluate at any round with
/// [`BoundReport::total`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub convexity: Convexity,
    pub c1: f64,
    /// Only defined in the strongly convex case.
    pub c2: Option<f64>,
    pub c3: f64,
    lipschitz: f64,
    beta: f64,
    num_devices: f64,
    r0_sq: f64,
}

impl BoundReport {
    pub fn new(params: &BoundParams, convexity: Convexity) -> Result<Self> {
        params.validate()?;
        let check = check_step_size(params, convexity);
        if !check.admissible {
            return Err(Error::StepSize {
                beta: params.beta,
                supremum: check.supremum,
            });
        }
        let c2 = match convexity {
            Convexity::Strong => Some(compute_c2(params)?),
            Convexity::Convex => None,
        };
        Ok(Self {
            convexity,
            c1: compute_c1(&params.policy, &params.chan),
            c2,
            c3: compute_c3(params),
            lipschitz: params.lipschitz,
            beta: params.beta,
            num_devices: params.num_devices(),
            r0_sq: params.r0_sq,
        })
    }

    /// The part of the bound that vanishes as `n` grows.
    pub fn diminishing(&self, n: usize) -> Result<f64> {
        match self.c2 {
            Some(c2) => Ok(self.lipschitz / 2.0 * c2.powi(n as i32) * self.r0_sq),
            None => {
                if n == 0 {
                    return Err(Error::Domain("the convex bound starts at round 1".into()));
                }
                Ok(self.num_devices * self.r0_sq / (2.0 * n as f64 * self.beta * self.c1))
            }
        }
    }

    /// The error floor that remains after convergence.
    pub fn post_convergence(&self) -> f64 {
        let (l, beta) = (self.lipschitz, self.beta);
        match self.c2 {
            Some(c2) => beta * beta * l * self.c3 / (2.0 * (1.0 - c2)),
            None => beta / 2.0 * (self.num_devices / self.c1 + l * beta) * self.c3,
        }
    }

    pub fn total(&self, n: usize) -> Result<f64> {
        Ok(self.diminishing(n)? + self.post_convergence())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub diminishing: f64,
    pub post_convergence: f64,
    pub total: f64,
}

/// Upper bound on `E[F(W_n)] - F(W*)`. Refuses inadmissible step sizes.
pub fn loss_gap_bound(params: &BoundParams, n: usize, convexity: Convexity) -> Result<BoundValue> {
    let report = BoundReport::new(params, convexity)?;
    let diminishing = report.diminishing(n)?;
    let post_convergence = report.post_convergence();
    Ok(BoundValue {
        diminishing,
        post_convergence,
        total: diminishing + post_convergence,
    })
}
