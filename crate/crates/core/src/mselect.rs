//! Choosing the number of retransmissions `M` under a cost budget.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{compute_c1, loss_gap_bound, BoundParams, Convexity};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::powerctl::solve_power_control;

pub const DEFAULT_M_MAX: u32 = 64;

/// `(Ct + M Cu) N <= budget`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub train_cost: f64,
    pub uplink_cost: f64,
    pub budget: f64,
}

impl CostModel {
    pub fn new(train_cost: f64, uplink_cost: f64, budget: f64) -> Result<Self> {
        let cost = Self {
            train_cost,
            uplink_cost,
            budget,
        };
        cost.validate()?;
        Ok(cost)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_cost >= 0.0 && self.train_cost.is_finite()) {
            return Err(Error::Config(format!(
                "training cost must be nonnegative, got {}",
                self.train_cost
            )));
        }
        if !(self.uplink_cost > 0.0 && self.uplink_cost.is_finite()) {
            return Err(Error::Config(format!(
                "uplink cost must be positive, got {}",
                self.uplink_cost
            )));
        }
        if !(self.budget >= self.train_cost + self.uplink_cost) {
            return Err(Error::Budget(format!(
                "budget {} cannot pay for a single round at M=1",
                self.budget
            )));
        }
        Ok(())
    }

    pub fn round_cost(&self, num_retx: u32) -> f64 {
        self.train_cost + f64::from(num_retx) * self.uplink_cost
    }

    /// Number of affordable rounds, `None` if not even one.
    pub fn rounds_for(&self, num_retx: u32) -> Option<usize> {
        if num_retx == 0 {
            return None;
        }
        let n = (self.budget / self.round_cost(num_retx)).floor() as usize;
        (n > 0).then_some(n)
    }

    /// Largest `M` with at least one affordable round.
    pub fn max_feasible_m(&self) -> u32 {
        ((self.budget - self.train_cost) / self.uplink_cost)
            .floor()
            .max(0.0) as u32
    }
}

/// Values of `M` to enumerate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSet {
    /// `1..=max`.
    UpTo(u32),
    List(Vec<u32>),
}

impl Default for CandidateSet {
    fn default() -> Self {
        CandidateSet::UpTo(DEFAULT_M_MAX)
    }
}

impl CandidateSet {
    /// Sorted, deduplicated candidates that afford at least one round.
    pub fn feasible(&self, cost: &CostModel) -> Result<Vec<u32>> {
        let mut ms: Vec<u32> = match self {
            CandidateSet::UpTo(max) => (1..=(*max).min(cost.max_feasible_m())).collect(),
            CandidateSet::List(list) => list.clone(),
        };
        ms.sort_unstable();
        ms.dedup();
        ms.retain(|&m| cost.rounds_for(m).is_some());
        if ms.is_empty() {
            return Err(Error::Budget(
                "no candidate M affords a single round".into(),
            ));
        }
        Ok(ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub m_star: u32,
    pub n_star: usize,
    /// Objective per candidate, in ascending `M`.
    pub objectives: Vec<(u32, f64)>,
}

fn argmin(cost: &CostModel, objectives: Vec<(u32, f64)>) -> Result<SelectionResult> {
    let mut best: Option<(u32, f64)> = None;
    for &(m, v) in &objectives {
        // strict improvement only: ties stay with the smaller M
        if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
            best = Some((m, v));
        }
    }
    let (m_star, _) =
        best.ok_or_else(|| Error::Budget("no candidate has a finite objective".into()))?;
    Ok(SelectionResult {
        m_star,
        n_star: cost.rounds_for(m_star).expect("feasible candidate"),
        objectives,
    })
}

/// `K / (2 N(M) beta c1(M))`: the diminishing term of the convex bound
/// without the initial-distance factor.
pub fn diminishing_objective(
    cost: &CostModel,
    chan: &ChannelRealization,
    p_max: f64,
    beta: f64,
    num_retx: u32,
) -> Result<f64> {
    let n = cost
        .rounds_for(num_retx)
        .ok_or_else(|| Error::Budget(format!("M={num_retx} affords no round")))?;
    let policy = solve_power_control(chan, p_max, num_retx)?;
    let c1 = compute_c1(&policy, chan);
    Ok(chan.num_devices() as f64 / (2.0 * n as f64 * beta * c1))
}

/// Argmin of the diminishing-term objective averaged over `chans`.
pub fn select_m_diminishing(
    cost: &CostModel,
    chans: &[ChannelRealization],
    p_max: f64,
    beta: f64,
    candidates: &CandidateSet,
) -> Result<SelectionResult> {
    if chans.is_empty() {
        return Err(Error::Domain("need at least one channel draw".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let ms = candidates.feasible(cost)?;
    let objectives = ms
        .iter()
        .map(|&m| {
            let mut total = 0.0;
            for chan in chans {
                total += diminishing_objective(cost, chan, p_max, beta, m)?;
            }
            Ok((m, total / chans.len() as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    argmin(cost, objectives)
}

/// Draw `count` Rayleigh channels for the heuristic to average over.
pub fn draw_channels<R: Rng + ?Sized>(
    num_devices: usize,
    noise_variance: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<ChannelRealization>> {
    (0..count)
        .map(|_| ChannelRealization::draw(num_devices, noise_variance, rng))
        .collect()
}

/// Problem constants for the full-bound objective. `lipschitz` is `None`
/// when it is unknown, as for neural networks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    pub mu: f64,
    pub lipschitz: Option<f64>,
    pub beta: f64,
    pub sigma_sq: f64,
    pub dim: usize,
    pub r0_sq: f64,
}

/// Argmin over `M` of the full loss-gap bound evaluated at `N(M)`.
/// Candidates whose step size is inadmissible are skipped.
pub fn select_m_full_bound(
    cost: &CostModel,
    constants: &ProblemConstants,
    chan: &ChannelRealization,
    p_max: f64,
    convexity: Convexity,
    candidates: &CandidateSet,
) -> Result<SelectionResult> {
    let lipschitz = constants.lipschitz.ok_or_else(|| {
        Error::NotApplicable("the full bound needs a known smoothness constant".into())
    })?;
    let ms = candidates.feasible(cost)?;
    let mut objectives = Vec::with_capacity(ms.len());
    for m in ms {
        let params = BoundParams {
            mu: constants.mu,
            lipschitz,
            beta: constants.beta,
            sigma_sq: constants.sigma_sq,
            dim: constants.dim,
            r0_sq: constants.r0_sq,
            policy: solve_power_control(chan, p_max, m)?,
            chan: chan.clone(),
        };
        let n = cost.rounds_for(m).expect("feasible");
        match loss_gap_bound(&params, n, convexity) {
            Ok(v) => objectives.push((m, v.total)),
            Err(Error::StepSize { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if objectives.is_empty() {
        return Err(Error::StepSize {
            beta: constants.beta,
            supremum: f64::NAN,
        });
    }
    argmin(cost, objectives)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma_z: f64,
    pub selection: SelectionResult,
}

/// Draw-averaged selection at every noise level. The same gains are reused
/// across the grid.
pub fn sweep_sigma(
    cost: &CostModel,
    gains: &[ChannelRealization],
    sigma_grid: &[f64],
    p_max: f64,
    beta: f64,
    candidates: &CandidateSet,
) -> Result<Vec<SweepRow>> {
    if sigma_grid.is_empty() {
        return Err(Error::Domain("noise grid is empty".into()));
    }
    sigma_grid
        .iter()
        .map(|&sigma_z| {
            let chans = gains
                .iter()
                .map(|c| c.with_noise_variance(sigma_z * sigma_z))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow {
                sigma_z,
                selection: select_m_diminishing(cost, &chans, p_max, beta, candidates)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn reference_cost() -> CostModel {
        CostModel::new(4.0, 1.0, 150.0).unwrap()
    }

    #[test]
    fn rounds_by_floor() {
        let c = reference_cost();
        assert_eq!(c.rounds_for(1), Some(30));
        assert_eq!(c.rounds_for(4), Some(18));
        assert_eq!(c.rounds_for(16), Some(7));
        assert_eq!(c.rounds_for(146), Some(1));
        assert_eq!(c.rounds_for(147), None);
        assert_eq!(c.max_feasible_m(), 146);
    }

    #[test]
    fn budget_must_cover_one_round() {
        assert!(matches!(
            CostModel::new(4.0, 1.0, 4.5),
            Err(Error::Budget(_))
        ));
        assert!(CostModel::new(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn unlimited_power_picks_one() {
        let chans = draw_channels(10, 4.0, 20, &mut seeded(5)).unwrap();
        let sel = select_m_diminishing(
            &reference_cost(),
            &chans,
            1e12,
            0.05,
            &CandidateSet::UpTo(16),
        )
        .unwrap();
        assert_eq!(sel.m_star, 1);
        assert_eq!(sel.n_star, 30);
    }

    #[test]
    fn singleton_candidate() {
        let chans = draw_channels(3, 100.0, 2, &mut seeded(1)).unwrap();
        let cost = CostModel::new(1.0, 1.0, 2.0).unwrap();
        let sel = select_m_diminishing(&cost, &chans, 1.0, 0.1, &CandidateSet::default()).unwrap();
        assert_eq!((sel.m_star, sel.n_star), (1, 1));
    }

    #[test]
    fn ties_go_to_smaller_m() {
        let cost = reference_cost();
        let sel = argmin(&cost, vec![(1, 2.0), (2, 1.0), (4, 1.0)]).unwrap();
        assert_eq!(sel.m_star, 2);
    }

    #[test]
    fn full_bound_needs_smoothness() {
        let chan = ChannelRealization::draw(4, 1.0, &mut seeded(0)).unwrap();
        let constants = ProblemConstants {
            mu: 0.0,
            lipschitz: None,
            beta: 0.1,
            sigma_sq: 0.0,
            dim: 4,
            r0_sq: 1.0,
        };
        let err = select_m_full_bound(
            &reference_cost(),
            &constants,
            &chan,
            1.0,
            Convexity::Convex,
            &CandidateSet::UpTo(8),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotApplicable(_)));
    }
}
