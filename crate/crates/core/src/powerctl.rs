//! MSE-optimal transmit power control for AirComp with `M` retransmissions.
//!
//! For a fixed receiver scalar `eta`, the best feasible power of device `k` is
//! `min(p_max, eta / |h_k|^2)`: invert the channel when possible, otherwise
//! transmit at full power. Averaging `M` identical transmissions divides the
//! noise variance by `M`. Sorting gains in ascending order, the optimal `eta`
//! is the smallest of the `K` prefix candidates
//!
//! ```text
//! eta_k = ( (sum_{j<=k} |h_j|^2 p_max + sigma^2 / M) / (sum_{j<=k} |h_j| sqrt(p_max)) )^2
//! ```

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPolicy {
    /// Expected per-element transmit power of each device.
    pub powers: Vec<f64>,
    /// Post-transmission scalar; the receiver divides by `sqrt(eta) * K`.
    pub eta: f64,
    pub p_max: f64,
    /// Number of uplink transmissions per round (`M`).
    pub num_retx: u32,
}

/// Fading and noise parts of the per-element estimation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseParts {
    pub fading: f64,
    pub noise: f64,
}

impl MseParts {
    pub fn total(&self) -> f64 {
        self.fading + self.noise
    }
}

impl PowerPolicy {
    pub fn num_devices(&self) -> usize {
        self.powers.len()
    }

    /// Received amplitude of each device relative to the ideal `sqrt(eta)`:
    /// `sqrt(p_k) |h_k| / sqrt(eta)`. Equal to 1 for channel inverters.
    pub fn effective_gains(&self, chan: &ChannelRealization) -> Vec<f64> {
        let scale = self.eta.sqrt();
        self.powers
            .iter()
            .zip(chan.gains())
            .map(|(p, h)| p.sqrt() * h / scale)
            .collect()
    }

    /// Indices of devices transmitting at the peak power.
    pub fn saturated_devices(&self) -> Vec<usize> {
        self.powers
            .iter()
            .enumerate()
            .filter(|(_, p)| **p >= self.p_max)
            .map(|(k, _)| k)
            .collect()
    }

    fn check_against(&self, chan: &ChannelRealization) -> Result<()> {
        if self.powers.len() != chan.num_devices() {
            return Err(Error::Dimension(format!(
                "policy has {} devices, channel has {}",
                self.powers.len(),
                chan.num_devices()
            )));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::Domain(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if self.num_retx == 0 {
            return Err(Error::Domain("number of transmissions must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_inputs(p_max: f64, num_retx: u32) -> Result<()> {
    if !(p_max > 0.0) || p_max.is_nan() {
        return Err(Error::Domain(format!(
            "p_max must be positive, got {p_max}"
        )));
    }
    if num_retx == 0 {
        return Err(Error::Domain("number of transmissions must be >= 1".into()));
    }
    Ok(())
}

/// Candidate `eta` over the first `prefix_len` entries of `sorted_gains`.
///
/// `sorted_gains` is expected in ascending order; the function itself does
/// not sort.
pub fn eta_candidate(
    sorted_gains: &[f64],
    prefix_len: usize,
    noise_variance: f64,
    p_max: f64,
    num_retx: u32,
) -> Result<f64> {
    check_inputs(p_max, num_retx)?;
    if prefix_len == 0 || prefix_len > sorted_gains.len() {
        return Err(Error::Domain(format!(
            "prefix length {prefix_len} outside 1..={}",
            sorted_gains.len()
        )));
    }
    let prefix = &sorted_gains[..prefix_len];
    let amplitude: f64 = prefix.iter().sum::<f64>() * p_max.sqrt();
    if amplitude == 0.0 {
        return Err(Error::NoSignal(format!(
            "first {prefix_len} gains are all zero"
        )));
    }
    let energy: f64 = prefix.iter().map(|h| h * h).sum::<f64>() * p_max;
    let ratio = (energy + noise_variance / num_retx as f64) / amplitude;
    Ok(ratio * ratio)
}

/// All `K` candidates, gains sorted ascending. Prefixes whose gains are all
/// zero have no finite candidate and are reported as `+inf`.
pub fn eta_candidates(chan: &ChannelRealization, p_max: f64, num_retx: u32) -> Result<Vec<f64>> {
    check_inputs(p_max, num_retx)?;
    let mut sorted = chan.gains().to_vec();
    sorted.sort_by(f64::total_cmp);

    let sqrt_p = p_max.sqrt();
    let noise = chan.noise_variance() / num_retx as f64;
    let mut energy = 0.0;
    let mut amplitude = 0.0;
    let candidates = sorted
        .iter()
        .map(|h| {
            energy += h * h * p_max;
            amplitude += h * sqrt_p;
            if amplitude > 0.0 {
                let ratio = (energy + noise) / amplitude;
                ratio * ratio
            } else {
                f64::INFINITY
            }
        })
        .collect();
    Ok(candidates)
}

/// Powers `min(p_max, eta / |h_k|^2)` for a given receiver scalar.
pub fn powers_for_eta(chan: &ChannelRealization, eta: f64, p_max: f64) -> Vec<f64> {
    chan.gains()
        .iter()
        .map(|h| {
            let h2 = h * h;
            if h2 == 0.0 {
                p_max
            } else {
                p_max.min(eta / h2)
            }
        })
        .collect()
}

/// Retransmission-aware optimal policy for `num_retx` transmissions.
pub fn solve_power_control(
    chan: &ChannelRealization,
    p_max: f64,
    num_retx: u32,
) -> Result<PowerPolicy> {
    let eta = eta_candidates(chan, p_max, num_retx)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if !eta.is_finite() {
        return Err(Error::NoSignal("all channel gains are zero".into()));
    }
    Ok(PowerPolicy {
        powers: powers_for_eta(chan, eta, p_max),
        eta,
        p_max,
        num_retx,
    })
}

/// Baseline that optimises for a single transmission and then repeats it
/// `num_retx` times.
pub fn solve_power_control_unaware(
    chan: &ChannelRealization,
    p_max: f64,
    num_retx: u32,
) -> Result<PowerPolicy> {
    check_inputs(p_max, num_retx)?;
    let mut policy = solve_power_control(chan, p_max, 1)?;
    policy.num_retx = num_retx;
    Ok(policy)
}

/// Per-element MSE of the normalised mean estimate, split into its fading
/// and noise parts. Assumes zero-mean unit-variance IID update elements.
pub fn mse_parts(policy: &PowerPolicy, chan: &ChannelRealization) -> Result<MseParts> {
    policy.check_against(chan)?;
    let k2 = (chan.num_devices() as f64).powi(2);
    let fading = policy
        .effective_gains(chan)
        .iter()
        .map(|g| (g - 1.0).powi(2))
        .sum::<f64>()
        / k2;
    let noise = chan.noise_variance() / (policy.num_retx as f64 * policy.eta) / k2;
    Ok(MseParts { fading, noise })
}

pub fn analytic_mse(policy: &PowerPolicy, chan: &ChannelRealization) -> Result<f64> {
    mse_parts(policy, chan).map(|parts| parts.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn chan(gains: &[f64], noise: f64) -> ChannelRealization {
        ChannelRealization::new(gains.to_vec(), noise).unwrap()
    }

    #[test]
    fn single_device_candidates() {
        let c = chan(&[1.0], 1.0);
        assert_eq!(eta_candidates(&c, 1.0, 1).unwrap(), vec![4.0]);
        assert_eq!(eta_candidates(&c, 1.0, 4).unwrap(), vec![1.5625]);
        assert_eq!(eta_candidate(&[1.0], 1, 1.0, 1.0, 4).unwrap(), 1.5625);
    }

    #[test]
    fn two_device_candidates_by_hand() {
        // ascending [0.5, 2]: ((0.25 + 1) / 0.5)^2 and ((4.25 + 1) / 2.5)^2
        let c = chan(&[2.0, 0.5], 1.0);
        let etas = eta_candidates(&c, 1.0, 1).unwrap();
        assert!((etas[0] - 6.25).abs() < 1e-12);
        assert!((etas[1] - 4.41).abs() < 1e-12);
        let policy = solve_power_control(&c, 1.0, 1).unwrap();
        assert!((policy.eta - 4.41).abs() < 1e-12);
        assert_eq!(policy.powers, vec![1.0, 1.0]);
    }

    #[test]
    fn zero_prefix_is_an_error() {
        let err = eta_candidate(&[0.0, 0.0, 1.0], 2, 1.0, 1.0, 1).unwrap_err();
        assert!(matches!(err, Error::NoSignal(_)));
        let err = solve_power_control(&chan(&[0.0, 0.0], 1.0), 1.0, 1).unwrap_err();
        assert!(matches!(err, Error::NoSignal(_)));
        // a dead device next to a live one is fine
        let p = solve_power_control(&chan(&[0.0, 1.0], 1.0), 1.0, 1).unwrap();
        assert_eq!(p.powers[0], 1.0);
    }

    #[test]
    fn single_device_policy() {
        let c = chan(&[1.0], 1.0);
        let p1 = solve_power_control(&c, 1.0, 1).unwrap();
        assert_eq!((p1.eta, p1.powers[0]), (4.0, 1.0));
        assert!((analytic_mse(&p1, &c).unwrap() - 0.5).abs() < 1e-15);

        let p4 = solve_power_control(&c, 1.0, 4).unwrap();
        assert_eq!((p4.eta, p4.powers[0]), (1.5625, 1.0));
        assert!((analytic_mse(&p4, &c).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn perfect_inversion_has_zero_error() {
        let c = chan(&[0.4, 1.1, 2.3], 0.0);
        let eta = 0.7;
        let policy = PowerPolicy {
            powers: c.gains().iter().map(|h| eta / (h * h)).collect(),
            eta,
            p_max: 100.0,
            num_retx: 1,
        };
        assert!(analytic_mse(&policy, &c).unwrap() < 1e-30);
    }

    #[test]
    fn mse_rejects_bad_eta() {
        let c = chan(&[1.0], 1.0);
        let policy = PowerPolicy {
            powers: vec![1.0],
            eta: 0.0,
            p_max: 1.0,
            num_retx: 1,
        };
        assert!(matches!(analytic_mse(&policy, &c), Err(Error::Domain(_))));
    }

    #[test]
    fn unaware_matches_aware_at_one_transmission() {
        let c = ChannelRealization::draw(8, 2.0, &mut seeded(4)).unwrap();
        assert_eq!(
            solve_power_control(&c, 1.0, 1).unwrap(),
            solve_power_control_unaware(&c, 1.0, 1).unwrap()
        );
        let unaware = solve_power_control_unaware(&c, 1.0, 8).unwrap();
        assert_eq!(unaware.num_retx, 8);
        assert_eq!(unaware.eta, solve_power_control(&c, 1.0, 1).unwrap().eta);
    }

    #[test]
    fn aware_beats_unaware_per_draw() {
        let mut rng = seeded(99);
        for _ in 0..200 {
            let c = ChannelRealization::draw(20, 3.0, &mut rng).unwrap();
            let aware = solve_power_control(&c, 1.0, 8).unwrap();
            let unaware = solve_power_control_unaware(&c, 1.0, 8).unwrap();
            assert!(
                analytic_mse(&aware, &c).unwrap() <= analytic_mse(&unaware, &c).unwrap() + 1e-15
            );
        }
    }

    #[test]
    fn weakest_device_saturates() {
        let mut rng = seeded(17);
        for _ in 0..200 {
            let c = ChannelRealization::draw(10, 0.5, &mut rng).unwrap();
            let policy = solve_power_control(&c, 1.0, 4).unwrap();
            assert!(!policy.saturated_devices().is_empty());
            for (p, h) in policy.powers.iter().zip(c.gains()) {
                assert!(*p <= policy.p_max);
                // threshold structure: either at the peak or exactly inverting
                let inverts = (p * h * h - policy.eta).abs() <= 1e-12 * policy.eta;
                assert!(*p == policy.p_max || inverts);
            }
        }
    }

    #[test]
    fn eta_nonincreasing_in_retransmissions() {
        let mut rng = seeded(5);
        for _ in 0..100 {
            let c = ChannelRealization::draw(6, 1.5, &mut rng).unwrap();
            let etas: Vec<f64> = [1, 2, 4, 8, 16]
                .iter()
                .map(|&m| solve_power_control(&c, 1.0, m).unwrap().eta)
                .collect();
            assert!(etas.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn scaling_power_and_noise_together_is_invariant() {
        let base = ChannelRealization::draw(10, 2.0, &mut seeded(8)).unwrap();
        let scaled = base.with_noise_variance(20.0).unwrap();
        let a = solve_power_control(&base, 1.0, 4).unwrap();
        let b = solve_power_control(&scaled, 10.0, 4).unwrap();
        let (ga, gb) = (a.effective_gains(&base), b.effective_gains(&scaled));
        for (x, y) in ga.iter().zip(&gb) {
            assert!((x - y).abs() < 1e-12);
        }
        let (ma, mb) = (
            analytic_mse(&a, &base).unwrap(),
            analytic_mse(&b, &scaled).unwrap(),
        );
        assert!((ma - mb).abs() < 1e-12 * ma);
    }
}
