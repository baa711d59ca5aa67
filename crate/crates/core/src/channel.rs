//! Block-fading multiple-access channel with additive Gaussian noise.
//!
//! Devices pre-rotate their symbols by the conjugate channel phase, so the
//! effective channel seen by the server is the real magnitude `|h_k|`. The
//! whole simulator therefore works in a real baseband model: each element of
//! a received vector is `sum_k |h_k| x_k + z` with `z ~ N(0, noise_variance)`.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-device channel magnitudes and receiver noise for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    gains: Vec<f64>,
    noise_variance: f64,
}

/// How often fading coefficients are redrawn during a training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadingMode {
    /// New coefficients every communication round, static across the
    /// retransmissions inside a round.
    #[default]
    PerRound,
    /// One draw for the whole run.
    Frozen,
}

impl ChannelRealization {
    pub fn new(gains: Vec<f64>, noise_variance: f64) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::Domain("channel needs at least one device".into()));
        }
        if let Some(g) = gains.iter().find(|g| !g.is_finite() || **g < 0.0) {
            return Err(Error::Domain(format!(
                "channel gains must be finite and nonnegative, got {g}"
            )));
        }
        if !noise_variance.is_finite() || noise_variance < 0.0 {
            return Err(Error::Domain(format!(
                "noise variance must be finite and nonnegative, got {noise_variance}"
            )));
        }
        Ok(Self {
            gains,
            noise_variance,
        })
    }

    /// Unit Rayleigh fading: `h = a + jb` with `a, b ~ N(0, 1/2)`, so that
    /// `E[|h|^2] = 1`. Only the magnitude is kept.
    pub fn draw<R: Rng + ?Sized>(
        num_devices: usize,
        noise_variance: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if num_devices == 0 {
            return Err(Error::Domain("channel needs at least one device".into()));
        }
        let gains = draw_rayleigh(num_devices, rng);
        Self::new(gains, noise_variance)
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn num_devices(&self) -> usize {
        self.gains.len()
    }

    /// Same fading, different receiver noise.
    pub fn with_noise_variance(&self, noise_variance: f64) -> Result<Self> {
        Self::new(self.gains.clone(), noise_variance)
    }

    /// One simultaneous uplink transmission.
    ///
    /// `signals[k]` is what device `k` puts on the air, already scaled by its
    /// amplitude `sqrt(p_k)`. Returns the superposition plus fresh noise.
    pub fn transmit_once<S, R>(&self, signals: &[S], rng: &mut R) -> Result<Vec<f64>>
    where
        S: AsRef<[f64]>,
        R: Rng + ?Sized,
    {
        if signals.len() != self.gains.len() {
            return Err(Error::Dimension(format!(
                "{} signals for {} devices",
                signals.len(),
                self.gains.len()
            )));
        }
        let d = signals[0].as_ref().len();
        if d == 0 {
            return Err(Error::Dimension("signals must be nonempty".into()));
        }
        if let Some((k, s)) = signals
            .iter()
            .enumerate()
            .find(|(_, s)| s.as_ref().len() != d)
        {
            return Err(Error::Dimension(format!(
                "signal {k} has length {}, expected {d}",
                s.as_ref().len()
            )));
        }

        let mut received = vec![0.0; d];
        for (gain, signal) in self.gains.iter().zip(signals) {
            for (y, x) in received.iter_mut().zip(signal.as_ref()) {
                *y += gain * x;
            }
        }
        let std = self.noise_variance.sqrt();
        for y in received.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *y += std * z;
        }
        Ok(received)
    }
}

pub(crate) fn draw_rayleigh<R: Rng + ?Sized>(num_devices: usize, rng: &mut R) -> Vec<f64> {
    let component = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid std");
    (0..num_devices)
        .map(|_| {
            let re: f64 = component.sample(rng);
            let im: f64 = component.sample(rng);
            re.hypot(im)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn draw_is_deterministic() {
        let a = ChannelRealization::draw(3, 1.0, &mut seeded(11)).unwrap();
        let b = ChannelRealization::draw(3, 1.0, &mut seeded(11)).unwrap();
        assert_eq!(a, b);
        let single = ChannelRealization::draw(1, 0.0, &mut seeded(5)).unwrap();
        assert!(single.gains()[0] >= 0.0);
    }

    #[test]
    fn rayleigh_power_is_unit_mean() {
        // E|h|^2 = 1, Var|h|^2 = 1 (exponential), so 3 sigma of the mean over
        // 1e5 draws is 0.0095; the [0.97, 1.03] window is comfortably wider.
        let chan = ChannelRealization::draw(100_000, 0.0, &mut seeded(3)).unwrap();
        let mean_sq = chan.gains().iter().map(|g| g * g).sum::<f64>() / chan.num_devices() as f64;
        assert!((0.97..=1.03).contains(&mean_sq), "mean |h|^2 = {mean_sq}");
    }

    #[test]
    fn noiseless_superposition() {
        let mut rng = seeded(0);
        let chan = ChannelRealization::new(vec![1.0, 1.0], 0.0).unwrap();
        let y = chan
            .transmit_once(&[vec![1.0], vec![1.0]], &mut rng)
            .unwrap();
        assert_eq!(y, vec![2.0]);

        let chan = ChannelRealization::new(vec![0.5, 1.0, 2.0], 0.0).unwrap();
        let y = chan
            .transmit_once(&[vec![1.0], vec![2.0], vec![3.0]], &mut rng)
            .unwrap();
        assert_eq!(y, vec![8.5]);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let chan = ChannelRealization::new(vec![1.0, 1.0], 0.0).unwrap();
        let err = chan
            .transmit_once(&[vec![1.0, 2.0], vec![1.0]], &mut seeded(0))
            .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
        let err = chan
            .transmit_once(&[vec![1.0]], &mut seeded(0))
            .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn noise_variance_matches() {
        // Sample variance of n=2e4 N(0,1) draws: the chi-square 99.9% interval
        // is roughly 1 +- 3.3*sqrt(2/n) = [0.967, 1.033], inside [0.94, 1.06].
        let chan = ChannelRealization::new(vec![0.7], 1.0).unwrap();
        let mut rng = seeded(21);
        let mut samples = Vec::new();
        for _ in 0..10_000 {
            samples.extend(chan.transmit_once(&[vec![0.0, 0.0]], &mut rng).unwrap());
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.94..=1.06).contains(&var), "variance {var}");
    }

    #[test]
    fn noiseless_transmission_is_linear() {
        let chan = ChannelRealization::new(vec![0.3, 1.7, 0.9], 0.0).unwrap();
        let a = [vec![1.0, -2.0], vec![0.5, 0.0], vec![3.0, 1.0]];
        let b = [vec![-1.5, 2.5], vec![4.0, 1.0], vec![0.0, -0.5]];
        let sum: Vec<Vec<f64>> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
            .collect();
        let mut rng = seeded(1);
        let fa = chan.transmit_once(&a, &mut rng).unwrap();
        let fb = chan.transmit_once(&b, &mut rng).unwrap();
        let fab = chan.transmit_once(&sum, &mut rng).unwrap();
        for i in 0..2 {
            assert!((fa[i] + fb[i] - fab[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_output_is_centred_on_superposition() {
        let chan = ChannelRealization::new(vec![0.5, 1.5], 2.0).unwrap();
        let signals = [vec![1.0], vec![-0.25]];
        let clean = 0.5 * 1.0 + 1.5 * -0.25;
        let trials = 20_000;
        let mut rng = seeded(8);
        let mean = (0..trials)
            .map(|_| chan.transmit_once(&signals, &mut rng).unwrap()[0])
            .sum::<f64>()
            / trials as f64;
        let tol = 3.0 * (2.0f64 / trials as f64).sqrt();
        assert!((mean - clean).abs() < tol, "mean {mean} vs {clean}");
    }

    #[test]
    fn invalid_inputs() {
        assert!(ChannelRealization::new(vec![], 1.0).is_err());
        assert!(ChannelRealization::new(vec![-0.1], 1.0).is_err());
        assert!(ChannelRealization::new(vec![1.0], -1.0).is_err());
        assert!(ChannelRealization::draw(0, 1.0, &mut seeded(0)).is_err());
    }
}
