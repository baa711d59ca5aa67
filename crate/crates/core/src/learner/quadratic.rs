use super::Objective;
use crate::error::{Error, Result};

/// `F_k(w) = 0.5 ||w - a_k||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticDevice {
    center: Vec<f64>,
}

impl QuadraticDevice {
    pub fn new(center: Vec<f64>) -> Self {
        Self { center }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
}

impl Objective for QuadraticDevice {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn loss(&self, weights: &[f64]) -> f64 {
        0.5 * weights
            .iter()
            .zip(&self.center)
            .map(|(w, a)| (w - a).powi(2))
            .sum::<f64>()
    }

    fn gradient(&self, weights: &[f64]) -> Vec<f64> {
        weights
            .iter()
            .zip(&self.center)
            .map(|(w, a)| w - a)
            .collect()
    }
}

/// A set of quadratic devices. The global loss is their average, so the
/// optimum is the mean centre and `mu = L = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    devices: Vec<QuadraticDevice>,
    optimum: Vec<f64>,
}

impl QuadraticProblem {
    pub fn from_centers(centers: Vec<Vec<f64>>) -> Result<Self> {
        let dim = centers.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || centers.iter().any(|c| c.len() != dim) {
            return Err(Error::Dimension(
                "quadratic centres must be nonempty and of equal length".into(),
            ));
        }
        if centers.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("quadratic centres must be finite".into()));
        }
        let k = centers.len() as f64;
        let optimum = (0..dim)
            .map(|i| centers.iter().map(|c| c[i]).sum::<f64>() / k)
            .collect();
        Ok(Self {
            devices: centers.into_iter().map(QuadraticDevice::new).collect(),
            optimum,
        })
    }

    pub fn devices(&self) -> &[QuadraticDevice] {
        &self.devices
    }

    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn dim(&self) -> usize {
        self.optimum.len()
    }

    pub fn optimum(&self) -> &[f64] {
        &self.optimum
    }

    pub fn mu(&self) -> f64 {
        1.0
    }

    pub fn lipschitz(&self) -> f64 {
        1.0
    }

    pub fn global_loss(&self, weights: &[f64]) -> f64 {
        self.devices.iter().map(|d| d.loss(weights)).sum::<f64>() / self.num_devices() as f64
    }

    pub fn global_gradient(&self, weights: &[f64]) -> Vec<f64> {
        weights
            .iter()
            .zip(&self.optimum)
            .map(|(w, o)| w - o)
            .collect()
    }

    pub fn optimal_loss(&self) -> f64 {
        self.global_loss(&self.optimum)
    }

    pub fn loss_gap(&self, weights: &[f64]) -> f64 {
        self.global_loss(weights) - self.optimal_loss()
    }

    /// `sum_i mean_k (dw_k^i - dw^i)^2` for one-epoch updates. For these
    /// quadratics the local-vs-global deviation is `a_mean - a_k` at every
    /// point, so the value does not depend on the weights.
    pub fn update_spread(&self) -> f64 {
        let k = self.num_devices() as f64;
        self.devices
            .iter()
            .map(|d| {
                d.center
                    .iter()
                    .zip(&self.optimum)
                    .map(|(a, o)| (a - o).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / k
    }

    /// `||w - W*||^2`.
    pub fn distance_sq(&self, weights: &[f64]) -> f64 {
        weights
            .iter()
            .zip(&self.optimum)
            .map(|(w, o)| (w - o).powi(2))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_device_optimum() {
        let p = QuadraticProblem::from_centers(vec![vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(p.optimum(), &[2.0]);
        // F is the average of the device losses: (0.5 + 0.5) / 2
        assert_eq!(p.optimal_loss(), 0.5);
        assert_eq!(p.global_gradient(&[2.0]), vec![0.0]);
        assert_eq!(p.update_spread(), 1.0);
    }

    #[test]
    fn rejects_ragged_centres() {
        assert!(QuadraticProblem::from_centers(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(QuadraticProblem::from_centers(vec![]).is_err());
    }
}
