use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, Targets};
use crate::error::{Error, Result};
use crate::learner::QuadraticProblem;

/// Feature count of the synthetic sensor-regression data.
pub const REGRESSION_FEATURES: usize = 5;

/// Smooth nonlinear response over five standardised inputs.
fn response(x: &[f64]) -> f64 {
    1.2 * x[0] + 0.8 * (1.5 * x[1]).sin() + 0.5 * x[2] * x[3] - 0.4 * x[4] * x[4]
        + 0.3 * (x[0] * x[4]).tanh()
}

/// Synthetic stand-in for a water-quality regression task: five
/// standardised features and a noisy nonlinear target.
///
/// The noiseless response has variance around 2.3, so the default
/// `noise_std = 0.1` keeps the signal-to-noise ratio above 100.
pub fn synth_regression<R: Rng + ?Sized>(n: usize, noise_std: f64, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    if !(noise_std >= 0.0) {
        return Err(Error::Domain(format!(
            "noise std must be nonnegative, got {noise_std}"
        )));
    }
    let raw = Array2::from_shape_simple_fn((n, REGRESSION_FEATURES), || StandardNormal.sample(rng));
    let mut data = Dataset {
        features: raw,
        targets: Targets::Values(Vec::new()),
    };
    if n > 1 {
        data.standardize();
    }
    let targets = data
        .features
        .rows()
        .into_iter()
        .map(|row| {
            let eps: f64 = StandardNormal.sample(rng);
            response(row.as_slice().expect("standard layout")) + noise_std * eps
        })
        .collect();
    data.targets = Targets::Values(targets);
    Ok(data)
}

/// Per-device quadratics `F_k(w) = 0.5 ||w - a_k||^2` with centres
/// `a_k = base + spread * xi_k`, `base, xi_k ~ N(0, I)`.
pub fn make_quadratic_problem<R: Rng + ?Sized>(
    num_devices: usize,
    dim: usize,
    spread: f64,
    rng: &mut R,
) -> Result<QuadraticProblem> {
    if num_devices == 0 || dim == 0 {
        return Err(Error::Domain(
            "quadratic problem needs K >= 1 and d >= 1".into(),
        ));
    }
    let base: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let centers = (0..num_devices)
        .map(|_| {
            base.iter()
                .map(|b| {
                    let xi: f64 = StandardNormal.sample(rng);
                    b + spread * xi
                })
                .collect()
        })
        .collect();
    QuadraticProblem::from_centers(centers)
}
