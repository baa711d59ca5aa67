#![allow(dead_code)]

use std::path::PathBuf;

use airrecomp::harness::ExperimentConfig;

pub fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn mnist_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

/// Aggregation MSE for a given receive scaling, with each device using the
/// power that best matches it: `p_k = min(p_max, eta / h_k^2)`.
pub fn mse_at_eta(gains: &[f64], noise: f64, p_max: f64, m: u32, eta: f64) -> f64 {
    let k = gains.len() as f64;
    let fading: f64 = gains
        .iter()
        .map(|h| {
            let p = if *h > 0.0 {
                p_max.min(eta / (h * h))
            } else {
                p_max
            };
            (p.sqrt() * h / eta.sqrt() - 1.0).powi(2)
        })
        .sum();
    (fading + noise / (f64::from(m) * eta)) / (k * k)
}

/// Brute-force minimum of [`mse_at_eta`] over a log-spaced grid of
/// `points` values of eta spanning `(1e-6 * lo, 2 * hi]`, where `lo`/`hi`
/// are the smallest and largest sorted-prefix threshold values.
pub fn grid_min_mse(gains: &[f64], noise: f64, p_max: f64, m: u32, points: usize) -> f64 {
    let mut sorted = gains.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut thresholds = Vec::new();
    let (mut sq, mut lin) = (0.0, 0.0);
    for h in &sorted {
        sq += h * h;
        lin += h;
        if lin > 0.0 {
            let t = (sq * p_max + noise / f64::from(m)) / (lin * p_max.sqrt());
            thresholds.push(t * t);
        }
    }
    let lo = thresholds.iter().copied().fold(f64::INFINITY, f64::min) * 1e-6;
    let hi = thresholds.iter().copied().fold(0.0, f64::max) * 2.0;
    let (a, b) = (lo.ln(), hi.ln());
    (1..=points)
        .map(|i| {
            let eta = (a + (b - a) * i as f64 / points as f64).exp();
            mse_at_eta(gains, noise, p_max, m, eta)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Coefficient of determination of a least-squares line through `(x, y)`.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

/// Relative difference used for gradient checks, with a floor that keeps
/// coordinates whose gradient is essentially zero from dominating.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Central finite difference of `f` along coordinate `i`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, w: &[f64], i: usize, step: f64) -> f64 {
    let mut plus = w.to_vec();
    let mut minus = w.to_vec();
    plus[i] += step;
    minus[i] -= step;
    (f(&plus) - f(&minus)) / (2.0 * step)
}

/// Upper 5% point of Student's t for `df` degrees of freedom (one-sided).
pub fn t_critical_95(df: usize) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("df >= 1")
        .inverse_cdf(0.95)
}

/// True when the central difference along `i` looks like it straddles a
/// kink (a ReLU unit switching inside `[w - step, w + step]`): halving the
/// step then moves the estimate far more than smooth curvature would.
pub fn straddles_kink(f: impl Fn(&[f64]) -> f64, w: &[f64], i: usize, step: f64) -> bool {
    let full = central_diff(&f, w, i, step);
    let half = central_diff(&f, w, i, step / 2.0);
    rel_err(full, half) > 1e-5
}

/// Up to `count` coordinates of `range`, in random order, skipping those
/// where the difference quotient straddles a kink. Returns the picks and
/// the number skipped.
pub fn smooth_coordinates<R: rand::Rng + ?Sized>(
    f: impl Fn(&[f64]) -> f64,
    w: &[f64],
    range: std::ops::Range<usize>,
    count: usize,
    step: f64,
    rng: &mut R,
) -> (Vec<usize>, usize) {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = range.collect();
    order.shuffle(rng);
    let mut picks = Vec::new();
    let mut skipped = 0;
    for i in order {
        if picks.len() == count {
            break;
        }
        if straddles_kink(&f, w, i, step) {
            skipped += 1;
        } else {
            picks.push(i);
        }
    }
    (picks, skipped)
}
