mod common;

use airrecomp::data::{Dataset, Targets};
use airrecomp::learner::{MlpObjective, MlpSpec, Objective};
use airrecomp::rng::seeded;
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

/// Max relative error between backprop and central differences over
/// `per_layer` random coordinates of every layer.
fn worst_layer_error(spec: MlpSpec, data: &Dataset, seed: u64, per_layer: usize) -> f64 {
    let mut rng = seeded(seed);
    let obj = MlpObjective::new(spec, data).unwrap();
    let mut w = spec.init(&mut rng).weights;
    // nonzero biases so their gradients are exercised too
    w.iter_mut()
        .for_each(|v| *v += 0.05 * rng.sample::<f64, _>(StandardNormal));
    let grad = obj.gradient(&w);
    let mut worst: f64 = 0.0;
    for range in spec.layer_ranges() {
        let (picks, _) =
            common::smooth_coordinates(|v| obj.loss(v), &w, range, per_layer, 1e-5, &mut rng);
        for i in picks {
            let fd = common::central_diff(|v| obj.loss(v), &w, i, 1e-5);
            worst = worst.max(common::rel_err(grad[i], fd));
        }
    }
    worst
}

#[test]
fn classifier_backprop_matches_finite_differences() {
    let mut rng = seeded(1);
    let n = 40;
    let x = Array2::from_shape_simple_fn((n, 784), || rng.random::<f64>());
    let labels = (0..n).map(|i| i % 10).collect();
    let data = Dataset::new(x, Targets::Labels(labels)).unwrap();
    let err = worst_layer_error(MlpSpec::classifier(784, 100, 10), &data, 2, 20);
    assert!(err <= 1e-4, "max relative error {err}");
}

#[test]
fn regressor_backprop_matches_finite_differences() {
    let mut rng = seeded(3);
    let n = 64;
    let x = Array2::from_shape_simple_fn((n, 4), || rng.sample(StandardNormal));
    let y = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let data = Dataset::new(x, Targets::Values(y)).unwrap();
    let err = worst_layer_error(MlpSpec::regressor(4, 100), &data, 4, 20);
    assert!(err <= 1e-4, "max relative error {err}");
}

#[test]
fn tanh_backprop_matches_finite_differences() {
    let mut rng = seeded(5);
    let x = Array2::from_shape_simple_fn((30, 6), || rng.sample(StandardNormal));
    let data = Dataset::new(x, Targets::Labels((0..30).map(|i| i % 3).collect())).unwrap();
    let mut spec = MlpSpec::classifier(6, 16, 3);
    spec.activation = airrecomp::learner::Activation::Tanh;
    let err = worst_layer_error(spec, &data, 6, 20);
    assert!(err <= 1e-4, "max relative error {err}");
}

#[test]
fn kink_screen_flags_a_relu_corner() {
    let relu = |v: &[f64]| v[0].max(0.0);
    assert!(common::straddles_kink(relu, &[2e-6], 0, 1e-5));
    assert!(!common::straddles_kink(relu, &[0.5], 0, 1e-5));
}
