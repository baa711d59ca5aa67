use airrecomp::aircomp::Normalization;
use airrecomp::bounds::{check_step_size, BoundParams, Convexity};
use airrecomp::channel::{ChannelRealization, FadingMode};
use airrecomp::learner::{
    run_airrecomp, ChannelSource, FlConfig, GlobalModel, PowerScheme, QuadraticProblem,
};
use airrecomp::mselect::CostModel;
use airrecomp::powerctl::solve_power_control;

/// Devices whose centres differ by a constant shift, so every one-epoch
/// update has the same spread.
fn shifted_problem() -> QuadraticProblem {
    let base = [0.3, -1.2, 2.0, 0.0, 0.7, -0.4, 1.5, -2.2];
    let centers = [0.0, 1.5, -0.8, 3.1]
        .iter()
        .map(|s| base.iter().map(|b| b + s).collect())
        .collect();
    QuadraticProblem::from_centers(centers).unwrap()
}

fn config(rounds: usize, beta: f64, normalization: Normalization, power: PowerScheme) -> FlConfig {
    FlConfig {
        num_retx: 2,
        noise_variance: 0.0,
        p_max: 1.0,
        epochs: 1,
        step_size: beta,
        cost: CostModel::new(0.0, 1.0, 1e6).unwrap(),
        channel: ChannelSource::Fixed(vec![0.5, 0.9, 1.3, 2.0]),
        power,
        normalization,
        max_rounds: Some(rounds),
        seed: 17,
    }
}

#[test]
fn noiseless_inversion_is_centralised_gradient_descent() {
    let problem = shifted_problem();
    let w0 = vec![1.0, 0.0, -1.0, 2.0, 0.5, 0.5, -0.5, 3.0];
    let beta = 0.1;
    let cfg = config(10, beta, Normalization::PerDevice, PowerScheme::Inversion);
    let trace = run_airrecomp(
        problem.devices(),
        GlobalModel::new(w0.clone()).unwrap(),
        &cfg,
        |_| Ok(0.0),
    )
    .unwrap();

    let mut w = w0;
    assert_eq!(trace.trajectory.len(), 11);
    for step in &trace.trajectory[1..] {
        let g = problem.global_gradient(&w);
        w.iter_mut().zip(g).for_each(|(wi, gi)| *wi -= beta * gi);
        for (a, b) in step.iter().zip(&w) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn noiseless_loss_never_increases() {
    let problem = shifted_problem();
    let chan = ChannelRealization::new(vec![0.5, 0.9, 1.3, 2.0], 0.0).unwrap();
    let policy = solve_power_control(&chan, 1.0, 2).unwrap();
    let params = BoundParams {
        mu: 0.0,
        lipschitz: 1.0,
        beta: 1.0,
        sigma_sq: 0.0,
        dim: 8,
        r0_sq: 0.0,
        policy,
        chan,
    };
    let beta = 0.9 * check_step_size(&params, Convexity::Convex).supremum;
    let cfg = config(30, beta, Normalization::Identity, PowerScheme::Optimal);
    let w0 = vec![4.0; 8];
    let trace = run_airrecomp(
        problem.devices(),
        GlobalModel::new(w0).unwrap(),
        &cfg,
        |_| Ok(0.0),
    )
    .unwrap();
    for pair in trace.rows.windows(2) {
        assert!(
            pair[1].loss <= pair[0].loss + 1e-12,
            "{} -> {}",
            pair[0].loss,
            pair[1].loss
        );
    }
}

#[test]
fn frozen_fading_reuses_one_channel() {
    let problem = shifted_problem();
    let mut cfg = config(5, 0.1, Normalization::PerDevice, PowerScheme::Optimal);
    cfg.noise_variance = 1.0;
    cfg.channel = ChannelSource::Draw(FadingMode::Frozen);
    let trace = run_airrecomp(
        problem.devices(),
        GlobalModel::new(vec![0.0; 8]).unwrap(),
        &cfg,
        |_| Ok(0.0),
    )
    .unwrap();
    assert!(trace.policies.windows(2).all(|p| p[0] == p[1]));
    cfg.channel = ChannelSource::Draw(FadingMode::PerRound);
    let trace = run_airrecomp(
        problem.devices(),
        GlobalModel::new(vec![0.0; 8]).unwrap(),
        &cfg,
        |_| Ok(0.0),
    )
    .unwrap();
    assert!(trace.policies.windows(2).any(|p| p[0] != p[1]));
}
