use super::*;
use rand::Rng;

fn cfg(sizes: &[usize], mode: FinalLayerMode, loss: LossKind, gain: f64) -> NetworkConfig {
    NetworkConfig {
        layer_sizes: sizes.to_vec(),
        activation_gain: gain,
        final_layer_mode: mode,
        loss,
    }
}

/// Central finite differences on the full loss, the independent oracle for
/// `Network::backward`.
pub(crate) fn fd_gradients(net: &Network, input: &[f64], target: &Target, h: f64) -> Vec<Matrix> {
    let mut net = net.clone();
    let mut grads = Vec::new();
    for k in 0..net.weights.len() {
        let mut g = Matrix::zeros(net.weights[k].rows, net.weights[k].cols);
        for i in 0..g.data.len() {
            let orig = net.weights[k].data[i];
            net.weights[k].data[i] = orig + h;
            let lp = net.loss(&net.forward(input).unwrap(), target).unwrap();
            net.weights[k].data[i] = orig - h;
            let lm = net.loss(&net.forward(input).unwrap(), target).unwrap();
            net.weights[k].data[i] = orig;
            g.data[i] = (lp - lm) / (2.0 * h);
        }
        grads.push(g);
    }
    grads
}

/// Relative error with a floor so that near-zero gradients compare at the
/// finite-difference noise scale rather than blowing up the ratio.
pub(crate) fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-2)
}

pub(crate) fn max_grad_rel_err(net: &Network, input: &[f64], target: &Target) -> f64 {
    let trace = net.forward(input).unwrap();
    let analytic = net.backward(&trace, target).unwrap();
    let numeric = fd_gradients(net, input, target, 1e-5);
    let mut worst = 0.0f64;
    for (ga, gn) in analytic.iter().zip(&numeric) {
        for (&a, &n) in ga.data.iter().zip(&gn.data) {
            worst = worst.max(rel_err(a, n));
        }
    }
    worst
}

#[test]
fn zero_weights_give_zero_hidden_activations() {
    let c = cfg(&[3, 4, 2], FinalLayerMode::TanhAsHidden, LossKind::Mse, 4.0);
    let net = Network::from_weights(
        c,
        vec![Matrix::zeros(4, 3), Matrix::zeros(2, 4)],
    )
    .unwrap();
    let trace = net.forward(&[0.3, -1.0, 2.0]).unwrap();
    assert!(trace.activations[1].iter().all(|&a| a == 0.0));
    assert!(trace.activations[2].iter().all(|&a| a == 0.0));
}

#[test]
fn one_by_one_net_is_tanh_of_gain_weight_input() {
    let (w, a, x) = (0.7, 2.5, -0.3);
    let c = cfg(&[1, 1], FinalLayerMode::TanhAsHidden, LossKind::Mse, a);
    let net = Network::from_weights(c, vec![Matrix::from_rows(vec![vec![w]])]).unwrap();
    let trace = net.forward(&[x]).unwrap();
    assert_eq!(trace.output()[0], (a * w * x).tanh());
}

#[test]
fn forward_is_bitwise_deterministic() {
    let c = cfg(&[5, 7, 3], FinalLayerMode::LinearSoftmax, LossKind::CrossEntropy, 2.0);
    let net = Network::random(c, 42).unwrap();
    let input: Vec<f64> = (0..5).map(|i| (i as f64).sin()).collect();
    let a = net.forward(&input).unwrap();
    let b = net.forward(&input).unwrap();
    assert_eq!(a.activations, b.activations);
    assert_eq!(a.logits, b.logits);
}

#[test]
fn forward_rejects_wrong_input_length() {
    let c = cfg(&[3, 2], FinalLayerMode::TanhAsHidden, LossKind::Mse, 1.0);
    let net = Network::random(c, 0).unwrap();
    assert!(net.forward(&[1.0, 2.0]).is_err());
}

#[test]
fn mse_examples() {
    assert_eq!(mse(&[0.5, -0.5], &[0.5, -0.5]).unwrap(), 0.0);
    assert_eq!(mse(&[1.0, 0.0, 1.0, 0.0], &[0.0; 4]).unwrap(), 2.0);
    // Exact hit on the H vertex leaves only the angle terms, also exact.
    let (c, s) = (0.25f64.cos(), 0.25f64.sin());
    let out = [-0.5, 3.0f64.sqrt() / 2.0, c, s];
    let target = [-0.5, 3.0f64.sqrt() / 2.0, c, s];
    assert_eq!(mse(&out, &target).unwrap(), 0.0);
    assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn cross_entropy_examples() {
    assert_eq!(cross_entropy(&[1.0, 0.0, 0.0], 0).unwrap().0, 0.0);
    let third = 1.0 / 3.0;
    let (l, clamped) = cross_entropy(&[third, third, third], 2).unwrap();
    assert!((l - 3.0f64.ln()).abs() < 1e-12);
    assert!(!clamped);
    let (l, _) = cross_entropy(&[0.5, 0.25, 0.25], 1).unwrap();
    assert!((l - 4.0f64.ln()).abs() < 1e-12);
    // Zero probability clamps at the floor and flags it.
    let (l, clamped) = cross_entropy(&[1.0, 0.0], 1).unwrap();
    assert!(clamped);
    assert!((l - (-CE_PROB_FLOOR.ln())).abs() < 1e-9);
    assert!(cross_entropy(&[0.7, 0.7], 0).is_err());
}

#[test]
fn gradients_vanish_at_exact_mse_fit() {
    let c = cfg(&[2, 3, 2], FinalLayerMode::TanhAsHidden, LossKind::Mse, 1.5);
    let net = Network::random(c, 7).unwrap();
    let input = [0.2, -0.4];
    let trace = net.forward(&input).unwrap();
    let target = Target::Vector(trace.output().to_vec());
    let grads = net.backward(&trace, &target).unwrap();
    for g in grads {
        assert!(g.data.iter().all(|&x| x == 0.0));
    }
}

#[test]
fn backward_matches_finite_differences_mse() {
    let mut rng = seeded_rng(11);
    for _ in 0..5 {
        let c = cfg(&[4, 6, 3], FinalLayerMode::TanhAsHidden, LossKind::Mse, 2.0);
        let net = Network::random(c, rng.gen()).unwrap();
        let input: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target = Target::Vector((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect());
        assert!(max_grad_rel_err(&net, &input, &target) < 1e-5);
    }
}

#[test]
fn backward_matches_finite_differences_cross_entropy() {
    let mut rng = seeded_rng(13);
    for _ in 0..5 {
        let c = cfg(&[5, 4, 3], FinalLayerMode::LinearSoftmax, LossKind::CrossEntropy, 2.0);
        let net = Network::random(c, rng.gen()).unwrap();
        let input: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target = Target::Class(rng.gen_range(0..3));
        assert!(max_grad_rel_err(&net, &input, &target) < 1e-5);
    }
}

#[test]
fn single_class_softmax_has_zero_gradient() {
    let c = cfg(&[1, 1], FinalLayerMode::LinearSoftmax, LossKind::CrossEntropy, 1.0);
    let net = Network::from_weights(c, vec![Matrix::from_rows(vec![vec![0.9]])]).unwrap();
    let trace = net.forward(&[1.3]).unwrap();
    assert_eq!(trace.output(), &[1.0]);
    let grads = net.backward(&trace, &Target::Class(0)).unwrap();
    assert!(grads[0].data.iter().all(|&g| g == 0.0));
}

#[test]
fn softmax_is_normalized_and_strictly_positive() {
    let mut rng = seeded_rng(5);
    for _ in 0..50 {
        let logits: Vec<f64> = (0..6).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let p = softmax(&logits);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x > 0.0));
    }
}

#[test]
fn hidden_activations_stay_inside_open_unit_interval() {
    let c = cfg(&[6, 8, 5, 3], FinalLayerMode::LinearSoftmax, LossKind::CrossEntropy, 4.0);
    let net = Network::random(c, 3).unwrap();
    let mut rng = seeded_rng(4);
    for _ in 0..50 {
        let input: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let trace = net.forward(&input).unwrap();
        for layer in &trace.activations[1..trace.activations.len() - 1] {
            assert!(layer.iter().all(|&a| a > -1.0 && a < 1.0));
        }
    }
}

#[test]
fn adam_zero_gradient_is_a_fixed_point_for_weights() {
    let c = cfg(&[2, 2], FinalLayerMode::TanhAsHidden, LossKind::Mse, 1.0);
    let mut net = Network::random(c, 1).unwrap();
    let before = net.weights.clone();
    let mut state = TrainState::new(&net);
    let zero = vec![Matrix::zeros(2, 2)];
    let tc = TrainConfig::default();
    for _ in 0..10 {
        adam_step(&mut net, &mut state, &zero, &tc).unwrap();
    }
    assert_eq!(net.weights, before);
    assert_eq!(state.step, 10);
}

#[test]
fn adam_constant_gradient_update_approaches_learning_rate() {
    // With a constant gradient, bias-corrected Adam steps converge to
    // lr * g / (|g| + eps) in magnitude.
    let c = cfg(&[1, 1], FinalLayerMode::TanhAsHidden, LossKind::Mse, 1.0);
    let mut net = Network::from_weights(c, vec![Matrix::from_rows(vec![vec![0.0]])]).unwrap();
    let mut state = TrainState::new(&net);
    let tc = TrainConfig {
        learning_rate: 1e-3,
        ..TrainConfig::default()
    };
    let g = 0.37;
    let grad = vec![Matrix::from_rows(vec![vec![g]])];
    let mut prev = net.weights[0].data[0];
    let mut last_step = 0.0;
    for _ in 0..10_000 {
        adam_step(&mut net, &mut state, &grad, &tc).unwrap();
        last_step = prev - net.weights[0].data[0];
        prev = net.weights[0].data[0];
    }
    assert!((last_step - tc.learning_rate).abs() < 1e-9);
}

#[test]
fn adam_first_step_is_signed_learning_rate() {
    let c = cfg(&[1, 1], FinalLayerMode::TanhAsHidden, LossKind::Mse, 1.0);
    let mut net = Network::from_weights(c, vec![Matrix::from_rows(vec![vec![0.5]])]).unwrap();
    let mut state = TrainState::new(&net);
    let tc = TrainConfig::default();
    let g = -2.0;
    let grad = vec![Matrix::from_rows(vec![vec![g]])];
    adam_step(&mut net, &mut state, &grad, &tc).unwrap();
    // At t=1 from zero moments: step = -lr * g / (|g| + eps) = +lr (almost).
    let step = net.weights[0].data[0] - 0.5;
    let expect = -tc.learning_rate * g / (g.abs() + tc.epsilon);
    assert!((step - expect).abs() < 1e-15);
}

#[test]
fn train_zero_epochs_returns_initialization() {
    let c = cfg(&[2, 3, 1], FinalLayerMode::TanhAsHidden, LossKind::Mse, 2.0);
    let net = Network::random(c, 21).unwrap();
    let init = net.clone();
    let mut data = Dataset::default();
    data.push(vec![0.1, 0.2], Target::Vector(vec![0.3]));
    let tc = TrainConfig {
        epochs: 0,
        ..TrainConfig::default()
    };
    let report = train(net, &data, &tc).unwrap();
    assert_eq!(report.network, init);
    assert!(report.loss_curve.is_empty());
}

#[test]
fn train_overfits_duplicated_sample() {
    let c = cfg(&[2, 8, 2], FinalLayerMode::TanhAsHidden, LossKind::Mse, 2.0);
    let net = Network::random(c, 3).unwrap();
    let mut data = Dataset::default();
    for _ in 0..16 {
        data.push(vec![0.4, -0.2], Target::Vector(vec![0.7, -0.5]));
    }
    let tc = TrainConfig {
        epochs: 300,
        batch_size: 8,
        seed: 9,
        ..TrainConfig::default()
    };
    let report = train(net, &data, &tc).unwrap();
    assert!(
        *report.loss_curve.last().unwrap() < 1e-3,
        "final loss {}",
        report.loss_curve.last().unwrap()
    );
}

#[test]
fn train_is_deterministic_given_seed() {
    let c = cfg(&[3, 5, 2], FinalLayerMode::TanhAsHidden, LossKind::Mse, 2.0);
    let mut data = Dataset::default();
    let mut rng = seeded_rng(8);
    for _ in 0..20 {
        data.push(
            (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            Target::Vector((0..2).map(|_| rng.gen_range(-0.9..0.9)).collect()),
        );
    }
    let tc = TrainConfig {
        epochs: 5,
        batch_size: 4,
        seed: 77,
        ..TrainConfig::default()
    };
    let a = train(Network::random(cfg(&[3, 5, 2], FinalLayerMode::TanhAsHidden, LossKind::Mse, 2.0), 1).unwrap(), &data, &tc).unwrap();
    let b = train(Network::random(c, 1).unwrap(), &data, &tc).unwrap();
    assert_eq!(a.network, b.network);
    assert_eq!(a.loss_curve, b.loss_curve);
}

#[test]
fn frozen_batch_loss_is_non_increasing_at_small_learning_rate() {
    let c = cfg(&[4, 6, 3], FinalLayerMode::TanhAsHidden, LossKind::Mse, 2.0);
    let mut net = Network::random(c, 15).unwrap();
    let mut rng = seeded_rng(16);
    let inputs: Vec<Vec<f64>> = (0..8)
        .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let targets: Vec<Vec<f64>> = (0..8)
        .map(|_| (0..3).map(|_| rng.gen_range(-0.8..0.8)).collect())
        .collect();
    let tc = TrainConfig {
        learning_rate: 1e-4,
        ..TrainConfig::default()
    };
    let batch_loss = |net: &Network| -> f64 {
        inputs
            .iter()
            .zip(&targets)
            .map(|(x, t)| mse(net.forward(x).unwrap().output(), t).unwrap())
            .sum()
    };
    let mut state = TrainState::new(&net);
    let mut prev = batch_loss(&net);
    for _ in 0..100 {
        let mut grads: Vec<Matrix> = net
            .weights
            .iter()
            .map(|w| Matrix::zeros(w.rows, w.cols))
            .collect();
        for (x, t) in inputs.iter().zip(&targets) {
            let trace = net.forward(x).unwrap();
            let g = net.backward(&trace, &Target::Vector(t.clone())).unwrap();
            for (acc, gk) in grads.iter_mut().zip(&g) {
                for (a, b) in acc.data.iter_mut().zip(&gk.data) {
                    *a += b;
                }
            }
        }
        adam_step(&mut net, &mut state, &grads, &tc).unwrap();
        let cur = batch_loss(&net);
        assert!(cur <= prev + 1e-12, "loss increased: {prev} -> {cur}");
        prev = cur;
    }
}

#[test]
fn train_aborts_on_nan() {
    let c = cfg(&[1, 1], FinalLayerMode::TanhAsHidden, LossKind::Mse, 1.0);
    let net = Network::from_weights(c, vec![Matrix::from_rows(vec![vec![1.0]])]).unwrap();
    let mut data = Dataset::default();
    data.push(vec![f64::NAN], Target::Vector(vec![0.0]));
    let tc = TrainConfig::default();
    match train(net, &data, &tc) {
        Err(crate::Error::Numerical(_)) => {}
        other => panic!("expected numerical abort, got {other:?}"),
    }
}

#[test]
fn weight_dump_round_trips() {
    let c = cfg(&[3, 4, 2], FinalLayerMode::LinearSoftmax, LossKind::CrossEntropy, 2.0);
    let net = Network::random(c, 99).unwrap();
    let dump = WeightDump::new(&net, 99, vec![0.5, 0.25]);
    let json = dump.to_json();
    let back = WeightDump::from_json(&json).unwrap();
    let net2 = back.to_network().unwrap();
    assert_eq!(net, net2);
    assert_eq!(back.loss_curve, vec![0.5, 0.25]);
    // Stable key order: a re-serialization is byte-identical.
    assert_eq!(json, back.to_json());
}

#[test]
fn config_validation_rejects_bad_combinations() {
    let bad = cfg(&[3], FinalLayerMode::TanhAsHidden, LossKind::Mse, 1.0);
    assert!(bad.validate().is_err());
    let bad = cfg(&[3, 0, 2], FinalLayerMode::TanhAsHidden, LossKind::Mse, 1.0);
    assert!(bad.validate().is_err());
    let bad = cfg(&[3, 2], FinalLayerMode::TanhAsHidden, LossKind::CrossEntropy, 1.0);
    assert!(bad.validate().is_err());
    let bad = cfg(&[3, 2], FinalLayerMode::TanhAsHidden, LossKind::Mse, 0.0);
    assert!(bad.validate().is_err());
}
