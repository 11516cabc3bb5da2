//! Oracle suites for the layer engine: naive-loop forward equivalence and
//! 64-bit central finite-difference gradient checks.

mod common;

use common::{distinct_tensor, max_rel_err_fd, naive_batch_stats, naive_conv1d, random_tensor};
use ecgdnn::model::{ArchitectureConfig, Model};
use ecgdnn::nn::{
    bce_with_logits, dropout_backward, dropout_train, relu, relu_backward, BatchNorm, Conv1d,
    Dense, MaxPool1d,
};
use ecgdnn::rng::Rng;
use ecgdnn::tensor::Tensor;

const H: f64 = 1e-5;

fn projection_loss(y: &Tensor<f64>, proj: &Tensor<f64>) -> f64 {
    y.data().iter().zip(proj.data()).map(|(a, b)| a * b).sum()
}

#[test]
fn conv_forward_matches_naive_loops() {
    let mut rng = Rng::new(101);
    // 2-channel, 9-sample input with a 3-tap kernel, stride 1.
    let mut conv: Conv1d<f64> = Conv1d::new(2, 3, 3, 1);
    conv.init_he(&mut rng);
    for b in conv.bias.iter_mut() {
        *b = rng.next_normal() * 0.1;
    }
    let x = random_tensor(&[2, 2, 9], 1.0, &mut rng);
    let got = conv.forward(&x).unwrap();
    let want = naive_conv1d(&x, &conv.weight, &conv.bias, 2, 3, 3, 1);
    assert_eq!(got.shape(), want.shape());
    for (a, b) in got.data().iter().zip(want.data()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn conv_forward_matches_naive_loops_stride4_k16() {
    let mut rng = Rng::new(102);
    let mut conv: Conv1d<f64> = Conv1d::new(3, 2, 16, 4);
    conv.init_he(&mut rng);
    for b in conv.bias.iter_mut() {
        *b = rng.next_normal() * 0.1;
    }
    // Length not divisible by the stride.
    let x = random_tensor(&[2, 3, 39], 1.0, &mut rng);
    let got = conv.forward(&x).unwrap();
    let want = naive_conv1d(&x, &conv.weight, &conv.bias, 3, 2, 16, 4);
    assert_eq!(got.shape(), &[2, 2, 10]);
    for (a, b) in got.data().iter().zip(want.data()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn conv_gradients_match_finite_differences() {
    let mut rng = Rng::new(103);
    let mut conv: Conv1d<f64> = Conv1d::new(1, 1, 3, 1);
    conv.init_he(&mut rng);
    let x = random_tensor(&[1, 1, 8], 1.0, &mut rng);
    let proj = random_tensor(&[1, 1, 8], 1.0, &mut rng);
    let (gx, grads) = conv.backward(&x, &proj, true).unwrap();
    let gx = gx.unwrap();

    let mut conv_mut = conv.clone();
    let x_fixed = x.clone();
    let err_w = max_rel_err_fd(&grads.weight, 50, H, &mut rng, |i, dv| {
        conv_mut.weight[i] += dv;
        let l = projection_loss(&conv_mut.forward(&x_fixed).unwrap(), &proj);
        conv_mut.weight[i] -= dv;
        l
    });
    assert!(err_w < 1e-6, "weight grad rel err {err_w}");

    let err_b = max_rel_err_fd(&grads.bias, 10, H, &mut rng, |i, dv| {
        conv_mut.bias[i] += dv;
        let l = projection_loss(&conv_mut.forward(&x_fixed).unwrap(), &proj);
        conv_mut.bias[i] -= dv;
        l
    });
    assert!(err_b < 1e-6, "bias grad rel err {err_b}");

    let mut x_mut = x.clone();
    let err_x = max_rel_err_fd(gx.data(), 50, H, &mut rng, |i, dv| {
        x_mut.data_mut()[i] += dv;
        let l = projection_loss(&conv.forward(&x_mut).unwrap(), &proj);
        x_mut.data_mut()[i] -= dv;
        l
    });
    assert!(err_x < 1e-6, "input grad rel err {err_x}");
}

#[test]
fn conv_stride4_input_gradient_matches_finite_differences() {
    let mut rng = Rng::new(104);
    let mut conv: Conv1d<f64> = Conv1d::new(2, 2, 16, 4);
    conv.init_he(&mut rng);
    let x = random_tensor(&[1, 2, 21], 1.0, &mut rng);
    let proj = random_tensor(&[1, 2, 6], 1.0, &mut rng);
    let (gx, grads) = conv.backward(&x, &proj, true).unwrap();
    let gx = gx.unwrap();

    let mut x_mut = x.clone();
    let err_x = max_rel_err_fd(gx.data(), 60, H, &mut rng, |i, dv| {
        x_mut.data_mut()[i] += dv;
        let l = projection_loss(&conv.forward(&x_mut).unwrap(), &proj);
        x_mut.data_mut()[i] -= dv;
        l
    });
    assert!(err_x < 1e-6, "stride-4 input grad rel err {err_x}");

    let mut conv_mut = conv.clone();
    let err_w = max_rel_err_fd(&grads.weight, 60, H, &mut rng, |i, dv| {
        conv_mut.weight[i] += dv;
        let l = projection_loss(&conv_mut.forward(&x).unwrap(), &proj);
        conv_mut.weight[i] -= dv;
        l
    });
    assert!(err_w < 1e-6, "stride-4 weight grad rel err {err_w}");
}

#[test]
fn batchnorm_forward_matches_naive_two_pass() {
    let mut rng = Rng::new(105);
    let mut bn: BatchNorm<f64> = BatchNorm::new(3);
    bn.gamma = vec![1.3, 0.7, 2.0];
    bn.beta = vec![0.1, -0.5, 0.25];
    let x = random_tensor(&[4, 3, 17], 2.0, &mut rng);
    let (y, _) = bn.forward_train(&x, false).unwrap();
    let stats = naive_batch_stats(&x);
    for (ci, &(mean, var)) in stats.iter().enumerate() {
        let inv = 1.0 / (var + bn.epsilon).sqrt();
        for ni in 0..4 {
            for t in 0..17 {
                let idx = (ni * 3 + ci) * 17 + t;
                let want = (x.data()[idx] - mean) * inv * bn.gamma[ci] + bn.beta[ci];
                assert!((y.data()[idx] - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn batchnorm_gradients_match_finite_differences() {
    let mut rng = Rng::new(106);
    let mut bn: BatchNorm<f64> = BatchNorm::new(2);
    bn.gamma = vec![1.2, 0.8];
    bn.beta = vec![0.3, -0.2];
    let x = random_tensor(&[3, 2, 11], 1.5, &mut rng);
    let proj = random_tensor(&[3, 2, 11], 1.0, &mut rng);
    let (_, cache) = bn.forward_train(&x, false).unwrap();
    let (gx, grads) = bn.backward(&x, &cache, &proj).unwrap();

    let mut x_mut = x.clone();
    let mut bn_probe = bn.clone();
    let err_x = max_rel_err_fd(gx.data(), 80, H, &mut rng, |i, dv| {
        x_mut.data_mut()[i] += dv;
        let (y, _) = bn_probe.forward_train(&x_mut, false).unwrap();
        x_mut.data_mut()[i] -= dv;
        projection_loss(&y, &proj)
    });
    assert!(err_x < 1e-6, "bn input grad rel err {err_x}");

    let err_gamma = max_rel_err_fd(&grads.gamma, 4, H, &mut rng, |i, dv| {
        bn_probe.gamma[i] += dv;
        let (y, _) = bn_probe.forward_train(&x, false).unwrap();
        bn_probe.gamma[i] -= dv;
        projection_loss(&y, &proj)
    });
    assert!(err_gamma < 1e-6, "gamma grad rel err {err_gamma}");

    let err_beta = max_rel_err_fd(&grads.beta, 4, H, &mut rng, |i, dv| {
        bn_probe.beta[i] += dv;
        let (y, _) = bn_probe.forward_train(&x, false).unwrap();
        bn_probe.beta[i] -= dv;
        projection_loss(&y, &proj)
    });
    assert!(err_beta < 1e-6, "beta grad rel err {err_beta}");
}

#[test]
fn relu_gradient_matches_finite_differences_away_from_kink() {
    let mut rng = Rng::new(107);
    // Keep inputs away from 0 so the central difference never crosses it.
    let data: Vec<f64> = (0..40)
        .map(|_| {
            let v = rng.next_normal();
            if v.abs() < 0.05 {
                0.5
            } else {
                v
            }
        })
        .collect();
    let x = Tensor::from_vec(&[40], data);
    let proj = random_tensor(&[40], 1.0, &mut rng);
    let grad = relu_backward(&x, &proj);

    let mut x_mut = x.clone();
    let err = max_rel_err_fd(grad.data(), 60, H, &mut rng, |i, dv| {
        x_mut.data_mut()[i] += dv;
        let l = projection_loss(&relu(&x_mut), &proj);
        x_mut.data_mut()[i] -= dv;
        l
    });
    assert!(err < 1e-8, "relu grad rel err {err}");
}

#[test]
fn maxpool_forward_matches_naive_and_backward_matches_fd() {
    let mut rng = Rng::new(108);
    let pool = MaxPool1d::new(4, 4);
    let x = distinct_tensor(&[2, 2, 19], &mut rng);
    let (y, cache) = pool.forward(&x).unwrap();
    let want = naive_maxpool_check(&x);
    for (a, b) in y.data().iter().zip(want.data()) {
        assert!((a - b).abs() < 1e-12);
    }

    let proj = random_tensor(y.shape(), 1.0, &mut rng);
    let gx = pool.backward(&proj, &cache).unwrap();
    let mut x_mut = x.clone();
    let err = max_rel_err_fd(gx.data(), 60, H, &mut rng, |i, dv| {
        x_mut.data_mut()[i] += dv;
        let (y2, _) = pool.forward(&x_mut).unwrap();
        x_mut.data_mut()[i] -= dv;
        projection_loss(&y2, &proj)
    });
    assert!(err < 1e-8, "maxpool grad rel err {err}");
}

fn naive_maxpool_check(x: &Tensor<f64>) -> Tensor<f64> {
    common::naive_maxpool(x, 4, 4)
}

#[test]
fn dense_gradients_match_finite_differences() {
    let mut rng = Rng::new(109);
    let mut dense: Dense<f64> = Dense::new(7, 4);
    dense.init_he(&mut rng);
    let x = random_tensor(&[3, 7], 1.0, &mut rng);
    let proj = random_tensor(&[3, 4], 1.0, &mut rng);
    let (gx, grads) = dense.backward(&x, &proj).unwrap();

    let mut d_mut = dense.clone();
    let err_w = max_rel_err_fd(&grads.weight, 60, H, &mut rng, |i, dv| {
        d_mut.weight[i] += dv;
        let l = projection_loss(&d_mut.forward(&x).unwrap(), &proj);
        d_mut.weight[i] -= dv;
        l
    });
    assert!(err_w < 1e-6, "dense weight grad rel err {err_w}");

    let err_b = max_rel_err_fd(&grads.bias, 8, H, &mut rng, |i, dv| {
        d_mut.bias[i] += dv;
        let l = projection_loss(&d_mut.forward(&x).unwrap(), &proj);
        d_mut.bias[i] -= dv;
        l
    });
    assert!(err_b < 1e-6, "dense bias grad rel err {err_b}");

    let mut x_mut = x.clone();
    let err_x = max_rel_err_fd(gx.data(), 40, H, &mut rng, |i, dv| {
        x_mut.data_mut()[i] += dv;
        let l = projection_loss(&dense.forward(&x_mut).unwrap(), &proj);
        x_mut.data_mut()[i] -= dv;
        l
    });
    assert!(err_x < 1e-6, "dense input grad rel err {err_x}");
}

#[test]
fn dropout_gradient_matches_finite_differences_through_fixed_mask() {
    let mut rng = Rng::new(110);
    let x = random_tensor(&[4, 25], 1.0, &mut rng);
    let proj = random_tensor(&[4, 25], 1.0, &mut rng);
    let seed = 42;
    let (_, mask) = dropout_train(&x, 0.8, seed);
    let grad = dropout_backward(&proj, &mask);

    let mut x_mut = x.clone();
    let err = max_rel_err_fd(grad.data(), 60, H, &mut rng, |i, dv| {
        x_mut.data_mut()[i] += dv;
        let (y, _) = dropout_train(&x_mut, 0.8, seed);
        x_mut.data_mut()[i] -= dv;
        projection_loss(&y, &proj)
    });
    assert!(err < 1e-8, "dropout grad rel err {err}");
}

#[test]
fn bce_gradient_matches_finite_differences() {
    let mut rng = Rng::new(111);
    let logits = random_tensor(&[4, 6], 2.0, &mut rng);
    let targets = Tensor::from_vec(
        &[4, 6],
        (0..24)
            .map(|_| if rng.next_bool(0.5) { 1.0 } else { 0.0 })
            .collect(),
    );
    let (_, grad) = bce_with_logits(&logits, &targets).unwrap();
    let mut z_mut = logits.clone();
    let err = max_rel_err_fd(grad.data(), 48, H, &mut rng, |i, dv| {
        z_mut.data_mut()[i] += dv;
        let (l, _) = bce_with_logits(&z_mut, &targets).unwrap();
        z_mut.data_mut()[i] -= dv;
        l
    });
    assert!(err < 1e-6, "bce grad rel err {err}");
}

/// Apply a delta to the flattened parameter coordinate across all arrays.
fn add_to_coordinate(model: &mut Model<f64>, coord: usize, dv: f64) {
    let mut remaining = coord;
    let mut done = false;
    model.visit_params_mut(&mut |_, arr| {
        if done {
            return;
        }
        if remaining < arr.len() {
            arr[remaining] += dv;
            done = true;
        } else {
            remaining -= arr.len();
        }
    });
    assert!(done, "coordinate out of range");
}

#[test]
fn tiny_end_to_end_model_gradient_spot_checks() {
    let cfg = ArchitectureConfig {
        n_residual_blocks: 2,
        kernel_length: 16,
        initial_filters: 4,
        filter_growth: 4,
        subsample_factor: 4,
        dropout_rate: 0.5,
        n_classes: 3,
        input_leads: 2,
        input_window: 64,
    };
    let mut model: Model<f64> = Model::build(&cfg, 21);
    let mut rng = Rng::new(112);
    let x = random_tensor(&[2, 2, 64], 1.0, &mut rng);
    let targets = Tensor::from_vec(&[2, 3], vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    let dropout_seed = 7;
    let (_, grads) = model
        .loss_and_grads(&x, &targets, dropout_seed, false)
        .unwrap();
    let mut flat_grads: Vec<f64> = Vec::new();
    grads.visit(&mut |_, g| flat_grads.extend_from_slice(g));

    let err = max_rel_err_fd(&flat_grads, 60, H, &mut rng, |i, dv| {
        add_to_coordinate(&mut model, i, dv);
        let trace = model.forward_train(&x, dropout_seed, false).unwrap();
        let (loss, _) = bce_with_logits(&trace.logits, &targets).unwrap();
        add_to_coordinate(&mut model, i, -dv);
        loss
    });
    assert!(err < 1e-4, "tiny end-to-end rel err {err}");
}
