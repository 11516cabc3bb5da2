//! Shared oracles for the integration suites: finite differences and naive
//! reference implementations kept independent of the production kernels.

#![allow(dead_code)]

use ecgdnn::rng::Rng;
use ecgdnn::tensor::Tensor;

pub fn rel_err(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(1e-8);
    (a - b).abs() / denom
}

/// Max relative error between analytic gradients and central differences over
/// `n_coords` sampled coordinates. `probe(i, dv)` must evaluate the loss with
/// coordinate `i` offset by `dv` and restore the original value afterwards.
pub fn max_rel_err_fd(
    analytic: &[f64],
    n_coords: usize,
    h: f64,
    rng: &mut Rng,
    mut probe: impl FnMut(usize, f64) -> f64,
) -> f64 {
    assert!(!analytic.is_empty());
    let mut worst = 0.0f64;
    for _ in 0..n_coords {
        let i = rng.next_below(analytic.len() as u64) as usize;
        let fd = (probe(i, h) - probe(i, -h)) / (2.0 * h);
        worst = worst.max(rel_err(analytic[i], fd));
    }
    worst
}

/// Direct O(N * C_out * C_in * L_out * K) cross-correlation with 'same' zero
/// padding, written with plain nested loops.
pub fn naive_conv1d(
    x: &Tensor<f64>,
    weight: &[f64],
    bias: &[f64],
    c_in: usize,
    c_out: usize,
    kernel: usize,
    stride: usize,
) -> Tensor<f64> {
    let [n, cx, l] = *x.shape() else {
        panic!("bad shape")
    };
    assert_eq!(cx, c_in);
    let l_out = l.div_ceil(stride);
    let pad_total = ((l_out - 1) * stride + kernel).saturating_sub(l);
    let pad_left = (pad_total / 2) as isize;
    let mut out = Tensor::zeros(&[n, c_out, l_out]);
    for ni in 0..n {
        for co in 0..c_out {
            for t in 0..l_out {
                let mut acc = bias[co];
                for ci in 0..c_in {
                    for k in 0..kernel {
                        let xi = (t * stride) as isize + k as isize - pad_left;
                        if xi >= 0 && (xi as usize) < l {
                            acc += x.data()[(ni * c_in + ci) * l + xi as usize]
                                * weight[(co * c_in + ci) * kernel + k];
                        }
                    }
                }
                out.data_mut()[(ni * c_out + co) * l_out + t] = acc;
            }
        }
    }
    out
}

/// Two-pass per-channel batch statistics over (N, L).
pub fn naive_batch_stats(x: &Tensor<f64>) -> Vec<(f64, f64)> {
    let [n, c, l] = *x.shape() else {
        panic!("bad shape")
    };
    let m = (n * l) as f64;
    (0..c)
        .map(|ci| {
            let mut sum = 0.0;
            for ni in 0..n {
                for t in 0..l {
                    sum += x.data()[(ni * c + ci) * l + t];
                }
            }
            let mean = sum / m;
            let mut ss = 0.0;
            for ni in 0..n {
                for t in 0..l {
                    let d = x.data()[(ni * c + ci) * l + t] - mean;
                    ss += d * d;
                }
            }
            (mean, ss / m)
        })
        .collect()
}

/// Plain-loop max pooling with end-clipped windows and first-max ties.
pub fn naive_maxpool(x: &Tensor<f64>, window: usize, stride: usize) -> Tensor<f64> {
    let [n, c, l] = *x.shape() else {
        panic!("bad shape")
    };
    let l_out = l.div_ceil(stride);
    let mut out = Tensor::zeros(&[n, c, l_out]);
    for row in 0..n * c {
        for t in 0..l_out {
            let start = t * stride;
            let end = (start + window).min(l);
            let mut best = f64::NEG_INFINITY;
            for i in start..end {
                let v = x.data()[row * l + i];
                if v > best {
                    best = v;
                }
            }
            out.data_mut()[row * l_out + t] = best;
        }
    }
    out
}

/// Naive O(n^2) threshold sweep for precision-recall points and average
/// precision: recompute the confusion from scratch at every distinct score.
pub fn naive_pr_sweep(scores: &[f64], truth: &[bool]) -> (Vec<(f64, f64, f64)>, f64) {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let total_pos = truth.iter().filter(|&&t| t).count() as f64;
    let mut points = Vec::new();
    for &thr in &thresholds {
        let mut tp = 0.0;
        let mut fp = 0.0;
        for (&s, &t) in scores.iter().zip(truth) {
            if s >= thr {
                if t {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
            }
        }
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if total_pos > 0.0 { tp / total_pos } else { 0.0 };
        points.push((thr, precision, recall));
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for &(_, p, r) in &points {
        ap += p * (r - prev_recall);
        prev_recall = r;
    }
    (points, ap)
}

/// Random tensor with entries roughly N(0, scale).
pub fn random_tensor(shape: &[usize], scale: f64, rng: &mut Rng) -> Tensor<f64> {
    let len = shape.iter().product();
    Tensor::from_vec(shape, (0..len).map(|_| rng.next_normal() * scale).collect())
}

/// Random tensor with all pairwise-distinct values (argmax stability for
/// pooling gradient checks).
pub fn distinct_tensor(shape: &[usize], rng: &mut Rng) -> Tensor<f64> {
    let len: usize = shape.iter().product();
    let mut values: Vec<f64> = (0..len).map(|i| i as f64 * 0.37 + 1.0).collect();
    rng.shuffle(&mut values);
    Tensor::from_vec(shape, values)
}
