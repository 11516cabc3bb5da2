//! Inverted dropout: survivors are scaled at train time, inference is identity.

use rayon::prelude::*;

use crate::rng::{derive_seed_indexed, Rng};
use crate::tensor::{Element, Tensor};

/// Keep/drop decisions for one forward call, one byte per element.
#[derive(Debug, Clone)]
pub struct DropoutMask {
    pub keep: Vec<u8>,
    pub rate: f64,
}

/// Train-mode dropout. Deterministic in `(seed, shape)`: each row of the
/// trailing dimension draws from its own derived stream, so the result does
/// not depend on thread schedule.
pub fn dropout_train<E: Element>(x: &Tensor<E>, rate: f64, seed: u64) -> (Tensor<E>, DropoutMask) {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
    let n = x.len();
    if rate == 0.0 {
        return (
            x.clone(),
            DropoutMask {
                keep: vec![1; n],
                rate,
            },
        );
    }
    let row_len = *x.shape().last().unwrap_or(&1);
    let scale = E::from_f64(1.0 / (1.0 - rate));
    let mut y = Tensor::zeros(x.shape());
    let mut keep = vec![0u8; n];
    let xd = x.data();

    y.data_mut()
        .par_chunks_mut(row_len)
        .zip(keep.par_chunks_mut(row_len))
        .enumerate()
        .for_each(|(row, (y_row, k_row))| {
            let mut rng = Rng::new(derive_seed_indexed(seed, "dropout.row", row as u64));
            let x_row = &xd[row * row_len..][..row_len];
            for ((yv, kv), &xv) in y_row.iter_mut().zip(k_row.iter_mut()).zip(x_row) {
                if rng.next_f64() >= rate {
                    *kv = 1;
                    *yv = xv * scale;
                }
            }
        });
    (y, DropoutMask { keep, rate })
}

pub fn dropout_backward<E: Element>(grad_out: &Tensor<E>, mask: &DropoutMask) -> Tensor<E> {
    assert_eq!(grad_out.len(), mask.keep.len());
    let scale = E::from_f64(1.0 / (1.0 - mask.rate));
    let data = grad_out
        .data()
        .iter()
        .zip(&mask.keep)
        .map(|(&g, &k)| if k == 1 { g * scale } else { E::ZERO })
        .collect();
    Tensor::from_vec(grad_out.shape(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_zero_is_identity() {
        let x = Tensor::from_vec(&[2, 3], vec![1.0f32, -2.0, 3.0, 4.0, -5.0, 6.0]);
        let (y, mask) = dropout_train(&x, 0.0, 99);
        assert_eq!(y.data(), x.data());
        assert!(mask.keep.iter().all(|&k| k == 1));
    }

    #[test]
    fn survivor_mean_close_to_input_value() {
        // Law of large numbers: with inverted scaling the expected value is preserved.
        let n = 1_000_000;
        let x = Tensor::from_vec(&[n], vec![1.0f32; n]);
        let (y, _) = dropout_train(&x, 0.8, 7);
        let mean = y.data().iter().map(|&v| v as f64).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn deterministic_in_seed() {
        let x = Tensor::from_vec(&[4, 25], (0..100).map(|i| i as f32).collect());
        let (y1, m1) = dropout_train(&x, 0.5, 123);
        let (y2, m2) = dropout_train(&x, 0.5, 123);
        assert_eq!(y1.data(), y2.data());
        assert_eq!(m1.keep, m2.keep);
        let (y3, _) = dropout_train(&x, 0.5, 124);
        assert_ne!(y1.data(), y3.data());
    }

    #[test]
    fn backward_routes_through_mask() {
        let x = Tensor::from_vec(&[100], vec![1.0f32; 100]);
        let (_, mask) = dropout_train(&x, 0.5, 5);
        let g = Tensor::from_vec(&[100], vec![1.0f32; 100]);
        let gx = dropout_backward(&g, &mask);
        for (i, &k) in mask.keep.iter().enumerate() {
            let expected = if k == 1 { 2.0 } else { 0.0 };
            assert_eq!(gx.data()[i], expected);
        }
    }
}
