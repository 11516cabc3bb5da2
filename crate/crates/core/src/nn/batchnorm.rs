//! Batch normalization over (N, L) per channel.

use rayon::prelude::*;

use super::kernels::{dot, sum, sum_sq_dev};
use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct BatchNorm<E: Element = f32> {
    pub channels: usize,
    pub gamma: Vec<E>,
    pub beta: Vec<E>,
    /// Running statistics for inference; initialized to mean 0, variance 1.
    pub running_mean: Vec<E>,
    pub running_var: Vec<E>,
    pub momentum: f64,
    pub epsilon: f64,
}

/// Batch statistics saved by the training forward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache<E: Element = f32> {
    pub mean: Vec<E>,
    pub inv_std: Vec<E>,
}

#[derive(Debug, Clone)]
pub struct BatchNormGrads<E: Element = f32> {
    pub gamma: Vec<E>,
    pub beta: Vec<E>,
}

impl<E: Element> BatchNorm<E> {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            channels,
            gamma: vec![E::ONE; channels],
            beta: vec![E::ZERO; channels],
            running_mean: vec![E::ZERO; channels],
            running_var: vec![E::ONE; channels],
            momentum: BN_MOMENTUM,
            epsilon: BN_EPSILON,
        }
    }

    fn check_input(&self, x: &Tensor<E>) -> Result<(usize, usize)> {
        match *x.shape() {
            [n, c, l] if c == self.channels => Ok((n, l)),
            _ => Err(Error::Shape(format!(
                "batchnorm expects [N, {}, L], got {:?}",
                self.channels,
                x.shape()
            ))),
        }
    }

    /// Normalize by batch statistics (biased variance) and update running stats.
    /// `update_running = false` leaves the layer untouched (gradient-check mode).
    pub fn forward_train(
        &mut self,
        x: &Tensor<E>,
        update_running: bool,
    ) -> Result<(Tensor<E>, BatchNormCache<E>)> {
        let (n, l) = self.check_input(x)?;
        let m = n * l;
        if m < 2 {
            return Err(Error::Shape(
                "batchnorm train mode requires N*L > 1 per channel".into(),
            ));
        }
        let c = self.channels;
        let xd = x.data();
        let m_e = E::from_f64(m as f64);

        let stats: Vec<(E, E)> = (0..c)
            .into_par_iter()
            .map(|ci| {
                let mut total = E::ZERO;
                for ni in 0..n {
                    total += sum(&xd[(ni * c + ci) * l..][..l]);
                }
                let mean = total / m_e;
                let mut ss = E::ZERO;
                for ni in 0..n {
                    ss += sum_sq_dev(&xd[(ni * c + ci) * l..][..l], mean);
                }
                (mean, ss / m_e)
            })
            .collect();

        let mut cache = BatchNormCache {
            mean: Vec::with_capacity(c),
            inv_std: Vec::with_capacity(c),
        };
        for &(mean, var) in &stats {
            cache.mean.push(mean);
            cache
                .inv_std
                .push(E::ONE / (var + E::from_f64(self.epsilon)).sqrt());
        }

        if update_running {
            let mom = E::from_f64(self.momentum);
            let one_minus = E::from_f64(1.0 - self.momentum);
            for (ci, &(mean, var)) in stats.iter().enumerate() {
                self.running_mean[ci] = mom * self.running_mean[ci] + one_minus * mean;
                self.running_var[ci] = mom * self.running_var[ci] + one_minus * var;
            }
        }

        let y = self.normalize(x, n, l, &cache.mean, &cache.inv_std);
        Ok((y, cache))
    }

    /// Normalize by running statistics. Valid before any training step: the
    /// initialized stats (mean 0, var 1) apply.
    pub fn forward_infer(&self, x: &Tensor<E>) -> Result<Tensor<E>> {
        let (n, l) = self.check_input(x)?;
        let inv_std: Vec<E> = self
            .running_var
            .iter()
            .map(|&v| E::ONE / (v + E::from_f64(self.epsilon)).sqrt())
            .collect();
        Ok(self.normalize(x, n, l, &self.running_mean, &inv_std))
    }

    fn normalize(
        &self,
        x: &Tensor<E>,
        _n: usize,
        l: usize,
        mean: &[E],
        inv_std: &[E],
    ) -> Tensor<E> {
        let c = self.channels;
        let mut y = Tensor::zeros(x.shape());
        let xd = x.data();
        y.data_mut()
            .par_chunks_mut(l)
            .enumerate()
            .for_each(|(idx, y_row)| {
                let ci = idx % c;
                let scale = self.gamma[ci] * inv_std[ci];
                let shift = self.beta[ci];
                let mu = mean[ci];
                let x_row = &xd[idx * l..][..l];
                for (yv, xv) in y_row.iter_mut().zip(x_row) {
                    *yv = (*xv - mu) * scale + shift;
                }
            });
        y
    }

    /// Backward through the training-mode forward (batch statistics included).
    pub fn backward(
        &self,
        x: &Tensor<E>,
        cache: &BatchNormCache<E>,
        grad_out: &Tensor<E>,
    ) -> Result<(Tensor<E>, BatchNormGrads<E>)> {
        let (n, l) = self.check_input(x)?;
        if grad_out.shape() != x.shape() {
            return Err(Error::Shape("batchnorm backward shape mismatch".into()));
        }
        let c = self.channels;
        let m = n * l;
        let m_e = E::from_f64(m as f64);
        let xd = x.data();
        let god = grad_out.data();

        // Per channel: sum of upstream grad and of grad * x_hat.
        let sums: Vec<(E, E)> = (0..c)
            .into_par_iter()
            .map(|ci| {
                let mu = cache.mean[ci];
                let istd = cache.inv_std[ci];
                let mut s_go = E::ZERO;
                let mut s_go_xhat = E::ZERO;
                for ni in 0..n {
                    let base = (ni * c + ci) * l;
                    let go_row = &god[base..base + l];
                    let x_row = &xd[base..base + l];
                    s_go += sum(go_row);
                    // sum(go * (x - mu)) * istd, fused via dot then shift
                    s_go_xhat += (dot(go_row, x_row) - mu * sum(go_row)) * istd;
                }
                (s_go, s_go_xhat)
            })
            .collect();

        let grads = BatchNormGrads {
            gamma: sums.iter().map(|&(_, g)| g).collect(),
            beta: sums.iter().map(|&(b, _)| b).collect(),
        };

        let mut gx = Tensor::zeros(x.shape());
        gx.data_mut()
            .par_chunks_mut(l)
            .enumerate()
            .for_each(|(idx, gx_row)| {
                let ci = idx % c;
                let mu = cache.mean[ci];
                let istd = cache.inv_std[ci];
                let (s_go, s_go_xhat) = sums[ci];
                let coef = self.gamma[ci] * istd / m_e;
                let x_row = &xd[idx * l..][..l];
                let go_row = &god[idx * l..][..l];
                for ((g, &xv), &go) in gx_row.iter_mut().zip(x_row).zip(go_row) {
                    let xhat = (xv - mu) * istd;
                    *g = coef * (m_e * go - s_go - xhat * s_go_xhat);
                }
            });

        Ok((gx, grads))
    }

    pub fn parameter_count(&self) -> usize {
        self.gamma.len() + self.beta.len()
    }
}
