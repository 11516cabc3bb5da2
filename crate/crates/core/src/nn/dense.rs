//! Fully connected layer.

use rayon::prelude::*;

use super::kernels::{axpy, dot, sum};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Element, Tensor};

#[derive(Debug, Clone)]
pub struct Dense<E: Element = f32> {
    pub in_features: usize,
    pub out_features: usize,
    /// `[in_features][out_features]`, contiguous.
    pub weight: Vec<E>,
    pub bias: Vec<E>,
}

#[derive(Debug, Clone)]
pub struct DenseGrads<E: Element = f32> {
    pub weight: Vec<E>,
    pub bias: Vec<E>,
}

impl<E: Element> Dense<E> {
    pub fn new(in_features: usize, out_features: usize) -> Self {
        Dense {
            in_features,
            out_features,
            weight: vec![E::ZERO; in_features * out_features],
            bias: vec![E::ZERO; out_features],
        }
    }

    /// He-normal weights (fan_in = in_features), zero biases.
    pub fn init_he(&mut self, rng: &mut Rng) {
        let std = (2.0 / self.in_features as f64).sqrt();
        for w in &mut self.weight {
            *w = E::from_f64(rng.next_normal() * std);
        }
        for b in &mut self.bias {
            *b = E::ZERO;
        }
    }

    fn check_input(&self, x: &Tensor<E>) -> Result<usize> {
        match *x.shape() {
            [n, f] if f == self.in_features => Ok(n),
            _ => Err(Error::Shape(format!(
                "dense expects [N, {}], got {:?}",
                self.in_features,
                x.shape()
            ))),
        }
    }

    /// x: `[N, in]` -> `[N, out]`, y = x W + b.
    pub fn forward(&self, x: &Tensor<E>) -> Result<Tensor<E>> {
        let n = self.check_input(x)?;
        let (fi, fo) = (self.in_features, self.out_features);
        let mut y = Tensor::zeros(&[n, fo]);
        let xd = x.data();
        y.data_mut()
            .par_chunks_mut(fo)
            .enumerate()
            .for_each(|(ni, y_row)| {
                y_row.copy_from_slice(&self.bias);
                let x_row = &xd[ni * fi..][..fi];
                for (i, &xv) in x_row.iter().enumerate() {
                    axpy(y_row, xv, &self.weight[i * fo..][..fo]);
                }
            });
        Ok(y)
    }

    pub fn backward(
        &self,
        x: &Tensor<E>,
        grad_out: &Tensor<E>,
    ) -> Result<(Tensor<E>, DenseGrads<E>)> {
        let n = self.check_input(x)?;
        let (fi, fo) = (self.in_features, self.out_features);
        if grad_out.shape() != [n, fo] {
            return Err(Error::Shape("dense backward shape mismatch".into()));
        }
        let xd = x.data();
        let god = grad_out.data();

        let mut grads = DenseGrads {
            weight: vec![E::ZERO; fi * fo],
            bias: vec![E::ZERO; fo],
        };
        // grad_W[i][o] = sum_n x[n][i] * go[n][o]
        grads
            .weight
            .par_chunks_mut(fo)
            .enumerate()
            .for_each(|(i, w_row)| {
                for ni in 0..n {
                    axpy(w_row, xd[ni * fi + i], &god[ni * fo..][..fo]);
                }
            });
        for (o, gb) in grads.bias.iter_mut().enumerate() {
            let col: Vec<E> = (0..n).map(|ni| god[ni * fo + o]).collect();
            *gb = sum(&col);
        }

        let mut gx = Tensor::zeros(&[n, fi]);
        gx.data_mut()
            .par_chunks_mut(fi)
            .enumerate()
            .for_each(|(ni, gx_row)| {
                let go_row = &god[ni * fo..][..fo];
                for (i, g) in gx_row.iter_mut().enumerate() {
                    *g = dot(go_row, &self.weight[i * fo..][..fo]);
                }
            });
        Ok((gx, grads))
    }

    pub fn parameter_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}
