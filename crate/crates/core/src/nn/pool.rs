//! 1-D max pooling with argmax routing for the backward pass.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

#[derive(Debug, Clone, Copy)]
pub struct MaxPool1d {
    pub window: usize,
    pub stride: usize,
}

/// Argmax positions (absolute index within each row) from the forward pass.
#[derive(Debug, Clone)]
pub struct MaxPoolCache {
    pub argmax: Vec<u32>,
    pub in_len: usize,
}

impl MaxPool1d {
    pub fn new(window: usize, stride: usize) -> Self {
        assert!(window > 0 && stride > 0);
        MaxPool1d { window, stride }
    }

    pub fn out_len(&self, in_len: usize) -> usize {
        in_len.div_ceil(self.stride)
    }

    /// x: `[N, C, L]` -> `[N, C, ceil(L / stride)]`. Windows are clipped at the
    /// end of the row; ties route to the first maximal index.
    pub fn forward<E: Element>(&self, x: &Tensor<E>) -> Result<(Tensor<E>, MaxPoolCache)> {
        let [n, c, l] = *x.shape() else {
            return Err(Error::Shape(format!(
                "maxpool expects [N, C, L], got {:?}",
                x.shape()
            )));
        };
        let l_out = self.out_len(l);
        let mut y = Tensor::zeros(&[n, c, l_out]);
        let mut argmax = vec![0u32; n * c * l_out];
        let xd = x.data();

        y.data_mut()
            .par_chunks_mut(l_out)
            .zip(argmax.par_chunks_mut(l_out))
            .enumerate()
            .for_each(|(row, (y_row, a_row))| {
                let x_row = &xd[row * l..][..l];
                for t in 0..l_out {
                    let start = t * self.stride;
                    let end = (start + self.window).min(l);
                    let mut best = x_row[start];
                    let mut best_i = start;
                    for (i, &v) in x_row.iter().enumerate().take(end).skip(start + 1) {
                        if v > best {
                            best = v;
                            best_i = i;
                        }
                    }
                    y_row[t] = best;
                    a_row[t] = best_i as u32;
                }
            });
        Ok((y, MaxPoolCache { argmax, in_len: l }))
    }

    pub fn backward<E: Element>(
        &self,
        grad_out: &Tensor<E>,
        cache: &MaxPoolCache,
    ) -> Result<Tensor<E>> {
        let [n, c, l_out] = *grad_out.shape() else {
            return Err(Error::Shape("maxpool backward expects [N, C, L]".into()));
        };
        let l = cache.in_len;
        let mut gx = Tensor::zeros(&[n, c, l]);
        let god = grad_out.data();
        gx.data_mut()
            .par_chunks_mut(l)
            .enumerate()
            .for_each(|(row, gx_row)| {
                let go_row = &god[row * l_out..][..l_out];
                let a_row = &cache.argmax[row * l_out..][..l_out];
                for (&g, &a) in go_row.iter().zip(a_row) {
                    gx_row[a as usize] += g;
                }
            });
        Ok(gx)
    }
}
