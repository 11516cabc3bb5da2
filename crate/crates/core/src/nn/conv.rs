//! 1-D convolution (cross-correlation) with 'same' zero padding.

use rayon::prelude::*;

use super::kernels::{axpy, dot, sum};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Element, Tensor};

#[derive(Debug, Clone)]
pub struct Conv1d<E: Element = f32> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_len: usize,
    pub stride: usize,
    /// `[out_channels][in_channels][kernel_len]`, contiguous.
    pub weight: Vec<E>,
    pub bias: Vec<E>,
}

#[derive(Debug, Clone)]
pub struct Conv1dGrads<E: Element = f32> {
    pub weight: Vec<E>,
    pub bias: Vec<E>,
}

/// Output channels processed together per record, sized so a tile of rows
/// stays cache-resident.
const CO_TILE: usize = 8;

impl<E: Element> Conv1d<E> {
    pub fn new(in_channels: usize, out_channels: usize, kernel_len: usize, stride: usize) -> Self {
        Conv1d {
            in_channels,
            out_channels,
            kernel_len,
            stride,
            weight: vec![E::ZERO; out_channels * in_channels * kernel_len],
            bias: vec![E::ZERO; out_channels],
        }
    }

    /// He-normal weights (std = sqrt(2 / fan_in), fan_in = in_channels * kernel_len),
    /// zero biases.
    pub fn init_he(&mut self, rng: &mut Rng) {
        let std = (2.0 / (self.in_channels * self.kernel_len) as f64).sqrt();
        for w in &mut self.weight {
            *w = E::from_f64(rng.next_normal() * std);
        }
        for b in &mut self.bias {
            *b = E::ZERO;
        }
    }

    pub fn out_len(&self, in_len: usize) -> usize {
        in_len.div_ceil(self.stride)
    }

    /// Left pad for 'same' padding: total = (out-1)*stride + kernel - in, floor-split.
    fn pad_left(&self, in_len: usize) -> usize {
        let out_len = self.out_len(in_len);
        let total = ((out_len - 1) * self.stride + self.kernel_len).saturating_sub(in_len);
        total / 2
    }

    fn check_input(&self, x: &Tensor<E>) -> Result<(usize, usize)> {
        match *x.shape() {
            [n, c, l] if c == self.in_channels && l > 0 => Ok((n, l)),
            _ => Err(Error::Shape(format!(
                "conv1d expects [N, {}, L], got {:?}",
                self.in_channels,
                x.shape()
            ))),
        }
    }

    /// Tap offset `k - pad_left` decomposed against the stride: the input
    /// index `t*s + off` becomes `phase[r][t + q]` with contiguous access.
    #[inline]
    fn tap_phase(off: isize, stride: usize) -> (usize, isize) {
        let s = stride as isize;
        let r = off.rem_euclid(s);
        let q = (off - r) / s;
        (r as usize, q)
    }

    /// Valid output range for `y[t] += w * phase[r][t + q]`.
    #[inline]
    fn phase_range(q: isize, l_out: usize, l_phase: usize) -> (usize, usize) {
        let t0 = (-q).max(0) as usize;
        let t1 = (l_phase as isize - q).clamp(0, l_out as isize) as usize;
        (t0.min(t1), t1)
    }

    /// Downsampled copies of each input row: `phase[r][j] = x[j*s + r]`,
    /// zero beyond the end. For stride 1 this is the row itself, so callers
    /// skip the copy.
    fn extract_phases(xd: &[E], rows: usize, l_in: usize, stride: usize, l_phase: usize) -> Vec<E> {
        let mut phases = vec![E::ZERO; rows * stride * l_phase];
        phases
            .par_chunks_mut(stride * l_phase)
            .enumerate()
            .for_each(|(row, dst)| {
                let x_row = &xd[row * l_in..][..l_in];
                for r in 0..stride {
                    let out = &mut dst[r * l_phase..(r + 1) * l_phase];
                    let mut idx = r;
                    for slot in out.iter_mut() {
                        if idx < l_in {
                            *slot = x_row[idx];
                        }
                        idx += stride;
                    }
                }
            });
        phases
    }

    /// x: `[N, in_ch, L]` -> `[N, out_ch, ceil(L / stride)]`.
    pub fn forward(&self, x: &Tensor<E>) -> Result<Tensor<E>> {
        let (n, l_in) = self.check_input(x)?;
        let l_out = self.out_len(l_in);
        let pad_left = self.pad_left(l_in) as isize;
        let mut out = Tensor::zeros(&[n, self.out_channels, l_out]);
        let (c_in, c_out, k_len, stride) = (
            self.in_channels,
            self.out_channels,
            self.kernel_len,
            self.stride,
        );
        let xd = x.data();
        let l_phase = l_in.div_ceil(stride);
        let phases = if stride > 1 {
            Self::extract_phases(xd, n * c_in, l_in, stride, l_phase)
        } else {
            Vec::new()
        };

        // One record per task; output channels processed in small tiles so
        // the tile's rows stay cached while each input row streams once.
        out.data_mut()
            .par_chunks_mut(c_out * l_out)
            .enumerate()
            .for_each(|(ni, y_plane)| {
                for (co, y_row) in y_plane.chunks_mut(l_out).enumerate() {
                    let b = self.bias[co];
                    for y in y_row.iter_mut() {
                        *y = b;
                    }
                }
                let mut co0 = 0;
                for y_tile in y_plane.chunks_mut(CO_TILE * l_out) {
                    let tile_len = y_tile.len() / l_out;
                    for ci in 0..c_in {
                        let row = ni * c_in + ci;
                        let src_full = if stride == 1 {
                            &xd[row * l_in..][..l_in]
                        } else {
                            &phases[row * stride * l_phase..][..stride * l_phase]
                        };
                        for j in 0..tile_len {
                            let co = co0 + j;
                            let w_base = (co * c_in + ci) * k_len;
                            let y_row = &mut y_tile[j * l_out..(j + 1) * l_out];
                            for k in 0..k_len {
                                let w = self.weight[w_base + k];
                                let off = k as isize - pad_left;
                                let (r, q) = Self::tap_phase(off, stride);
                                let (t0, t1) = Self::phase_range(q, l_out, l_phase);
                                if t0 >= t1 {
                                    continue;
                                }
                                let src = if stride == 1 {
                                    src_full
                                } else {
                                    &src_full[r * l_phase..(r + 1) * l_phase]
                                };
                                let start = (t0 as isize + q) as usize;
                                axpy(&mut y_row[t0..t1], w, &src[start..start + (t1 - t0)]);
                            }
                        }
                    }
                    co0 += tile_len;
                }
            });
        Ok(out)
    }

    /// Analytic gradients of `forward`. `grad_out` is `[N, out_ch, L_out]`.
    /// `need_grad_x = false` skips the input gradient (first layer).
    pub fn backward(
        &self,
        x: &Tensor<E>,
        grad_out: &Tensor<E>,
        need_grad_x: bool,
    ) -> Result<(Option<Tensor<E>>, Conv1dGrads<E>)> {
        let (n, l_in) = self.check_input(x)?;
        let l_out = self.out_len(l_in);
        if grad_out.shape() != [n, self.out_channels, l_out] {
            return Err(Error::Shape(format!(
                "conv1d backward expects grad [{}, {}, {}], got {:?}",
                n,
                self.out_channels,
                l_out,
                grad_out.shape()
            )));
        }
        let pad_left = self.pad_left(l_in) as isize;
        let (c_in, c_out, k_len, stride) = (
            self.in_channels,
            self.out_channels,
            self.kernel_len,
            self.stride,
        );
        let xd = x.data();
        let god = grad_out.data();
        let l_phase = l_in.div_ceil(stride);
        let phases = if stride > 1 {
            Self::extract_phases(xd, n * c_in, l_in, stride, l_phase)
        } else {
            Vec::new()
        };

        let mut grads = Conv1dGrads {
            weight: vec![E::ZERO; self.weight.len()],
            bias: vec![E::ZERO; c_out],
        };

        grads.bias.par_iter_mut().enumerate().for_each(|(co, gb)| {
            let mut acc = E::ZERO;
            for ni in 0..n {
                acc += sum(&god[(ni * c_out + co) * l_out..][..l_out]);
            }
            *gb = acc;
        });

        // Per-record partial weight gradients, output channels tiled so the
        // tile's grad-out rows stay cached while each input row streams once
        // per tile. The ni-ordered reduction below is deterministic.
        let partials: Vec<Vec<E>> = (0..n)
            .into_par_iter()
            .map(|ni| {
                let mut gw = vec![E::ZERO; c_out * c_in * k_len];
                let mut co0 = 0;
                while co0 < c_out {
                    let tile_end = (co0 + CO_TILE).min(c_out);
                    for ci in 0..c_in {
                        let row = ni * c_in + ci;
                        let src_full = if stride == 1 {
                            &xd[row * l_in..][..l_in]
                        } else {
                            &phases[row * stride * l_phase..][..stride * l_phase]
                        };
                        for co in co0..tile_end {
                            let go_row = &god[(ni * c_out + co) * l_out..][..l_out];
                            let w_base = (co * c_in + ci) * k_len;
                            for k in 0..k_len {
                                let off = k as isize - pad_left;
                                let (r, q) = Self::tap_phase(off, stride);
                                let (t0, t1) = Self::phase_range(q, l_out, l_phase);
                                if t0 >= t1 {
                                    continue;
                                }
                                let start = (t0 as isize + q) as usize;
                                let src = if stride == 1 {
                                    src_full
                                } else {
                                    &src_full[r * l_phase..(r + 1) * l_phase]
                                };
                                gw[w_base + k] +=
                                    dot(&go_row[t0..t1], &src[start..start + (t1 - t0)]);
                            }
                        }
                    }
                    co0 = tile_end;
                }
                gw
            })
            .collect();
        for partial in &partials {
            for (g, p) in grads.weight.iter_mut().zip(partial) {
                *g += *p;
            }
        }

        let grad_x = if need_grad_x {
            let mut gx = Tensor::zeros(&[n, c_in, l_in]);
            if stride == 1 {
                // One record per task, input channels tiled: the tile's grad
                // rows accumulate in cache while grad-out rows stream by.
                gx.data_mut()
                    .par_chunks_mut(c_in * l_in)
                    .enumerate()
                    .for_each(|(ni, gx_plane)| {
                        let mut ci0 = 0;
                        for gx_tile in gx_plane.chunks_mut(CO_TILE * l_in) {
                            let tile_rows = gx_tile.len() / l_in;
                            for co in 0..c_out {
                                let go_row = &god[(ni * c_out + co) * l_out..][..l_out];
                                for j in 0..tile_rows {
                                    let ci = ci0 + j;
                                    let gx_row = &mut gx_tile[j * l_in..(j + 1) * l_in];
                                    let w_base = (co * c_in + ci) * k_len;
                                    for k in 0..k_len {
                                        let w = self.weight[w_base + k];
                                        let off = k as isize - pad_left;
                                        let (t0, t1) = Self::phase_range(off, l_out, l_in);
                                        if t0 >= t1 {
                                            continue;
                                        }
                                        let start = (t0 as isize + off) as usize;
                                        axpy(
                                            &mut gx_row[start..start + (t1 - t0)],
                                            w,
                                            &go_row[t0..t1],
                                        );
                                    }
                                }
                            }
                            ci0 += tile_rows;
                        }
                    });
            } else {
                // Accumulate into phase layout, then interleave back. Input
                // channels tiled as in the stride-1 path.
                let mut gx_phases = vec![E::ZERO; n * c_in * stride * l_phase];
                gx_phases
                    .par_chunks_mut(c_in * stride * l_phase)
                    .enumerate()
                    .for_each(|(ni, gxp_plane)| {
                        let mut ci0 = 0;
                        for gxp_tile in gxp_plane.chunks_mut(CO_TILE * stride * l_phase) {
                            let tile_rows = gxp_tile.len() / (stride * l_phase);
                            for co in 0..c_out {
                                let go_row = &god[(ni * c_out + co) * l_out..][..l_out];
                                for j in 0..tile_rows {
                                    let ci = ci0 + j;
                                    let gxp = &mut gxp_tile
                                        [j * stride * l_phase..(j + 1) * stride * l_phase];
                                    let w_base = (co * c_in + ci) * k_len;
                                    for k in 0..k_len {
                                        let w = self.weight[w_base + k];
                                        let off = k as isize - pad_left;
                                        let (r, q) = Self::tap_phase(off, stride);
                                        let (t0, t1) = Self::phase_range(q, l_out, l_phase);
                                        if t0 >= t1 {
                                            continue;
                                        }
                                        let start = (t0 as isize + q) as usize;
                                        axpy(
                                            &mut gxp[r * l_phase + start..][..t1 - t0],
                                            w,
                                            &go_row[t0..t1],
                                        );
                                    }
                                }
                            }
                            ci0 += tile_rows;
                        }
                    });
                gx.data_mut()
                    .par_chunks_mut(l_in)
                    .enumerate()
                    .for_each(|(row, gx_row)| {
                        let gxp = &gx_phases[row * stride * l_phase..][..stride * l_phase];
                        for r in 0..stride {
                            let src = &gxp[r * l_phase..(r + 1) * l_phase];
                            let mut idx = r;
                            for &v in src {
                                if idx >= l_in {
                                    break;
                                }
                                gx_row[idx] = v;
                                idx += stride;
                            }
                        }
                    });
            }
            Some(gx)
        } else {
            None
        };

        Ok((grad_x, grads))
    }

    pub fn parameter_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}
