//! The 1-D pre-activation residual network: a stem convolution, four
//! residual blocks (BN -> ReLU -> Dropout -> Conv twice, skip added after the
//! second convolution), then flatten -> dense -> sigmoid.

mod checkpoint;

pub use checkpoint::{load, save, ModelCheckpoint, TrainMeta, CHECKPOINT_MAGIC};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    bce_with_logits, dropout_backward, dropout_train, relu, relu_backward, sigmoid, BatchNorm,
    BatchNormCache, BatchNormGrads, Conv1d, Conv1dGrads, Dense, DenseGrads, DropoutMask, MaxPool1d,
    MaxPoolCache,
};
use crate::rng::{derive_seed, derive_seed_indexed, Rng};
use crate::tensor::{Element, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureConfig {
    pub n_residual_blocks: usize,
    pub kernel_length: usize,
    pub initial_filters: usize,
    /// Filter count increases by this every second residual block.
    pub filter_growth: usize,
    pub subsample_factor: usize,
    pub dropout_rate: f64,
    pub n_classes: usize,
    pub input_leads: usize,
    pub input_window: usize,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        ArchitectureConfig {
            n_residual_blocks: 4,
            kernel_length: 16,
            initial_filters: 64,
            filter_growth: 64,
            subsample_factor: 4,
            dropout_rate: 0.8,
            n_classes: 6,
            input_leads: 12,
            input_window: 4096,
        }
    }
}

impl ArchitectureConfig {
    /// Output filter count per block: blocks {1,2} keep the initial count,
    /// {3,4} grow by one step, and so on.
    pub fn block_filters(&self) -> Vec<usize> {
        (0..self.n_residual_blocks)
            .map(|b| self.initial_filters + self.filter_growth * (b / 2))
            .collect()
    }

    /// Output length per block, each subsampled from the previous.
    pub fn block_lengths(&self) -> Vec<usize> {
        let mut lengths = Vec::with_capacity(self.n_residual_blocks);
        let mut l = self.input_window;
        for _ in 0..self.n_residual_blocks {
            l = l.div_ceil(self.subsample_factor);
            lengths.push(l);
        }
        lengths
    }

    pub fn flatten_features(&self) -> usize {
        let filters = self.block_filters();
        let lengths = self.block_lengths();
        match (filters.last(), lengths.last()) {
            (Some(&f), Some(&l)) => f * l,
            _ => self.initial_filters * self.input_window,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResidualBlock<E: Element = f32> {
    pub bn1: BatchNorm<E>,
    pub conv1: Conv1d<E>,
    pub bn2: BatchNorm<E>,
    pub conv2: Conv1d<E>,
    /// Skip path: pooling matches the length, 1x1 conv matches channels.
    pub pool: MaxPool1d,
    pub skip_conv: Option<Conv1d<E>>,
    pub dropout_rate: f64,
}

#[derive(Debug, Clone)]
pub struct Model<E: Element = f32> {
    pub config: ArchitectureConfig,
    pub stem: Conv1d<E>,
    pub blocks: Vec<ResidualBlock<E>>,
    pub head: Dense<E>,
}

#[derive(Debug, Clone)]
pub struct BlockGrads<E: Element = f32> {
    pub bn1: BatchNormGrads<E>,
    pub conv1: Conv1dGrads<E>,
    pub bn2: BatchNormGrads<E>,
    pub conv2: Conv1dGrads<E>,
    pub skip_conv: Option<Conv1dGrads<E>>,
}

#[derive(Debug, Clone)]
pub struct ModelGrads<E: Element = f32> {
    pub stem: Conv1dGrads<E>,
    pub blocks: Vec<BlockGrads<E>>,
    pub head: DenseGrads<E>,
}

/// Everything the backward pass needs from a training-mode forward.
pub struct BlockTrace<E: Element = f32> {
    bn1_out: Tensor<E>,
    bn1_cache: BatchNormCache<E>,
    a1: Tensor<E>,
    d1_mask: Option<DropoutMask>,
    conv1_out: Tensor<E>,
    bn2_out: Tensor<E>,
    bn2_cache: BatchNormCache<E>,
    a2: Tensor<E>,
    d2_mask: Option<DropoutMask>,
    pool_out: Tensor<E>,
    pool_cache: MaxPoolCache,
}

pub struct ForwardTrace<E: Element = f32> {
    pub stem_out: Tensor<E>,
    block_inner: Vec<BlockTrace<E>>,
    pub block_out: Vec<Tensor<E>>,
    pub head_in: Tensor<E>,
    pub logits: Tensor<E>,
}

impl<E: Element> ForwardTrace<E> {
    /// Intermediate shapes: post-stem, each block output, flatten, logits.
    pub fn shapes(&self) -> Vec<Vec<usize>> {
        let mut v = vec![self.stem_out.shape().to_vec()];
        v.extend(self.block_out.iter().map(|t| t.shape().to_vec()));
        v.push(self.head_in.shape().to_vec());
        v.push(self.logits.shape().to_vec());
        v
    }
}

impl<E: Element> Model<E> {
    /// He-normal convolution and dense weights, zero biases, BN gamma 1 / beta 0.
    /// Deterministic in the seed.
    pub fn build(config: &ArchitectureConfig, rng_seed: u64) -> Self {
        let mut rng = Rng::new(derive_seed(rng_seed, "model.init"));
        let mut stem = Conv1d::new(
            config.input_leads,
            config.initial_filters,
            config.kernel_length,
            1,
        );
        stem.init_he(&mut rng);

        let filters = config.block_filters();
        let mut blocks = Vec::with_capacity(config.n_residual_blocks);
        let mut in_ch = config.initial_filters;
        for &out_ch in &filters {
            let mut conv1 = Conv1d::new(in_ch, out_ch, config.kernel_length, 1);
            conv1.init_he(&mut rng);
            let mut conv2 = Conv1d::new(
                out_ch,
                out_ch,
                config.kernel_length,
                config.subsample_factor,
            );
            conv2.init_he(&mut rng);
            let skip_conv = if in_ch != out_ch {
                let mut sc = Conv1d::new(in_ch, out_ch, 1, 1);
                sc.init_he(&mut rng);
                Some(sc)
            } else {
                None
            };
            blocks.push(ResidualBlock {
                bn1: BatchNorm::new(in_ch),
                conv1,
                bn2: BatchNorm::new(out_ch),
                conv2,
                pool: MaxPool1d::new(config.subsample_factor, config.subsample_factor),
                skip_conv,
                dropout_rate: config.dropout_rate,
            });
            in_ch = out_ch;
        }

        let mut head = Dense::new(config.flatten_features(), config.n_classes);
        head.init_he(&mut rng);

        Model {
            config: config.clone(),
            stem,
            blocks,
            head,
        }
    }

    fn check_input(&self, x: &Tensor<E>) -> Result<usize> {
        match *x.shape() {
            [n, c, l] if c == self.config.input_leads && l == self.config.input_window => Ok(n),
            _ => Err(Error::Shape(format!(
                "model expects [N, {}, {}], got {:?}",
                self.config.input_leads,
                self.config.input_window,
                x.shape()
            ))),
        }
    }

    /// Training-mode forward keeping every intermediate needed by `backward`.
    /// Deterministic in `(input, params, dropout_seed)`; `update_running = false`
    /// leaves BN running statistics untouched (gradient-check mode).
    pub fn forward_train(
        &mut self,
        x: &Tensor<E>,
        dropout_seed: u64,
        update_running: bool,
    ) -> Result<ForwardTrace<E>> {
        let n = self.check_input(x)?;
        let stem_out = self.stem.forward(x)?;
        let mut block_inner = Vec::with_capacity(self.blocks.len());
        let mut block_out: Vec<Tensor<E>> = Vec::with_capacity(self.blocks.len());

        let mut cur = stem_out.clone();
        for (i, block) in self.blocks.iter_mut().enumerate() {
            let (bn1_out, bn1_cache) = block.bn1.forward_train(&cur, update_running)?;
            let r1 = relu(&bn1_out);
            let (a1, d1_mask) = if block.dropout_rate > 0.0 {
                let (a, m) = dropout_train(
                    &r1,
                    block.dropout_rate,
                    derive_seed_indexed(dropout_seed, "drop1", i as u64),
                );
                (a, Some(m))
            } else {
                (r1, None)
            };
            let conv1_out = block.conv1.forward(&a1)?;
            let (bn2_out, bn2_cache) = block.bn2.forward_train(&conv1_out, update_running)?;
            let r2 = relu(&bn2_out);
            let (a2, d2_mask) = if block.dropout_rate > 0.0 {
                let (a, m) = dropout_train(
                    &r2,
                    block.dropout_rate,
                    derive_seed_indexed(dropout_seed, "drop2", i as u64),
                );
                (a, Some(m))
            } else {
                (r2, None)
            };
            let mut main = block.conv2.forward(&a2)?;
            let (pool_out, pool_cache) = block.pool.forward(&cur)?;
            let skip = match &block.skip_conv {
                Some(sc) => sc.forward(&pool_out)?,
                None => pool_out.clone(),
            };
            main.add_assign(&skip);

            block_inner.push(BlockTrace {
                bn1_out,
                bn1_cache,
                a1,
                d1_mask,
                conv1_out,
                bn2_out,
                bn2_cache,
                a2,
                d2_mask,
                pool_out,
                pool_cache,
            });
            block_out.push(main.clone());
            cur = main;
        }

        let head_in = cur.reshaped(&[n, self.config.flatten_features()]);
        let logits = self.head.forward(&head_in)?;
        Ok(ForwardTrace {
            stem_out,
            block_inner,
            block_out,
            head_in,
            logits,
        })
    }

    /// Inference logits: BN running statistics, no dropout, no trace.
    pub fn infer_logits(&self, x: &Tensor<E>) -> Result<Tensor<E>> {
        let n = self.check_input(x)?;
        let mut cur = self.stem.forward(x)?;
        for block in &self.blocks {
            let h = block.bn1.forward_infer(&cur)?;
            let h = relu(&h);
            let h = block.conv1.forward(&h)?;
            let h = block.bn2.forward_infer(&h)?;
            let h = relu(&h);
            let mut main = block.conv2.forward(&h)?;
            let (pool_out, _) = block.pool.forward(&cur)?;
            let skip = match &block.skip_conv {
                Some(sc) => sc.forward(&pool_out)?,
                None => pool_out,
            };
            main.add_assign(&skip);
            cur = main;
        }
        let head_in = cur.reshaped(&[n, self.config.flatten_features()]);
        self.head.forward(&head_in)
    }

    /// Per-class independent probabilities in (0, 1).
    pub fn predict(&self, x: &Tensor<E>) -> Result<Tensor<E>> {
        Ok(sigmoid(&self.infer_logits(x)?))
    }

    /// Analytic gradients of the training-mode forward with respect to every
    /// learnable parameter.
    pub fn backward(
        &self,
        input: &Tensor<E>,
        trace: &ForwardTrace<E>,
        grad_logits: &Tensor<E>,
    ) -> Result<ModelGrads<E>> {
        let (grad_head_in, head_grads) = self.head.backward(&trace.head_in, grad_logits)?;
        let last_shape = trace.block_out.last().expect("at least one block").shape();
        let mut grad_out = grad_head_in.reshaped(last_shape);

        let mut block_grads: Vec<BlockGrads<E>> = Vec::with_capacity(self.blocks.len());
        for (i, block) in self.blocks.iter().enumerate().rev() {
            let inner = &trace.block_inner[i];
            let block_in = if i == 0 {
                &trace.stem_out
            } else {
                &trace.block_out[i - 1]
            };

            // Main branch, in reverse.
            let (ga2, conv2_grads) = block.conv2.backward(&inner.a2, &grad_out, true)?;
            let ga2 = ga2.expect("grad_x requested");
            let gr2 = match &inner.d2_mask {
                Some(mask) => dropout_backward(&ga2, mask),
                None => ga2,
            };
            let g_bn2_out = relu_backward(&inner.bn2_out, &gr2);
            let (g_conv1_out, bn2_grads) =
                block
                    .bn2
                    .backward(&inner.conv1_out, &inner.bn2_cache, &g_bn2_out)?;
            let (ga1, conv1_grads) = block.conv1.backward(&inner.a1, &g_conv1_out, true)?;
            let ga1 = ga1.expect("grad_x requested");
            let gr1 = match &inner.d1_mask {
                Some(mask) => dropout_backward(&ga1, mask),
                None => ga1,
            };
            let g_bn1_out = relu_backward(&inner.bn1_out, &gr1);
            let (mut grad_in, bn1_grads) =
                block.bn1.backward(block_in, &inner.bn1_cache, &g_bn1_out)?;

            // Skip branch.
            let (g_pool_out, skip_conv_grads) = match &block.skip_conv {
                Some(sc) => {
                    let (g, sg) = sc.backward(&inner.pool_out, &grad_out, true)?;
                    (g.expect("grad_x requested"), Some(sg))
                }
                None => (grad_out.clone(), None),
            };
            let grad_skip_in = block.pool.backward(&g_pool_out, &inner.pool_cache)?;
            grad_in.add_assign(&grad_skip_in);

            block_grads.push(BlockGrads {
                bn1: bn1_grads,
                conv1: conv1_grads,
                bn2: bn2_grads,
                conv2: conv2_grads,
                skip_conv: skip_conv_grads,
            });
            grad_out = grad_in;
        }
        block_grads.reverse();

        let (_, stem_grads) = self.stem.backward(input, &grad_out, false)?;

        Ok(ModelGrads {
            stem: stem_grads,
            blocks: block_grads,
            head: head_grads,
        })
    }

    /// Training-mode forward + loss + backward in one call.
    pub fn loss_and_grads(
        &mut self,
        x: &Tensor<E>,
        targets: &Tensor<E>,
        dropout_seed: u64,
        update_running: bool,
    ) -> Result<(E, ModelGrads<E>)> {
        let trace = self.forward_train(x, dropout_seed, update_running)?;
        let (loss, grad_logits) = bce_with_logits(&trace.logits, targets)?;
        let grads = self.backward(x, &trace, &grad_logits)?;
        Ok((loss, grads))
    }

    pub fn parameter_count(&self) -> usize {
        let mut count = 0;
        self.visit_params(&mut |_, data| count += data.len());
        count
    }

    /// Learnable arrays in fixed traversal order (shared with `ModelGrads::visit`).
    pub fn visit_params(&self, f: &mut impl FnMut(&str, &[E])) {
        f("stem.weight", &self.stem.weight);
        f("stem.bias", &self.stem.bias);
        for (i, b) in self.blocks.iter().enumerate() {
            f(&format!("block{i}.bn1.gamma"), &b.bn1.gamma);
            f(&format!("block{i}.bn1.beta"), &b.bn1.beta);
            f(&format!("block{i}.conv1.weight"), &b.conv1.weight);
            f(&format!("block{i}.conv1.bias"), &b.conv1.bias);
            f(&format!("block{i}.bn2.gamma"), &b.bn2.gamma);
            f(&format!("block{i}.bn2.beta"), &b.bn2.beta);
            f(&format!("block{i}.conv2.weight"), &b.conv2.weight);
            f(&format!("block{i}.conv2.bias"), &b.conv2.bias);
            if let Some(sc) = &b.skip_conv {
                f(&format!("block{i}.skip.weight"), &sc.weight);
                f(&format!("block{i}.skip.bias"), &sc.bias);
            }
        }
        f("head.weight", &self.head.weight);
        f("head.bias", &self.head.bias);
    }

    pub fn visit_params_mut(&mut self, f: &mut impl FnMut(&str, &mut Vec<E>)) {
        f("stem.weight", &mut self.stem.weight);
        f("stem.bias", &mut self.stem.bias);
        for (i, b) in self.blocks.iter_mut().enumerate() {
            f(&format!("block{i}.bn1.gamma"), &mut b.bn1.gamma);
            f(&format!("block{i}.bn1.beta"), &mut b.bn1.beta);
            f(&format!("block{i}.conv1.weight"), &mut b.conv1.weight);
            f(&format!("block{i}.conv1.bias"), &mut b.conv1.bias);
            f(&format!("block{i}.bn2.gamma"), &mut b.bn2.gamma);
            f(&format!("block{i}.bn2.beta"), &mut b.bn2.beta);
            f(&format!("block{i}.conv2.weight"), &mut b.conv2.weight);
            f(&format!("block{i}.conv2.bias"), &mut b.conv2.bias);
            if let Some(sc) = &mut b.skip_conv {
                f(&format!("block{i}.skip.weight"), &mut sc.weight);
                f(&format!("block{i}.skip.bias"), &mut sc.bias);
            }
        }
        f("head.weight", &mut self.head.weight);
        f("head.bias", &mut self.head.bias);
    }

    /// BN running statistics, which are state but not learnable.
    pub fn visit_running_stats(&self, f: &mut impl FnMut(&str, &[E])) {
        for (i, b) in self.blocks.iter().enumerate() {
            f(&format!("block{i}.bn1.running_mean"), &b.bn1.running_mean);
            f(&format!("block{i}.bn1.running_var"), &b.bn1.running_var);
            f(&format!("block{i}.bn2.running_mean"), &b.bn2.running_mean);
            f(&format!("block{i}.bn2.running_var"), &b.bn2.running_var);
        }
    }

    pub fn visit_running_stats_mut(&mut self, f: &mut impl FnMut(&str, &mut Vec<E>)) {
        for (i, b) in self.blocks.iter_mut().enumerate() {
            f(
                &format!("block{i}.bn1.running_mean"),
                &mut b.bn1.running_mean,
            );
            f(&format!("block{i}.bn1.running_var"), &mut b.bn1.running_var);
            f(
                &format!("block{i}.bn2.running_mean"),
                &mut b.bn2.running_mean,
            );
            f(&format!("block{i}.bn2.running_var"), &mut b.bn2.running_var);
        }
    }
}

impl<E: Element> ModelGrads<E> {
    /// Gradient arrays in `Model::visit_params` order.
    pub fn flat(&self) -> Vec<&[E]> {
        let mut v: Vec<&[E]> = vec![&self.stem.weight, &self.stem.bias];
        for b in &self.blocks {
            v.push(&b.bn1.gamma);
            v.push(&b.bn1.beta);
            v.push(&b.conv1.weight);
            v.push(&b.conv1.bias);
            v.push(&b.bn2.gamma);
            v.push(&b.bn2.beta);
            v.push(&b.conv2.weight);
            v.push(&b.conv2.bias);
            if let Some(sc) = &b.skip_conv {
                v.push(&sc.weight);
                v.push(&sc.bias);
            }
        }
        v.push(&self.head.weight);
        v.push(&self.head.bias);
        v
    }

    /// Same order as `Model::visit_params`.
    pub fn visit(&self, f: &mut impl FnMut(&str, &[E])) {
        f("stem.weight", &self.stem.weight);
        f("stem.bias", &self.stem.bias);
        for (i, b) in self.blocks.iter().enumerate() {
            f(&format!("block{i}.bn1.gamma"), &b.bn1.gamma);
            f(&format!("block{i}.bn1.beta"), &b.bn1.beta);
            f(&format!("block{i}.conv1.weight"), &b.conv1.weight);
            f(&format!("block{i}.conv1.bias"), &b.conv1.bias);
            f(&format!("block{i}.bn2.gamma"), &b.bn2.gamma);
            f(&format!("block{i}.bn2.beta"), &b.bn2.beta);
            f(&format!("block{i}.conv2.weight"), &b.conv2.weight);
            f(&format!("block{i}.conv2.bias"), &b.conv2.bias);
            if let Some(sc) = &b.skip_conv {
                f(&format!("block{i}.skip.weight"), &sc.weight);
                f(&format!("block{i}.skip.bias"), &sc.bias);
            }
        }
        f("head.weight", &self.head.weight);
        f("head.bias", &self.head.bias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Small configuration for fast unit tests; acceptance runs the real one.
    /// Three blocks so the channel-growth skip conv is exercised.
    fn tiny_config() -> ArchitectureConfig {
        ArchitectureConfig {
            n_residual_blocks: 3,
            kernel_length: 16,
            initial_filters: 8,
            filter_growth: 8,
            subsample_factor: 4,
            dropout_rate: 0.5,
            n_classes: 3,
            input_leads: 2,
            input_window: 256,
        }
    }

    fn params_by_name<E: Element>(m: &Model<E>) -> Vec<(String, Vec<E>)> {
        let mut v = Vec::new();
        m.visit_params(&mut |n, d| v.push((n.to_string(), d.to_vec())));
        v
    }

    #[test]
    fn filter_and_length_plan() {
        let cfg = ArchitectureConfig::default();
        assert_eq!(cfg.block_filters(), vec![64, 64, 128, 128]);
        assert_eq!(cfg.block_lengths(), vec![1024, 256, 64, 16]);
        assert_eq!(cfg.flatten_features(), 2048);
    }

    #[test]
    fn same_seed_same_parameters() {
        let cfg = tiny_config();
        let a = params_by_name(&Model::<f32>::build(&cfg, 7));
        let b = params_by_name(&Model::<f32>::build(&cfg, 7));
        let c = params_by_name(&Model::<f32>::build(&cfg, 8));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_input_gives_half_probability() {
        let cfg = tiny_config();
        let model: Model<f32> = Model::build(&cfg, 3);
        let x = Tensor::zeros(&[2, 2, 256]);
        let p = model.predict(&x).unwrap();
        for &v in p.data() {
            assert!((v - 0.5).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn outputs_strictly_in_unit_interval() {
        let cfg = tiny_config();
        let model: Model<f32> = Model::build(&cfg, 4);
        let mut rng = Rng::new(5);
        let x = Tensor::from_vec(
            &[3, 2, 256],
            (0..3 * 2 * 256).map(|_| rng.next_normal() as f32).collect(),
        );
        let p = model.predict(&x).unwrap();
        assert_eq!(p.shape(), &[3, 3]);
        for &v in p.data() {
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn identical_batch_rows_give_identical_outputs() {
        let cfg = tiny_config();
        let model: Model<f32> = Model::build(&cfg, 6);
        let mut rng = Rng::new(1);
        let one: Vec<f32> = (0..2 * 256).map(|_| rng.next_normal() as f32).collect();
        let mut batch = one.clone();
        batch.extend_from_slice(&one);
        let x = Tensor::from_vec(&[2, 2, 256], batch);
        let p = model.predict(&x).unwrap();
        assert_eq!(p.row(0), p.row(1));
    }

    #[test]
    fn tiny_shape_trace() {
        let cfg = tiny_config();
        let mut model: Model<f32> = Model::build(&cfg, 2);
        let x = Tensor::zeros(&[2, 2, 256]);
        let trace = model.forward_train(&x, 0, false).unwrap();
        assert_eq!(
            trace.shapes(),
            vec![
                vec![2, 8, 256],
                vec![2, 8, 64],
                vec![2, 8, 16],
                vec![2, 16, 4],
                vec![2, 64],
                vec![2, 3],
            ]
        );
    }

    #[test]
    fn param_count_matches_hand_arithmetic_tiny() {
        // stem 8*2*16+8; blocks 0,1 (8->8): bn1 16, conv1 8*8*16+8, bn2 16,
        // conv2 8*8*16+8, no skip conv; block 2 (8->16): bn1 16,
        // conv1 16*8*16+16, bn2 32, conv2 16*16*16+16, skip 16*8*1+16;
        // head 64*3+3.
        let cfg = tiny_config();
        let model: Model<f32> = Model::build(&cfg, 0);
        let per_small_block = 16 + (8 * 8 * 16 + 8) + 16 + (8 * 8 * 16 + 8);
        let expected = (8 * 2 * 16 + 8)
            + 2 * per_small_block
            + (16 + (16 * 8 * 16 + 16) + 32 + (16 * 16 * 16 + 16) + (16 * 8 + 16))
            + (64 * 3 + 3);
        assert_eq!(model.parameter_count(), expected);
    }

    #[test]
    fn grads_visit_order_matches_params() {
        let cfg = tiny_config();
        let mut model: Model<f32> = Model::build(&cfg, 9);
        let x = Tensor::from_vec(&[2, 2, 256], vec![0.1; 2 * 2 * 256]);
        let y = Tensor::from_vec(&[2, 3], vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let (_, grads) = model.loss_and_grads(&x, &y, 11, false).unwrap();
        let mut param_names = Vec::new();
        model.visit_params(&mut |n, _| param_names.push(n.to_string()));
        let mut grad_names = Vec::new();
        grads.visit(&mut |n, _| grad_names.push(n.to_string()));
        assert_eq!(param_names, grad_names);
    }

    #[test]
    fn wrong_input_shape_is_rejected() {
        let cfg = tiny_config();
        let model: Model<f32> = Model::build(&cfg, 1);
        assert!(model.predict(&Tensor::zeros(&[1, 2, 32])).is_err());
        assert!(model.predict(&Tensor::zeros(&[1, 3, 256])).is_err());
    }
}
