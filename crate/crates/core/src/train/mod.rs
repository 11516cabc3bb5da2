//! Training loop: Adam, plateau decay, epoch-end checkpointing of the best
//! validation model.

mod adam;
mod schedule;
mod split;

pub use adam::{adam_update, AdamParams, AdamState};
pub use schedule::{lr_trace, PlateauScheduler};
pub use split::{split_dataset, SplitMode};

use std::time::Instant;

use crate::error::{Error, Result};
use crate::labels::{LabelVector, N_CLASSES};
use crate::model::{Model, ModelCheckpoint, TrainMeta};
use crate::nn::bce_with_logits;
use crate::rng::{derive_seed, derive_seed_indexed, Rng};
use crate::signal::NetworkInput;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr0: f64,
    pub adam: AdamParams,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub plateau_patience: usize,
    pub lr_decay_factor: f64,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: 0.001,
            adam: AdamParams::default(),
            batch_size: 32,
            max_epochs: 50,
            plateau_patience: 7,
            lr_decay_factor: 0.1,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr0 <= 0.0
            || self.batch_size == 0
            || self.max_epochs == 0
            || self.plateau_patience == 0
        {
            return Err(Error::Config(
                "learning rate, batch size, epochs and patience must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.lr_decay_factor) || self.lr_decay_factor == 0.0 {
            return Err(Error::Config("lr_decay_factor must be in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub rows: Vec<EpochRow>,
    pub best_epoch: usize,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,lr,seconds\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{:.3}\n",
                r.epoch, r.train_loss, r.val_loss, r.lr, r.seconds
            ));
        }
        s
    }
}

/// One preprocessed example.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub exam_id: String,
    pub input: NetworkInput,
    pub target: LabelVector,
}

/// Assemble `[B, 12, 4096]` inputs and `[B, 6]` targets for a batch of indices.
pub fn assemble_batch(examples: &[TrainExample], indices: &[usize]) -> (Tensor<f32>, Tensor<f32>) {
    let b = indices.len();
    let window = examples[indices[0]].input.data.len();
    let n_leads = crate::signal::N_LEADS;
    let mut x = vec![0.0f32; b * window];
    let mut y = vec![0.0f32; b * N_CLASSES];
    for (bi, &i) in indices.iter().enumerate() {
        x[bi * window..(bi + 1) * window].copy_from_slice(&examples[i].input.data);
        y[bi * N_CLASSES..(bi + 1) * N_CLASSES].copy_from_slice(&examples[i].target.as_f32());
    }
    (
        Tensor::from_vec(&[b, n_leads, window / n_leads], x),
        Tensor::from_vec(&[b, N_CLASSES], y),
    )
}

/// Mean BCE loss over a set in inference mode.
pub fn eval_loss(model: &Model<f32>, examples: &[TrainExample], batch_size: usize) -> Result<f64> {
    let indices: Vec<usize> = (0..examples.len()).collect();
    let mut total = 0.0f64;
    let mut entries = 0usize;
    for chunk in indices.chunks(batch_size) {
        let (x, y) = assemble_batch(examples, chunk);
        let logits = model.infer_logits(&x)?;
        let (loss, _) = bce_with_logits(&logits, &y)?;
        total += loss as f64 * (chunk.len() * N_CLASSES) as f64;
        entries += chunk.len() * N_CLASSES;
    }
    Ok(total / entries as f64)
}

/// Inference probabilities for a set, row per example.
pub fn predict_set(
    model: &Model<f32>,
    examples: &[TrainExample],
    batch_size: usize,
) -> Result<Vec<[f32; N_CLASSES]>> {
    let indices: Vec<usize> = (0..examples.len()).collect();
    let mut out = Vec::with_capacity(examples.len());
    for chunk in indices.chunks(batch_size) {
        let (x, _) = assemble_batch(examples, chunk);
        let p = model.predict(&x)?;
        for bi in 0..chunk.len() {
            let mut row = [0.0f32; N_CLASSES];
            row.copy_from_slice(p.row(bi));
            out.push(row);
        }
    }
    Ok(out)
}

/// Progress callback invoked after each epoch; return `false` to stop early.
pub type EpochCallback<'a> = dyn FnMut(&Model<f32>, &EpochRow) -> bool + 'a;

/// Optimize the model: seeded shuffling and dropout, Adam updates, plateau
/// decay, and epoch-end snapshots keeping the minimum-validation-loss model.
pub fn fit(
    model: &mut Model<f32>,
    train: &[TrainExample],
    val: &[TrainExample],
    config: &TrainConfig,
) -> Result<(ModelCheckpoint, TrainLog)> {
    fit_with_callback(model, train, val, config, None)
}

pub fn fit_with_callback(
    model: &mut Model<f32>,
    train: &[TrainExample],
    val: &[TrainExample],
    config: &TrainConfig,
    mut callback: Option<&mut EpochCallback<'_>>,
) -> Result<(ModelCheckpoint, TrainLog)> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidSplit("empty train or validation set".into()));
    }
    config.validate()?;
    let shuffle_base = derive_seed(config.rng_seed, "train.shuffle");
    let dropout_base = derive_seed(config.rng_seed, "train.dropout");

    let mut adam = AdamState::new();
    let mut sched = PlateauScheduler::new(config.plateau_patience, config.lr_decay_factor);
    let mut lr = config.lr0;
    let mut log = TrainLog::default();
    let mut best_val = f64::INFINITY;
    let mut best_model: Option<Model<f32>> = None;
    let mut best_epoch = 0usize;
    let mut global_step = 0u64;

    for epoch in 1..=config.max_epochs {
        let start = Instant::now();
        let mut order: Vec<usize> = (0..train.len()).collect();
        Rng::new(derive_seed_indexed(shuffle_base, "epoch", epoch as u64)).shuffle(&mut order);

        let mut loss_sum = 0.0f64;
        let mut steps = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let (x, y) = assemble_batch(train, chunk);
            let (loss, grads) = model.loss_and_grads(
                &x,
                &y,
                derive_seed_indexed(dropout_base, "step", global_step),
                true,
            )?;
            if !loss.is_finite() {
                return Err(Error::Shape(format!(
                    "non-finite training loss at epoch {epoch}"
                )));
            }
            adam.step(model, &grads, lr, &config.adam);
            loss_sum += loss as f64;
            steps += 1;
            global_step += 1;
        }
        let train_loss = loss_sum / steps as f64;
        let val_loss = eval_loss(model, val, config.batch_size)?;

        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_model = Some(model.clone());
        }

        let row = EpochRow {
            epoch,
            train_loss,
            val_loss,
            lr,
            seconds: start.elapsed().as_secs_f64(),
        };
        lr = sched.observe(val_loss, lr);
        let keep_going = match callback.as_deref_mut() {
            Some(cb) => cb(model, &row),
            None => true,
        };
        log.rows.push(row);
        if !keep_going {
            break;
        }
    }

    log.best_epoch = best_epoch;
    let checkpoint = ModelCheckpoint::new(
        best_model.expect("at least one epoch ran"),
        [0.5; N_CLASSES],
        TrainMeta {
            best_epoch,
            val_loss: best_val,
            rng_seed: config.rng_seed,
        },
    );
    Ok((checkpoint, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::EcgClass;
    use crate::model::ArchitectureConfig;
    use crate::signal::NetworkInput;

    fn tiny_arch() -> ArchitectureConfig {
        ArchitectureConfig {
            n_residual_blocks: 1,
            kernel_length: 8,
            initial_filters: 4,
            filter_growth: 4,
            subsample_factor: 4,
            dropout_rate: 0.0,
            n_classes: 6,
            input_leads: 12,
            input_window: 64,
        }
    }

    fn toy_example(id: usize, positive: bool) -> TrainExample {
        let window = 64;
        let mut data = vec![0.0f32; 12 * window];
        if positive {
            for lead in 0..12 {
                for t in 20..44 {
                    data[lead * window + t] = 1.0;
                }
            }
        }
        let mut target = LabelVector::all_false();
        target.set(EcgClass::SinusBradycardia, positive);
        TrainExample {
            exam_id: format!("e{id}"),
            input: NetworkInput {
                data,
                pad_left: 0,
                pad_right: 0,
                truncated: false,
            },
            target,
        }
    }

    #[test]
    fn empty_split_is_rejected() {
        let cfg = tiny_arch();
        let mut model = Model::build(&cfg, 0);
        let examples = vec![toy_example(0, true)];
        let tc = TrainConfig {
            max_epochs: 1,
            ..TrainConfig::default()
        };
        assert!(matches!(
            fit(&mut model, &[], &examples, &tc),
            Err(Error::InvalidSplit(_))
        ));
        assert!(matches!(
            fit(&mut model, &examples, &[], &tc),
            Err(Error::InvalidSplit(_))
        ));
    }

    #[test]
    fn same_seed_reproduces_the_training_trajectory() {
        let cfg = tiny_arch();
        let examples: Vec<TrainExample> = (0..8).map(|i| toy_example(i, i % 2 == 0)).collect();
        let tc = TrainConfig {
            batch_size: 4,
            max_epochs: 3,
            rng_seed: 5,
            ..TrainConfig::default()
        };
        let mut m1 = Model::build(&cfg, 1);
        let (_, log1) = fit(&mut m1, &examples, &examples, &tc).unwrap();
        let mut m2 = Model::build(&cfg, 1);
        let (_, log2) = fit(&mut m2, &examples, &examples, &tc).unwrap();
        // Wall time varies; the trajectory must not.
        let key = |log: &TrainLog| {
            log.rows
                .iter()
                .map(|r| (r.train_loss, r.val_loss, r.lr))
                .collect::<Vec<_>>()
        };
        assert_eq!(key(&log1), key(&log2));
        assert_eq!(log1.best_epoch, log2.best_epoch);
    }

    #[test]
    fn checkpoint_is_the_argmin_validation_epoch() {
        let cfg = tiny_arch();
        let examples: Vec<TrainExample> = (0..8).map(|i| toy_example(i, i % 2 == 0)).collect();
        let tc = TrainConfig {
            batch_size: 4,
            max_epochs: 5,
            rng_seed: 2,
            ..TrainConfig::default()
        };
        let mut model = Model::build(&cfg, 3);
        let (cp, log) = fit(&mut model, &examples, &examples, &tc).unwrap();
        let argmin = log
            .rows
            .iter()
            .min_by(|a, b| a.val_loss.partial_cmp(&b.val_loss).unwrap())
            .unwrap()
            .epoch;
        assert_eq!(log.best_epoch, argmin);
        assert_eq!(cp.metadata.best_epoch, argmin);
    }

    #[test]
    fn training_reduces_loss_on_separable_toy_data() {
        let cfg = tiny_arch();
        let examples: Vec<TrainExample> = (0..16).map(|i| toy_example(i, i % 2 == 0)).collect();
        let tc = TrainConfig {
            batch_size: 8,
            max_epochs: 20,
            rng_seed: 4,
            ..TrainConfig::default()
        };
        let mut model = Model::build(&cfg, 4);
        let (_, log) = fit(&mut model, &examples, &examples, &tc).unwrap();
        let first = log.rows.first().unwrap().train_loss;
        let last = log.rows.last().unwrap().train_loss;
        assert!(last < first * 0.5, "loss {first} -> {last}");
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = tiny_arch();
        let mut model = Model::build(&cfg, 0);
        let examples = vec![toy_example(0, true)];
        let tc = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            fit(&mut model, &examples, &examples, &tc),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn logged_lr_matches_the_schedule_oracle() {
        let cfg = tiny_arch();
        let examples: Vec<TrainExample> = (0..8).map(|i| toy_example(i, i % 2 == 0)).collect();
        let tc = TrainConfig {
            batch_size: 4,
            max_epochs: 12,
            plateau_patience: 2,
            rng_seed: 6,
            ..TrainConfig::default()
        };
        let mut model = Model::build(&cfg, 5);
        let (_, log) = fit(&mut model, &examples, &examples, &tc).unwrap();
        let val_losses: Vec<f64> = log.rows.iter().map(|r| r.val_loss).collect();
        let expected = lr_trace(&val_losses, tc.lr0, tc.plateau_patience, tc.lr_decay_factor);
        let logged: Vec<f64> = log.rows.iter().map(|r| r.lr).collect();
        assert_eq!(logged, expected);
    }

    #[test]
    fn log_csv_has_header_and_rows() {
        let log = TrainLog {
            rows: vec![EpochRow {
                epoch: 1,
                train_loss: 0.5,
                val_loss: 0.6,
                lr: 0.001,
                seconds: 1.25,
            }],
            best_epoch: 1,
        };
        let csv = log.to_csv();
        assert!(csv.starts_with("epoch,train_loss,val_loss,lr,seconds\n"));
        assert!(csv.contains("1,0.5,0.6,0.001,1.250"));
    }
}
