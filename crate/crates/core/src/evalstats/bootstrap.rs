//! Bootstrap resampling of per-exam outcomes.
//!
//! Resamples whole exams (rows) with replacement, preserving within-exam
//! label correlation. Each resample draws from its own stream derived from
//! `(seed, resample_index)`, so results are schedule-independent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{scores, ConfusionMatrix, Scores};
use crate::labels::{LabelVector, N_CLASSES};
use crate::rng::{derive_seed_indexed, Rng};

/// Fixed-threshold outcome for one exam.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExamOutcome {
    pub truth: LabelVector,
    pub pred: LabelVector,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreQuantiles {
    pub mean: f64,
    pub q025: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q975: f64,
}

#[derive(Debug, Clone)]
pub struct BootstrapResult {
    /// One entry per resample: per-class scores.
    pub samples: Vec<[Scores; N_CLASSES]>,
}

impl BootstrapResult {
    /// Quantiles for one class and score selector.
    pub fn quantiles(&self, class_idx: usize, select: impl Fn(&Scores) -> f64) -> ScoreQuantiles {
        let mut values: Vec<f64> = self
            .samples
            .iter()
            .map(|row| select(&row[class_idx]))
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        ScoreQuantiles {
            mean,
            q025: quantile(&values, 0.025),
            q25: quantile(&values, 0.25),
            median: quantile(&values, 0.5),
            q75: quantile(&values, 0.75),
            q975: quantile(&values, 0.975),
        }
    }
}

/// Linear-interpolation quantile of an already sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn class_scores(outcomes: &[&ExamOutcome]) -> [Scores; N_CLASSES] {
    let mut out = [Scores::default(); N_CLASSES];
    for (ci, slot) in out.iter_mut().enumerate() {
        let mut cm = ConfusionMatrix::default();
        for o in outcomes {
            match (o.truth.0[ci], o.pred.0[ci]) {
                (true, true) => cm.true_pos += 1,
                (false, true) => cm.false_pos += 1,
                (true, false) => cm.false_neg += 1,
                (false, false) => cm.true_neg += 1,
            }
        }
        *slot = scores(&cm);
    }
    out
}

/// `n_resamples` bootstrap replicates, each of the original size.
pub fn bootstrap(outcomes: &[ExamOutcome], n_resamples: usize, seed: u64) -> BootstrapResult {
    assert!(!outcomes.is_empty(), "bootstrap needs at least one outcome");
    let n = outcomes.len();
    let samples: Vec<[Scores; N_CLASSES]> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = Rng::new(derive_seed_indexed(seed, "bootstrap.resample", i as u64));
            let resample: Vec<&ExamOutcome> = (0..n)
                .map(|_| &outcomes[rng.next_below(n as u64) as usize])
                .collect();
            class_scores(&resample)
        })
        .collect();
    BootstrapResult { samples }
}
