//! Evaluation statistics: confusion matrices, the four scores, PR curves and
//! thresholds, micro average precision, bootstrap, McNemar, Cohen's kappa.

mod agreement;
mod bootstrap;
mod curve;
mod report;

pub use agreement::{kappa_from_table, kappa_per_class, mcnemar, mcnemar_counts};
pub use bootstrap::{bootstrap, BootstrapResult, ExamOutcome, ScoreQuantiles};
pub use curve::{micro_ap, pr_curve, select_threshold, PrCurve, PrPoint};
pub use report::{
    compare_raters, evaluate, hr_vs_prediction, ClassReport, CompareReport, EvalOptions,
    EvalReport, HrPredictionReport, HrPredictionRow,
};

use serde::{Deserialize, Serialize};

/// Per-class confusion counts; the four cells sum to the exam count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionMatrix {
    pub fn new(true_pos: u64, false_pos: u64, false_neg: u64, true_neg: u64) -> Self {
        ConfusionMatrix {
            true_pos,
            false_pos,
            true_neg,
            false_neg,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn from_predictions(truth: &[bool], predicted: &[bool]) -> Self {
        assert_eq!(truth.len(), predicted.len());
        let mut cm = ConfusionMatrix::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (true, true) => cm.true_pos += 1,
                (false, true) => cm.false_pos += 1,
                (true, false) => cm.false_neg += 1,
                (false, false) => cm.true_neg += 1,
            }
        }
        cm
    }
}

/// Precision, recall (sensitivity), specificity and F1 with totalizing 0/0
/// conventions: precision 0 when nothing is predicted positive, recall 0 when
/// there are no positives, F1 0 when precision + recall is 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
}

pub fn scores(cm: &ConfusionMatrix) -> Scores {
    let tp = cm.true_pos as f64;
    let fp = cm.false_pos as f64;
    let tn = cm.true_neg as f64;
    let fals_n = cm.false_neg as f64;
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fals_n > 0.0 {
        tp / (tp + fals_n)
    } else {
        0.0
    };
    let specificity = if tn + fp > 0.0 { tn / (tn + fp) } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Scores {
        precision,
        recall,
        specificity,
        f1,
    }
}
