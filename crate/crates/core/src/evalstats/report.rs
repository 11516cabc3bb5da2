//! Report assembly: per-class evaluation, rater comparison tables, and the
//! heart-rate-vs-prediction analysis.

use serde::{Deserialize, Serialize};

use super::{
    bootstrap, kappa_per_class, mcnemar, micro_ap, pr_curve, scores, select_threshold,
    BootstrapResult, ConfusionMatrix, ExamOutcome, PrCurve, ScoreQuantiles, Scores,
};
use crate::error::{Error, Result};
use crate::labels::{EcgClass, LabelVector, CLASSES, N_CLASSES};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: EcgClass,
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    pub scores: Scores,
    pub curve: PrCurve,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BootstrapBlock {
    pub n_resamples: usize,
    pub seed: u64,
    /// `[class][metric]` with metrics ordered precision, recall, specificity, f1.
    pub quantiles: Vec<Vec<ScoreQuantiles>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassReport>,
    pub micro_ap: f64,
    pub bootstrap: Option<BootstrapBlock>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    /// Fixed per-class thresholds; `None` selects max-F1 thresholds from the
    /// evaluated set itself.
    pub thresholds: Option<[f64; N_CLASSES]>,
    pub bootstrap: Option<(usize, u64)>,
}

pub const METRIC_NAMES: [&str; 4] = ["precision", "recall", "specificity", "f1"];

/// Evaluate per-class probabilities against boolean truth.
pub fn evaluate(
    probabilities: &[[f32; N_CLASSES]],
    truth: &[LabelVector],
    options: &EvalOptions,
) -> Result<EvalReport> {
    if probabilities.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} score rows vs {} truth rows",
            probabilities.len(),
            truth.len()
        )));
    }
    if probabilities.is_empty() {
        return Err(Error::Shape("empty evaluation set".into()));
    }

    let mut per_class = Vec::with_capacity(N_CLASSES);
    let mut pooled_scores: Vec<Vec<f64>> = Vec::with_capacity(probabilities.len());
    let mut pooled_truth: Vec<Vec<bool>> = Vec::with_capacity(truth.len());
    for (p_row, t_row) in probabilities.iter().zip(truth) {
        pooled_scores.push(p_row.iter().map(|&v| v as f64).collect());
        pooled_truth.push(t_row.0.to_vec());
    }

    let mut outcome_rows: Vec<ExamOutcome> = truth
        .iter()
        .map(|&t| ExamOutcome {
            truth: t,
            pred: LabelVector::all_false(),
        })
        .collect();

    for class in CLASSES {
        let ci = class.index();
        let class_scores: Vec<f64> = probabilities.iter().map(|row| row[ci] as f64).collect();
        let class_truth: Vec<bool> = truth.iter().map(|t| t.0[ci]).collect();
        let curve = pr_curve(&class_scores, &class_truth);
        let threshold = match options.thresholds {
            Some(t) => t[ci],
            None => select_threshold(&curve),
        };
        let predicted: Vec<bool> = class_scores.iter().map(|&s| s >= threshold).collect();
        for (row, &p) in outcome_rows.iter_mut().zip(&predicted) {
            row.pred.0[ci] = p;
        }
        let confusion = ConfusionMatrix::from_predictions(&class_truth, &predicted);
        per_class.push(ClassReport {
            class,
            threshold,
            confusion,
            scores: scores(&confusion),
            curve,
        });
    }

    let boot = options.bootstrap.map(|(n, seed)| {
        let result: BootstrapResult = bootstrap(&outcome_rows, n, seed);
        let quantiles = (0..N_CLASSES)
            .map(|ci| {
                vec![
                    result.quantiles(ci, |s| s.precision),
                    result.quantiles(ci, |s| s.recall),
                    result.quantiles(ci, |s| s.specificity),
                    result.quantiles(ci, |s| s.f1),
                ]
            })
            .collect();
        BootstrapBlock {
            n_resamples: n,
            seed,
            quantiles,
        }
    });

    Ok(EvalReport {
        per_class,
        micro_ap: micro_ap(&pooled_scores, &pooled_truth),
        bootstrap: boot,
    })
}

impl EvalReport {
    /// Table-2-style layout: class, precision, recall, specificity, f1, threshold.
    pub fn scores_csv(&self) -> String {
        let mut s = String::from("class,precision,recall,specificity,f1,threshold\n");
        for c in &self.per_class {
            s.push_str(&format!(
                "{},{:.3},{:.3},{:.3},{:.3},{}\n",
                c.class.as_str(),
                c.scores.precision,
                c.scores.recall,
                c.scores.specificity,
                c.scores.f1,
                c.threshold
            ));
        }
        s
    }

    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("class,tp,fp,fn,tn\n");
        for c in &self.per_class {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                c.class.as_str(),
                c.confusion.true_pos,
                c.confusion.false_pos,
                c.confusion.false_neg,
                c.confusion.true_neg
            ));
        }
        s
    }

    pub fn curves_csv(&self) -> String {
        let mut s = String::from("class,threshold,precision,recall\n");
        for c in &self.per_class {
            for p in &c.curve.points {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    c.class.as_str(),
                    p.threshold,
                    p.precision,
                    p.recall
                ));
            }
        }
        s
    }

    pub fn bootstrap_csv(&self) -> Option<String> {
        let block = self.bootstrap.as_ref()?;
        let mut s = String::from("class,metric,mean,q025,q25,median,q75,q975\n");
        for (ci, class) in CLASSES.iter().enumerate() {
            for (mi, name) in METRIC_NAMES.iter().enumerate() {
                let q = &block.quantiles[ci][mi];
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    class.as_str(),
                    name,
                    q.mean,
                    q.q025,
                    q.q25,
                    q.median,
                    q.q75,
                    q.q975
                ));
            }
        }
        Some(s)
    }

    pub fn macro_f1(&self) -> f64 {
        self.per_class.iter().map(|c| c.scores.f1).sum::<f64>() / self.per_class.len() as f64
    }
}

/// Pairwise rater comparison: kappa on labels, McNemar on misclassification
/// relative to the ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub rater_names: Vec<String>,
    /// One row per unordered pair (i < j).
    pub pairs: Vec<(usize, usize)>,
    pub kappa: Vec<[f64; N_CLASSES]>,
    pub mcnemar_p: Vec<[f64; N_CLASSES]>,
}

pub fn compare_raters(
    names: &[String],
    raters: &[Vec<LabelVector>],
    truth: &[LabelVector],
) -> Result<CompareReport> {
    if names.len() != raters.len() || raters.is_empty() {
        return Err(Error::Config("need at least one named rater".into()));
    }
    for r in raters {
        if r.len() != truth.len() {
            return Err(Error::Shape(format!(
                "rater has {} rows, truth has {}",
                r.len(),
                truth.len()
            )));
        }
    }
    let mut pairs = Vec::new();
    let mut kappa = Vec::new();
    let mut mcnemar_p = Vec::new();
    for i in 0..raters.len() {
        for j in i + 1..raters.len() {
            pairs.push((i, j));
            kappa.push(kappa_per_class(&raters[i], &raters[j]));
            let mut row = [1.0f64; N_CLASSES];
            for (ci, slot) in row.iter_mut().enumerate() {
                let errs_i: Vec<bool> = raters[i]
                    .iter()
                    .zip(truth)
                    .map(|(p, t)| p.0[ci] != t.0[ci])
                    .collect();
                let errs_j: Vec<bool> = raters[j]
                    .iter()
                    .zip(truth)
                    .map(|(p, t)| p.0[ci] != t.0[ci])
                    .collect();
                *slot = mcnemar(&errs_i, &errs_j);
            }
            mcnemar_p.push(row);
        }
    }
    Ok(CompareReport {
        rater_names: names.to_vec(),
        pairs,
        kappa,
        mcnemar_p,
    })
}

impl CompareReport {
    fn matrix_csv(&self, values: &[[f64; N_CLASSES]]) -> String {
        let mut s = String::from("pair,1dAVb,RBBB,LBBB,SB,AF,ST\n");
        for ((i, j), row) in self.pairs.iter().zip(values) {
            s.push_str(&format!(
                "{} vs {},{}\n",
                self.rater_names[*i],
                self.rater_names[*j],
                row.iter()
                    .map(|v| format!("{v:.6}"))
                    .collect::<Vec<_>>()
                    .join(",")
            ));
        }
        s
    }

    pub fn kappa_csv(&self) -> String {
        self.matrix_csv(&self.kappa)
    }

    pub fn mcnemar_csv(&self) -> String {
        self.matrix_csv(&self.mcnemar_p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HrPredictionRow {
    pub exam_id: String,
    pub heart_rate: f64,
    pub truth: bool,
    pub predicted: bool,
    pub correct: bool,
}

/// Supplementary-figure-style data: heart rate against prediction correctness
/// for the rate-defined classes, with the consensus boundary annotated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HrPredictionReport {
    pub class: EcgClass,
    pub consensus_bpm: f64,
    pub rows: Vec<HrPredictionRow>,
}

pub fn hr_vs_prediction(
    class: EcgClass,
    exams: &[(String, f64, bool, bool)],
) -> Result<HrPredictionReport> {
    let consensus_bpm = match class {
        EcgClass::SinusBradycardia => 50.0,
        EcgClass::SinusTachycardia => 100.0,
        other => {
            return Err(Error::Config(format!(
                "heart-rate analysis applies to SB or ST, not {other}"
            )))
        }
    };
    let rows = exams
        .iter()
        .map(|(exam_id, hr, truth, pred)| HrPredictionRow {
            exam_id: exam_id.clone(),
            heart_rate: *hr,
            truth: *truth,
            predicted: *pred,
            correct: truth == pred,
        })
        .collect();
    Ok(HrPredictionReport {
        class,
        consensus_bpm,
        rows,
    })
}

impl HrPredictionReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# class={} consensus_bpm={}\nexam_id,heart_rate,truth,predicted,correct\n",
            self.class.as_str(),
            self.consensus_bpm
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.exam_id, r.heart_rate, r.truth as u8, r.predicted as u8, r.correct as u8
            ));
        }
        s
    }
}
