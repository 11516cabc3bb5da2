//! Precision-recall curves, average precision, threshold selection.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// One point per distinct score, thresholds strictly decreasing, recall
/// nondecreasing along the list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    /// Step-wise average precision: sum of precision * delta-recall.
    pub fn average_precision(&self) -> f64 {
        let mut ap = 0.0;
        let mut prev_recall = 0.0;
        for p in &self.points {
            ap += p.precision * (p.recall - prev_recall);
            prev_recall = p.recall;
        }
        ap
    }
}

/// Classification rule: predict positive when score >= threshold.
pub fn pr_curve(scores: &[f64], truth: &[bool]) -> PrCurve {
    assert_eq!(scores.len(), truth.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let total_pos = truth.iter().filter(|&&t| t).count() as f64;

    let mut points = Vec::new();
    let mut tp = 0.0f64;
    let mut fp = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // Consume the whole group of equal scores.
        while i < order.len() && scores[order[i]] == threshold {
            if truth[order[i]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if total_pos > 0.0 { tp / total_pos } else { 0.0 };
        points.push(PrPoint {
            threshold,
            precision,
            recall,
        });
    }
    PrCurve { points }
}

/// Pool all class-exam pairs and compute the average precision of the pooled
/// curve.
pub fn micro_ap(scores: &[Vec<f64>], truth: &[Vec<bool>]) -> f64 {
    assert_eq!(scores.len(), truth.len());
    let mut pooled_scores = Vec::new();
    let mut pooled_truth = Vec::new();
    for (s_row, t_row) in scores.iter().zip(truth) {
        assert_eq!(s_row.len(), t_row.len());
        pooled_scores.extend_from_slice(s_row);
        pooled_truth.extend_from_slice(t_row);
    }
    pr_curve(&pooled_scores, &pooled_truth).average_precision()
}

/// Threshold maximizing F1 over the curve points; ties go to the higher
/// threshold (fewer predicted positives).
pub fn select_threshold(curve: &PrCurve) -> f64 {
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_thr = 0.5;
    for p in &curve.points {
        let f1 = if p.precision + p.recall > 0.0 {
            2.0 * p.precision * p.recall / (p.precision + p.recall)
        } else {
            0.0
        };
        // Points arrive in decreasing threshold order; strict improvement
        // keeps the first (highest-threshold) maximum.
        if f1 > best_f1 {
            best_f1 = f1;
            best_thr = p.threshold;
        }
    }
    best_thr
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_scores_have_unit_ap() {
        let scores = [1.0, 1.0, 0.0, 0.0];
        let truth = [true, true, false, false];
        let curve = pr_curve(&scores, &truth);
        assert!((curve.average_precision() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anticorrelated_four_items_match_hand_enumeration() {
        // Scores reversed against truth: positives at the bottom.
        let scores = [0.9, 0.8, 0.2, 0.1];
        let truth = [false, false, true, true];
        let curve = pr_curve(&scores, &truth);
        // Thresholds 0.9, 0.8, 0.2, 0.1:
        // t=0.9: tp0 fp1 -> p=0, r=0
        // t=0.8: tp0 fp2 -> p=0, r=0
        // t=0.2: tp1 fp2 -> p=1/3, r=1/2
        // t=0.1: tp2 fp2 -> p=1/2, r=1
        let expected = [
            (0.9, 0.0, 0.0),
            (0.8, 0.0, 0.0),
            (0.2, 1.0 / 3.0, 0.5),
            (0.1, 0.5, 1.0),
        ];
        assert_eq!(curve.points.len(), 4);
        for (point, &(t, p, r)) in curve.points.iter().zip(&expected) {
            assert_eq!(point.threshold, t);
            assert!((point.precision - p).abs() < 1e-12);
            assert!((point.recall - r).abs() < 1e-12);
        }
        // AP = 1/3 * 0.5 + 1/2 * 0.5 = 5/12.
        assert!((curve.average_precision() - 5.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn recall_nondecreasing_and_thresholds_decreasing() {
        use crate::rng::Rng;
        let mut rng = Rng::new(42);
        let scores: Vec<f64> = (0..100).map(|_| rng.next_f64()).collect();
        let truth: Vec<bool> = (0..100).map(|_| rng.next_bool(0.3)).collect();
        let curve = pr_curve(&scores, &truth);
        for w in curve.points.windows(2) {
            assert!(w[0].threshold > w[1].threshold);
            assert!(w[1].recall >= w[0].recall);
        }
    }

    #[test]
    fn all_equal_scores_give_single_point_threshold() {
        let scores = [0.7, 0.7, 0.7];
        let truth = [true, false, true];
        let curve = pr_curve(&scores, &truth);
        assert_eq!(curve.points.len(), 1);
        assert_eq!(select_threshold(&curve), 0.7);
    }

    #[test]
    fn perfect_separation_picks_upper_bound_of_gap() {
        let scores = [0.9, 0.8, 0.1];
        let truth = [true, true, false];
        let curve = pr_curve(&scores, &truth);
        assert_eq!(select_threshold(&curve), 0.8);
    }
}
