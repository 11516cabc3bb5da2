//! Ground-truth consolidation: combine the medical text label with two
//! automatic classifications and interval measurements into an
//! accept/reject/review decision per class.
//!
//! Rule order per class: measurement vetoes first (a candidate whose
//! measurement violates the class threshold is rejected no matter which
//! sources assert it), then agreement acceptance (1a), lone-automatic
//! rejection (1b), medical acceptance (3a), the AF variability rule (3b),
//! and finally review (4). Classes asserted by no source are rejected
//! outright.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::labels::{EcgClass, LabelVector, CLASSES, N_CLASSES};

/// Interval measurements attached to one exam. Missing values are explicit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Measurements {
    /// Beats per minute.
    pub heart_rate: Option<f64>,
    /// Milliseconds.
    pub pr_interval: Option<f64>,
    /// Milliseconds.
    pub qrs_duration: Option<f64>,
    /// Standard deviation of NN (normal-to-normal RR) intervals; the unit is
    /// whatever the configured threshold uses (milliseconds by default).
    pub nn_sd: Option<f64>,
}

impl Measurements {
    pub fn validate(&self) -> bool {
        [
            self.heart_rate,
            self.pr_interval,
            self.qrs_duration,
            self.nn_sd,
        ]
        .iter()
        .all(|m| m.is_none_or(|v| v >= 0.0))
    }
}

/// One label source; an absent source is all-false and flagged.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SourceLabels {
    pub labels: LabelVector,
    pub missing: bool,
}

impl SourceLabels {
    pub fn present(labels: LabelVector) -> Self {
        SourceLabels {
            labels,
            missing: false,
        }
    }

    pub fn absent() -> Self {
        SourceLabels {
            labels: LabelVector::all_false(),
            missing: true,
        }
    }

    fn get(&self, class: EcgClass) -> bool {
        !self.missing && self.labels.get(class)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationInputs {
    pub medical: SourceLabels,
    pub unig: SourceLabels,
    pub minnesota: SourceLabels,
    pub measurements: Measurements,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Accepted,
    Rejected,
    NeedsReview,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Accepted => "accepted",
            Decision::Rejected => "rejected",
            Decision::NeedsReview => "needs_review",
        }
    }
}

/// Which rule decided a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FiredRule {
    /// 1a: expert and at least one automatic classifier agree.
    AgreementAccept,
    /// 1b: exactly one automatic classifier, against the expert and the other.
    LoneAutomaticReject,
    /// 2a: ST with heart rate below 100.
    StHeartRateVeto,
    /// 2b: SB with heart rate above 50.
    SbHeartRateVeto,
    /// 2c: RBBB/LBBB with QRS below 115 ms.
    BbbQrsVeto,
    /// 2d: 1dAVb with PR below 190 ms.
    AvbPrVeto,
    /// 3a: remaining medical diagnoses accepted (RBBB, 1dAVb, SB, ST).
    MedicalAccept,
    /// 3b: medical AF with NN-interval deviation above threshold.
    AfVariabilityAccept,
    /// 4: undecidable, queued for manual review.
    Review,
    /// No source asserts the class.
    AbsenceDefault,
    /// A rule needed a measurement that is missing.
    MissingMeasurement,
}

impl FiredRule {
    pub fn as_str(self) -> &'static str {
        match self {
            FiredRule::AgreementAccept => "1a",
            FiredRule::LoneAutomaticReject => "1b",
            FiredRule::StHeartRateVeto => "2a",
            FiredRule::SbHeartRateVeto => "2b",
            FiredRule::BbbQrsVeto => "2c",
            FiredRule::AvbPrVeto => "2d",
            FiredRule::MedicalAccept => "3a",
            FiredRule::AfVariabilityAccept => "3b",
            FiredRule::Review => "4",
            FiredRule::AbsenceDefault => "absence",
            FiredRule::MissingMeasurement => "missing_measurement",
        }
    }
}

/// Numeric thresholds of the rejection and acceptance rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsolidateConfig {
    /// 2a: reject ST when heart rate is below this.
    pub st_min_heart_rate: f64,
    /// 2b: reject SB when heart rate is above this.
    pub sb_max_heart_rate: f64,
    /// 2c: reject RBBB/LBBB when QRS duration is below this (ms).
    pub bbb_min_qrs: f64,
    /// 2d: reject 1dAVb when PR interval is below this (ms).
    pub avb_min_pr: f64,
    /// 3b: accept medical AF only when nn_sd exceeds this (unit-configurable).
    pub af_min_nn_sd: f64,
}

impl Default for ConsolidateConfig {
    fn default() -> Self {
        ConsolidateConfig {
            st_min_heart_rate: 100.0,
            sb_max_heart_rate: 50.0,
            bbb_min_qrs: 115.0,
            avb_min_pr: 190.0,
            af_min_nn_sd: 646.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsolidationOutcome {
    pub decisions: [(Decision, FiredRule); N_CLASSES],
}

impl ConsolidationOutcome {
    pub fn decision(&self, class: EcgClass) -> Decision {
        self.decisions[class.index()].0
    }

    pub fn fired_rule(&self, class: EcgClass) -> FiredRule {
        self.decisions[class.index()].1
    }

    /// Accepted classes as a label vector.
    pub fn accepted_labels(&self) -> LabelVector {
        let mut v = LabelVector::all_false();
        for (i, (d, _)) in self.decisions.iter().enumerate() {
            if *d == Decision::Accepted {
                v.0[i] = true;
            }
        }
        v
    }
}

type VetoCheck = (FiredRule, Option<f64>, fn(f64, f64) -> bool);

/// The measurement veto applicable to a class, if any: reads the relevant
/// measurement and decides whether it violates the threshold.
fn veto(
    class: EcgClass,
    m: &Measurements,
    cfg: &ConsolidateConfig,
) -> Option<(FiredRule, Option<bool>)> {
    use EcgClass::*;
    let (rule, value, violates): VetoCheck = match class {
        SinusTachycardia => (FiredRule::StHeartRateVeto, m.heart_rate, |v, t| v < t),
        SinusBradycardia => (FiredRule::SbHeartRateVeto, m.heart_rate, |v, t| v > t),
        RightBundleBranchBlock | LeftBundleBranchBlock => {
            (FiredRule::BbbQrsVeto, m.qrs_duration, |v, t| v < t)
        }
        FirstDegreeAvBlock => (FiredRule::AvbPrVeto, m.pr_interval, |v, t| v < t),
        AtrialFibrillation => return None,
    };
    let threshold = match rule {
        FiredRule::StHeartRateVeto => cfg.st_min_heart_rate,
        FiredRule::SbHeartRateVeto => cfg.sb_max_heart_rate,
        FiredRule::BbbQrsVeto => cfg.bbb_min_qrs,
        FiredRule::AvbPrVeto => cfg.avb_min_pr,
        _ => unreachable!(),
    };
    Some((rule, value.map(|v| violates(v, threshold))))
}

/// Consolidate one exam. Deterministic; every class gets exactly one decision.
pub fn consolidate(inputs: &AnnotationInputs, cfg: &ConsolidateConfig) -> ConsolidationOutcome {
    let mut decisions = [(Decision::Rejected, FiredRule::AbsenceDefault); N_CLASSES];
    for class in CLASSES {
        decisions[class.index()] = consolidate_class(class, inputs, cfg);
    }
    ConsolidationOutcome { decisions }
}

fn consolidate_class(
    class: EcgClass,
    inputs: &AnnotationInputs,
    cfg: &ConsolidateConfig,
) -> (Decision, FiredRule) {
    let med = inputs.medical.get(class);
    let unig = inputs.unig.get(class);
    let minnesota = inputs.minnesota.get(class);

    if !(med || unig || minnesota) {
        return (Decision::Rejected, FiredRule::AbsenceDefault);
    }

    // Step 2: measurement vetoes apply to any candidate source.
    if let Some((rule, violates)) = veto(class, &inputs.measurements, cfg) {
        match violates {
            Some(true) => return (Decision::Rejected, rule),
            Some(false) => {}
            None => return (Decision::NeedsReview, FiredRule::MissingMeasurement),
        }
    }

    // Step 1a: expert plus at least one automatic classifier.
    if med && (unig || minnesota) {
        return (Decision::Accepted, FiredRule::AgreementAccept);
    }
    // Step 1b: exactly one automatic classifier against everyone else.
    if !med && (unig ^ minnesota) {
        return (Decision::Rejected, FiredRule::LoneAutomaticReject);
    }

    // Step 3a: remaining medical diagnoses accepted for RBBB, 1dAVb, SB, ST.
    if med
        && matches!(
            class,
            EcgClass::RightBundleBranchBlock
                | EcgClass::FirstDegreeAvBlock
                | EcgClass::SinusBradycardia
                | EcgClass::SinusTachycardia
        )
    {
        return (Decision::Accepted, FiredRule::MedicalAccept);
    }
    // Step 3b: medical AF needs high NN-interval deviation.
    if med && class == EcgClass::AtrialFibrillation {
        return match inputs.measurements.nn_sd {
            Some(v) if v > cfg.af_min_nn_sd => (Decision::Accepted, FiredRule::AfVariabilityAccept),
            Some(_) => (Decision::NeedsReview, FiredRule::Review),
            None => (Decision::NeedsReview, FiredRule::MissingMeasurement),
        };
    }

    // Step 4: both classifiers against the expert, or medical LBBB, etc.
    (Decision::NeedsReview, FiredRule::Review)
}

/// Outcomes for a stream of exams plus aggregate fired-rule counters and the
/// review queue. Input order is preserved.
#[derive(Debug, Clone, Default)]
pub struct BatchOutcome {
    pub rows: Vec<(String, ConsolidationOutcome)>,
    pub rule_counts: BTreeMap<FiredRule, u64>,
}

impl BatchOutcome {
    pub fn review_queue(&self) -> Vec<(String, EcgClass, FiredRule)> {
        let mut q = Vec::new();
        for (exam_id, outcome) in &self.rows {
            for class in CLASSES {
                let (d, r) = outcome.decisions[class.index()];
                if d == Decision::NeedsReview {
                    q.push((exam_id.clone(), class, r));
                }
            }
        }
        q
    }

    /// CSV with one row per exam-class pair: exam_id, class, decision, fired_rule.
    pub fn outcomes_csv(&self) -> String {
        let mut s = String::from("exam_id,class,decision,fired_rule\n");
        for (exam_id, outcome) in &self.rows {
            for class in CLASSES {
                let (d, r) = outcome.decisions[class.index()];
                s.push_str(&format!(
                    "{exam_id},{},{},{}\n",
                    class.as_str(),
                    d.as_str(),
                    r.as_str()
                ));
            }
        }
        s
    }

    pub fn review_queue_csv(&self) -> String {
        let mut s = String::from("exam_id,class,decision,fired_rule\n");
        for (exam_id, class, rule) in self.review_queue() {
            s.push_str(&format!(
                "{exam_id},{},needs_review,{}\n",
                class.as_str(),
                rule.as_str()
            ));
        }
        s
    }

    pub fn rule_counts_csv(&self) -> String {
        let mut s = String::from("fired_rule,count\n");
        for (rule, count) in &self.rule_counts {
            s.push_str(&format!("{},{count}\n", rule.as_str()));
        }
        s
    }
}

pub fn batch_consolidate<'a>(
    stream: impl IntoIterator<Item = (&'a str, &'a AnnotationInputs)>,
    cfg: &ConsolidateConfig,
) -> BatchOutcome {
    let mut out = BatchOutcome::default();
    for (exam_id, inputs) in stream {
        let outcome = consolidate(inputs, cfg);
        for (_, r) in &outcome.decisions {
            *out.rule_counts.entry(*r).or_insert(0) += 1;
        }
        out.rows.push((exam_id.to_string(), outcome));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use EcgClass::*;

    fn labels(classes: &[EcgClass]) -> SourceLabels {
        let mut v = LabelVector::all_false();
        for &c in classes {
            v.set(c, true);
        }
        SourceLabels::present(v)
    }

    fn cfg() -> ConsolidateConfig {
        ConsolidateConfig::default()
    }

    #[test]
    fn st_with_low_heart_rate_is_vetoed_despite_agreement() {
        let inputs = AnnotationInputs {
            medical: labels(&[SinusTachycardia]),
            unig: labels(&[SinusTachycardia]),
            minnesota: SourceLabels::present(LabelVector::all_false()),
            measurements: Measurements {
                heart_rate: Some(95.0),
                ..Default::default()
            },
        };
        let out = consolidate(&inputs, &cfg());
        assert_eq!(out.decision(SinusTachycardia), Decision::Rejected);
        assert_eq!(out.fired_rule(SinusTachycardia), FiredRule::StHeartRateVeto);
    }

    #[test]
    fn agreement_accepts_rbbb_with_wide_qrs() {
        let inputs = AnnotationInputs {
            medical: labels(&[RightBundleBranchBlock]),
            unig: labels(&[RightBundleBranchBlock]),
            minnesota: SourceLabels::present(LabelVector::all_false()),
            measurements: Measurements {
                qrs_duration: Some(140.0),
                ..Default::default()
            },
        };
        let out = consolidate(&inputs, &cfg());
        assert_eq!(out.decision(RightBundleBranchBlock), Decision::Accepted);
        assert_eq!(
            out.fired_rule(RightBundleBranchBlock),
            FiredRule::AgreementAccept
        );
    }

    #[test]
    fn lone_minnesota_af_is_rejected() {
        let inputs = AnnotationInputs {
            medical: SourceLabels::present(LabelVector::all_false()),
            unig: SourceLabels::present(LabelVector::all_false()),
            minnesota: labels(&[AtrialFibrillation]),
            measurements: Measurements::default(),
        };
        let out = consolidate(&inputs, &cfg());
        assert_eq!(out.decision(AtrialFibrillation), Decision::Rejected);
        assert_eq!(
            out.fired_rule(AtrialFibrillation),
            FiredRule::LoneAutomaticReject
        );
    }

    #[test]
    fn medical_af_depends_on_nn_sd() {
        let base = AnnotationInputs {
            medical: labels(&[AtrialFibrillation]),
            unig: SourceLabels::present(LabelVector::all_false()),
            minnesota: SourceLabels::present(LabelVector::all_false()),
            measurements: Measurements {
                nn_sd: Some(700.0),
                ..Default::default()
            },
        };
        let out = consolidate(&base, &cfg());
        assert_eq!(out.decision(AtrialFibrillation), Decision::Accepted);
        assert_eq!(
            out.fired_rule(AtrialFibrillation),
            FiredRule::AfVariabilityAccept
        );

        let mut low = base.clone();
        low.measurements.nn_sd = Some(600.0);
        let out = consolidate(&low, &cfg());
        assert_eq!(out.decision(AtrialFibrillation), Decision::NeedsReview);
        assert_eq!(out.fired_rule(AtrialFibrillation), FiredRule::Review);
    }

    #[test]
    fn both_classifiers_without_expert_go_to_review() {
        let inputs = AnnotationInputs {
            medical: SourceLabels::present(LabelVector::all_false()),
            unig: labels(&[LeftBundleBranchBlock]),
            minnesota: labels(&[LeftBundleBranchBlock]),
            measurements: Measurements {
                qrs_duration: Some(150.0),
                ..Default::default()
            },
        };
        let out = consolidate(&inputs, &cfg());
        assert_eq!(out.decision(LeftBundleBranchBlock), Decision::NeedsReview);
        assert_eq!(out.fired_rule(LeftBundleBranchBlock), FiredRule::Review);
    }

    #[test]
    fn unasserted_classes_reject_by_absence() {
        let inputs = AnnotationInputs::default();
        let out = consolidate(&inputs, &cfg());
        for class in CLASSES {
            assert_eq!(out.decision(class), Decision::Rejected);
            assert_eq!(out.fired_rule(class), FiredRule::AbsenceDefault);
        }
    }

    #[test]
    fn missing_measurement_for_a_needed_veto_goes_to_review() {
        let inputs = AnnotationInputs {
            medical: labels(&[SinusTachycardia]),
            unig: labels(&[SinusTachycardia]),
            minnesota: SourceLabels::present(LabelVector::all_false()),
            measurements: Measurements::default(),
        };
        let out = consolidate(&inputs, &cfg());
        assert_eq!(out.decision(SinusTachycardia), Decision::NeedsReview);
        assert_eq!(
            out.fired_rule(SinusTachycardia),
            FiredRule::MissingMeasurement
        );
    }

    #[test]
    fn medical_only_lbbb_needs_review() {
        // 3a covers RBBB, 1dAVb, SB, ST; LBBB intentionally falls through.
        let inputs = AnnotationInputs {
            medical: labels(&[LeftBundleBranchBlock]),
            unig: SourceLabels::present(LabelVector::all_false()),
            minnesota: SourceLabels::present(LabelVector::all_false()),
            measurements: Measurements {
                qrs_duration: Some(150.0),
                ..Default::default()
            },
        };
        let out = consolidate(&inputs, &cfg());
        assert_eq!(out.decision(LeftBundleBranchBlock), Decision::NeedsReview);
    }

    #[test]
    fn medical_only_sb_accepted_when_rate_is_low() {
        let inputs = AnnotationInputs {
            medical: labels(&[SinusBradycardia]),
            unig: SourceLabels::present(LabelVector::all_false()),
            minnesota: SourceLabels::present(LabelVector::all_false()),
            measurements: Measurements {
                heart_rate: Some(42.0),
                ..Default::default()
            },
        };
        let out = consolidate(&inputs, &cfg());
        assert_eq!(out.decision(SinusBradycardia), Decision::Accepted);
        assert_eq!(out.fired_rule(SinusBradycardia), FiredRule::MedicalAccept);
    }

    #[test]
    fn batch_preserves_order_and_counts_rules() {
        let a = AnnotationInputs {
            medical: labels(&[SinusBradycardia]),
            unig: labels(&[SinusBradycardia]),
            minnesota: SourceLabels::present(LabelVector::all_false()),
            measurements: Measurements {
                heart_rate: Some(40.0),
                ..Default::default()
            },
        };
        let b = AnnotationInputs::default();
        let c = AnnotationInputs {
            medical: SourceLabels::present(LabelVector::all_false()),
            unig: labels(&[AtrialFibrillation]),
            minnesota: SourceLabels::present(LabelVector::all_false()),
            measurements: Measurements::default(),
        };
        let stream = vec![("e1", &a), ("e2", &b), ("e3", &c)];
        let out = batch_consolidate(stream, &cfg());
        assert_eq!(out.rows.len(), 3);
        assert_eq!(out.rows[0].0, "e1");
        assert_eq!(out.rows[2].0, "e3");
        assert_eq!(out.rule_counts[&FiredRule::AgreementAccept], 1);
        assert_eq!(out.rule_counts[&FiredRule::LoneAutomaticReject], 1);
        // 3 exams x 6 classes = 18 decisions, all counted.
        assert_eq!(out.rule_counts.values().sum::<u64>(), 18);
    }

    #[test]
    fn empty_stream_empty_outputs() {
        let out = batch_consolidate(Vec::<(&str, &AnnotationInputs)>::new(), &cfg());
        assert!(out.rows.is_empty());
        assert!(out.rule_counts.is_empty());
        assert_eq!(out.outcomes_csv(), "exam_id,class,decision,fired_rule\n");
    }

    #[test]
    fn flipping_medical_true_never_demotes_accept_to_reject() {
        use crate::rng::Rng;
        let mut rng = Rng::new(99);
        let cfg = cfg();
        for _ in 0..1000 {
            let rand_labels = |rng: &mut Rng| {
                let mut v = LabelVector::all_false();
                for c in CLASSES {
                    v.set(c, rng.next_bool(0.3));
                }
                SourceLabels::present(v)
            };
            let maybe =
                |rng: &mut Rng, lo: f64, hi: f64| rng.next_bool(0.8).then(|| rng.uniform(lo, hi));
            let inputs = AnnotationInputs {
                medical: rand_labels(&mut rng),
                unig: rand_labels(&mut rng),
                minnesota: rand_labels(&mut rng),
                measurements: Measurements {
                    heart_rate: maybe(&mut rng, 30.0, 160.0),
                    pr_interval: maybe(&mut rng, 100.0, 300.0),
                    qrs_duration: maybe(&mut rng, 70.0, 180.0),
                    nn_sd: maybe(&mut rng, 0.0, 1000.0),
                },
            };
            let before = consolidate(&inputs, &cfg);
            let class = CLASSES[rng.next_below(6) as usize];
            if inputs.medical.labels.get(class) {
                continue;
            }
            let mut flipped = inputs.clone();
            flipped.medical.labels.set(class, true);
            let after = consolidate(&flipped, &cfg);
            assert!(
                !(before.decision(class) == Decision::Accepted
                    && after.decision(class) == Decision::Rejected),
                "monotonicity violated for {class}: {inputs:?}"
            );
        }
    }
}
