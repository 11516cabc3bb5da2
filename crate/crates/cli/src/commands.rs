//! Command implementations.

use std::collections::HashMap;
use std::path::Path;

use ecgdnn::consolidate::{batch_consolidate, AnnotationInputs, Measurements, SourceLabels};
use ecgdnn::dataset;
use ecgdnn::error::{Error, Result};
use ecgdnn::evalstats::{compare_raters, evaluate, hr_vs_prediction, EvalOptions};
use ecgdnn::labels::{EcgClass, LabelVector, CLASSES, N_CLASSES};
use ecgdnn::model::{load as load_checkpoint, save as save_checkpoint, Model};
use ecgdnn::rng::derive_seed;
use ecgdnn::signal::preprocess;
use ecgdnn::synth::generate_corpus;
use ecgdnn::textlabel::{label_report, load_stopwords, RuleBase};
use ecgdnn::train::{fit, predict_set, split_dataset, SplitMode, TrainExample};

use crate::config::RunConfig;
use crate::manifest::RunManifest;

fn parse_prevalence(spec: Option<&str>) -> Result<Vec<(EcgClass, f64)>> {
    match spec {
        None => Ok(CLASSES.iter().map(|&c| (c, 0.12)).collect()),
        Some(s) => {
            let mut out = Vec::new();
            for part in s.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                let (name, frac) = part
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("bad prevalence item {part:?}")))?;
                let class = EcgClass::parse(name.trim())
                    .ok_or_else(|| Error::Config(format!("unknown class {name:?}")))?;
                let frac: f64 = frac
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad fraction {frac:?}")))?;
                if !(0.0..=1.0).contains(&frac) {
                    return Err(Error::Config(format!("fraction {frac} outside [0, 1]")));
                }
                out.push((class, frac));
            }
            if out.iter().map(|&(_, f)| f).sum::<f64>() > 1.0 + 1e-9 {
                return Err(Error::Config("prevalence fractions exceed 1".into()));
            }
            Ok(out)
        }
    }
}

pub fn cmd_synth(
    n: usize,
    prevalence: Option<&str>,
    seed: u64,
    out: &Path,
    config: &RunConfig,
) -> Result<()> {
    let prevalence = parse_prevalence(prevalence)?;
    let corpus = generate_corpus(
        n,
        &prevalence,
        config.synth_noise_std,
        config.synth_sampling_rate,
        seed,
    );
    std::fs::create_dir_all(out)?;
    let records: Vec<_> = corpus.iter().map(|sr| sr.record.clone()).collect();
    dataset::write_dataset(out, &records)?;
    let labels: Vec<(String, LabelVector)> = corpus
        .iter()
        .map(|sr| (sr.record.exam_id.clone(), sr.labels))
        .collect();
    dataset::write_labels_csv(&out.join("labels.csv"), &labels)?;
    let measurements: Vec<(String, Measurements)> = corpus
        .iter()
        .map(|sr| (sr.record.exam_id.clone(), sr.measurements))
        .collect();
    dataset::write_measurements_csv(&out.join("measurements.csv"), &measurements)?;
    RunManifest {
        command: "synth",
        seed,
        config: config.effective(),
        inputs: vec![],
    }
    .write(out)
}

fn load_examples(dataset_dir: &Path, labels_path: Option<&Path>) -> Result<Vec<TrainExample>> {
    let records = dataset::read_dataset(dataset_dir)?;
    let labels_path = labels_path
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| dataset_dir.join("labels.csv"));
    let labels = dataset::read_labels_csv(&labels_path)?;
    let by_id: HashMap<&str, LabelVector> =
        labels.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let mut examples = Vec::with_capacity(records.len());
    for record in &records {
        let target = *by_id
            .get(record.exam_id.as_str())
            .ok_or_else(|| Error::Config(format!("exam {} has no label row", record.exam_id)))?;
        examples.push(TrainExample {
            exam_id: record.exam_id.clone(),
            input: preprocess(record)?,
            target,
        });
    }
    Ok(examples)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_train(
    dataset_dir: &Path,
    labels_path: Option<&Path>,
    out: &Path,
    split: &str,
    fractions: &str,
    train_equals_val: bool,
    seed: u64,
    config: &RunConfig,
) -> Result<()> {
    let mode = SplitMode::parse(split)
        .ok_or_else(|| Error::Config(format!("unknown split mode {split:?}")))?;
    let examples = load_examples(dataset_dir, labels_path)?;
    let records = dataset::read_manifest(dataset_dir)?;
    std::fs::create_dir_all(out)?;

    let (train_idx, val_idx, assignments) = if train_equals_val {
        let all: Vec<usize> = (0..examples.len()).collect();
        let assignments: Vec<(String, usize)> = examples
            .iter()
            .map(|e| (e.exam_id.clone(), 0usize))
            .collect();
        (all.clone(), all, assignments)
    } else {
        let fracs: Vec<f64> = fractions
            .split(',')
            .map(|f| {
                f.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad fraction {f:?}")))
            })
            .collect::<Result<_>>()?;
        if fracs.len() < 2 {
            return Err(Error::Config(
                "need at least train and validation fractions".into(),
            ));
        }
        let patient_ids: Vec<String> = records.iter().map(|r| r.patient_id.clone()).collect();
        let splits = split_dataset(&patient_ids, mode, &fracs, seed)?;
        let mut assignments = Vec::new();
        for (si, split) in splits.iter().enumerate() {
            for &i in split {
                assignments.push((examples[i].exam_id.clone(), si));
            }
        }
        (splits[0].clone(), splits[1].clone(), assignments)
    };

    {
        let mut s = String::from("exam_id,split\n");
        for (id, si) in &assignments {
            s.push_str(&format!("{id},{si}\n"));
        }
        std::fs::write(out.join("split_assignments.csv"), s)?;
    }

    let train_set: Vec<TrainExample> = train_idx.iter().map(|&i| examples[i].clone()).collect();
    let val_set: Vec<TrainExample> = val_idx.iter().map(|&i| examples[i].clone()).collect();

    let mut train_config = config.train.clone();
    train_config.rng_seed = seed;
    let mut model = Model::build(&config.model, derive_seed(seed, "train.init"));
    let (mut checkpoint, log) = fit(&mut model, &train_set, &val_set, &train_config)?;

    // Decision thresholds: max F1 over the validation predictions.
    let val_probs = predict_set(&checkpoint.model, &val_set, train_config.batch_size)?;
    let val_truth: Vec<LabelVector> = val_set.iter().map(|e| e.target).collect();
    let report = evaluate(&val_probs, &val_truth, &EvalOptions::default())?;
    for (ci, class_report) in report.per_class.iter().enumerate() {
        checkpoint.thresholds[ci] = class_report.threshold as f32;
    }

    save_checkpoint(&checkpoint, &out.join("checkpoint.ecgdnn"))?;
    std::fs::write(out.join("trainlog.csv"), log.to_csv())?;
    RunManifest {
        command: "train",
        seed,
        config: config.effective(),
        inputs: vec![dataset_dir.to_path_buf()],
    }
    .write(out)
}

pub fn cmd_predict(
    checkpoint_path: &Path,
    dataset_dir: &Path,
    out: &Path,
    seed: u64,
    config: &RunConfig,
) -> Result<()> {
    let checkpoint = load_checkpoint(checkpoint_path)?;
    let records = dataset::read_dataset(dataset_dir)?;
    let mut examples = Vec::with_capacity(records.len());
    for record in &records {
        examples.push(TrainExample {
            exam_id: record.exam_id.clone(),
            input: preprocess(record)?,
            target: LabelVector::all_false(),
        });
    }
    let probs = predict_set(&checkpoint.model, &examples, 32)?;
    let rows: Vec<(String, [f32; N_CLASSES])> = examples
        .iter()
        .zip(&probs)
        .map(|(e, p)| (e.exam_id.clone(), *p))
        .collect();
    std::fs::create_dir_all(out)?;
    dataset::write_scores_csv(&out.join("scores.csv"), &rows)?;
    RunManifest {
        command: "predict",
        seed,
        config: config.effective(),
        inputs: vec![checkpoint_path.to_path_buf(), dataset_dir.to_path_buf()],
    }
    .write(out)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_evaluate(
    scores_path: &Path,
    truth_path: &Path,
    out: &Path,
    bootstrap_n: usize,
    thresholds: Option<&str>,
    measurements_path: Option<&Path>,
    seed: u64,
    config: &RunConfig,
) -> Result<()> {
    let score_rows = dataset::read_scores_csv(scores_path)?;
    let truth_rows = dataset::read_labels_csv(truth_path)?;
    let truth_by_id: HashMap<&str, LabelVector> =
        truth_rows.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let mut probs = Vec::with_capacity(score_rows.len());
    let mut truth = Vec::with_capacity(score_rows.len());
    for (id, p) in &score_rows {
        let t = truth_by_id
            .get(id.as_str())
            .ok_or_else(|| Error::Config(format!("exam {id} missing from truth file")))?;
        probs.push(*p);
        truth.push(*t);
    }

    let fixed_thresholds = match thresholds {
        None => None,
        Some(s) => {
            let values: Vec<f64> = s
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad threshold {t:?}")))
                })
                .collect::<Result<_>>()?;
            if values.len() != N_CLASSES {
                return Err(Error::Config(format!(
                    "expected {N_CLASSES} thresholds, got {}",
                    values.len()
                )));
            }
            let mut arr = [0.0f64; N_CLASSES];
            arr.copy_from_slice(&values);
            Some(arr)
        }
    };

    let options = EvalOptions {
        thresholds: fixed_thresholds,
        bootstrap: (bootstrap_n > 0)
            .then(|| (bootstrap_n, derive_seed(seed, "evaluate.bootstrap"))),
    };
    let report = evaluate(&probs, &truth, &options)?;

    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("report.json"), serde_json::to_vec_pretty(&report)?)?;
    std::fs::write(out.join("scores_table.csv"), report.scores_csv())?;
    std::fs::write(out.join("confusion.csv"), report.confusion_csv())?;
    std::fs::write(out.join("pr_curves.csv"), report.curves_csv())?;
    if let Some(csv) = report.bootstrap_csv() {
        std::fs::write(out.join("bootstrap.csv"), csv)?;
    }

    if let Some(m_path) = measurements_path {
        let measurements = dataset::read_measurements_csv(m_path)?;
        let hr_by_id: HashMap<&str, f64> = measurements
            .iter()
            .filter_map(|(id, m)| m.heart_rate.map(|hr| (id.as_str(), hr)))
            .collect();
        for class in [EcgClass::SinusBradycardia, EcgClass::SinusTachycardia] {
            let ci = class.index();
            let threshold = report.per_class[ci].threshold;
            let mut exams = Vec::new();
            for ((id, p), t) in score_rows.iter().zip(&truth) {
                if let Some(&hr) = hr_by_id.get(id.as_str()) {
                    exams.push((id.clone(), hr, t.0[ci], p[ci] as f64 >= threshold));
                }
            }
            let hr_report = hr_vs_prediction(class, &exams)?;
            std::fs::write(
                out.join(format!("hr_vs_prediction_{}.csv", class.as_str())),
                hr_report.to_csv(),
            )?;
        }
    }

    let mut inputs = vec![scores_path.to_path_buf(), truth_path.to_path_buf()];
    if let Some(m) = measurements_path {
        inputs.push(m.to_path_buf());
    }
    RunManifest {
        command: "evaluate",
        seed,
        config: config.effective(),
        inputs,
    }
    .write(out)
}

pub fn cmd_consolidate(
    medical: Option<&Path>,
    unig: Option<&Path>,
    minnesota: Option<&Path>,
    measurements: Option<&Path>,
    out: &Path,
    seed: u64,
    config: &RunConfig,
) -> Result<()> {
    let read_source = |path: Option<&Path>| -> Result<Option<Vec<(String, LabelVector)>>> {
        path.map(dataset::read_labels_csv).transpose()
    };
    let medical_rows = read_source(medical)?;
    let unig_rows = read_source(unig)?;
    let minnesota_rows = read_source(minnesota)?;
    let measurement_rows = measurements
        .map(dataset::read_measurements_csv)
        .transpose()?;

    // Exam order: first appearance across medical, unig, minnesota, measurements.
    let mut order: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut absorb_ids = |ids: &[String]| {
        for id in ids {
            if seen.insert(id.clone()) {
                order.push(id.clone());
            }
        }
    };
    for rows in [&medical_rows, &unig_rows, &minnesota_rows]
        .into_iter()
        .flatten()
    {
        absorb_ids(&rows.iter().map(|(id, _)| id.clone()).collect::<Vec<_>>());
    }
    if let Some(rows) = &measurement_rows {
        absorb_ids(&rows.iter().map(|(id, _)| id.clone()).collect::<Vec<_>>());
    }

    let to_map = |rows: &Option<Vec<(String, LabelVector)>>| -> HashMap<String, LabelVector> {
        rows.as_ref()
            .map(|r| r.iter().cloned().collect())
            .unwrap_or_default()
    };
    let medical_map = to_map(&medical_rows);
    let unig_map = to_map(&unig_rows);
    let minnesota_map = to_map(&minnesota_rows);
    let measurement_map: HashMap<String, Measurements> = measurement_rows
        .as_ref()
        .map(|r| r.iter().cloned().collect())
        .unwrap_or_default();

    let source_for = |present: bool, map: &HashMap<String, LabelVector>, id: &str| {
        if present {
            SourceLabels::present(map.get(id).copied().unwrap_or_else(LabelVector::all_false))
        } else {
            SourceLabels::absent()
        }
    };

    let inputs: Vec<(String, AnnotationInputs)> = order
        .iter()
        .map(|id| {
            (
                id.clone(),
                AnnotationInputs {
                    medical: source_for(medical_rows.is_some(), &medical_map, id),
                    unig: source_for(unig_rows.is_some(), &unig_map, id),
                    minnesota: source_for(minnesota_rows.is_some(), &minnesota_map, id),
                    measurements: measurement_map.get(id).copied().unwrap_or_default(),
                },
            )
        })
        .collect();

    let batch = batch_consolidate(
        inputs.iter().map(|(id, inp)| (id.as_str(), inp)),
        &config.consolidate,
    );
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("outcomes.csv"), batch.outcomes_csv())?;
    std::fs::write(out.join("review_queue.csv"), batch.review_queue_csv())?;
    std::fs::write(out.join("rule_counts.csv"), batch.rule_counts_csv())?;

    let mut manifest_inputs = Vec::new();
    for p in [medical, unig, minnesota, measurements]
        .into_iter()
        .flatten()
    {
        manifest_inputs.push(p.to_path_buf());
    }
    RunManifest {
        command: "consolidate",
        seed,
        config: config.effective(),
        inputs: manifest_inputs,
    }
    .write(out)
}

pub fn cmd_textlabel(
    reports: &Path,
    rulebase_path: &Path,
    stopwords_path: &Path,
    out: &Path,
    seed: u64,
    config: &RunConfig,
) -> Result<()> {
    let mut rulebase = RuleBase::from_json_file(rulebase_path)?;
    rulebase.threshold = config.textlabel_threshold;
    rulebase.negation_window = config.textlabel_negation_window;
    let stopwords = load_stopwords(stopwords_path)?;
    let report_rows = dataset::read_reports_tsv(reports)?;
    let labels: Vec<(String, LabelVector)> = report_rows
        .iter()
        .map(|(id, text)| (id.clone(), label_report(text, &stopwords, &rulebase)))
        .collect();
    std::fs::create_dir_all(out)?;
    dataset::write_labels_csv(&out.join("labels.csv"), &labels)?;
    RunManifest {
        command: "textlabel",
        seed,
        config: config.effective(),
        inputs: vec![
            reports.to_path_buf(),
            rulebase_path.to_path_buf(),
            stopwords_path.to_path_buf(),
        ],
    }
    .write(out)
}

pub fn cmd_compare(
    truth_path: &Path,
    rater_paths: &[std::path::PathBuf],
    out: &Path,
    seed: u64,
    config: &RunConfig,
) -> Result<()> {
    let truth_rows = dataset::read_labels_csv(truth_path)?;
    let truth: Vec<LabelVector> = truth_rows.iter().map(|(_, l)| *l).collect();
    let mut names = Vec::new();
    let mut raters = Vec::new();
    for path in rater_paths {
        let rows = dataset::read_labels_csv(path)?;
        let by_id: HashMap<&str, LabelVector> =
            rows.iter().map(|(id, l)| (id.as_str(), *l)).collect();
        let mut aligned = Vec::with_capacity(truth_rows.len());
        for (id, _) in &truth_rows {
            let l = by_id.get(id.as_str()).ok_or_else(|| {
                Error::Config(format!("exam {id} missing from rater {}", path.display()))
            })?;
            aligned.push(*l);
        }
        names.push(
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        );
        raters.push(aligned);
    }
    let report = compare_raters(&names, &raters, &truth)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("kappa.csv"), report.kappa_csv())?;
    std::fs::write(out.join("mcnemar.csv"), report.mcnemar_csv())?;
    std::fs::write(
        out.join("compare.json"),
        serde_json::to_vec_pretty(&report)?,
    )?;

    let mut inputs = vec![truth_path.to_path_buf()];
    inputs.extend(rater_paths.iter().cloned());
    RunManifest {
        command: "compare",
        seed,
        config: config.effective(),
        inputs,
    }
    .write(out)
}
