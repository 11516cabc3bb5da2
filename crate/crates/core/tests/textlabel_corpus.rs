//! Label recovery on a template-generated report corpus: with the shipped
//! dictionary and no injected noise, every label is recovered exactly.

use std::path::Path;

use ecgdnn::labels::{EcgClass, LabelVector, CLASSES};
use ecgdnn::rng::Rng;
use ecgdnn::textlabel::{label_report, load_stopwords, RuleBase};

fn data_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

/// Report templates per class, with normal fillers mixed in.
fn templates(class: Option<EcgClass>) -> Vec<&'static str> {
    match class {
        Some(EcgClass::FirstDegreeAvBlock) => vec![
            "bloqueio atrioventricular de primeiro grau",
            "ritmo sinusal com bav de primeiro grau",
            "bav de 1 grau, demais parametros normais",
        ],
        Some(EcgClass::RightBundleBranchBlock) => vec![
            "bloqueio de ramo direito",
            "bloqueio completo de ramo direito do feixe de his",
            "ritmo sinusal, bloqueio de ramo direito",
        ],
        Some(EcgClass::LeftBundleBranchBlock) => vec![
            "bloqueio de ramo esquerdo",
            "bloqueio completo de ramo esquerdo",
        ],
        Some(EcgClass::SinusBradycardia) => {
            vec!["bradicardia sinusal", "bradicardia sinusal importante"]
        }
        Some(EcgClass::AtrialFibrillation) => vec![
            "fibrilacao atrial",
            "fibrilação atrial de alta resposta ventricular",
        ],
        Some(EcgClass::SinusTachycardia) => {
            vec!["taquicardia sinusal", "ritmo de taquicardia sinusal"]
        }
        None => vec![
            "eletrocardiograma dentro dos limites da normalidade",
            "ritmo sinusal normal",
            "exame normal para a idade",
            "sem bloqueio de ramo direito, exame normal",
            "ritmo sinusal, sem alteracoes",
        ],
    }
}

#[test]
fn template_corpus_recovers_labels_exactly() {
    let rulebase = RuleBase::from_json_file(&data_path("rulebase_pt.json")).unwrap();
    let stopwords = load_stopwords(&data_path("stopwords_pt.txt")).unwrap();
    assert!(!rulebase.is_empty());
    assert_ne!(rulebase.version, 0);

    let mut rng = Rng::new(2024);
    let mut per_class_tp = [0usize; 6];
    let mut per_class_fn = [0usize; 6];
    let mut per_class_fp = [0usize; 6];
    let mut n_reports = 0;

    let mut slots: Vec<Option<EcgClass>> = CLASSES.iter().map(|&c| Some(c)).collect();
    slots.push(None);
    for _ in 0..40 {
        for &slot in &slots {
            let options = templates(slot);
            let text = options[rng.next_below(options.len() as u64) as usize];
            let expected = match slot {
                Some(c) => LabelVector::all_false().with(c, true),
                None => LabelVector::all_false(),
            };
            let got = label_report(text, &stopwords, &rulebase);
            n_reports += 1;
            for ci in 0..6 {
                match (expected.0[ci], got.0[ci]) {
                    (true, true) => per_class_tp[ci] += 1,
                    (true, false) => per_class_fn[ci] += 1,
                    (false, true) => per_class_fp[ci] += 1,
                    (false, false) => {}
                }
            }
        }
    }
    assert!(n_reports > 200);
    for (ci, class) in CLASSES.iter().enumerate() {
        assert_eq!(
            (per_class_fp[ci], per_class_fn[ci]),
            (0, 0),
            "class {class}: tp={} fp={} fn={}",
            per_class_tp[ci],
            per_class_fp[ci],
            per_class_fn[ci]
        );
        assert!(per_class_tp[ci] > 0, "class {class} never generated");
    }
}
