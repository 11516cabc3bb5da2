//! Free-text label extraction: stop-word removal and n-grams, an
//! association-rule classifier (subset match, max confidence), and ordered
//! rule-based class disambiguation.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{EcgClass, LabelVector, N_CLASSES};

/// Lowercase, fold Latin accents, keep alphanumeric runs as tokens.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars().flat_map(|c| c.to_lowercase()) {
        let folded = fold_accent(ch);
        if folded.is_ascii_alphanumeric() {
            current.push(folded);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn fold_accent(c: char) -> char {
    match c {
        'á' | 'à' | 'â' | 'ã' | 'ä' => 'a',
        'é' | 'è' | 'ê' | 'ë' => 'e',
        'í' | 'ì' | 'î' | 'ï' => 'i',
        'ó' | 'ò' | 'ô' | 'õ' | 'ö' => 'o',
        'ú' | 'ù' | 'û' | 'ü' => 'u',
        'ç' => 'c',
        'ñ' => 'n',
        other => other,
    }
}

/// Token n-grams (n in 1..=3) over the post-stop-word token stream, plus the
/// stream itself for positional rules.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NgramSet {
    pub grams: HashSet<String>,
    pub tokens: Vec<String>,
}

impl NgramSet {
    pub fn contains(&self, gram: &str) -> bool {
        self.grams.contains(gram)
    }

    /// Start positions where a (possibly multi-token) gram occurs.
    fn occurrences(&self, gram: &str) -> Vec<usize> {
        let parts: Vec<&str> = gram.split(' ').collect();
        if parts.is_empty() || self.tokens.len() < parts.len() {
            return Vec::new();
        }
        (0..=self.tokens.len() - parts.len())
            .filter(|&i| {
                parts
                    .iter()
                    .enumerate()
                    .all(|(k, p)| self.tokens[i + k] == *p)
            })
            .collect()
    }
}

/// Deterministic tokenization and n-gram extraction.
pub fn extract_ngrams(report_text: &str, stopwords: &HashSet<String>) -> NgramSet {
    let tokens: Vec<String> = normalize_tokens(report_text)
        .into_iter()
        .filter(|t| !stopwords.contains(t))
        .collect();
    let mut grams = HashSet::new();
    for n in 1..=3usize {
        if tokens.len() < n {
            break;
        }
        for window in tokens.windows(n) {
            grams.insert(window.join(" "));
        }
    }
    NgramSet { grams, tokens }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: Vec<String>,
    pub class: String,
    pub confidence: f64,
    #[serde(default)]
    pub support: u64,
}

/// Ordered disambiguation steps, applied first-match per class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DisambiguationRule {
    /// Zero any class whose trigger occurs within `negation_window` tokens
    /// after a negation marker.
    Negation,
    /// When both classes clear the threshold, keep the higher-scoring one;
    /// ties keep the first.
    ExclusivePair(EcgClass, EcgClass),
}

#[derive(Debug, Clone)]
pub struct RuleBase {
    rules: Vec<(Vec<String>, EcgClass, f64, u64)>,
    pub negation_markers: Vec<String>,
    pub disambiguation: Vec<DisambiguationRule>,
    pub threshold: f64,
    pub negation_window: usize,
    /// FNV digest of the dictionary file this base was loaded from.
    pub version: u64,
}

pub fn default_negation_markers() -> Vec<String> {
    [
        "sem",
        "ausencia",
        "nao",
        "negativo",
        "descartado",
        "afastado",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

pub fn default_disambiguation() -> Vec<DisambiguationRule> {
    vec![
        DisambiguationRule::Negation,
        DisambiguationRule::ExclusivePair(EcgClass::SinusBradycardia, EcgClass::SinusTachycardia),
    ]
}

impl RuleBase {
    pub fn new(rules: Vec<Rule>) -> Result<Self> {
        let mut parsed = Vec::with_capacity(rules.len());
        for r in rules {
            if !(0.0..=1.0).contains(&r.confidence) {
                return Err(Error::Config(format!(
                    "rule confidence {} outside [0, 1]",
                    r.confidence
                )));
            }
            let class = EcgClass::parse(&r.class)
                .ok_or_else(|| Error::Config(format!("unknown class {:?}", r.class)))?;
            let empty = HashSet::new();
            let antecedent: Vec<String> = r
                .antecedent
                .iter()
                .map(|g| extract_ngrams(g, &empty).tokens.join(" "))
                .filter(|g| !g.is_empty())
                .collect();
            if antecedent.is_empty() {
                return Err(Error::Config("rule with empty antecedent".into()));
            }
            parsed.push((antecedent, class, r.confidence, r.support));
        }
        Ok(RuleBase {
            rules: parsed,
            negation_markers: default_negation_markers(),
            disambiguation: default_disambiguation(),
            threshold: 0.5,
            negation_window: 3,
            version: 0,
        })
    }

    /// Load from the dictionary file: a JSON array of
    /// `{antecedent: [strings], class, confidence}`.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let rules: Vec<Rule> = serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
            file: path.display().to_string(),
            row: 0,
            message: e.to_string(),
        })?;
        let mut base = Self::new(rules)?;
        base.version = fnv64(&bytes);
        Ok(base)
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }
}

fn fnv64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h = (h ^ b as u64).wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Per-class score: maximum confidence over rules whose antecedent n-grams
/// are all present. Stand-in for the lazy associative classifier with the
/// same interface (n-grams in, class scores out).
pub fn classify_lazy(ngrams: &NgramSet, rulebase: &RuleBase) -> [f64; N_CLASSES] {
    let mut scores = [0.0f64; N_CLASSES];
    for (antecedent, class, confidence, _) in &rulebase.rules {
        if antecedent.iter().all(|g| ngrams.contains(g)) {
            let slot = &mut scores[class.index()];
            if *confidence > *slot {
                *slot = *confidence;
            }
        }
    }
    scores
}

/// Apply the ordered disambiguation rules, then threshold.
pub fn disambiguate(
    scores: &[f64; N_CLASSES],
    ngrams: &NgramSet,
    rulebase: &RuleBase,
) -> LabelVector {
    let mut s = *scores;
    for rule in &rulebase.disambiguation {
        match rule {
            DisambiguationRule::Negation => {
                for (ci, score) in s.iter_mut().enumerate() {
                    if *score > 0.0 && class_is_negated(ci, ngrams, rulebase) {
                        *score = 0.0;
                    }
                }
            }
            DisambiguationRule::ExclusivePair(a, b) => {
                let (ia, ib) = (a.index(), b.index());
                if s[ia] >= rulebase.threshold && s[ib] >= rulebase.threshold {
                    if s[ib] > s[ia] {
                        s[ia] = 0.0;
                    } else {
                        s[ib] = 0.0;
                    }
                }
            }
        }
    }
    let mut labels = LabelVector::all_false();
    for (slot, score) in labels.0.iter_mut().zip(&s) {
        *slot = *score >= rulebase.threshold;
    }
    labels
}

/// True when any trigger of the class is preceded by a negation marker within
/// the window.
fn class_is_negated(class_idx: usize, ngrams: &NgramSet, rulebase: &RuleBase) -> bool {
    let marker_ends: Vec<usize> = rulebase
        .negation_markers
        .iter()
        .flat_map(|m| {
            let len = m.split(' ').count();
            ngrams
                .occurrences(m)
                .into_iter()
                .map(move |start| start + len - 1)
        })
        .collect();
    if marker_ends.is_empty() {
        return false;
    }
    for (antecedent, class, _, _) in &rulebase.rules {
        if class.index() != class_idx {
            continue;
        }
        if !antecedent.iter().all(|g| ngrams.contains(g)) {
            continue;
        }
        for gram in antecedent {
            for pos in ngrams.occurrences(gram) {
                if marker_ends
                    .iter()
                    .any(|&end| pos > end && pos - end <= rulebase.negation_window)
                {
                    return true;
                }
            }
        }
    }
    false
}

/// Full pipeline for one report.
pub fn label_report(
    report_text: &str,
    stopwords: &HashSet<String>,
    rulebase: &RuleBase,
) -> LabelVector {
    let ngrams = extract_ngrams(report_text, stopwords);
    let scores = classify_lazy(&ngrams, rulebase);
    disambiguate(&scores, &ngrams, rulebase)
}

/// Stop-word file: one word per line, UTF-8; normalized on load.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_stopwords(&text))
}

pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines().flat_map(normalize_tokens).collect()
}
