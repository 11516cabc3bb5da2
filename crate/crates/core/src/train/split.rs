//! Dataset splitting: random, by patient, or chronological.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Random,
    /// No patient id crosses split boundaries.
    ByPatient,
    /// Acquisition order = manifest order.
    Chronological,
}

impl SplitMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "random" => Some(SplitMode::Random),
            "by_patient" | "by-patient" => Some(SplitMode::ByPatient),
            "chronological" => Some(SplitMode::Chronological),
            _ => None,
        }
    }
}

/// Split exam indices into `fractions.len()` parts. Deterministic in the seed.
pub fn split_dataset(
    patient_ids: &[String],
    mode: SplitMode,
    fractions: &[f64],
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if fractions.is_empty() {
        return Err(Error::InvalidSplit("no fractions given".into()));
    }
    if fractions.iter().any(|&f| f < 0.0) {
        return Err(Error::InvalidSplit("negative fraction".into()));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSplit(format!(
            "fractions sum to {total}, expected 1"
        )));
    }
    let n = patient_ids.len();
    if n == 0 {
        return Err(Error::InvalidSplit("empty dataset".into()));
    }

    // Target sizes: rounded per split, remainder to the last.
    let mut targets: Vec<usize> = fractions
        .iter()
        .map(|f| (f * n as f64).round() as usize)
        .collect();
    let assigned: usize = targets[..targets.len() - 1].iter().sum();
    let last = targets.len() - 1;
    targets[last] = n.saturating_sub(assigned);

    match mode {
        SplitMode::Random => {
            let mut order: Vec<usize> = (0..n).collect();
            Rng::new(derive_seed(seed, "split.random")).shuffle(&mut order);
            Ok(cut(&order, &targets))
        }
        SplitMode::Chronological => {
            let order: Vec<usize> = (0..n).collect();
            Ok(cut(&order, &targets))
        }
        SplitMode::ByPatient => {
            // Group indices by patient in first-seen order, then shuffle groups.
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut by_patient: std::collections::HashMap<&str, usize> =
                std::collections::HashMap::new();
            for (i, pid) in patient_ids.iter().enumerate() {
                match by_patient.get(pid.as_str()) {
                    Some(&g) => groups[g].push(i),
                    None => {
                        by_patient.insert(pid, groups.len());
                        groups.push(vec![i]);
                    }
                }
            }
            Rng::new(derive_seed(seed, "split.by_patient")).shuffle(&mut groups);
            let mut splits: Vec<Vec<usize>> = vec![Vec::new(); targets.len()];
            let mut k = 0;
            for group in groups {
                while k + 1 < targets.len() && splits[k].len() >= targets[k] {
                    k += 1;
                }
                splits[k].extend(group);
            }
            Ok(splits)
        }
    }
}

fn cut(order: &[usize], targets: &[usize]) -> Vec<Vec<usize>> {
    let mut splits = Vec::with_capacity(targets.len());
    let mut start = 0;
    for (i, &t) in targets.iter().enumerate() {
        let end = if i == targets.len() - 1 {
            order.len()
        } else {
            (start + t).min(order.len())
        };
        splits.push(order[start..end].to_vec());
        start = end;
    }
    splits
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patients(spec: &[(&str, usize)]) -> Vec<String> {
        let mut v = Vec::new();
        for &(p, count) in spec {
            for _ in 0..count {
                v.push(p.to_string());
            }
        }
        v
    }

    #[test]
    fn by_patient_never_straddles() {
        let pids = patients(&[("a", 2), ("b", 2), ("c", 2)]);
        let splits = split_dataset(&pids, SplitMode::ByPatient, &[0.5, 0.5], 3).unwrap();
        for split in &splits {
            let mut seen: Vec<&str> = split.iter().map(|&i| pids[i].as_str()).collect();
            seen.sort_unstable();
            seen.dedup();
            for p in seen {
                let total = pids.iter().filter(|q| q.as_str() == p).count();
                let here = split.iter().filter(|&&i| pids[i] == p).count();
                assert_eq!(total, here, "patient {p} straddles splits");
            }
        }
    }

    #[test]
    fn bad_fractions_rejected() {
        let pids = patients(&[("a", 4)]);
        assert!(matches!(
            split_dataset(&pids, SplitMode::Random, &[0.5, 0.4], 0),
            Err(Error::InvalidSplit(_))
        ));
        assert!(split_dataset(&pids, SplitMode::Random, &[], 0).is_err());
    }

    #[test]
    fn random_split_is_reproducible() {
        let pids: Vec<String> = (0..100).map(|i| format!("p{i}")).collect();
        let a = split_dataset(&pids, SplitMode::Random, &[0.8, 0.1, 0.1], 42).unwrap();
        let b = split_dataset(&pids, SplitMode::Random, &[0.8, 0.1, 0.1], 42).unwrap();
        assert_eq!(a, b);
        let c = split_dataset(&pids, SplitMode::Random, &[0.8, 0.1, 0.1], 43).unwrap();
        assert_ne!(a, c);
        assert_eq!(a[0].len(), 80);
        assert_eq!(a[1].len(), 10);
        assert_eq!(a[2].len(), 10);
    }

    #[test]
    fn chronological_preserves_order() {
        let pids: Vec<String> = (0..10).map(|i| format!("p{i}")).collect();
        let splits = split_dataset(&pids, SplitMode::Chronological, &[0.7, 0.3], 0).unwrap();
        assert_eq!(splits[0], (0..7).collect::<Vec<_>>());
        assert_eq!(splits[1], (7..10).collect::<Vec<_>>());
    }

    #[test]
    fn all_indices_covered_exactly_once() {
        let pids = patients(&[("a", 3), ("b", 1), ("c", 4), ("d", 2)]);
        for mode in [
            SplitMode::Random,
            SplitMode::ByPatient,
            SplitMode::Chronological,
        ] {
            let splits = split_dataset(&pids, mode, &[0.5, 0.25, 0.25], 7).unwrap();
            let mut all: Vec<usize> = splits.concat();
            all.sort_unstable();
            assert_eq!(all, (0..pids.len()).collect::<Vec<_>>());
        }
    }
}
