//! On-disk dataset formats: `manifest.json` plus a binary tracings file
//! (little-endian f32, record-major, lead-major within record), and the CSV
//! sidecars for labels, probabilities, measurements and reports.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::consolidate::Measurements;
use crate::error::{Error, Result};
use crate::labels::{LabelVector, N_CLASSES};
use crate::signal::{EcgRecord, Sex, N_LEADS};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACINGS_FILE: &str = "tracings.bin";
pub const LABELS_HEADER: &str = "exam_id,1dAVb,RBBB,LBBB,SB,AF,ST";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub exam_id: String,
    pub patient_id: String,
    pub sampling_rate: u32,
    pub n_samples: usize,
    pub age: u32,
    pub sex: Sex,
    pub tracing_file: String,
    pub byte_offset: u64,
}

/// Write records as `manifest.json` + `tracings.bin` into `dir`.
pub fn write_dataset(dir: &Path, records: &[EcgRecord]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = Vec::with_capacity(records.len());
    let tracings_path = dir.join(TRACINGS_FILE);
    let mut w = BufWriter::new(File::create(&tracings_path)?);
    let mut offset = 0u64;
    for record in records {
        record.validate()?;
        manifest.push(ManifestEntry {
            exam_id: record.exam_id.clone(),
            patient_id: record.patient_id.clone(),
            sampling_rate: record.sampling_rate,
            n_samples: record.n_samples(),
            age: record.age,
            sex: record.sex,
            tracing_file: TRACINGS_FILE.to_string(),
            byte_offset: offset,
        });
        for lead in &record.leads {
            for v in lead {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        offset += (record.n_samples() * N_LEADS * 4) as u64;
    }
    w.flush()?;
    let json = serde_json::to_vec_pretty(&manifest)?;
    std::fs::write(dir.join(MANIFEST_FILE), json)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let bytes = std::fs::read(dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Read every record described by the manifest.
pub fn read_dataset(dir: &Path) -> Result<Vec<EcgRecord>> {
    let manifest = read_manifest(dir)?;
    let mut readers: HashMap<String, BufReader<File>> = HashMap::new();
    let mut records = Vec::with_capacity(manifest.len());
    for entry in &manifest {
        let reader = match readers.get_mut(&entry.tracing_file) {
            Some(r) => r,
            None => {
                let f = File::open(dir.join(&entry.tracing_file))?;
                readers.insert(entry.tracing_file.clone(), BufReader::new(f));
                readers.get_mut(&entry.tracing_file).unwrap()
            }
        };
        reader.seek(SeekFrom::Start(entry.byte_offset))?;
        let mut bytes = vec![0u8; entry.n_samples * N_LEADS * 4];
        reader.read_exact(&mut bytes).map_err(|e| {
            Error::InvalidRecord(format!("tracing read for {}: {e}", entry.exam_id))
        })?;
        let mut leads = Vec::with_capacity(N_LEADS);
        for li in 0..N_LEADS {
            let start = li * entry.n_samples * 4;
            let lead: Vec<f32> = bytes[start..start + entry.n_samples * 4]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            leads.push(lead);
        }
        let record = EcgRecord {
            exam_id: entry.exam_id.clone(),
            patient_id: entry.patient_id.clone(),
            sampling_rate: entry.sampling_rate,
            leads,
            age: entry.age,
            sex: entry.sex,
        };
        record.validate()?;
        records.push(record);
    }
    Ok(records)
}

fn parse_error(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        row,
        message: message.into(),
    }
}

/// Labels CSV: `exam_id,1dAVb,RBBB,LBBB,SB,AF,ST` with 0/1 cells.
pub fn write_labels_csv(path: &Path, rows: &[(String, LabelVector)]) -> Result<()> {
    let mut s = String::from(LABELS_HEADER);
    s.push('\n');
    for (exam_id, labels) in rows {
        s.push_str(exam_id);
        for b in labels.0 {
            s.push(',');
            s.push(if b { '1' } else { '0' });
        }
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<(String, LabelVector)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == LABELS_HEADER => {}
        Some((_, header)) => {
            return Err(parse_error(path, 1, format!("bad header {header:?}")));
        }
        None => return Err(parse_error(path, 1, "empty file")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + N_CLASSES {
            return Err(parse_error(
                path,
                i + 1,
                format!("expected {} fields, got {}", 1 + N_CLASSES, fields.len()),
            ));
        }
        let mut labels = LabelVector::all_false();
        for (ci, field) in fields[1..].iter().enumerate() {
            labels.0[ci] = match field.trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(parse_error(
                        path,
                        i + 1,
                        format!("bad label cell {other:?}"),
                    ))
                }
            };
        }
        rows.push((fields[0].trim().to_string(), labels));
    }
    Ok(rows)
}

/// Scores CSV: same header as labels, probability cells.
pub fn write_scores_csv(path: &Path, rows: &[(String, [f32; N_CLASSES])]) -> Result<()> {
    let mut s = String::from(LABELS_HEADER);
    s.push('\n');
    for (exam_id, probs) in rows {
        s.push_str(exam_id);
        for p in probs {
            s.push_str(&format!(",{p}"));
        }
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_scores_csv(path: &Path) -> Result<Vec<(String, [f32; N_CLASSES])>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == LABELS_HEADER => {}
        Some((_, header)) => return Err(parse_error(path, 1, format!("bad header {header:?}"))),
        None => return Err(parse_error(path, 1, "empty file")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + N_CLASSES {
            return Err(parse_error(
                path,
                i + 1,
                format!("expected {} fields, got {}", 1 + N_CLASSES, fields.len()),
            ));
        }
        let mut probs = [0.0f32; N_CLASSES];
        for (ci, field) in fields[1..].iter().enumerate() {
            probs[ci] = field
                .trim()
                .parse()
                .map_err(|_| parse_error(path, i + 1, format!("bad probability {field:?}")))?;
        }
        rows.push((fields[0].trim().to_string(), probs));
    }
    Ok(rows)
}

pub const MEASUREMENTS_HEADER: &str = "exam_id,heart_rate,pr_interval,qrs_duration,nn_sd";

/// Measurements CSV with empty cells for missing values.
pub fn write_measurements_csv(path: &Path, rows: &[(String, Measurements)]) -> Result<()> {
    let mut s = String::from(MEASUREMENTS_HEADER);
    s.push('\n');
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (exam_id, m) in rows {
        s.push_str(&format!(
            "{exam_id},{},{},{},{}\n",
            cell(m.heart_rate),
            cell(m.pr_interval),
            cell(m.qrs_duration),
            cell(m.nn_sd)
        ));
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_measurements_csv(path: &Path) -> Result<Vec<(String, Measurements)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == MEASUREMENTS_HEADER => {}
        Some((_, header)) => return Err(parse_error(path, 1, format!("bad header {header:?}"))),
        None => return Err(parse_error(path, 1, "empty file")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(parse_error(
                path,
                i + 1,
                format!("expected 5 fields, got {}", fields.len()),
            ));
        }
        let cell = |ci: usize| -> Result<Option<f64>> {
            let t = fields[ci].trim();
            if t.is_empty() {
                Ok(None)
            } else {
                t.parse()
                    .map(Some)
                    .map_err(|_| parse_error(path, i + 1, format!("bad number {t:?}")))
            }
        };
        let m = Measurements {
            heart_rate: cell(1)?,
            pr_interval: cell(2)?,
            qrs_duration: cell(3)?,
            nn_sd: cell(4)?,
        };
        if !m.validate() {
            return Err(parse_error(path, i + 1, "negative measurement"));
        }
        rows.push((fields[0].trim().to_string(), m));
    }
    Ok(rows)
}

/// Reports file: one report per line, `exam_id<TAB>free text`.
pub fn read_reports_tsv(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match line.split_once('\t') {
            Some((id, report)) => rows.push((id.trim().to_string(), report.to_string())),
            None => return Err(parse_error(path, i + 1, "expected exam_id<TAB>text")),
        }
    }
    Ok(rows)
}

/// FNV-1a digest of a file, for run manifests.
pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in &bytes {
        h = (h ^ b as u64).wrapping_mul(0x100_0000_01b3);
    }
    Ok(format!("{h:016x}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::EcgClass;

    fn temp_dir(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("ecgdnn_dataset_tests").join(name);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn sample_record(id: usize, n: usize) -> EcgRecord {
        let leads: Vec<Vec<f32>> = (0..N_LEADS)
            .map(|li| {
                (0..n)
                    .map(|t| ((t + li) as f32 * 0.01).sin() + id as f32)
                    .collect()
            })
            .collect();
        EcgRecord::new(
            format!("e{id}"),
            format!("p{}", id / 2),
            400,
            leads,
            33,
            Sex::Male,
        )
        .unwrap()
    }

    #[test]
    fn dataset_round_trip() {
        let dir = temp_dir("roundtrip");
        let records = vec![sample_record(0, 2800), sample_record(1, 3200)];
        write_dataset(&dir, &records).unwrap();
        let back = read_dataset(&dir).unwrap();
        assert_eq!(records, back);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn labels_csv_round_trip_and_errors() {
        let dir = temp_dir("labels");
        let path = dir.join("labels.csv");
        let rows = vec![
            (
                "e0".to_string(),
                LabelVector::all_false().with(EcgClass::AtrialFibrillation, true),
            ),
            ("e1".to_string(), LabelVector::all_false()),
        ];
        write_labels_csv(&path, &rows).unwrap();
        assert_eq!(read_labels_csv(&path).unwrap(), rows);

        std::fs::write(&path, "exam_id,1dAVb,RBBB,LBBB,SB,AF,ST\ne0,1,0,x,0,0,0\n").unwrap();
        match read_labels_csv(&path) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn measurements_csv_round_trip_with_missing() {
        let dir = temp_dir("measurements");
        let path = dir.join("m.csv");
        let rows = vec![
            (
                "e0".to_string(),
                Measurements {
                    heart_rate: Some(72.5),
                    pr_interval: None,
                    qrs_duration: Some(98.0),
                    nn_sd: Some(12.25),
                },
            ),
            ("e1".to_string(), Measurements::default()),
        ];
        write_measurements_csv(&path, &rows).unwrap();
        assert_eq!(read_measurements_csv(&path).unwrap(), rows);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn reports_tsv_requires_tab() {
        let dir = temp_dir("reports");
        let path = dir.join("r.tsv");
        std::fs::write(&path, "e0\tbloqueio de ramo direito\ne1 missing tab\n").unwrap();
        match read_reports_tsv(&path) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn scores_csv_round_trip() {
        let dir = temp_dir("scores");
        let path = dir.join("s.csv");
        let rows = vec![("e0".to_string(), [0.1f32, 0.9, 0.25, 0.5, 0.0, 1.0])];
        write_scores_csv(&path, &rows).unwrap();
        assert_eq!(read_scores_csv(&path).unwrap(), rows);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
