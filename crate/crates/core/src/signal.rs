//! Raw ECG records and preprocessing into the fixed network input window.
//!
//! Records arrive at 300-600 Hz with 7-10 s duration; the network consumes a
//! 12 x 4096 matrix at 400 Hz, zero-padded and centered.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_LEADS: usize = 12;
pub const WINDOW: usize = 4096;
pub const TARGET_RATE: u32 = 400;

pub const LEAD_NAMES: [&str; N_LEADS] = [
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Male => "male",
            Sex::Female => "female",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "male" | "M" | "m" => Some(Sex::Male),
            "female" | "F" | "f" => Some(Sex::Female),
            _ => None,
        }
    }
}

/// One exam: 12 named leads of sampled voltage plus patient metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub exam_id: String,
    pub patient_id: String,
    /// Samples per second, 300-600 in source data.
    pub sampling_rate: u32,
    /// Voltage in millivolts; `leads[i]` follows `LEAD_NAMES[i]`.
    pub leads: Vec<Vec<f32>>,
    pub age: u32,
    pub sex: Sex,
}

impl EcgRecord {
    pub fn new(
        exam_id: impl Into<String>,
        patient_id: impl Into<String>,
        sampling_rate: u32,
        leads: Vec<Vec<f32>>,
        age: u32,
        sex: Sex,
    ) -> Result<Self> {
        let record = EcgRecord {
            exam_id: exam_id.into(),
            patient_id: patient_id.into(),
            sampling_rate,
            leads,
            age,
            sex,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sampling_rate == 0 {
            return Err(Error::InvalidRecord(
                "sampling_rate must be positive".into(),
            ));
        }
        if self.leads.len() != N_LEADS {
            return Err(Error::InvalidRecord(format!(
                "expected {} leads, got {}",
                N_LEADS,
                self.leads.len()
            )));
        }
        let n = self.leads[0].len();
        if n == 0 {
            return Err(Error::InvalidRecord("empty lead".into()));
        }
        if self.leads.iter().any(|l| l.len() != n) {
            return Err(Error::InvalidRecord("leads have unequal lengths".into()));
        }
        let duration = n as f64 / self.sampling_rate as f64;
        if !(6.0..=11.0).contains(&duration) {
            return Err(Error::InvalidRecord(format!(
                "duration {duration:.2}s outside [6, 11]s"
            )));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.leads[0].len()
    }

    pub fn duration_secs(&self) -> f64 {
        self.n_samples() as f64 / self.sampling_rate as f64
    }
}

/// The 12 x 4096 network input at 400 Hz with centering metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInput {
    /// Row-major `[N_LEADS][WINDOW]`; padded entries are exactly zero.
    pub data: Vec<f32>,
    pub pad_left: usize,
    pub pad_right: usize,
    /// Set when the source exceeded the window and was truncated symmetrically.
    pub truncated: bool,
}

impl NetworkInput {
    pub fn lead(&self, i: usize) -> &[f32] {
        &self.data[i * WINDOW..(i + 1) * WINDOW]
    }

    pub fn signal_len(&self) -> usize {
        WINDOW - self.pad_left - self.pad_right
    }
}

const TAPS_PER_PHASE: usize = 32;
const KAISER_BETA: f64 = 8.6;

/// Modified Bessel function of the first kind, order zero (series expansion).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Kaiser-windowed sinc low-pass for a rational up/down resampler.
/// Odd length so the group delay is an integer number of high-rate samples.
fn design_filter(up: usize, down: usize) -> Vec<f64> {
    let n = up * TAPS_PER_PHASE + 1;
    let center = ((n - 1) / 2) as f64;
    let cutoff = 1.0 / (2.0 * up.max(down) as f64);
    let i0_beta = bessel_i0(KAISER_BETA);
    (0..n)
        .map(|i| {
            let t = i as f64 - center;
            let frac = t / center;
            let window = bessel_i0(KAISER_BETA * (1.0 - frac * frac).max(0.0).sqrt()) / i0_beta;
            2.0 * cutoff * sinc(2.0 * cutoff * t) * window
        })
        .collect()
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn resample_lead(x: &[f32], up: usize, down: usize, filter: &[f64], out_len: usize) -> Vec<f32> {
    let n = filter.len();
    let center = (n - 1) / 2;
    let gain = up as f64;
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        // High-rate position of output j, shifted by the filter group delay.
        let m = j * down + center;
        let phase = m % up;
        let i0 = (m / up) as isize;
        let mut acc = 0.0f64;
        let mut k = phase;
        let mut r = 0isize;
        while k < n {
            let xi = i0 - r;
            if xi >= 0 && (xi as usize) < x.len() {
                acc += filter[k] * x[xi as usize] as f64;
            }
            k += up;
            r += 1;
        }
        out.push((acc * gain) as f32);
    }
    out
}

/// Windowed-sinc polyphase resampling (Kaiser window, beta 8.6, 32 taps per
/// phase). The same-rate path returns the record bit-exactly.
pub fn resample(record: &EcgRecord, target_rate: u32) -> Result<EcgRecord> {
    if target_rate == 0 {
        return Err(Error::InvalidRecord("target rate must be positive".into()));
    }
    record.validate()?;
    if target_rate == record.sampling_rate {
        return Ok(record.clone());
    }
    let g = gcd(target_rate, record.sampling_rate);
    let up = (target_rate / g) as usize;
    let down = (record.sampling_rate / g) as usize;
    let n_in = record.n_samples();
    // round(n * target / source)
    let out_len = (n_in * up + down / 2) / down;
    let filter = design_filter(up, down);
    let leads = record
        .leads
        .iter()
        .map(|lead| resample_lead(lead, up, down, &filter, out_len))
        .collect();
    Ok(EcgRecord {
        exam_id: record.exam_id.clone(),
        patient_id: record.patient_id.clone(),
        sampling_rate: target_rate,
        leads,
        age: record.age,
        sex: record.sex,
    })
}

/// Center a 400 Hz record in the 4096-sample window. Longer records are
/// truncated symmetrically and flagged.
pub fn pad_to_window(record: &EcgRecord) -> Result<NetworkInput> {
    record.validate()?;
    if record.sampling_rate != TARGET_RATE {
        return Err(Error::InvalidRecord(format!(
            "pad_to_window expects {} Hz, got {}",
            TARGET_RATE, record.sampling_rate
        )));
    }
    let n = record.n_samples();
    let mut data = vec![0.0f32; N_LEADS * WINDOW];
    if n <= WINDOW {
        let pad_left = (WINDOW - n) / 2;
        let pad_right = WINDOW - n - pad_left;
        for (i, lead) in record.leads.iter().enumerate() {
            data[i * WINDOW + pad_left..i * WINDOW + pad_left + n].copy_from_slice(lead);
        }
        Ok(NetworkInput {
            data,
            pad_left,
            pad_right,
            truncated: false,
        })
    } else {
        let cut_left = (n - WINDOW) / 2;
        for (i, lead) in record.leads.iter().enumerate() {
            data[i * WINDOW..(i + 1) * WINDOW].copy_from_slice(&lead[cut_left..cut_left + WINDOW]);
        }
        Ok(NetworkInput {
            data,
            pad_left: 0,
            pad_right: 0,
            truncated: true,
        })
    }
}

/// Resample to 400 Hz, then center in the window.
pub fn preprocess(record: &EcgRecord) -> Result<NetworkInput> {
    let at_400 = resample(record, TARGET_RATE)?;
    pad_to_window(&at_400)
}
