//! Parametric 12-lead ECG generator with ground-truth labels and measurements
//! by construction, plus simple interval estimators.
//!
//! The beat is a sum of Gaussian bumps (P, Q, R, S, T) mixed into the 12
//! leads through a fixed amplitude matrix. Abnormality signatures: slow/fast
//! beat spacing (SB/ST), a long P-to-QRS gap (1dAVb), a widened QRS with a
//! right- or left-sided lead pattern (RBBB/LBBB), and irregular spacing with
//! the P bump removed (AF).

use crate::consolidate::Measurements;
use crate::labels::{EcgClass, LabelVector};
use crate::rng::{derive_seed, derive_seed_indexed, Rng};
use crate::signal::{EcgRecord, Sex, N_LEADS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundlePattern {
    None,
    Right,
    Left,
}

#[derive(Debug, Clone)]
pub struct SynthParams {
    /// Beats per minute, in [20, 220].
    pub heart_rate: f64,
    /// P onset to QRS onset, milliseconds.
    pub pr_interval: f64,
    /// QRS width, milliseconds.
    pub qrs_duration: f64,
    /// Multiplicative RR jitter fraction; 0 = perfectly regular.
    pub rr_jitter: f64,
    /// Irregular RR from a wide distribution and no P waves.
    pub af_mode: bool,
    /// Which bundle branch block signature a wide QRS carries.
    pub bundle_pattern: BundlePattern,
    /// Additive Gaussian noise, millivolts.
    pub noise_std: f64,
    pub sampling_rate: u32,
    /// Seconds, in [7, 10].
    pub duration: f64,
    pub rng_seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            heart_rate: 75.0,
            pr_interval: 160.0,
            qrs_duration: 90.0,
            rr_jitter: 0.0,
            af_mode: false,
            bundle_pattern: BundlePattern::None,
            noise_std: 0.0,
            sampling_rate: 400,
            duration: 7.0,
            rng_seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> bool {
        (20.0..=220.0).contains(&self.heart_rate)
            && self.pr_interval >= 0.0
            && self.qrs_duration > 0.0
            && (7.0..=10.0).contains(&self.duration)
            && self.rr_jitter >= 0.0
            && self.noise_std >= 0.0
            && self.sampling_rate > 0
    }

    /// Labels are a pure function of the parameters: SB < 50 bpm, ST > 100 bpm,
    /// 1dAVb PR > 200 ms, RBBB/LBBB QRS > 120 ms (pattern decides which), AF by mode.
    pub fn labels(&self) -> LabelVector {
        let mut v = LabelVector::all_false();
        v.set(EcgClass::SinusBradycardia, self.heart_rate < 50.0);
        v.set(EcgClass::SinusTachycardia, self.heart_rate > 100.0);
        v.set(EcgClass::FirstDegreeAvBlock, self.pr_interval > 200.0);
        v.set(
            EcgClass::RightBundleBranchBlock,
            self.qrs_duration > 120.0 && self.bundle_pattern == BundlePattern::Right,
        );
        v.set(
            EcgClass::LeftBundleBranchBlock,
            self.qrs_duration > 120.0 && self.bundle_pattern == BundlePattern::Left,
        );
        v.set(EcgClass::AtrialFibrillation, self.af_mode);
        v
    }
}

/// One wave of the beat template.
#[derive(Debug, Clone, Copy)]
struct Wave {
    /// Center relative to the R peak, ms.
    center: f64,
    /// Gaussian sigma, ms.
    sigma: f64,
    /// Base amplitude, mV (before lead mixing).
    amp: f64,
    /// Per-lead mixing coefficients.
    mix: [f64; N_LEADS],
}

/// Fixed lead mixing, rows P Q R S T. Columns follow `LEAD_NAMES`:
/// I, II, III, aVR, aVL, aVF, V1..V6.
const MIX_P: [f64; N_LEADS] = [0.8, 1.0, 0.4, -0.9, 0.3, 0.7, 0.3, 0.3, 0.4, 0.5, 0.6, 0.7];
const MIX_Q: [f64; N_LEADS] = [0.8, 1.0, 0.6, -0.5, 0.4, 0.8, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8];
const MIX_R: [f64; N_LEADS] = [0.9, 1.0, 0.5, -0.9, 0.4, 0.8, 0.3, 0.5, 0.8, 1.1, 1.2, 1.0];
const MIX_S: [f64; N_LEADS] = [0.5, 1.0, 0.8, -0.8, 0.3, 0.9, 1.6, 1.4, 1.0, 0.6, 0.4, 0.3];
const MIX_T: [f64; N_LEADS] = [0.8, 1.0, 0.5, -0.9, 0.3, 0.8, 0.4, 0.8, 0.9, 0.9, 0.8, 0.7];
/// Late R' used by the right bundle pattern (tall in V1-V2, late S laterally).
const MIX_RP: [f64; N_LEADS] = [
    -0.5, -0.2, 0.2, 0.6, -0.3, 0.0, 1.5, 1.1, 0.5, 0.0, -0.5, -0.6,
];
/// Broad lateral hump used by the left bundle pattern.
const MIX_LB: [f64; N_LEADS] = [
    0.8, 0.3, -0.2, -0.6, 0.7, 0.0, -1.4, -1.1, -0.4, 0.3, 0.9, 1.1,
];

fn beat_waves(params: &SynthParams) -> Vec<Wave> {
    let qrs = params.qrs_duration;
    let half = qrs / 2.0;
    let mut waves = vec![
        Wave {
            center: -half * 0.55,
            sigma: qrs / 11.0,
            amp: -0.12,
            mix: MIX_Q,
        },
        Wave {
            center: 0.0,
            sigma: qrs / 5.5,
            amp: 1.0,
            mix: MIX_R,
        },
        Wave {
            center: half * 0.55,
            sigma: qrs / 11.0,
            amp: -0.22,
            mix: MIX_S,
        },
        Wave {
            center: half + 180.0,
            sigma: 45.0,
            amp: 0.3,
            mix: MIX_T,
        },
    ];
    if !params.af_mode {
        // P onset to QRS onset equals pr_interval; P duration ~90 ms.
        waves.push(Wave {
            center: -half - params.pr_interval + 45.0,
            sigma: 15.0,
            amp: 0.15,
            mix: MIX_P,
        });
    }
    match params.bundle_pattern {
        BundlePattern::Right => waves.push(Wave {
            center: half * 0.45,
            sigma: qrs / 7.0,
            amp: 0.7,
            mix: MIX_RP,
        }),
        BundlePattern::Left => waves.push(Wave {
            center: half * 0.2,
            sigma: qrs / 5.0,
            amp: 0.6,
            mix: MIX_LB,
        }),
        BundlePattern::None => {}
    }
    waves
}

/// A generated record with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthRecord {
    pub record: EcgRecord,
    pub labels: LabelVector,
    pub measurements: Measurements,
    /// R-peak sample indices, generator bookkeeping for detector tests.
    pub r_peaks: Vec<usize>,
}

/// Deterministic in the seed: same parameters -> byte-identical record.
pub fn generate(params: &SynthParams) -> SynthRecord {
    assert!(params.validate(), "invalid synth parameters: {params:?}");
    let mut rng = Rng::new(derive_seed(params.rng_seed, "synth.record"));
    let rate = params.sampling_rate as f64;
    let n = (params.duration * rate).round() as usize;
    let total_ms = params.duration * 1000.0;
    let base_rr = 60_000.0 / params.heart_rate;

    // Beat schedule in ms.
    let mut r_centers_ms: Vec<f64> = Vec::new();
    let mut rr_list: Vec<f64> = Vec::new();
    let mut t = 400.0f64.min(base_rr * 0.6);
    loop {
        if t > total_ms - 250.0 {
            break;
        }
        r_centers_ms.push(t);
        let rr = if params.af_mode {
            base_rr * rng.uniform(0.7, 1.3)
        } else if params.rr_jitter > 0.0 {
            base_rr * (1.0 + params.rr_jitter * rng.uniform(-1.0, 1.0))
        } else {
            base_rr
        };
        rr_list.push(rr);
        t += rr;
    }
    // The RR list pairs consecutive beats actually placed.
    let rr_realized: Vec<f64> = r_centers_ms.windows(2).map(|w| w[1] - w[0]).collect();

    let waves = beat_waves(params);
    let mut leads = vec![vec![0.0f32; n]; N_LEADS];
    for (lead_idx, lead) in leads.iter_mut().enumerate() {
        for wave in &waves {
            let mixed_amp = wave.amp * wave.mix[lead_idx];
            if mixed_amp == 0.0 {
                continue;
            }
            for &rc in &r_centers_ms {
                let center = rc + wave.center;
                let lo = (((center - 4.0 * wave.sigma) / 1000.0 * rate).floor() as isize).max(0);
                let hi = ((((center + 4.0 * wave.sigma) / 1000.0 * rate).ceil() as isize) + 1)
                    .min(n as isize);
                for s in lo..hi {
                    let t_ms = s as f64 / rate * 1000.0;
                    let d = (t_ms - center) / wave.sigma;
                    lead[s as usize] += (mixed_amp * (-0.5 * d * d).exp()) as f32;
                }
            }
        }
        if params.noise_std > 0.0 {
            let mut noise_rng = Rng::new(derive_seed_indexed(
                params.rng_seed,
                "synth.noise",
                lead_idx as u64,
            ));
            for v in lead.iter_mut() {
                *v += (noise_rng.next_normal() * params.noise_std) as f32;
            }
        }
    }

    let age = rng.next_below(70) as u32 + 20;
    let sex = if rng.next_bool(0.5) {
        Sex::Female
    } else {
        Sex::Male
    };
    let record = EcgRecord {
        exam_id: String::new(),
        patient_id: String::new(),
        sampling_rate: params.sampling_rate,
        leads,
        age,
        sex,
    };
    debug_assert!(record.validate().is_ok());

    let (hr_true, nn_sd_true) = if rr_realized.is_empty() {
        (params.heart_rate, 0.0)
    } else {
        let mean_rr = rr_realized.iter().sum::<f64>() / rr_realized.len() as f64;
        let sd = if rr_realized.len() < 2 {
            0.0
        } else {
            let ss: f64 = rr_realized
                .iter()
                .map(|r| (r - mean_rr) * (r - mean_rr))
                .sum();
            (ss / (rr_realized.len() - 1) as f64).sqrt()
        };
        (60_000.0 / mean_rr, sd)
    };

    let r_peaks = r_centers_ms
        .iter()
        .map(|&ms| (ms / 1000.0 * rate).round() as usize)
        .collect();

    SynthRecord {
        record,
        labels: params.labels(),
        measurements: Measurements {
            heart_rate: Some(hr_true),
            pr_interval: Some(params.pr_interval),
            qrs_duration: Some(params.qrs_duration),
            nn_sd: Some(nn_sd_true),
        },
        r_peaks,
    }
}

fn moving_average(x: &[f64], w: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; x.len()];
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += x[i];
        if i >= w {
            acc -= x[i - w];
        }
        out[i] = acc / w as f64;
    }
    out
}

/// Derivative-energy R-peak detector on lead II with a 200 ms refractory.
/// The signal is pre-smoothed (~25 ms) so broadband noise barely reaches the
/// derivative, then the squared derivative is averaged over ~30 ms and
/// thresholded at a fraction of its maximum.
pub fn detect_r_peaks(record: &EcgRecord) -> Vec<usize> {
    let lead = &record.leads[1];
    let n = lead.len();
    if n < 4 {
        return Vec::new();
    }
    let rate = record.sampling_rate as f64;
    let pre_w = ((0.025 * rate).round() as usize).max(1);
    let smooth_w = ((0.030 * rate).round() as usize).max(1);
    let refractory = (0.200 * rate).round() as usize;
    let search_w = (0.080 * rate).round() as usize;

    let raw: Vec<f64> = lead.iter().map(|&v| v as f64).collect();
    let smooth = moving_average(&raw, pre_w);
    let energy: Vec<f64> = (0..n - 1)
        .map(|i| {
            let d = smooth[i + 1] - smooth[i];
            d * d
        })
        .collect();
    let smoothed = moving_average(&energy, smooth_w);
    let max_e = smoothed.iter().cloned().fold(0.0f64, f64::max);
    if max_e <= 0.0 {
        return Vec::new();
    }
    let threshold = 0.2 * max_e;

    let mut peaks = Vec::new();
    let mut i = 0;
    while i < smoothed.len() {
        if smoothed[i] > threshold {
            let lo = i.saturating_sub(search_w / 2);
            let hi = (i + search_w).min(n);
            let mut best = lo;
            for j in lo..hi {
                if lead[j] > lead[best] {
                    best = j;
                }
            }
            peaks.push(best);
            i = best + refractory;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Heart rate and NN-interval deviation from detected R peaks.
pub fn measure(record: &EcgRecord) -> Measurements {
    let peaks = detect_r_peaks(record);
    let rate = record.sampling_rate as f64;
    if peaks.len() < 2 {
        return Measurements::default();
    }
    let rr_ms: Vec<f64> = peaks
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 / rate * 1000.0)
        .collect();
    let mean_rr = rr_ms.iter().sum::<f64>() / rr_ms.len() as f64;
    let nn_sd = if rr_ms.len() < 2 {
        0.0
    } else {
        let ss: f64 = rr_ms.iter().map(|r| (r - mean_rr) * (r - mean_rr)).sum();
        (ss / (rr_ms.len() - 1) as f64).sqrt()
    };
    Measurements {
        heart_rate: Some(60_000.0 / mean_rr),
        pr_interval: None,
        qrs_duration: None,
        nn_sd: Some(nn_sd),
    }
}

/// PR and QRS estimation by sweeping candidate widths of the known synthetic
/// template and maximizing normalized cross-correlation around the detected
/// peaks. Only meaningful on synthetic data.
pub fn measure_with_template(record: &EcgRecord, af_mode: bool) -> Measurements {
    let mut m = measure(record);
    let peaks = detect_r_peaks(record);
    if peaks.len() < 2 {
        return m;
    }
    let lead = &record.leads[1];
    let rate = record.sampling_rate as f64;

    // QRS width sweep.
    let mut best_qrs = None;
    let mut best_score = f64::NEG_INFINITY;
    let mut q = 60.0;
    while q <= 200.0 {
        let tmpl = qrs_template(q, rate);
        let score = mean_peak_correlation(lead, &peaks, &tmpl, 0.0, rate);
        if score > best_score {
            best_score = score;
            best_qrs = Some(q);
        }
        q += 2.0;
    }
    m.qrs_duration = best_qrs;

    // P position sweep (PR interval); skipped in AF mode where P is absent.
    if !af_mode {
        if let Some(qrs) = best_qrs {
            let mut best_pr = None;
            let mut best_score = f64::NEG_INFINITY;
            let mut pr = 80.0;
            while pr <= 340.0 {
                let offset = -(qrs / 2.0) - pr + 45.0;
                let tmpl = p_template(rate);
                let score = mean_peak_correlation(lead, &peaks, &tmpl, offset, rate);
                if score > best_score {
                    best_score = score;
                    best_pr = Some(pr);
                }
                pr += 2.0;
            }
            m.pr_interval = best_pr;
        }
    }
    m
}

fn qrs_template(qrs_ms: f64, rate: f64) -> Vec<f64> {
    let half = qrs_ms / 2.0;
    let span = (half * 1.4 / 1000.0 * rate).ceil() as isize;
    let waves = [
        (-half * 0.55, qrs_ms / 11.0, -0.12 * MIX_Q[1]),
        (0.0, qrs_ms / 5.5, 1.0 * MIX_R[1]),
        (half * 0.55, qrs_ms / 11.0, -0.22 * MIX_S[1]),
    ];
    (-span..=span)
        .map(|s| {
            let t_ms = s as f64 / rate * 1000.0;
            waves
                .iter()
                .map(|&(c, sig, a)| {
                    let d = (t_ms - c) / sig;
                    a * (-0.5 * d * d).exp()
                })
                .sum()
        })
        .collect()
}

fn p_template(rate: f64) -> Vec<f64> {
    let span = (60.0 / 1000.0 * rate).ceil() as isize;
    (-span..=span)
        .map(|s| {
            let t_ms = s as f64 / rate * 1000.0;
            let d = t_ms / 15.0;
            0.15 * MIX_P[1] * (-0.5 * d * d).exp()
        })
        .collect()
}

/// Mean normalized correlation of `tmpl` against windows centered at
/// `peak + offset_ms` for each detected peak.
fn mean_peak_correlation(
    lead: &[f32],
    peaks: &[usize],
    tmpl: &[f64],
    offset_ms: f64,
    rate: f64,
) -> f64 {
    let half = (tmpl.len() / 2) as isize;
    let tmpl_norm: f64 = tmpl.iter().map(|v| v * v).sum::<f64>().sqrt();
    if tmpl_norm == 0.0 {
        return 0.0;
    }
    let offset = (offset_ms / 1000.0 * rate).round() as isize;
    let mut total = 0.0;
    let mut count = 0;
    for &p in peaks {
        let center = p as isize + offset;
        let lo = center - half;
        if lo < 0 || (center + half) as usize >= lead.len() {
            continue;
        }
        let window: Vec<f64> = (0..tmpl.len())
            .map(|i| lead[(lo + i as isize) as usize] as f64)
            .collect();
        let dot: f64 = window.iter().zip(tmpl).map(|(a, b)| a * b).sum();
        let w_norm: f64 = window.iter().map(|v| v * v).sum::<f64>().sqrt();
        if w_norm > 0.0 {
            total += dot / (w_norm * tmpl_norm);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Per-class parameter pools used when building corpora with requested
/// prevalence. `None` samples a normal sinus record.
pub fn sample_params_for_class(
    class: Option<EcgClass>,
    noise_std: f64,
    sampling_rate: u32,
    rng: &mut Rng,
    record_seed: u64,
) -> SynthParams {
    let mut p = SynthParams {
        heart_rate: rng.uniform(52.0, 99.5),
        pr_interval: rng.uniform(120.0, 185.0),
        qrs_duration: rng.uniform(75.0, 110.0),
        rr_jitter: rng.uniform(0.005, 0.03),
        af_mode: false,
        bundle_pattern: BundlePattern::None,
        noise_std,
        sampling_rate,
        duration: rng.uniform(7.0, 10.0),
        rng_seed: record_seed,
    };
    match class {
        None => {}
        Some(EcgClass::SinusBradycardia) => p.heart_rate = rng.uniform(30.0, 47.5),
        Some(EcgClass::SinusTachycardia) => p.heart_rate = rng.uniform(100.5, 150.0),
        Some(EcgClass::FirstDegreeAvBlock) => p.pr_interval = rng.uniform(205.0, 300.0),
        Some(EcgClass::RightBundleBranchBlock) => {
            p.qrs_duration = rng.uniform(125.0, 175.0);
            p.bundle_pattern = BundlePattern::Right;
        }
        Some(EcgClass::LeftBundleBranchBlock) => {
            p.qrs_duration = rng.uniform(125.0, 175.0);
            p.bundle_pattern = BundlePattern::Left;
        }
        Some(EcgClass::AtrialFibrillation) => {
            p.af_mode = true;
            p.heart_rate = rng.uniform(55.0, 95.0);
        }
    }
    p
}

/// Build `n` records with exact per-class counts `round(prevalence * n)`;
/// the remainder are normal sinus records. Two exams share each patient id.
pub fn generate_corpus(
    n: usize,
    prevalence: &[(EcgClass, f64)],
    noise_std: f64,
    sampling_rate: u32,
    seed: u64,
) -> Vec<SynthRecord> {
    let mut class_of: Vec<Option<EcgClass>> = Vec::with_capacity(n);
    for &(class, frac) in prevalence {
        let count = (frac * n as f64).round() as usize;
        for _ in 0..count {
            if class_of.len() < n {
                class_of.push(Some(class));
            }
        }
    }
    while class_of.len() < n {
        class_of.push(None);
    }
    // Interleave classes deterministically so splits stay balanced.
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(derive_seed(seed, "corpus.order")).shuffle(&mut order);

    let mut out = Vec::with_capacity(n);
    for (idx, &slot) in order.iter().enumerate() {
        let record_seed = derive_seed_indexed(seed, "corpus.record", idx as u64);
        let mut rng = Rng::new(derive_seed_indexed(seed, "corpus.params", idx as u64));
        let params = sample_params_for_class(
            class_of[slot],
            noise_std,
            sampling_rate,
            &mut rng,
            record_seed,
        );
        let mut sr = generate(&params);
        sr.record.exam_id = format!("S{idx:06}");
        sr.record.patient_id = format!("P{:05}", idx / 2);
        out.push(sr);
    }
    out
}
