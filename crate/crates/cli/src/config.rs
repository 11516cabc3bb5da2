//! `key=value` configuration file covering every tunable in the library
//! modules. Unknown keys are rejected; the effective configuration is echoed
//! into the run manifest.

use std::collections::BTreeMap;
use std::path::Path;

use ecgdnn::consolidate::ConsolidateConfig;
use ecgdnn::model::ArchitectureConfig;
use ecgdnn::train::TrainConfig;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub model: ArchitectureConfig,
    pub consolidate: ConsolidateConfig,
    pub synth_noise_std: f64,
    pub synth_sampling_rate: u32,
    pub textlabel_threshold: f64,
    pub textlabel_negation_window: usize,
    pub eval_bootstrap_n: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: TrainConfig::default(),
            model: ArchitectureConfig::default(),
            consolidate: ConsolidateConfig::default(),
            synth_noise_std: 0.02,
            synth_sampling_rate: 400,
            textlabel_threshold: 0.5,
            textlabel_negation_window: 3,
            eval_bootstrap_n: 1000,
        }
    }
}

pub struct ConfigError(pub String);

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = RunConfig::default();
        let Some(path) = path else {
            return Ok(config);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "config line {}: expected key=value, got {line:?}",
                    lineno + 1
                )));
            };
            config
                .apply(key.trim(), value.trim())
                .map_err(|msg| ConfigError(format!("config line {}: {msg}", lineno + 1)))?;
        }
        Ok(config)
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("bad value {value:?} for {key}"))
        }
        match key {
            "train.lr0" => self.train.lr0 = parse(key, value)?,
            "train.beta1" => self.train.adam.beta1 = parse(key, value)?,
            "train.beta2" => self.train.adam.beta2 = parse(key, value)?,
            "train.eps" => self.train.adam.eps = parse(key, value)?,
            "train.batch_size" => self.train.batch_size = parse(key, value)?,
            "train.max_epochs" => self.train.max_epochs = parse(key, value)?,
            "train.plateau_patience" => self.train.plateau_patience = parse(key, value)?,
            "train.lr_decay_factor" => self.train.lr_decay_factor = parse(key, value)?,
            "model.n_residual_blocks" => self.model.n_residual_blocks = parse(key, value)?,
            "model.kernel_length" => self.model.kernel_length = parse(key, value)?,
            "model.initial_filters" => self.model.initial_filters = parse(key, value)?,
            "model.filter_growth" => self.model.filter_growth = parse(key, value)?,
            "model.subsample_factor" => self.model.subsample_factor = parse(key, value)?,
            "model.dropout_rate" => self.model.dropout_rate = parse(key, value)?,
            "synth.noise_std" => self.synth_noise_std = parse(key, value)?,
            "synth.sampling_rate" => self.synth_sampling_rate = parse(key, value)?,
            "textlabel.threshold" => self.textlabel_threshold = parse(key, value)?,
            "textlabel.negation_window" => self.textlabel_negation_window = parse(key, value)?,
            "consolidate.st_min_heart_rate" => {
                self.consolidate.st_min_heart_rate = parse(key, value)?
            }
            "consolidate.sb_max_heart_rate" => {
                self.consolidate.sb_max_heart_rate = parse(key, value)?
            }
            "consolidate.bbb_min_qrs" => self.consolidate.bbb_min_qrs = parse(key, value)?,
            "consolidate.avb_min_pr" => self.consolidate.avb_min_pr = parse(key, value)?,
            "consolidate.af_min_nn_sd" => self.consolidate.af_min_nn_sd = parse(key, value)?,
            "eval.bootstrap_n" => self.eval_bootstrap_n = parse(key, value)?,
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Every effective key=value, for the run manifest.
    pub fn effective(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("train.lr0", self.train.lr0.to_string());
        put("train.beta1", self.train.adam.beta1.to_string());
        put("train.beta2", self.train.adam.beta2.to_string());
        put("train.eps", self.train.adam.eps.to_string());
        put("train.batch_size", self.train.batch_size.to_string());
        put("train.max_epochs", self.train.max_epochs.to_string());
        put(
            "train.plateau_patience",
            self.train.plateau_patience.to_string(),
        );
        put(
            "train.lr_decay_factor",
            self.train.lr_decay_factor.to_string(),
        );
        put(
            "model.n_residual_blocks",
            self.model.n_residual_blocks.to_string(),
        );
        put("model.kernel_length", self.model.kernel_length.to_string());
        put(
            "model.initial_filters",
            self.model.initial_filters.to_string(),
        );
        put("model.filter_growth", self.model.filter_growth.to_string());
        put(
            "model.subsample_factor",
            self.model.subsample_factor.to_string(),
        );
        put("model.dropout_rate", self.model.dropout_rate.to_string());
        put("synth.noise_std", self.synth_noise_std.to_string());
        put("synth.sampling_rate", self.synth_sampling_rate.to_string());
        put("textlabel.threshold", self.textlabel_threshold.to_string());
        put(
            "textlabel.negation_window",
            self.textlabel_negation_window.to_string(),
        );
        put(
            "consolidate.st_min_heart_rate",
            self.consolidate.st_min_heart_rate.to_string(),
        );
        put(
            "consolidate.sb_max_heart_rate",
            self.consolidate.sb_max_heart_rate.to_string(),
        );
        put(
            "consolidate.bbb_min_qrs",
            self.consolidate.bbb_min_qrs.to_string(),
        );
        put(
            "consolidate.avb_min_pr",
            self.consolidate.avb_min_pr.to_string(),
        );
        put(
            "consolidate.af_min_nn_sd",
            self.consolidate.af_min_nn_sd.to_string(),
        );
        put("eval.bootstrap_n", self.eval_bootstrap_n.to_string());
        m
    }
}
