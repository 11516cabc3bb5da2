//! Desk-scale 12-lead ECG classification toolkit.
//!
//! The crate covers the full pipeline: signal preprocessing into fixed-shape
//! network inputs ([`signal`]), a minimal dense-tensor engine with analytic
//! backward passes ([`nn`]), the 1-D pre-activation residual network
//! ([`model`]), Adam training with plateau learning-rate decay ([`train`]),
//! free-text label extraction ([`textlabel`]), the rule-based ground-truth
//! consolidation engine ([`consolidate`]), classifier evaluation statistics
//! ([`evalstats`]), and a parametric synthetic ECG generator ([`synth`]) that
//! serves as data source and measurement oracle.

pub mod consolidate;
pub mod dataset;
pub mod error;
pub mod evalstats;
pub mod labels;
pub mod model;
pub mod nn;
pub mod rng;
pub mod signal;
pub mod synth;
pub mod tensor;
pub mod textlabel;
pub mod train;

pub use error::Error;
pub use labels::{EcgClass, LabelVector};
pub use tensor::Tensor;
