//! Period-concatenation synthesis.
//!
//! One map iteration is one period of sound. An amplitude envelope is
//! rescaled into a time series of alpha, the map is run under it, and each
//! layer appends one copy of a waveform period per step, stretched to
//!
//! ```text
//! T = (1 / f0) * (g / g~)
//! ```
//!
//! and scaled by `g~ * alpha`, where `g~` is `g` for the first layer and the
//! `k`-th delayed state for layer `k + 1`.

mod analysis;
mod io;
mod render;

pub use analysis::{
    envelope_per_period, extract_envelope, spectrogram, Spectrogram, ENVELOPE_SMOOTHING_S,
};
pub use io::{read_wav, write_score_csv, write_spectrogram_csv, write_wav};
pub use render::{
    layer_durations, render, render_layers, render_unnormalized, PeriodSource, WaveformPeriod,
    OUTPUT_PEAK,
};

use crate::error::{Error, Result};
use crate::model::{alpha_min, next_state, runaway, IpfParams};

pub const DEFAULT_F0: f64 = 165.0;
pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;

/// Alpha per iteration step.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSeries {
    pub values: Vec<f64>,
    pub alpha_min_used: f64,
    pub alpha_target: f64,
}

/// Rescales an envelope so its minimum becomes the numeric divergence
/// threshold of `params` and its plateau becomes `target_alpha`.
pub fn envelope_to_alpha(
    envelope: &[f64],
    params: &IpfParams,
    target_alpha: f64,
) -> Result<AlphaSeries> {
    let floor = alpha_min(params.betas(), params.g0())?;
    envelope_to_alpha_with_min(envelope, floor, target_alpha)
}

/// Affine map sending `min(envelope)` to `alpha_min` and the plateau (mean of
/// the final quarter) to `target_alpha`.
pub fn envelope_to_alpha_with_min(
    envelope: &[f64],
    alpha_min: f64,
    target_alpha: f64,
) -> Result<AlphaSeries> {
    if envelope.is_empty() {
        return Err(Error::param("envelope is empty"));
    }
    if envelope.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::param(
            "envelope values must be finite and non-negative",
        ));
    }
    if !(alpha_min > 0.0) || !(target_alpha >= alpha_min) {
        return Err(Error::Scaling(format!(
            "target alpha {target_alpha} is below alpha_min {alpha_min}"
        )));
    }
    let lo = envelope.iter().copied().fold(f64::INFINITY, f64::min);
    let quarter = envelope.len().div_ceil(4);
    let tail = &envelope[envelope.len() - quarter..];
    let plateau = tail.iter().sum::<f64>() / tail.len() as f64;
    let span = plateau - lo;
    if !(span > 1e-12 * plateau.abs().max(1e-300)) {
        return Err(Error::Scaling(
            "envelope is flat: its minimum equals its plateau".into(),
        ));
    }
    let gain = (target_alpha - alpha_min) / span;
    Ok(AlphaSeries {
        values: envelope
            .iter()
            .map(|e| alpha_min + (e - lo) * gain)
            .collect(),
        alpha_min_used: alpha_min,
        alpha_target: target_alpha,
    })
}

/// Attack-then-plateau envelope, one value per period: an exponential rise
/// with time constant `rise_s` plus a slight tremolo.
pub fn attack_plateau_envelope(n_steps: usize, f0: f64, rise_s: f64) -> Vec<f64> {
    (0..n_steps)
        .map(|i| {
            let t = i as f64 / f0;
            let rise = 1.0 - (-t / rise_s).exp();
            rise * (1.0 + 0.01 * (2.0 * std::f64::consts::PI * 4.5 * t).sin())
        })
        .collect()
}

/// One iteration: the new state, the states before it (newest first) and
/// the alpha that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub alpha: f64,
    pub g: f64,
    pub history: Vec<f64>,
}

/// States driving a render.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthScore {
    records: Vec<ScoreRecord>,
    layer_count: usize,
    f0: f64,
    sample_rate: u32,
    /// Index into the alpha series of the step that diverged, if any.
    diverged_at: Option<usize>,
}

impl SynthScore {
    /// A score from explicit records; every record must hold the same
    /// number of delayed states.
    pub fn from_records(records: Vec<ScoreRecord>, f0: f64, sample_rate: u32) -> Result<Self> {
        let depth = records.first().map_or(0, |r| r.history.len());
        if records.iter().any(|r| r.history.len() != depth) {
            return Err(Error::param("records hold differing history depths"));
        }
        Self {
            records,
            layer_count: depth + 1,
            f0: DEFAULT_F0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            diverged_at: None,
        }
        .with_f0(f0)?
        .with_sample_rate(sample_rate)
    }

    pub fn with_f0(mut self, f0: f64) -> Result<Self> {
        if !(f0 > 0.0) || !f0.is_finite() {
            return Err(Error::param(format!("f0 must be positive, got {f0}")));
        }
        self.f0 = f0;
        Ok(self)
    }

    pub fn with_sample_rate(mut self, sample_rate: u32) -> Result<Self> {
        if sample_rate < 8000 {
            return Err(Error::param(format!(
                "sample rate must be at least 8000 Hz, got {sample_rate}"
            )));
        }
        self.sample_rate = sample_rate;
        Ok(self)
    }

    pub fn with_layers(mut self, layers: usize) -> Result<Self> {
        if layers == 0 || layers > self.history_depth() + 1 {
            return Err(Error::param(format!(
                "layers must be in 1..={}, got {layers}",
                self.history_depth() + 1
            )));
        }
        self.layer_count = layers;
        Ok(self)
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn layer_count(&self) -> usize {
        self.layer_count
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn diverged_at(&self) -> Option<usize> {
        self.diverged_at
    }

    pub fn history_depth(&self) -> usize {
        self.records.first().map_or(0, |r| r.history.len())
    }

    /// `g~` of a layer at a record: `g` for layer 0, else the delayed state.
    pub fn layer_state(&self, record: &ScoreRecord, layer: usize) -> f64 {
        if layer == 0 {
            record.g
        } else {
            record.history[layer - 1]
        }
    }
}

/// Runs the map under a time-varying alpha.
///
/// The history is seeded from `params.g0` with the simple map, consuming the
/// first `betas.len()` alphas; every later alpha yields one record. A
/// divergence truncates the score and is recorded; one before the first
/// record is an error.
pub fn run_score(alphas: &AlphaSeries, params: &IpfParams) -> Result<SynthScore> {
    let betas = params.betas();
    let depth = betas.len();
    let a = &alphas.values;
    if a.len() <= depth {
        return Err(Error::param(format!(
            "alpha series of {} steps is too short to seed {depth} delayed states",
            a.len()
        )));
    }
    if a.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain("alpha series must be positive".into()));
    }

    let mut states = vec![params.g0()];
    for (i, &alpha) in a.iter().enumerate().take(depth) {
        let g = states[i];
        let next = g - (g / alpha).ln();
        if !(next > 0.0) || runaway(next) {
            return Err(Error::Diverged { step: i });
        }
        states.push(next);
    }

    let mut records = Vec::with_capacity(a.len() - depth);
    let mut diverged_at = None;
    for (step, &alpha) in a.iter().enumerate().skip(depth) {
        let i = states.len() - 1;
        let g = states[i];
        let past = (1..=depth).map(|k| states[i - k]);
        match next_state(g, past, betas, alpha) {
            Ok(next) if !runaway(next) => {
                let history = (0..depth).map(|k| states[i - k]).collect();
                states.push(next);
                records.push(ScoreRecord {
                    alpha,
                    g: next,
                    history,
                });
            }
            _ => {
                if records.is_empty() {
                    return Err(Error::Diverged { step });
                }
                diverged_at = Some(step);
                break;
            }
        }
    }

    Ok(SynthScore {
        records,
        layer_count: depth + 1,
        f0: DEFAULT_F0,
        sample_rate: DEFAULT_SAMPLE_RATE,
        diverged_at,
    })
}
