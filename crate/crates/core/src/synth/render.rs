use rayon::prelude::*;

use super::SynthScore;
use crate::error::{Error, Result};

/// Peak level of a normalized render.
pub const OUTPUT_PEAK: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodSource {
    Gaussian,
    Sampled,
}

/// One period of a waveform, peak-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformPeriod {
    samples: Vec<f64>,
    source: PeriodSource,
    f0: f64,
}

impl WaveformPeriod {
    /// Scales `samples` to unit peak.
    pub fn new(samples: Vec<f64>, source: PeriodSource, f0: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("waveform period is empty"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("waveform period holds non-finite samples"));
        }
        let peak = samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        if peak == 0.0 {
            return Err(Error::param("waveform period is silent"));
        }
        Ok(Self {
            samples: samples.into_iter().map(|s| s / peak).collect(),
            source,
            f0,
        })
    }

    /// Centered Gaussian pulse with `sigma = 1 / (10 f0)`, mean removed.
    pub fn gaussian(f0: f64, sample_rate: u32) -> Result<Self> {
        if !(f0 > 0.0) || f0 >= sample_rate as f64 / 2.0 {
            return Err(Error::param(format!(
                "f0 must lie in (0, {}) Hz, got {f0}",
                sample_rate / 2
            )));
        }
        let sr = sample_rate as f64;
        let n = (sr / f0).round().max(2.0) as usize;
        let sigma = 0.1 / f0;
        let centre = 0.5 / f0;
        let mut s: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / sr - centre;
                (-t * t / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let mean = s.iter().sum::<f64>() / n as f64;
        s.iter_mut().for_each(|v| *v -= mean);
        Self::new(s, PeriodSource::Gaussian, f0)
    }

    /// One period cut from a recording at the lag of the strongest
    /// autocorrelation peak between 50 Hz and 1 kHz. A recording too short
    /// for that search is used whole.
    pub fn sampled(audio: &[f64], sample_rate: u32) -> Result<Self> {
        let sr = sample_rate as f64;
        let min_lag = (sr / 1000.0).ceil() as usize;
        let max_lag = (sr / 50.0).floor() as usize;
        if audio.len() < 2 * max_lag {
            let mut s = audio.to_vec();
            remove_mean(&mut s);
            return Self::new(s, PeriodSource::Sampled, sr / audio.len().max(1) as f64);
        }
        let seg_len = audio.len().min(8 * max_lag);
        let start = (audio.len() - seg_len) / 2;
        let seg = &audio[start..start + seg_len];
        let r: Vec<f64> = (min_lag..=max_lag)
            .map(|l| autocorrelation(seg, l))
            .collect();
        let best = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(best > 0.0) {
            return Err(Error::param("recording has no periodicity to extract"));
        }
        // first local maximum close to the best one, to avoid octave errors
        let idx = (0..r.len())
            .find(|&i| {
                r[i] >= 0.9 * best
                    && (i == 0 || r[i] >= r[i - 1])
                    && (i + 1 == r.len() || r[i] >= r[i + 1])
            })
            .unwrap();
        let lag = min_lag + idx;
        let mut s = seg[..lag].to_vec();
        remove_mean(&mut s);
        Self::new(s, PeriodSource::Sampled, sr / lag as f64)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn source(&self) -> PeriodSource {
        self.source
    }

    /// Natural pitch of the stored period.
    pub fn f0(&self) -> f64 {
        self.f0
    }

    /// The period stretched to `n` samples by cyclic linear interpolation.
    pub fn resample(&self, n: usize) -> Vec<f64> {
        let p = self.samples.len();
        let step = p as f64 / n.max(1) as f64;
        (0..n)
            .map(|j| {
                let x = j as f64 * step;
                let i = x.floor() as usize % p;
                let frac = x - x.floor();
                self.samples[i] * (1.0 - frac) + self.samples[(i + 1) % p] * frac
            })
            .collect()
    }
}

fn remove_mean(s: &mut [f64]) {
    if s.is_empty() {
        return;
    }
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    s.iter_mut().for_each(|v| *v -= mean);
}

fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let a = &x[..x.len() - lag];
    let b = &x[lag..];
    let num: f64 = a.iter().zip(b).map(|(u, v)| u * v).sum();
    let den = (a.iter().map(|u| u * u).sum::<f64>() * b.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn check_layers(score: &SynthScore, layers: usize) -> Result<()> {
    if layers == 0 || layers > score.history_depth() + 1 {
        return Err(Error::param(format!(
            "layers must be in 1..={}, got {layers}",
            score.history_depth() + 1
        )));
    }
    Ok(())
}

/// Sample count of every period of one layer.
///
/// Period boundaries sit at the rounded cumulative time, so each count is
/// within one sample of `round(T * sample_rate)` and the total never drifts.
pub fn layer_durations(score: &SynthScore, layer: usize) -> Result<Vec<usize>> {
    check_layers(score, layer + 1)?;
    let sr = score.sample_rate() as f64;
    let mut pos = 0.0_f64;
    let mut emitted = 0usize;
    let mut out = Vec::with_capacity(score.records().len());
    for (step, rec) in score.records().iter().enumerate() {
        let gt = score.layer_state(rec, layer);
        if !(gt > 0.0) || !gt.is_finite() {
            return Err(Error::Render {
                step,
                reason: format!("amplitude state {gt} is not positive"),
            });
        }
        let t = rec.g / gt / score.f0();
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Render {
                step,
                reason: format!("period length {t} s is not positive"),
            });
        }
        pos += t * sr;
        let end = pos.round() as usize;
        out.push(end - emitted);
        emitted = end;
    }
    Ok(out)
}

fn render_layer(score: &SynthScore, period: &WaveformPeriod, layer: usize) -> Result<Vec<f64>> {
    let durations = layer_durations(score, layer)?;
    let mut out = Vec::with_capacity(durations.iter().sum());
    for (rec, n) in score.records().iter().zip(durations) {
        let gain = score.layer_state(rec, layer) * rec.alpha;
        out.extend(period.resample(n).into_iter().map(|s| s * gain));
    }
    Ok(out)
}

/// Each layer's stream on its own, before mixing.
pub fn render_layers(
    score: &SynthScore,
    period: &WaveformPeriod,
    layers: usize,
) -> Result<Vec<Vec<f64>>> {
    check_layers(score, layers)?;
    (0..layers)
        .into_par_iter()
        .map(|l| render_layer(score, period, l))
        .collect()
}

/// Equal-weight sum of the layer streams; the result is as long as the
/// longest one.
pub fn render_unnormalized(
    score: &SynthScore,
    period: &WaveformPeriod,
    layers: usize,
) -> Result<Vec<f64>> {
    let streams = render_layers(score, period, layers)?;
    let len = streams.iter().map(Vec::len).max().unwrap_or(0);
    let mut mix = vec![0.0; len];
    for s in &streams {
        for (m, v) in mix.iter_mut().zip(s) {
            *m += v;
        }
    }
    Ok(mix)
}

/// [`render_unnormalized`] scaled to a peak of [`OUTPUT_PEAK`].
pub fn render(score: &SynthScore, period: &WaveformPeriod, layers: usize) -> Result<Vec<f64>> {
    let mut mix = render_unnormalized(score, period, layers)?;
    let peak = mix.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        let k = OUTPUT_PEAK / peak;
        mix.iter_mut().for_each(|s| *s *= k);
    }
    Ok(mix)
}
