use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Time constant of the envelope smoothing filter, in seconds.
pub const ENVELOPE_SMOOTHING_S: f64 = 0.02;

/// Short-time magnitude spectra. `magnitudes[frame][bin]`; a sine of
/// amplitude `A` centred on a bin reads `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub times: Vec<f64>,
    pub freqs: Vec<f64>,
    pub magnitudes: Vec<Vec<f64>>,
}

impl Spectrogram {
    pub fn bin_of(&self, freq: f64) -> usize {
        let df = self.freqs.get(1).copied().unwrap_or(1.0);
        ((freq / df).round() as usize).min(self.freqs.len() - 1)
    }
}

/// Hann-windowed STFT with frames starting every `hop` samples; frame times
/// are window centres.
pub fn spectrogram(
    audio: &[f64],
    sample_rate: u32,
    window_size: usize,
    hop: usize,
) -> Result<Spectrogram> {
    if window_size < 64 || !window_size.is_power_of_two() {
        return Err(Error::param(format!(
            "window size must be a power of two >= 64, got {window_size}"
        )));
    }
    if hop == 0 {
        return Err(Error::param("hop must be at least 1"));
    }
    if audio.len() < window_size {
        return Err(Error::param(format!(
            "audio of {} samples is shorter than one window of {window_size}",
            audio.len()
        )));
    }
    let sr = sample_rate as f64;
    let window: Vec<f64> = (0..window_size)
        .map(|i| {
            let x = std::f64::consts::PI * i as f64 / window_size as f64;
            x.sin().powi(2)
        })
        .collect();
    let scale = 2.0 / window.iter().sum::<f64>();
    let fft = FftPlanner::new().plan_fft_forward(window_size);
    let n_frames = 1 + (audio.len() - window_size) / hop;
    let n_bins = window_size / 2 + 1;

    let mut times = Vec::with_capacity(n_frames);
    let mut magnitudes = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex::new(0.0, 0.0); window_size];
    for f in 0..n_frames {
        let start = f * hop;
        for (b, (x, w)) in buf
            .iter_mut()
            .zip(audio[start..start + window_size].iter().zip(&window))
        {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        magnitudes.push(buf[..n_bins].iter().map(|c| c.norm() * scale).collect());
        times.push((start as f64 + window_size as f64 / 2.0) / sr);
    }
    let freqs = (0..n_bins)
        .map(|k| k as f64 * sr / window_size as f64)
        .collect();
    Ok(Spectrogram {
        times,
        freqs,
        magnitudes,
    })
}

/// Amplitude envelope: centred sliding RMS over `window_ms`, then a
/// single-pole low-pass with a [`ENVELOPE_SMOOTHING_S`] time constant,
/// started at the first RMS value. One value per input sample.
pub fn extract_envelope(audio: &[f64], sample_rate: u32, window_ms: f64) -> Result<Vec<f64>> {
    if !(window_ms > 0.0) || !window_ms.is_finite() {
        return Err(Error::param(format!(
            "window must be positive, got {window_ms} ms"
        )));
    }
    if audio.is_empty() {
        return Ok(Vec::new());
    }
    let sr = sample_rate as f64;
    let half = ((window_ms * 1e-3 * sr / 2.0).round() as usize).max(1);
    let mut prefix = Vec::with_capacity(audio.len() + 1);
    prefix.push(0.0);
    for x in audio {
        prefix.push(prefix.last().unwrap() + x * x);
    }
    let n = audio.len();
    let rms = (0..n).map(|i| {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        ((prefix[hi] - prefix[lo]).max(0.0) / (hi - lo) as f64).sqrt()
    });
    let k = 1.0 - (-1.0 / (ENVELOPE_SMOOTHING_S * sr)).exp();
    let mut out = Vec::with_capacity(n);
    let mut y = None;
    for x in rms {
        let next = match y {
            None => x,
            Some(prev) => prev + k * (x - prev),
        };
        y = Some(next);
        out.push(next);
    }
    Ok(out)
}

/// Samples a per-sample envelope once per period of `f0`.
pub fn envelope_per_period(envelope: &[f64], sample_rate: u32, f0: f64) -> Result<Vec<f64>> {
    if !(f0 > 0.0) {
        return Err(Error::param("f0 must be positive"));
    }
    let step = sample_rate as f64 / f0;
    let n = (envelope.len() as f64 / step).floor() as usize;
    Ok((0..n)
        .map(|k| envelope[((k as f64 * step).round() as usize).min(envelope.len() - 1)])
        .collect())
}
