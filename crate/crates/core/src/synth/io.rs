use std::io::Write;
use std::path::Path;

use super::{layer_durations, Spectrogram, SynthScore};
use crate::error::{Error, Result};

/// Writes 16-bit PCM mono; samples are clipped to `[-1, 1]`.
pub fn write_wav(path: impl AsRef<Path>, audio: &[f64], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for s in audio {
        w.write_sample((s.clamp(-1.0, 1.0) * i16::MAX as f64).round() as i16)?;
    }
    w.finalize()?;
    Ok(())
}

/// Reads any PCM or float WAV, averaging channels to mono, scaled to `[-1, 1]`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<(Vec<f64>, u32)> {
    let mut r = hound::WavReader::open(path)?;
    let spec = r.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => r
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        hound::SampleFormat::Int => {
            let full = (1i64 << (spec.bits_per_sample - 1)) as f64;
            r.samples::<i32>()
                .map(|s| s.map(|v| v as f64 / full))
                .collect::<std::result::Result<_, _>>()?
        }
    };
    let mono = interleaved
        .chunks(channels)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    Ok((mono, spec.sample_rate))
}

/// `step,alpha,g,g_minus,g_2minus,period_s_layer1..N`, one row per record.
/// Missing delayed states are left empty; deeper ones get extra
/// `g_<k>minus` columns before the periods.
pub fn write_score_csv<W: Write>(score: &SynthScore, layers: usize, mut out: W) -> Result<()> {
    let depth = score.history_depth();
    let hist_cols = depth.max(2);
    let mut header = vec![
        "step".to_string(),
        "alpha".into(),
        "g".into(),
        "g_minus".into(),
    ];
    header.extend((2..=hist_cols).map(|k| format!("g_{k}minus")));
    header.extend((1..=layers).map(|l| format!("period_s_layer{l}")));
    writeln!(out, "{}", header.join(","))?;

    let sr = score.sample_rate() as f64;
    let durations = (0..layers)
        .map(|l| layer_durations(score, l))
        .collect::<Result<Vec<_>>>()?;
    for (i, rec) in score.records().iter().enumerate() {
        let mut row = vec![i.to_string(), rec.alpha.to_string(), rec.g.to_string()];
        row.extend(
            (0..hist_cols).map(|k| rec.history.get(k).map(f64::to_string).unwrap_or_default()),
        );
        row.extend(durations.iter().map(|d| (d[i] as f64 / sr).to_string()));
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// `time_s,freq_hz,magnitude`, frames in time order, bins up to `max_freq`.
pub fn write_spectrogram_csv<W: Write>(
    spec: &Spectrogram,
    max_freq: Option<f64>,
    mut out: W,
) -> Result<()> {
    if max_freq.is_some_and(|f| !(f > 0.0)) {
        return Err(Error::param("maximum frequency must be positive"));
    }
    writeln!(out, "time_s,freq_hz,magnitude")?;
    let limit = max_freq.unwrap_or(f64::INFINITY);
    for (t, frame) in spec.times.iter().zip(&spec.magnitudes) {
        for (f, m) in spec.freqs.iter().zip(frame) {
            if *f > limit {
                break;
            }
            writeln!(out, "{t},{f},{m}")?;
        }
    }
    out.flush()?;
    Ok(())
}
