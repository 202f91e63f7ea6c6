//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod naive;

use ipf::mapper::{BetaGrid, LikelihoodMap, MapperProtocol, MaxInterval, REFINE_SPLITS};
use ipf::model::Protocol;
use ipf::synth::Spectrogram;
use naive::{NaiveCell, NaiveMax, NaiveProtocol};

/// Comb lines at most this far above the inter-line floor count as absent.
pub const COMB_ABSENT: f64 = 2.0;
/// Comb lines at least this far above the inter-line floor count as present.
pub const COMB_PRESENT: f64 = 4.0;

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Band around the final second fundamental searched for a drifting
/// precursor, as fractions of it; the central `PRECURSOR_GUARD` is skipped.
pub const PRECURSOR_BAND: (f64, f64) = (0.75, 1.35);
pub const PRECURSOR_GUARD: f64 = 0.03;
/// A drifting track must stand this far above the floor to count; chaotic
/// broadband frames reach about half of it somewhere in the band.
pub const PRECURSOR_PRESENT: f64 = 20.0;
const SEARCH_STEP: f64 = 0.25;

/// Per-frame strength of a harmonic series on `f2`: median magnitude at its
/// lines over median magnitude halfway between them. Lines and midpoints
/// within four bins of a harmonic of `f0 / 2` are skipped so the first
/// series cannot leak into the measurement. `None` when fewer than five
/// lines or midpoints remain.
pub fn comb_contrast(spec: &Spectrogram, f0: f64, f2: f64, max_freq: f64) -> Option<Vec<f64>> {
    let df = spec.freqs[1];
    let base = f0 / 2.0;
    let clear = |f: f64| {
        let h = f / base;
        (h - h.round()).abs() * base >= 4.0 * df
    };
    let mut lines = Vec::new();
    let mut gaps = Vec::new();
    let mut k = 1.0;
    while (k + 0.5) * f2 < max_freq {
        if clear(k * f2) {
            lines.push(spec.bin_of(k * f2));
        }
        if clear((k + 0.5) * f2) {
            gaps.push(spec.bin_of((k + 0.5) * f2));
        }
        k += 1.0;
    }
    if lines.len() < 5 || gaps.len() < 5 {
        return None;
    }
    Some(
        spec.magnitudes
            .iter()
            .map(|frame| {
                let on: Vec<f64> = lines.iter().map(|b| frame[*b]).collect();
                let off: Vec<f64> = gaps.iter().map(|b| frame[*b]).collect();
                median(&on) / median(&off).max(1e-12)
            })
            .collect(),
    )
}

/// Per frame, the strongest comb contrast over candidate fundamentals
/// near `f2` but off it: a second track still drifting toward `f2`.
pub fn strongest_precursor(spec: &Spectrogram, f0: f64, f2: f64, max_freq: f64) -> Vec<f64> {
    let mut best = vec![0.0_f64; spec.magnitudes.len()];
    let mut f = PRECURSOR_BAND.0 * f2;
    while f <= PRECURSOR_BAND.1 * f2 {
        if (f / f2 - 1.0).abs() > PRECURSOR_GUARD {
            if let Some(c) = comb_contrast(spec, f0, f, max_freq) {
                for (b, v) in best.iter_mut().zip(c) {
                    *b = b.max(v);
                }
            }
        }
        f += SEARCH_STEP;
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    /// Last frame where the second series is absent.
    pub last_absent: usize,
    /// First frame of the final run where it is present.
    pub first_present: usize,
}

impl Transition {
    pub fn intermediate_frames(&self) -> usize {
        self.first_present.saturating_sub(self.last_absent + 1)
    }
}

/// Locates the switch from absent to a sustained present second series.
/// `None` if it is never absent or not present at the end.
pub fn find_transition(contrasts: &[f64]) -> Option<Transition> {
    let mut first_present = contrasts.len();
    while first_present > 0 && contrasts[first_present - 1] >= COMB_PRESENT {
        first_present -= 1;
    }
    if first_present == contrasts.len() {
        return None;
    }
    let last_absent = contrasts[..first_present]
        .iter()
        .rposition(|c| *c < COMB_ABSENT)?;
    Some(Transition {
        last_absent,
        first_present,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitReport {
    /// Comb contrast on the final second fundamental, per frame.
    pub contrast: Vec<f64>,
    pub transition: Option<Transition>,
    /// Frames up to the switch in which a nearby comb was already present.
    pub precursor_frames: usize,
}

impl SplitReport {
    /// The second series appears from nothing, at its final pitch, within
    /// `max_frames` frames.
    pub fn is_sudden(&self, max_frames: usize) -> bool {
        matches!(self.transition, Some(t) if t.intermediate_frames() <= max_frames)
            && self.precursor_frames == 0
    }

    /// Ridges per frame: the first series plus the second where present.
    pub fn ridge_counts(&self) -> Vec<u8> {
        self.contrast
            .iter()
            .map(|c| if *c >= COMB_PRESENT { 2 } else { 1 })
            .collect()
    }
}

/// Ridge check of a second series settling on `f2`.
pub fn analyse_split(spec: &Spectrogram, f0: f64, f2: f64, max_freq: f64) -> SplitReport {
    let contrast = comb_contrast(spec, f0, f2, max_freq).expect("f2 comb has too few lines");
    let transition = find_transition(&contrast);
    let precursor_frames = match transition {
        Some(t) => strongest_precursor(spec, f0, f2, max_freq)[..=t.last_absent]
            .iter()
            .filter(|c| **c >= PRECURSOR_PRESENT)
            .count(),
        None => 0,
    };
    SplitReport {
        contrast,
        transition,
        precursor_frames,
    }
}

/// Repetition frequency of a signal: the shortest autocorrelation lag whose
/// normalized peak reaches 0.9 of the best peak within `[lo_hz, hi_hz]`.
/// Refined by parabolic interpolation.
pub fn repetition_frequency(x: &[f64], sample_rate: u32, lo_hz: f64, hi_hz: f64) -> f64 {
    let sr = sample_rate as f64;
    let min_lag = (sr / hi_hz).floor() as usize;
    let max_lag = (sr / lo_hz).ceil() as usize;
    let r: Vec<f64> = (0..=max_lag + 1)
        .map(|lag| {
            if lag < min_lag.saturating_sub(1) {
                return 0.0;
            }
            let a = &x[..x.len() - lag];
            let b = &x[lag..];
            let num: f64 = a.iter().zip(b).map(|(u, v)| u * v).sum();
            let den = (a.iter().map(|u| u * u).sum::<f64>() * b.iter().map(|v| v * v).sum::<f64>())
                .sqrt();
            num / den
        })
        .collect();
    let peaks: Vec<usize> = (min_lag.max(1)..=max_lag)
        .filter(|&l| r[l] >= r[l - 1] && r[l] >= r[l + 1])
        .collect();
    let best = peaks
        .iter()
        .map(|&l| r[l])
        .fold(f64::NEG_INFINITY, f64::max);
    let lag = *peaks
        .iter()
        .find(|&&l| r[l] >= 0.9 * best)
        .expect("no peak");
    let (y0, y1, y2) = (r[lag - 1], r[lag], r[lag + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    let shift = if denom != 0.0 {
        0.5 * (y0 - y2) / denom
    } else {
        0.0
    };
    sr / (lag as f64 + shift)
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// A small mapper setup and its naive twin.
pub fn small_mapper(
    alphas: Vec<f64>,
    n_seeds: usize,
    levels: usize,
) -> (MapperProtocol, NaiveProtocol) {
    let run = Protocol {
        n_steps: 3000,
        tail: 250,
        tol: 1e-6,
        max_period: 64,
    };
    let proto = MapperProtocol {
        alphas: alphas.clone(),
        run,
        g0: 1.0,
        n_seeds,
        seed_max: 5.0,
        tol_semitones: 0.25,
        h: 1e-3,
        eps: 1e-6,
        refine_levels: levels,
    };
    let naive = NaiveProtocol {
        alphas,
        n_steps: run.n_steps,
        tail: run.tail,
        tol: run.tol,
        max_period: run.max_period,
        g0: 1.0,
        seeds: (1..=n_seeds)
            .map(|i| 5.0 * i as f64 / n_seeds as f64)
            .collect(),
        tol_semitones: 0.25,
        h: 1e-3,
        eps: 1e-6,
        levels,
        splits: REFINE_SPLITS,
    };
    (proto, naive)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol
}

/// Cell-by-cell differences between a mapper result and the naive one:
/// classifications must match exactly, values within `tol`.
pub fn map_mismatches(
    grid: &BetaGrid,
    map: &LikelihoodMap,
    naive: &[NaiveCell],
    tol: f64,
) -> Vec<String> {
    let mut out = Vec::new();
    if map.cells.len() != naive.len() {
        out.push(format!("{} cells vs {}", map.cells.len(), naive.len()));
        return out;
    }
    for (idx, (c, n)) in map.cells.iter().zip(naive).enumerate() {
        let (b1, b2) = grid.cell(idx);
        let here = format!("cell ({b1}, {b2})");
        if c.beta1 != n.beta1 || c.beta2 != n.beta2 {
            out.push(format!("{here}: grid order differs"));
        }
        match (c.max_interval, n.max) {
            (MaxInterval::NoTone, NaiveMax::NoTone)
            | (MaxInterval::StableOnly, NaiveMax::StableOnly) => {}
            (MaxInterval::Interval(i), NaiveMax::Ratio(r)) if close(i.ratio(), r, tol) => {}
            (a, b) => out.push(format!("{here}: max interval {a:?} vs {b:?}")),
        }
        match (c.alpha, n.alpha) {
            (None, None) => {}
            (Some(a), Some(b)) if close(a, b, tol) => {}
            (a, b) => out.push(format!("{here}: alpha {a:?} vs {b:?}")),
        }
        if !close(c.reliability, n.reliability, tol) {
            out.push(format!(
                "{here}: reliability {} vs {}",
                c.reliability, n.reliability
            ));
        }
        if !close(c.derivative, n.derivative, tol) {
            out.push(format!(
                "{here}: derivative {} vs {}",
                c.derivative, n.derivative
            ));
        }
        if !close(c.likelihood, n.likelihood, tol) {
            out.push(format!(
                "{here}: likelihood {} vs {}",
                c.likelihood, n.likelihood
            ));
        }
    }
    out
}
