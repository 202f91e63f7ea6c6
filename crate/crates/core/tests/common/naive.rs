//! Straight nested-loop likelihood mapper: no fast-forward, no pruning, no
//! parallelism. Used to check the real mapper cell by cell.

#[derive(Debug, Clone)]
pub struct NaiveProtocol {
    pub alphas: Vec<f64>,
    pub n_steps: usize,
    pub tail: usize,
    pub tol: f64,
    pub max_period: usize,
    pub g0: f64,
    pub seeds: Vec<f64>,
    pub tol_semitones: f64,
    pub h: f64,
    pub eps: f64,
    pub levels: usize,
    pub splits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NaiveMax {
    NoTone,
    StableOnly,
    Ratio(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveCell {
    pub beta1: f64,
    pub beta2: f64,
    pub max: NaiveMax,
    pub alpha: Option<f64>,
    pub reliability: f64,
    pub derivative: f64,
    pub likelihood: f64,
}

/// All states after the seeds, or `None` on divergence.
fn orbit(b1: f64, b2: f64, alpha: f64, g0: f64, n: usize) -> Option<Vec<f64>> {
    let bad = |g: f64| !g.is_finite() || g.abs() > 1e6;
    // history from two steps of g - ln(g / alpha)
    let s1 = g0 - (g0 / alpha).ln();
    if !(s1 > 0.0) || bad(s1) {
        return None;
    }
    let s2 = s1 - (s1 / alpha).ln();
    if !(s2 > 0.0) || bad(s2) {
        return None;
    }
    let mut all = vec![g0, s1, s2];
    for _ in 0..n {
        let k = all.len();
        let (g, gm1, gm2) = (all[k - 1], all[k - 2], all[k - 3]);
        let mut arg = g;
        arg -= b1 * (g - gm1).exp();
        arg -= b2 * (g - gm2).exp();
        arg /= alpha;
        if !(arg > 0.0) {
            return None;
        }
        let next = g - arg.ln();
        if bad(next) {
            return None;
        }
        all.push(next);
    }
    Some(all)
}

/// Frequency ratio in `]0, 1]` of the orbit, `Some(1)` for a fixed point.
pub fn naive_ratio(b1: f64, b2: f64, alpha: f64, g0: f64, p: &NaiveProtocol) -> Option<f64> {
    let all = orbit(b1, b2, alpha, g0, p.n_steps)?;
    let tail = &all[all.len() - p.tail..];
    let mut scale = 0.0_f64;
    for g in tail {
        scale = scale.max(g.abs());
    }
    let eps = p.tol * scale;
    let mut period = None;
    for q in 1..=p.max_period.min(tail.len() - 1) {
        let mut ok = true;
        for i in 0..tail.len() - q {
            if (tail[i] - tail[i + q]).abs() > eps {
                ok = false;
                break;
            }
        }
        if ok {
            period = Some(q);
            break;
        }
    }
    match period {
        Some(1) => Some(1.0),
        Some(2) => {
            let a = tail[tail.len() - 2];
            let b = tail[tail.len() - 1];
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if hi - lo <= eps || !(lo > 0.0) {
                None
            } else {
                Some(lo / hi)
            }
        }
        _ => None,
    }
}

fn semitones(ratio: f64) -> f64 {
    -12.0 * ratio.log2()
}

pub fn naive_map(
    beta1: &[f64],
    beta2: &[f64],
    target_semitones: f64,
    p: &NaiveProtocol,
) -> Vec<NaiveCell> {
    let mut cells = Vec::new();
    for &b1 in beta1 {
        for &b2 in beta2 {
            cells.push(naive_cell(b1, b2, target_semitones, p));
        }
    }
    let mut max = 0.0_f64;
    for c in &cells {
        max = max.max(c.likelihood);
    }
    if max > 0.0 {
        for c in &mut cells {
            c.likelihood /= max;
        }
    }
    cells
}

fn naive_cell(b1: f64, b2: f64, target: f64, p: &NaiveProtocol) -> NaiveCell {
    let ratios: Vec<Option<f64>> = p
        .alphas
        .iter()
        .map(|&a| naive_ratio(b1, b2, a, p.g0, p))
        .collect();

    let mut smallest: Option<f64> = None;
    for r in ratios.iter().flatten() {
        smallest = Some(match smallest {
            Some(s) if s <= *r => s,
            _ => *r,
        });
    }
    let max = match smallest {
        None => NaiveMax::NoTone,
        Some(1.0) => NaiveMax::StableOnly,
        Some(r) => NaiveMax::Ratio(r),
    };

    // candidates: matching samples, then refined straddling brackets
    let off = |r: f64| semitones(r) - target;
    let defined: Vec<(f64, f64)> = p
        .alphas
        .iter()
        .zip(&ratios)
        .filter_map(|(a, r)| r.map(|r| (*a, off(r))))
        .collect();
    let mut candidates = Vec::new();
    for &(a, d) in &defined {
        if d.abs() <= p.tol_semitones {
            candidates.push(a);
        }
    }
    for i in 0..defined.len().saturating_sub(1) {
        let (lo, hi) = (defined[i], defined[i + 1]);
        if lo.1 * hi.1 < 0.0 {
            if let Some(a) = bracket(b1, b2, lo, hi, target, p) {
                candidates.push(a);
            }
        }
    }

    // score every candidate, keep the highest, ties to smallest (d, alpha)
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for &a in &candidates {
        let d = naive_derivative(b1, b2, a, p);
        let mut hits = 0;
        for &g0 in &p.seeds {
            if let Some(r) = naive_ratio(b1, b2, a, g0, p) {
                if (off(r)).abs() <= p.tol_semitones {
                    hits += 1;
                }
            }
        }
        let rel = hits as f64 / p.seeds.len() as f64;
        let l = rel / d.max(p.eps);
        if !(l > 0.0) {
            continue;
        }
        let better = match best {
            None => true,
            Some((ba, _, bd, bl)) => l > bl || (l == bl && (d, a) < (bd, ba)),
        };
        if better {
            best = Some((a, rel, d, l));
        }
    }
    match best {
        Some((a, rel, d, l)) => NaiveCell {
            beta1: b1,
            beta2: b2,
            max,
            alpha: Some(a),
            reliability: rel,
            derivative: d,
            likelihood: l,
        },
        None => NaiveCell {
            beta1: b1,
            beta2: b2,
            max,
            alpha: None,
            reliability: 0.0,
            derivative: f64::INFINITY,
            likelihood: 0.0,
        },
    }
}

fn bracket(
    b1: f64,
    b2: f64,
    mut lo: (f64, f64),
    mut hi: (f64, f64),
    target: f64,
    p: &NaiveProtocol,
) -> Option<f64> {
    for _ in 0..p.levels {
        let mut pts = vec![lo];
        for k in 1..p.splits {
            let a = lo.0 + (hi.0 - lo.0) * k as f64 / p.splits as f64;
            if let Some(r) = naive_ratio(b1, b2, a, p.g0, p) {
                let d = semitones(r) - target;
                if d.abs() <= p.tol_semitones / 5.0 {
                    return Some(a);
                }
                pts.push((a, d));
            }
        }
        pts.push(hi);
        let mut next = None;
        for i in 0..pts.len() - 1 {
            if pts[i].1 * pts[i + 1].1 < 0.0 {
                next = Some((pts[i], pts[i + 1]));
                break;
            }
        }
        (lo, hi) = next?;
    }
    None
}

fn naive_derivative(b1: f64, b2: f64, a: f64, p: &NaiveProtocol) -> f64 {
    if a - p.h <= 0.0 || a + p.h > 1.0 {
        return f64::INFINITY;
    }
    match (
        naive_ratio(b1, b2, a + p.h, p.g0, p),
        naive_ratio(b1, b2, a - p.h, p.g0, p),
    ) {
        (Some(u), Some(d)) => (u - d).abs() / (2.0 * p.h),
        _ => f64::INFINITY,
    }
}
