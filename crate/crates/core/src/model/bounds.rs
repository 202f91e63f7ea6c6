//! Fixed point, local stability and the numerically located boundaries
//! (divergence threshold and first period doubling).

use nalgebra::DMatrix;

use super::{classify_regime, iterate_with, IpfParams, Protocol, RegimeKind, Seeding};
use crate::error::{Error, Result};

/// `alpha + sum(betas)`: the state for which every iteration returns itself.
pub fn fixed_point(params: &IpfParams) -> f64 {
    params.alpha() + params.beta_sum()
}

/// Derivative of the simple map `g - ln(g / alpha)` with respect to `g`.
/// Independent of alpha; at the fixed point `g = alpha` it is `1 - 1/alpha`.
pub fn simple_map_derivative(g: f64) -> f64 {
    1.0 - 1.0 / g
}

/// Partial derivatives of the general map at its fixed point, with respect
/// to `g, g_-, g_2-, ...`.
pub fn linearization(params: &IpfParams) -> Vec<f64> {
    let alpha = params.alpha();
    let mut coeffs = Vec::with_capacity(params.betas().len() + 1);
    coeffs.push(1.0 - (1.0 - params.beta_sum()) / alpha);
    coeffs.extend(params.betas().iter().map(|b| -b / alpha));
    coeffs
}

/// Spectral radius of the delay map's Jacobian at the fixed point; the fixed
/// point is locally stable when this is below one.
pub fn fixed_point_spectral_radius(params: &IpfParams) -> f64 {
    let coeffs = linearization(params);
    let n = coeffs.len();
    if n == 1 {
        return coeffs[0].abs();
    }
    let companion = DMatrix::from_fn(n, n, |r, c| {
        if r == 0 {
            coeffs[c]
        } else if r == c + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Search settings for [`alpha_min_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaMinSearch {
    pub lo: f64,
    pub hi: f64,
    /// Spacing of the bracketing scan.
    pub scan_step: f64,
    /// Iterations a run must survive to count as non-divergent.
    pub horizon: usize,
    pub tol: f64,
}

impl Default for AlphaMinSearch {
    fn default() -> Self {
        Self {
            lo: 1e-6,
            hi: 10.0,
            scan_step: 0.005,
            horizon: 2500,
            tol: 1e-9,
        }
    }
}

fn diverges(betas: &[f64], g0: f64, alpha: f64, horizon: usize) -> Result<bool> {
    let params = IpfParams::new(alpha, betas.to_vec(), g0)?;
    Ok(iterate_with(&params, &Seeding::SimpleFromG0, horizon)?.diverged())
}

/// Smallest alpha whose run from `g0` survives the default horizon.
pub fn alpha_min(betas: &[f64], g0: f64) -> Result<f64> {
    alpha_min_with(betas, g0, &AlphaMinSearch::default())
}

/// Scans alpha upwards until the first non-divergent run, then bisects the
/// last step of the scan.
///
/// With reflections the divergent set is not a half-line (large alpha can
/// diverge again through the seeding), so a plain bisection over the whole
/// range is not valid; the scan only assumes monotonicity within one step.
pub fn alpha_min_with(betas: &[f64], g0: f64, search: &AlphaMinSearch) -> Result<f64> {
    if !(g0 > 0.0) {
        return Err(Error::Domain(format!("g0 must be positive, got {g0}")));
    }
    if !(search.lo > 0.0 && search.lo < search.hi && search.scan_step > 0.0) {
        return Err(Error::param("invalid alpha_min search range"));
    }
    if !diverges(betas, g0, search.lo, search.horizon)? {
        return Err(Error::Search(format!(
            "no divergence at alpha = {}; no lower boundary in range",
            search.lo
        )));
    }
    let mut below = search.lo;
    let mut above = None;
    let mut k = 1;
    loop {
        let a = search.lo + k as f64 * search.scan_step;
        if a > search.hi {
            break;
        }
        if diverges(betas, g0, a, search.horizon)? {
            below = a;
        } else {
            above = Some(a);
            break;
        }
        k += 1;
    }
    let mut above = above.ok_or_else(|| {
        Error::Search(format!(
            "every alpha in [{}, {}] diverges",
            search.lo, search.hi
        ))
    })?;
    while above - below > search.tol {
        let mid = 0.5 * (below + above);
        if diverges(betas, g0, mid, search.horizon)? {
            below = mid;
        } else {
            above = mid;
        }
    }
    Ok(above)
}

/// Horizon used when bisecting the loss of fixed-point stability; close to
/// the bifurcation the contraction rate approaches one and short runs have
/// not settled.
const BIFURCATION_HORIZON: usize = 400_000;
const BIFURCATION_SCAN_STEP: f64 = 0.005;
const BIFURCATION_TOL: f64 = 1e-7;
/// Relative offset of the seed history from the fixed point.
const BIFURCATION_SEED_OFFSET: f64 = 1e-3;

fn settles_on_fixed_point(betas: &[f64], alpha: f64, n_steps: usize) -> Result<RegimeKind> {
    let proto = Protocol::default();
    let params = IpfParams::new(alpha, betas.to_vec(), 1.0)?;
    let seed = fixed_point(&params) * (1.0 + BIFURCATION_SEED_OFFSET);
    let seeding = Seeding::Explicit(vec![seed; betas.len() + 1]);
    let t = iterate_with(&params, &seeding, n_steps)?;
    let report = classify_regime(&t, proto.tail, proto.tol, proto.max_period)?;
    Ok(report.kind())
}

/// Largest alpha below which the fixed point gives way to a period-2 orbit.
///
/// Runs start next to the fixed point. Alpha is scanned downwards from 1
/// until the orbit stops settling, the far side of the step is checked to
/// be period 2, and the step is then bisected with a long horizon.
pub fn first_bifurcation_alpha(betas: &[f64]) -> Result<f64> {
    let proto = Protocol::default();
    let mut above = 1.0;
    if settles_on_fixed_point(betas, above, proto.n_steps)? != RegimeKind::FixedPoint {
        return Err(Error::Search(
            "fixed point is not stable at alpha = 1".into(),
        ));
    }
    let mut below = None;
    for k in 1.. {
        let a = 1.0 - k as f64 * BIFURCATION_SCAN_STEP;
        if a <= 0.0 {
            break;
        }
        if settles_on_fixed_point(betas, a, proto.n_steps)? == RegimeKind::FixedPoint {
            above = a;
        } else {
            below = Some(a);
            break;
        }
    }
    let mut below =
        below.ok_or_else(|| Error::Search("fixed point never loses stability".into()))?;

    let params = IpfParams::new(below, betas.to_vec(), 1.0)?;
    let seed = fixed_point(&params) * (1.0 + BIFURCATION_SEED_OFFSET);
    let t = iterate_with(
        &params,
        &Seeding::Explicit(vec![seed; betas.len() + 1]),
        proto.n_steps,
    )?;
    let report = classify_regime(&t, proto.tail, proto.tol, proto.max_period)?;
    if !report.is_period(2) {
        return Err(Error::Search(format!(
            "fixed point at alpha = {below} gives way to {} rather than period 2",
            report.label()
        )));
    }

    while above - below > BIFURCATION_TOL {
        let mid = 0.5 * (below + above);
        if settles_on_fixed_point(betas, mid, BIFURCATION_HORIZON)? == RegimeKind::FixedPoint {
            above = mid;
        } else {
            below = mid;
        }
    }
    Ok(0.5 * (below + above))
}
