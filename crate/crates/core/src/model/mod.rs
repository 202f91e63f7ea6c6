//! The Impulse Pattern Formulation as an iterated map.
//!
//! The simple form advances a single system state,
//!
//! ```text
//! g+ = g - ln(g / alpha)
//! ```
//!
//! and the general form adds delayed reflections of strength `beta_k` that
//! act on the state `k` iterations later,
//!
//! ```text
//! g+ = g - ln((g - sum_k beta_k * exp(g - g_{k-})) / alpha)
//! ```
//!
//! A negative log argument is a modeled outcome (the state would become
//! complex and runs away), so it is reported as a [`Divergence`] rather
//! than an error.

mod bounds;
mod regime;

pub use bounds::{
    alpha_min, alpha_min_with, first_bifurcation_alpha, fixed_point, fixed_point_spectral_radius,
    linearization, simple_map_derivative, AlphaMinSearch,
};
pub(crate) use regime::merge_close;
pub use regime::{classify_regime, RegimeKind, RegimeReport};

use crate::error::{Error, Result};

/// States whose magnitude exceeds this are treated as runaway growth.
pub const DIVERGENCE_CAP: f64 = 1e6;

/// Longest cycle looked for by fast-forwarding and period detection.
pub const MAX_PERIOD: usize = 64;

/// Iteration protocol used for orbit diagrams and regime classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    /// Number of map iterations after seeding.
    pub n_steps: usize,
    /// Number of trailing states inspected.
    pub tail: usize,
    /// Relative tolerance for comparing states.
    pub tol: f64,
    /// Longest period tested before calling an orbit chaotic.
    pub max_period: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            n_steps: 2500,
            tail: 250,
            tol: 1e-6,
            max_period: MAX_PERIOD,
        }
    }
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::param("n_steps must be at least 1"));
        }
        if self.tail == 0 || self.tail > self.n_steps {
            return Err(Error::param(format!(
                "tail must be in 1..={}, got {}",
                self.n_steps, self.tail
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tolerance must be positive"));
        }
        if self.max_period == 0 || self.max_period >= self.tail {
            return Err(Error::param("max_period must be in 1..tail"));
        }
        Ok(())
    }
}

/// Non-fatal constraint violations of a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintWarning {
    /// `alpha < sum(betas)`: more energy is reflected than enters.
    Energy,
    /// The strengths do not decrease with distance (`alpha > beta_1 > beta_2 > ...`).
    Cascade,
}

/// Model configuration: input strength, reflection strengths and seed state.
#[derive(Debug, Clone, PartialEq)]
pub struct IpfParams {
    alpha: f64,
    betas: Vec<f64>,
    g0: f64,
}

impl IpfParams {
    pub fn new(alpha: f64, betas: Vec<f64>, g0: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if let Some(b) = betas.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
            return Err(Error::Domain(format!(
                "reflection strengths must be non-negative, got {b}"
            )));
        }
        if !(g0 > 0.0) || !g0.is_finite() {
            return Err(Error::Domain(format!("g0 must be positive, got {g0}")));
        }
        Ok(Self { alpha, betas, g0 })
    }

    /// Simple form: no reflections.
    pub fn simple(alpha: f64, g0: f64) -> Result<Self> {
        Self::new(alpha, Vec::new(), g0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.betas.clone(), self.g0)
    }

    pub fn with_g0(&self, g0: f64) -> Result<Self> {
        Self::new(self.alpha, self.betas.clone(), g0)
    }

    pub fn beta_sum(&self) -> f64 {
        self.betas.iter().sum()
    }

    pub fn violates_energy(&self) -> bool {
        self.alpha < self.beta_sum()
    }

    pub fn violates_cascade(&self) -> bool {
        let mut prev = self.alpha;
        for &b in &self.betas {
            if b >= prev {
                return true;
            }
            prev = b;
        }
        false
    }

    pub fn warnings(&self) -> Vec<ConstraintWarning> {
        let mut out = Vec::new();
        if self.violates_energy() {
            out.push(ConstraintWarning::Energy);
        }
        if self.violates_cascade() {
            out.push(ConstraintWarning::Cascade);
        }
        out
    }
}

/// Current state plus the delayed states `g_-, g_2-, ...` the reflections see.
#[derive(Debug, Clone, PartialEq)]
pub struct StateHistory {
    current: f64,
    past: Vec<f64>,
}

impl StateHistory {
    /// `past[0]` is `g_-`, `past[1]` is `g_2-`, and so on.
    pub fn new(current: f64, past: Vec<f64>) -> Result<Self> {
        if !current.is_finite() || past.iter().any(|g| !g.is_finite()) {
            return Err(Error::Domain("history entries must be finite".into()));
        }
        Ok(Self { current, past })
    }

    /// History sitting on a constant state.
    pub fn constant(g: f64, depth: usize) -> Result<Self> {
        Self::new(g, vec![g; depth])
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn past(&self) -> &[f64] {
        &self.past
    }

    /// Pushes a new state, discarding the oldest delayed one.
    pub fn shift(&mut self, next: f64) {
        if !self.past.is_empty() {
            self.past.rotate_right(1);
            self.past[0] = self.current;
        }
        self.current = next;
    }
}

/// The log argument became non-positive or the state ran away.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Divergence;

/// One step of the simple form.
pub fn step_simple(g: f64, alpha: f64) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::Domain(format!("state must be positive, got {g}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    Ok(g - (g / alpha).ln())
}

/// One step of the general form. The caller shifts the history.
pub fn step_general(
    history: &StateHistory,
    params: &IpfParams,
) -> Result<std::result::Result<f64, Divergence>> {
    if history.past.len() != params.betas.len() {
        return Err(Error::param(format!(
            "history holds {} delayed states but there are {} reflections",
            history.past.len(),
            params.betas.len()
        )));
    }
    Ok(next_state(
        history.current,
        history.past.iter().copied(),
        &params.betas,
        params.alpha,
    ))
}

/// Map kernel shared by every iteration path. Keep the arithmetic order
/// fixed: sweeps rely on bit-identical trajectories.
#[inline]
pub(crate) fn next_state(
    g: f64,
    past: impl Iterator<Item = f64>,
    betas: &[f64],
    alpha: f64,
) -> std::result::Result<f64, Divergence> {
    let mut arg = g;
    for (b, gp) in betas.iter().zip(past) {
        arg -= b * (g - gp).exp();
    }
    let arg = arg / alpha;
    if !(arg > 0.0) {
        return Err(Divergence);
    }
    Ok(g - arg.ln())
}

#[inline]
pub(crate) fn runaway(g: f64) -> bool {
    !g.is_finite() || g.abs() > DIVERGENCE_CAP
}

/// How the delayed states are initialised.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Seeding {
    /// Run the simple form from `g0` once per reflection and use those
    /// iterates as the history, oldest first.
    #[default]
    SimpleFromG0,
    /// Explicit initial states, newest first: `[g, g_-, g_2-, ...]`.
    /// Must hold exactly one more entry than there are reflections.
    Explicit(Vec<f64>),
}

impl Seeding {
    pub fn is_explicit(&self) -> bool {
        matches!(self, Seeding::Explicit(_))
    }
}

/// A run of the map.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Chronological states, starting with the seeded history.
    pub states: Vec<f64>,
    /// Index of the first state that could not be computed.
    pub diverged_at: Option<usize>,
    /// Number of leading states that form the initial history.
    pub seed_len: usize,
    pub params: IpfParams,
    pub seeding: Seeding,
}

impl Trajectory {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// Last `n` states, or `None` if fewer were recorded.
    pub fn tail(&self, n: usize) -> Option<&[f64]> {
        self.states
            .len()
            .checked_sub(n)
            .map(|start| &self.states[start..])
    }

    pub fn last(&self) -> Option<f64> {
        self.states.last().copied()
    }
}

/// Runs `n_steps` iterations from `params.g0` with the default seeding.
pub fn iterate(params: &IpfParams, n_steps: usize) -> Result<Trajectory> {
    iterate_with(params, &Seeding::SimpleFromG0, n_steps)
}

/// Runs `n_steps` iterations after seeding the history.
///
/// Once the full state window repeats bit for bit the orbit is periodic,
/// so the remaining states are copied instead of recomputed; the result is
/// identical to stepping every iteration.
pub fn iterate_with(params: &IpfParams, seeding: &Seeding, n_steps: usize) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::param("n_steps must be at least 1"));
    }
    let depth = params.betas.len();
    let mut states = Vec::with_capacity(n_steps + depth + 1);

    match seeding {
        Seeding::SimpleFromG0 => {
            states.push(params.g0);
            for _ in 0..depth {
                let g = *states.last().unwrap();
                let next = if g > 0.0 {
                    g - (g / params.alpha).ln()
                } else {
                    f64::NAN
                };
                if !(next > 0.0) || runaway(next) {
                    let at = states.len();
                    return Ok(diverged(states, at, depth + 1, params, seeding));
                }
                states.push(next);
            }
        }
        Seeding::Explicit(init) => {
            if init.len() != depth + 1 {
                return Err(Error::param(format!(
                    "explicit seeding needs {} states, got {}",
                    depth + 1,
                    init.len()
                )));
            }
            if init.iter().any(|g| !g.is_finite()) {
                return Err(Error::Domain("seed states must be finite".into()));
            }
            states.extend(init.iter().rev());
        }
    }

    let seed_len = states.len();
    let total = seed_len + n_steps;
    let betas = params.betas.as_slice();
    let alpha = params.alpha;

    while states.len() < total {
        let i = states.len() - 1;
        let g = states[i];
        let past = (1..=depth).map(|k| states[i - k]);
        match next_state(g, past, betas, alpha) {
            Ok(next) if !runaway(next) => states.push(next),
            _ => {
                let at = states.len();
                return Ok(diverged(states, at, seed_len, params, seeding));
            }
        }
        let n = states.len();
        if n % MAX_PERIOD == 0 {
            if let Some(p) = repeating_window(&states, depth, seed_len) {
                while states.len() < total {
                    states.push(states[states.len() - p]);
                }
            }
        }
    }

    Ok(Trajectory {
        states,
        diverged_at: None,
        seed_len,
        params: params.clone(),
        seeding: seeding.clone(),
    })
}

fn diverged(
    states: Vec<f64>,
    at: usize,
    seed_len: usize,
    params: &IpfParams,
    seeding: &Seeding,
) -> Trajectory {
    Trajectory {
        states,
        diverged_at: Some(at),
        seed_len,
        params: params.clone(),
        seeding: seeding.clone(),
    }
}

/// Smallest `p` such that the last `depth + 1` states equal, bit for bit,
/// the window ending `p` states earlier, where that earlier window was
/// itself the input of a general step.
fn repeating_window(states: &[f64], depth: usize, seed_len: usize) -> Option<usize> {
    let last = states.len() - 1;
    (1..=MAX_PERIOD).find(|&p| {
        let Some(earlier) = last.checked_sub(p) else {
            return false;
        };
        if earlier + 1 < seed_len || earlier < depth {
            return false;
        }
        (0..=depth).all(|j| states[last - j].to_bits() == states[earlier - j].to_bits())
    })
}
