use std::fmt;

use super::Trajectory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeKind {
    FixedPoint,
    /// A cycle of period two or more.
    Periodic,
    /// Bounded, with no period up to the search limit.
    Chaotic,
    Divergent,
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeKind::FixedPoint => "fixed-point",
            RegimeKind::Periodic => "periodic",
            RegimeKind::Chaotic => "chaotic",
            RegimeKind::Divergent => "divergent",
        })
    }
}

/// Long-run behaviour of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    kind: RegimeKind,
    period: Option<usize>,
    limit_values: Vec<f64>,
}

impl RegimeReport {
    pub fn fixed_point(value: f64) -> Self {
        Self {
            kind: RegimeKind::FixedPoint,
            period: Some(1),
            limit_values: vec![value],
        }
    }

    /// A cycle; `values` are sorted and must be distinct.
    pub fn periodic(period: usize, mut values: Vec<f64>) -> Self {
        if period == 1 {
            return Self::fixed_point(values[0]);
        }
        values.sort_by(f64::total_cmp);
        Self {
            kind: RegimeKind::Periodic,
            period: Some(period),
            limit_values: values,
        }
    }

    pub fn chaotic() -> Self {
        Self {
            kind: RegimeKind::Chaotic,
            period: None,
            limit_values: Vec::new(),
        }
    }

    pub fn divergent() -> Self {
        Self {
            kind: RegimeKind::Divergent,
            period: None,
            limit_values: Vec::new(),
        }
    }

    pub fn kind(&self) -> RegimeKind {
        self.kind
    }

    pub fn period(&self) -> Option<usize> {
        self.period
    }

    /// Distinct cycle values, ascending.
    pub fn limit_values(&self) -> &[f64] {
        &self.limit_values
    }

    pub fn is_period(&self, p: usize) -> bool {
        self.period == Some(p)
    }

    /// Short label used in CSV output: `fixed-point`, `period-3`, ...
    pub fn label(&self) -> String {
        match (self.kind, self.period) {
            (RegimeKind::Periodic, Some(p)) => format!("period-{p}"),
            (kind, _) => kind.to_string(),
        }
    }
}

/// Classifies the last `tail` states of a trajectory.
///
/// The reported period is the smallest shift `p <= max_period` under which
/// every tail sample matches its successor `p` steps later within
/// `tol * max|g|`.
pub fn classify_regime(
    trajectory: &Trajectory,
    tail: usize,
    tol: f64,
    max_period: usize,
) -> Result<RegimeReport> {
    if trajectory.diverged() {
        return Ok(RegimeReport::divergent());
    }
    let samples = trajectory.tail(tail).ok_or_else(|| {
        Error::param(format!(
            "tail of {tail} requested but only {} states recorded",
            trajectory.states.len()
        ))
    })?;
    Ok(classify_tail(samples, tol, max_period))
}

pub(crate) fn classify_tail(samples: &[f64], tol: f64, max_period: usize) -> RegimeReport {
    let scale = samples.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    let eps = tol * scale;
    let period = (1..=max_period.min(samples.len().saturating_sub(1))).find(|&p| {
        samples
            .iter()
            .zip(&samples[p..])
            .all(|(a, b)| (a - b).abs() <= eps)
    });
    match period {
        None => RegimeReport::chaotic(),
        Some(1) => RegimeReport::fixed_point(*samples.last().unwrap()),
        Some(p) => {
            let cycle = samples[samples.len() - p..].to_vec();
            RegimeReport::periodic(p, merge_close(cycle, eps))
        }
    }
}

/// Sorts and merges values closer than `eps` to their predecessor.
pub(crate) fn merge_close(mut values: Vec<f64>, eps: f64) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(values.len());
    for v in values {
        match out.last() {
            Some(&last) if v - last <= eps => {}
            _ => out.push(v),
        }
    }
    out
}
