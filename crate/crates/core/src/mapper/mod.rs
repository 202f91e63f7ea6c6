//! Two-reflection clarinet model over the `(beta_1, beta_2)` plane.
//!
//! A multiphonic with two perceived pitches is read off a period-2 orbit:
//! the ratio of its two limit values, folded into `]0, 1]`, is the audible
//! interval. For every grid cell alpha is scanned over `(0, 1]`; the cell's
//! likelihood for a target interval is the fraction of initial values that
//! reproduce it, divided by how fast the interval drifts with alpha.

mod io;
mod scan;

pub use io::{
    parse_catalog, read_catalog, read_map_csv, write_centroid_csv, write_interval_map_csv,
    write_map_csv,
};
pub use scan::{
    catalog_scan, centroid, interval_at, interval_derivative, likelihood_map, max_interval_map,
    reliability, scan_plane, BetaGrid, CatalogRow, CellScan, CentroidResult, IntervalMap,
    LikelihoodCell, LikelihoodMap, MapperProtocol, MaxInterval, PlaneScan, REFINE_SPLITS,
};

use crate::error::{Error, Result};
use crate::model::{RegimeKind, RegimeReport};

/// An audible interval as a frequency ratio folded into `]0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Interval {
    ratio: f64,
}

impl Interval {
    pub fn from_ratio(ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::Domain(format!(
                "interval ratio must lie in ]0, 1], got {ratio}"
            )));
        }
        Ok(Self { ratio })
    }

    pub fn from_semitones(semitones: f64) -> Result<Self> {
        if !(semitones >= 0.0) || !semitones.is_finite() {
            return Err(Error::Domain(format!(
                "semitones must be finite and non-negative, got {semitones}"
            )));
        }
        Self::from_ratio((-semitones / 12.0).exp2())
    }

    /// Interval between two positive limit values, in either order.
    pub fn from_limits(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain(format!(
                "limit values must be positive, got {a} and {b}"
            )));
        }
        Self::from_ratio((a / b).min(b / a))
    }

    pub fn unison() -> Self {
        Self { ratio: 1.0 }
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Frequency ratio of the upper to the lower pitch, `>= 1`.
    pub fn inverse_ratio(&self) -> f64 {
        1.0 / self.ratio
    }

    pub fn semitones(&self) -> f64 {
        12.0 * (1.0 / self.ratio).log2()
    }
}

/// Interval carried by a classified orbit.
///
/// A fixed point is a unison. A period-2 orbit with positive limits gives
/// the ratio of its two values. Everything else (chaos, divergence, longer
/// cycles, cycles through non-positive states) carries no interval.
pub fn extract_interval(report: &RegimeReport) -> Option<Interval> {
    match report.kind() {
        RegimeKind::FixedPoint => Some(Interval::unison()),
        RegimeKind::Periodic if report.is_period(2) => match report.limit_values() {
            [a, b] => Interval::from_limits(*a, *b).ok(),
            _ => None,
        },
        _ => None,
    }
}
