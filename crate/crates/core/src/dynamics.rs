//! Parameter sweeps over `1/alpha`: orbit diagrams and regime maps.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{classify_regime, iterate_with, IpfParams, Protocol, RegimeReport, Seeding};

/// Evenly spaced `1/alpha` values, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvAlphaRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl InvAlphaRange {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let r = Self { lo, hi, n };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo < self.hi && self.hi.is_finite()) {
            return Err(Error::param(format!(
                "1/alpha range must satisfy 0 < lo < hi, got {}:{}",
                self.lo, self.hi
            )));
        }
        if self.n < 2 {
            return Err(Error::param("a sweep needs at least 2 points"));
        }
        Ok(())
    }

    pub fn axis(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i == self.n - 1 {
                    self.hi
                } else {
                    self.lo + i as f64 * step
                }
            })
            .collect()
    }
}

/// Run settings shared by every column of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSetup {
    pub betas: Vec<f64>,
    /// Seed state for [`Seeding::SimpleFromG0`].
    pub g0: f64,
    pub seeding: Seeding,
}

impl SweepSetup {
    pub fn new(betas: Vec<f64>, g0: f64, seeding: Seeding) -> Self {
        Self { betas, g0, seeding }
    }

    pub(crate) fn params(&self, inv_alpha: f64) -> Result<IpfParams> {
        IpfParams::new(1.0 / inv_alpha, self.betas.clone(), self.g0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrbitColumn {
    Samples(Vec<f64>),
    Diverged,
}

impl OrbitColumn {
    pub fn samples(&self) -> Option<&[f64]> {
        match self {
            OrbitColumn::Samples(s) => Some(s),
            OrbitColumn::Diverged => None,
        }
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, OrbitColumn::Diverged)
    }
}

/// Tail samples of one run per swept `1/alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitDiagram {
    pub axis: Vec<f64>,
    pub columns: Vec<OrbitColumn>,
    pub betas: Vec<f64>,
    pub g0: f64,
    pub seeding: Seeding,
    pub n_steps: usize,
    pub tail: usize,
}

impl OrbitDiagram {
    /// Number of distinct tail values per column; `None` for divergent ones.
    pub fn distinct_counts(&self, tol: f64) -> Vec<Option<usize>> {
        self.columns
            .iter()
            .map(|c| c.samples().map(|s| distinct_values(s, tol).len()))
            .collect()
    }
}

/// Runs one column per axis value, in parallel, keeping axis order.
pub fn orbit_diagram(
    setup: &SweepSetup,
    range: InvAlphaRange,
    n_steps: usize,
    tail: usize,
) -> Result<OrbitDiagram> {
    range.validate()?;
    if tail == 0 || tail > n_steps {
        return Err(Error::param(format!(
            "tail must be in 1..={n_steps}, got {tail}"
        )));
    }
    let axis = range.axis();
    let columns = axis
        .par_iter()
        .map(|&x| {
            let t = iterate_with(&setup.params(x)?, &setup.seeding, n_steps)?;
            Ok(if t.diverged() {
                OrbitColumn::Diverged
            } else {
                OrbitColumn::Samples(t.tail(tail).unwrap().to_vec())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OrbitDiagram {
        axis,
        columns,
        betas: setup.betas.clone(),
        g0: setup.g0,
        seeding: setup.seeding.clone(),
        n_steps,
        tail,
    })
}

/// Classifies every column of a sweep.
pub fn regime_map(
    setup: &SweepSetup,
    range: InvAlphaRange,
    protocol: &Protocol,
) -> Result<Vec<(f64, RegimeReport)>> {
    range.validate()?;
    protocol.validate()?;
    range
        .axis()
        .into_par_iter()
        .map(|x| {
            let t = iterate_with(&setup.params(x)?, &setup.seeding, protocol.n_steps)?;
            let r = classify_regime(&t, protocol.tail, protocol.tol, protocol.max_period)?;
            Ok((x, r))
        })
        .collect()
}

/// Sorted representatives of `samples` after merging values closer than
/// `tol * max|g|`.
pub fn distinct_values(samples: &[f64], tol: f64) -> Vec<f64> {
    let scale = samples.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    crate::model::merge_close(samples.to_vec(), tol * scale)
}

/// Writes `inv_alpha,sample_index,g`, one row per tail sample, and
/// `inv_alpha,DIVERGED` for divergent columns.
pub fn write_orbit_csv<W: Write>(diagram: &OrbitDiagram, mut out: W) -> Result<()> {
    writeln!(out, "inv_alpha,sample_index,g")?;
    for (x, col) in diagram.axis.iter().zip(&diagram.columns) {
        match col {
            OrbitColumn::Diverged => writeln!(out, "{x},DIVERGED")?,
            OrbitColumn::Samples(s) => {
                for (i, g) in s.iter().enumerate() {
                    writeln!(out, "{x},{i},{g}")?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes `inv_alpha,alpha,regime,period,limit_values` with the limit values
/// separated by `;`.
pub fn write_regime_csv<W: Write>(rows: &[(f64, RegimeReport)], mut out: W) -> Result<()> {
    writeln!(out, "inv_alpha,alpha,regime,period,limit_values")?;
    for (x, r) in rows {
        let period = r.period().map(|p| p.to_string()).unwrap_or_default();
        let values = r
            .limit_values()
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(out, "{x},{},{},{period},{values}", 1.0 / x, r.label())?;
    }
    out.flush()?;
    Ok(())
}
