use rayon::prelude::*;

use super::{extract_interval, Interval};
use crate::error::{Error, Result};
use crate::model::{classify_regime, iterate, IpfParams, Protocol};

/// Rectangular grid over `(beta_1, beta_2)`. Cells are stored with
/// `beta_1` as the outer index.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaGrid {
    beta1: Vec<f64>,
    beta2: Vec<f64>,
}

impl BetaGrid {
    pub fn new(beta1: Vec<f64>, beta2: Vec<f64>) -> Result<Self> {
        for (name, axis) in [("beta1", &beta1), ("beta2", &beta2)] {
            if axis.is_empty() {
                return Err(Error::param(format!("{name} axis is empty")));
            }
            if axis.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
                return Err(Error::param(format!("{name} axis must be non-negative")));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::param(format!("{name} axis must be increasing")));
            }
        }
        Ok(Self { beta1, beta2 })
    }

    /// `n` evenly spaced values over `[lo, hi]` on both axes.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let axis = match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Self::new(axis.clone(), axis)
    }

    pub fn beta1(&self) -> &[f64] {
        &self.beta1
    }

    pub fn beta2(&self) -> &[f64] {
        &self.beta2
    }

    pub fn len(&self) -> usize {
        self.beta1.len() * self.beta2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.beta2.len() + i2
    }

    /// `(beta_1, beta_2)` of the cell at a flat index.
    pub fn cell(&self, idx: usize) -> (f64, f64) {
        let n2 = self.beta2.len();
        (self.beta1[idx / n2], self.beta2[idx % n2])
    }

    fn cells(&self) -> impl IndexedParallelIterator<Item = (f64, f64)> + '_ {
        (0..self.len()).into_par_iter().map(|i| self.cell(i))
    }
}

/// Settings of the alpha scan, target matching and likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct MapperProtocol {
    /// Alpha values scanned per cell, increasing, inside `(0, 1]`.
    pub alphas: Vec<f64>,
    /// Run length and classification. The default horizon is longer than the
    /// orbit-diagram one: period-2 orbits next to the first bifurcation
    /// settle slowly, and small intervals live there.
    pub run: Protocol,
    /// Seed state for the alpha scan.
    pub g0: f64,
    /// Initial values `seed_max * i / n_seeds`, `i = 1..=n_seeds`, used for
    /// the reliability.
    pub n_seeds: usize,
    pub seed_max: f64,
    /// Half-width of the target match, in semitones.
    pub tol_semitones: f64,
    /// Finite-difference step in alpha.
    pub h: f64,
    /// Floor on the derivative when dividing by it.
    pub eps: f64,
    /// Levels of nested scanning spent refining an alpha bracket that
    /// straddles the target; each level narrows it eightfold.
    pub refine_levels: usize,
}

impl Default for MapperProtocol {
    fn default() -> Self {
        Self {
            alphas: Self::alpha_grid(200),
            run: Protocol {
                n_steps: 20_000,
                ..Protocol::default()
            },
            g0: 1.0,
            n_seeds: 150,
            seed_max: 5.0,
            tol_semitones: 0.25,
            h: 1e-3,
            eps: 1e-6,
            refine_levels: 6,
        }
    }
}

impl MapperProtocol {
    /// `j / n` for `j = 1..=n`.
    pub fn alpha_grid(n: usize) -> Vec<f64> {
        (1..=n).map(|j| j as f64 / n as f64).collect()
    }

    pub fn seeds(&self) -> Vec<f64> {
        (1..=self.n_seeds)
            .map(|i| self.seed_max * i as f64 / self.n_seeds as f64)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        if self.alphas.is_empty()
            || self.alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0))
            || self.alphas.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::param("alpha grid must be increasing within (0, 1]"));
        }
        if !(self.g0 > 0.0) {
            return Err(Error::param("g0 must be positive"));
        }
        if self.n_seeds == 0 || !(self.seed_max > 0.0) {
            return Err(Error::param("need at least one positive seed"));
        }
        if !(self.tol_semitones > 0.0) {
            return Err(Error::param("tol_semitones must be positive"));
        }
        if !(self.h > 0.0) || !(self.eps > 0.0) {
            return Err(Error::param("h and eps must be positive"));
        }
        Ok(())
    }
}

/// Subdivisions per refinement level.
pub const REFINE_SPLITS: usize = 8;

/// Interval produced at one alpha from one seed, if any.
pub fn interval_at(betas: &[f64], alpha: f64, g0: f64, run: &Protocol) -> Result<Option<Interval>> {
    let params = IpfParams::new(alpha, betas.to_vec(), g0)?;
    let t = iterate(&params, run.n_steps)?;
    let report = classify_regime(&t, run.tail, run.tol, run.max_period)?;
    Ok(extract_interval(&report))
}

/// Largest interval a cell produces over the alpha scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaxInterval {
    /// No alpha gives a fixed point or a period-2 orbit.
    NoTone,
    /// Only fixed points.
    StableOnly,
    Interval(Interval),
}

impl MaxInterval {
    /// `None` for no tone, `0` for stable-only.
    pub fn semitones(&self) -> Option<f64> {
        match self {
            MaxInterval::NoTone => None,
            MaxInterval::StableOnly => Some(0.0),
            MaxInterval::Interval(i) => Some(i.semitones()),
        }
    }
}

/// Intervals of one cell at every scanned alpha, seeded from `g0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellScan {
    pub beta1: f64,
    pub beta2: f64,
    pub intervals: Vec<Option<Interval>>,
}

impl CellScan {
    pub fn betas(&self) -> [f64; 2] {
        [self.beta1, self.beta2]
    }

    pub fn max_interval(&self) -> MaxInterval {
        let smallest = self
            .intervals
            .iter()
            .flatten()
            .map(|i| i.ratio())
            .min_by(f64::total_cmp);
        match smallest {
            None => MaxInterval::NoTone,
            Some(1.0) => MaxInterval::StableOnly,
            Some(r) => MaxInterval::Interval(Interval::from_ratio(r).unwrap()),
        }
    }
}

/// Alpha scans of every cell of a grid; reused across target intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneScan {
    pub grid: BetaGrid,
    pub protocol: MapperProtocol,
    pub cells: Vec<CellScan>,
}

pub fn scan_plane(grid: &BetaGrid, protocol: &MapperProtocol) -> Result<PlaneScan> {
    protocol.validate()?;
    let cells = grid
        .cells()
        .map(|(b1, b2)| {
            let intervals = protocol
                .alphas
                .iter()
                .map(|&a| interval_at(&[b1, b2], a, protocol.g0, &protocol.run))
                .collect::<Result<Vec<_>>>()?;
            Ok(CellScan {
                beta1: b1,
                beta2: b2,
                intervals,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PlaneScan {
        grid: grid.clone(),
        protocol: protocol.clone(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMap {
    pub grid: BetaGrid,
    pub cells: Vec<MaxInterval>,
}

pub fn max_interval_map(grid: &BetaGrid, protocol: &MapperProtocol) -> Result<IntervalMap> {
    Ok(scan_plane(grid, protocol)?.max_interval_map())
}

/// One cell of a likelihood map. `alpha` is the alpha that produced the
/// best likelihood; cells without a positive likelihood have no alpha,
/// zero reliability and an infinite derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodCell {
    pub beta1: f64,
    pub beta2: f64,
    pub max_interval: MaxInterval,
    pub alpha: Option<f64>,
    pub reliability: f64,
    pub derivative: f64,
    pub likelihood: f64,
}

/// Likelihoods normalized to a maximum of one. A map whose every cell is
/// zero is empty and stays unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodMap {
    pub grid: BetaGrid,
    pub cells: Vec<LikelihoodCell>,
    pub target: Option<Interval>,
    pub alphas: Vec<f64>,
}

impl LikelihoodMap {
    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|c| !(c.likelihood > 0.0))
    }

    pub fn max_likelihood(&self) -> f64 {
        self.cells.iter().map(|c| c.likelihood).fold(0.0, f64::max)
    }
}

fn within(i: Option<Interval>, target: f64, tol: f64) -> bool {
    i.is_some_and(|i| (i.semitones() - target).abs() <= tol)
}

/// `|I(alpha + h) - I(alpha - h)| / 2h` on the normalized ratio.
///
/// Undefined intervals on either side give `+inf`.
pub fn interval_derivative(
    beta1: f64,
    beta2: f64,
    alpha: f64,
    protocol: &MapperProtocol,
) -> Result<f64> {
    let h = protocol.h;
    if !(h > 0.0) || alpha - h <= 0.0 || alpha + h > 1.0 {
        return Err(Error::param(format!(
            "alpha +- h must lie in (0, 1], got {alpha} +- {h}"
        )));
    }
    derivative(&[beta1, beta2], alpha, protocol)
}

fn derivative(betas: &[f64], alpha: f64, p: &MapperProtocol) -> Result<f64> {
    if alpha - p.h <= 0.0 || alpha + p.h > 1.0 {
        return Ok(f64::INFINITY);
    }
    let up = interval_at(betas, alpha + p.h, p.g0, &p.run)?;
    let down = interval_at(betas, alpha - p.h, p.g0, &p.run)?;
    Ok(match (up, down) {
        (Some(u), Some(d)) => (u.ratio() - d.ratio()).abs() / (2.0 * p.h),
        _ => f64::INFINITY,
    })
}

/// Fraction of the protocol's initial values whose orbit at `alpha`
/// produces `target` within `tol_semitones`.
pub fn reliability(
    beta1: f64,
    beta2: f64,
    alpha: f64,
    target: Interval,
    tol_semitones: f64,
    protocol: &MapperProtocol,
) -> Result<f64> {
    if !(tol_semitones > 0.0) {
        return Err(Error::param("tol_semitones must be positive"));
    }
    reliability_at(
        &[beta1, beta2],
        alpha,
        target.semitones(),
        tol_semitones,
        protocol,
    )
}

fn reliability_at(
    betas: &[f64],
    alpha: f64,
    target: f64,
    tol: f64,
    p: &MapperProtocol,
) -> Result<f64> {
    let mut hits = 0usize;
    for g0 in p.seeds() {
        if within(interval_at(betas, alpha, g0, &p.run)?, target, tol) {
            hits += 1;
        }
    }
    Ok(hits as f64 / p.n_seeds as f64)
}

/// Alphas at which the cell produces `target`: matching scan samples, plus
/// at most one refined alpha per pair of consecutive scan samples that both
/// carry an interval and lie on opposite sides of the target.
fn candidate_alphas(cell: &CellScan, target: f64, p: &MapperProtocol) -> Result<Vec<f64>> {
    let tol = p.tol_semitones;
    let offsets: Vec<(f64, f64)> = p
        .alphas
        .iter()
        .zip(&cell.intervals)
        .filter_map(|(a, i)| i.map(|i| (*a, i.semitones() - target)))
        .collect();
    let mut out: Vec<f64> = offsets
        .iter()
        .filter(|(_, d)| d.abs() <= tol)
        .map(|(a, _)| *a)
        .collect();
    for w in offsets.windows(2) {
        if straddles(w[0].1, w[1].1) {
            if let Some(a) = refine(&cell.betas(), w[0], w[1], target, p)? {
                out.push(a);
            }
        }
    }
    Ok(out)
}

fn straddles(da: f64, db: f64) -> bool {
    (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)
}

/// Nested scan of a straddling bracket: each level samples
/// `REFINE_SPLITS - 1` interior alphas, returns the first one within a fifth
/// of the tolerance, and otherwise descends into the first pair of
/// consecutive defined samples that still straddles the target. Samples
/// without an interval (unsettled orbits next to a bifurcation) are skipped.
fn refine(
    betas: &[f64],
    lo: (f64, f64),
    hi: (f64, f64),
    target: f64,
    p: &MapperProtocol,
) -> Result<Option<f64>> {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..p.refine_levels {
        let mut pts = vec![lo];
        for k in 1..REFINE_SPLITS {
            let a = lo.0 + (hi.0 - lo.0) * k as f64 / REFINE_SPLITS as f64;
            if let Some(i) = interval_at(betas, a, p.g0, &p.run)? {
                let d = i.semitones() - target;
                if d.abs() <= p.tol_semitones / 5.0 {
                    return Ok(Some(a));
                }
                pts.push((a, d));
            }
        }
        pts.push(hi);
        match pts.windows(2).find(|w| straddles(w[0].1, w[1].1)) {
            Some(w) => (lo, hi) = (w[0], w[1]),
            None => return Ok(None),
        }
    }
    Ok(None)
}

/// Best `(alpha, reliability, derivative, likelihood)` over the candidates.
///
/// Candidates are visited by increasing derivative; since reliability is at
/// most one, the search stops once `1 / max(d, eps)` cannot beat the best.
fn best_candidate(
    cell: &CellScan,
    target: f64,
    p: &MapperProtocol,
) -> Result<Option<(f64, f64, f64, f64)>> {
    let betas = cell.betas();
    let mut scored = candidate_alphas(cell, target, p)?
        .into_iter()
        .map(|a| Ok((derivative(&betas, a, p)?, a)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));

    let mut best = None;
    let mut best_l = 0.0;
    for (d, a) in scored {
        let floor = d.max(p.eps);
        if 1.0 / floor <= best_l {
            break;
        }
        let rel = reliability_at(&betas, a, target, p.tol_semitones, p)?;
        let l = rel / floor;
        if l > best_l {
            best_l = l;
            best = Some((a, rel, d, l));
        }
    }
    Ok(best)
}

/// Divides every value by the maximum; `None` if all are zero.
pub(crate) fn normalize(raw: &[f64]) -> Option<Vec<f64>> {
    let max = raw.iter().copied().fold(0.0, f64::max);
    (max > 0.0).then(|| raw.iter().map(|v| v / max).collect())
}

impl PlaneScan {
    pub fn max_interval_map(&self) -> IntervalMap {
        IntervalMap {
            grid: self.grid.clone(),
            cells: self.cells.iter().map(CellScan::max_interval).collect(),
        }
    }

    pub fn likelihood_map(&self, target: Interval) -> Result<LikelihoodMap> {
        let t = target.semitones();
        let p = &self.protocol;
        let mut cells = self
            .cells
            .par_iter()
            .map(|cell| {
                let best = best_candidate(cell, t, p)?;
                let (alpha, reliability, derivative, likelihood) = match best {
                    Some((a, r, d, l)) => (Some(a), r, d, l),
                    None => (None, 0.0, f64::INFINITY, 0.0),
                };
                Ok(LikelihoodCell {
                    beta1: cell.beta1,
                    beta2: cell.beta2,
                    max_interval: cell.max_interval(),
                    alpha,
                    reliability,
                    derivative,
                    likelihood,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let raw: Vec<f64> = cells.iter().map(|c| c.likelihood).collect();
        if let Some(norm) = normalize(&raw) {
            for (c, l) in cells.iter_mut().zip(norm) {
                c.likelihood = l;
            }
        }
        Ok(LikelihoodMap {
            grid: self.grid.clone(),
            cells,
            target: Some(target),
            alphas: p.alphas.clone(),
        })
    }
}

pub fn likelihood_map(
    grid: &BetaGrid,
    target: Interval,
    protocol: &MapperProtocol,
) -> Result<LikelihoodMap> {
    scan_plane(grid, protocol)?.likelihood_map(target)
}

/// Likelihood-weighted mean of the cells reaching 90 % of the maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidResult {
    pub target: Option<Interval>,
    pub beta1: f64,
    pub beta2: f64,
    /// Flat indices of the cells in the region.
    pub region: Vec<usize>,
}

impl CentroidResult {
    pub fn region_cell_count(&self) -> usize {
        self.region.len()
    }
}

pub fn centroid(map: &LikelihoodMap) -> Result<CentroidResult> {
    let max = map.max_likelihood();
    if !(max > 0.0) {
        return Err(Error::EmptyMap);
    }
    let threshold = 0.9 * max;
    let (mut w, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let mut region = Vec::new();
    for (idx, c) in map.cells.iter().enumerate() {
        if c.likelihood >= threshold {
            w += c.likelihood;
            s1 += c.likelihood * c.beta1;
            s2 += c.likelihood * c.beta2;
            region.push(idx);
        }
    }
    Ok(CentroidResult {
        target: map.target,
        beta1: s1 / w,
        beta2: s2 / w,
        region,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogRow {
    /// `None` when the map the centroid came from does not record a target.
    pub target_semitones: Option<f64>,
    /// `None` when no cell produces the interval.
    pub centroid: Option<CentroidResult>,
}

/// Likelihood map and centroid for every catalog interval, sharing one
/// plane scan.
pub fn catalog_scan(
    semitones: &[f64],
    grid: &BetaGrid,
    protocol: &MapperProtocol,
) -> Result<Vec<CatalogRow>> {
    if semitones.is_empty() {
        return Err(Error::param("catalog is empty"));
    }
    let targets = semitones
        .iter()
        .map(|&s| Interval::from_semitones(s))
        .collect::<Result<Vec<_>>>()?;
    let scan = scan_plane(grid, protocol)?;
    targets
        .iter()
        .zip(semitones)
        .map(|(&t, &s)| {
            let map = scan.likelihood_map(t)?;
            let centroid = match centroid(&map) {
                Ok(c) => Some(c),
                Err(Error::EmptyMap) => None,
                Err(e) => return Err(e),
            };
            Ok(CatalogRow {
                target_semitones: Some(s),
                centroid,
            })
        })
        .collect()
}
