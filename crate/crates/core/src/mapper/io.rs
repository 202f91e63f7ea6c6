use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::scan::{BetaGrid, CatalogRow, IntervalMap, LikelihoodCell, LikelihoodMap, MaxInterval};
use super::Interval;
use crate::error::{Error, Result};

/// Semitone values, one per line; `#` starts a comment, blank lines are skipped.
pub fn parse_catalog(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Format(format!("catalog line {}: {line:?}", n + 1)))?;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Format(format!(
                "catalog line {}: interval must be non-negative",
                n + 1
            )));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Format("catalog holds no intervals".into()));
    }
    Ok(out)
}

pub fn read_catalog(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_catalog(&fs::read_to_string(path)?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

const MAP_HEADER: [&str; 6] = [
    "beta1",
    "beta2",
    "max_interval_semitones",
    "reliability",
    "derivative",
    "likelihood",
];

/// `beta1,beta2,max_interval_semitones,reliability,derivative,likelihood`.
/// No tone leaves the interval empty; an infinite derivative is `inf`.
pub fn write_map_csv<W: Write>(map: &LikelihoodMap, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MAP_HEADER).map_err(csv_err)?;
    for c in &map.cells {
        w.write_record([
            c.beta1.to_string(),
            c.beta2.to_string(),
            opt(c.max_interval.semitones()),
            c.reliability.to_string(),
            c.derivative.to_string(),
            c.likelihood.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `beta1,beta2,max_interval_semitones`.
pub fn write_interval_map_csv<W: Write>(map: &IntervalMap, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&MAP_HEADER[..3]).map_err(csv_err)?;
    for (idx, m) in map.cells.iter().enumerate() {
        let (b1, b2) = map.grid.cell(idx);
        w.write_record([b1.to_string(), b2.to_string(), opt(m.semitones())])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        kind => Error::Format(format!("csv: {kind:?}")),
    }
}

fn field(rec: &csv::StringRecord, i: usize, line: u64) -> Result<f64> {
    let s = rec.get(i).unwrap_or("").trim();
    s.parse()
        .map_err(|_| Error::Format(format!("map line {line}: bad number {s:?}")))
}

/// Reads a map written by [`write_map_csv`]. Rows must cover a full grid.
/// The chosen alpha and the target are not stored and come back empty.
pub fn read_map_csv<R: Read>(input: R) -> Result<LikelihoodMap> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().map(str::trim).ne(MAP_HEADER) {
        return Err(Error::Format(format!("unexpected map header {header:?}")));
    }
    let mut cells = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = n as u64 + 2;
        let semis = rec.get(2).unwrap_or("").trim();
        let max_interval = if semis.is_empty() {
            MaxInterval::NoTone
        } else {
            let s = field(&rec, 2, line)?;
            if s == 0.0 {
                MaxInterval::StableOnly
            } else {
                MaxInterval::Interval(Interval::from_semitones(s)?)
            }
        };
        cells.push(LikelihoodCell {
            beta1: field(&rec, 0, line)?,
            beta2: field(&rec, 1, line)?,
            max_interval,
            alpha: None,
            reliability: field(&rec, 3, line)?,
            derivative: field(&rec, 4, line)?,
            likelihood: field(&rec, 5, line)?,
        });
    }
    let axis = |get: fn(&LikelihoodCell) -> f64| {
        let mut v: Vec<f64> = cells.iter().map(get).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let grid = BetaGrid::new(axis(|c| c.beta1), axis(|c| c.beta2))?;
    if grid.len() != cells.len() {
        return Err(Error::Format(format!(
            "{} rows do not fill a {}x{} grid",
            cells.len(),
            grid.beta1().len(),
            grid.beta2().len()
        )));
    }
    let mut ordered: Vec<Option<LikelihoodCell>> = vec![None; cells.len()];
    for c in cells {
        let i1 = grid.beta1().iter().position(|b| *b == c.beta1).unwrap();
        let i2 = grid.beta2().iter().position(|b| *b == c.beta2).unwrap();
        let slot = &mut ordered[grid.index(i1, i2)];
        if slot.is_some() {
            return Err(Error::Format(format!(
                "duplicate cell ({}, {})",
                c.beta1, c.beta2
            )));
        }
        *slot = Some(c);
    }
    Ok(LikelihoodMap {
        grid,
        cells: ordered.into_iter().map(Option::unwrap).collect(),
        target: None,
        alphas: Vec::new(),
    })
}

/// `target_semitones,beta1_centroid,beta2_centroid,region_cell_count`;
/// intervals no cell produces get empty centroid fields.
pub fn write_centroid_csv<W: Write>(rows: &[CatalogRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "target_semitones",
        "beta1_centroid",
        "beta2_centroid",
        "region_cell_count",
    ])
    .map_err(csv_err)?;
    for row in rows {
        let target = opt(row.target_semitones);
        let rec = match &row.centroid {
            Some(c) => [
                target,
                c.beta1.to_string(),
                c.beta2.to_string(),
                c.region_cell_count().to_string(),
            ],
            None => [target, String::new(), String::new(), "0".into()],
        };
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
