use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ipf::dynamics::{
    orbit_diagram, regime_map, write_orbit_csv, write_regime_csv, InvAlphaRange, SweepSetup,
};
use ipf::mapper::{
    catalog_scan, centroid, read_catalog, read_map_csv, scan_plane, write_centroid_csv,
    write_interval_map_csv, write_map_csv, BetaGrid, CatalogRow, Interval, MapperProtocol,
};
use ipf::model::{IpfParams, Protocol, Seeding};
use ipf::synth::{
    attack_plateau_envelope, envelope_per_period, envelope_to_alpha, extract_envelope, read_wav,
    render, run_score, spectrogram, write_score_csv, write_spectrogram_csv, write_wav,
    WaveformPeriod,
};
use ipf::Error;

use crate::range::RangeArg;
use crate::{
    CatalogArgs, CentroidArgs, Command, EnvelopeArgs, LikelihoodArgs, MapperArgs, RegimeArgs,
    SweepArgs, SynthArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl CliError {
    /// 1 for runtime and divergence diagnostics, 2 for bad input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) => match e {
                Error::Domain(_)
                | Error::Parameter(_)
                | Error::Scaling(_)
                | Error::Format(_)
                | Error::Wav(_) => 2,
                Error::Search(_)
                | Error::Diverged { .. }
                | Error::Render { .. }
                | Error::EmptyMap
                | Error::Io(_) => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        CliError::Lib(Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot write {}: {e}", path.display()),
        )))
    })
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Orbit(a) => orbit(a),
        Command::Regimes(a) => regimes(a),
        Command::Sweep(a) => sweep(a),
        Command::Likelihood(a) => likelihood(a),
        Command::Centroid(a) => centroid_cmd(a),
        Command::Synth(a) => synth(a),
        Command::Envelope(a) => envelope(a),
    }
}

fn sweep_setup(a: &SweepArgs) -> Result<(SweepSetup, InvAlphaRange)> {
    let n = a.n.or(a.inv_alpha.n).unwrap_or(600);
    let range = InvAlphaRange::new(a.inv_alpha.lo, a.inv_alpha.hi, n)?;
    let seeding = match &a.seed_explicit {
        Some(s) => Seeding::Explicit(s.clone()),
        None => Seeding::SimpleFromG0,
    };
    // validates betas and g0
    IpfParams::new(1.0, a.beta.clone(), a.g0)?;
    Ok((SweepSetup::new(a.beta.clone(), a.g0, seeding), range))
}

fn orbit(a: SweepArgs) -> Result<()> {
    let (setup, range) = sweep_setup(&a)?;
    let diagram = orbit_diagram(&setup, range, a.steps, a.tail)?;
    let mut out = create(&a.out)?;
    write_orbit_csv(&diagram, &mut out)?;
    out.flush()?;
    Ok(())
}

fn regimes(a: RegimeArgs) -> Result<()> {
    let (setup, range) = sweep_setup(&a.sweep)?;
    let protocol = Protocol {
        n_steps: a.sweep.steps,
        tail: a.sweep.tail,
        tol: a.tol,
        max_period: a.max_period,
    };
    let rows = regime_map(&setup, range, &protocol)?;
    let mut out = create(&a.sweep.out)?;
    write_regime_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn grid_and_protocol(m: &MapperArgs) -> Result<(BetaGrid, MapperProtocol)> {
    let RangeArg { lo, hi, n } = m.beta_range;
    let cells = m.grid.or(n).unwrap_or(61);
    let grid = BetaGrid::square(lo, hi, cells)?;
    if m.alphas == 0 {
        return Err(usage("--alphas must be at least 1"));
    }
    let defaults = MapperProtocol::default();
    let protocol = MapperProtocol {
        alphas: MapperProtocol::alpha_grid(m.alphas),
        run: Protocol {
            n_steps: m.steps,
            ..defaults.run
        },
        n_seeds: m.seeds,
        tol_semitones: m.tol_semitones,
        refine_levels: m.refine_levels,
        ..defaults
    };
    protocol.validate()?;
    Ok((grid, protocol))
}

fn sweep(a: CatalogArgs) -> Result<()> {
    let catalog = read_catalog(&a.catalog).map_err(|e| match e {
        Error::Io(io) => usage(format!("cannot read {}: {io}", a.catalog.display())),
        e => e.into(),
    })?;
    let (grid, protocol) = grid_and_protocol(&a.mapper)?;
    if let Some(path) = &a.max_interval_out {
        let scan = scan_plane(&grid, &protocol)?;
        let mut out = create(path)?;
        write_interval_map_csv(&scan.max_interval_map(), &mut out)?;
        out.flush()?;
    }
    let rows = catalog_scan(&catalog, &grid, &protocol)?;
    for r in &rows {
        if r.centroid.is_none() {
            eprintln!(
                "warning: no cell produces {} semitones",
                r.target_semitones.unwrap_or(f64::NAN)
            );
        }
    }
    let mut out = create(&a.out)?;
    write_centroid_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn likelihood(a: LikelihoodArgs) -> Result<()> {
    let target = Interval::from_semitones(a.target_semitones)?;
    let (grid, protocol) = grid_and_protocol(&a.mapper)?;
    let map = ipf::mapper::likelihood_map(&grid, target, &protocol)?;
    if map.is_empty() {
        eprintln!(
            "warning: no cell produces {} semitones; map is all zero",
            a.target_semitones
        );
    }
    let mut out = create(&a.out)?;
    write_map_csv(&map, &mut out)?;
    out.flush()?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn centroid_cmd(a: CentroidArgs) -> Result<()> {
    let mut map = read_map_csv(open(&a.input)?)?;
    if let Some(s) = a.target_semitones {
        map.target = Some(Interval::from_semitones(s)?);
    }
    let c = centroid(&map)?;
    let row = CatalogRow {
        target_semitones: a.target_semitones,
        centroid: Some(c),
    };
    let mut out = create(&a.out)?;
    write_centroid_csv(&[row], &mut out)?;
    out.flush()?;
    Ok(())
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn read_input_wav(path: &Path) -> Result<(Vec<f64>, u32)> {
    if !path.exists() {
        return Err(usage(format!("{} does not exist", path.display())));
    }
    Ok(read_wav(path)?)
}

fn target_alpha(a: &SynthArgs, betas: &[f64]) -> Result<f64> {
    if let Some(alpha) = a.target_alpha {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(usage(format!(
                "--target-alpha must lie in (0, 1], got {alpha}"
            )));
        }
        return Ok(alpha);
    }
    let semis = a.target_semitones.expect("clap enforces one target");
    let target = Interval::from_semitones(semis)?;
    let cell = BetaGrid::new(vec![betas[0]], vec![betas[1]])?;
    let protocol = MapperProtocol {
        g0: a.g0,
        ..MapperProtocol::default()
    };
    let map = ipf::mapper::likelihood_map(&cell, target, &protocol)?;
    match map.cells[0].alpha {
        Some(alpha) => {
            eprintln!(
                "target {semis} semitones: alpha {alpha} (reliability {})",
                map.cells[0].reliability
            );
            Ok(alpha)
        }
        None => Err(CliError::Lib(Error::Search(format!(
            "betas ({}, {}) produce no {semis}-semitone interval",
            betas[0], betas[1]
        )))),
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let betas = vec![a.beta1, a.beta2];
    let params = IpfParams::new(1.0, betas.clone(), a.g0)?;
    if !(a.f0 > 0.0) || a.f0 >= a.sample_rate as f64 / 2.0 {
        return Err(usage(format!(
            "--f0 must lie in (0, {}) Hz",
            a.sample_rate / 2
        )));
    }
    let wave = match a.wave.as_str() {
        "gaussian" => WaveformPeriod::gaussian(a.f0, a.sample_rate)?,
        path => {
            let (audio, sr) = read_input_wav(Path::new(path))?;
            WaveformPeriod::sampled(&audio, sr)?
        }
    };
    let env = match &a.envelope {
        Some(path) => {
            let (audio, sr) = read_input_wav(path)?;
            let env = extract_envelope(&audio, sr, a.window_ms)?;
            envelope_per_period(&env, sr, a.f0)?
        }
        None => {
            if !(a.rise > 0.0) {
                return Err(usage("--rise must be positive"));
            }
            attack_plateau_envelope(a.periods, a.f0, a.rise)
        }
    };

    let alpha = target_alpha(&a, &betas)?;
    let params = params.with_alpha(alpha)?;
    let alphas = envelope_to_alpha(&env, &params, alpha)?;
    let score = run_score(&alphas, &params)?
        .with_f0(a.f0)?
        .with_sample_rate(a.sample_rate)?
        .with_layers(a.layers)?;
    if let Some(step) = score.diverged_at() {
        eprintln!(
            "warning: the map diverged at step {step}; rendering the {} periods before it",
            score.records().len()
        );
    }
    let audio = render(&score, &wave, a.layers)?;
    write_wav(&a.out, &audio, a.sample_rate)?;

    let mut score_out = create(
        &a.score_out
            .clone()
            .unwrap_or_else(|| sibling(&a.out, "score.csv")),
    )?;
    write_score_csv(&score, a.layers, &mut score_out)?;
    score_out.flush()?;

    let spec = spectrogram(&audio, a.sample_rate, a.window, a.hop)?;
    let path = a
        .spectrogram_out
        .clone()
        .unwrap_or_else(|| sibling(&a.out, "spectrogram.csv"));
    let mut spec_out = create(&path)?;
    write_spectrogram_csv(&spec, Some(a.max_freq), &mut spec_out)?;
    spec_out.flush()?;
    Ok(())
}

fn envelope(a: EnvelopeArgs) -> Result<()> {
    let (audio, sr) = read_input_wav(&a.input)?;
    let env = extract_envelope(&audio, sr, a.window_ms)?;
    let per = envelope_per_period(&env, sr, a.f0)?;
    let mut out = create(&a.out)?;
    writeln!(out, "period,time_s,envelope")?;
    for (k, v) in per.iter().enumerate() {
        writeln!(out, "{k},{},{v}", k as f64 / a.f0)?;
    }
    out.flush()?;
    Ok(())
}
