//! Orchestration: single runs, `B0` sweeps and the analytic-oracle suite.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{info, warn};
use thiserror::Error;

use crate::analysis::{classify_shape, histogram2d, rebin, side_weights, HistogramGrid, ShapeReport};
use crate::config::{ConfigError, Model, RunConfig, SigmaV, SpinMode};
use crate::error::{AnalysisError, EngineError, ParamError, PauliError};
use crate::event::{run_event_ensemble, EventOptions};
use crate::newton::{run_ensemble, spin_from_angles, EnsembleSpec, ExitRecord, InitSpec};
use crate::output::{histogram_csv, histogram_pgm, records_csv, write_atomic};
use crate::params::{derive_scales, preset, BeamConfig, FieldConfig};
use crate::pauli::{
    boundary_warning, chebyshev_propagate, check_grid, init_state, observables, probability_map, ChebyshevReport,
    Component, GridSpec, Hamiltonian, Observables, SpinState,
};
use crate::rng::ParticleStream;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("engine: {0}")]
    Engine(#[from] EngineError),
    #[error("parameters: {0}")]
    Param(#[from] ParamError),
    #[error("quantum solver: {0}")]
    Pauli(#[from] PauliError),
    #[error("analysis: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("cannot build worker pool: {0}")]
    Threads(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// Process exit code: 2 for configuration errors, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone)]
pub struct QuantumSummary {
    pub spin: SpinState,
    pub observables: Observables,
    pub chebyshev: ChebyshevReport,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: RunConfig,
    /// Particle models only.
    pub records: Option<Vec<ExitRecord>>,
    /// Binned transverse distribution: counts in units of `v*` for
    /// particles, probability in units of `v0` for the quantum model.
    pub histogram: HistogramGrid,
    pub report: ShapeReport,
    /// Fractions with `vz < 0` and `vz > 0`.
    pub side_weights: (f64, f64),
    pub quantum: Option<QuantumSummary>,
    pub wall: Duration,
}

/// Ensemble description for a particle-model configuration.
pub fn ensemble_spec(cfg: &RunConfig) -> Result<EnsembleSpec, RunError> {
    let (params, beam) = preset(cfg.species);
    let field = FieldConfig::new(cfg.b0, cfg.b1, cfg.y_start, cfg.y_start + cfg.length)?;
    let v_star = derive_scales(&params, &field, &beam)?.v_star;
    let p = &cfg.particles;
    let sigma_v = match p.sigma_v {
        SigmaV::Absolute(v) => v,
        SigmaV::Relative(v) => v * v_star,
    };
    let init = match p.spin {
        SpinMode::Random => InitSpec::UniformSphere,
        SpinMode::Polar => InitSpec::Polar { theta: p.theta },
        SpinMode::Fixed => InitSpec::Fixed(spin_from_angles(p.theta, p.phi)),
    };
    Ok(EnsembleSpec {
        n: p.n,
        init,
        tau: p.tau,
        params,
        field,
        beam: BeamConfig::new(beam.v_y, p.sigma_x, sigma_v)?,
        seed: cfg.seed,
    })
}

/// Initial spin of a quantum configuration. The random mode draws
/// `cos(θ/2)` and `α/2π` uniformly from particle stream 0 of the seed.
pub fn quantum_spin(cfg: &RunConfig) -> SpinState {
    let q = &cfg.quantum;
    match q.spin {
        SpinMode::Random => {
            let mut s = ParticleStream::new(cfg.seed, 0);
            let _ = s.alignment_threshold();
            let theta = 2.0 * s.uniform().acos();
            SpinState { theta, alpha: std::f64::consts::TAU * s.uniform() }
        }
        _ => SpinState { theta: q.theta, alpha: q.alpha },
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, RunError> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Threads(e.to_string()))?;
    Ok(pool.install(f))
}

/// Runs the configured engine and analyses its output without touching
/// the file system.
pub fn simulate(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut out = in_pool(cfg.threads, || match cfg.model {
        Model::Newton | Model::Event => simulate_particles(cfg),
        Model::Quantum => simulate_quantum(cfg),
    })??;
    out.wall = start.elapsed();
    Ok(out)
}

fn simulate_particles(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let spec = ensemble_spec(cfg)?;
    let v_star = derive_scales(&spec.params, &spec.field, &preset(cfg.species).1)?.v_star;
    info!("{} ensemble: n = {}, tau = {:e} s, B0 = {} T", cfg.model.name(), spec.n, spec.tau, cfg.b0);
    let records = match cfg.model {
        Model::Event => run_event_ensemble(&spec, EventOptions { align: cfg.particles.align })?,
        _ => run_ensemble(&spec)?,
    };
    // with no gradient every particle leaves undeflected; bin in m/s
    let unit = if v_star > 0.0 { v_star } else { 1.0 };
    let histogram = histogram2d(&records, unit, cfg.binning)?;
    let report = classify_shape(&histogram);
    Ok(RunOutcome {
        config: cfg.clone(),
        records: Some(records),
        side_weights: side_weights(&histogram),
        histogram,
        report,
        quantum: None,
        wall: Duration::ZERO,
    })
}

fn simulate_quantum(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let q = &cfg.quantum;
    let coeffs = cfg.quantum_coeffs()?;
    let spec = GridSpec::new(q.grid, q.half_width)?;
    let mut warnings = Vec::new();
    if let Some(w) = check_grid(&spec, &coeffs)? {
        warnings.push(w.to_string());
    }
    let spin = quantum_spin(cfg);
    let h = if q.sigma_x_term { Hamiltonian::full(coeffs) } else { Hamiltonian::textbook(coeffs) };
    info!(
        "quantum: {}^2 grid, half-width {}, a = {:.6}, b = {:.6}, c = {:.6}, t = {}",
        q.grid, q.half_width, coeffs.a, coeffs.b, coeffs.c, q.t
    );
    let psi = init_state(spin, q.sigma, spec)?;
    let (psi, chebyshev) = chebyshev_propagate(&psi, &h, q.t)?;
    if let Some(w) = boundary_warning(&psi) {
        warnings.push(w.to_string());
    }
    for w in &warnings {
        warn!("{w}");
    }
    let histogram = rebin(&probability_map(&psi, Component::Total), cfg.binning)?;
    let report = classify_shape(&histogram);
    Ok(RunOutcome {
        config: cfg.clone(),
        records: None,
        side_weights: side_weights(&histogram),
        histogram,
        report,
        quantum: Some(QuantumSummary { spin, observables: observables(&psi), chebyshev, warnings }),
        wall: Duration::ZERO,
    })
}

pub const RECORDS_FILE: &str = "records.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const HEATMAP_FILE: &str = "histogram.pgm";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Manifest text: metadata as comments followed by the configuration echo,
/// so the manifest itself is a valid configuration.
pub fn manifest(outcome: &RunOutcome) -> String {
    let cfg = &outcome.config;
    let mut s = String::from("# sgsim run manifest\n");
    s.push_str(&format!("# version = {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("# seed = {}\n", cfg.seed));
    s.push_str(&format!("# wall_time_s = {:.3}\n", outcome.wall.as_secs_f64()));
    s.push_str(&format!("# classification = {}\n", outcome.report.shape));
    let (neg, pos) = outcome.side_weights;
    s.push_str(&format!("# side_weights = {neg:.6} {pos:.6}\n"));
    s.push_str(&format!("# radial_peak = {:.6}\n", outcome.report.radial_peak));
    if let Some(qs) = &outcome.quantum {
        s.push_str(&format!("# chebyshev_terms = {}\n", qs.chebyshev.terms));
        s.push_str(&format!("# norm = {:.15}\n", qs.observables.norm));
        s.push_str(&format!("# spin_theta = {} spin_alpha = {}\n", qs.spin.theta, qs.spin.alpha));
        for w in &qs.warnings {
            s.push_str(&format!("# warning: {w}\n"));
        }
    }
    s.push_str(&cfg.to_config_text());
    s
}

/// Writes every artifact of `outcome` into `dir`.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    if let Some(records) = &outcome.records {
        files.push((dir.join(RECORDS_FILE), records_csv(records)));
    }
    files.push((dir.join(HISTOGRAM_FILE), histogram_csv(&outcome.histogram)));
    files.push((dir.join(HEATMAP_FILE), histogram_pgm(&outcome.histogram)));
    files.push((dir.join(MANIFEST_FILE), manifest(outcome)));
    for (path, text) in &files {
        write_atomic(path, text.as_bytes()).map_err(io_err(path))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Simulates and writes the artifacts to `cfg.output`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let outcome = simulate(cfg)?;
    write_outputs(&outcome, &cfg.output)?;
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub b0: f64,
    pub result: Result<(ShapeReport, (f64, f64)), String>,
}

pub const SWEEP_SUMMARY_FILE: &str = "summary.csv";

/// Subdirectory of a sweep output holding the run at `b0`.
pub fn sweep_dir(base: &Path, b0: f64) -> PathBuf {
    base.join(format!("B0_{b0}"))
}

/// One run per `B0` value under `base.output`, plus a summary CSV. A failed
/// point becomes a failed row and the sweep continues.
pub fn sweep_b0(base: &RunConfig, values: &[f64]) -> Result<Vec<SweepRow>, RunError> {
    if values.is_empty() {
        return Err(ConfigError::Range { key: "B0".into(), message: "sweep needs at least one value".into() }.into());
    }
    fs::create_dir_all(&base.output).map_err(io_err(&base.output))?;
    let mut rows = Vec::with_capacity(values.len());
    for &b0 in values {
        let mut cfg = base.clone();
        cfg.b0 = b0;
        cfg.output = sweep_dir(&base.output, b0);
        let result = run(&cfg).map(|o| (o.report, o.side_weights)).map_err(|e| {
            warn!("B0 = {b0}: {e}");
            e.to_string()
        });
        rows.push(SweepRow { b0, result });
    }
    let path = base.output.join(SWEEP_SUMMARY_FILE);
    write_atomic(&path, sweep_summary_csv(&rows).as_bytes()).map_err(io_err(&path))?;
    Ok(rows)
}

pub fn sweep_summary_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("B0,classification,side_minus,side_plus,radial_peak,error\n");
    for row in rows {
        match &row.result {
            Ok((rep, (neg, pos))) => {
                s.push_str(&format!("{},{},{neg:.6},{pos:.6},{:.6},\n", row.b0, rep.shape, rep.radial_peak))
            }
            Err(e) => {
                let msg: String = e.chars().map(|c| if c == ',' || c == '\n' || c == '"' { ' ' } else { c }).collect();
                s.push_str(&format!("{},failed,,,,{msg}\n", row.b0));
            }
        }
    }
    s
}
