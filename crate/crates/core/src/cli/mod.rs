//! Batch front end: config parsing, experiment dispatch and deterministic
//! output with a manifest beside every data file.

pub mod config;
pub mod emit;
pub mod validate;

pub use config::{parse_config, ConfigError, Experiment, Format, Grid, NnCoupling, RunConfig};
pub use emit::{emit, Cell, Table};

use crate::bath::{
    beta_of, beta_p_map, coupling_matrix, g_imag, g_real, nn_coupling_matrix, pair_coupling, BathError,
    CouplingMatrix, MapDirection,
};
use crate::cam::{low_t_estimate, p_threshold_bound, run_cam, CamError};
use crate::lattice::{build_lattice, nearest_neighbor_range, Lattice, LatticeError};
use crate::spinmodel::{fidelity_sweep, SpinModelError, ENUMERATION_ORDERING};
use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

pub const FIDELITY_COLUMNS: [&str; 10] = ["beta", "re_A", "im_A", "re_B", "im_B", "fidelity", "n", "m", "re_J", "im_J"];
pub const CORRELATOR_COLUMNS: [&str; 7] = ["s", "d", "vdelta", "g_real", "g_imag", "re_J", "im_J"];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    SpinModel(#[from] SpinModelError),
    #[error(transparent)]
    Cam(#[from] CamError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("{0} validation check(s) failed")]
    ValidationFailed(usize),
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Lattice(_) => "lattice",
            Self::Bath(_) => "bath",
            Self::SpinModel(_) => "spinmodel",
            Self::Cam(_) => "cam",
            Self::Io(_) => "io",
            Self::Pool(_) => "pool",
            Self::ValidationFailed(_) => "validation",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::ValidationFailed(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "surfcode-bath", version, about = "Surface-code fidelity under a correlated bosonic bath")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Data output path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for the enumeration (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Accepted for scripts that assert determinism; nothing here draws
    /// random numbers.
    #[arg(long, global = true)]
    pub seedless: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Fidelity sweep over a β grid.
    Fidelity,
    /// Cluster mean-field critical coupling with finite-size extrapolation.
    Cam,
    /// Tabulate bath correlators and couplings over a distance grid.
    Correlators,
    /// β → flip-probability table.
    Pmap,
    /// Low-temperature estimate of β_c J and the threshold bound.
    Estimate,
    /// Run the built-in oracle suite.
    Validate,
}

impl Command {
    pub fn experiment(self) -> Experiment {
        match self {
            Self::Fidelity => Experiment::Fidelity,
            Self::Cam => Experiment::Cam,
            Self::Correlators => Experiment::Correlators,
            Self::Pmap => Experiment::Pmap,
            Self::Estimate => Experiment::Estimate,
            Self::Validate => Experiment::Validate,
        }
    }
}

/// Data produced by one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: Table,
    /// Structured result for experiments that have one beyond the table.
    pub summary: Option<Value>,
    pub conventions: BTreeMap<&'static str, String>,
    /// Number of failed checks (validate only).
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub path: Option<PathBuf>,
    pub format: Format,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub config: RunConfig,
    pub version: &'static str,
    pub ordering: &'static str,
    pub conventions: BTreeMap<&'static str, String>,
    pub workers: usize,
    pub outputs: Vec<OutputRecord>,
    pub summary: Option<Value>,
    pub elapsed_seconds: f64,
}

fn base_conventions() -> BTreeMap<&'static str, String> {
    BTreeMap::from([
        ("energy", "E = sum_{i != j} J_ij s_i s_j = 2 sum_{i<j} J_ij s_i s_j".to_string()),
        ("weights", "w = exp(-beta (E - offset)), offset = min Re E".to_string()),
        ("imag_part", "G^(I) = i g, column g_imag holds g".to_string()),
        ("units", "a = v = omega0 = 1 unless configured".to_string()),
    ])
}

fn couplings_for(config: &RunConfig, lattice: &Lattice) -> Result<(CouplingMatrix, Complex64), RunError> {
    if let Some(bath) = &config.bath {
        let m = coupling_matrix(lattice, bath)?;
        let nn = pair_coupling(bath, nearest_neighbor_range(&lattice.spec))?;
        Ok((m, nn))
    } else {
        let j = config.nn.map(|c| c.value()).unwrap_or(Complex64::new(-1.0, 0.0));
        Ok((nn_coupling_matrix(lattice, j), j))
    }
}

fn run_fidelity(config: &RunConfig) -> Result<RunOutput, RunError> {
    let spec = config.lattice.expect("finalized config has a lattice");
    let lattice = build_lattice(spec)?;
    let (couplings, j) = couplings_for(config, &lattice)?;
    let grid = config.grid.expect("finalized config has a grid").points();
    let results = fidelity_sweep(&lattice, &couplings, &grid)?;
    let mut table = Table::new(FIDELITY_COLUMNS.to_vec());
    for r in &results {
        table.push(vec![
            r.beta.into(),
            r.a.re.into(),
            r.a.im.into(),
            r.b.re.into(),
            r.b.im.into(),
            r.fidelity.into(),
            spec.n.into(),
            spec.m.into(),
            j.re.into(),
            j.im.into(),
        ]);
    }
    let mut conventions = base_conventions();
    conventions.insert(
        "coupling",
        if config.bath.is_some() {
            "bath-derived J_ij = (lambda^2 / 2 beta) Phi_ij; re_J/im_J report the nearest-neighbour pair".into()
        } else if j.re < 0.0 {
            "nearest-neighbour J, ferromagnetic sign (Re J < 0)".into()
        } else {
            "nearest-neighbour J".into()
        },
    );
    conventions.insert("prefactors", "chi / 2^N and the star normalisation are omitted from A and B".into());
    let summary = config.bath.map(|b| json!({ "bath_beta": beta_of(&b).beta }));
    Ok(RunOutput {
        table,
        summary,
        conventions,
        failures: 0,
    })
}

fn run_cam_experiment(config: &RunConfig) -> Result<RunOutput, RunError> {
    let section = config.cam.clone().expect("finalized config has a cam section");
    let j = config.nn.expect("finalized config has nn").re_j;
    let result = run_cam(&section.sizes, j, &section.options)?;
    let mut table = Table::new(vec!["n", "m", "N", "L", "boundary", "central", "beta_c_j", "residual"]);
    for c in &result.per_cluster {
        table.push(vec![
            c.n.into(),
            c.m.into(),
            c.qubits.into(),
            c.linear_size.into(),
            c.boundary_size.into(),
            c.central.into(),
            c.beta_c_j.into(),
            c.residual.into(),
        ]);
    }
    let mut conventions = base_conventions();
    conventions.insert("abscissa", result.abscissa.clone());
    conventions.insert("cluster_energy", format!("{:?} bond counting, E = c J sum_<ij> s_i s_j", section.options.bonds));
    conventions.insert("correlator", format!("{:?}", section.options.variant));
    conventions.insert("linear_size", format!("{:?}", section.options.size_convention));
    Ok(RunOutput {
        table,
        summary: Some(serde_json::to_value(&result).expect("cam result serialises")),
        conventions,
        failures: 0,
    })
}

fn run_correlators(config: &RunConfig) -> Result<RunOutput, RunError> {
    let bath = config.bath.expect("finalized config has a bath");
    let vdelta = bath.light_cone();
    let mut table = Table::new(CORRELATOR_COLUMNS.to_vec());
    for x in config.grid.expect("finalized config has a grid").points() {
        let d = x * vdelta;
        let j = pair_coupling(&bath, d)?;
        table.push(vec![
            bath.s.value().into(),
            d.into(),
            vdelta.into(),
            g_real(&bath, d)?.into(),
            g_imag(&bath, d)?.into(),
            j.re.into(),
            j.im.into(),
        ]);
    }
    let mut conventions = base_conventions();
    conventions.insert("grid", "distances given in units of v Delta".into());
    Ok(RunOutput {
        table,
        summary: None,
        conventions,
        failures: 0,
    })
}

fn run_pmap(config: &RunConfig) -> Result<RunOutput, RunError> {
    let bath = config.bath.expect("finalized config has a bath");
    let mut table = Table::new(vec!["beta", "p"]);
    for beta in config.grid.expect("finalized config has a grid").points() {
        table.push(vec![beta.into(), beta_p_map(&bath, MapDirection::BetaToP, beta)?.into()]);
    }
    let mut conventions = base_conventions();
    conventions.insert("pmap", "ln(1 - 2p) = -(lambda^2/4) G^(R)_rr expressed through beta".into());
    Ok(RunOutput {
        table,
        summary: None,
        conventions,
        failures: 0,
    })
}

fn run_estimate(config: &RunConfig) -> Result<RunOutput, RunError> {
    let params = config.estimate.expect("finalized config has estimate params");
    let beta = low_t_estimate(&params)?;
    let p = p_threshold_bound(&params)?;
    let mut table = Table::new(vec!["mu", "coord", "beta_c_j", "p_bound"]);
    table.push(vec![params.mu.into(), (params.coord as usize).into(), beta.into(), p.into()]);
    Ok(RunOutput {
        table,
        summary: Some(json!({ "beta_c_j": beta, "p_bound": p })),
        conventions: base_conventions(),
        failures: 0,
    })
}

fn run_validate(config: &RunConfig) -> Result<RunOutput, RunError> {
    let checks = validate::oracle_suite(&config.tolerances);
    let mut table = Table::new(vec!["check", "passed", "deviation", "tolerance"]);
    for c in &checks {
        table.push(vec![c.name.clone().into(), c.passed.into(), c.deviation.into(), c.tolerance.into()]);
    }
    let failures = checks.iter().filter(|c| !c.passed).count();
    Ok(RunOutput {
        table,
        summary: Some(json!({ "checks": checks.len(), "failures": failures })),
        conventions: base_conventions(),
        failures,
    })
}

/// Runs the configured experiment on a pool of `config.workers` threads.
pub fn run(config: &RunConfig) -> Result<RunOutput, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build()?;
    pool.install(|| match config.experiment() {
        Experiment::Fidelity => run_fidelity(config),
        Experiment::Cam => run_cam_experiment(config),
        Experiment::Correlators => run_correlators(config),
        Experiment::Pmap => run_pmap(config),
        Experiment::Estimate => run_estimate(config),
        Experiment::Validate => run_validate(config),
    })
}

/// Path of the manifest written next to `data`.
pub fn manifest_path(data: &Path) -> PathBuf {
    let mut name = data.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Runs, writes the data file and its manifest, and returns the manifest.
/// Without an output path the data goes to stdout and the manifest is not
/// written to disk.
pub fn execute(config: &RunConfig) -> Result<(RunManifest, RunOutput), RunError> {
    let started = Instant::now();
    let output = run(config)?;
    let format = config.output.format;
    let path = config.output.path.clone();
    let sha256 = emit(&output.table, format, path.as_deref())?;
    let manifest = RunManifest {
        experiment: config.experiment(),
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION"),
        ordering: ENUMERATION_ORDERING,
        conventions: output.conventions.clone(),
        workers: config.workers.unwrap_or_else(rayon::current_num_threads),
        outputs: vec![OutputRecord {
            path: path.clone(),
            format,
            rows: output.table.rows.len(),
            sha256,
        }],
        summary: output.summary.clone(),
        elapsed_seconds: started.elapsed().as_secs_f64(),
    };
    if let Some(p) = &path {
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
        std::fs::write(manifest_path(p), text)?;
    }
    if output.failures > 0 {
        return Err(RunError::ValidationFailed(output.failures));
    }
    Ok((manifest, output))
}

fn load_config(cli: &Cli) -> Result<RunConfig, RunError> {
    let requested = cli.command.experiment();
    let mut config = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str::<RunConfig>(&text).map_err(ConfigError::from)?
        }
        None => RunConfig::empty(),
    };
    if let Some(out) = &cli.out {
        config.output.path = Some(out.clone());
    }
    if let Some(f) = cli.format {
        config.output.format = f;
    }
    if let Some(w) = cli.workers {
        config.workers = Some(w);
    }
    Ok(config.finalize(Some(requested))?)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = load_config(&cli).and_then(|c| execute(&c));
    match result {
        Ok((manifest, _)) => {
            if manifest.outputs[0].path.is_none() {
                eprintln!("{}", serde_json::to_string_pretty(&manifest).expect("manifest serialises"));
            }
            0
        }
        Err(e) => {
            let record = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{record}");
            e.exit_code()
        }
    }
}
