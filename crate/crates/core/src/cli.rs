//! Command-line front end. Every subcommand writes one JSON object (or a CSV
//! table with a header row) to standard output or `--output`; diagnostics go
//! to the error stream.
//!
//! Exit codes: 0 success, 1 domain error (fall to center, empty window, ...),
//! 2 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::deltaprobe::{
    identity_defect_away_from_origin, numeric_delta_residual_with, DeltaConvention, ResidualReport,
};
use crate::error::{IndicialError, ModelError, Oracle3dError, ProbeError, SolverError};
use crate::indicial::{admissibility, indicial_exponents, BoundaryPolicy, IndicialReport};
use crate::model::{OriginClass, Potential, RadialGrid};
use crate::oracle3d::{lowest_eigenvalues_3d, CartesianGrid, Spectrum3d};
use crate::solver::{
    bound_states_with, eigenfunction, kg_bound_states, policy_contrast, OuterBoundary,
    ShootingOptions, Spectrum,
};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "RADIAL_GATE_THREADS";
/// Significant digits of every floating-point output.
pub const OUTPUT_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot encode JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Unclassifiable { .. } | ModelError::Domain { .. } => {
                CliError::Domain(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<IndicialError> for CliError {
    fn from(e: IndicialError) -> Self {
        match e {
            IndicialError::Model(m) => m.into(),
            IndicialError::InvalidPolicy(_) | IndicialError::InvalidMass(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<ProbeError> for CliError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::LogCase(_) => CliError::Domain(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Indicial(i) => i.into(),
            SolverError::Model(m) => m.into(),
            SolverError::InvalidInput(_) => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<Oracle3dError> for CliError {
    fn from(e: Oracle3dError) -> Self {
        match e {
            Oracle3dError::Model(m) => m.into(),
            Oracle3dError::Probe(p) => p.into(),
            Oracle3dError::NoConvergence { .. } => CliError::Domain(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "radial-gate",
    version,
    about = "Radial Schrodinger equation lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write data here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Origin class of a potential.
    Classify {
        #[arg(long)]
        potential: Potential,
    },
    /// Frobenius exponents and their admissibility.
    Indicial {
        #[command(flatten)]
        wave: Wave,
        #[arg(long, default_value = "dirichlet")]
        policy: BoundaryPolicy,
    },
    /// Small-sphere point-defect integral of a sampled profile.
    Residual {
        #[command(flatten)]
        probe: Probe,
        /// Probe radius.
        #[arg(long, default_value_t = 0.1)]
        a: f64,
        #[arg(long, value_enum, default_value_t = Convention::FourPi)]
        convention: Convention,
    },
    /// Max defect of the operator identity away from the origin.
    IdentityDefect {
        #[command(flatten)]
        probe: Probe,
        /// Only nodes with r >= r_low are checked.
        #[arg(long, default_value_t = 0.5)]
        r_low: f64,
    },
    /// Schrodinger bound states by shooting.
    Spectrum {
        #[command(flatten)]
        shoot: Shoot,
        #[arg(long, default_value = "dirichlet")]
        policy: BoundaryPolicy,
    },
    /// Klein-Gordon Coulomb bound states in (0, m).
    KgSpectrum {
        #[command(flatten)]
        shoot: Shoot,
        #[arg(long, default_value = "dirichlet")]
        policy: BoundaryPolicy,
    },
    /// Dirichlet spectrum against square-integrable mixings of a boxed
    /// inverse-square problem.
    Contrast {
        #[command(flatten)]
        wave: Wave,
        /// Mixing angles in [0, pi).
        #[arg(long, value_delimiter = ',', required = true)]
        thetas: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        rref: f64,
        #[arg(long, default_value = "0.000001,1,20000")]
        grid: RadialGrid,
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: (f64, f64),
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Lowest eigenvalues of the 3D Cartesian discretization.
    Oracle3d {
        #[arg(long)]
        potential: Potential,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        /// Half width of the cube.
        #[arg(long = "L", default_value_t = 6.0)]
        half_width: f64,
        /// Cells per axis (even, >= 16).
        #[arg(long, default_value_t = 48)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
}

#[derive(Debug, Args)]
struct Wave {
    #[arg(long)]
    potential: Potential,
    #[arg(long, default_value_t = 0)]
    l: u32,
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
}

#[derive(Debug, Args)]
struct Probe {
    #[arg(long, value_enum)]
    profile: Profile,
    /// Radial grid `rmin,rmax,n`.
    #[arg(long, default_value = "0.0001,0.25,2500")]
    grid: RadialGrid,
    /// Number of additional h-halvings.
    #[arg(long, default_value_t = 0)]
    refine: usize,
}

#[derive(Debug, Args)]
struct Shoot {
    #[command(flatten)]
    wave: Wave,
    /// Radial grid `rmin,rmax,n`.
    #[arg(long, default_value = "0.0001,80,20000")]
    grid: RadialGrid,
    /// Energy window `lo,hi`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: (f64, f64),
    /// Number of levels.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Outer boundary condition (default: wall for inverse-square, decaying otherwise).
    #[arg(long, value_enum)]
    outer: Option<Outer>,
    /// Write level K's eigenfunction as (r, u) CSV rows to FILE.
    #[arg(long, num_args = 2, value_names = ["K", "FILE"])]
    dump_wavefunction: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Outer {
    Decaying,
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Convention {
    FourPi,
    TwoPi,
}

/// Test profiles `u(r)` for the defect probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `1`
    Const,
    /// `r`
    Linear,
    /// `cos r`
    Cos,
    /// `exp(-r)`
    ExpDecay,
    /// `1 + r^2`
    OnePlusR2,
    /// `r exp(-r)`
    RExp,
    /// `sin r`
    Sin,
    /// `r^2`
    R2,
}

impl Profile {
    pub fn eval(self, r: f64) -> f64 {
        match self {
            Profile::Const => 1.0,
            Profile::Linear => r,
            Profile::Cos => r.cos(),
            Profile::ExpDecay => (-r).exp(),
            Profile::OnePlusR2 => 1.0 + r * r,
            Profile::RExp => r * (-r).exp(),
            Profile::Sin => r.sin(),
            Profile::R2 => r * r,
        }
    }
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("`{t}` is not a finite number"))
    };
    let (lo, hi) = (num(lo)?, num(hi)?);
    if lo >= hi {
        return Err(format!("window needs lo < hi, got {lo} >= {hi}"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOutput {
    pub potential: String,
    pub finite_at_origin: bool,
    pub origin: OriginClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualOutput {
    pub profile: Profile,
    pub convention: DeltaConvention,
    pub reports: Vec<ResidualReport>,
    /// `log2` of the last error ratio under h-halving.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectRow {
    pub h: f64,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityDefectOutput {
    pub profile: Profile,
    pub r_low: f64,
    pub rows: Vec<DefectRow>,
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastOutput {
    pub spectra: Vec<Spectrum>,
}

#[derive(Serialize)]
struct ClassifyRow<'a> {
    potential: &'a str,
    finite_at_origin: bool,
    class: String,
}

#[derive(Serialize)]
struct ResidualRow {
    h: f64,
    integral: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct LevelRow<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    policy: Option<&'a str>,
    k: usize,
    #[serde(rename = "E")]
    energy: f64,
    nodes: usize,
    width: f64,
}

#[derive(Serialize)]
struct EigenRow {
    k: usize,
    #[serde(rename = "E")]
    energy: f64,
    residual: f64,
}

#[derive(Serialize)]
struct WaveRow {
    r: f64,
    u: f64,
}

/// `x` rounded to [`OUTPUT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.prec$e}", prec = OUTPUT_DIGITS - 1)
        .parse()
        .unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON of `record` with every float rounded, newline-terminated.
pub fn to_json<T: Serialize>(record: &T) -> Result<String, serde_json::Error> {
    let mut v = serde_json::to_value(record)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    w.into_inner()
        .map_err(|e| CliError::Io(io::Error::other(e.to_string())))
}

/// Output of one invocation: the JSON record and its CSV table.
struct Emission {
    json: String,
    csv: Vec<u8>,
}

fn emission<T: Serialize, R: Serialize>(
    record: &T,
    rows: impl IntoIterator<Item = R>,
) -> Result<Emission, CliError> {
    Ok(Emission {
        json: to_json(record)?,
        csv: csv_bytes(rows)?,
    })
}

fn refinements(grid: &RadialGrid, extra: usize) -> Vec<RadialGrid> {
    let mut grids = vec![*grid];
    for _ in 0..extra {
        let next = grids.last().expect("non-empty").refined();
        grids.push(next);
    }
    grids
}

fn last_order(errors: &[f64]) -> Option<f64> {
    match errors {
        [.., a, b] if *a > 0.0 && *b > 0.0 => Some((a / b).log2()),
        _ => None,
    }
}

fn level_rows(spectra: &[(Option<String>, &Spectrum)]) -> Result<Vec<u8>, CliError> {
    csv_bytes(spectra.iter().flat_map(|(policy, s)| {
        s.entries.iter().map(move |e| LevelRow {
            policy: policy.as_deref(),
            k: e.index,
            energy: round_sig(e.energy),
            nodes: e.node_count,
            width: round_sig(e.bisection_width),
        })
    }))
}

fn dump_wavefunction(spectrum: &Spectrum, args: &[String]) -> Result<(), CliError> {
    let k: usize = args[0].parse().map_err(|_| {
        CliError::Usage(format!(
            "--dump-wavefunction: `{}` is not a level index",
            args[0]
        ))
    })?;
    let entry = spectrum
        .entries
        .iter()
        .find(|e| e.index == k)
        .ok_or_else(|| {
            CliError::Usage(format!("--dump-wavefunction: no level {k} in the spectrum"))
        })?;
    let u = eigenfunction(spectrum, entry)?;
    let rows = spectrum
        .grid
        .nodes()
        .into_iter()
        .zip(u)
        .map(|(r, u)| WaveRow {
            r: round_sig(r),
            u: round_sig(u),
        });
    std::fs::write(Path::new(&args[1]), csv_bytes(rows)?)?;
    Ok(())
}

fn shooting_options(outer: Option<Outer>) -> ShootingOptions {
    ShootingOptions {
        outer: outer.map(|o| match o {
            Outer::Decaying => OuterBoundary::Decaying,
            Outer::Wall => OuterBoundary::Wall,
        }),
        ..ShootingOptions::default()
    }
}

fn execute(command: Command) -> Result<Emission, CliError> {
    match command {
        Command::Classify { potential } => {
            let out = ClassifyOutput {
                potential: potential.to_string(),
                finite_at_origin: potential.finite_at_origin(),
                origin: potential.classify_origin()?,
            };
            let class = serde_json::to_value(out.origin)?["class"]
                .as_str()
                .unwrap_or_default()
                .to_string();
            let row = ClassifyRow {
                potential: &out.potential,
                finite_at_origin: out.finite_at_origin,
                class,
            };
            emission(&out, [row])
        }
        Command::Indicial { wave, policy } => {
            let origin = wave.potential.classify_origin()?;
            let report = indicial_exponents(origin, wave.l, wave.mass)?;
            let report: IndicialReport = admissibility(&report, policy)?;
            emission(&report, [&report])
        }
        Command::Residual {
            probe,
            a,
            convention,
        } => {
            let convention = match convention {
                Convention::FourPi => DeltaConvention::FourPi,
                Convention::TwoPi => DeltaConvention::TwoPi,
            };
            let mut reports = Vec::new();
            for grid in refinements(&probe.grid, probe.refine) {
                let u = grid.sample(|r| probe.profile.eval(r));
                reports.push(numeric_delta_residual_with(&grid, &u, a, convention)?);
            }
            let errors: Vec<f64> = reports
                .iter()
                .map(|r| (r.integral - r.predicted).abs())
                .collect();
            let out = ResidualOutput {
                profile: probe.profile,
                convention,
                observed_order: last_order(&errors),
                reports,
            };
            let rows: Vec<ResidualRow> = out
                .reports
                .iter()
                .map(|r| ResidualRow {
                    h: round_sig(r.grid_spacing),
                    integral: round_sig(r.integral),
                    relative_error: round_sig(r.relative_error),
                })
                .collect();
            emission(&out, rows)
        }
        Command::IdentityDefect { probe, r_low } => {
            let mut rows = Vec::new();
            for grid in refinements(&probe.grid, probe.refine) {
                let u = grid.sample(|r| probe.profile.eval(r));
                rows.push(DefectRow {
                    h: grid.spacing(),
                    defect: identity_defect_away_from_origin(&grid, &u, r_low)?,
                });
            }
            let errors: Vec<f64> = rows.iter().map(|r| r.defect).collect();
            let out = IdentityDefectOutput {
                profile: probe.profile,
                r_low,
                observed_order: last_order(&errors),
                rows,
            };
            let table: Vec<DefectRow> = out
                .rows
                .iter()
                .map(|r| DefectRow {
                    h: round_sig(r.h),
                    defect: round_sig(r.defect),
                })
                .collect();
            emission(&out, table)
        }
        Command::Spectrum { shoot, policy } => execute_spectrum(shoot, policy, false),
        Command::KgSpectrum { shoot, policy } => execute_spectrum(shoot, policy, true),
        Command::Contrast {
            wave,
            thetas,
            rref,
            grid,
            window,
            k,
        } => {
            let spectra = policy_contrast(
                wave.potential,
                wave.l,
                wave.mass,
                &thetas,
                rref,
                &grid,
                window,
                k,
            )?;
            let labelled: Vec<(Option<String>, &Spectrum)> = spectra
                .iter()
                .map(|s| (Some(s.policy.to_string()), s))
                .collect();
            let csv = level_rows(&labelled)?;
            let out = ContrastOutput { spectra };
            Ok(Emission {
                json: to_json(&out)?,
                csv,
            })
        }
        Command::Oracle3d {
            potential,
            mass,
            half_width,
            n,
            k,
        } => {
            let grid = CartesianGrid::new(half_width, n)?;
            let out: Spectrum3d = lowest_eigenvalues_3d(potential, mass, &grid, k)?;
            let rows: Vec<EigenRow> = out
                .eigenvalues
                .iter()
                .zip(&out.residuals)
                .enumerate()
                .map(|(i, (e, r))| EigenRow {
                    k: i + 1,
                    energy: round_sig(*e),
                    residual: round_sig(*r),
                })
                .collect();
            emission(&out, rows)
        }
    }
}

fn execute_spectrum(
    shoot: Shoot,
    policy: BoundaryPolicy,
    klein_gordon: bool,
) -> Result<Emission, CliError> {
    let options = shooting_options(shoot.outer);
    let w = &shoot.wave;
    let spectrum = if klein_gordon {
        kg_bound_states(
            w.potential,
            w.l,
            w.mass,
            policy,
            shoot.window,
            shoot.k,
            &shoot.grid,
            &options,
        )?
    } else {
        bound_states_with(
            w.potential,
            w.l,
            w.mass,
            policy,
            shoot.window,
            shoot.k,
            &shoot.grid,
            &options,
        )?
    };
    if let Some(args) = &shoot.dump_wavefunction {
        dump_wavefunction(&spectrum, args)?;
    }
    Ok(Emission {
        json: to_json(&spectrum)?,
        csv: level_rows(&[(None, &spectrum)])?,
    })
}

fn dispatch(cli: Cli) -> Result<Vec<u8>, CliError> {
    let emitted = execute(cli.command)?;
    Ok(match cli.format {
        Format::Json => emitted.json.into_bytes(),
        Format::Csv => emitted.csv,
    })
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Some)
        .map_err(|e| CliError::Usage(format!("{THREADS_ENV}: {e}")))
}

/// Runs one invocation with explicit data and diagnostic streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let output = cli.output.clone();
    let result = thread_pool().and_then(|pool| match pool {
        Some(pool) => pool.install(|| dispatch(cli)),
        None => dispatch(cli),
    });
    let written = result.and_then(|bytes| match output {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(&bytes))
            .map_err(CliError::from),
        None => out.write_all(&bytes).map_err(CliError::from),
    });
    match written {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one invocation against the process's standard streams. `args`
/// includes the program name.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
