//! Command-line front end.
//!
//! Exit codes: 0 success, 1 an expectation (`--expect-preserved`, structure threshold,
//! certificate) failed, 2 bad input (flags, model file, expressions), 3 numerical failure.
//! Reports are JSON with a fixed field order; trajectories are CSV with 17 significant
//! digits. Sampling uses ChaCha8 seeded with `--seed`, so identical invocations produce
//! byte-identical output regardless of `ALGEBROID_THREADS`.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{BaseField, ScalarPhaseField};
use crate::integrate::{integrate, IntegratorConfig, Monitor};
use crate::models::{self, ModelBundle, STRUCTURE_TOL};
use crate::modular::{
    modular_character, modular_section, verify_certificate, PhaseDensity, UnimodularityCertificate,
};
use crate::poisson::PhasePoint;
use crate::sampling;
use crate::volume_flow::{
    divergence, jacobian_log_det, zero_section_obstruction, VolumeDriftReport,
};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_EXPECTATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Hamiltonian dynamics on Lie algebroids.
#[derive(Debug, Parser)]
#[command(name = "algebroid", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structure equations on the model's sample grid.
    Validate(ValidateArgs),
    /// Integrate Hamilton's equations and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Evaluate the modular section and check a unimodularity certificate.
    Modular(ModularArgs),
    /// Measure divergence, volume drift and the zero-section obstruction.
    Volume(VolumeArgs),
    /// Print the built-in model catalog.
    ListModels(OutputArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ModelSource {
    /// Built-in model name (see `list-models`).
    #[arg(long)]
    pub model: Option<String>,
    /// JSON model file.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write output here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Common {
    #[command(flatten)]
    pub source: ModelSource,
    /// Seed for the ChaCha8 sampler.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Initial state `q_1,..,q_m,p_1,..,p_n`; sampled from the model when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long, default_value_t = 10.0)]
    pub t_final: f64,
    /// Fixed RK4 step.
    #[arg(long, conflicts_with_all = ["rtol", "atol"])]
    pub dt: Option<f64>,
    /// Relative tolerance; selects adaptive RKF45.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance; selects adaptive RKF45.
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    pub dt_min: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt_max: f64,
    /// Keep every N-th step.
    #[arg(long, default_value_t = 1)]
    pub record_stride: usize,
    /// Comma-separated subset of `energy,casimir,divergence`.
    #[arg(long, value_delimiter = ',', default_value = "energy")]
    pub monitors: Vec<MonitorName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MonitorName {
    Energy,
    Casimir,
    Divergence,
}

#[derive(Debug, Args)]
pub struct ModularArgs {
    #[command(flatten)]
    pub common: Common,
    /// Base point `q_1,..,q_m` (repeatable); Halton points of the model box by default.
    #[arg(long = "at", allow_hyphen_values = true)]
    pub points: Vec<String>,
    /// Certificate `sigma(q)` replacing the model's.
    #[arg(long)]
    pub sigma: Option<String>,
}

#[derive(Debug, Args)]
pub struct VolumeArgs {
    #[command(flatten)]
    pub common: Common,
    /// `sigma~(q, p)` over the coordinate names and `p1..pn`; defaults to the certified
    /// `sigma o tau` (or 0 without a certificate).
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_tilde: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Random phase points for the divergence.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Trajectories for the drift reports.
    #[arg(long, default_value_t = 2)]
    pub trajectories: usize,
    /// Base points for the zero-section obstruction.
    #[arg(long, default_value_t = 50)]
    pub obstruction_points: usize,
    /// Exit 1 unless `max_divergence` is below `--tolerance`.
    #[arg(long)]
    pub expect_preserved: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
}

/// Runs the binary: parses `std::env::args`, writes to stdout/stderr, returns the exit code.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}");
        return EXIT_INPUT;
    }
    match execute(&cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    if e.is_input_error() || matches!(e, Error::Precondition(_) | Error::OutOfChart { .. }) {
        EXIT_INPUT
    } else {
        EXIT_NUMERIC
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("ALGEBROID_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().map_err(|_| {
        Error::Parse(format!(
            "ALGEBROID_THREADS must be a non-negative integer, got {value:?}"
        ))
    })?;
    // A second initialisation in the same process (tests) is harmless.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn load(source: &ModelSource) -> Result<ModelBundle> {
    match (&source.model, &source.model_file) {
        (Some(name), None) => models::builtin(name),
        (None, Some(path)) => models::load_model_file(path),
        _ => Err(Error::Parse(
            "give exactly one of --model and --model-file".into(),
        )),
    }
}

fn emit(output: &OutputArgs, out: &mut dyn Write, text: &str) -> Result<()> {
    match &output.output {
        Some(path) => std::fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn parse_numbers(label: &str, text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("{label}: {t:?} is not a number")))
        })
        .collect()
}

fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Validate(args) => validate(args, out),
        Command::Simulate(args) => simulate(args, out, err),
        Command::Modular(args) => modular(args, out),
        Command::Volume(args) => volume(args, out),
        Command::ListModels(args) => list_models(args, out),
    }
}

#[derive(Serialize)]
struct ValidateReport {
    model: String,
    max_anchor_residual: f64,
    max_jacobi_residual: f64,
    grid_size: usize,
    threshold: f64,
    passed: bool,
}

fn validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let bundle = load(&args.common.source)?;
    let r = bundle.structure_report(args.common.seed)?;
    let passed = r.passes(STRUCTURE_TOL);
    let report = ValidateReport {
        model: bundle.name.clone(),
        max_anchor_residual: r.max_anchor_residual,
        max_jacobi_residual: r.max_jacobi_residual,
        grid_size: r.grid_size,
        threshold: STRUCTURE_TOL,
        passed,
    };
    emit(&args.common.output, out, &to_json(&report)?)?;
    Ok(if passed { EXIT_OK } else { EXIT_EXPECTATION })
}

fn simulate(args: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let bundle = load(&args.common.source)?;
    let (m, n) = (bundle.base_dim(), bundle.rank());
    let x0 = match &args.x0 {
        Some(text) => {
            let values = parse_numbers("--x0", text)?;
            if values.len() != m + n {
                return Err(Error::Parse(format!(
                    "--x0 needs {} values (m = {m}, n = {n}), got {}",
                    m + n,
                    values.len()
                )));
            }
            PhasePoint::from_flat(&values, m)
        }
        None => bundle
            .sampling
            .initial_condition(&mut sampling::rng(args.common.seed)),
    };
    let cfg = match (args.dt, args.rtol, args.atol) {
        (_, None, None) => IntegratorConfig::rk4(args.dt.unwrap_or(1e-3), args.t_final),
        (None, rtol, atol) => {
            let rtol = rtol.unwrap_or(1e-9);
            let atol = atol.unwrap_or(1e-12);
            IntegratorConfig::rkf45(rtol, atol, args.dt_min, args.dt_max, args.t_final)
        }
        _ => unreachable!("clap rejects --dt with --rtol/--atol"),
    }
    .with_record_stride(args.record_stride);

    let mut monitors = Vec::new();
    for name in &args.monitors {
        match name {
            MonitorName::Energy => monitors.push(Monitor::Energy),
            MonitorName::Casimir => {
                monitors.extend(bundle.expected.casimirs.iter().map(|c| Monitor::Casimir {
                    name: c.name.clone(),
                    field: c.field.clone(),
                }))
            }
            MonitorName::Divergence => {
                let (volume, density) = bundle
                    .certified_volume()
                    .unwrap_or_else(|| (bundle.volume.clone(), PhaseDensity::zero(n)));
                monitors.push(Monitor::Divergence { volume, density });
            }
        }
    }

    let traj = integrate(
        &bundle.algebroid,
        (&bundle.hamiltonian).into(),
        &x0,
        &cfg,
        &monitors,
    )?;
    if let Some(t) = traj.escaped {
        writeln!(
            err,
            "warning: trajectory left the chart at t = {t:e}; output truncated"
        )?;
    }
    let names = bundle.algebroid.chart().coord_names();
    let mut csv = String::from("t");
    for name in names {
        csv.push(',');
        csv.push_str(name);
    }
    for a in 1..=n {
        csv.push_str(&format!(",p{a}"));
    }
    for label in &traj.monitor_labels {
        csv.push(',');
        csv.push_str(label);
    }
    csv.push('\n');
    for ((t, x), mon) in traj.times.iter().zip(&traj.states).zip(&traj.monitors) {
        csv.push_str(&format!("{t:.16e}"));
        for v in x.q.iter().chain(&x.p).chain(mon) {
            csv.push_str(&format!(",{v:.16e}"));
        }
        csv.push('\n');
    }
    emit(&args.common.output, out, &csv)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ModularPoint {
    q: Vec<f64>,
    modular_section: Vec<f64>,
}

#[derive(Serialize)]
struct CertificateJson {
    max_residual: f64,
    points: usize,
    threshold: f64,
    verified: bool,
}

#[derive(Serialize)]
struct ModularReport {
    model: String,
    character: Option<Vec<f64>>,
    points: Vec<ModularPoint>,
    certificate: Option<CertificateJson>,
}

fn modular(args: &ModularArgs, out: &mut dyn Write) -> Result<i32> {
    let bundle = load(&args.common.source)?;
    let m = bundle.base_dim();
    let points: Vec<Vec<f64>> = if m == 0 {
        vec![Vec::new()]
    } else if args.points.is_empty() {
        bundle.sampling.base.halton(5)
    } else {
        args.points
            .iter()
            .map(|s| {
                let q = parse_numbers("--at", s)?;
                if q.len() != m {
                    return Err(Error::Parse(format!(
                        "--at needs {m} values, got {}",
                        q.len()
                    )));
                }
                Ok(q)
            })
            .collect::<Result<_>>()?
    };
    let certificate = match &args.sigma {
        Some(text) => {
            let names = bundle.algebroid.chart().coord_names().to_vec();
            Some(UnimodularityCertificate::new(BaseField::from_expr(
                Expr::parse(text, &names)?,
                m,
            )))
        }
        None => bundle.certificate.clone(),
    };
    let character = if m == 0 {
        Some(modular_character(&bundle.algebroid)?.as_slice().to_vec())
    } else {
        None
    };
    let evaluated = points
        .into_iter()
        .map(|q| {
            let s = modular_section(&bundle.algebroid, &bundle.volume, &q)?;
            Ok(ModularPoint {
                q,
                modular_section: s.components.as_slice().to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cert_report = certificate
        .map(|cert| {
            verify_certificate(
                &bundle.algebroid,
                &bundle.volume,
                &cert,
                &bundle.sampling.base,
                args.common.seed,
            )
        })
        .transpose()?
        .map(|r| CertificateJson {
            max_residual: r.max_residual,
            points: r.points,
            threshold: r.threshold,
            verified: r.verified,
        });
    let code = match &cert_report {
        Some(r) if !r.verified => EXIT_EXPECTATION,
        _ => EXIT_OK,
    };
    let report = ModularReport {
        model: bundle.name.clone(),
        character,
        points: evaluated,
        certificate: cert_report,
    };
    emit(&args.common.output, out, &to_json(&report)?)?;
    Ok(code)
}

#[derive(Serialize)]
struct DriftJson {
    x0: Vec<f64>,
    #[serde(flatten)]
    report: Option<VolumeDriftReport>,
    error: Option<String>,
}

#[derive(Serialize)]
struct VolumeReport {
    model: String,
    samples: usize,
    max_divergence: f64,
    drift_reports: Vec<DriftJson>,
    obstruction_points: usize,
    obstruction_max: Option<f64>,
    obstruction_error: Option<String>,
    tolerance: f64,
}

fn volume(args: &VolumeArgs, out: &mut dyn Write) -> Result<i32> {
    let bundle = load(&args.common.source)?;
    let (m, n) = (bundle.base_dim(), bundle.rank());
    let alg = &bundle.algebroid;
    let (vol, certified_density) = bundle
        .certified_volume()
        .unwrap_or_else(|| (bundle.volume.clone(), PhaseDensity::zero(n)));
    let density = match &args.sigma_tilde {
        Some(text) => {
            let mut vars = alg.chart().coord_names().to_vec();
            vars.extend((1..=n).map(|a| format!("p{a}")));
            PhaseDensity::new(ScalarPhaseField::from_expr(Expr::parse(text, &vars)?, m, n))
        }
        None => certified_density,
    };

    let mut rng = sampling::rng(args.common.seed);
    let points: Vec<PhasePoint> = (0..args.samples)
        .map(|_| bundle.sampling.phase_point(&mut rng))
        .collect();
    let divergences = points
        .par_iter()
        .map(|x| {
            divergence(alg, (&bundle.hamiltonian).into(), &vol, &density, x)
                .map(|r| r.divergence.abs())
        })
        .collect::<Result<Vec<_>>>()?;
    let max_divergence = divergences.into_iter().fold(0.0, f64::max);

    let starts: Vec<PhasePoint> = (0..args.trajectories)
        .map(|_| bundle.sampling.initial_condition(&mut rng))
        .collect();
    let drift_reports = starts
        .par_iter()
        .map(|x0| {
            let r = jacobian_log_det(
                alg,
                (&bundle.hamiltonian).into(),
                x0,
                args.t_final,
                args.dt,
                Some((&vol, &density)),
            );
            match r {
                Ok(report) => Ok(DriftJson {
                    x0: x0.to_flat(),
                    report: Some(report),
                    error: None,
                }),
                Err(e @ (Error::Escape { .. } | Error::Numeric(_))) => Ok(DriftJson {
                    x0: x0.to_flat(),
                    report: None,
                    error: Some(e.to_string()),
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let base_points: Vec<Vec<f64>> = if m == 0 {
        vec![Vec::new()]
    } else {
        (0..args.obstruction_points)
            .map(|_| bundle.sampling.base.uniform(&mut rng))
            .collect()
    };
    let sigma_on_zero = {
        let d = density.clone();
        BaseField::new(move |q| d.sigma_at_zero(q, n))
    };
    let obstruction = base_points
        .par_iter()
        .map(|q| {
            zero_section_obstruction(alg, &bundle.hamiltonian, &vol, &density, &sigma_on_zero, q)
                .map(|r| r.amax())
        })
        .collect::<Result<Vec<_>>>();
    let (obstruction_max, obstruction_error) = match obstruction {
        Ok(v) => (Some(v.into_iter().fold(0.0, f64::max)), None),
        Err(e @ (Error::Capability(_) | Error::Precondition(_))) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };

    let report = VolumeReport {
        model: bundle.name.clone(),
        samples: points.len(),
        max_divergence,
        drift_reports,
        obstruction_points: base_points.len(),
        obstruction_max,
        obstruction_error,
        tolerance: args.tolerance,
    };
    emit(&args.common.output, out, &to_json(&report)?)?;
    Ok(
        if args.expect_preserved && !(max_divergence < args.tolerance) {
            EXIT_EXPECTATION
        } else {
            EXIT_OK
        },
    )
}

#[derive(Serialize)]
struct ExpectedJson {
    unimodular: Option<bool>,
    casimirs: Vec<String>,
}

#[derive(Serialize)]
struct CatalogEntry {
    name: String,
    description: String,
    base_dim: usize,
    rank: usize,
    coord_names: Vec<String>,
    params: BTreeMap<String, f64>,
    has_certificate: bool,
    expected: ExpectedJson,
}

fn list_models(args: &OutputArgs, out: &mut dyn Write) -> Result<i32> {
    let catalog = models::BUILTIN_NAMES
        .iter()
        .map(|name| {
            let b = models::builtin(name)?;
            Ok(CatalogEntry {
                name: b.name.clone(),
                description: b.description.clone(),
                base_dim: b.base_dim(),
                rank: b.rank(),
                coord_names: b.algebroid.chart().coord_names().to_vec(),
                params: b.params.clone(),
                has_certificate: b.certificate.is_some(),
                expected: ExpectedJson {
                    unimodular: b.expected.unimodular,
                    casimirs: b.expected.casimirs.iter().map(|c| c.name.clone()).collect(),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    emit(args, out, &to_json(&catalog)?)?;
    Ok(EXIT_OK)
}
