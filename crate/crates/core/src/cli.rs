//! Command-line front end. `run` returns the process exit code:
//! 0 success, 2 validation failure, 3 infeasible problem, 4 bad flags.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::linalg::{re, C64};
use crate::measurements::{diagnose, make_projective_qubit, make_trine, validate_povm, PovmFile, POVM_TOL};
use crate::oracle::{
    oracle_measurement_discrimination, oracle_min_sum_overlap, oracle_state_povm, vector_pairs, OracleReport, Scheme,
    SearchConfig,
};
use crate::perfect::{binary_perfect_check, minerror_pair, simple_scheme_distance, simple_scheme_perfect_check};
use crate::qubit::{discriminate_noisy_pair, discriminate_projective_pair, StateDiscriminationPovm};
use crate::reduction::{embed_tester, filter_pair, reduce_filters, reduce_pair, ReductionSummary};
use crate::testers::{performance, Mode};
use crate::trine::{theta_grid, trine_sweep};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_FLAGS: i32 = 4;

/// CSV header of the trine sweep.
pub const SWEEP_HEADER: [&str; 5] = ["theta", "q_star", "pf_optimal", "pf_maxent", "gap"];

#[derive(Debug, Parser)]
#[command(name = "measdisc", version, about = "Optimal single-shot discrimination of quantum measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a measurement file
    Validate(ValidateArgs),
    /// Perfect-distinguishability and minimum-error analysis of two measurement files
    Perfect(PerfectArgs),
    /// Discriminate two qubit devices (projective, noisy) or two filters
    Discriminate(DiscriminateArgs),
    /// Optimal vs maximally entangled probes for the trine pair
    TrineSweep(SweepArgs),
    /// Run a brute-force reference search
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = POVM_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct PerfectArgs {
    pub m: PathBuf,
    pub n: PathBuf,
    #[arg(long, default_value_t = POVM_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    MinError,
    Unambiguous,
    FixedFailure,
}

#[derive(Debug, Args)]
pub struct DiscriminateArgs {
    #[arg(long, group = "kind")]
    pub projective: bool,
    #[arg(long, group = "kind")]
    pub noisy: bool,
    #[arg(long, group = "kind")]
    pub filters: bool,
    /// Overlap `|⟨φ|ψ⟩|` of the defining vectors
    #[arg(long = "F", default_value_t = 0.5)]
    pub overlap: f64,
    /// Relative phase of `ψ`
    #[arg(long, default_value_t = 0.0)]
    pub phase: f64,
    /// Prior of the first device
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::MinError)]
    pub mode: ModeArg,
    /// Failure rate for `--mode fixed-failure`
    #[arg(long)]
    pub pf: Option<f64>,
    /// Hilbert-space dimension for `--filters`
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Angles are given in degrees
    #[arg(long)]
    pub deg: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.0)]
    pub theta_min: f64,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 181)]
    pub steps: usize,
    /// CSV destination; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub deg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleTarget {
    /// Best ancilla-free scheme for the three projective devices on trine states
    TrineStates,
    /// Ancilla-assisted unambiguous search for the trine pair
    Trine,
    /// POVM search for two pure states with overlap F
    StatePair,
    /// Minimum of Σ_j tr(M_j ρ) tr(N_j ρ) for two measurement files
    MinSumOverlap,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub target: OracleTarget,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long = "F", default_value_t = 0.5)]
    pub overlap: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::MinError)]
    pub mode: ModeArg,
    #[arg(long)]
    pub pf: Option<f64>,
    /// Measurement files for `min-sum-overlap`
    #[arg(long, num_args = 2)]
    pub files: Vec<PathBuf>,
    #[arg(long, default_value_t = SearchConfig::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = SearchConfig::default().restarts)]
    pub restarts: usize,
    #[arg(long, default_value_t = SearchConfig::default().sphere_step_deg)]
    pub sphere_step: f64,
    #[arg(long, default_value_t = SearchConfig::default().ancilla_step_deg)]
    pub ancilla_step: f64,
    #[arg(long, default_value_t = SearchConfig::default().rounds)]
    pub rounds: usize,
    #[arg(long, default_value_t = SearchConfig::default().shrink)]
    pub shrink: f64,
    #[arg(long, default_value_t = SearchConfig::default().tol)]
    pub tol: f64,
    #[arg(long)]
    pub deg: bool,
}

/// Parses `args` (program name first), runs, writes to `out`/`err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FLAGS } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Povm(_) | Error::Json(_) => EXIT_INVALID,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::InvalidArgument(_) | Error::Unsupported(_) | Error::Io(_) => EXIT_FLAGS,
        _ => EXIT_INTERNAL,
    }
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Validate(a) => cmd_validate(a, out),
        Command::Perfect(a) => emit(out, &cmd_perfect(a)?).map(|_| EXIT_OK),
        Command::Discriminate(a) => emit(out, &cmd_discriminate(a)?).map(|_| EXIT_OK),
        Command::TrineSweep(a) => cmd_trine_sweep(a, out).map(|_| EXIT_OK),
        Command::Oracle(a) => emit(out, &cmd_oracle(a)?).map(|_| EXIT_OK),
    }
}

fn emit(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn read_povm_file(path: &Path) -> Result<PovmFile> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn load_povm(path: &Path, tol: f64) -> Result<crate::measurements::Povm> {
    Ok(read_povm_file(path)?.into_povm(tol)?)
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let file = read_povm_file(&a.file)?;
    let raw = file.raw_effects()?;
    let diagnostics = diagnose(&raw)?;
    let (valid, violation, error) = match validate_povm(&raw, a.tol) {
        Ok(_) => (true, None, None),
        Err(e) => {
            let kind = format!("{e:?}");
            let kind = kind.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string();
            (false, Some(kind), Some(e.to_string()))
        }
    };
    emit(
        out,
        &json!({
            "valid": valid,
            "violation": violation,
            "error": error,
            "dim": file.dim,
            "outcomes": file.outcomes,
            "diagnostics": diagnostics,
            "tolerance": a.tol,
        }),
    )?;
    Ok(if valid { EXIT_OK } else { EXIT_INVALID })
}

pub fn cmd_perfect(a: &PerfectArgs) -> Result<serde_json::Value> {
    let m = load_povm(&a.m, a.tol)?;
    let n = load_povm(&a.n, a.tol)?;
    let witness = if m.outcomes() == 2 && n.outcomes() == 2 {
        binary_perfect_check(&m, &n)?
    } else {
        None
    };
    let simple = simple_scheme_perfect_check(&m, &n)?;
    let cb = minerror_pair(&m, &n)?;
    let distance = simple_scheme_distance(&m, &n)?;
    Ok(json!({
        "binary_witness": witness.map(|w| json!({
            "probe": vector_pairs(&w.probe),
            "certainty_outcome": w.certainty_outcome + 1,
            "identified": w.identified.iter().map(|c| c.label().to_string()).collect::<Vec<_>>(),
        })),
        "simple_min_overlap": simple.min_overlap,
        "simple_probe": simple.probe.as_deref().map(vector_pairs),
        "cb_pe": cb.p_e,
        "cb_value": cb.cb_value,
        "simple_distance": distance.value,
        "exhaustive": simple.exhaustive && cb.exhaustive && distance.exhaustive,
        "tolerance": {
            "povm": a.tol,
            "certainty": crate::perfect::CERTAINTY_TOL,
            "overlap_zero": crate::perfect::OVERLAP_ZERO,
        },
    }))
}

fn mode_of(mode: ModeArg, pf: Option<f64>) -> Result<Mode> {
    match (mode, pf) {
        (ModeArg::MinError, None) => Ok(Mode::MinError),
        (ModeArg::Unambiguous, None) => Ok(Mode::Unambiguous),
        (ModeArg::FixedFailure, Some(p_f)) => Ok(Mode::FixedFailure { p_f }),
        (ModeArg::FixedFailure, None) => Err(Error::InvalidArgument("--mode fixed-failure needs --pf".into())),
        (_, Some(_)) => Err(Error::InvalidArgument("--pf applies only to --mode fixed-failure".into())),
    }
}

fn angle(x: f64, deg: bool) -> f64 {
    if deg {
        x.to_radians()
    } else {
        x
    }
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("--{name} must lie in [0, 1], got {x}")));
    }
    Ok(())
}

/// `|φ⟩ = |0⟩`, `|ψ⟩ = F|0⟩ + e^{iχ}√(1−F²)|1⟩` padded to dimension `d`.
fn defining_vectors(f: f64, phase: f64, d: usize) -> (Vec<C64>, Vec<C64>) {
    let mut phi = vec![re(0.0); d];
    let mut psi = vec![re(0.0); d];
    phi[0] = re(1.0);
    psi[0] = re(f);
    psi[1] = C64::from_polar((1.0 - f * f).max(0.0).sqrt(), phase);
    (phi, psi)
}

fn state_povm_json(e: &StateDiscriminationPovm) -> serde_json::Value {
    json!({
        "conclusions": e.conclusions().iter().map(|c| c.label().to_string()).collect::<Vec<_>>(),
        "effects": e.effects().iter().map(|h| h.matrix().to_pairs()).collect::<Vec<_>>(),
    })
}

pub fn cmd_discriminate(a: &DiscriminateArgs) -> Result<serde_json::Value> {
    let mode = mode_of(a.mode, a.pf)?;
    check_unit_interval("F", a.overlap)?;
    check_unit_interval("eta", a.eta)?;
    let phase = angle(a.phase, a.deg);
    let tolerance = json!({ "realization": crate::qubit::REALIZATION_TOL, "povm": POVM_TOL });
    if a.noisy {
        check_unit_interval("mu", a.mu)?;
        check_unit_interval("nu", a.nu)?;
        let (phi, psi) = defining_vectors(a.overlap, phase, 2);
        let s = discriminate_noisy_pair(&phi, a.mu, &psi, a.nu, a.eta, mode)?;
        return Ok(json!({
            "kind": "noisy",
            "mode": mode,
            "report": s.report,
            "state_povm": state_povm_json(&s.state_povm),
            "tester": s.tester.to_file(),
            "tolerance": tolerance,
        }));
    }
    if a.filters {
        if a.dim < 2 {
            return Err(Error::InvalidArgument("--dim must be at least 2".into()));
        }
        let (phi, psi) = defining_vectors(a.overlap, phase, a.dim);
        let (m, n) = filter_pair(&phi, &psi)?;
        let summary = ReductionSummary::from(&reduce_pair(&m, &n)?);
        let r = reduce_filters(&phi, &psi, a.dim)?;
        let s = discriminate_projective_pair(r.m.state(), r.n.state(), a.eta, mode)?;
        let lifted = embed_tester(&s.tester, &r.embedding)?;
        let report = performance(&lifted, &[(&m, a.eta), (&n, 1.0 - a.eta)])?;
        return Ok(json!({
            "kind": "filters",
            "mode": mode,
            "report": report,
            "reduced_report": s.report,
            "reduction": { "summary": summary, "overlap": r.overlap, "embedding": r.embedding.to_pairs() },
            "state_povm": state_povm_json(&s.state_povm),
            "clamped": s.clamped,
            "tester": lifted.to_file(),
            "tolerance": tolerance,
        }));
    }
    let (phi, psi) = defining_vectors(a.overlap, phase, 2);
    let s = discriminate_projective_pair(&phi, &psi, a.eta, mode)?;
    Ok(json!({
        "kind": "projective",
        "mode": mode,
        "report": s.report,
        "simple": s.simple.as_ref().map(|(t, r)| json!({
            "report": r,
            "probe": t.normalization().matrix().to_pairs(),
        })),
        "state_povm": state_povm_json(&s.state_povm),
        "clamped": s.clamped,
        "tester": s.tester.to_file(),
        "tolerance": tolerance,
    }))
}

/// Formats with 12 significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn cmd_trine_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    if a.steps == 0 {
        return Err(Error::InvalidArgument("--steps must be positive".into()));
    }
    let grid = theta_grid(angle(a.theta_min, a.deg), angle(a.theta_max, a.deg), a.steps);
    let rows = trine_sweep(&grid)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(SWEEP_HEADER).map_err(csv_err)?;
        for r in &rows {
            w.write_record([r.theta, r.q_star, r.p_f_optimal, r.p_f_maxentangled, r.gap].map(sig12))
                .map_err(csv_err)?;
        }
        w.flush()?;
    }
    match &a.out {
        Some(path) => {
            fs::write(path, &buf)?;
            emit(
                out,
                &json!({
                    "rows": rows.len(),
                    "path": path,
                    "tolerance": { "tester": 1e-9, "argmin": crate::trine::ARGMIN_TOL, "value": crate::trine::VALUE_TOL },
                }),
            )?;
        }
        None => out.write_all(&buf)?,
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn cmd_oracle(a: &OracleArgs) -> Result<OracleReport> {
    let cfg = SearchConfig {
        sphere_step_deg: a.sphere_step,
        ancilla_step_deg: a.ancilla_step,
        rounds: a.rounds,
        shrink: a.shrink,
        tol: a.tol,
        restarts: a.restarts,
        seed: a.seed,
    };
    cfg.validate()?;
    let mode = mode_of(a.mode, a.pf)?;
    match a.target {
        OracleTarget::TrineStates => {
            let (_, devices) = crate::qubit::trine_state_devices();
            let r = oracle_measurement_discrimination(&devices, &[1.0 / 3.0; 3], Scheme::Simple, Mode::MinError, &cfg)?;
            Ok(OracleReport::new("trine-states-simple", r.p_s, cfg)
                .with("p_s", r.p_s)
                .with("probe", vector_pairs(&r.probe))
                .with("polar", r.angles[0])
                .with("azimuth", r.angles[1]))
        }
        OracleTarget::Trine => {
            let theta = angle(a.theta.unwrap_or(std::f64::consts::PI), a.deg);
            let devices = [make_trine(0.0, false), make_trine(theta, true)];
            let r = oracle_measurement_discrimination(&devices, &[0.5, 0.5], Scheme::Ancilla(2), Mode::Unambiguous, &cfg)?;
            Ok(OracleReport::new("trine-ancilla-unambiguous", r.p_f, cfg)
                .with("theta", theta)
                .with("p_f", r.p_f)
                .with("p_e", r.p_e)
                .with("schmidt_weight", r.schmidt_weight())
                .with("probe", vector_pairs(&r.probe)))
        }
        OracleTarget::StatePair => {
            check_unit_interval("F", a.overlap)?;
            let (phi, psi) = defining_vectors(a.overlap, 0.0, 2);
            let states = [
                crate::measurements::DensityOperator::pure(&phi)?,
                crate::measurements::DensityOperator::pure(&psi)?,
            ];
            let r = oracle_state_povm(&states, &[a.eta, 1.0 - a.eta], mode, &cfg)?;
            Ok(OracleReport::new("state-pair", r.value, cfg)
                .with("F", a.overlap)
                .with("eta", a.eta)
                .with("mode", mode)
                .with("p_s", r.p_s)
                .with("p_e", r.p_e)
                .with("p_f", r.p_f)
                .with(
                    "effects",
                    r.povm.effects().iter().map(|e| e.matrix().to_pairs()).collect::<Vec<_>>(),
                ))
        }
        OracleTarget::MinSumOverlap => {
            if a.files.len() != 2 {
                return Err(Error::InvalidArgument("--files needs two measurement files".into()));
            }
            let m = load_povm(&a.files[0], POVM_TOL)?;
            let n = load_povm(&a.files[1], POVM_TOL)?;
            let (v, probe) = oracle_min_sum_overlap(&m, &n, &cfg)?;
            Ok(OracleReport::new("min-sum-overlap", v, cfg).with("probe", vector_pairs(&probe)))
        }
    }
}

/// Effects of a qubit projective device as a measurement file.
pub fn projective_file(phi: &[C64]) -> Result<PovmFile> {
    Ok(make_projective_qubit(phi)?.to_file())
}
