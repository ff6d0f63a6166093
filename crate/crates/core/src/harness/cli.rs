use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classical::{fix_classical, ProbabilityVector, StochasticMatrix};
use crate::counterexamples::{bipartite_counterexample, named_counterexample, CounterexampleInstance, TrilemmaCandidate};
use crate::error::{Error, Result};
use crate::fixers::{fix_general, fix_local_pure, fix_mixed_unitary, fix_unital, fix_unitary, BOUND_SLACK};
use crate::harness::generate::{generate_instance, Instance, InstanceClass, InstanceSpec, Strategy};
use crate::harness::suite::{run_suite, SuiteConfig};
use crate::io::{read_json, rows_to_matrix, MatrixJson};
use crate::linalg::CMatrix;
use crate::quantum::{Channel, DensityMatrix, MixedUnitaryChannel, PureState};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fixforge", version, about = "Repair approximate fixed points of quantum channels and stochastic maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fix one (state, channel) pair read from JSON.
    Fix(FixArgs),
    /// Run a verification suite and emit a CSV report.
    Verify(VerifyArgs),
    /// Build and check one of the explicit counterexamples.
    Counterexample(CounterexampleArgs),
    /// Generate a random instance near an exact fixed pair.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct FixArgs {
    /// general, classical, unitary, mixed_unitary, unital or local_pure
    pub class: String,
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long)]
    pub channel: Option<PathBuf>,
    /// An instance written by `gen`, instead of --state/--channel.
    #[arg(long, conflicts_with_all = ["state", "channel"])]
    pub instance: Option<PathBuf>,
    /// Promised deviation; the measured one is used when absent.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Bipartition `d_A,d_B` for local_pure when the state file carries none.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = BOUND_SLACK)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// general, classical, unitary, mixed_unitary, unital, local_pure, rotations, lemmas, counterexamples or scaling
    pub suite: String,
    /// `2..8`, `2..=8` or `2,3,5`.
    #[arg(long)]
    pub dims: Option<String>,
    /// Comma separated list.
    #[arg(long)]
    pub eps: Option<String>,
    /// Instances per (d, ε) cell.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, env = "FIXFORGE_SEED", default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Full JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// change_both, optimality, tridiagonal, quantum, bipartite or linear
    pub name: String,
    #[arg(long, default_value_t = 6)]
    pub d: usize,
    /// Dimension of the untouched register for `bipartite`.
    #[arg(long, default_value_t = 2)]
    pub d_a: usize,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    pub class: String,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Bipartition `d_A,d_B` for local_pure.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, env = "FIXFORGE_SEED", default_value_t = 42)]
    pub seed: u64,
    /// exact_then_perturb (channel kick) or promise_measured (state kick)
    #[arg(long, default_value = "exact_then_perturb")]
    pub strategy: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `2..8` and `2..=8` are inclusive; otherwise a comma separated list.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidInput(format!("cannot parse dimensions {s:?}"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let lo: usize = a.trim().parse().map_err(|_| bad())?;
        let hi: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

pub fn parse_eps(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            let v: f64 = x.trim().parse().map_err(|_| Error::InvalidInput(format!("cannot parse epsilon {x:?}")))?;
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("epsilon {v}")));
            }
            Ok(v)
        })
        .collect()
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    match parse_dims(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::InvalidInput(format!("expected d_A,d_B, got {s:?}"))),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BoundViolated(_) | Error::FactFailed(_) | Error::NoConvergence { .. } => EXIT_FAIL,
        _ => EXIT_INPUT,
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => crate::io::write_json(p, value),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::InvalidInput(format!("--{flag} is required")))
}

/// A unitary file may hold a bare matrix or a single-Kraus channel.
fn read_unitary(path: &Path) -> Result<CMatrix> {
    if let Ok(m) = read_json::<MatrixJson>(path) {
        return rows_to_matrix(&m.0);
    }
    let ch: Channel = read_json(path)?;
    match ch.kraus().as_slice() {
        [u] => Ok(u.clone()),
        ops => Err(Error::InvalidInput(format!("expected a unitary, found {} Kraus operators", ops.len()))),
    }
}

fn load_instance(args: &FixArgs, class: InstanceClass) -> Result<Instance> {
    if let Some(p) = &args.instance {
        let inst: Instance = match read_json::<crate::harness::generate::GeneratedInstance>(p) {
            Ok(g) => g.instance,
            Err(_) => read_json(p)?,
        };
        if inst.class() != class {
            return Err(Error::InvalidInput(format!("instance is {}, asked to fix {class}", inst.class())));
        }
        return Ok(inst);
    }
    let state = need(&args.state, "state")?;
    let channel = need(&args.channel, "channel")?;
    Ok(match class {
        InstanceClass::General => Instance::General { state: read_json(state)?, channel: read_json(channel)? },
        InstanceClass::Unital => Instance::Unital { state: read_json(state)?, channel: read_json(channel)? },
        InstanceClass::Classical => Instance::Classical {
            distribution: read_json::<ProbabilityVector>(state)?,
            matrix: read_json::<StochasticMatrix>(channel)?,
        },
        InstanceClass::Unitary => Instance::Unitary { state: read_json::<DensityMatrix>(state)?, unitary: read_unitary(channel)? },
        InstanceClass::MixedUnitary => {
            Instance::MixedUnitary { state: read_json(state)?, mixture: read_json::<MixedUnitaryChannel>(channel)? }
        }
        InstanceClass::LocalPure => {
            let mut psi: PureState = read_json(state)?;
            if let Some(d) = &args.dims {
                psi = PureState::new(psi.vector().clone(), Some(parse_pair(d)?))?;
            }
            Instance::LocalPure { state: psi, channel_b: read_json(channel)? }
        }
    })
}

fn cmd_fix(args: &FixArgs) -> Result<i32> {
    let class: InstanceClass = args.class.parse()?;
    let inst = load_instance(args, class)?;
    let out = args.out.as_deref();
    let result = match &inst {
        Instance::Classical { distribution, matrix } => {
            let r = fix_classical(distribution, matrix, args.eps)?;
            let ok = r.fixed_point_residual <= args.tol
                && r.state_distance <= r.bound_claimed + BOUND_SLACK
                && r.channel_distance <= r.bound_claimed + BOUND_SLACK;
            emit(&r, out)?;
            return Ok(if ok { EXIT_PASS } else { EXIT_FAIL });
        }
        Instance::General { state, channel } => fix_general(state, channel, args.eps)?,
        Instance::Unitary { state, unitary } => fix_unitary(state, unitary, args.eps)?,
        Instance::MixedUnitary { state, mixture } => fix_mixed_unitary(state, mixture, args.eps)?,
        Instance::Unital { state, channel } => fix_unital(state, channel, args.eps)?,
        Instance::LocalPure { state, channel_b } => fix_local_pure(state, channel_b, args.eps)?,
    };
    emit(&result, out)?;
    let violations = result.violations_with(args.tol);
    for v in &violations {
        eprintln!("violation: {v}");
    }
    Ok(if violations.is_empty() { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let mut cfg = SuiteConfig::default_for(&args.suite)?;
    if let Some(d) = &args.dims {
        cfg.dims = parse_dims(d)?;
    }
    if let Some(e) = &args.eps {
        cfg.epsilons = parse_eps(e)?;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    cfg.seed = args.seed;
    let report = run_suite(&args.suite, &cfg)?;
    match &args.csv {
        Some(p) => report.write_csv(p)?,
        None => report.write_csv_to(std::io::stdout().lock())?,
    }
    if let Some(p) = &args.out {
        crate::io::write_json(p, &report)?;
    }
    let mut err = std::io::stderr().lock();
    let failed = report.failed_records().count();
    let _ = writeln!(
        err,
        "{}: {} instances, {} records, {} failed, {:.2}s: {}",
        report.suite,
        report.instances,
        report.records.len(),
        failed,
        report.wall_time_secs,
        if report.pass { "PASS" } else { "FAIL" }
    );
    for fit in &report.fits {
        let b = fit.dimension_exponent.map_or("-".to_string(), |b| format!("{b:.3}"));
        let _ = writeln!(err, "  fit {}: a = {:.3}, b = {b}, c = {:.3e} ({} points)", fit.class, fit.epsilon_exponent, fit.constant, fit.points);
    }
    for f in report.failures.iter().take(20) {
        let _ = writeln!(err, "  {f}");
    }
    Ok(if report.pass { EXIT_PASS } else { EXIT_FAIL })
}

#[derive(Serialize)]
struct CounterexampleOutput {
    #[serde(flatten)]
    instance: CounterexampleInstance,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    trilemma: Vec<TrilemmaCandidate>,
}

fn cmd_counterexample(args: &CounterexampleArgs) -> Result<i32> {
    let key = args.name.replace('-', "_");
    let output = if key == "bipartite" {
        let (instance, trilemma) = bipartite_counterexample(args.d, args.d_a)?;
        CounterexampleOutput { instance, trilemma }
    } else {
        CounterexampleOutput { instance: named_counterexample(&key, args.d, args.eps)?, trilemma: vec![] }
    };
    emit(&output, args.out.as_deref())?;
    let mut err = std::io::stderr().lock();
    for f in &output.instance.claimed_facts {
        let _ = writeln!(err, "{} {}: {:.6e}", if f.holds() { "ok  " } else { "FAIL" }, f.description, f.value);
    }
    for c in &output.trilemma {
        let _ = writeln!(err, "trilemma {}: {}", c.label, c.exceeded.join(", "));
    }
    Ok(if output.instance.failed_facts().is_empty() { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_gen(args: &GenArgs) -> Result<i32> {
    let class: InstanceClass = args.class.parse()?;
    let strategy: Strategy = args.strategy.parse()?;
    let spec = match (class, &args.dims) {
        (InstanceClass::LocalPure, Some(d)) => {
            let (a, b) = parse_pair(d)?;
            InstanceSpec::bipartite(a, b, args.eps, args.seed)
        }
        (InstanceClass::LocalPure, None) => InstanceSpec::bipartite(args.d, args.d, args.eps, args.seed),
        _ => InstanceSpec::new(class, args.d, args.eps, args.seed),
    }
    .with_strategy(strategy);
    let g = generate_instance(&spec)?;
    emit(&g, args.out.as_deref())?;
    eprintln!("{} d={} measured deviation {:.6e} (eta {:.3e})", class, spec.dim, g.epsilon_measured, g.eta);
    Ok(EXIT_PASS)
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Fix(a) => cmd_fix(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Counterexample(a) => cmd_counterexample(a),
        Command::Gen(a) => cmd_gen(a),
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
