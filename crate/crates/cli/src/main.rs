//! `naimark`: compile, verify and exercise POVM netlists from the command line.
//!
//! Exit codes: 0 success, 2 usage or precondition, 3 I/O, 4 parse, 5 validation,
//! 6 compilation, 7 verification failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use naimark_core::applications::{prep_plan, prep_run, tomo_pipeline};
use naimark_core::compiler::{self, BackendChoice, CompileOptions, DEFAULT_SEED};
use naimark_core::json::{self, StateFile};
use naimark_core::simulator::{self, SimInput};
use naimark_core::{CMatrix, Error, OpticalNetlist, PovmSpec};
use serde_json::json;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: Error },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("verification failed")]
    VerificationFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 3,
            CliError::Input { source, .. } | CliError::Core(source) => core_code(source),
            CliError::VerificationFailed => 7,
        }
    }
}

fn core_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => 4,
        Error::Precondition(_) | Error::Unsupported(_) => 2,
        Error::Shape(_)
        | Error::NonFinite
        | Error::NotHermitian { .. }
        | Error::NotPositive { .. }
        | Error::InvalidIsometry { .. }
        | Error::InvalidUnitary { .. }
        | Error::InvalidPovm { .. }
        | Error::InvalidState(_) => 5,
        Error::NumericFailure { .. }
        | Error::SingularSine { .. }
        | Error::CompileFailure(_)
        | Error::FactoringFailure { .. }
        | Error::RankDeficient { .. } => 6,
    }
}

#[derive(Parser)]
#[command(
    name = "naimark",
    version,
    about = "Compile POVMs into linear-optical netlists"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a POVM file into a netlist.
    Compile(CompileArgs),
    /// Check a netlist against a POVM on random input states.
    Verify(VerifyArgs),
    /// Detector probabilities (or sampled counts) for one input state.
    Simulate(SimulateArgs),
    /// Single-setup SIC tomography of a qubit state.
    Tomo(TomoArgs),
    /// Plan and simulate mixed-state preparation from the maximally mixed state.
    Prepare(PrepareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Auto,
    Recursive,
    FullCsd,
}

impl From<BackendArg> for BackendChoice {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Auto => BackendChoice::Auto,
            BackendArg::Recursive => BackendChoice::Recursive,
            BackendArg::FullCsd => BackendChoice::FullCsd,
        }
    }
}

#[derive(Args)]
struct CompileArgs {
    povm: PathBuf,
    /// Netlist output file; the netlist is embedded in the report when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    backend: BackendArg,
    /// Drop the left unitaries; only outcome statistics are preserved.
    #[arg(long)]
    effects_only: bool,
    /// Annotate qubit unitaries with quarter/half/quarter wave-plate angles.
    #[arg(long)]
    waveplates: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also write the global unitary of the netlist.
    #[arg(long)]
    dump_unitary: Option<PathBuf>,
    /// Human-readable summary instead of JSON.
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct VerifyArgs {
    netlist: PathBuf,
    povm: PathBuf,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct SimulateArgs {
    netlist: PathBuf,
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value_t = 0)]
    input_mode: usize,
    /// Draw this many detection events instead of reporting probabilities.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct TomoArgs {
    #[arg(long)]
    state: PathBuf,
    /// Use exact detector probabilities.
    #[arg(long, conflicts_with = "shots", required_unless_present = "shots")]
    exact: bool,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct PrepareArgs {
    #[arg(long)]
    target: PathBuf,
    /// Qubit-only scheme in which both branches yield the target.
    #[arg(long)]
    deterministic: bool,
    /// Write the preparation plan here.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    pretty: bool,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load<T>(
    path: &Path,
    parse: impl FnOnce(&str) -> naimark_core::Result<T>,
) -> Result<T, CliError> {
    parse(&read(path)?).map_err(|source| CliError::Input {
        path: path.to_owned(),
        source,
    })
}

fn load_state(path: &Path) -> Result<CMatrix, CliError> {
    Ok(load(path, StateFile::from_json)?.rho)
}

fn matrix_json(m: &CMatrix) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|k| [m[(r, k)].re, m[(r, k)].im])
                .collect()
        })
        .collect();
    json!(rows)
}

fn cmd_compile(args: &CompileArgs) -> Result<(), CliError> {
    let spec = load(&args.povm, PovmSpec::from_json)?;
    let options = CompileOptions {
        backend: args.backend.into(),
        effects_only: args.effects_only,
        waveplates: args.waveplates,
        seed: args.seed,
        ..CompileOptions::default()
    };
    let compiled = compiler::compile(&spec, &options)?;
    let net = &compiled.netlist;
    let res = net.resources();
    if let Some(path) = &args.output {
        write(path, &net.to_json_pretty())?;
    }
    if let Some(path) = &args.dump_unitary {
        let u = net.to_global_unitary()?;
        write(
            path,
            &json!({"dim": u.nrows(), "unitary": matrix_json(&u)}).to_string(),
        )?;
    }
    if args.pretty {
        println!(
            "bbs={} phase={} unitary={}",
            res.bbs, res.phase, res.unitary
        );
        println!(
            "detectors={} depth={} backend={:?} seed={}",
            res.detectors, res.depth, compiled.factors.backend, args.seed
        );
        for d in &compiled.diagnostics {
            eprintln!("note: {d}");
        }
    } else {
        let mut report = json!({
            "bbs": res.bbs,
            "phase": res.phase,
            "unitary": res.unitary,
            "detectors": res.detectors,
            "depth": res.depth,
            "backend": compiled.factors.backend,
            "seed": args.seed,
            "outcome_order": compiled.factors.outcome_order,
            "diagnostics": compiled.diagnostics,
        });
        if args.output.is_none() {
            report["netlist"] = serde_json::to_value(net).expect("netlist serializes");
        }
        println!("{report}");
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let net = load(&args.netlist, OpticalNetlist::from_json)?;
    let spec = load(&args.povm, PovmSpec::from_json)?;
    let report = simulator::verify(&net, &spec, args.trials, args.seed, args.tol)?;
    if args.pretty {
        println!(
            "max_prob_dev={:.3e} max_state_dev={:.3e} trials={} seed={}",
            report.max_prob_dev, report.max_state_dev, report.trials, report.seed
        );
        println!("{}", if report.pass { "PASS" } else { "FAIL" });
    } else {
        println!("{}", json::to_string(&report));
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let net = load(&args.netlist, OpticalNetlist::from_json)?;
    let input = SimInput {
        internal_state: load_state(&args.state)?,
        input_mode: args.input_mode,
    };
    let out = simulator::run(&net, &input)?;
    let probabilities = out.probabilities();
    let counts = match args.shots {
        Some(shots) => Some(simulator::sample(&net, &input, shots, args.seed)?),
        None => None,
    };
    if args.pretty {
        for (i, p) in probabilities.iter().enumerate() {
            match &counts {
                Some(c) => println!("outcome {i}: {p} ({} counts)", c[i]),
                None => println!("outcome {i}: {p}"),
            }
        }
    } else {
        let mut report = json!({
            "probabilities": probabilities,
            "post_states": out
                .outcomes
                .iter()
                .map(|o| o.post_internal.as_ref().map(matrix_json))
                .collect::<Vec<_>>(),
        });
        if let Some(c) = counts {
            report["counts"] = json!(c);
            report["shots"] = json!(args.shots);
            report["seed"] = json!(args.seed);
        }
        println!("{report}");
    }
    Ok(())
}

fn cmd_tomo(args: &TomoArgs) -> Result<(), CliError> {
    let state = load_state(&args.state)?;
    let shots = if args.exact { None } else { args.shots };
    let result = tomo_pipeline(&state, shots, args.seed)?;
    if let Some(path) = &args.output {
        write(path, &result.to_json())?;
    }
    if args.pretty {
        println!(
            "trace_distance={:.3e} shots={} seed={}",
            result.trace_distance_to_truth.unwrap_or(f64::NAN),
            shots.map_or("exact".to_string(), |s| s.to_string()),
            args.seed
        );
    } else {
        let mut v = serde_json::to_value(&result).expect("report serializes");
        v["seed"] = json!(args.seed);
        println!("{v}");
    }
    Ok(())
}

fn cmd_prepare(args: &PrepareArgs) -> Result<(), CliError> {
    let target = load_state(&args.target)?;
    let plan = prep_plan(&target, args.deterministic)?;
    let report = prep_run(&plan)?;
    if let Some(path) = &args.output {
        write(path, &plan.to_json())?;
    }
    if args.pretty {
        println!(
            "lambda0={} deterministic={}",
            plan.lambda0, plan.deterministic
        );
        for (i, b) in report.branches.iter().enumerate() {
            println!(
                "branch {i}: p={:.12} fidelity={} kept={}",
                b.probability,
                b.fidelity.map_or("-".to_string(), |f| format!("{f:.12}")),
                b.heralded
            );
        }
    } else {
        let mut v = json!({ "report": report });
        if args.output.is_none() {
            v["plan"] = serde_json::to_value(&plan).expect("plan serializes");
        }
        println!("{v}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Tomo(a) => cmd_tomo(a),
        Command::Prepare(a) => cmd_prepare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::VerificationFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
