use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use log::info;

use quic3::engine::{validate_verdict, Engine, EventLog, Verdict};
use quic3::frontend::chc::chc_to_problem;
use quic3::frontend::config::{Backend, RunConfig};
use quic3::frontend::output::{emit_result, invariant_smt2, Format};
use quic3::frontend::SafetyProblem;
use quic3::qgen::QGenMode;

const EXIT_SAFE: u8 = 0;
const EXIT_CEX: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_INPUT: u8 = 3;

/// Safety checker for transition systems over integers and arrays.
///
/// Exit status: 0 safe, 1 counterexample, 2 resource limit or unknown,
/// 3 input or configuration error.
#[derive(Parser, Debug)]
#[command(name = "quic3", version)]
struct Args {
    /// Problem file (`.tsys` transition system, or `.smt2` Horn clauses).
    file: PathBuf,
    /// Maximum number of frames before giving up.
    #[arg(long, default_value_t = 32)]
    max_depth: usize,
    /// Quantifier generalization: off, simple, arith or both.
    #[arg(long, default_value = "off")]
    qgen: QGenMode,
    /// external[:PATH [FLAGS..]] or enumeration[:LO..HI]. Without a path the
    /// solver comes from QUIC3_SOLVER or `z3` on PATH.
    #[arg(long, default_value = "external")]
    backend: Backend,
    /// Per-query solver timeout in seconds.
    #[arg(long, default_value_t = 10)]
    query_timeout: u64,
    /// Overall time budget in seconds.
    #[arg(long)]
    timeout: Option<u64>,
    /// Bound on ground instances per quantified lemma in push and validation.
    #[arg(long, default_value_t = 64)]
    max_instances: usize,
    /// Re-enqueue blocked proof obligations at the next frame.
    #[arg(long)]
    push_pobs: bool,
    /// Print a JSON object instead of text.
    #[arg(long)]
    json: bool,
    /// Treat the input as Horn clauses regardless of its extension.
    #[arg(long)]
    chc: bool,
    /// Write the invariant as SMT-LIB2 assertions to this file (when safe).
    #[arg(long)]
    emit_invariant: Option<PathBuf>,
    /// Check the verdict independently before reporting it.
    #[arg(long)]
    validate: bool,
    /// Write one JSON object per rule application to this file.
    #[arg(long)]
    event_log: Option<PathBuf>,
}

fn load(path: &Path, chc: bool) -> Result<SafetyProblem, String> {
    let src = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if chc || path.extension().is_some_and(|x| x == "smt2") {
        chc_to_problem(&src).map_err(|e| format!("{}: {e}", path.display()))
    } else {
        SafetyProblem::parse(&src).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn run(args: Args) -> Result<u8, (u8, String)> {
    let input = |e: String| (EXIT_INPUT, e);
    let cfg = RunConfig {
        max_depth: args.max_depth,
        query_timeout: Duration::from_secs(args.query_timeout),
        qgen: args.qgen,
        max_instances: args.max_instances,
        push_pobs: args.push_pobs,
        backend: args.backend,
    };
    cfg.validate().map_err(|e| input(e.to_string()))?;
    let p = load(&args.file, args.chc).map_err(input)?;
    let mut solver = cfg.make_solver().map_err(|e| input(e.to_string()))?;
    let log = match &args.event_log {
        Some(path) => {
            let f = File::create(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
            EventLog::with_sink(Box::new(BufWriter::new(f)))
        }
        None => EventLog::default(),
    };
    let mut ecfg = cfg.engine_config();
    ecfg.timeout = args.timeout.map(Duration::from_secs);
    let outcome = Engine::new(&p, ecfg, solver.as_mut())
        .with_event_log(log)
        .run()
        .map_err(|e| (EXIT_UNKNOWN, e.to_string()))?;
    info!("audit: {:?}", outcome.audit);

    let mut code = match outcome.verdict {
        Verdict::Safe { .. } => EXIT_SAFE,
        Verdict::Cex { .. } => EXIT_CEX,
        Verdict::ResourceLimit { .. } => EXIT_UNKNOWN,
    };
    let format = if args.json { Format::Json } else { Format::Human };
    print!("{}", emit_result(&p, &outcome.verdict, &outcome.stats, format));
    if args.json {
        println!();
    }
    if args.validate {
        let v = validate_verdict(&p, &outcome.verdict, solver.as_mut(), cfg.max_instances)
            .map_err(|e| (EXIT_UNKNOWN, e.to_string()))?;
        for (name, status) in &v.checks {
            eprintln!("validate {name}: {status:?}");
        }
        if !v.certified() && !v.checks.is_empty() {
            eprintln!("verdict could not be certified");
            code = EXIT_UNKNOWN;
        }
    }
    if let (Some(path), Verdict::Safe { invariant, .. }) = (&args.emit_invariant, &outcome.verdict) {
        fs::write(path, invariant_smt2(&p, invariant)).map_err(|e| input(format!("{}: {e}", path.display())))?;
    }
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_SAFE });
        }
    };
    match run(args) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
