use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pqe::engine::{self, sat, Options, Status};
use pqe::formula::{Clause, QuantFormula};
use pqe::oracle;
use pqe::pqeio;
use pqe::propgen::{
    build_fifo, propgen, Circuit, Expectation, ExternalChecker, PropgenOptions, TargetOrder,
};

const EXIT_OK: u8 = 0;
const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

/// Largest |Y| for which --verify enumerates Y rows.
const VERIFY_MAX_Y: usize = 20;

#[derive(Parser)]
#[command(
    name = "pqe",
    version,
    about = "Partial quantifier elimination for CNF"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Take F1 out of ∃X[F1 ∧ F2] given in PQDIMACS.
    Solve(SolveArgs),
    /// Decide satisfiability of a DIMACS CNF by taking out the clauses falsified by all-false.
    Sat {
        file: PathBuf,
        #[arg(long, value_name = "SECS")]
        time_limit: Option<f64>,
    },
    /// Generate local properties of an AIGER (ASCII) circuit and flag bad invariants.
    Propgen(PropgenArgs),
    /// Write a FIFO buffer circuit as AIGER ASCII.
    Fifo(FifoArgs),
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Check the solution by enumerating Y (refused when |Y| > 20).
    #[arg(long)]
    verify: bool,
    /// Drop solution clauses implied by F2.
    #[arg(long)]
    noise_filter: bool,
    #[arg(long, value_name = "SECS")]
    time_limit: Option<f64>,
    /// Move every clause to F1 (plain quantifier elimination).
    #[arg(long)]
    qe: bool,
    /// Emit a `c stats` line.
    #[arg(long)]
    stats: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    File,
    Random,
}

#[derive(Args)]
struct PropgenArgs {
    model: PathBuf,
    #[arg(long, default_value_t = 3)]
    frames: usize,
    #[arg(long)]
    max_targets: Option<usize>,
    #[arg(long, value_name = "SECS", default_value_t = 10.0)]
    per_target_timeout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Order::File)]
    order: Order,
    /// CNF over latch numbering (latch i is variable i+1) the design must satisfy.
    #[arg(long, value_name = "CNF")]
    spec: Option<PathBuf>,
    /// States expected reachable: `fifo-data` or a CNF file over latch numbering.
    #[arg(long, value_name = "BUILTIN|CNF")]
    expect: Option<String>,
    /// Command template with {property} and {aag}, used when BFS is out of reach.
    #[arg(long, value_name = "COMMAND")]
    external_mc: Option<String>,
    /// Keep clauses implied by F_k without the target.
    #[arg(long)]
    keep_noise: bool,
    /// Write the per-candidate table here.
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
    /// Include wall-clock times in the report.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct FifoArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    val: u64,
    #[arg(long)]
    buggy: bool,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

struct Failure(u8, String);

type CmdResult = Result<u8, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn secs(s: Option<f64>) -> Result<Option<Duration>, Failure> {
    match s {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(usage(format!("bad time limit {x}"))),
        Some(x) => Ok(Some(Duration::from_secs_f64(x))),
        None => Ok(None),
    }
}

fn solve(a: SolveArgs) -> CmdResult {
    let text = read(&a.file)?;
    let doc =
        pqeio::parse_pqdimacs(&text).map_err(|e| usage(format!("{}: {e}", a.file.display())))?;
    let mut f = doc.to_formula();
    if a.qe {
        let mut all = f.f1.clone();
        all.extend(f.f2.iter().cloned());
        f = QuantFormula::new(f.nvars(), f.free_vars(), all, Vec::new())
            .expect("same variables as the parsed formula");
    }
    let opts = Options {
        time_limit: secs(a.time_limit)?,
        ..Options::default()
    };
    let r = engine::run(&f, &opts);
    let mut sol = r.solution;
    if a.noise_filter && sol.status == Status::Solved {
        sol.clauses.retain(|q| !sat::implies(f.nvars(), &f.f2, q));
    }
    let text = pqeio::write_solution(&sol, f.nvars(), a.stats.then_some(&r.stats));
    emit(a.out.as_deref(), &text)?;
    if sol.status == Status::TimedOut {
        eprintln!("time limit reached");
        return Ok(EXIT_TIMEOUT);
    }
    if a.verify {
        let ny = f.free_vars().len();
        if ny > VERIFY_MAX_Y {
            eprintln!("warning: verification refused, |Y| = {ny} > {VERIFY_MAX_Y}");
            return Ok(EXIT_OK);
        }
        match oracle::verify_solution(&f, &sol) {
            Ok(true) => eprintln!("verified"),
            Ok(false) => {
                eprintln!("verification failed");
                return Ok(EXIT_VERIFY);
            }
            Err(e) => {
                eprintln!("warning: verification refused: {e}");
            }
        }
    }
    Ok(EXIT_OK)
}

fn sat_cmd(file: &Path, limit: Option<f64>) -> CmdResult {
    let text = read(file)?;
    let cnf = pqeio::parse_dimacs(&text).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let opts = Options {
        time_limit: secs(limit)?,
        ..Options::default()
    };
    match engine::sat_via_pqe(cnf.nvars, &cnf.clauses, &opts) {
        Some(true) => println!("s SATISFIABLE"),
        Some(false) => println!("s UNSATISFIABLE"),
        None => {
            println!("s UNKNOWN");
            return Ok(EXIT_TIMEOUT);
        }
    }
    Ok(EXIT_OK)
}

fn read_cnf(path: &Path) -> Result<Vec<Clause>, Failure> {
    let text = read(path)?;
    pqeio::parse_dimacs(&text)
        .map(|c| c.clauses)
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn propgen_cmd(a: PropgenArgs) -> CmdResult {
    if a.frames == 0 {
        return Err(usage("--frames must be at least 1"));
    }
    let text = read(&a.model)?;
    let c = Circuit::from_aag(&text).map_err(|e| usage(format!("{}: {e}", a.model.display())))?;
    let spec = a.spec.as_deref().map(read_cnf).transpose()?;
    let expect = match a.expect.as_deref() {
        None => None,
        Some(s) => match Expectation::parse_builtin(s) {
            Some(e) => Some(e),
            None => Some(Expectation::Cnf(read_cnf(Path::new(s))?)),
        },
    };
    let external = a
        .external_mc
        .map(|template| ExternalChecker { template })
        .or_else(ExternalChecker::from_env);
    let opts = PropgenOptions {
        frames: a.frames,
        max_targets: a.max_targets,
        per_target_timeout: secs(Some(a.per_target_timeout))?.unwrap(),
        order: match a.order {
            Order::File => TargetOrder::File,
            Order::Random => TargetOrder::Random(a.seed),
        },
        noise_filter: !a.keep_noise,
    };
    let report = propgen(
        &c,
        &opts,
        expect.as_ref(),
        spec.as_deref(),
        external.as_ref(),
    );
    print!("{}", report.to_text(a.timings));
    if let Some(t) = &a.table {
        emit(Some(t), &report.to_table())?;
    }
    Ok(EXIT_OK)
}

fn fifo_cmd(a: FifoArgs) -> CmdResult {
    let c = build_fifo(a.n, a.p, a.val, a.buggy).map_err(|e| usage(e.to_string()))?;
    emit(a.out.as_deref(), &c.to_aag())?;
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let r = match cli.cmd {
        Cmd::Solve(a) => solve(a),
        Cmd::Sat { file, time_limit } => sat_cmd(&file, time_limit),
        Cmd::Propgen(a) => propgen_cmd(a),
        Cmd::Fifo(a) => fifo_cmd(a),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
