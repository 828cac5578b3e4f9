//! `triqc`: triorthogonal code checks and protocol simulation.
//!
//! Exit codes: 0 success, 1 negative verdict, 2 usage or parse error, 3 abort.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;
use triqc::codes::{
    build_css, check_transversal_ccz, check_triorthogonal, construct_rm15, format_code, load_catalog, load_code,
    parse_code, CodeError, DEFAULT_WMAX,
};
use triqc::protocol::{parse_adversary, parse_circuit, run_protocol, Circuit, ProtocolConfig, ProtocolError, RunOutcome};
use triqc::refsim::SingleQubitState;
use triqc::{CssCode, Distance};

const CATALOG_ENV: &str = "TRIQC_CATALOG";

#[derive(Parser)]
#[command(name = "triqc", version, about = "Triorthogonal codes and multi-party protocol simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect and validate triorthogonal code files.
    #[command(subcommand)]
    Code(CodeCommand),
    /// Run the protocol simulator.
    #[command(subcommand)]
    Sim(SimCommand),
}

#[derive(Subcommand)]
enum CodeCommand {
    /// Check the triorthogonality conditions of a code file.
    Verify { path: PathBuf },
    /// Print [[n,k,d]] and the transversal CCZ verdict.
    Info {
        path: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WMAX)]
        wmax: usize,
    },
    /// Emit the 15-qubit Reed-Muller generator.
    Rm15 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize every `.code` file in the catalog directory.
    List {
        #[arg(long, env = CATALOG_ENV, default_value = "catalog")]
        dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WMAX)]
        wmax: usize,
    },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Execute one seeded protocol run.
    Run {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute many seeded runs and aggregate evasion and abort rates.
    Sweep {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        runs: u64,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        r_values: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct SimArgs {
    /// `rm15`, a code file, or the name of a catalog entry.
    #[arg(long, default_value = "rm15")]
    code: String,
    /// Circuit file; the identity circuit with `|0>` inputs when omitted.
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[arg(long, default_value = "honest")]
    adversary: String,
    #[arg(long, default_value_t = 1)]
    t: usize,
    /// First seed; sweeps use `seed + i` for run `i`.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_WMAX)]
    wmax: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, env = CATALOG_ENV, default_value = "catalog")]
    catalog: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Code(c) => code_command(c),
        Command::Sim(SimCommand::Run { sim, r, out }) => sim_run(&sim, r, out.as_deref()),
        Command::Sim(SimCommand::Sweep { sim, runs, r_values, out }) => sim_sweep(&sim, runs, &r_values, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn emit(body: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, body).map_err(|source| CliError::Io { path: path.into(), source }),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn describe(code: &CssCode, d: Distance) -> String {
    match d {
        Distance::Exact(d) => format!("[[{},{},{d}]]", code.n, code.k),
        Distance::AtLeast(b) => format!("[[{},{},?]] d > {}", code.n, code.k, b - 1),
    }
}

fn code_command(cmd: CodeCommand) -> Result<u8, CliError> {
    match cmd {
        CodeCommand::Verify { path } => {
            let g = parse_code(&read(&path)?)?;
            match check_triorthogonal(&g) {
                Ok(()) => {
                    println!("triorthogonal");
                    Ok(0)
                }
                Err(w) => {
                    println!("not triorthogonal: witness {w}");
                    Ok(1)
                }
            }
        }
        CodeCommand::Info { path, wmax } => {
            let code = build_css(&load_code(&path)?)?;
            let d = triqc::codes::min_distance(&code, wmax)?;
            let ccz = if code.k == 1 { check_transversal_ccz(&code)?.to_string() } else { "n/a (k > 1)".into() };
            println!("{} ccz: {ccz}", describe(&code, d));
            Ok(0)
        }
        CodeCommand::Rm15 { out } => {
            emit(&format_code(construct_rm15().matrix()), out.as_deref())?;
            Ok(0)
        }
        CodeCommand::List { dir, wmax } => {
            let mut any_bad = false;
            for entry in load_catalog(&dir)? {
                let name = entry.path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                match entry.code {
                    Ok(code) => {
                        let d = triqc::codes::min_distance(&code, wmax)?;
                        println!("{name}: {}", describe(&code, d));
                    }
                    Err(e) => {
                        any_bad = true;
                        println!("{name}: invalid: {e}");
                    }
                }
            }
            Ok(if any_bad { 1 } else { 0 })
        }
    }
}

/// Resolves `--code` to a code with a certified distance.
fn resolve_code(sim: &SimArgs) -> Result<(String, Arc<CssCode>), CliError> {
    let g = if sim.code == "rm15" {
        construct_rm15()
    } else {
        let direct = PathBuf::from(&sim.code);
        let path = if direct.exists() { direct } else { sim.catalog.join(format!("{}.code", sim.code)) };
        if !path.exists() {
            return Err(CliError::Usage(format!("no code file or catalog entry named `{}`", sim.code)));
        }
        load_code(&path)?
    };
    let code = build_css(&g)?.with_distance(sim.wmax)?;
    if code.d.is_none() {
        return Err(CliError::Usage(format!("distance of `{}` exceeds --wmax {}", sim.code, sim.wmax)));
    }
    Ok((code.to_string(), Arc::new(code)))
}

struct Prepared {
    label: String,
    code: Arc<CssCode>,
    circuit: Circuit,
    inputs: Vec<SingleQubitState>,
}

fn prepare(sim: &SimArgs) -> Result<Prepared, CliError> {
    let (label, code) = resolve_code(sim)?;
    let n = code.n;
    let (circuit, inputs) = match &sim.circuit {
        Some(path) => {
            let file = parse_circuit(&read(path)?, n)?;
            (file.circuit, file.inputs)
        }
        None => (Circuit::identity(n), vec![SingleQubitState::Zero; n]),
    };
    parse_adversary(&sim.adversary, n)?;
    Ok(Prepared { label, code, circuit, inputs })
}

fn execute(p: &Prepared, sim: &SimArgs, r: usize, seed: u64) -> Result<RunOutcome, CliError> {
    let config = ProtocolConfig::new(p.code.clone(), sim.t, r, seed)?;
    let mut adversary = parse_adversary(&sim.adversary, p.code.n)?;
    Ok(run_protocol(&config, &p.inputs, &p.circuit, adversary.as_mut())?)
}

fn list(set: &BTreeSet<usize>) -> String {
    let items: Vec<String> = set.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

fn sim_run(sim: &SimArgs, r: usize, out: Option<&Path>) -> Result<u8, CliError> {
    let p = prepare(sim)?;
    let started = Instant::now();
    let outcome = execute(&p, sim, r, sim.seed)?;
    let t = &outcome.transcript;
    let circuit = sim.circuit.as_ref().map_or("identity".to_string(), |c| c.display().to_string());
    let verdict = if t.abort { "abort" } else { "success" };
    let body = match sim.format {
        Format::Json => {
            let report = json!({
                "config": {
                    "code": p.label, "circuit": circuit, "adversary": sim.adversary,
                    "t": sim.t, "r": r, "seed": sim.seed,
                },
                "outcome": verdict,
                "outputs": outcome.outputs,
                "accused": t.accused(),
                "publicly_accused": t.publicly_accused(),
                "kappa": t.kappa,
                "qubit_peak_per_node": t.qubit_peak_per_node,
                "transcript": t,
            });
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "code: {}", p.label);
            let _ = writeln!(s, "circuit: {circuit}");
            let _ = writeln!(s, "adversary: {}", sim.adversary);
            let _ = writeln!(s, "t: {}  r: {r}  seed: {}", sim.t, sim.seed);
            let _ = writeln!(s, "outcome: {verdict}");
            let _ = writeln!(s, "kappa: {}", t.kappa);
            let _ = writeln!(s, "qubit_peak_per_node: {}", t.qubit_peak_per_node);
            let _ = writeln!(s, "ancilla_peak_in_use: {}", t.ancilla_peak_in_use);
            let _ = writeln!(s, "accused: {}", list(&t.accused()));
            let _ = writeln!(s, "publicly_accused: {}", list(&t.publicly_accused()));
            for f in &t.failures {
                let _ = writeln!(s, "failure: {} wire {}: {}", f.phase, f.wire, f.reason);
            }
            for o in &outcome.outputs {
                let status = match o.status {
                    triqc::protocol::OutputStatus::Ok => "ok",
                    triqc::protocol::OutputStatus::Failed => "failed",
                };
                let _ = writeln!(
                    s,
                    "output {}: fidelity {:.6} residual {} status {status}",
                    o.wire, o.fidelity, o.residual
                );
            }
            s
        }
    };
    emit(&body, out)?;
    eprintln!("wall-time: {} ms", started.elapsed().as_millis());
    Ok(if t.abort { 3 } else { 0 })
}

#[derive(Default, Clone, Copy)]
struct Tally {
    evaded: u64,
    aborted: u64,
}

fn sim_sweep(sim: &SimArgs, runs: u64, r_values: &[usize], out: Option<&Path>) -> Result<u8, CliError> {
    if r_values.is_empty() {
        return Err(CliError::Usage("--r-values must list at least one value".into()));
    }
    let p = prepare(sim)?;
    let started = Instant::now();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(runs as usize).max(1);
    let mut rows = Vec::new();
    for &r in r_values {
        // Each worker takes a strided share of the seeds; tallies are order-free sums.
        let partial: Vec<Result<Tally, CliError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    let p = &p;
                    scope.spawn(move || {
                        let mut tally = Tally::default();
                        for i in (w as u64..runs).step_by(threads) {
                            let outcome = execute(p, sim, r, sim.seed.wrapping_add(i))?;
                            tally.evaded += u64::from(outcome.transcript.evaded());
                            tally.aborted += u64::from(outcome.transcript.abort);
                        }
                        Ok(tally)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
        });
        let mut total = Tally::default();
        for t in partial {
            let t = t?;
            total.evaded += t.evaded;
            total.aborted += t.aborted;
        }
        rows.push((r, total));
    }
    let rate = |k: u64| k as f64 / runs as f64;
    let body = match sim.format {
        Format::Json => {
            let per_r: Vec<_> = rows
                .iter()
                .map(|(r, t)| json!({"r": r, "runs": runs, "evasion_rate": rate(t.evaded), "abort_rate": rate(t.aborted)}))
                .collect();
            let report = json!({
                "config": {"code": p.label, "adversary": sim.adversary, "t": sim.t, "seed": sim.seed, "runs": runs},
                "sweep": per_r,
            });
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
        }
        Format::Text => {
            let mut s = format!(
                "code: {}\nadversary: {}\nt: {}  seed: {}  runs: {runs}\n{:>4} {:>13} {:>11}\n",
                p.label, sim.adversary, sim.t, sim.seed, "r", "evasion_rate", "abort_rate"
            );
            for (r, t) in &rows {
                let _ = writeln!(s, "{r:>4} {:>13.4} {:>11.4}", rate(t.evaded), rate(t.aborted));
            }
            s
        }
    };
    emit(&body, out)?;
    eprintln!("wall-time: {} ms", started.elapsed().as_millis());
    Ok(0)
}
