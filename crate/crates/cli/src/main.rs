use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gke::analysis::minimally_focus;
use gke::elimination::{eliminate_all, EliminationOptions, DEFAULT_STEP_BUDGET};
use gke::export::{proof_stats, to_dot};
use gke::semantics::{check_sequent_with_budget, OracleVerdict, DEFAULT_MODEL_BUDGET};
use gke::{check_derivation, parse_proof_document, parse_sequent, print_proof_document, Derivation, ProofTree};

const OK: u8 = 0;
const REJECTED: u8 = 1;
const PARSE_ERROR: u8 = 2;
const INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "gke", version, about = "Proof checker and cut elimination for cyclic GKe proofs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a proof document.
    Check { file: PathBuf },
    /// Eliminate all cuts and write the cut-free proof.
    Eliminate {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Print phase and step lines to stderr.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        max_rounds: Option<usize>,
        /// Write intermediate proofs into this directory.
        #[arg(long)]
        dump_intermediate: Option<PathBuf>,
    },
    /// Clusters, depths and cut classification as JSON.
    Stats { file: PathBuf },
    /// Graphviz rendering of the proof with back edges.
    Dot {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Rewrite into minimally focused form.
    Normalize {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Search small Kripke models for a countermodel to a sequent.
    Countermodel {
        sequent: String,
        #[arg(long, default_value_t = 3)]
        max_states: usize,
    },
}

struct Failure(u8, String);

type Outcome = Result<u8, Failure>;

fn step_budget(default: u64) -> Result<u64, Failure> {
    match std::env::var("GKE_STEP_BUDGET") {
        Ok(v) => v.trim().parse().map_err(|_| Failure(PARSE_ERROR, format!("GKE_STEP_BUDGET: not a number: {v}"))),
        Err(_) => Ok(default),
    }
}

fn load(path: &Path) -> Result<ProofTree, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(PARSE_ERROR, format!("{}: {e}", path.display())))?;
    parse_proof_document(&text).map_err(|e| Failure(PARSE_ERROR, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure(INTERNAL, format!("{}: {e}", path.display())))
}

fn load_accepted(path: &Path) -> Result<(ProofTree, Derivation), Failure> {
    let tree = load(path)?;
    let d = Derivation::from_tree(&tree);
    let report = check_derivation(&d);
    if !report.accepted {
        let lines: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(Failure(REJECTED, format!("rejected:\n{}", lines.join("\n"))));
    }
    Ok((tree, d))
}

fn run(cmd: Cmd) -> Outcome {
    match cmd {
        Cmd::Check { file } => {
            let tree = load(&file)?;
            let report = check_derivation(&Derivation::from_tree(&tree));
            let verdict = if report.accepted { "accepted" } else { "rejected" };
            let mut out = std::io::stdout().lock();
            // A closed pipe is not an error for a checker.
            let _ = writeln!(out, "{verdict}: {} ({} nodes)", tree.sequent, report.nodes);
            for v in &report.violations {
                let _ = writeln!(out, "  {v}");
            }
            Ok(if report.accepted { OK } else { REJECTED })
        }
        Cmd::Eliminate { file, output, trace, max_rounds, dump_intermediate } => {
            let (tree, _) = load_accepted(&file)?;
            let opts = EliminationOptions {
                max_rounds,
                step_budget: step_budget(DEFAULT_STEP_BUDGET)?,
                trace,
                keep_intermediate: dump_intermediate.is_some(),
            };
            let result = eliminate_all(&tree, &opts);
            let report = match result {
                Ok(r) => r,
                Err(e) => {
                    let code = if e.is_internal() { INTERNAL } else { REJECTED };
                    return Err(Failure(code, e.to_string()));
                }
            };
            for line in &report.trace {
                eprintln!("{line}");
            }
            if let Some(dir) = dump_intermediate {
                std::fs::create_dir_all(&dir).map_err(|e| Failure(INTERNAL, format!("{}: {e}", dir.display())))?;
                for (i, (label, t)) in report.intermediates.iter().enumerate() {
                    write(&dir.join(format!("{i:03}-{label}.gke")), &print_proof_document(t))?;
                }
            }
            if !check_derivation(&Derivation::from_tree(&report.final_proof)).accepted {
                return Err(Failure(INTERNAL, "result rejected by the checker".into()));
            }
            write(&output, &print_proof_document(&report.final_proof))?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(OK)
        }
        Cmd::Stats { file } => {
            let tree = load(&file)?;
            let stats = proof_stats(&Derivation::from_tree(&tree));
            println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            Ok(if stats.accepted { OK } else { REJECTED })
        }
        Cmd::Dot { file, output } => {
            let (_, d) = load_accepted(&file)?;
            write(&output, &to_dot(&d))?;
            Ok(OK)
        }
        Cmd::Normalize { file, output } => {
            let (_, d) = load_accepted(&file)?;
            let normal = minimally_focus(&d);
            if !check_derivation(&Derivation::from_tree(&normal)).accepted {
                return Err(Failure(INTERNAL, "normal form rejected by the checker".into()));
            }
            write(&output, &print_proof_document(&normal))?;
            Ok(OK)
        }
        Cmd::Countermodel { sequent, max_states } => {
            let s = parse_sequent(&sequent).map_err(|e| Failure(PARSE_ERROR, format!("sequent: {e}")))?;
            let gamma: Vec<_> = s.left_formulas().into_iter().collect();
            let delta: Vec<_> = s.right.iter().cloned().collect();
            let budget = step_budget(DEFAULT_MODEL_BUDGET)?;
            match check_sequent_with_budget(&gamma, &delta, max_states, budget) {
                Ok(OracleVerdict::ValidUpTo(n)) => {
                    println!("valid up to {n}");
                    Ok(OK)
                }
                Ok(OracleVerdict::Countermodel { model, state }) => {
                    println!("countermodel at s{state}");
                    print!("{model}");
                    Ok(REJECTED)
                }
                Err(e @ gke::semantics::SemanticsError::BadBound(_)) => Err(Failure(PARSE_ERROR, e.to_string())),
                Err(e) => Err(Failure(INTERNAL, e.to_string())),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Deep proofs recurse; give the worker a large stack.
    let worker = std::thread::Builder::new().stack_size(512 << 20).spawn(move || run(cli.cmd));
    let outcome = worker.expect("spawn worker").join().unwrap_or_else(|_| Err(Failure(INTERNAL, "internal panic".into())));
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("gke: {msg}");
            ExitCode::from(code)
        }
    }
}
