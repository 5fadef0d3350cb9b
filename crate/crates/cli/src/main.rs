//! `cpnunfold`: reduce and unfold integer colored Petri nets.
//!
//! Exit codes: 0 success, 1 input error, 2 size refusal, 3 verification
//! failure. Errors go to stderr as `error[kind]: message`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use cpnunfold_core::approx::{self, restrict, subsumes};
use cpnunfold_core::io::{pnml, ptpnml, text};
use cpnunfold_core::net::ColoredNet;
use cpnunfold_core::oracle::{bisimilar, reachable_isomorphic, IsoMode};
use cpnunfold_core::par::Exec;
use cpnunfold_core::pipeline::{self, PipelineOptions};
use cpnunfold_core::quotient::{self, quotient};
use cpnunfold_core::semantics::{explore, DEFAULT_STATE_LIMIT};
use cpnunfold_core::unfold::{colored_stats, unfold_with, UnfoldOptions};
use cpnunfold_core::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "cpnunfold", version, about = "Reduce and unfold integer colored Petri nets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Pnml,
    Net,
}

#[derive(Subcommand)]
enum Command {
    /// Unfold a colored net into a P/T net.
    Unfold {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Skip color quotienting.
        #[arg(long)]
        no_quotient: bool,
        /// Skip color approximation.
        #[arg(long)]
        no_approx: bool,
        /// Drop unmarked places without arcs.
        #[arg(long)]
        prune_orphans: bool,
        /// Budget for both analyses, in milliseconds.
        #[arg(long)]
        budget_ms: Option<u64>,
        #[arg(long, default_value_t = 5000)]
        quotient_budget_ms: u64,
        #[arg(long, default_value_t = 10000)]
        approx_budget_ms: u64,
        /// Write a JSON report of sizes and timings.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Output format; guessed from the output extension when omitted.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Run every phase on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Print sizes of a colored net and of its reductions as JSON.
    Stats { input: PathBuf },
    /// Check unfolding, quotienting and approximation against the state space.
    Verify {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STATE_LIMIT)]
        state_limit: usize,
    },
}

enum Failure {
    Core(Error),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::ArityMismatch { .. } => "arity",
        Error::UnboundVariable(_) => "unbound-variable",
        Error::InvalidNet(_) => "invalid-net",
        Error::NotEnabled { .. } => "not-enabled",
        Error::Precondition(_) => "precondition",
        Error::TooLarge { .. } => "too-large",
        Error::Syntax { .. } => "syntax",
        Error::Pnml { .. } => "pnml",
        Error::Xml(_) => "xml",
        Error::Io(_) => "io",
    }
}

fn load(path: &Path) -> Result<ColoredNet, Error> {
    let content = fs::read_to_string(path)?;
    let xml = matches!(path.extension().and_then(|e| e.to_str()), Some("pnml" | "xml"));
    if !xml {
        return text::parse(&content);
    }
    if pnml::is_pt_document(&content)? {
        return Ok(ptpnml::parse_pt_pnml(&content)?.to_colored());
    }
    pnml::parse_colored_pnml(&content)
}

fn net_id(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("net").to_string()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Unfold {
            input,
            output,
            no_quotient,
            no_approx,
            prune_orphans,
            budget_ms,
            quotient_budget_ms,
            approx_budget_ms,
            stats,
            format,
            sequential,
        } => {
            let net = load(&input)?;
            let opts = PipelineOptions {
                quotient: !no_quotient,
                approximate: !no_approx,
                quotient_budget: Duration::from_millis(budget_ms.unwrap_or(quotient_budget_ms)),
                approx_budget: Duration::from_millis(budget_ms.unwrap_or(approx_budget_ms)),
                prune_orphans,
                exec: if sequential { Exec::Sequential } else { Exec::Parallel },
                ..Default::default()
            };
            let out = pipeline::run(&net, &opts)?;
            let format = format.unwrap_or(match output.extension().and_then(|e| e.to_str()) {
                Some("net") => Format::Net,
                _ => Format::Pnml,
            });
            let body = match format {
                Format::Pnml => ptpnml::write_pt_pnml(&out.net, &net_id(&input)),
                Format::Net => text::write(&out.net.to_colored()),
            };
            fs::write(&output, body).map_err(Error::from)?;
            if let Some(path) = stats {
                let report = serde_json::to_string_pretty(&out.report).expect("serializable report");
                fs::write(path, report + "\n").map_err(Error::from)?;
            }
            Ok(())
        }
        Command::Stats { input } => {
            let net = load(&input)?;
            let partition = quotient::stabilize(&net, quotient::DEFAULT_BUDGET);
            let a = approx::fixed_point(&net, approx::DEFAULT_BUDGET);
            let report = json!({
                "colored": colored_stats(&net),
                "partition": {
                    "classes": partition.class_count(),
                    "places": partition.to_json(&net),
                },
                "approximation": {
                    "colors": a.color_count(),
                    "places": a.to_json(&net),
                },
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            Ok(())
        }
        Command::Verify { input, state_limit } => verify(&load(&input)?, state_limit),
    }
}

fn verify(net: &ColoredNet, limit: usize) -> Result<(), Failure> {
    let exec = Exec::default();
    let explore_full = |n: &ColoredNet, what: &str| {
        let lts = explore(n, limit, exec)?;
        if lts.truncated {
            return Err(Failure::Core(Error::TooLarge {
                what: format!("state space of {what}"),
                estimate: limit as u128 + 1,
                cap: limit as u128,
            }));
        }
        Ok(lts)
    };
    let base = explore_full(net, "the colored net")?;
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(name.to_string());
        }
    };

    let unfolded = unfold_with(net, &UnfoldOptions::default())?.to_colored();
    let lts = explore_full(&unfolded, "the unfolded net")?;
    check("unfolding is bisimilar", bisimilar(&base, &lts, 0, 0));

    let partition = quotient::stabilize(net, quotient::DEFAULT_BUDGET);
    let q = quotient(net, &partition)?;
    let lts = explore_full(&q.net, "the quotient net")?;
    check("quotient is bisimilar", bisimilar(&base, &lts, 0, 0));

    let a = approx::fixed_point(net, approx::DEFAULT_BUDGET);
    check(
        "approximation covers reachable markings",
        base.states.iter().all(|m| subsumes(&a, m)),
    );
    let lts = explore_full(&restrict(net, &a)?, "the restricted net")?;
    check(
        "restriction keeps the reachable fragment",
        reachable_isomorphic(&base, &lts, IsoMode::SameStates),
    );

    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(failed.join(", ")))
    }
}

fn configure_threads() {
    let Ok(v) = std::env::var("CPNUNFOLD_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("warning: ignoring CPNUNFOLD_THREADS={v}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error[{}]: {e}", kind(&e));
            ExitCode::from(match e {
                Error::TooLarge { .. } => 2,
                _ => 1,
            })
        }
        Err(Failure::Verification(what)) => {
            eprintln!("error[verification]: failed checks: {what}");
            ExitCode::from(3)
        }
    }
}
