//! Learns a summary graph from a manifest of interventional datasets.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use causal_sat::pipeline::{run_pipeline, Manifest, RunConfig, Strategy, TestKind};
use causal_sat::Error;
use clap::{ArgAction, Parser};

#[derive(Parser, Debug)]
#[command(
    name = "causal-sat",
    version,
    about = "Learn the shared causal structure behind overlapping interventional datasets"
)]
struct Args {
    /// JSON list of {csv_path, intervention_targets, value_kind}.
    #[arg(long)]
    manifest: PathBuf,
    /// Significance level of the independence tests.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Largest conditioning set.
    #[arg(long, default_value_t = 5)]
    max_k: usize,
    /// Longest candidate path in edges, or "none" for no bound.
    #[arg(long, default_value = "3", value_parser = parse_mpl)]
    mpl: PathLimit,
    /// Encode ancestry over unbounded paths.
    #[arg(long)]
    full_ancestry: bool,
    /// fisher_z or g2.
    #[arg(long, default_value = "fisher_z", value_parser = parse_test)]
    test: TestKind,
    /// mmr or none.
    #[arg(long, default_value = "mmr", value_parser = parse_strategy)]
    strategy: Strategy,
    /// Run the Possible-D-Sep stage.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pds: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Summary graph as JSON; printed to stdout when omitted.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Summary graph as Graphviz DOT.
    #[arg(long)]
    out_dot: Option<PathBuf>,
    /// Diagnostics sidecar; defaults to `<out-json stem>.diagnostics.json`.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

/// Bound on candidate path length.
#[derive(Clone, Copy, Debug)]
struct PathLimit(Option<usize>);

fn parse_mpl(s: &str) -> Result<PathLimit, String> {
    match s {
        "none" | "unbounded" => Ok(PathLimit(None)),
        _ => match s.parse::<usize>() {
            Ok(0) => Err("mpl must be at least 1".into()),
            Ok(n) => Ok(PathLimit(Some(n))),
            Err(_) => Err(format!("'{s}' is neither a path length nor \"none\"")),
        },
    }
}

fn parse_test(s: &str) -> Result<TestKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "input" => 3,
        "degenerate" => 4,
        "precondition" => 5,
        "io" => 6,
        _ => 7,
    }
}

fn sidecar(out_json: &Path) -> PathBuf {
    let stem = out_json
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("summary");
    out_json.with_file_name(format!("{stem}.diagnostics.json"))
}

fn run(args: &Args) -> causal_sat::Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Input(format!("alpha {} outside (0, 1)", args.alpha)));
    }
    let config = RunConfig {
        alpha: args.alpha,
        max_k: args.max_k,
        mpl: args.mpl.0,
        full_ancestry: args.full_ancestry,
        test: args.test,
        strategy: args.strategy,
        pds: args.pds,
        seed: args.seed,
    };
    let manifest = Manifest::load(&args.manifest)?;
    let out = run_pipeline(&manifest, &config)?;
    match &args.out_json {
        Some(path) => std::fs::write(path, out.summary.to_json())?,
        None => println!("{}", out.summary.to_json()),
    }
    if let Some(path) = &args.out_dot {
        std::fs::write(path, out.summary.to_dot())?;
    }
    if let Some(path) = args
        .diagnostics
        .clone()
        .or_else(|| args.out_json.as_deref().map(sidecar))
    {
        std::fs::write(path, out.diagnostics.to_json())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("causal-sat: {} error: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
