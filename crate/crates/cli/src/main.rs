use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use stabilizer_tn::circuit::Circuit;
use stabilizer_tn::engine::{chi_experiment, circuit_seed, run_circuit, ChiSample, ChiSummary, Fault, RunOptions, RunReport, TQubit};
use stabilizer_tn::mps::TruncationPolicy;
use stabilizer_tn::verify::{verify, VerifyConfig, FIDELITY_THRESHOLD};

/// Exit status for malformed circuit files.
const EXIT_PARSE: u8 = 2;

#[derive(Parser)]
#[command(name = "stn", version, about = "Stabilizer tensor network quantum circuit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a circuit file and print a report.
    Run(RunArgs),
    /// Bond dimension after one T gate on random Clifford bases.
    ChiStats(ChiArgs),
    /// Compare the simulator with a dense state vector on random circuits.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct RunArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative singular value cutoff; 0 disables compression.
    #[arg(long, default_value_t = 1e-12)]
    trunc_eps: f64,
    #[arg(long)]
    max_bond: Option<usize>,
    /// Repeat the run with per-shot seeds and report outcome counts.
    #[arg(long, default_value_t = 1)]
    shots: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Include the final MPS tensors (JSON only).
    #[arg(long)]
    dump_state: bool,
    /// Count nonzero amplitudes of the final coefficient state.
    #[arg(long)]
    pseudo_rank: bool,
}

#[derive(clap::Args)]
struct ChiArgs {
    /// Register sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Circuits per size (default n²).
    #[arg(long)]
    circuits: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `random` or `fixed:<q>`.
    #[arg(long, default_value = "random", value_parser = parse_tqubit)]
    tgate_qubit: TQubit,
    /// Relative singular value cutoff; the default 0 keeps the uncompressed
    /// bond dimension.
    #[arg(long, default_value_t = 0.0)]
    trunc_eps: f64,
    /// CSV destination (stdout if omitted). A histogram file `<stem>_hist.csv`
    /// is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    circuits: usize,
    #[arg(long, default_value_t = 30)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    trunc_eps: f64,
    #[arg(long, hide = true)]
    inject_sign_bug: bool,
}

fn parse_tqubit(s: &str) -> std::result::Result<TQubit, String> {
    if s == "random" {
        return Ok(TQubit::Random);
    }
    s.strip_prefix("fixed:")
        .and_then(|q| q.parse().ok())
        .map(TQubit::Fixed)
        .ok_or_else(|| format!("expected `random` or `fixed:<q>`, got `{s}`"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::ChiStats(args) => cmd_chi_stats(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let circuit = match Circuit::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.file.display());
            return Ok(ExitCode::from(EXIT_PARSE));
        }
    };
    let policy = TruncationPolicy::new(args.trunc_eps, args.max_bond)?;
    if args.shots == 0 {
        bail!("--shots must be at least 1");
    }
    if args.dump_state && (args.format != Format::Json || args.shots > 1) {
        bail!("--dump-state needs --format json and a single shot");
    }
    let options = RunOptions {
        pseudo_rank: args.pseudo_rank,
    };
    let out = if args.shots == 1 {
        let (report, state) = run_circuit(&circuit, args.seed, &policy, options)?;
        match args.format {
            Format::Json if args.dump_state => {
                let mut v = serde_json::to_value(&report)?;
                v["state"] = serde_json::to_value(state.nu().dump())?;
                serde_json::to_string_pretty(&v)? + "\n"
            }
            Format::Json => serde_json::to_string_pretty(&report)? + "\n",
            Format::Csv => report_csv(&report),
        }
    } else {
        let n = circuit.num_qubits();
        let reports = (0..args.shots)
            .into_par_iter()
            .map(|shot| run_circuit(&circuit, circuit_seed(args.seed, n, shot), &policy, options).map(|r| r.0))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for r in &reports {
            let key: String = r.records.iter().map(|m| if m.outcome > 0 { '0' } else { '1' }).collect();
            *counts.entry(key).or_default() += 1;
        }
        let max_chi = reports.iter().map(|r| r.max_chi).max().unwrap_or(1);
        match args.format {
            Format::Json => {
                let v = json!({"n": n, "seed": args.seed, "shots": args.shots, "counts": counts, "max_chi": max_chi});
                serde_json::to_string_pretty(&v)? + "\n"
            }
            Format::Csv => {
                let mut s = String::from("outcomes,count\n");
                for (k, c) in &counts {
                    writeln!(s, "{k},{c}")?;
                }
                s
            }
        }
    };
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

fn report_csv(r: &RunReport) -> String {
    let mut s = String::from("kind,observable,value,probability\n");
    for m in &r.records {
        let _ = writeln!(s, "measure,{},{},{}", m.observable, m.outcome, m.probability);
    }
    for e in &r.expectations {
        let _ = writeln!(s, "expect,{},{},", e.observable, e.value);
    }
    let _ = writeln!(s, "max_chi,,{},", r.max_chi);
    if let Some(p) = r.pseudo_rank {
        let _ = writeln!(s, "pseudo_rank,,{p},");
    }
    s
}

fn cmd_chi_stats(args: ChiArgs) -> Result<ExitCode> {
    let policy = TruncationPolicy::new(args.trunc_eps, None)?;
    let mut csv = String::from("n,circuit_index,log2_chi\n");
    let mut summaries: Vec<ChiSummary> = Vec::new();
    for &n in &args.n {
        let circuits = args.circuits.unwrap_or(n * n);
        let (samples, summary): (Vec<ChiSample>, ChiSummary) = chi_experiment(n, circuits, args.seed, args.tgate_qubit, &policy)?;
        for s in &samples {
            writeln!(csv, "{},{},{}", s.n, s.circuit_index, s.log2_chi)?;
        }
        summaries.push(summary);
    }
    for s in &summaries {
        writeln!(csv, "{},mean,{}", s.n, s.mean)?;
        writeln!(csv, "{},max,{}", s.n, s.max)?;
    }
    let mut hist = String::from("n,max_bond,log2_chi,count\n");
    for s in &summaries {
        for b in &s.histogram {
            writeln!(hist, "{},{},{},{}", s.n, b.max_bond, b.log2_chi, b.count)?;
        }
    }
    match &args.out {
        Some(path) => {
            fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
            let hist_path = histogram_path(path);
            fs::write(&hist_path, &hist).with_context(|| format!("writing {}", hist_path.display()))?;
            for s in &summaries {
                eprintln!("n={} circuits={} mean log2 chi={:.4} max={}", s.n, s.circuits, s.mean, s.max);
            }
        }
        None => {
            print!("{csv}");
            eprint!("{hist}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn histogram_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_hist.csv"))
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let mut config = VerifyConfig::new(args.n, args.circuits, args.depth, args.seed);
    config.policy = TruncationPolicy::new(args.trunc_eps, None)?;
    if args.inject_sign_bug {
        config.fault = Some(Fault::FlipRotationSign);
    }
    let report = verify(&config)?;
    let s = &report.stats;
    println!("circuits: {}", report.circuits);
    println!("steps: {}", s.steps);
    println!("measurements: {}", s.measurements);
    println!("min fidelity: {:.15}", s.min_fidelity);
    println!("max norm error: {:.3e}", s.max_norm_error);
    println!("max probability error: {:.3e}", s.max_probability_error);
    for f in s.failures.iter().take(5) {
        println!("failure: {f}");
    }
    if report.passed {
        println!("PASS (threshold {FIDELITY_THRESHOLD})");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAIL (threshold {FIDELITY_THRESHOLD})");
        Ok(ExitCode::FAILURE)
    }
}
