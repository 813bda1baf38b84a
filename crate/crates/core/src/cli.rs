//! Command-line frontend: `verify` for single instances, `bounds` for
//! single-pass bound sweeps, `bench` for manifest-driven suites.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::model_io::{
    parse_nnet, parse_property, serialize_result, Objective, VerificationProblem,
};
use crate::optimizer::{
    region_bound, solve, CandidateRule, SolverConfig, SplitRule, Verdict,
};
use crate::relaxation::{forward_pass, BudgetRule, FreshVarConfig, PriorityRule};

/// Exit codes: 0 = property holds (UNSAT), 1 = violated (SAT),
/// 2 = inconclusive, >= 10 = usage or I/O error.
pub const EXIT_UNSAT: i32 = 0;
pub const EXIT_SAT: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_ERROR: i32 = 10;

#[derive(Parser)]
#[command(name = "relucheck", about = "ReLU network verifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Verify a single property against a network.
    Verify(VerifyArgs),
    /// Report single-pass objective bounds over a parameter sweep.
    Bounds(BoundsArgs),
    /// Run a benchmark manifest and emit per-instance CSV plus aggregates.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SplitArg {
    Smear,
    Widest,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum CandidateArg {
    Argmax,
    Center,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum VarsArg {
    /// Per-layer lambda budget, range-prioritized selection.
    Fraction,
    /// Earliest-first placement with the per-depth allowance.
    Depth,
    /// No fresh variables.
    None,
}

#[derive(Args, Clone)]
pub struct SolverArgs {
    /// Timeout per instance in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    /// Maximum total number of fresh variables.
    #[arg(long = "max-vars", default_value_t = 20)]
    pub max_vars: usize,
    /// Maximal fraction of a layer's non-fixed-zero neurons receiving
    /// fresh variables.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = SplitArg::Smear)]
    pub split: SplitArg,
    #[arg(long, value_enum, default_value_t = CandidateArg::Argmax)]
    pub candidate: CandidateArg,
    #[arg(long, value_enum, default_value_t = VarsArg::Fraction)]
    pub vars: VarsArg,
    /// Disable monotone refinement of child bounds.
    #[arg(long = "no-monotone", default_value_t = false)]
    pub no_monotone: bool,
    /// Apply the NNet normalization metadata to the input box.
    #[arg(long = "normalize-input", default_value_t = false)]
    pub normalize_input: bool,
    #[arg(long = "max-nodes", default_value_t = u64::MAX)]
    pub max_nodes: u64,
}

impl SolverArgs {
    pub fn to_config(&self) -> SolverConfig {
        let (budget_rule, priority_rule) = match self.vars {
            VarsArg::Fraction => (BudgetRule::LayerFraction, PriorityRule::ConcreteRange),
            VarsArg::Depth => (BudgetRule::DepthAllowance, PriorityRule::EarliestFirst),
            VarsArg::None => (BudgetRule::None, PriorityRule::ConcreteRange),
        };
        SolverConfig {
            fresh: FreshVarConfig {
                max_total: self.max_vars,
                lambda: self.lambda,
                budget_rule,
                priority_rule,
                forbid_last_hidden: true,
            },
            split_rule: match self.split {
                SplitArg::Smear => SplitRule::SmearFV,
                SplitArg::Widest => SplitRule::WidestInput,
            },
            candidate_rule: match self.candidate {
                CandidateArg::Argmax => CandidateRule::SymbolicArgmax,
                CandidateArg::Center => CandidateRule::CenterSample,
            },
            monotone_refinement: !self.no_monotone,
            timeout: Duration::from_secs_f64(self.timeout),
            bound_tolerance: 1e-6,
            max_nodes: self.max_nodes,
        }
    }
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub property: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the result document as JSON to this path.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub property: PathBuf,
    /// Comma-separated list of lambda values to sweep.
    #[arg(long = "lambda-list", default_value = "0.0,0.5")]
    pub lambda_list: String,
    /// Comma-separated list of fresh-variable caps to sweep.
    #[arg(long = "max-vars-list", default_value = "20")]
    pub max_vars_list: String,
    #[arg(long = "normalize-input", default_value_t = false)]
    pub normalize_input: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Manifest of instances: `name network.nnet property.txt [normalize]`
    /// per line, `#` comments.
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the per-instance CSV here instead of stdout.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the sorted cumulative-time series for cactus plots here.
    #[arg(long)]
    pub cactus: Option<PathBuf>,
}

/// One benchmark instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub network: PathBuf,
    pub property: PathBuf,
    pub normalize: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BenchManifest {
    pub instances: Vec<ManifestEntry>,
}

/// Parse a benchmark manifest. Each non-comment line names one instance:
/// `name network property` with an optional trailing `normalize` token
/// recording that the instance runs on the normalized input box.
pub fn parse_manifest(text: &str) -> Result<BenchManifest, String> {
    let mut instances = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 || toks.len() > 4 {
            return Err(format!(
                "manifest line {}: expected `name network property [normalize]`",
                idx + 1
            ));
        }
        let normalize = match toks.get(3) {
            None => false,
            Some(&"normalize") => true,
            Some(&"raw") => false,
            Some(other) => {
                return Err(format!(
                    "manifest line {}: unknown flag `{other}`",
                    idx + 1
                ))
            }
        };
        instances.push(ManifestEntry {
            name: toks[0].to_string(),
            network: PathBuf::from(toks[1]),
            property: PathBuf::from(toks[2]),
            normalize,
        });
    }
    Ok(BenchManifest { instances })
}

fn load_problem(
    network: &Path,
    property: &Path,
    normalize: bool,
    name: &str,
) -> Result<VerificationProblem, String> {
    let net_text = fs::read_to_string(network)
        .map_err(|e| format!("cannot read {}: {e}", network.display()))?;
    let net = parse_nnet(&net_text).map_err(|e| format!("{}: {e}", network.display()))?;
    let prop_text = fs::read_to_string(property)
        .map_err(|e| format!("cannot read {}: {e}", property.display()))?;
    let (mut input, objective) =
        parse_property(&prop_text).map_err(|e| format!("{}: {e}", property.display()))?;
    if normalize {
        let norm = net
            .normalization
            .as_ref()
            .ok_or_else(|| "network carries no normalization metadata".to_string())?;
        input = norm.normalize_box(&input);
    }
    VerificationProblem::new(net, input, objective, name)
}

fn verdict_exit(verdict: &Verdict) -> i32 {
    match verdict {
        Verdict::Unsat { .. } => EXIT_UNSAT,
        Verdict::Sat { .. } => EXIT_SAT,
        Verdict::Inconclusive { .. } => EXIT_INCONCLUSIVE,
    }
}

fn report_json(report: &crate::optimizer::VerdictReport) -> serde_json::Value {
    use serde_json::json;
    let verdict = match &report.verdict {
        Verdict::Sat {
            counterexample,
            value,
        } => json!({
            "kind": "SAT",
            "counterexample": counterexample.to_vec(),
            "value": value,
        }),
        Verdict::Unsat { bound } => json!({"kind": "UNSAT", "certified_bound": bound}),
        Verdict::Inconclusive {
            certified_bound,
            best_candidate,
        } => json!({
            "kind": "INCONCLUSIVE",
            "certified_bound": certified_bound,
            "best_candidate": best_candidate,
        }),
    };
    json!({
        "verdict": verdict,
        "nodes": report.nodes,
        "elapsed_s": report.elapsed.as_secs_f64(),
        "config": report.config_echo,
    })
}

pub fn cmd_verify(args: &VerifyArgs) -> i32 {
    let problem = match load_problem(
        &args.network,
        &args.property,
        args.solver.normalize_input,
        "cli",
    ) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let cfg = args.solver.to_config();
    let report = match solve(&problem, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    print!("{}", serialize_result(&report));
    if let Some(path) = &args.json {
        let doc = report_json(&report);
        if let Err(e) = fs::write(path, serde_json::to_string_pretty(&doc).unwrap()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_ERROR;
        }
    }
    verdict_exit(&report.verdict)
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| format!("bad list entry `{t}`")))
        .collect()
}

pub fn cmd_bounds(args: &BoundsArgs) -> i32 {
    let problem = match load_problem(&args.network, &args.property, args.normalize_input, "bounds")
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let lambdas: Vec<f64> = match parse_list(&args.lambda_list) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    let max_vars: Vec<usize> = match parse_list(&args.max_vars_list) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };

    let mut csv = String::from("lambda,max_vars,output_upper_bound,pass_time\n");
    for &lambda in &lambdas {
        for &cap in &max_vars {
            let cfg = FreshVarConfig {
                max_total: cap,
                lambda,
                ..Default::default()
            };
            let start = std::time::Instant::now();
            let pass = match forward_pass(&problem.network, &problem.input, &cfg, None) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_ERROR;
                }
            };
            let bound = match region_bound(&pass, &problem.objective) {
                Ok(b) => b,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_ERROR;
                }
            };
            let elapsed = start.elapsed().as_secs_f64();
            csv.push_str(&format!("{lambda},{cap},{bound},{elapsed}\n"));
        }
    }
    match &args.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &csv) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_ERROR;
            }
        }
        None => print!("{csv}"),
    }
    0
}

struct BenchRow {
    name: String,
    verdict: String,
    time: f64,
    nodes: u64,
    bound: f64,
}

pub fn cmd_bench(args: &BenchArgs) -> i32 {
    let text = match fs::read_to_string(&args.manifest) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.manifest.display());
            return EXIT_ERROR;
        }
    };
    let manifest = match parse_manifest(&text) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    // All referenced files must exist before the suite starts.
    for entry in &manifest.instances {
        for path in [&entry.network, &entry.property] {
            if !path.exists() {
                eprintln!("error: missing file {}", path.display());
                return EXIT_ERROR;
            }
        }
    }

    let cfg = args.solver.to_config();
    let mut rows = Vec::new();
    for entry in &manifest.instances {
        let row = run_bench_instance(entry, &cfg, args.solver.normalize_input);
        rows.push(row);
    }

    let mut csv = String::from("name,verdict,time,nodes,bound\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.name, r.verdict, r.time, r.nodes, r.bound
        ));
    }
    let sat: Vec<&BenchRow> = rows.iter().filter(|r| r.verdict == "SAT").collect();
    let unsat: Vec<&BenchRow> = rows.iter().filter(|r| r.verdict == "UNSAT").collect();
    let inconclusive = rows
        .iter()
        .filter(|r| r.verdict == "INCONCLUSIVE" || r.verdict == "ERROR")
        .count();
    let sat_time: f64 = sat.iter().map(|r| r.time).sum();
    let unsat_time: f64 = unsat.iter().map(|r| r.time).sum();
    csv.push_str(&format!(
        "# aggregate sat={} sat_time={:.2} unsat={} unsat_time={:.2} inconclusive={}\n",
        sat.len(),
        sat_time,
        unsat.len(),
        unsat_time,
        inconclusive
    ));

    match &args.csv {
        Some(path) => {
            if let Err(e) = fs::write(path, &csv) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_ERROR;
            }
        }
        None => print!("{csv}"),
    }

    if let Some(path) = &args.cactus {
        let mut times: Vec<f64> = rows
            .iter()
            .filter(|r| r.verdict == "SAT" || r.verdict == "UNSAT")
            .map(|r| r.time)
            .collect();
        times.sort_by(f64::total_cmp);
        let mut series = String::from("solved,cumulative_time\n");
        let mut cumulative = 0.0;
        for (i, t) in times.iter().enumerate() {
            cumulative += t;
            series.push_str(&format!("{},{}\n", i + 1, cumulative));
        }
        if let Err(e) = fs::write(path, &series) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_ERROR;
        }
    }
    0
}

fn run_bench_instance(entry: &ManifestEntry, cfg: &SolverConfig, force_norm: bool) -> BenchRow {
    let normalize = entry.normalize || force_norm;
    let problem = match load_problem(&entry.network, &entry.property, normalize, &entry.name) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}: {e}", entry.name);
            return BenchRow {
                name: entry.name.clone(),
                verdict: "ERROR".into(),
                time: 0.0,
                nodes: 0,
                bound: f64::NAN,
            };
        }
    };
    match solve(&problem, cfg) {
        Ok(report) => {
            let (verdict, bound) = match &report.verdict {
                Verdict::Sat { value, .. } => ("SAT", *value),
                Verdict::Unsat { bound } => ("UNSAT", *bound),
                Verdict::Inconclusive {
                    certified_bound, ..
                } => ("INCONCLUSIVE", *certified_bound),
            };
            BenchRow {
                name: entry.name.clone(),
                verdict: verdict.into(),
                time: report.elapsed.as_secs_f64(),
                nodes: report.nodes,
                bound,
            }
        }
        Err(e) => {
            eprintln!("{}: {e}", entry.name);
            BenchRow {
                name: entry.name.clone(),
                verdict: "ERROR".into(),
                time: 0.0,
                nodes: 0,
                bound: f64::NAN,
            }
        }
    }
}

/// Parse argv and run the selected subcommand, returning the process exit
/// code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    match &cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

/// Sanity hook used by tests: objective of a problem as loaded by the CLI.
pub fn problem_objective(p: &VerificationProblem) -> &Objective {
    &p.objective
}
