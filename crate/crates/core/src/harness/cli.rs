//! Command-line front end. Exit codes: 0 on success, 1 on usage or I/O
//! errors and failed verification, 2 when the solver gave up on a budget.

use crate::agents::AgentParams;
use crate::csp::{self, CspInstance};
use crate::engine::{self, Config, EngineError, NoTrace, SolveOutcome, TraceSink};
use crate::harness::{self, files, SweepSpec};
use crate::verify;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "queenswarm",
    version,
    about = "Agent-swarm solver for n-queens and binary CSPs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one board or instance
    Solve(SolveArgs),
    /// Run a parameter grid and write one CSV row per attempt
    Sweep(SweepArgs),
    /// Check a solution file against independently written rules
    Verify(VerifyArgs),
    /// List every solution of a small problem by exhaustive search
    Enumerate(EnumerateArgs),
    /// Summarize a sweep CSV (means, medians, linear fits)
    Report(ReportArgs),
}

#[derive(Args, Default)]
struct SolveArgs {
    /// Board size for n-queens
    #[arg(long)]
    n: Option<usize>,
    /// Path to a JSON instance document (instead of --n)
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Agents initially placed per row
    #[arg(long)]
    row_num: Option<usize>,
    /// Consecutive solutions requested from one population
    #[arg(long)]
    run_num: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Ceiling for the random-move weight draw
    #[arg(long)]
    max_random_w: Option<f64>,
    /// Ceiling for the least-conflict weight draw
    #[arg(long)]
    max_least_w: Option<f64>,
    /// Ceiling for the cooperative weight draw
    #[arg(long)]
    max_coop_w: Option<f64>,
    /// Give every agent the ceiling weights instead of random draws
    #[arg(long)]
    fixed_weights: bool,
    #[arg(long)]
    init_energy: Option<i64>,
    /// Energy lost per move before conflict penalties
    #[arg(long)]
    step_lose: Option<i64>,
    /// Minimum energy gap for one agent to eat another
    #[arg(long)]
    merge_threshold: Option<i64>,
    /// Fraction of rows set in each agent's cooperation bit-vector
    #[arg(long)]
    coop_density: Option<f64>,
    /// Ticks allowed per attempt
    #[arg(long)]
    tick_budget: Option<u64>,
    /// Fresh populations allowed after extinction
    #[arg(long)]
    restart_budget: Option<u32>,
    /// Write the last solution here (line 1: n, line 2: columns)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a tab-separated action trace here
    #[arg(long)]
    trace: Option<PathBuf>,
    /// TOML file with defaults; command-line flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the merged configuration and exit
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Board sizes: comma list `8,16` or end-exclusive range `100..601:100`
    #[arg(long)]
    n: String,
    /// Seeds: comma list or end-exclusive range, e.g. `0..20`
    #[arg(long, default_value = "0..20")]
    seeds: String,
    /// Comma list of agents-per-row values
    #[arg(long, default_value = "3")]
    row_num: String,
    /// Comma list of consecutive-solution counts
    #[arg(long, default_value = "1")]
    run_num: String,
    /// Comma list of random-weight ceilings
    #[arg(long, default_value = "1")]
    max_random_w: String,
    /// Comma list of least-conflict-weight ceilings
    #[arg(long, default_value = "90")]
    max_least_w: String,
    /// Comma list of cooperative-weight ceilings
    #[arg(long, default_value = "20")]
    max_coop_w: String,
    /// Give every agent the ceiling weights instead of random draws
    #[arg(long)]
    fixed_weights: bool,
    #[arg(long, default_value_t = 100)]
    init_energy: i64,
    #[arg(long, default_value_t = 1)]
    step_lose: i64,
    #[arg(long, default_value_t = 0)]
    merge_threshold: i64,
    #[arg(long, default_value_t = 0.25)]
    coop_density: f64,
    #[arg(long, default_value_t = 1_000_000)]
    tick_budget: u64,
    #[arg(long, default_value_t = 10)]
    restart_budget: u32,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Companion CSV recording each run's weight ceilings, for `report --weights`
    #[arg(long)]
    weights_out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Solution file (line 1: n, line 2: space-separated values)
    file: PathBuf,
    /// Check against this instance document instead of queens rules
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Board size for n-queens
    #[arg(long)]
    n: Option<usize>,
    /// Path to a JSON instance document (instead of --n)
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Override the safety cap (queens: largest n; instance: assignment count)
    #[arg(long)]
    bound: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Sweep CSV produced by `sweep --out`
    csv: PathBuf,
    /// Weights CSV produced by `sweep --weights-out`
    #[arg(long)]
    weights: Option<PathBuf>,
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.cmd {
        Cmd::Solve(args) => cmd_solve(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Enumerate(args) => cmd_enumerate(args),
        Cmd::Report(args) => cmd_report(args),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

/// Fully merged run parameters: command line over config file over defaults.
#[derive(Debug, Clone, PartialEq)]
struct Effective {
    n: Option<usize>,
    instance: Option<String>,
    row_num: usize,
    run_num: u32,
    seed: u64,
    max_random_w: f64,
    max_least_w: f64,
    max_coop_w: f64,
    fixed_weights: bool,
    init_energy: i64,
    step_lose: i64,
    merge_threshold: i64,
    coop_density: f64,
    tick_budget: u64,
    restart_budget: u32,
}

fn effective(args: &SolveArgs, file: &files::PartialConfig) -> Result<Effective, String> {
    // The problem selection is taken from one source as a unit, so a file's
    // `n` cannot leak under a command-line `--instance`.
    let (n, instance) = if args.n.is_some() || args.instance.is_some() {
        let path = args
            .instance
            .as_ref()
            .map(|p| p.to_string_lossy().into_owned());
        (args.n, path)
    } else {
        (file.n, file.instance.clone())
    };
    if n.is_some() && instance.is_some() {
        return Err("give either --n or --instance, not both".into());
    }
    let agent = AgentParams::default();
    Ok(Effective {
        n,
        instance,
        row_num: args.row_num.or(file.row_num).unwrap_or(3),
        run_num: args.run_num.or(file.run_num).unwrap_or(1),
        seed: args.seed.or(file.seed).unwrap_or(0),
        max_random_w: args
            .max_random_w
            .or(file.max_random_w)
            .unwrap_or(agent.max_random_w),
        max_least_w: args
            .max_least_w
            .or(file.max_least_w)
            .unwrap_or(agent.max_least_w),
        max_coop_w: args
            .max_coop_w
            .or(file.max_coop_w)
            .unwrap_or(agent.max_coop_w),
        fixed_weights: args.fixed_weights || file.fixed_weights.unwrap_or(false),
        init_energy: args
            .init_energy
            .or(file.init_energy)
            .unwrap_or(agent.initial_energy),
        step_lose: args
            .step_lose
            .or(file.step_lose)
            .unwrap_or(agent.step_lose_energy),
        merge_threshold: args
            .merge_threshold
            .or(file.merge_threshold)
            .unwrap_or(agent.merge_threshold),
        coop_density: args
            .coop_density
            .or(file.coop_density)
            .unwrap_or(agent.coop_bit_density),
        tick_budget: args.tick_budget.or(file.tick_budget).unwrap_or(1_000_000),
        restart_budget: args.restart_budget.or(file.restart_budget).unwrap_or(10),
    })
}

/// TOML-compatible dump of the merged configuration; feeding it back
/// through --config reproduces the same run.
fn render_config(e: &Effective) -> String {
    let mut out = String::new();
    if let Some(n) = e.n {
        let _ = writeln!(out, "n = {n}");
    }
    if let Some(path) = &e.instance {
        let _ = writeln!(out, "instance = {path:?}");
    }
    let _ = writeln!(out, "row_num = {}", e.row_num);
    let _ = writeln!(out, "run_num = {}", e.run_num);
    let _ = writeln!(out, "seed = {}", e.seed);
    let _ = writeln!(out, "max_random_w = {:?}", e.max_random_w);
    let _ = writeln!(out, "max_least_w = {:?}", e.max_least_w);
    let _ = writeln!(out, "max_coop_w = {:?}", e.max_coop_w);
    let _ = writeln!(out, "fixed_weights = {}", e.fixed_weights);
    let _ = writeln!(out, "init_energy = {}", e.init_energy);
    let _ = writeln!(out, "step_lose = {}", e.step_lose);
    let _ = writeln!(out, "merge_threshold = {}", e.merge_threshold);
    let _ = writeln!(out, "coop_density = {:?}", e.coop_density);
    let _ = writeln!(out, "tick_budget = {}", e.tick_budget);
    let _ = writeln!(out, "restart_budget = {}", e.restart_budget);
    out
}

fn load_instance(path: &str) -> Result<CspInstance, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    csp::parse_instance(&text).map_err(|e| format!("{path}: {e}"))
}

fn build_config(e: &Effective) -> Result<Config, String> {
    let instance = match (e.n, &e.instance) {
        (Some(0), _) => return Err("n must be at least 1".into()),
        (Some(n), None) => Arc::new(CspInstance::queens(n)),
        (None, Some(path)) => Arc::new(load_instance(path)?),
        (None, None) => return Err("specify a problem with --n or --instance".into()),
        (Some(_), Some(_)) => return Err("give either --n or --instance, not both".into()),
    };
    let mut cfg = Config::for_instance(instance);
    cfg.row_num = e.row_num;
    cfg.run_num = e.run_num;
    cfg.seed = e.seed;
    cfg.tick_budget = e.tick_budget;
    cfg.restart_budget = e.restart_budget;
    cfg.agent.max_random_w = e.max_random_w;
    cfg.agent.max_least_w = e.max_least_w;
    cfg.agent.max_coop_w = e.max_coop_w;
    cfg.agent.fixed_weights = e.fixed_weights;
    cfg.agent.initial_energy = e.init_energy;
    cfg.agent.step_lose_energy = e.step_lose;
    cfg.agent.merge_threshold = e.merge_threshold;
    cfg.agent.coop_bit_density = e.coop_density;
    cfg.validate().map_err(|err| err.to_string())?;
    Ok(cfg)
}

fn run_engine(cfg: Config, sink: &mut dyn TraceSink) -> Result<(SolveOutcome, bool), String> {
    match engine::solve_sequence(cfg, sink) {
        Ok(outcome) => Ok((outcome, false)),
        Err(EngineError::BudgetExhausted(outcome)) => Ok((outcome, true)),
        Err(EngineError::Config(e)) => Err(e.to_string()),
    }
}

fn join_values(values: &[usize]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_solve(args: SolveArgs) -> Result<i32, String> {
    let file_cfg = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            files::parse_config(&text).map_err(|e| e.to_string())?
        }
        None => files::PartialConfig::default(),
    };
    let eff = effective(&args, &file_cfg)?;
    if args.print_config {
        print!("{}", render_config(&eff));
        return Ok(0);
    }
    let cfg = build_config(&eff)?;

    let (outcome, budget_hit) = match &args.trace {
        Some(path) => {
            let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut sink = files::TraceWriter::new(BufWriter::new(file));
            let res = run_engine(cfg, &mut sink)?;
            sink.finish().map_err(|e| format!("writing trace: {e}"))?;
            res
        }
        None => run_engine(cfg, &mut NoTrace)?,
    };

    for attempt in &outcome.attempts {
        let s = &attempt.stats;
        println!(
            "attempt run_seq={} solved={} ticks={} millis={} deaths={} eats={} \
             restarts={} population={}",
            s.run_seq,
            s.solved,
            s.ticks,
            s.wall_millis,
            s.deaths,
            s.eats,
            s.restarts_before,
            s.population_at_solution
        );
        if let Some(assignment) = &attempt.assignment {
            println!("solution: {}", join_values(assignment));
        }
    }
    if let Some(out) = &args.out {
        if let Some((assignment, _)) = outcome.solutions().last() {
            let file = File::create(out).map_err(|e| format!("{}: {e}", out.display()))?;
            files::write_solution(BufWriter::new(file), assignment)
                .map_err(|e| format!("{}: {e}", out.display()))?;
        }
    }
    if budget_hit {
        eprintln!("budget exhausted without completing the requested runs");
        return Ok(2);
    }
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<i32, String> {
    let spec = SweepSpec {
        ns: parse_usize_list("n", &args.n)?,
        seeds: parse_u64_list("seeds", &args.seeds)?,
        row_nums: parse_usize_list("row-num", &args.row_num)?,
        run_nums: parse_u32_list("run-num", &args.run_num)?,
        max_random_ws: parse_f64_list("max-random-w", &args.max_random_w)?,
        max_least_ws: parse_f64_list("max-least-w", &args.max_least_w)?,
        max_coop_ws: parse_f64_list("max-coop-w", &args.max_coop_w)?,
        fixed_weights: args.fixed_weights,
        init_energy: args.init_energy,
        step_lose_energy: args.step_lose,
        merge_threshold: args.merge_threshold,
        coop_bit_density: args.coop_density,
        tick_budget: args.tick_budget,
        restart_budget: args.restart_budget,
    };
    let (rows, weight_rows) = harness::run_sweep(&spec).map_err(|e| e.to_string())?;
    let file = File::create(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    harness::write_csv(BufWriter::new(file), &rows).map_err(|e| e.to_string())?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    if let Some(path) = &args.weights_out {
        let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        harness::write_weights_csv(BufWriter::new(file), &weight_rows)
            .map_err(|e| e.to_string())?;
        println!("wrote {} weight rows to {}", weight_rows.len(), path.display());
    }
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, String> {
    let file = File::open(&args.file).map_err(|e| format!("{}: {e}", args.file.display()))?;
    let (n, assignment) =
        files::read_solution(BufReader::new(file)).map_err(|e| e.to_string())?;
    let verdict = match &args.instance {
        Some(path) => {
            let instance = load_instance(&path.to_string_lossy())?;
            verify::check_csp(&instance, &assignment)
        }
        None => verify::check_queens(n, &assignment),
    };
    match verdict {
        Ok(true) => {
            println!("valid");
            Ok(0)
        }
        Ok(false) => {
            println!("invalid: constraint violated");
            Ok(1)
        }
        Err(e) => {
            println!("invalid: {e}");
            Ok(1)
        }
    }
}

fn cmd_enumerate(args: EnumerateArgs) -> Result<i32, String> {
    let solutions = match (args.n, &args.instance) {
        (Some(_), Some(_)) => return Err("give either --n or --instance, not both".into()),
        (None, None) => return Err("specify a problem with --n or --instance".into()),
        (Some(n), None) => {
            let bound = args
                .bound
                .map(|b| b as usize)
                .unwrap_or(verify::QUEENS_ENUM_BOUND);
            verify::enumerate_queens_bounded(n, bound).map_err(|e| e.to_string())?
        }
        (None, Some(path)) => {
            let instance = load_instance(&path.to_string_lossy())?;
            let bound = args.bound.map(u128::from).unwrap_or(verify::CSP_ENUM_BOUND);
            verify::enumerate_csp_bounded(&instance, bound).map_err(|e| e.to_string())?
        }
    };
    for solution in &solutions {
        println!("{}", join_values(solution));
    }
    println!("count: {}", solutions.len());
    Ok(0)
}

fn cmd_report(args: ReportArgs) -> Result<i32, String> {
    let file = File::open(&args.csv).map_err(|e| format!("{}: {e}", args.csv.display()))?;
    let rows = harness::read_csv(BufReader::new(file)).map_err(|e| e.to_string())?;
    let weights = match &args.weights {
        Some(path) => {
            let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Some(harness::read_weights_csv(BufReader::new(file)).map_err(|e| e.to_string())?)
        }
        None => None,
    };
    let report = harness::build_report(&rows, weights.as_deref());
    print!("{report}");
    Ok(0)
}

fn expand_range(name: &str, a: &str, b: &str, step: u64) -> Result<Vec<u64>, String> {
    let a: u64 = a
        .trim()
        .parse()
        .map_err(|_| format!("--{name}: cannot parse `{a}`"))?;
    let b: u64 = b
        .trim()
        .parse()
        .map_err(|_| format!("--{name}: cannot parse `{b}`"))?;
    if step == 0 {
        return Err(format!("--{name}: step must be positive"));
    }
    let items: Vec<u64> = (a..b).step_by(step as usize).collect();
    if items.is_empty() {
        return Err(format!("--{name}: range {a}..{b} is empty"));
    }
    Ok(items)
}

/// Accepts `a,b,c`, `start..end` (end exclusive), or `start..end:step`.
fn parse_u64_list(name: &str, text: &str) -> Result<Vec<u64>, String> {
    if let Some((range, step_text)) = text.split_once(':') {
        let step: u64 = step_text
            .trim()
            .parse()
            .map_err(|_| format!("--{name}: cannot parse step `{step_text}`"))?;
        let (a, b) = range
            .split_once("..")
            .ok_or_else(|| format!("--{name}: step syntax needs a range, e.g. 100..601:100"))?;
        return expand_range(name, a, b, step);
    }
    if let Some((a, b)) = text.split_once("..") {
        return expand_range(name, a, b, 1);
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| format!("--{name}: cannot parse `{t}`"))
        })
        .collect()
}

fn parse_usize_list(name: &str, text: &str) -> Result<Vec<usize>, String> {
    Ok(parse_u64_list(name, text)?
        .into_iter()
        .map(|x| x as usize)
        .collect())
}

fn parse_u32_list(name: &str, text: &str) -> Result<Vec<u32>, String> {
    parse_u64_list(name, text)?
        .into_iter()
        .map(|x| u32::try_from(x).map_err(|_| format!("--{name}: {x} does not fit in u32")))
        .collect()
}

fn parse_f64_list(name: &str, text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| format!("--{name}: cannot parse `{t}`"))
        })
        .collect()
}
