//! Command-line front end: one-shot market solves, guardrail inspection,
//! single seeded simulations, Monte-Carlo experiments, and scaling-law fits.

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seqfair::arrivals::mix_seed;
use seqfair::config::{self, ExperimentFile, ParamsFile, ScenarioConfig};
use seqfair::guardrails::build_guardrails;
use seqfair::harness::{self, builtin_experiment, ExperimentConfig, LtRule};
use seqfair::market::{solve_eg, MarketInstance, TypeSpec};
use seqfair::metrics;
use seqfair::policies::{fixed_threshold, guarded_hope, hindsight_optimal, AllocationTrace};
use seqfair::HorizonSpec;
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "eg", about = "Sequential fair division: market solver, guardrail policies, and experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a one-shot fair division market from an instance file
    Solve {
        /// Instance file (.toml/.json) with budgets and types {id, weights, count}
        file: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 500_000)]
        max_iters: usize,
        /// Emit machine-readable JSON instead of a table
        #[arg(long)]
        json: bool,
    },
    /// Build and print guardrail thresholds for a horizon scenario
    Guardrails {
        /// Scenario file (.toml/.json) with T, delta, budgets, types
        file: PathBuf,
        /// Threshold parameter L_T
        #[arg(long)]
        lt: f64,
    },
    /// Run one seeded policy simulation over a horizon scenario
    Simulate {
        /// Scenario file (.toml/.json)
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyArg::GuardedHope)]
        policy: PolicyArg,
        #[arg(long)]
        lt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the full round-by-round trace to this CSV file
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a Monte-Carlo experiment (built-in setting name or config file)
    Experiment {
        /// One of single-synthetic, single-fbst-style, multi-synthetic,
        /// multi-fbst-style, or a path to an experiment config file
        target: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        runs: Option<usize>,
        /// Worker threads (default: one per core); results are identical regardless
        #[arg(long)]
        parallel: Option<usize>,
        /// Per-round (mu, sigma) parameter file for the fbst-style settings
        #[arg(long)]
        params: Option<PathBuf>,
        /// Horizon lengths to sweep (default 100..3200 doubling)
        #[arg(long, value_delimiter = ',')]
        t_values: Option<Vec<usize>>,
    },
    /// Fit a log-log scaling law to an aggregate CSV
    Report {
        file: PathBuf,
        /// Metric column: waste, delta-ef, envy, or delta-prop
        #[arg(long, default_value = "waste")]
        fit: String,
        #[arg(long, default_value = "guarded-hope")]
        policy: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    GuardedHope,
    FixedThreshold,
}

#[derive(Deserialize)]
struct InstanceFile {
    budgets: Vec<f64>,
    types: Vec<InstanceType>,
}

#[derive(Deserialize)]
struct InstanceType {
    id: String,
    weights: Vec<f64>,
    count: f64,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Solve { file, tol, max_iters, json } => cmd_solve(&file, tol, max_iters, json),
        Command::Guardrails { file, lt } => cmd_guardrails(&file, lt),
        Command::Simulate { file, policy, lt, seed, trace } => {
            cmd_simulate(&file, policy, lt, seed, trace.as_deref())
        }
        Command::Experiment { target, out, seed, runs, parallel, params, t_values } => {
            cmd_experiment(&target, &out, seed, runs, parallel, params.as_deref(), t_values)
        }
        Command::Report { file, fit, policy } => cmd_report(&file, &fit, &policy),
    }
}

fn cmd_solve(file: &Path, tol: f64, max_iters: usize, json: bool) -> Result<(), String> {
    let parsed: InstanceFile = config::parse_file(file).map_err(|e| e.to_string())?;
    let instance = MarketInstance::new(
        parsed.budgets,
        parsed
            .types
            .into_iter()
            .map(|t| TypeSpec { id: t.id, weights: t.weights, count: t.count })
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    let sol = solve_eg(&instance, tol, max_iters).map_err(|e| e.to_string())?;
    if json {
        let doc = serde_json::json!({
            "allocation": sol.allocation,
            "prices": sol.prices,
            "utilities": sol.utilities,
            "kkt_residual": sol.kkt_residual,
            "iterations": sol.iterations,
        });
        println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    } else {
        println!("prices: {}", fmt_vec(&sol.prices));
        for (th, ty) in instance.types().iter().enumerate() {
            println!(
                "{}: allocation {}  utility {:.6}",
                ty.id,
                fmt_vec(&sol.allocation[th]),
                sol.utilities[th]
            );
        }
        println!("kkt residual: {:.3e}  iterations: {}", sol.kkt_residual, sol.iterations);
    }
    Ok(())
}

fn load_scenario(file: &Path) -> Result<(ScenarioConfig, HorizonSpec), String> {
    let scenario = ScenarioConfig::load(file).map_err(|e| e.to_string())?;
    let models = scenario.arrival_models().map_err(|e| e.to_string())?;
    let horizon = HorizonSpec::new(scenario.delta, models).map_err(|e| e.to_string())?;
    Ok((scenario, horizon))
}

fn cmd_guardrails(file: &Path, lt: f64) -> Result<(), String> {
    let (scenario, horizon) = load_scenario(file)?;
    let weights = scenario.weights();
    let expected = horizon.expected_totals();
    let rails = build_guardrails(&expected, &weights, &scenario.budgets, &horizon, lt, 1e-9)
        .map_err(|e| e.to_string())?;
    println!("L_T = {}  gamma = {:.6}  c = {:.6}", rails.l_t, rails.gamma, rails.c);
    println!("n_upper: {}", fmt_vec(&rails.n_upper));
    println!("n_lower: {}", fmt_vec(&rails.n_lower));
    for (th, ty) in scenario.types.iter().enumerate() {
        println!(
            "{}: X_lower {}  X_upper {}  utility gap {:.6}",
            ty.id,
            fmt_vec(&rails.x_lower[th]),
            fmt_vec(&rails.x_upper[th]),
            rails.utility_gap[th]
        );
    }
    let d = &rails.diagnostics;
    println!(
        "min feasible L_T: {:.6} (met: {})  allocation gap: {:.6}",
        d.min_feasible_lt, d.lt_meets_min, d.alloc_gap
    );
    Ok(())
}

fn cmd_simulate(
    file: &Path,
    policy: PolicyArg,
    lt: f64,
    seed: u64,
    trace_out: Option<&Path>,
) -> Result<(), String> {
    let (scenario, horizon) = load_scenario(file)?;
    let weights = scenario.weights();
    let expected = horizon.expected_totals();
    let rails = build_guardrails(&expected, &weights, &scenario.budgets, &horizon, lt, 1e-9)
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0, 0));
    let arrivals = horizon.sample(&mut rng);
    let trace = match policy {
        PolicyArg::GuardedHope => guarded_hope(&rails, &horizon, &scenario.budgets, &arrivals, seed),
        PolicyArg::FixedThreshold => {
            fixed_threshold(&rails, &horizon, &scenario.budgets, &arrivals, seed)
        }
    }
    .map_err(|e| e.to_string())?;

    let x_opt = hindsight_optimal(&arrivals, &weights, &scenario.budgets, 1e-9)
        .map_err(|e| e.to_string())?
        .allocation;
    let conc = horizon.concentration_event(&arrivals);
    let report = metrics::run_metrics(&trace, &x_opt, &weights, &scenario.budgets, "scenario", lt, conc);
    println!("policy: {}  seed: {}  T: {}", trace.policy_name, seed, horizon.rounds());
    println!(
        "delta_ef: {:.6}  waste: {:.6}  envy: {:.6}  delta_prop: {:.6}",
        report.delta_ef, report.delta_efficiency, report.envy, report.delta_prop
    );
    println!(
        "fallback rounds: {}  concentration event: {}",
        report.fallback_rounds, report.concentration_event
    );
    if let Some(path) = trace_out {
        std::fs::write(path, render_trace_csv(&trace))
            .map_err(|e| format!("writing {}: {e}", path.display()))?;
        println!("trace written to {}", path.display());
    }
    Ok(())
}

fn render_trace_csv(trace: &AllocationTrace) -> String {
    let mut out = String::from("t,theta,k,arrivals,allocation,budget_before,branch\n");
    for t in 0..trace.rounds() {
        for th in 0..trace.num_types() {
            for k in 0..trace.num_resources() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    t,
                    th,
                    k,
                    trace.arrivals[t][th],
                    trace.allocations[t][th][k],
                    trace.budget_path[t][k],
                    trace.branch[t][k].as_str()
                );
            }
        }
    }
    out
}

fn cmd_experiment(
    target: &str,
    out: &Path,
    seed: u64,
    runs: Option<usize>,
    parallel: Option<usize>,
    params_path: Option<&Path>,
    t_values: Option<Vec<usize>>,
) -> Result<(), String> {
    let params = params_path
        .map(ParamsFile::load)
        .transpose()
        .map_err(|e| e.to_string())?;

    let mut config: ExperimentConfig = if harness::SETTING_NAMES.contains(&target) {
        builtin_experiment(target, params.as_ref()).map_err(|e| e.to_string())?
    } else {
        let file = ExperimentFile::load(Path::new(target)).map_err(|e| e.to_string())?;
        let file_params = match (&params, &file.params_file) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(rel)) => Some(
                ParamsFile::load(&Path::new(target).with_file_name(rel))
                    .map_err(|e| e.to_string())?,
            ),
            (None, None) => None,
        };
        let mut cfg = builtin_experiment(&file.setting, file_params.as_ref())
            .map_err(|e| e.to_string())?;
        if let Some(tv) = file.t_values {
            cfg.t_values = tv;
        }
        if let Some(r) = file.runs {
            cfg.runs = r;
        }
        if let Some(s) = file.base_seed {
            cfg.base_seed = s;
        }
        if let (Some(a), exps) = (file.lt_coeff, file.lt_exponents) {
            let exponents = exps.unwrap_or_else(|| vec![-1.0 / 3.0, -0.5]);
            cfg.lt_rules = exponents
                .into_iter()
                .map(|e| LtRule::new(a, e))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
        }
        cfg
    };

    config.base_seed = seed;
    if let Some(r) = runs {
        config.runs = r;
    }
    if let Some(tv) = t_values {
        config.t_values = tv;
    }

    let output = harness::run_experiment(&config, parallel).map_err(|e| e.to_string())?;
    harness::write_outputs(&output, out).map_err(|e| e.to_string())?;
    let feasible = output.cells.iter().filter(|c| c.aggregate.is_some()).count();
    println!(
        "{} cells ({} feasible) x {} runs written to {}",
        output.cells.len(),
        feasible,
        config.runs,
        out.display()
    );
    for cell in &output.cells {
        match &cell.aggregate {
            Some(a) => println!(
                "T={} {} [{}]: mean waste {:.4}, mean delta_ef {:.4}, envy violations {:.2}%",
                cell.rounds,
                cell.policy.name(),
                cell.rule.label(),
                a.mean_delta_eff,
                a.mean_delta_ef,
                100.0 * a.envy_violation_freq
            ),
            None => println!(
                "T={} {} [{}]: infeasible (shrink factor outside (0,1))",
                cell.rounds,
                cell.policy.name(),
                cell.rule.label()
            ),
        }
    }
    Ok(())
}

fn cmd_report(file: &Path, fit: &str, policy: &str) -> Result<(), String> {
    let csv = std::fs::read_to_string(file).map_err(|e| format!("reading {}: {e}", file.display()))?;
    let points = harness::fit_points_from_csv(&csv, fit, policy).map_err(|e| e.to_string())?;
    let result = harness::scaling_fit(&points).map_err(|e| e.to_string())?;
    if result.points_dropped > 0 {
        eprintln!(
            "warning: dropped {} nonpositive row(s) before fitting",
            result.points_dropped
        );
    }
    println!(
        "fit {} ~ T^slope for {}: slope {:.4}, intercept {:.4}, r^2 {:.4} ({} points)",
        fit, policy, result.slope, result.intercept, result.r_squared, result.points_used
    );
    Ok(())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}
