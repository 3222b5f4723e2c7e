//! Built-in experiment settings, seeded Monte-Carlo execution across horizon
//! lengths and threshold rules, CSV emission, and log-log scaling fits.

use crate::arrivals::{mix_seed, ArrivalError, ArrivalModel, HorizonSpec};
use crate::config::ParamsFile;
use crate::guardrails::{self, GuardrailError, Guardrails};
use crate::metrics::{self, AggregateMetrics, MetricsError, RunMetrics};
use crate::policies::{self, PolicyError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown setting {0:?}; expected one of single-synthetic, single-fbst-style, multi-synthetic, multi-fbst-style")]
    UnknownSetting(String),
    #[error("setting {0:?} needs a per-round (mu, sigma) parameter file; pass one with --params <file> (TOML/JSON with a `rounds` array of {{mu, sigma}} entries)")]
    MissingParams(String),
    #[error("threshold exponent {0} outside [-1/2, 0)")]
    BadExponent(f64),
    #[error("no T values configured")]
    NoHorizons,
    #[error(transparent)]
    Arrival(#[from] ArrivalError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("reading aggregate CSV: {0}")]
    BadCsv(String),
    #[error("scaling fit needs at least 3 distinct positive T values, got {0}")]
    TooFewPoints(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    GuardedHope,
    FixedThreshold,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::GuardedHope => "guarded-hope",
            PolicyKind::FixedThreshold => "fixed-threshold",
        }
    }
}

/// Threshold schedule L_T = coeff * T^exponent.
#[derive(Debug, Clone, Copy)]
pub struct LtRule {
    pub coeff: f64,
    pub exponent: f64,
}

impl LtRule {
    pub fn new(coeff: f64, exponent: f64) -> Result<Self, HarnessError> {
        if !(exponent >= -0.5 && exponent < 0.0) {
            return Err(HarnessError::BadExponent(exponent));
        }
        Ok(LtRule { coeff, exponent })
    }

    pub fn value(&self, rounds: usize) -> f64 {
        self.coeff * (rounds as f64).powf(self.exponent)
    }

    pub fn label(&self) -> String {
        format!("{}*T^{:.4}", self.coeff, self.exponent)
    }
}

/// How per-round arrival models are generated for a setting.
#[derive(Debug, Clone)]
pub enum ArrivalPlan {
    /// One stationary model per type, used every round.
    Stationary(Vec<ArrivalModel>),
    /// Per-round (mu, sigma) base parameters (cycled over the horizon), with
    /// per-type fractions scaling both mu and sigma.
    NormalSchedule {
        rounds: Vec<(f64, f64)>,
        fractions: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Setting {
    pub name: String,
    pub type_ids: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    /// Per-resource share of the total budget; sums to 1.
    pub budget_proportions: Vec<f64>,
    pub plan: ArrivalPlan,
    pub delta: f64,
}

impl Setting {
    pub fn horizon(&self, rounds: usize) -> Result<HorizonSpec, HarnessError> {
        match &self.plan {
            ArrivalPlan::Stationary(models) => {
                Ok(HorizonSpec::replicated(rounds, self.delta, models.clone())?)
            }
            ArrivalPlan::NormalSchedule { rounds: sched, fractions } => {
                let mut per_round = Vec::with_capacity(rounds);
                for t in 0..rounds {
                    let (mu, sigma) = sched[t % sched.len()];
                    let row: Vec<ArrivalModel> = fractions
                        .iter()
                        .map(|&f| ArrivalModel::normal(f * mu, f * sigma))
                        .collect::<Result<_, _>>()?;
                    per_round.push(row);
                }
                Ok(HorizonSpec::new(self.delta, per_round)?)
            }
        }
    }

    /// Budget rule: B_k = proportion_k * total expected arrivals over the horizon.
    pub fn budgets(&self, horizon: &HorizonSpec) -> Vec<f64> {
        let total: f64 = horizon.expected_totals().iter().sum();
        self.budget_proportions.iter().map(|&p| p * total).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub setting: Setting,
    pub t_values: Vec<usize>,
    pub runs: usize,
    pub base_seed: u64,
    pub lt_rules: Vec<LtRule>,
    pub policies: Vec<PolicyKind>,
    pub solver_tolerance: f64,
}

pub const DEFAULT_T_VALUES: [usize; 6] = [100, 200, 400, 800, 1600, 3200];
pub const DEFAULT_RUNS: usize = 200;

pub const SETTING_NAMES: [&str; 4] = [
    "single-synthetic",
    "single-fbst-style",
    "multi-synthetic",
    "multi-fbst-style",
];

/// Construct one of the four built-in experiments. The two file-driven
/// settings require a per-round parameter schedule.
pub fn builtin_experiment(
    name: &str,
    params: Option<&ParamsFile>,
) -> Result<ExperimentConfig, HarnessError> {
    // Default threshold coefficients are tuned per setting so that the shrink
    // factor c stays inside (0, 1) across the default horizon range. L_T is
    // measured in units of w_inf^2 / (w_min * beta_min), so its feasible band
    // sits near 1 for the single-type settings but in the hundreds for the
    // multi-resource settings with wide weight spreads.
    let (setting, rules) = match name {
        "single-synthetic" => (
            Setting {
                name: name.to_string(),
                type_ids: vec!["type0".to_string()],
                weights: vec![vec![1.0]],
                budget_proportions: vec![1.0],
                plan: ArrivalPlan::Stationary(vec![ArrivalModel::poisson(1.5)?]),
                delta: 0.1,
            },
            vec![LtRule::new(2.0, -1.0 / 3.0)?, LtRule::new(4.0, -0.5)?],
        ),
        "multi-synthetic" => (
            Setting {
                name: name.to_string(),
                type_ids: (0..5).map(|i| format!("type{i}")).collect(),
                weights: vec![
                    vec![1.0, 2.0, 3.0],
                    vec![1.0, 3.0, 2.0],
                    vec![4.0, 1.0, 5.0],
                    vec![1.0, 2.0, 0.5],
                    vec![3.0, 7.0, 5.0],
                ],
                budget_proportions: vec![1.0 / 3.0; 3],
                plan: ArrivalPlan::Stationary(
                    [1.5, 2.5, 3.5, 4.5, 5.5]
                        .iter()
                        .map(|&r| ArrivalModel::poisson(r))
                        .collect::<Result<_, _>>()?,
                ),
                delta: 0.1,
            },
            vec![LtRule::new(800.0, -1.0 / 3.0)?, LtRule::new(2200.0, -0.5)?],
        ),
        "single-fbst-style" => {
            let p = params.ok_or_else(|| HarnessError::MissingParams(name.to_string()))?;
            (
                Setting {
                    name: name.to_string(),
                    type_ids: vec!["type0".to_string()],
                    weights: vec![vec![1.0]],
                    budget_proportions: vec![1.0],
                    plan: ArrivalPlan::NormalSchedule {
                        rounds: p.rounds.iter().map(|r| (r.mu, r.sigma)).collect(),
                        fractions: vec![1.0],
                    },
                    delta: 0.1,
                },
                vec![LtRule::new(2.0, -1.0 / 3.0)?, LtRule::new(2.0, -0.5)?],
            )
        }
        "multi-fbst-style" => {
            let p = params.ok_or_else(|| HarnessError::MissingParams(name.to_string()))?;
            (
                Setting {
                    name: name.to_string(),
                    type_ids: vec![
                        "carnivore".to_string(),
                        "vegetarian".to_string(),
                        "prepared-only".to_string(),
                    ],
                    weights: vec![
                        vec![3.9, 3.0, 2.8, 2.7, 1.9],
                        vec![3.9, 3.0, 0.1, 2.7, 0.1],
                        vec![3.9, 3.0, 2.8, 2.7, 0.1],
                    ],
                    budget_proportions: vec![0.2; 5],
                    plan: ArrivalPlan::NormalSchedule {
                        rounds: p.rounds.iter().map(|r| (r.mu, r.sigma)).collect(),
                        fractions: vec![0.25, 0.3, 0.45],
                    },
                    delta: 0.1,
                },
                vec![LtRule::new(1200.0, -1.0 / 3.0)?, LtRule::new(3000.0, -0.5)?],
            )
        }
        other => return Err(HarnessError::UnknownSetting(other.to_string())),
    };
    Ok(ExperimentConfig {
        setting,
        t_values: DEFAULT_T_VALUES.to_vec(),
        runs: DEFAULT_RUNS,
        base_seed: 0,
        lt_rules: rules,
        policies: vec![PolicyKind::GuardedHope, PolicyKind::FixedThreshold],
        solver_tolerance: 1e-9,
    })
}

/// One (T, L_T rule, policy) cell of an experiment.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub rounds: usize,
    pub rule: LtRule,
    pub policy: PolicyKind,
    /// None when the guardrails could not be built (shrink factor outside (0,1)).
    pub aggregate: Option<AggregateMetrics>,
    pub runs: Vec<RunMetrics>,
    pub utility_gap_max: f64,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub cells: Vec<CellOutcome>,
    pub aggregate_csv: String,
    pub per_run_csv: String,
}

struct RuleState {
    rule: LtRule,
    rails: Option<Guardrails>,
}

/// Run the full experiment grid. `threads` limits the worker pool; runs are
/// reduced in run-index order, so output bytes do not depend on it.
pub fn run_experiment(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<ExperimentOutput, HarnessError> {
    if config.t_values.is_empty() {
        return Err(HarnessError::NoHorizons);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("rayon pool");

    let mut cells = Vec::new();
    for &rounds in &config.t_values {
        let horizon = config.setting.horizon(rounds)?;
        let budgets = config.setting.budgets(&horizon);
        let expected = horizon.expected_totals();
        let weights = &config.setting.weights;

        let mut rules = Vec::with_capacity(config.lt_rules.len());
        for &rule in &config.lt_rules {
            let l_t = rule.value(rounds);
            let rails = match guardrails::build_guardrails(
                &expected,
                weights,
                &budgets,
                &horizon,
                l_t,
                config.solver_tolerance,
            ) {
                Ok(r) => Some(r),
                Err(
                    GuardrailError::ShrinkNotPositive { .. }
                    | GuardrailError::ShrinkTooLarge { .. },
                ) => None,
                Err(GuardrailError::Market(e)) => return Err(PolicyError::Market(e).into()),
                Err(e) => {
                    return Err(HarnessError::BadCsv(format!(
                        "guardrail construction failed: {e}"
                    )))
                }
            };
            rules.push(RuleState { rule, rails });
        }

        // Per run: arrivals and the hindsight optimum are shared across every
        // rule and policy, so waste comparisons are paired.
        let run_results: Vec<Result<Vec<Option<RunMetrics>>, HarnessError>> = pool.install(|| {
            (0..config.runs)
                .into_par_iter()
                .map(|run| {
                    let seed = mix_seed(config.base_seed, rounds as u64, run as u64);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let arrivals = horizon.sample(&mut rng);
                    let conc = horizon.concentration_event(&arrivals);
                    let x_opt = policies::hindsight_optimal(
                        &arrivals,
                        weights,
                        &budgets,
                        config.solver_tolerance,
                    )?
                    .allocation;

                    let mut per_cell = Vec::new();
                    for state in &rules {
                        for &policy in &config.policies {
                            let Some(rails) = &state.rails else {
                                per_cell.push(None);
                                continue;
                            };
                            let mut trace = match policy {
                                PolicyKind::GuardedHope => policies::guarded_hope(
                                    rails, &horizon, &budgets, &arrivals, seed,
                                )?,
                                PolicyKind::FixedThreshold => policies::fixed_threshold(
                                    rails, &horizon, &budgets, &arrivals, seed,
                                )?,
                            };
                            trace.policy_name = policy.name().to_string();
                            per_cell.push(Some(metrics::run_metrics(
                                &trace,
                                &x_opt,
                                weights,
                                &budgets,
                                &config.setting.name,
                                state.rule.value(rounds),
                                conc,
                            )));
                        }
                    }
                    Ok(per_cell)
                })
                .collect()
        });

        let mut per_run: Vec<Vec<Option<RunMetrics>>> = Vec::with_capacity(config.runs);
        for r in run_results {
            per_run.push(r?);
        }

        for (ri, state) in rules.iter().enumerate() {
            for (pi, &policy) in config.policies.iter().enumerate() {
                let idx = ri * config.policies.len() + pi;
                let gap = state
                    .rails
                    .as_ref()
                    .map(|r| r.utility_gap_max())
                    .unwrap_or(f64::NAN);
                let runs: Vec<RunMetrics> = per_run
                    .iter()
                    .filter_map(|row| row[idx].clone())
                    .collect();
                let aggregate = if state.rails.is_some() && !runs.is_empty() {
                    Some(metrics::aggregate(&runs, gap)?)
                } else {
                    None
                };
                cells.push(CellOutcome {
                    rounds,
                    rule: state.rule,
                    policy,
                    aggregate,
                    runs,
                    utility_gap_max: gap,
                });
            }
        }
    }

    let aggregate_csv = render_aggregate_csv(&config.setting.name, &cells);
    let per_run_csv = render_per_run_csv(&cells);
    Ok(ExperimentOutput {
        cells,
        aggregate_csv,
        per_run_csv,
    })
}

fn render_aggregate_csv(setting: &str, cells: &[CellOutcome]) -> String {
    let mut out = String::from(
        "setting,policy,T,L_T_rule,runs,mean_delta_ef,mean_delta_eff,delta_ef_plus,mean_envy,mean_delta_prop,envy_violation_freq,feasible\n",
    );
    for cell in cells {
        match &cell.aggregate {
            Some(a) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},true",
                    setting,
                    cell.policy.name(),
                    cell.rounds,
                    cell.rule.label(),
                    a.runs,
                    a.mean_delta_ef,
                    a.mean_delta_eff,
                    a.delta_ef_plus,
                    a.mean_envy,
                    a.mean_delta_prop,
                    a.envy_violation_freq
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},0,,,,,,,false",
                    setting,
                    cell.policy.name(),
                    cell.rounds,
                    cell.rule.label()
                );
            }
        }
    }
    out
}

fn render_per_run_csv(cells: &[CellOutcome]) -> String {
    let mut out = String::from(
        "setting,policy,T,l_t,run,seed,delta_ef,delta_efficiency,envy,delta_prop,fallback_rounds,concentration_event\n",
    );
    for cell in cells {
        for (run, r) in cell.runs.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.setting,
                r.policy,
                r.rounds,
                r.l_t,
                run,
                r.seed,
                r.delta_ef,
                r.delta_efficiency,
                r.envy,
                r.delta_prop,
                r.fallback_rounds,
                r.concentration_event
            );
        }
    }
    out
}

pub fn write_outputs(output: &ExperimentOutput, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for (name, body) in [
        ("aggregate.csv", &output.aggregate_csv),
        ("per_run.csv", &output.per_run_csv),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
    pub points_dropped: usize,
}

/// Least-squares fit of log(metric) on log(T). Nonpositive metric values are
/// dropped (with a count reported) since they have no logarithm.
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit, HarnessError> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(t, m)| t > 0.0 && m > 0.0)
        .map(|&(t, m)| (t.ln(), m.ln()))
        .collect();
    let dropped = points.len() - usable.len();
    let mut distinct: Vec<f64> = usable.iter().map(|&(x, _)| x).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(HarnessError::TooFewPoints(distinct.len()));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let my = usable.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = usable.iter().map(|&(_, y)| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        points_used: usable.len(),
        points_dropped: dropped,
    })
}

/// Pull (T, metric) points for one policy out of an aggregate CSV body.
pub fn fit_points_from_csv(
    csv: &str,
    metric: &str,
    policy: &str,
) -> Result<Vec<(f64, f64)>, HarnessError> {
    let mut lines = csv.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::BadCsv("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let col = |name: &str| {
        cols.iter()
            .position(|&c| c == name)
            .ok_or_else(|| HarnessError::BadCsv(format!("missing column {name}")))
    };
    let metric_col = match metric {
        "waste" | "mean_delta_eff" => col("mean_delta_eff")?,
        "delta-ef" | "mean_delta_ef" => col("mean_delta_ef")?,
        "envy" | "mean_envy" => col("mean_envy")?,
        "delta-prop" | "mean_delta_prop" => col("mean_delta_prop")?,
        other => return Err(HarnessError::BadCsv(format!("unknown metric {other:?}"))),
    };
    let policy_col = col("policy")?;
    let t_col = col("T")?;
    let feasible_col = cols.iter().position(|&c| c == "feasible");

    let mut points = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields[policy_col] != policy {
            continue;
        }
        if let Some(fc) = feasible_col {
            if fields.get(fc).copied() != Some("true") {
                continue;
            }
        }
        let t: f64 = fields[t_col]
            .parse()
            .map_err(|_| HarnessError::BadCsv(format!("bad T value {:?}", fields[t_col])))?;
        let m: f64 = fields[metric_col]
            .parse()
            .map_err(|_| HarnessError::BadCsv(format!("bad metric value {:?}", fields[metric_col])))?;
        points.push((t, m));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn builtin_settings_shapes() {
        let multi = builtin_experiment("multi-synthetic", None).unwrap();
        assert_eq!(multi.setting.weights[2], vec![4.0, 1.0, 5.0]);
        assert_eq!(multi.setting.weights.len(), 5);
        assert_eq!(multi.runs, 200);

        let params = ParamsFile {
            rounds: vec![crate::config::RoundParams { mu: 10.0, sigma: 3.0 }],
        };
        let fbst = builtin_experiment("multi-fbst-style", Some(&params)).unwrap();
        assert_eq!(fbst.setting.weights[1], vec![3.9, 3.0, 0.1, 2.7, 0.1]);
        assert_eq!(fbst.setting.type_ids[1], "vegetarian");

        assert!(matches!(
            builtin_experiment("multi-fbst-style", None),
            Err(HarnessError::MissingParams(_))
        ));
        assert!(matches!(
            builtin_experiment("nope", None),
            Err(HarnessError::UnknownSetting(_))
        ));
    }

    #[test]
    fn budget_rule_single_synthetic() {
        // T=10, ClampedPoisson(1.5): B = 10 * (1.5 + e^{-1.5}).
        let cfg = builtin_experiment("single-synthetic", None).unwrap();
        let horizon = cfg.setting.horizon(10).unwrap();
        let budgets = cfg.setting.budgets(&horizon);
        assert_abs_diff_eq!(budgets[0], 10.0 * (1.5 + (-1.5f64).exp()), epsilon = 1e-9);
        assert_abs_diff_eq!(budgets[0], 17.231, epsilon = 1e-2);
    }

    #[test]
    fn deterministic_degenerate_experiment() {
        // Deterministic arrivals and w=1: guardrails collapse toward B/N and
        // both metrics should be tiny.
        let setting = Setting {
            name: "degenerate".to_string(),
            type_ids: vec!["a".to_string()],
            weights: vec![vec![1.0]],
            budget_proportions: vec![1.0],
            plan: ArrivalPlan::Stationary(vec![ArrivalModel::deterministic(2).unwrap()]),
            delta: 0.1,
        };
        let config = ExperimentConfig {
            setting,
            t_values: vec![20],
            runs: 1,
            base_seed: 3,
            lt_rules: vec![LtRule::new(0.5, -1.0 / 3.0).unwrap()],
            policies: vec![PolicyKind::GuardedHope],
            solver_tolerance: 1e-10,
        };
        let out = run_experiment(&config, Some(1)).unwrap();
        let agg = out.cells[0].aggregate.as_ref().unwrap();
        // Deterministic arrivals: conf width is 0, so X_upper scales exactly
        // like B/N does; guarded-hope tracks the optimum up to the shrink gap.
        assert!(agg.mean_delta_eff < 0.25 * 40.0, "waste {}", agg.mean_delta_eff);
        assert!(agg.mean_delta_ef < 0.5, "delta_ef {}", agg.mean_delta_ef);
    }

    #[test]
    fn experiment_is_reproducible_and_parallel_safe() {
        let config = {
            let mut c = builtin_experiment("single-synthetic", None).unwrap();
            c.t_values = vec![30];
            c.runs = 8;
            c.base_seed = 11;
            c.lt_rules.truncate(1);
            c
        };
        let serial = run_experiment(&config, Some(1)).unwrap();
        let parallel = run_experiment(&config, Some(4)).unwrap();
        assert_eq!(serial.aggregate_csv, parallel.aggregate_csv);
        assert_eq!(serial.per_run_csv, parallel.per_run_csv);
        let again = run_experiment(&config, None).unwrap();
        assert_eq!(serial.aggregate_csv, again.aggregate_csv);
    }

    #[test]
    fn infeasible_rule_marked_not_fatal() {
        let mut config = builtin_experiment("single-synthetic", None).unwrap();
        config.t_values = vec![30];
        config.runs = 2;
        // Huge coefficient: L_T >= 1 makes c >= 1.
        config.lt_rules = vec![LtRule::new(50.0, -1.0 / 3.0).unwrap()];
        let out = run_experiment(&config, Some(1)).unwrap();
        assert!(out.cells.iter().all(|c| c.aggregate.is_none()));
        assert!(out.aggregate_csv.contains(",false"));
    }

    #[test]
    fn scaling_fit_exact_power_laws() {
        let pts: Vec<(f64, f64)> = [100.0, 200.0, 400.0, 800.0]
            .iter()
            .map(|&t: &f64| (t, t.powf(1.0 / 3.0)))
            .collect();
        let fit = scaling_fit(&pts).unwrap();
        assert_abs_diff_eq!(fit.slope, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);

        let flat: Vec<(f64, f64)> = [100.0, 200.0, 400.0].iter().map(|&t| (t, 5.0)).collect();
        let fit2 = scaling_fit(&flat).unwrap();
        assert_abs_diff_eq!(fit2.slope, 0.0, epsilon = 1e-12);

        // Nonpositive rows are dropped; too few points is an error.
        let bad = vec![(100.0, 1.0), (200.0, 0.0), (400.0, -1.0)];
        assert!(matches!(
            scaling_fit(&bad),
            Err(HarnessError::TooFewPoints(1))
        ));
    }

    #[test]
    fn csv_point_extraction() {
        let csv = "setting,policy,T,L_T_rule,runs,mean_delta_ef,mean_delta_eff,delta_ef_plus,mean_envy,mean_delta_prop,envy_violation_freq,feasible\n\
                   s,guarded-hope,100,r,5,0.1,2.0,0.1,0.0,0.0,0.0,true\n\
                   s,fixed-threshold,100,r,5,0.2,4.0,0.2,0.0,0.0,0.0,true\n\
                   s,guarded-hope,200,r,0,,,,,,,false\n";
        let pts = fit_points_from_csv(csv, "waste", "guarded-hope").unwrap();
        assert_eq!(pts, vec![(100.0, 2.0)]);
    }

    #[test]
    fn lt_rule_validation() {
        assert!(LtRule::new(2.0, -1.0 / 3.0).is_ok());
        assert!(matches!(LtRule::new(2.0, 0.5), Err(HarnessError::BadExponent(_))));
        assert!(matches!(LtRule::new(2.0, -0.7), Err(HarnessError::BadExponent(_))));
        let r = LtRule::new(2.0, -0.5).unwrap();
        assert_abs_diff_eq!(r.value(100), 0.2, epsilon = 1e-12);
    }
}
