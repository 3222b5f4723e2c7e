//! Fairness and efficiency metrics for a realized allocation trace, plus
//! aggregation over Monte-Carlo runs.

use crate::market::dot;
use crate::policies::AllocationTrace;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("cannot aggregate an empty report list")]
    Empty,
    #[error("reports mix configurations: {0}")]
    MixedConfigurations(String),
}

/// Per-run metrics plus the per-(round, type) utility differences needed for
/// the ex-ante aggregate.
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub policy: String,
    pub setting: String,
    pub rounds: usize,
    pub l_t: f64,
    pub seed: u64,
    pub delta_ef: f64,
    pub delta_efficiency: f64,
    pub envy: f64,
    pub delta_prop: f64,
    pub fallback_rounds: usize,
    pub concentration_event: bool,
    /// |u(X^alg_{t,theta}) - u(X^opt_theta)| for every round and type.
    pub ef_diffs: Vec<Vec<f64>>,
}

/// Aggregate over runs sharing one (setting, policy, T, L_T) cell.
#[derive(Debug, Clone)]
pub struct AggregateMetrics {
    pub policy: String,
    pub setting: String,
    pub rounds: usize,
    pub l_t: f64,
    pub runs: usize,
    pub mean_delta_ef: f64,
    pub mean_delta_eff: f64,
    /// max over (t, theta) of the mean-over-runs absolute utility difference.
    pub delta_ef_plus: f64,
    pub mean_envy: f64,
    pub mean_delta_prop: f64,
    /// Fraction of runs where delta_ef exceeded the guardrail utility gap.
    pub envy_violation_freq: f64,
}

/// Max over rounds and types of |u(X^alg_{t,theta}) - u(X^opt_theta)|, where
/// x_opt is the per-type hindsight allocation.
pub fn counterfactual_envy(
    trace: &AllocationTrace,
    x_opt: &[Vec<f64>],
    weights: &[Vec<f64>],
) -> f64 {
    ef_differences(trace, x_opt, weights)
        .iter()
        .flatten()
        .fold(0.0, |m, &d| m.max(d))
}

/// The per-(t, theta) absolute utility differences behind counterfactual_envy.
pub fn ef_differences(
    trace: &AllocationTrace,
    x_opt: &[Vec<f64>],
    weights: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let opt_utils: Vec<f64> = weights
        .iter()
        .zip(x_opt)
        .map(|(w, x)| dot(w, x))
        .collect();
    trace
        .allocations
        .iter()
        .map(|round| {
            round
                .iter()
                .enumerate()
                .map(|(th, x)| (dot(&weights[th], x) - opt_utils[th]).abs())
                .collect()
        })
        .collect()
}

/// Total leftover budget across resources.
pub fn efficiency_gap(trace: &AllocationTrace) -> f64 {
    trace.waste()
}

/// Max over (t, theta, t', theta') of u_theta(X_{t',theta'}) - u_theta(X_{t,theta}).
/// Computed as max_theta [max over cells of u_theta(cell) - min_t u_theta(own cell)],
/// which is linear in T instead of quadratic.
pub fn hindsight_envy(trace: &AllocationTrace, weights: &[Vec<f64>]) -> f64 {
    let tt = trace.num_types();
    let mut worst = 0.0f64; // the (t,theta)=(t',theta') pair pins this at >= 0
    for (th, w) in weights.iter().enumerate().take(tt) {
        let mut best_other = f64::NEG_INFINITY;
        let mut worst_own = f64::INFINITY;
        for round in &trace.allocations {
            for cell in round {
                best_other = best_other.max(dot(w, cell));
            }
            worst_own = worst_own.min(dot(w, &round[th]));
        }
        worst = worst.max(best_other - worst_own);
    }
    worst
}

/// Max over (t, theta) of u_theta(B/N) - u_theta(X_{t,theta}) with N the total
/// realized arrivals.
pub fn prop_gap(trace: &AllocationTrace, weights: &[Vec<f64>], budgets: &[f64]) -> f64 {
    let n_total: f64 = trace.arrivals.iter().flatten().map(|&n| n as f64).sum();
    let fair_share: Vec<f64> = budgets.iter().map(|b| b / n_total).collect();
    let mut worst = f64::NEG_INFINITY;
    for (th, w) in weights.iter().enumerate() {
        let share_util = dot(w, &fair_share);
        for round in &trace.allocations {
            worst = worst.max(share_util - dot(w, &round[th]));
        }
    }
    worst
}

/// Build the full per-run report from a trace and the hindsight optimum.
#[allow(clippy::too_many_arguments)]
pub fn run_metrics(
    trace: &AllocationTrace,
    x_opt: &[Vec<f64>],
    weights: &[Vec<f64>],
    budgets: &[f64],
    setting: &str,
    l_t: f64,
    concentration_event: bool,
) -> RunMetrics {
    let ef_diffs = ef_differences(trace, x_opt, weights);
    let delta_ef = ef_diffs.iter().flatten().fold(0.0f64, |m, &d| m.max(d));
    RunMetrics {
        policy: trace.policy_name.clone(),
        setting: setting.to_string(),
        rounds: trace.rounds(),
        l_t,
        seed: trace.seed,
        delta_ef,
        delta_efficiency: efficiency_gap(trace),
        envy: hindsight_envy(trace, weights),
        delta_prop: prop_gap(trace, weights, budgets),
        fallback_rounds: trace.fallback_rounds(),
        concentration_event,
        ef_diffs,
    }
}

/// Aggregate runs from one experiment cell. `utility_gap_max` is the
/// guardrail bound used for the violation frequency.
pub fn aggregate(reports: &[RunMetrics], utility_gap_max: f64) -> Result<AggregateMetrics, MetricsError> {
    let first = reports.first().ok_or(MetricsError::Empty)?;
    for r in reports {
        if r.policy != first.policy
            || r.setting != first.setting
            || r.rounds != first.rounds
            || r.l_t != first.l_t
        {
            return Err(MetricsError::MixedConfigurations(format!(
                "({}, {}, T={}, L_T={}) vs ({}, {}, T={}, L_T={})",
                first.setting, first.policy, first.rounds, first.l_t,
                r.setting, r.policy, r.rounds, r.l_t
            )));
        }
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&RunMetrics) -> f64| reports.iter().map(f).sum::<f64>() / n;

    // Mean over runs of |utility difference| per cell, then max over cells.
    // Arrival counts vary per run only through allocations; the (t, theta)
    // grid itself is fixed by (T, |Theta|).
    let mut delta_ef_plus = 0.0f64;
    let tt = first.ef_diffs.first().map_or(0, |r| r.len());
    for t in 0..first.rounds {
        for th in 0..tt {
            let m: f64 = reports.iter().map(|r| r.ef_diffs[t][th]).sum::<f64>() / n;
            delta_ef_plus = delta_ef_plus.max(m);
        }
    }

    let violations = reports.iter().filter(|r| r.delta_ef > utility_gap_max).count();

    Ok(AggregateMetrics {
        policy: first.policy.clone(),
        setting: first.setting.clone(),
        rounds: first.rounds,
        l_t: first.l_t,
        runs: reports.len(),
        mean_delta_ef: mean(|r| r.delta_ef),
        mean_delta_eff: mean(|r| r.delta_efficiency),
        delta_ef_plus,
        mean_envy: mean(|r| r.envy),
        mean_delta_prop: mean(|r| r.delta_prop),
        envy_violation_freq: violations as f64 / n,
    })
}
