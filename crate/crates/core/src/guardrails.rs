//! Upper/lower allocation guardrails built from expected demands, confidence
//! widths and an envy budget `L_T`.
//!
//! The upper threshold is the Eisenberg-Gale solution at deflated counts
//! `(1-c) E[N]`, the lower one the solution at inflated counts
//! `(1+gamma) E[N]`; monotonicity sandwiches the hindsight optimum between
//! the two utility profiles.

use crate::arrivals::HorizonSpec;
use crate::market::{self, EGSolution, MarketError, MarketInstance, TypeSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GuardrailError {
    #[error("shrink factor c = {c:.6} <= 0: envy budget L_T = {l_t} is below feasibility for this horizon")]
    ShrinkNotPositive { c: f64, l_t: f64 },
    #[error("shrink factor c = {c:.6} >= 1: envy budget L_T = {l_t} is absurdly large for this horizon")]
    ShrinkTooLarge { c: f64, l_t: f64 },
    #[error("expected count for type {0} is not strictly positive")]
    BadExpectedCount(usize),
    #[error("{got} expected counts for {expected} types")]
    CountMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Market(#[from] MarketError),
}

/// Pessimistic shrink factor
/// `c = (w_min * beta_min / w_inf^2) * L_T * (1 + gamma) - gamma`.
/// Errors when the result leaves (0,1).
pub fn compute_c(
    l_t: f64,
    gamma: f64,
    w_min: f64,
    w_inf: f64,
    beta_min: f64,
) -> Result<f64, GuardrailError> {
    let c = (w_min * beta_min / (w_inf * w_inf)) * l_t * (1.0 + gamma) - gamma;
    if c <= 0.0 {
        Err(GuardrailError::ShrinkNotPositive { c, l_t })
    } else if c >= 1.0 {
        Err(GuardrailError::ShrinkTooLarge { c, l_t })
    } else {
        Ok(c)
    }
}

/// Smallest envy budget the concentration construction supports:
/// `2 (w_inf^2 / (w_min * beta_min)) * max_theta Conf_0 / E[N_theta]`.
pub fn min_feasible_lt(gamma: f64, w_min: f64, w_inf: f64, beta_min: f64) -> f64 {
    2.0 * (w_inf * w_inf / (w_min * beta_min)) * gamma
}

/// Allocation thresholds plus the parameters they were built from.
#[derive(Debug, Clone)]
pub struct Guardrails {
    pub l_t: f64,
    pub gamma: f64,
    pub c: f64,
    pub n_upper: Vec<f64>,
    pub n_lower: Vec<f64>,
    /// Solved at `n_lower`; the optimistic per-individual thresholds.
    pub x_upper: Vec<Vec<f64>>,
    /// Solved at `n_upper`; the pessimistic per-individual thresholds.
    pub x_lower: Vec<Vec<f64>>,
    pub utility_gap: Vec<f64>,
    /// Eisenberg-Gale solve at `n_lower` (prices back the gap identity).
    pub upper_solution: EGSolution,
    /// Eisenberg-Gale solve at `n_upper`.
    pub lower_solution: EGSolution,
    pub diagnostics: GuardrailDiagnostics,
}

/// Side information reported with every build; bound violations here are
/// logged by callers, not fatal.
#[derive(Debug, Clone)]
pub struct GuardrailDiagnostics {
    pub min_feasible_lt: f64,
    pub lt_meets_min: bool,
    pub alloc_gap: f64,
    pub alloc_gap_lower_bound: f64,
    pub alloc_gap_upper_bound: f64,
    pub alloc_gap_bounds_hold: bool,
}

impl Guardrails {
    pub fn utility_gap_max(&self) -> f64 {
        self.utility_gap.iter().copied().fold(0.0, f64::max)
    }

    /// `max |X_upper - X_lower|` over all entries.
    pub fn alloc_gap(&self) -> f64 {
        self.x_upper
            .iter()
            .zip(&self.x_lower)
            .flat_map(|(u, l)| u.iter().zip(l).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

/// Build guardrails: gamma from the horizon's round-zero confidence width, c
/// from `compute_c`, then exactly two Eisenberg-Gale solves.
pub fn build_guardrails(
    expected_counts: &[f64],
    weights: &[Vec<f64>],
    budgets: &[f64],
    horizon: &HorizonSpec,
    l_t: f64,
    solver_tolerance: f64,
) -> Result<Guardrails, GuardrailError> {
    if expected_counts.len() != weights.len() {
        return Err(GuardrailError::CountMismatch {
            got: expected_counts.len(),
            expected: weights.len(),
        });
    }
    for (th, &n) in expected_counts.iter().enumerate() {
        if !(n > 0.0) {
            return Err(GuardrailError::BadExpectedCount(th));
        }
    }

    let gamma = expected_counts
        .iter()
        .enumerate()
        .map(|(th, &n)| horizon.conf(0, th) / n)
        .fold(0.0, f64::max);

    let base = MarketInstance::new(
        budgets.to_vec(),
        weights
            .iter()
            .zip(expected_counts)
            .enumerate()
            .map(|(th, (w, &n))| TypeSpec {
                id: format!("type{th}"),
                weights: w.clone(),
                count: n,
            })
            .collect(),
    )?;
    // beta_avg of the expected instance, per the model definition.
    let w_min = base.w_min();
    let w_inf = base.w_inf();
    let beta_min = base.beta_avg_min();

    let c = compute_c(l_t, gamma, w_min, w_inf, beta_min)?;
    let n_upper: Vec<f64> = expected_counts.iter().map(|&n| (1.0 + gamma) * n).collect();
    let n_lower: Vec<f64> = expected_counts.iter().map(|&n| (1.0 - c) * n).collect();

    let max_iters = 500_000;
    let upper_solution = market::solve_eg(&base.with_counts(&n_lower)?, solver_tolerance, max_iters)?;
    let lower_solution = market::solve_eg(&base.with_counts(&n_upper)?, solver_tolerance, max_iters)?;

    let utility_gap: Vec<f64> = upper_solution
        .utilities
        .iter()
        .zip(&lower_solution.utilities)
        .map(|(hi, lo)| hi - lo)
        .collect();

    let min_lt = min_feasible_lt(gamma, w_min, w_inf, beta_min);
    let beta_min_sq = beta_min * beta_min;
    let b_inf = budgets.iter().copied().fold(0.0, f64::max);
    let alloc_gap_lower = l_t * beta_min_sq * w_min / w_inf;
    let alloc_gap_upper = l_t * b_inf * beta_min * w_min / w_inf;

    let mut rails = Guardrails {
        l_t,
        gamma,
        c,
        n_upper,
        n_lower,
        x_upper: upper_solution.allocation.clone(),
        x_lower: lower_solution.allocation.clone(),
        utility_gap,
        upper_solution,
        lower_solution,
        diagnostics: GuardrailDiagnostics {
            min_feasible_lt: min_lt,
            lt_meets_min: l_t >= min_lt,
            alloc_gap: 0.0,
            alloc_gap_lower_bound: alloc_gap_lower,
            alloc_gap_upper_bound: alloc_gap_upper,
            alloc_gap_bounds_hold: false,
        },
    };
    let gap = rails.alloc_gap();
    rails.diagnostics.alloc_gap = gap;
    rails.diagnostics.alloc_gap_bounds_hold =
        gap >= alloc_gap_lower - 1e-9 && gap <= alloc_gap_upper + 1e-9;
    Ok(rails)
}
