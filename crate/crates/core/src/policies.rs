//! Online allocation policies over a realized arrival matrix: the guarded
//! adaptive-threshold policy, the fixed lower-threshold baseline, and the
//! hindsight optimal solve.

use crate::arrivals::HorizonSpec;
use crate::guardrails::Guardrails;
use crate::market::{self, EGSolution, MarketError, MarketInstance, TypeSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("arrivals shape {rounds}x{types} does not match horizon {exp_rounds}x{exp_types}")]
    ShapeMismatch {
        rounds: usize,
        types: usize,
        exp_rounds: usize,
        exp_types: usize,
    },
    #[error("guardrails cover {got} types / {got_k} resources but budgets/arrivals imply {expected} / {expected_k}")]
    GuardrailMismatch {
        got: usize,
        got_k: usize,
        expected: usize,
        expected_k: usize,
    },
    #[error(transparent)]
    Market(#[from] MarketError),
}

/// Which branch fired for a (round, resource) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Not enough budget left for the lower threshold; split per capita.
    Fallback,
    Upper,
    Lower,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Fallback => "fallback",
            Branch::Upper => "upper",
            Branch::Lower => "lower",
        }
    }
}

/// Full record of one policy run.
#[derive(Debug, Clone)]
pub struct AllocationTrace {
    pub arrivals: Vec<Vec<u64>>,          // T x |Theta|
    pub allocations: Vec<Vec<Vec<f64>>>,  // T x |Theta| x K
    pub budget_path: Vec<Vec<f64>>,       // (T+1) x K
    pub branch: Vec<Vec<Branch>>,         // T x K
    pub policy_name: String,
    pub seed: u64,
}

impl AllocationTrace {
    pub fn rounds(&self) -> usize {
        self.arrivals.len()
    }

    pub fn num_types(&self) -> usize {
        self.arrivals.first().map_or(0, |r| r.len())
    }

    pub fn num_resources(&self) -> usize {
        self.budget_path.first().map_or(0, |r| r.len())
    }

    /// Leftover budget after the horizon, summed over resources.
    pub fn waste(&self) -> f64 {
        self.budget_path.last().map_or(0.0, |b| b.iter().sum())
    }

    pub fn fallback_rounds(&self) -> usize {
        self.branch
            .iter()
            .filter(|row| row.iter().any(|&b| b == Branch::Fallback))
            .count()
    }
}

fn check_shapes(
    guardrails: &Guardrails,
    horizon: &HorizonSpec,
    budgets: &[f64],
    arrivals: &[Vec<u64>],
) -> Result<(), PolicyError> {
    let tt = horizon.num_types();
    let kk = budgets.len();
    if arrivals.len() != horizon.rounds() || arrivals.iter().any(|r| r.len() != tt) {
        return Err(PolicyError::ShapeMismatch {
            rounds: arrivals.len(),
            types: arrivals.first().map_or(0, |r| r.len()),
            exp_rounds: horizon.rounds(),
            exp_types: tt,
        });
    }
    let got = guardrails.x_lower.len();
    let got_k = guardrails.x_lower.first().map_or(0, |r| r.len());
    if got != tt || got_k != kk {
        return Err(PolicyError::GuardrailMismatch {
            got,
            got_k,
            expected: tt,
            expected_k: kk,
        });
    }
    Ok(())
}

/// The three-way guarded policy: per resource and round, fall back to a per
/// capita split when the lower threshold no longer fits, allocate the upper
/// threshold while the remaining budget also covers the lower threshold for
/// all plausible future demand, otherwise allocate the lower threshold.
pub fn guarded_hope(
    guardrails: &Guardrails,
    horizon: &HorizonSpec,
    budgets: &[f64],
    arrivals: &[Vec<u64>],
    seed: u64,
) -> Result<AllocationTrace, PolicyError> {
    check_shapes(guardrails, horizon, budgets, arrivals)?;
    let tt = horizon.num_types();
    let kk = budgets.len();
    let rounds = horizon.rounds();

    let mut budget_path = Vec::with_capacity(rounds + 1);
    budget_path.push(budgets.to_vec());
    let mut allocations = Vec::with_capacity(rounds);
    let mut branch_log = Vec::with_capacity(rounds);

    for t in 0..rounds {
        let n_t: Vec<f64> = (0..tt).map(|th| arrivals[t][th] as f64).collect();
        let n_total: f64 = n_t.iter().sum();
        let budget = budget_path[t].clone();
        let mut alloc = vec![vec![0.0f64; kk]; tt];
        let mut branches = Vec::with_capacity(kk);

        for k in 0..kk {
            let lower_need: f64 = (0..tt).map(|th| n_t[th] * guardrails.x_lower[th][k]).sum();
            let branch = if budget[k] < lower_need {
                for row in alloc.iter_mut() {
                    row[k] = budget[k] / n_total;
                }
                Branch::Fallback
            } else {
                let upper_need: f64 = (0..tt).map(|th| n_t[th] * guardrails.x_upper[th][k]).sum();
                let reserve: f64 = (0..tt)
                    .map(|th| {
                        guardrails.x_lower[th][k]
                            * (horizon.tail_mean(t + 1, th) + horizon.conf(t + 1, th))
                    })
                    .sum();
                if budget[k] - upper_need >= reserve {
                    for (th, row) in alloc.iter_mut().enumerate() {
                        row[k] = guardrails.x_upper[th][k];
                    }
                    Branch::Upper
                } else {
                    for (th, row) in alloc.iter_mut().enumerate() {
                        row[k] = guardrails.x_lower[th][k];
                    }
                    Branch::Lower
                }
            };
            branches.push(branch);
        }

        let next = spend(&budget, &alloc, &n_t);
        budget_path.push(next);
        allocations.push(alloc);
        branch_log.push(branches);
    }

    Ok(AllocationTrace {
        arrivals: arrivals.to_vec(),
        allocations,
        budget_path,
        branch: branch_log,
        policy_name: "guarded-hope".to_string(),
        seed,
    })
}

/// Baseline: allocate the lower threshold every round; on the round a
/// resource can no longer cover it, split that resource per capita and
/// allocate zero afterwards.
pub fn fixed_threshold(
    guardrails: &Guardrails,
    horizon: &HorizonSpec,
    budgets: &[f64],
    arrivals: &[Vec<u64>],
    seed: u64,
) -> Result<AllocationTrace, PolicyError> {
    check_shapes(guardrails, horizon, budgets, arrivals)?;
    let tt = horizon.num_types();
    let kk = budgets.len();
    let rounds = horizon.rounds();

    let mut budget_path = Vec::with_capacity(rounds + 1);
    budget_path.push(budgets.to_vec());
    let mut allocations = Vec::with_capacity(rounds);
    let mut branch_log = Vec::with_capacity(rounds);
    let mut exhausted = vec![false; kk];

    for t in 0..rounds {
        let n_t: Vec<f64> = (0..tt).map(|th| arrivals[t][th] as f64).collect();
        let n_total: f64 = n_t.iter().sum();
        let budget = budget_path[t].clone();
        let mut alloc = vec![vec![0.0f64; kk]; tt];
        let mut branches = Vec::with_capacity(kk);

        for k in 0..kk {
            let lower_need: f64 = (0..tt).map(|th| n_t[th] * guardrails.x_lower[th][k]).sum();
            let branch = if exhausted[k] {
                Branch::Fallback
            } else if budget[k] < lower_need {
                for row in alloc.iter_mut() {
                    row[k] = budget[k] / n_total;
                }
                exhausted[k] = true;
                Branch::Fallback
            } else {
                for (th, row) in alloc.iter_mut().enumerate() {
                    row[k] = guardrails.x_lower[th][k];
                }
                Branch::Lower
            };
            branches.push(branch);
        }

        let next = spend(&budget, &alloc, &n_t);
        budget_path.push(next);
        allocations.push(alloc);
        branch_log.push(branches);
    }

    Ok(AllocationTrace {
        arrivals: arrivals.to_vec(),
        allocations,
        budget_path,
        branch: branch_log,
        policy_name: "fixed-threshold".to_string(),
        seed,
    })
}

fn spend(budget: &[f64], alloc: &[Vec<f64>], n_t: &[f64]) -> Vec<f64> {
    budget
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            let spent: f64 = alloc.iter().zip(n_t).map(|(row, &n)| n * row[k]).sum();
            let next = b - spent;
            // Per-capita fallback can leave a one-ulp negative.
            if next < 0.0 && next > -1e-9 * b.max(1.0) {
                0.0
            } else {
                next
            }
        })
        .collect()
}

/// Offline optimal fair allocation at the realized totals; per-type and
/// round-independent by construction.
pub fn hindsight_optimal(
    arrivals: &[Vec<u64>],
    weights: &[Vec<f64>],
    budgets: &[f64],
    solver_tolerance: f64,
) -> Result<EGSolution, PolicyError> {
    let tt = weights.len();
    let totals: Vec<f64> = (0..tt)
        .map(|th| arrivals.iter().map(|row| row[th] as f64).sum())
        .collect();
    let instance = MarketInstance::new(
        budgets.to_vec(),
        weights
            .iter()
            .zip(&totals)
            .enumerate()
            .map(|(th, (w, &n))| TypeSpec {
                id: format!("type{th}"),
                weights: w.clone(),
                count: n,
            })
            .collect(),
    )?;
    Ok(market::solve_eg(&instance, solver_tolerance, 500_000)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrivals::ArrivalModel;
    use crate::market::EGSolution;
    use approx::assert_abs_diff_eq;

    /// Hand-built guardrails without going through the construction.
    pub fn raw_guardrails(x_lower: Vec<Vec<f64>>, x_upper: Vec<Vec<f64>>) -> Guardrails {
        let dummy = EGSolution {
            allocation: vec![],
            prices: vec![],
            utilities: vec![],
            kkt_residual: 0.0,
            iterations: 0,
        };
        let gap: Vec<f64> = x_upper
            .iter()
            .zip(&x_lower)
            .map(|(u, l)| u[0] - l[0])
            .collect();
        Guardrails {
            l_t: 0.0,
            gamma: 0.0,
            c: 0.0,
            n_upper: vec![],
            n_lower: vec![],
            x_upper,
            x_lower,
            utility_gap: gap,
            upper_solution: dummy.clone(),
            lower_solution: dummy,
            diagnostics: crate::guardrails::GuardrailDiagnostics {
                min_feasible_lt: 0.0,
                lt_meets_min: true,
                alloc_gap: 0.0,
                alloc_gap_lower_bound: 0.0,
                alloc_gap_upper_bound: 0.0,
                alloc_gap_bounds_hold: true,
            },
        }
    }

    fn hand_horizon() -> HorizonSpec {
        // Deterministic(1) arrivals, T=3: tail means (2,1,0) after rounds 1..3
        // and Conf == 0 everywhere.
        HorizonSpec::replicated(3, 0.1, vec![ArrivalModel::deterministic(1).unwrap()]).unwrap()
    }

    #[test]
    fn guarded_hope_hand_trace() {
        let rails = raw_guardrails(vec![vec![0.9]], vec![vec![1.2]]);
        let arrivals = vec![vec![1], vec![1], vec![1]];
        let trace = guarded_hope(&rails, &hand_horizon(), &[4.0], &arrivals, 0).unwrap();
        for t in 0..3 {
            assert_eq!(trace.branch[t][0], Branch::Upper);
            assert_abs_diff_eq!(trace.allocations[t][0][0], 1.2, epsilon = 1e-12);
        }
        let path: Vec<f64> = trace.budget_path.iter().map(|b| b[0]).collect();
        assert_abs_diff_eq!(path[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(path[1], 2.8, epsilon = 1e-12);
        assert_abs_diff_eq!(path[2], 1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(path[3], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(trace.waste(), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn guarded_hope_fallback_on_shortfall() {
        let rails = raw_guardrails(vec![vec![0.9]], vec![vec![1.2]]);
        let arrivals = vec![vec![1], vec![1], vec![1]];
        let trace = guarded_hope(&rails, &hand_horizon(), &[0.5], &arrivals, 0).unwrap();
        assert_eq!(trace.branch[0][0], Branch::Fallback);
        assert_abs_diff_eq!(trace.allocations[0][0][0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn guarded_hope_degenerate_guardrails_zero_waste() {
        // X_upper = X_lower = B/N with deterministic arrivals: all Upper, no waste.
        let horizon =
            HorizonSpec::replicated(3, 0.1, vec![ArrivalModel::deterministic(2).unwrap()])
                .unwrap();
        let rails = raw_guardrails(vec![vec![2.0]], vec![vec![2.0]]);
        let arrivals = vec![vec![2], vec![2], vec![2]];
        let trace = guarded_hope(&rails, &horizon, &[12.0], &arrivals, 0).unwrap();
        for t in 0..3 {
            assert_eq!(trace.branch[t][0], Branch::Upper);
        }
        assert_abs_diff_eq!(trace.waste(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fixed_threshold_hand_trace() {
        let rails = raw_guardrails(vec![vec![0.9]], vec![vec![1.2]]);
        let arrivals = vec![vec![1], vec![1], vec![1]];
        let trace = fixed_threshold(&rails, &hand_horizon(), &[4.0], &arrivals, 0).unwrap();
        for t in 0..3 {
            assert_eq!(trace.branch[t][0], Branch::Lower);
            assert_abs_diff_eq!(trace.allocations[t][0][0], 0.9, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(trace.waste(), 4.0 - 2.7, epsilon = 1e-12);
    }

    #[test]
    fn fixed_threshold_exhaustion() {
        let rails = raw_guardrails(vec![vec![0.9]], vec![vec![1.2]]);
        let arrivals = vec![vec![1], vec![1], vec![1]];
        let trace = fixed_threshold(&rails, &hand_horizon(), &[0.5], &arrivals, 0).unwrap();
        assert_abs_diff_eq!(trace.allocations[0][0][0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(trace.allocations[1][0][0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace.allocations[2][0][0], 0.0, epsilon = 1e-12);
        assert_eq!(trace.fallback_rounds(), 3);
    }

    #[test]
    fn fixed_threshold_exact_budget_zero_waste() {
        let horizon =
            HorizonSpec::replicated(3, 0.1, vec![ArrivalModel::deterministic(2).unwrap()])
                .unwrap();
        let rails = raw_guardrails(vec![vec![2.0]], vec![vec![2.0]]);
        let arrivals = vec![vec![2], vec![2], vec![2]];
        let trace = fixed_threshold(&rails, &horizon, &[12.0], &arrivals, 0).unwrap();
        assert_abs_diff_eq!(trace.waste(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let rails = raw_guardrails(vec![vec![0.9]], vec![vec![1.2]]);
        let arrivals = vec![vec![1], vec![1]];
        assert!(matches!(
            guarded_hope(&rails, &hand_horizon(), &[4.0], &arrivals, 0),
            Err(PolicyError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn hindsight_optimal_examples() {
        // Single type/resource, totals 5, B=10.
        let arrivals = vec![vec![2], vec![2], vec![1]];
        let sol = hindsight_optimal(&arrivals, &[vec![1.0]], &[10.0], 1e-10).unwrap();
        assert_abs_diff_eq!(sol.allocation[0][0], 2.0, epsilon = 1e-8);

        // Crossed weights, totals (1,1), B=[1,1].
        let arrivals2 = vec![vec![1, 1]];
        let sol2 = hindsight_optimal(
            &arrivals2,
            &[vec![2.0, 1.0], vec![1.0, 2.0]],
            &[1.0, 1.0],
            1e-10,
        )
        .unwrap();
        assert_abs_diff_eq!(sol2.allocation[0][0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol2.allocation[1][1], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn trace_conservation() {
        let rails = raw_guardrails(vec![vec![0.9]], vec![vec![1.2]]);
        let arrivals = vec![vec![2], vec![3], vec![1]];
        let horizon = hand_horizon();
        for trace in [
            guarded_hope(&rails, &horizon, &[6.0], &arrivals, 0).unwrap(),
            fixed_threshold(&rails, &horizon, &[6.0], &arrivals, 0).unwrap(),
        ] {
            let spent: f64 = (0..3)
                .map(|t| trace.arrivals[t][0] as f64 * trace.allocations[t][0][0])
                .sum();
            assert_abs_diff_eq!(spent + trace.waste(), 6.0, epsilon = 1e-9);
        }
    }
}
