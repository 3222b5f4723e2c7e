//! Linear Fisher market / Eisenberg-Gale solver.
//!
//! Solves `max Σ_θ N_θ log⟨w_θ, x_θ⟩ s.t. Σ_θ N_θ x_θ ≤ B, x ≥ 0` via
//! proportional-response dynamics on per-type money splits, and certifies the
//! result through its KKT residual. A price-grid brute-force oracle is
//! provided for cross-checking on small instances.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("instance must have at least one resource and one type")]
    Empty,
    #[error("budget {index} is not strictly positive: {value}")]
    NonPositiveBudget { index: usize, value: f64 },
    #[error("type {type_id}: weight {index} is not strictly positive: {value}")]
    NonPositiveWeight {
        type_id: String,
        index: usize,
        value: f64,
    },
    #[error("type {type_id}: count is not strictly positive: {value}")]
    NonPositiveCount { type_id: String, value: f64 },
    #[error("type {type_id}: expected {expected} weights, got {got}")]
    WeightDimension {
        type_id: String,
        expected: usize,
        got: usize,
    },
    #[error("candidate dimensions ({types}x{resources}) do not match instance ({exp_types}x{exp_resources})")]
    DimensionMismatch {
        types: usize,
        resources: usize,
        exp_types: usize,
        exp_resources: usize,
    },
    #[error("solver did not reach residual {tolerance:e} within {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence {
        tolerance: f64,
        iterations: usize,
        best_residual: f64,
    },
    #[error("allocation gives zero utility to type {type_id}")]
    ZeroUtility { type_id: String },
    #[error("brute-force oracle refuses instance with {resources} resources and {types} types (limits: K <= 2, |Theta| <= 3)")]
    OracleTooLarge { resources: usize, types: usize },
}

/// One demand type: a preference vector over the `K` resources and a
/// (real-valued) head count. Counts are allowed to be fractional because
/// guardrail construction solves at scaled counts.
#[derive(Debug, Clone)]
pub struct TypeSpec {
    pub id: String,
    pub weights: Vec<f64>,
    pub count: f64,
}

/// Market instance: per-resource budgets plus the list of demand types.
#[derive(Debug, Clone)]
pub struct MarketInstance {
    budgets: Vec<f64>,
    types: Vec<TypeSpec>,
}

impl MarketInstance {
    pub fn new(budgets: Vec<f64>, types: Vec<TypeSpec>) -> Result<Self, MarketError> {
        if budgets.is_empty() || types.is_empty() {
            return Err(MarketError::Empty);
        }
        for (k, &b) in budgets.iter().enumerate() {
            if !(b > 0.0) || !b.is_finite() {
                return Err(MarketError::NonPositiveBudget { index: k, value: b });
            }
        }
        let k = budgets.len();
        for ty in &types {
            if ty.weights.len() != k {
                return Err(MarketError::WeightDimension {
                    type_id: ty.id.clone(),
                    expected: k,
                    got: ty.weights.len(),
                });
            }
            for (i, &w) in ty.weights.iter().enumerate() {
                if !(w > 0.0) || !w.is_finite() {
                    return Err(MarketError::NonPositiveWeight {
                        type_id: ty.id.clone(),
                        index: i,
                        value: w,
                    });
                }
            }
            if !(ty.count > 0.0) || !ty.count.is_finite() {
                return Err(MarketError::NonPositiveCount {
                    type_id: ty.id.clone(),
                    value: ty.count,
                });
            }
        }
        Ok(Self { budgets, types })
    }

    /// Same weights and budgets, different counts.
    pub fn with_counts(&self, counts: &[f64]) -> Result<Self, MarketError> {
        assert_eq!(counts.len(), self.types.len());
        let types = self
            .types
            .iter()
            .zip(counts)
            .map(|(ty, &n)| TypeSpec {
                id: ty.id.clone(),
                weights: ty.weights.clone(),
                count: n,
            })
            .collect();
        Self::new(self.budgets.clone(), types)
    }

    pub fn num_resources(&self) -> usize {
        self.budgets.len()
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn types(&self) -> &[TypeSpec] {
        &self.types
    }

    pub fn total_count(&self) -> f64 {
        self.types.iter().map(|t| t.count).sum()
    }

    /// Smallest weight entry over all types and resources.
    pub fn w_min(&self) -> f64 {
        self.types
            .iter()
            .flat_map(|t| t.weights.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest weight entry over all types and resources.
    pub fn w_inf(&self) -> f64 {
        self.types
            .iter()
            .flat_map(|t| t.weights.iter().copied())
            .fold(0.0, f64::max)
    }

    /// Average resource per individual, `B_k / Σ_θ N_θ`.
    pub fn beta_avg(&self) -> Vec<f64> {
        let n = self.total_count();
        self.budgets.iter().map(|b| b / n).collect()
    }

    pub fn beta_avg_min(&self) -> f64 {
        self.beta_avg().into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// A certified solution to the Eisenberg-Gale program. `allocation[θ][k]` is
/// the per-individual share of resource `k` for type `θ`.
#[derive(Debug, Clone)]
pub struct EGSolution {
    pub allocation: Vec<Vec<f64>>,
    pub prices: Vec<f64>,
    pub utilities: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Maximum violation over the four KKT conditions of the Eisenberg-Gale
/// program: budget feasibility, dual feasibility, complementary slackness and
/// the gradient condition `w_{θ,k}/p_k ≤ ⟨w_θ, x_θ⟩` (with equality on
/// entries where `x_{θ,k} > zero_tol`).
pub fn kkt_residual(
    instance: &MarketInstance,
    allocation: &[Vec<f64>],
    prices: &[f64],
    zero_tol: f64,
) -> Result<f64, MarketError> {
    let kk = instance.num_resources();
    let tt = instance.num_types();
    if allocation.len() != tt
        || prices.len() != kk
        || allocation.iter().any(|row| row.len() != kk)
    {
        return Err(MarketError::DimensionMismatch {
            types: allocation.len(),
            resources: prices.len(),
            exp_types: tt,
            exp_resources: kk,
        });
    }
    let utilities: Vec<f64> = instance
        .types
        .iter()
        .zip(allocation)
        .map(|(ty, x)| dot(&ty.weights, x))
        .collect();

    let mut residual = 0.0f64;
    for k in 0..kk {
        let supplied: f64 = instance
            .types
            .iter()
            .zip(allocation)
            .map(|(ty, x)| ty.count * x[k])
            .sum();
        let slack = instance.budgets[k] - supplied;
        residual = residual.max(-slack.min(0.0)); // budget violation
        residual = residual.max(-prices[k].min(0.0)); // negative price
        residual = residual.max((prices[k] * slack).abs()); // complementary slackness
    }
    for (ti, ty) in instance.types.iter().enumerate() {
        for k in 0..kk {
            let bang = ty.weights[k] / prices[k];
            let gap = bang - utilities[ti];
            residual = residual.max(gap.max(0.0));
            if allocation[ti][k] > zero_tol {
                residual = residual.max(gap.abs());
            }
        }
    }
    Ok(residual)
}

/// Residual of a packaged candidate solution (utilities are recomputed, the
/// stored ones are ignored).
pub fn solution_residual(
    instance: &MarketInstance,
    candidate: &EGSolution,
    zero_tol: f64,
) -> Result<f64, MarketError> {
    kkt_residual(instance, &candidate.allocation, &candidate.prices, zero_tol)
}

/// Log Nash social welfare `Σ_θ N_θ log⟨w_θ, x_θ⟩` of an allocation.
pub fn log_nsw(instance: &MarketInstance, allocation: &[Vec<f64>]) -> Result<f64, MarketError> {
    let mut total = 0.0;
    for (ty, x) in instance.types.iter().zip(allocation) {
        let u = dot(&ty.weights, x);
        if !(u > 0.0) {
            return Err(MarketError::ZeroUtility {
                type_id: ty.id.clone(),
            });
        }
        total += ty.count * u.ln();
    }
    Ok(total)
}

/// Solve the Eisenberg-Gale program by proportional-response dynamics.
///
/// Each individual of type θ carries one unit of money, so type θ spends
/// `N_θ` in total; prices are `p_k = Σ_θ b_{θ,k} / B_k` and the next money
/// split is proportional to `w_{θ,k} x_{θ,k}`. Convergence is certified by
/// the KKT residual, not by iterate movement.
pub fn solve_eg(
    instance: &MarketInstance,
    tolerance: f64,
    max_iterations: usize,
) -> Result<EGSolution, MarketError> {
    assert!(tolerance > 0.0, "tolerance must be positive");
    let kk = instance.num_resources();
    let tt = instance.num_types();

    // Uniform interior start: b_{θ,k} = N_θ / K.
    let mut money: Vec<Vec<f64>> = instance
        .types
        .iter()
        .map(|ty| vec![ty.count / kk as f64; kk])
        .collect();
    let mut prices = vec![0.0f64; kk];
    let mut allocation = vec![vec![0.0f64; kk]; tt];
    let mut utilities = vec![0.0f64; tt];
    let mut best_residual = f64::INFINITY;

    for iter in 1..=max_iterations {
        for k in 0..kk {
            let spent: f64 = money.iter().map(|row| row[k]).sum();
            prices[k] = spent / instance.budgets[k];
        }
        for (ti, ty) in instance.types.iter().enumerate() {
            for k in 0..kk {
                allocation[ti][k] = if prices[k] > 0.0 {
                    money[ti][k] / (prices[k] * ty.count)
                } else {
                    0.0
                };
            }
            utilities[ti] = dot(&ty.weights, &allocation[ti]);
        }
        let residual = kkt_residual(instance, &allocation, &prices, tolerance)?;
        best_residual = best_residual.min(residual);
        if residual <= tolerance {
            return Ok(EGSolution {
                allocation,
                prices,
                utilities,
                kkt_residual: residual,
                iterations: iter,
            });
        }
        for (ti, ty) in instance.types.iter().enumerate() {
            let u = utilities[ti];
            for k in 0..kk {
                money[ti][k] = ty.count * ty.weights[k] * allocation[ti][k] / u;
            }
        }
    }
    Err(MarketError::NoConvergence {
        tolerance,
        iterations: max_iterations,
        best_residual,
    })
}

/// Local error bound for `brute_force_eg` results: how much utilities and
/// prices may be off given the grid resolution, evaluated at the prices the
/// oracle actually found.
pub fn brute_force_bound(solution: &EGSolution, instance: &MarketInstance, resolution: f64) -> f64 {
    let p_min = solution
        .prices
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let p_eff = (p_min - resolution).max(resolution);
    instance.w_inf() * resolution / (p_eff * p_eff) + resolution
}

/// Exhaustive grid search over price vectors, independent of the
/// proportional-response path. Only intended for tiny instances.
pub fn brute_force_eg(
    instance: &MarketInstance,
    grid_resolution: f64,
) -> Result<EGSolution, MarketError> {
    assert!(grid_resolution > 0.0);
    let kk = instance.num_resources();
    let tt = instance.num_types();
    if kk > 2 || tt > 3 {
        return Err(MarketError::OracleTooLarge {
            resources: kk,
            types: tt,
        });
    }

    // Price window: every equilibrium price lies in (0, total money / B_k],
    // since resource k cannot attract more than all the money in the market.
    let total_money = instance.total_count();
    let lo = grid_resolution;
    let his: Vec<f64> = instance
        .budgets
        .iter()
        .map(|b| total_money / b + grid_resolution)
        .collect();
    // Score each grid point by the dual objective
    //   g(p) = sum_k B_k p_k + sum_theta N_theta (ln(max_k w_{theta,k}/p_k) - 1),
    // whose unique minimizer is the equilibrium price vector. This scoring is
    // allocation-free, so it does not depend on any demand heuristic. After
    // the full scan, two refinement scans re-grid around the argmin: the
    // minimum can sit a few steps off along the valley where the active
    // bang-per-buck resource switches, and re-centering shrinks that error.
    let dual_at = |prices: &[f64]| {
        let mut dual = dot(&instance.budgets, prices);
        for ty in &instance.types {
            let bang = (0..kk)
                .map(|k| ty.weights[k] / prices[k])
                .fold(f64::NEG_INFINITY, f64::max);
            dual += ty.count * (bang.ln() - 1.0);
        }
        dual
    };
    let scan = |los: &[f64], his: &[f64], res: f64| -> (Vec<f64>, usize) {
        let steps: Vec<usize> = los
            .iter()
            .zip(his)
            .map(|(&l, &h)| (((h - l) / res).ceil() as usize).max(1))
            .collect();
        let total: usize = steps.iter().map(|s| s + 1).product();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut prices = vec![0.0f64; kk];
        for flat in 0..total {
            let mut rem = flat;
            for k in 0..kk {
                let step = rem % (steps[k] + 1);
                rem /= steps[k] + 1;
                prices[k] = los[k] + step as f64 * res;
            }
            let dual = dual_at(&prices);
            if best.as_ref().map_or(true, |(d, _)| dual < *d) {
                best = Some((dual, prices.clone()));
            }
        }
        (best.expect("grid is never empty").1, total)
    };

    let los = vec![lo; kk];
    let (mut prices, mut total_points) = scan(&los, &his, grid_resolution);
    let mut res = grid_resolution;
    for _ in 0..2 {
        let fine = res / 10.0;
        let los: Vec<f64> = prices.iter().map(|&p| (p - 4.0 * res).max(fine)).collect();
        let his: Vec<f64> = prices.iter().map(|&p| p + 4.0 * res).collect();
        let (refined, points) = scan(&los, &his, fine);
        prices = refined;
        total_points += points;
        res = fine;
    }
    // At equilibrium every individual's unit of money buys its best
    // bang-per-buck rate, so utilities follow from prices alone.
    let utilities: Vec<f64> = instance
        .types
        .iter()
        .map(|ty| {
            (0..kk)
                .map(|k| ty.weights[k] / prices[k])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let allocation = allocate_at_prices(instance, &prices, grid_resolution);
    let residual = kkt_residual(instance, &allocation, &prices, 1e-12)?;
    Ok(EGSolution {
        allocation,
        prices,
        utilities,
        kkt_residual: residual,
        iterations: total_points,
    })
}

/// Demand construction at fixed prices: every type puts its money on its
/// best bang-per-buck resource, then money of (near-)indifferent types is
/// shifted toward under-demanded resources to approach clearing.
fn allocate_at_prices(instance: &MarketInstance, prices: &[f64], resolution: f64) -> Vec<Vec<f64>> {
    let kk = instance.num_resources();
    let tt = instance.num_types();
    let mut money = vec![vec![0.0f64; kk]; tt];
    let mut tied = vec![vec![false; kk]; tt];
    for (ti, ty) in instance.types.iter().enumerate() {
        let bangs: Vec<f64> = (0..kk).map(|k| ty.weights[k] / prices[k]).collect();
        let best_bang = bangs.iter().copied().fold(0.0f64, f64::max);
        let mut best_k = 0;
        for k in 0..kk {
            // Slack covers the bang-per-buck shift a one-step price move causes.
            let slack = 2.0 * ty.weights[k] * resolution / (prices[k] * prices[k]);
            tied[ti][k] = bangs[k] >= best_bang - slack;
            if bangs[k] == best_bang {
                best_k = k;
            }
        }
        money[ti][best_k] = ty.count;
    }

    // Targets: spending p_k * B_k clears resource k exactly.
    let targets: Vec<f64> = (0..kk).map(|k| prices[k] * instance.budgets[k]).collect();
    for _ in 0..4 {
        for k_from in 0..kk {
            let spent: f64 = money.iter().map(|row| row[k_from]).sum();
            let mut surplus = spent - targets[k_from];
            if surplus <= 0.0 {
                continue;
            }
            for k_to in 0..kk {
                if k_to == k_from {
                    continue;
                }
                let spent_to: f64 = money.iter().map(|row| row[k_to]).sum();
                let mut deficit = targets[k_to] - spent_to;
                if deficit <= 0.0 {
                    continue;
                }
                for ti in 0..tt {
                    if !(tied[ti][k_from] && tied[ti][k_to]) {
                        continue;
                    }
                    let move_amt = money[ti][k_from].min(surplus).min(deficit);
                    if move_amt > 0.0 {
                        money[ti][k_from] -= move_amt;
                        money[ti][k_to] += move_amt;
                        surplus -= move_amt;
                        deficit -= move_amt;
                    }
                    if surplus <= 0.0 || deficit <= 0.0 {
                        break;
                    }
                }
            }
        }
    }

    let mut allocation = vec![vec![0.0f64; kk]; tt];
    for (ti, ty) in instance.types.iter().enumerate() {
        for k in 0..kk {
            allocation[ti][k] = money[ti][k] / (prices[k] * ty.count);
        }
    }
    allocation
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub fn instance(budgets: &[f64], types: &[(&str, &[f64], f64)]) -> MarketInstance {
        MarketInstance::new(
            budgets.to_vec(),
            types
                .iter()
                .map(|(id, w, n)| TypeSpec {
                    id: id.to_string(),
                    weights: w.to_vec(),
                    count: *n,
                })
                .collect(),
        )
        .unwrap()
    }

    fn single_resource() -> MarketInstance {
        instance(&[10.0], &[("a", &[1.0], 2.0), ("b", &[1.0], 3.0)])
    }

    fn symmetric_types() -> MarketInstance {
        instance(&[3.0, 3.0], &[("a", &[1.0, 2.0], 1.0), ("b", &[1.0, 2.0], 1.0)])
    }

    fn crossed_types() -> MarketInstance {
        instance(&[1.0, 1.0], &[("a", &[2.0, 1.0], 1.0), ("b", &[1.0, 2.0], 1.0)])
    }

    #[test]
    fn solve_single_resource_equal_split() {
        let sol = solve_eg(&single_resource(), 1e-10, 100_000).unwrap();
        assert_abs_diff_eq!(sol.allocation[0][0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.allocation[1][0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.prices[0], 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.utilities[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.utilities[1], 2.0, epsilon = 1e-8);
    }

    #[test]
    fn solve_symmetric_types() {
        let sol = solve_eg(&symmetric_types(), 1e-10, 100_000).unwrap();
        assert_abs_diff_eq!(sol.utilities[0], 4.5, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.utilities[1], 4.5, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.prices[0], 2.0 / 9.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.prices[1], 4.0 / 9.0, epsilon = 1e-7);
    }

    #[test]
    fn solve_crossed_types() {
        let sol = solve_eg(&crossed_types(), 1e-10, 100_000).unwrap();
        assert_abs_diff_eq!(sol.allocation[0][0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.allocation[0][1], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.allocation[1][0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.allocation[1][1], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.prices[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.prices[1], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn residual_zero_at_optimum() {
        let inst = single_resource();
        let sol = solve_eg(&inst, 1e-10, 100_000).unwrap();
        let r = solution_residual(&inst, &sol, 1e-10).unwrap();
        assert!(r <= 1e-10, "residual {r}");
    }

    #[test]
    fn residual_detects_budget_violation() {
        let inst = single_resource();
        let alloc = vec![vec![2.1], vec![2.0]];
        let r = kkt_residual(&inst, &alloc, &[0.5], 1e-9).unwrap();
        assert!(r >= 0.2 - 1e-12, "residual {r}");
    }

    #[test]
    fn residual_detects_wrong_prices() {
        let inst = symmetric_types();
        let sol = solve_eg(&inst, 1e-10, 100_000).unwrap();
        let r = kkt_residual(&inst, &sol.allocation, &[1.0, 1.0], 1e-9).unwrap();
        assert!(r > 0.1, "residual {r}");
    }

    #[test]
    fn residual_dimension_mismatch() {
        let inst = single_resource();
        let err = kkt_residual(&inst, &[vec![1.0]], &[0.5], 1e-9).unwrap_err();
        assert!(matches!(err, MarketError::DimensionMismatch { .. }));
    }

    #[test]
    fn log_nsw_values() {
        let inst = single_resource();
        let sol = solve_eg(&inst, 1e-10, 100_000).unwrap();
        let v = log_nsw(&inst, &sol.allocation).unwrap();
        assert_abs_diff_eq!(v, 5.0 * 2.0f64.ln(), epsilon = 1e-7);

        let inst2 = crossed_types();
        let sol2 = solve_eg(&inst2, 1e-10, 100_000).unwrap();
        let v2 = log_nsw(&inst2, &sol2.allocation).unwrap();
        assert_abs_diff_eq!(v2, 2.0 * 2.0f64.ln(), epsilon = 1e-5);

        // Any feasible non-optimal allocation scores strictly below.
        let suboptimal = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let v3 = log_nsw(&inst2, &suboptimal).unwrap();
        assert!(v3 < v2 - 1e-6);
    }

    #[test]
    fn log_nsw_zero_utility_is_error() {
        let inst = single_resource();
        let err = log_nsw(&inst, &[vec![0.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, MarketError::ZeroUtility { .. }));
    }

    #[test]
    fn validation_rejects_degenerate_inputs() {
        assert!(MarketInstance::new(vec![0.0], vec![]).is_err());
        assert!(instance_err(&[1.0], &[("a", &[0.0], 1.0)]));
        assert!(instance_err(&[1.0], &[("a", &[1.0], 0.0)]));
        assert!(instance_err(&[-1.0], &[("a", &[1.0], 1.0)]));
    }

    fn instance_err(budgets: &[f64], types: &[(&str, &[f64], f64)]) -> bool {
        MarketInstance::new(
            budgets.to_vec(),
            types
                .iter()
                .map(|(id, w, n)| TypeSpec {
                    id: id.to_string(),
                    weights: w.to_vec(),
                    count: *n,
                })
                .collect(),
        )
        .is_err()
    }

    #[test]
    fn brute_force_single_resource() {
        let inst = single_resource();
        let sol = brute_force_eg(&inst, 1e-3).unwrap();
        assert!((sol.prices[0] - 0.5).abs() <= 1e-3 + 1e-12);
    }

    #[test]
    fn brute_force_symmetric_types() {
        let inst = symmetric_types();
        // The best joint grid point need not be the per-coordinate nearest
        // one, so allow two grid steps per price.
        let sol = brute_force_eg(&inst, 0.005).unwrap();
        assert!((sol.prices[0] - 2.0 / 9.0).abs() <= 0.01 + 1e-12);
        assert!((sol.prices[1] - 4.0 / 9.0).abs() <= 0.01 + 1e-12);
    }

    #[test]
    fn brute_force_refuses_large_instances() {
        let inst = instance(
            &[1.0, 1.0, 1.0],
            &[("a", &[1.0, 1.0, 1.0], 1.0)],
        );
        assert!(matches!(
            brute_force_eg(&inst, 0.1),
            Err(MarketError::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn brute_force_cross_checks_solver() {
        let inst = crossed_types();
        let oracle = brute_force_eg(&inst, 0.005).unwrap();
        let solved = solve_eg(&inst, 1e-10, 100_000).unwrap();
        let bound = brute_force_bound(&oracle, &inst, 0.005).max(1e-3);
        for ti in 0..2 {
            assert!((oracle.utilities[ti] - solved.utilities[ti]).abs() <= bound);
        }
    }

    #[test]
    fn price_floor_holds() {
        // The floor w_min * beta_min / w_inf applies when per-capita budgets
        // are at most one, which is the regime the budget rule produces
        // (total budget tied to total expected arrivals).
        let fixtures = [
            instance(&[10.0], &[("a", &[1.0], 12.0), ("b", &[1.0], 3.0)]),
            instance(&[1.5, 1.5], &[("a", &[1.0, 2.0], 1.0), ("b", &[1.0, 2.0], 1.0)]),
            crossed_types(),
        ];
        for inst in fixtures {
            assert!(inst.beta_avg_min() <= 1.0 + 1e-12);
            let sol = solve_eg(&inst, 1e-10, 100_000).unwrap();
            let floor = inst.w_min() * inst.beta_avg_min() / inst.w_inf() - 1e-10;
            for &p in &sol.prices {
                assert!(p >= floor, "price {p} below floor {floor}");
            }
        }
    }

    #[test]
    fn allocation_ceiling_holds() {
        for inst in [single_resource(), symmetric_types(), crossed_types()] {
            let sol = solve_eg(&inst, 1e-10, 100_000).unwrap();
            let b_max = inst.budgets().iter().copied().fold(0.0, f64::max);
            for (ty, row) in inst.types().iter().zip(&sol.allocation) {
                for &x in row {
                    assert!(x <= b_max / ty.count + 1e-9);
                }
            }
        }
    }
}
