//! Sequential fair division of divisible resources: an Eisenberg-Gale market
//! solver, guardrail thresholds built from demand concentration bounds, the
//! guarded adaptive-threshold online policy and baselines, counterfactual
//! fairness/efficiency metrics, and a Monte-Carlo experiment harness.

pub mod arrivals;
pub mod config;
pub mod guardrails;
pub mod harness;
pub mod market;
pub mod metrics;
pub mod policies;

pub use arrivals::{ArrivalModel, HorizonSpec};
pub use guardrails::Guardrails;
pub use market::{EGSolution, MarketInstance, TypeSpec};
pub use metrics::{AggregateMetrics, RunMetrics};
pub use policies::{AllocationTrace, Branch};
