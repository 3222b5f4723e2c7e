//! Arrival-count models, their clamped moments, and the Hoeffding-style
//! confidence widths for tail demand sums.
//!
//! Every model produces integer samples >= 1: Poisson and Normal draws are
//! clamped (round half away from zero first for Normal), and all moments are
//! those of the clamped law, not the raw one.

use rand::Rng;
use rand_distr::Distribution;
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArrivalError {
    #[error("delta must lie in (0,1), got {0}")]
    BadDelta(f64),
    #[error("empirical histogram must be nonempty with values >= 1 and probabilities summing to 1 (sum was {0})")]
    BadHistogram(f64),
    #[error("model parameter must be strictly positive: {0}")]
    BadParameter(f64),
    #[error("horizon needs at least one round and one type")]
    EmptyHorizon,
    #[error("round {round} has {got} models, expected {expected}")]
    RaggedModels {
        round: usize,
        got: usize,
        expected: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalModel {
    Deterministic(u64),
    ClampedPoisson(f64),
    ClampedNormal { mu: f64, sigma: f64 },
    /// Sorted (value, probability) support; probabilities sum to 1.
    Empirical(Vec<(u64, f64)>),
}

impl ArrivalModel {
    pub fn deterministic(n: u64) -> Result<Self, ArrivalError> {
        if n == 0 {
            return Err(ArrivalError::BadParameter(0.0));
        }
        Ok(Self::Deterministic(n))
    }

    pub fn poisson(lambda: f64) -> Result<Self, ArrivalError> {
        if !(lambda > 0.0) {
            return Err(ArrivalError::BadParameter(lambda));
        }
        Ok(Self::ClampedPoisson(lambda))
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self, ArrivalError> {
        if !(sigma > 0.0) {
            return Err(ArrivalError::BadParameter(sigma));
        }
        Ok(Self::ClampedNormal { mu, sigma })
    }

    pub fn empirical(mut histogram: Vec<(u64, f64)>) -> Result<Self, ArrivalError> {
        histogram.sort_by_key(|&(v, _)| v);
        let sum: f64 = histogram.iter().map(|&(_, p)| p).sum();
        let ok = !histogram.is_empty()
            && histogram.iter().all(|&(v, p)| v >= 1 && p >= 0.0)
            && (sum - 1.0).abs() <= 1e-12;
        if !ok {
            return Err(ArrivalError::BadHistogram(sum));
        }
        Ok(Self::Empirical(histogram))
    }

    /// One integer draw >= 1, fully determined by the rng state.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        match self {
            Self::Deterministic(n) => *n,
            Self::ClampedPoisson(lambda) => {
                let draw: f64 = rand_distr::Poisson::new(*lambda).unwrap().sample(rng);
                (draw.round() as u64).max(1)
            }
            Self::ClampedNormal { mu, sigma } => {
                let draw: f64 = rand_distr::Normal::new(*mu, *sigma).unwrap().sample(rng);
                // f64::round is half-away-from-zero.
                let rounded = draw.round();
                if rounded < 1.0 {
                    1
                } else {
                    rounded as u64
                }
            }
            Self::Empirical(hist) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for &(v, p) in hist {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                hist.last().unwrap().0
            }
        }
    }

    /// Exact expectation of the clamped distribution.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Deterministic(n) => *n as f64,
            // E[max(1, X)] = lambda + P(X = 0) for Poisson X.
            Self::ClampedPoisson(lambda) => lambda + (-lambda).exp(),
            Self::ClampedNormal { mu, sigma } => {
                let normal = NormalDist::new(*mu, *sigma).unwrap();
                // Sum n * P(round(X) clamped = n) over the effective support.
                let hi = (mu + 12.0 * sigma).ceil().max(2.0) as u64;
                let mut mean = 1.0 * normal.cdf(1.5);
                let mut upper_tail = 1.0 - normal.cdf(1.5);
                for n in 2..=hi {
                    let p = normal.cdf(n as f64 + 0.5) - normal.cdf(n as f64 - 0.5);
                    mean += n as f64 * p;
                    upper_tail -= p;
                }
                mean + (hi as f64 + 1.0) * upper_tail.max(0.0)
            }
            Self::Empirical(hist) => hist.iter().map(|&(v, p)| v as f64 * p).sum(),
        }
    }

    /// Sub-Gaussian width used in the confidence terms: 0 for deterministic,
    /// sigma for Normal, sqrt(lambda) for Poisson, half-range for bounded
    /// supports.
    pub fn deviation_proxy(&self) -> f64 {
        match self {
            Self::Deterministic(_) => 0.0,
            Self::ClampedPoisson(lambda) => lambda.sqrt(),
            Self::ClampedNormal { sigma, .. } => *sigma,
            Self::Empirical(hist) => {
                let min = hist.first().unwrap().0 as f64;
                let max = hist.last().unwrap().0 as f64;
                (max - min) / 2.0
            }
        }
    }
}

/// A horizon of `T` rounds with one arrival model per (round, type), plus the
/// derived tail means and confidence widths.
#[derive(Debug, Clone)]
pub struct HorizonSpec {
    rounds: usize,
    num_types: usize,
    delta: f64,
    models: Vec<Vec<ArrivalModel>>, // T x |Theta|
    means: Vec<Vec<f64>>,           // T x |Theta|
    tail_means: Vec<Vec<f64>>,      // (T+1) x |Theta|, rounds strictly after t
    rho_max: f64,
    log_term: f64,
}

impl HorizonSpec {
    pub fn new(
        delta: f64,
        models: Vec<Vec<ArrivalModel>>,
    ) -> Result<Self, ArrivalError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ArrivalError::BadDelta(delta));
        }
        let rounds = models.len();
        let num_types = models.first().map_or(0, |r| r.len());
        if rounds == 0 || num_types == 0 {
            return Err(ArrivalError::EmptyHorizon);
        }
        for (t, row) in models.iter().enumerate() {
            if row.len() != num_types {
                return Err(ArrivalError::RaggedModels {
                    round: t,
                    got: row.len(),
                    expected: num_types,
                });
            }
        }
        let means: Vec<Vec<f64>> = models
            .iter()
            .map(|row| row.iter().map(ArrivalModel::mean).collect())
            .collect();
        let mut tail_means = vec![vec![0.0; num_types]; rounds + 1];
        for t in (0..rounds).rev() {
            for th in 0..num_types {
                tail_means[t][th] = tail_means[t + 1][th] + means[t][th];
            }
        }
        let rho_max = models
            .iter()
            .flat_map(|row| row.iter().map(ArrivalModel::deviation_proxy))
            .fold(0.0, f64::max);
        let log_term = (rounds as f64 * num_types as f64 / delta).ln();
        Ok(Self {
            rounds,
            num_types,
            delta,
            models,
            means,
            tail_means,
            rho_max,
            log_term,
        })
    }

    /// Same model for every round, one per type.
    pub fn replicated(
        rounds: usize,
        delta: f64,
        per_type: Vec<ArrivalModel>,
    ) -> Result<Self, ArrivalError> {
        let models = (0..rounds).map(|_| per_type.clone()).collect();
        Self::new(delta, models)
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn model(&self, t: usize, theta: usize) -> &ArrivalModel {
        &self.models[t][theta]
    }

    pub fn round_mean(&self, t: usize, theta: usize) -> f64 {
        self.means[t][theta]
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    /// Expected arrivals in rounds strictly after `t`, for `t` in `0..=T`.
    pub fn tail_mean(&self, t: usize, theta: usize) -> f64 {
        self.tail_means[t][theta]
    }

    /// Expected total arrivals per type over the whole horizon.
    pub fn expected_totals(&self) -> Vec<f64> {
        self.tail_means[0].clone()
    }

    /// Hoeffding-style width `sqrt(2 (T-t) rho_max^2 log(T|Theta|/delta))`
    /// for the demand arriving strictly after round `t`.
    pub fn conf(&self, t: usize, _theta: usize) -> f64 {
        debug_assert!(t <= self.rounds);
        let remaining = (self.rounds - t) as f64;
        (2.0 * remaining * self.rho_max * self.rho_max * self.log_term).sqrt()
    }

    /// Draw a full T x |Theta| arrival matrix.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<Vec<u64>> {
        self.models
            .iter()
            .map(|row| row.iter().map(|m| m.sample(rng)).collect())
            .collect()
    }

    /// Whether a realized arrival matrix stays inside every confidence band:
    /// `|N_{>t,theta} - E[N_{>t,theta}]| <= Conf_{t,theta}` for all t, theta.
    pub fn concentration_event(&self, arrivals: &[Vec<u64>]) -> bool {
        let mut tails = vec![0.0f64; self.num_types];
        // t runs from T down to 0; tails holds N_{>t} at each step.
        for t in (0..self.rounds).rev() {
            for th in 0..self.num_types {
                tails[th] += arrivals[t][th] as f64;
                if (tails[th] - self.tail_means[t][th]).abs() > self.conf(t, th) {
                    return false;
                }
            }
        }
        true
    }
}

/// Counter-based seed derivation so parallel runs are bit-reproducible.
pub fn mix_seed(base: u64, stream: u64, index: u64) -> u64 {
    // SplitMix64 finalizer over the packed inputs.
    let mut z = base
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(stream.wrapping_mul(0xbf58476d1ce4e5b9))
        .wrapping_add(index.wrapping_add(0x94d049bb133111eb));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
