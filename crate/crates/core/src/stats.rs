//! Monte Carlo error analysis.

use serde::{Deserialize, Serialize};

/// Mean, standard error, variance and integrated autocorrelation time of a
/// Monte Carlo series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableEstimate {
    pub mean: f64,
    pub error: f64,
    pub variance: f64,
    pub tau: f64,
    pub n_samples: usize,
}

impl ObservableEstimate {
    /// Exact value with no statistical error.
    pub fn exact(mean: f64) -> Self {
        Self {
            mean,
            error: 0.0,
            variance: 0.0,
            tau: 0.5,
            n_samples: 0,
        }
    }

    /// `|mean - reference| <= k * error`.
    pub fn within(&self, reference: f64, k: f64) -> bool {
        (self.mean - reference).abs() <= k * self.error
    }
}

/// Analyzes `values` laid out chain-major: `n_chains` equal blocks, each one
/// chain's samples in Markov order.
///
/// The autocorrelation time uses the chain-averaged autocorrelation function
/// with Sokal's self-consistent window (`M >= 5 tau`), and the error is
/// `sqrt(2 tau var / n)`.
pub fn estimate_chains(values: &[f64], n_chains: usize) -> ObservableEstimate {
    let n = values.len();
    if n == 0 {
        return ObservableEstimate {
            mean: f64::NAN,
            error: f64::NAN,
            variance: f64::NAN,
            tau: f64::NAN,
            n_samples: 0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let n_chains = n_chains.max(1);
    let per_chain = n / n_chains;
    let tau = if variance > 0.0 && per_chain >= 4 {
        integrated_autocorrelation(values, n_chains, per_chain, mean, variance)
    } else {
        0.5
    };
    let error = if n > 1 {
        (2.0 * tau * variance / n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    ObservableEstimate {
        mean,
        error,
        variance,
        tau,
        n_samples: n,
    }
}

/// Single chain.
pub fn estimate(values: &[f64]) -> ObservableEstimate {
    estimate_chains(values, 1)
}

fn integrated_autocorrelation(values: &[f64], n_chains: usize, per_chain: usize, mean: f64, variance: f64) -> f64 {
    let max_lag = per_chain / 2;
    let mut tau = 0.5;
    for lag in 1..max_lag {
        let mut acc = 0.0;
        let mut count = 0usize;
        for c in 0..n_chains {
            let chain = &values[c * per_chain..(c + 1) * per_chain];
            for t in 0..per_chain - lag {
                acc += (chain[t] - mean) * (chain[t + lag] - mean);
            }
            count += per_chain - lag;
        }
        let rho = acc / count as f64 / variance;
        tau += rho;
        if lag as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Expectation of `values` under normalized `weights`.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(v, w)| v * w).sum()
}
