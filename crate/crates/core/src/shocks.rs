//! Correlated heavy-tailed operating cash flows: Gaussian copula with
//! equicorrelation and Lomax (Pareto type II) marginals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{validation, Result};
use crate::model::{Grouping, ScenarioSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockParams {
    pub nu: f64,
    pub beta_by_group: Vec<f64>,
    pub rho: f64,
    pub n: usize,
    pub seed: u64,
}

impl ShockParams {
    pub fn validate(&self, grouping: &Grouping) -> Result<()> {
        if !(self.nu > 1.0) || !self.nu.is_finite() {
            return validation(format!("nu must exceed 1, got {}", self.nu));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return validation(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if self.beta_by_group.len() != grouping.groups() {
            return validation(format!(
                "expected {} scale parameters, got {}",
                grouping.groups(),
                self.beta_by_group.len()
            ));
        }
        if self.beta_by_group.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return validation("scale parameters must be positive");
        }
        Ok(())
    }
}

fn scenario_rng(seed: u64, n: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    rng
}

/// Latent equicorrelated standard normals for scenario `n`.
pub fn latent_normals(seed: u64, rho: f64, d: usize, n: usize) -> Vec<f64> {
    let mut rng = scenario_rng(seed, n);
    let common: f64 = StandardNormal.sample(&mut rng);
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    (0..d)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            a * common + b * e
        })
        .collect()
}

/// Lomax quantile written in terms of the upper tail `1 - u`.
pub fn lomax_from_tail(tail: f64, beta: f64, nu: f64) -> f64 {
    beta * (tail.powf(-1.0 / nu) - 1.0)
}

/// Lomax CDF `1 - (beta / (beta + x))^nu`.
pub fn lomax_cdf(x: f64, beta: f64, nu: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (beta / (beta + x)).powf(nu)
    }
}

/// Draws `params.n` scenarios. Scenario `n` depends only on `(seed, n)`, so
/// a smaller sample is a prefix of a larger one.
pub fn sample_shocks(params: &ShockParams, grouping: &Grouping) -> Result<ScenarioSet> {
    params.validate(grouping)?;
    let d = grouping.dim();
    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
    let values: Vec<Vec<f64>> = (0..params.n)
        .into_par_iter()
        .map(|n| {
            latent_normals(params.seed, params.rho, d, n)
                .iter()
                .enumerate()
                .map(|(i, &z)| {
                    let beta = params.beta_by_group[grouping.group_of(i)];
                    lomax_from_tail(std_normal.cdf(-z), beta, params.nu).max(0.0)
                })
                .collect()
        })
        .collect();
    ScenarioSet::new(d, values)
}
