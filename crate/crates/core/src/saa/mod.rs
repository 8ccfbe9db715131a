//! Sample-average risk sets: the membership oracle, grid approximations,
//! set distances, the insensitive quantile and convergence studies.

mod algorithms;
pub mod convergence;
pub mod grid;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use algorithms::{
    algorithm1, algorithm2, classify_distance, classify_exhaustive, classify_membership, GridClassification, SaaOptions,
};
pub use grid::Grid;

use crate::clearing::aggregate_en;
use crate::error::{validation, Error, Result};
use crate::model::{CapitalBox, RiskSpec, SaaProblem};

/// A scenario counts as a violation when its aggregate falls below
/// `alpha - AGGREGATE_TOL`.
pub const AGGREGATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub accepted: bool,
    pub violation_fraction: f64,
    pub violations: usize,
    /// Every shifted scenario `x^n + B^T z` is nonnegative.
    pub nonnegative: bool,
}

/// `Lambda^EN(x^n + B^T z)` for every scenario.
pub fn scenario_aggregates(problem: &SaaProblem, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != problem.groups() {
        return validation(format!("capital vector has {} entries, expected {}", z.len(), problem.groups()));
    }
    problem
        .scenarios
        .rows()
        .par_iter()
        .map(|x| aggregate_en(problem.network, &problem.grouping.shifted(x, z)))
        .collect()
}

/// Whether `z` belongs to the sample-average risk set.
pub fn membership(problem: &SaaProblem, z: &[f64]) -> Result<Membership> {
    let aggregates = scenario_aggregates(problem, z)?;
    let nonnegative = aggregates.iter().all(|l| *l > f64::NEG_INFINITY);
    let threshold = problem.spec.alpha - AGGREGATE_TOL;
    let violations = aggregates.iter().filter(|&&l| l < threshold).count();
    let n = aggregates.len();
    Ok(Membership {
        accepted: nonnegative && violations <= problem.spec.allowed_violations(n),
        violation_fraction: violations as f64 / n as f64,
        violations,
        nonnegative,
    })
}

/// Finite generator representation of an upper set: the union of
/// `a + R^g_+` over the generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxSet {
    pub epsilon: f64,
    #[serde(rename = "box")]
    pub bounds: CapitalBox,
    pub generators: Vec<Vec<f64>>,
    pub ideal: Vec<f64>,
}

impl ApproxSet {
    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        self.generators.iter().any(|a| a.iter().zip(z).all(|(ai, zi)| ai <= zi))
    }
}

/// `|(a - v)^+|_2`, the distance from `v` to `a + R^g_+`.
pub fn cone_distance(v: &[f64], a: &[f64]) -> f64 {
    a.iter().zip(v).map(|(ai, vi)| (ai - vi).max(0.0).powi(2)).sum::<f64>().sqrt()
}

/// Distance from `v` to the set; infinite for an empty set.
pub fn distance_probe(v: &[f64], set: &ApproxSet) -> f64 {
    set.generators.iter().map(|a| cone_distance(v, a)).fold(f64::INFINITY, f64::min)
}

/// Hausdorff distance between two finitely generated upper sets.
pub fn hausdorff(a: &ApproxSet, b: &ApproxSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Validation("Hausdorff distance needs two nonempty sets".into()));
    }
    let directed = |from: &ApproxSet, to: &ApproxSet| {
        from.generators.iter().map(|x| distance_probe(x, to)).fold(0.0f64, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// Insensitive value-at-risk of the aggregates: the smallest scalar capital
/// `y` with at most `floor(N lambda)` scenarios below `alpha - y`.
pub fn insensitive_saa(aggregates: &[f64], spec: &RiskSpec) -> Result<f64> {
    if aggregates.is_empty() {
        return validation("insensitive value-at-risk needs at least one aggregate");
    }
    if aggregates.iter().any(|v| !v.is_finite()) {
        return validation("aggregates must be finite");
    }
    let n = aggregates.len();
    let mut sorted = aggregates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = spec.allowed_violations(n).min(n - 1);
    Ok(spec.alpha - sorted[m])
}
