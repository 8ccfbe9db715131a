//! Scalarizations of the sample-average risk set: weighted sums, distance
//! minimization, the ideal point and a bisection oracle along one axis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::model::{CapitalBox, FinancialNetwork, Grouping, SaaProblem, ScenarioSet};
use crate::optim::bnb::{branch_and_bound, MipObjective, MipStatus, ScenarioMip, DEFAULT_NODE_LIMIT};
use crate::saa::membership;

/// Box `[z_lo, z_hi]` that contains every minimal point of the risk set.
///
/// `z_lo_j` negates the smallest cash flow of any member of group `j` over
/// all scenarios, so `z >= z_lo` is exactly the condition that every shifted
/// scenario stays nonnegative. `z_hi_j` is the largest obligation in group `j`.
pub fn z_bounds(net: &FinancialNetwork, grouping: &Grouping, scenarios: &ScenarioSet) -> Result<CapitalBox> {
    if grouping.dim() != net.dim() || scenarios.dim() != net.dim() {
        return validation("network, grouping and scenarios disagree on the dimension");
    }
    if scenarios.is_empty() {
        return validation("at least one scenario is required");
    }
    let g = grouping.groups();
    let mut min_x = vec![f64::INFINITY; g];
    let mut hi = vec![f64::NEG_INFINITY; g];
    for (i, &pb) in net.pbar().iter().enumerate() {
        let j = grouping.group_of(i);
        hi[j] = hi[j].max(pb);
        for x in scenarios.rows() {
            min_x[j] = min_x[j].min(x[i]);
        }
    }
    let lo = min_x.iter().map(|m| -m).collect();
    Ok(CapitalBox { lo, hi })
}

/// Outcome of a scalarization. Infeasibility is a regular outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarOutcome {
    pub feasible: bool,
    /// Optimal value (`w^T z` or a distance); infinite when infeasible.
    pub value: f64,
    pub z: Vec<f64>,
    pub lower_bound: f64,
    /// False when the branch-and-bound budget ran out.
    pub optimal: bool,
    pub nodes: usize,
}

impl ScalarOutcome {
    fn infeasible() -> Self {
        Self { feasible: false, value: f64::INFINITY, z: Vec::new(), lower_bound: f64::INFINITY, optimal: true, nodes: 0 }
    }
}

/// Solver budget for the scalarizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarOptions {
    pub node_limit: usize,
}

impl Default for ScalarOptions {
    fn default() -> Self {
        Self { node_limit: DEFAULT_NODE_LIMIT }
    }
}

fn provably_empty(problem: &SaaProblem) -> bool {
    problem.required_successes() > 0 && problem.spec.alpha > problem.network.total_obligations()
}

fn run(problem: &SaaProblem, objective: MipObjective, opts: &ScalarOptions) -> Result<ScalarOutcome> {
    let bounds = z_bounds(problem.network, problem.grouping, problem.scenarios)?;
    let mut mip = ScenarioMip::new(*problem, objective, bounds.lo, bounds.hi);
    mip.node_limit = opts.node_limit;
    let sol = branch_and_bound(&mip)?;
    if sol.status == MipStatus::Infeasible {
        return Ok(ScalarOutcome::infeasible());
    }
    Ok(ScalarOutcome {
        feasible: true,
        value: sol.objective,
        z: sol.z,
        lower_bound: sol.lower_bound,
        optimal: sol.status == MipStatus::Optimal,
        nodes: sol.nodes,
    })
}

/// `min w^T z` over the risk set intersected with the box.
pub fn weighted_sum(problem: &SaaProblem, w: &[f64]) -> Result<ScalarOutcome> {
    weighted_sum_with(problem, w, &ScalarOptions::default())
}

pub fn weighted_sum_with(problem: &SaaProblem, w: &[f64], opts: &ScalarOptions) -> Result<ScalarOutcome> {
    if w.len() != problem.groups() {
        return validation(format!("weight vector needs {} entries", problem.groups()));
    }
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) || w.iter().all(|&v| v == 0.0) {
        return validation("weights must be nonnegative and not all zero");
    }
    if provably_empty(problem) {
        return Ok(ScalarOutcome::infeasible());
    }
    run(problem, MipObjective::Linear(w.to_vec()), opts)
}

/// Distance from `v` to the risk set and a nearest point.
pub fn norm_min(problem: &SaaProblem, v: &[f64]) -> Result<ScalarOutcome> {
    norm_min_with(problem, v, &ScalarOptions::default())
}

pub fn norm_min_with(problem: &SaaProblem, v: &[f64], opts: &ScalarOptions) -> Result<ScalarOutcome> {
    if v.len() != problem.groups() {
        return validation(format!("point needs {} entries", problem.groups()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return validation("point must be finite");
    }
    if provably_empty(problem) {
        return Ok(ScalarOutcome::infeasible());
    }
    let bounds = z_bounds(problem.network, problem.grouping, problem.scenarios)?;
    let inside_box = v.iter().zip(&bounds.hi).all(|(a, b)| a <= b);
    if inside_box && membership(problem, v)?.accepted {
        return Ok(ScalarOutcome { feasible: true, value: 0.0, z: v.to_vec(), lower_bound: 0.0, optimal: true, nodes: 0 });
    }
    run(problem, MipObjective::Quadratic(v.to_vec()), opts)
}

/// How the ideal point is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IdealMethod {
    /// Weighted-sum MILP along each unit vector.
    #[default]
    Milp,
    /// Monotone bisection along each axis.
    Bisection,
}

/// Componentwise minimum of the risk set; `None` when the set is empty.
pub fn ideal_point(problem: &SaaProblem, method: IdealMethod) -> Result<Option<Vec<f64>>> {
    let g = problem.groups();
    let parts: Vec<Option<f64>> = (0..g)
        .into_par_iter()
        .map(|j| -> Result<Option<f64>> {
            match method {
                IdealMethod::Milp => {
                    let mut w = vec![0.0; g];
                    w[j] = 1.0;
                    let out = weighted_sum(problem, &w)?;
                    Ok(out.feasible.then_some(out.value))
                }
                IdealMethod::Bisection => bisection_unit(problem, j),
            }
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().collect())
}

/// Bisection tolerance used by [`bisection_unit`].
pub const BISECTION_TOL: f64 = 1e-9;

/// Smallest `t` in `[z_lo_j, z_hi_j]` such that `t e_j` plus `z_hi` in the
/// other coordinates is acceptable. Returns the feasible end of the final
/// bracket, so the result is accepted and at most the tolerance above the
/// true minimum.
pub fn bisection_unit(problem: &SaaProblem, j: usize) -> Result<Option<f64>> {
    let g = problem.groups();
    if j >= g {
        return Err(Error::Validation(format!("group index {j} out of range")));
    }
    let bounds = z_bounds(problem.network, problem.grouping, problem.scenarios)?;
    let at = |t: f64| -> Result<bool> {
        let mut z = bounds.hi.clone();
        z[j] = t;
        Ok(membership(problem, &z)?.accepted)
    };
    let (mut lo, mut hi) = (bounds.lo[j], bounds.hi[j]);
    if at(lo)? {
        return Ok(Some(lo));
    }
    if !at(hi)? {
        return Ok(None);
    }
    let tol = BISECTION_TOL * (1.0 + lo.abs().max(hi.abs()));
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}
