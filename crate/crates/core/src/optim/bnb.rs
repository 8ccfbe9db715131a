//! Branch-and-bound over scenario binaries for the chance-constrained
//! capital allocation problem
//!
//! ```text
//! min  obj(z)
//! s.t. p^n <= pi^T p^n + x^n + B^T z,  0 <= p^n <= pbar     (n = 1..N)
//!      1^T p^n >= alpha y^n,  sum_n y^n >= ceil(N (1 - lambda)),  y binary
//!      z_lo <= z <= z_hi
//! ```
//!
//! The search itself runs in capital space, see `zsearch`.

use std::cmp::Ordering;

use tracing::debug;

use crate::error::{Error, Result};
use crate::model::SaaProblem;
use crate::saa::membership;

pub const DEFAULT_NODE_LIMIT: usize = 100_000;
pub const DEFAULT_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum MipObjective {
    /// `min w^T z`
    Linear(Vec<f64>),
    /// `min |v - z|_2`
    Quadratic(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct ScenarioMip<'a> {
    pub problem: SaaProblem<'a>,
    pub objective: MipObjective,
    pub z_lo: Vec<f64>,
    pub z_hi: Vec<f64>,
    pub node_limit: usize,
    pub gap_tol: f64,
}

impl<'a> ScenarioMip<'a> {
    pub fn new(problem: SaaProblem<'a>, objective: MipObjective, z_lo: Vec<f64>, z_hi: Vec<f64>) -> Self {
        Self {
            problem,
            objective,
            z_lo,
            z_hi,
            node_limit: DEFAULT_NODE_LIMIT,
            gap_tol: DEFAULT_GAP,
        }
    }

    fn validate(&self) -> Result<()> {
        let p = &self.problem;
        SaaProblem::new(p.network, p.grouping, p.scenarios, p.spec)?;
        let g = p.groups();
        let w = match &self.objective {
            MipObjective::Linear(w) | MipObjective::Quadratic(w) => w,
        };
        if w.len() != g || self.z_lo.len() != g || self.z_hi.len() != g {
            return Err(Error::Validation(format!("objective and box must have {g} entries")));
        }
        if self.z_lo.iter().zip(&self.z_hi).any(|(l, h)| l > h) {
            return Err(Error::Validation("z_lo must not exceed z_hi".into()));
        }
        Ok(())
    }

    pub(crate) fn required(&self) -> usize {
        self.problem.required_successes()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    /// Node budget exhausted; the incumbent is reported with its gap.
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipSolution {
    pub status: MipStatus,
    pub z: Vec<f64>,
    /// `w^T z` or `|v - z|_2`.
    pub objective: f64,
    /// Valid lower bound on the optimal objective (same units).
    pub lower_bound: f64,
    pub y: Vec<bool>,
    pub nodes: usize,
    pub gap: f64,
    /// Incumbent objective after each improvement (internal units).
    pub incumbent_trace: Vec<f64>,
    /// Whether `z` passed the membership oracle after solving.
    pub verified: bool,
}

#[derive(Clone)]
pub(crate) struct Node {
    /// -1 free, 0 fixed off, 1 fixed on
    pub fix: Vec<i8>,
    pub bound: f64,
    pub seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Result of one tree search, in internal objective units.
pub(crate) struct SearchOutcome {
    pub incumbent: Option<(f64, Vec<f64>, Vec<bool>)>,
    pub trace: Vec<f64>,
    pub nodes: usize,
    pub lower_bound: f64,
    pub hit_limit: bool,
    /// Some subproblem was solved only approximately.
    pub inexact: bool,
}

/// Solves the scenario MIP to the configured absolute gap.
pub fn branch_and_bound(mip: &ScenarioMip) -> Result<MipSolution> {
    mip.validate()?;
    let n_total = mip.problem.scenarios.len();
    let k = mip.required();
    let infeasible = |nodes| MipSolution {
        status: MipStatus::Infeasible,
        z: Vec::new(),
        objective: f64::INFINITY,
        lower_bound: f64::INFINITY,
        y: vec![false; n_total],
        nodes,
        gap: 0.0,
        incumbent_trace: Vec::new(),
        verified: false,
    };
    if mip.problem.spec.alpha > mip.problem.network.total_obligations() && k > 0 {
        return Ok(infeasible(0));
    }
    let quadratic = matches!(mip.objective, MipObjective::Quadratic(_));
    let out = super::zsearch::zspace_search(mip)?;
    let to_user = |v: f64| if quadratic { v.max(0.0).sqrt() } else { v };
    debug!(nodes = out.nodes, lower_bound = out.lower_bound, "branch-and-bound finished");

    let Some((value, z, chosen)) = out.incumbent else {
        return Ok(infeasible(out.nodes));
    };
    let lb = out.lower_bound.min(value);
    let gap = (value - lb).max(0.0);
    let (z, value) = verify_or_nudge(mip, z, value)?;
    let verified = membership(&mip.problem, &z)?.accepted;
    let status = if out.hit_limit || out.inexact { MipStatus::NodeLimit } else { MipStatus::Optimal };
    Ok(MipSolution {
        status,
        objective: to_user(value),
        lower_bound: to_user(lb),
        z,
        y: chosen,
        nodes: out.nodes,
        gap,
        incumbent_trace: out.trace,
        verified,
    })
}

fn verify_or_nudge(mip: &ScenarioMip, z: Vec<f64>, value: f64) -> Result<(Vec<f64>, f64)> {
    if membership(&mip.problem, &z)?.accepted {
        return Ok((z, value));
    }
    for eps in [1e-10, 1e-9, 1e-8, 1e-7] {
        let zt: Vec<f64> = z
            .iter()
            .zip(&mip.z_hi)
            .map(|(a, h)| (a + eps * (1.0 + a.abs())).min(*h))
            .collect();
        if membership(&mip.problem, &zt)?.accepted {
            let value = match &mip.objective {
                MipObjective::Linear(w) => w.iter().zip(&zt).map(|(a, b)| a * b).sum(),
                MipObjective::Quadratic(v) => sq_dist(v, &zt),
            };
            return Ok((zt, value));
        }
    }
    Ok((z, value))
}
