//! Branch-and-bound in capital space for `min w^T z` and `min |v - z|^2`.
//!
//! Each scenario `n` has a convex polyhedral acceptance region
//! `F_n = {z in box : Lambda(x^n + B^T z) >= alpha}`. A node fixes some
//! scenarios as required and some as excluded. Its relaxation minimizes the
//! objective over the intersection of the required regions by outer
//! approximation: supergradient cuts on each `F_n` (kept in a pool shared by
//! all nodes) and a small LP or active-set QP in the `g` capital variables.
//! When the relaxed optimum already lies in enough of the free regions the
//! node is solved. Otherwise the free scenario with the largest shortfall is
//! branched on.
//!
//! Node bounds also use the single-scenario optima: a point that lies in
//! `m` more free regions costs at least the `m`-th smallest single-region
//! optimum over the free scenarios.

use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::bnb::{sq_dist, MipObjective, Node, ScenarioMip, SearchOutcome};
use super::qp::min_norm_qp;
use super::simplex::{solve_lp, LinearProgram, LpStatus, Sense};
use crate::clearing::{aggregate_en, en_supergradient};
use crate::error::{Error, Result};

const CUT_MAX_ROUNDS: usize = 1000;
/// Scenario regions are enforced to `Lambda >= alpha - CLEAR_TOL`, tighter
/// than the membership tolerance.
const CLEAR_TOL: f64 = 1e-10;

type Cut = (Vec<f64>, f64);

struct Relaxation {
    /// Optimum over the outer approximation, a valid lower bound.
    value: f64,
    z: Vec<f64>,
    converged: bool,
}

struct Regions<'a, 'b> {
    mip: &'b ScenarioMip<'a>,
    cuts: Vec<Vec<Cut>>,
}

impl Regions<'_, '_> {
    /// Objective in search units: `w^T z`, or the squared distance.
    fn value(&self, z: &[f64]) -> f64 {
        match &self.mip.objective {
            MipObjective::Linear(w) => w.iter().zip(z).map(|(a, b)| a * b).sum(),
            MipObjective::Quadratic(v) => sq_dist(z, v),
        }
    }

    /// Minimizes the objective over the box and the rows `a z <= b`.
    fn solve(&self, a: &[Vec<f64>], b: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (lo, hi) = (&self.mip.z_lo, &self.mip.z_hi);
        // z_hi satisfies every cut, so an empty region is numerical trouble
        let trouble = |m: String| Error::Solver { message: m, iterations: 0 };
        match &self.mip.objective {
            MipObjective::Quadratic(v) => match min_norm_qp(v, a, b, lo, hi) {
                Ok(q) => Ok((q.distance * q.distance, q.z)),
                Err(Error::Validation(m)) => Err(trouble(m)),
                Err(e) => Err(e),
            },
            MipObjective::Linear(w) => {
                let mut lp = LinearProgram::new(Sense::Minimize, w.clone());
                for j in 0..w.len() {
                    lp.set_bounds(j, lo[j], hi[j]);
                }
                for (row, &rhs) in a.iter().zip(b) {
                    lp.add_le(row.iter().copied().enumerate().collect(), rhs);
                }
                let sol = solve_lp(&lp)?;
                if sol.status != LpStatus::Optimal {
                    return Err(trouble(format!("cut LP ended with status {:?}", sol.status)));
                }
                Ok((self.value(&sol.x), sol.x))
            }
        }
    }

    /// `Lambda(x^n + B^T z)` with round-off below zero clipped.
    fn total(&self, n: usize, z: &[f64]) -> Result<f64> {
        let p = &self.mip.problem;
        let x: Vec<f64> = p.grouping.shifted(p.scenarios.row(n), z).iter().map(|v| v.max(0.0)).collect();
        aggregate_en(p.network, &x)
    }

    fn totals(&self, members: &[usize], z: &[f64]) -> Result<Vec<f64>> {
        members.par_iter().map(|&n| self.total(n, z)).collect()
    }

    /// Adds the supergradient cut of `F_n` at `z`.
    fn cut(&mut self, n: usize, z: &[f64], lam: f64) -> Result<()> {
        let p = &self.mip.problem;
        let x: Vec<f64> = p.grouping.shifted(p.scenarios.row(n), z).iter().map(|v| v.max(0.0)).collect();
        let gz = p.grouping.collapse(&en_supergradient(p.network, &x)?);
        if gz.iter().all(|c| c.abs() < 1e-14) {
            return Ok(());
        }
        // lam + gz^T (z' - z) >= alpha
        let rhs = lam - p.spec.alpha - gz.iter().zip(z).map(|(c, zj)| c * zj).sum::<f64>();
        self.cuts[n].push((gz.iter().map(|c| -c).collect(), rhs));
        Ok(())
    }

    /// Optimum over the intersection of the member regions.
    fn relax(&mut self, members: &[usize]) -> Result<Relaxation> {
        let alpha = self.mip.problem.spec.alpha;
        let mut last = Relaxation { value: 0.0, z: Vec::new(), converged: false };
        for _ in 0..CUT_MAX_ROUNDS {
            let (a, b): (Vec<Vec<f64>>, Vec<f64>) = members.iter().flat_map(|&n| self.cuts[n].iter().cloned()).unzip();
            let (value, z) = self.solve(&a, &b)?;
            let lams = self.totals(members, &z)?;
            last = Relaxation { value, z, converged: true };
            for (&n, &lam) in members.iter().zip(&lams) {
                if lam < alpha - CLEAR_TOL {
                    last.converged = false;
                    let z = last.z.clone();
                    self.cut(n, &z, lam)?;
                }
            }
            if last.converged {
                break;
            }
        }
        Ok(last)
    }

    /// Feasible point for `members` on the segment from `z` to `z_hi`.
    fn lift(&self, members: &[usize], z: &[f64]) -> Result<Vec<f64>> {
        let alpha = self.mip.problem.spec.alpha;
        let at = |t: f64| -> Vec<f64> { z.iter().zip(&self.mip.z_hi).map(|(a, h)| a + t * (h - a)).collect() };
        let ok = |t: f64| -> Result<bool> { Ok(self.totals(members, &at(t))?.iter().all(|&l| l >= alpha - CLEAR_TOL)) };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ok(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(at(hi))
    }
}

/// `m`-th smallest of `values` over `idx` (1-based), or 0 for `m = 0`.
fn order_stat(values: &[f64], idx: impl Iterator<Item = usize>, m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = idx.map(|n| values[n]).collect();
    if v.len() < m {
        return f64::INFINITY;
    }
    v.sort_by(f64::total_cmp);
    v[m - 1]
}

pub(crate) fn zspace_search(mip: &ScenarioMip) -> Result<SearchOutcome> {
    let n_total = mip.problem.scenarios.len();
    let k = mip.required();
    let alpha = mip.problem.spec.alpha;
    let mut regions = Regions { mip, cuts: vec![Vec::new(); n_total] };
    let mut out = SearchOutcome {
        incumbent: None,
        trace: Vec::new(),
        nodes: 0,
        lower_bound: f64::INFINITY,
        hit_limit: false,
        inexact: false,
    };
    let offer = |out: &mut SearchOutcome, value: f64, z: Vec<f64>, chosen: Vec<bool>| {
        if out.incumbent.as_ref().is_none_or(|(best, _, _)| value < *best - 1e-12) {
            out.incumbent = Some((value, z, chosen));
            out.trace.push(value);
        }
    };
    let best = |out: &SearchOutcome| out.incumbent.as_ref().map_or(f64::INFINITY, |i| i.0);

    let mut single = Vec::with_capacity(n_total);
    for n in 0..n_total {
        single.push(regions.relax(&[n])?.value);
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node { fix: vec![-1; n_total], bound: order_stat(&single, 0..n_total, k), seq });
    while let Some(node) = heap.pop() {
        if node.bound >= best(&out) - mip.gap_tol {
            out.lower_bound = out.lower_bound.min(node.bound);
            continue;
        }
        if out.nodes >= mip.node_limit {
            out.hit_limit = true;
            heap.push(node);
            break;
        }
        out.nodes += 1;
        let mut fix = node.fix;
        let n_open = fix.iter().filter(|&&f| f != 0).count();
        if n_open < k {
            continue;
        }
        if n_open == k {
            fix.iter_mut().filter(|f| **f == -1).for_each(|f| *f = 1);
        }
        let members: Vec<usize> = (0..n_total).filter(|&n| fix[n] == 1).collect();
        let free: Vec<usize> = (0..n_total).filter(|&n| fix[n] == -1).collect();
        let need = k.saturating_sub(members.len());

        let proj = regions.relax(&members)?;
        let bound = node.bound.max(proj.value);
        if bound >= best(&out) - mip.gap_tol {
            out.lower_bound = out.lower_bound.min(bound);
            continue;
        }
        let lams = regions.totals(&free, &proj.z)?;
        let mut by_total: Vec<usize> = (0..free.len()).collect();
        by_total.sort_by(|&a, &b| lams[b].total_cmp(&lams[a]).then(a.cmp(&b)));

        if !proj.converged {
            // close the node with a feasible point and flag the result
            out.inexact = true;
            out.lower_bound = out.lower_bound.min(bound);
            let mut set = members.clone();
            set.extend(by_total.iter().take(need).map(|&i| free[i]));
            let z = regions.lift(&set, &proj.z)?;
            let mut chosen = vec![false; n_total];
            set.iter().for_each(|&n| chosen[n] = true);
            offer(&mut out, regions.value(&z), z, chosen);
            continue;
        }
        let sat = lams.iter().filter(|&&l| l >= alpha - CLEAR_TOL).count();
        if sat >= need {
            let mut chosen = vec![false; n_total];
            members.iter().for_each(|&n| chosen[n] = true);
            for (&n, &l) in free.iter().zip(&lams) {
                chosen[n] = l >= alpha - CLEAR_TOL;
            }
            offer(&mut out, proj.value, proj.z, chosen);
            continue;
        }
        if out.incumbent.is_none() {
            // greedy completion: the free scenarios closest to clearing
            let mut set = members.clone();
            set.extend(by_total.iter().take(need).map(|&i| free[i]));
            let p = regions.relax(&set)?;
            let z = if p.converged { p.z } else { regions.lift(&set, &p.z)? };
            let mut chosen = vec![false; n_total];
            set.iter().for_each(|&n| chosen[n] = true);
            offer(&mut out, regions.value(&z), z, chosen);
            out.inexact |= !p.converged;
        }
        // largest shortfall, lowest index on ties
        let pick = (0..free.len())
            .filter(|&i| lams[i] < alpha - CLEAR_TOL)
            .min_by(|&a, &b| lams[a].total_cmp(&lams[b]).then(a.cmp(&b)))
            .expect("an unsatisfied free scenario exists");
        let bn = free[pick];
        let others = || free.iter().copied().filter(move |&n| n != bn);
        let in_bound = bound.max(single[bn]).max(order_stat(&single, others(), need - 1));
        let out_bound = bound.max(order_stat(&single, others(), need));
        for (val, b) in [(1i8, in_bound), (0, out_bound)] {
            let mut child = fix.clone();
            child[bn] = val;
            seq += 1;
            heap.push(Node { fix: child, bound: b, seq });
        }
    }
    for node in heap.iter() {
        out.lower_bound = out.lower_bound.min(node.bound);
    }
    Ok(out)
}
