//! Grid classification of the sample-average risk set.
//!
//! Both algorithms label every lattice point acceptable or not. Labels
//! propagate through cones: an acceptable point makes every point above it
//! acceptable and a rejected point rejects every point below it. The first
//! algorithm asks the membership oracle at each unlabeled point; the second
//! solves a distance-minimization problem there and additionally accepts the
//! cone above the nearest point and rejects the open ball it certifies.

use rayon::prelude::*;
use tracing::debug;

use super::grid::Grid;
use super::{membership, ApproxSet};
use crate::error::Result;
use crate::model::{CapitalBox, SaaProblem};
use crate::scalarize::{ideal_point, norm_min_with, z_bounds, IdealMethod, ScalarOptions};

/// Safety margin subtracted from certified exclusion radii.
pub const EXCLUSION_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SaaOptions {
    pub epsilon: f64,
    pub ideal: IdealMethod,
    /// Explicit search box; defaults to `[ideal, z_hi]`.
    pub bounds: Option<CapitalBox>,
    pub node_limit: usize,
    /// Explicit traversal order over grid indices; defaults to the diagonal
    /// order from the upper corner.
    pub order: Option<Vec<usize>>,
}

impl SaaOptions {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            ideal: IdealMethod::Milp,
            bounds: None,
            node_limit: crate::optim::bnb::DEFAULT_NODE_LIMIT,
            order: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Unknown,
    Acceptable,
    Rejected,
}

/// Labels of every grid point after classification.
#[derive(Debug, Clone, PartialEq)]
pub struct GridClassification {
    pub grid: Grid,
    pub acceptable: Vec<bool>,
    /// Oracle calls (membership or distance problems) spent.
    pub evaluations: usize,
}

impl GridClassification {
    /// Minimal acceptable grid points, in index order.
    pub fn generators(&self) -> Vec<Vec<f64>> {
        let g = self.grid.dim();
        let counts = self.grid.counts();
        (0..self.grid.len())
            .filter(|&i| self.acceptable[i])
            .filter(|&i| {
                let k = self.grid.multi_index(i);
                (0..g).all(|j| {
                    if k[j] + 1 >= counts[j] {
                        return true;
                    }
                    let mut below = k.clone();
                    below[j] += 1;
                    !self.acceptable[self.grid.index(&below)]
                })
            })
            .map(|i| self.grid.point(i))
            .collect()
    }
}

struct Labels<'g> {
    grid: &'g Grid,
    labels: Vec<Label>,
}

impl<'g> Labels<'g> {
    fn new(grid: &'g Grid) -> Self {
        Self { grid, labels: vec![Label::Unknown; grid.len()] }
    }

    /// Labels `k` and everything it dominates in the given direction.
    /// Flooding stops at points that already carry the label, which by
    /// construction already have their whole cone labeled.
    fn flood(&mut self, start: usize, label: Label) {
        if self.labels[start] != Label::Unknown {
            return;
        }
        let g = self.grid.dim();
        let counts = self.grid.counts().to_vec();
        let mut stack = vec![start];
        self.labels[start] = label;
        while let Some(i) = stack.pop() {
            let k = self.grid.multi_index(i);
            for j in 0..g {
                let next = match label {
                    // larger coordinates = smaller index
                    Label::Acceptable if k[j] > 0 => Some(i - self.grid_stride(j)),
                    Label::Rejected if k[j] + 1 < counts[j] => Some(i + self.grid_stride(j)),
                    _ => None,
                };
                if let Some(n) = next {
                    if self.labels[n] == Label::Unknown {
                        self.labels[n] = label;
                        stack.push(n);
                    }
                }
            }
        }
    }

    fn grid_stride(&self, j: usize) -> usize {
        let mut e = vec![0; self.grid.dim()];
        e[j] = 1;
        self.grid.index(&e)
    }

    /// Accepts every grid point `>= v`.
    fn accept_above(&mut self, v: &[f64]) {
        if let Some(k) = self.grid.floor_index(v) {
            let idx = self.grid.index(&k);
            // floor_index may land on an already labeled corner; walk the box
            if self.labels[idx] == Label::Unknown {
                self.flood(idx, Label::Acceptable);
            } else {
                self.for_each_in_box(&vec![0; k.len()], &k, |s, i| {
                    if s.labels[i] == Label::Unknown {
                        s.flood(i, Label::Acceptable);
                    }
                });
            }
        }
    }

    /// Rejects every grid point in the open ball of radius `r` around `c`.
    fn reject_ball(&mut self, c: &[f64], r: f64) {
        if !(r > 0.0) {
            return;
        }
        let g = self.grid.dim();
        let step = self.grid.step();
        let mut lo_k = vec![0; g];
        let mut hi_k = vec![0; g];
        for j in 0..g {
            let hi = self.grid.hi()[j];
            let a = ((hi - c[j] - r) / step).floor().max(0.0);
            let b = ((hi - c[j] + r) / step).ceil();
            if b < 0.0 {
                return;
            }
            lo_k[j] = (a as usize).min(self.grid.counts()[j] - 1);
            hi_k[j] = (b as usize).min(self.grid.counts()[j] - 1);
        }
        let grid = self.grid;
        self.for_each_in_box(&lo_k, &hi_k, |s, i| {
            let p = grid.point(i);
            let d2: f64 = p.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < r * r && s.labels[i] == Label::Unknown {
                s.flood(i, Label::Rejected);
            }
        });
    }

    fn for_each_in_box(&mut self, lo_k: &[usize], hi_k: &[usize], mut f: impl FnMut(&mut Self, usize)) {
        let g = lo_k.len();
        let mut k = lo_k.to_vec();
        loop {
            let i = self.grid.index(&k);
            f(self, i);
            let mut j = g;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                if k[j] < hi_k[j] {
                    k[j] += 1;
                    for t in j + 1..g {
                        k[t] = lo_k[t];
                    }
                    break;
                }
            }
        }
    }

    fn finish(self, evaluations: usize) -> GridClassification {
        let acceptable = self.labels.iter().map(|l| *l == Label::Acceptable).collect();
        GridClassification { grid: self.grid.clone(), acceptable, evaluations }
    }
}

/// Membership at every grid point, without propagation.
pub fn classify_exhaustive(problem: &SaaProblem, grid: &Grid) -> Result<Vec<bool>> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| Ok(membership(problem, &grid.point(i))?.accepted))
        .collect()
}

fn diagonal_levels(grid: &Grid) -> Vec<Vec<usize>> {
    let mut levels: Vec<Vec<usize>> = Vec::new();
    for i in grid.diagonal_order() {
        let s: usize = grid.multi_index(i).iter().sum();
        if levels.len() <= s {
            levels.resize(s + 1, Vec::new());
        }
        levels[s].push(i);
    }
    levels
}

/// Membership-oracle classification with cone propagation.
pub fn classify_membership(problem: &SaaProblem, grid: &Grid, order: Option<&[usize]>) -> Result<GridClassification> {
    let mut labels = Labels::new(grid);
    let mut evaluations = 0;
    match order {
        None => {
            // points on one anti-diagonal are pairwise incomparable, so a
            // whole level can be evaluated at once
            for level in diagonal_levels(grid) {
                let todo: Vec<usize> = level.into_iter().filter(|&i| labels.labels[i] == Label::Unknown).collect();
                let verdicts: Vec<bool> = todo
                    .par_iter()
                    .map(|&i| Ok(membership(problem, &grid.point(i))?.accepted))
                    .collect::<Result<_>>()?;
                evaluations += todo.len();
                for (&i, ok) in todo.iter().zip(verdicts) {
                    labels.flood(i, if ok { Label::Acceptable } else { Label::Rejected });
                }
            }
        }
        Some(order) => {
            for &i in order {
                if labels.labels[i] != Label::Unknown {
                    continue;
                }
                evaluations += 1;
                let ok = membership(problem, &grid.point(i))?.accepted;
                labels.flood(i, if ok { Label::Acceptable } else { Label::Rejected });
            }
        }
    }
    Ok(labels.finish(evaluations))
}

/// Distance-problem classification: each unlabeled point gets a nearest
/// point of the set and a certified empty ball around it.
pub fn classify_distance(
    problem: &SaaProblem,
    grid: &Grid,
    order: Option<&[usize]>,
    node_limit: usize,
) -> Result<GridClassification> {
    let default_order;
    let order = match order {
        Some(o) => o,
        None => {
            default_order = grid.diagonal_order();
            &default_order
        }
    };
    let opts = ScalarOptions { node_limit };
    let mut labels = Labels::new(grid);
    let mut evaluations = 0;
    for &i in order {
        if labels.labels[i] != Label::Unknown {
            continue;
        }
        let z = grid.point(i);
        evaluations += 1;
        let out = norm_min_with(problem, &z, &opts)?;
        if out.feasible && out.value == 0.0 {
            labels.flood(i, Label::Acceptable);
            continue;
        }
        if out.feasible && out.optimal && membership(problem, &out.z)?.accepted {
            labels.accept_above(&out.z);
            labels.reject_ball(&z, out.lower_bound - EXCLUSION_MARGIN);
        }
        if labels.labels[i] == Label::Unknown {
            // no certificate covers the point itself
            let ok = membership(problem, &z)?.accepted;
            labels.flood(i, if ok { Label::Acceptable } else { Label::Rejected });
        }
    }
    debug!(evaluations, points = grid.len(), "distance classification finished");
    Ok(labels.finish(evaluations))
}

fn search_grid(problem: &SaaProblem, opts: &SaaOptions) -> Result<Option<(Grid, Vec<f64>)>> {
    let bounds = z_bounds(problem.network, problem.grouping, problem.scenarios)?;
    let Some(ideal) = ideal_point(problem, opts.ideal)? else {
        return Ok(None);
    };
    let (lo, hi) = match &opts.bounds {
        Some(b) => (b.lo.clone(), b.hi.clone()),
        None => (ideal.clone(), bounds.hi.clone()),
    };
    Ok(Some((Grid::new(&lo, &hi, opts.epsilon)?, ideal)))
}

fn empty_set(opts: &SaaOptions, problem: &SaaProblem) -> Result<ApproxSet> {
    let bounds = z_bounds(problem.network, problem.grouping, problem.scenarios)?;
    Ok(ApproxSet { epsilon: opts.epsilon, bounds, generators: Vec::new(), ideal: Vec::new() })
}

fn to_set(opts: &SaaOptions, class: &GridClassification, ideal: Vec<f64>) -> ApproxSet {
    ApproxSet {
        epsilon: opts.epsilon,
        bounds: CapitalBox { lo: class.grid.lo().to_vec(), hi: class.grid.hi().to_vec() },
        generators: class.generators(),
        ideal,
    }
}

/// Grid approximation driven by the membership oracle.
pub fn algorithm1(problem: &SaaProblem, opts: &SaaOptions) -> Result<ApproxSet> {
    let Some((grid, ideal)) = search_grid(problem, opts)? else {
        return empty_set(opts, problem);
    };
    let class = classify_membership(problem, &grid, opts.order.as_deref())?;
    Ok(to_set(opts, &class, ideal))
}

/// Grid approximation driven by distance minimization.
pub fn algorithm2(problem: &SaaProblem, opts: &SaaOptions) -> Result<ApproxSet> {
    let Some((grid, ideal)) = search_grid(problem, opts)? else {
        return empty_set(opts, problem);
    };
    let class = classify_distance(problem, &grid, opts.order.as_deref(), opts.node_limit)?;
    Ok(to_set(opts, &class, ideal))
}
