//! Empirical convergence of sample-average risk sets in the sample size.
//!
//! For each seed one long scenario stream is drawn; the sets for smaller
//! sample sizes use its prefixes. Every set lives on the same lattice
//! (anchored at the upper corner with a common step), and each is compared
//! with the set at the reference size, which stands in for the unknown
//! limit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::algorithms::{classify_membership, GridClassification};
use super::grid::Grid;
use super::{distance_probe, hausdorff, ApproxSet};
use crate::error::{validation, Result};
use crate::model::{CapitalBox, FinancialNetwork, Grouping, RiskSpec, SaaProblem};
use crate::scalarize::{ideal_point, z_bounds, IdealMethod, BISECTION_TOL};
use crate::shocks::{sample_shocks, ShockParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub shocks: ShockParams,
    pub spec: RiskSpec,
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub n_ref: usize,
    /// Probe positions as fractions of the reference box diagonal.
    pub probe_fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    /// `None` marks a median-over-seeds row.
    pub seed: Option<u64>,
    pub n: usize,
    pub hausdorff_to_ref: f64,
    pub probes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn medians(&self) -> Vec<&ConvergenceRow> {
        self.rows.iter().filter(|r| r.seed.is_none()).collect()
    }

    pub fn median_hausdorff(&self, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.seed.is_none() && r.n == n).map(|r| r.hausdorff_to_ref)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Set for one sample on the common lattice. The lower corner comes from
/// axis bisection, shifted down by the bisection tolerance.
fn lattice_set(problem: &SaaProblem, hi: &[f64], step: f64, epsilon: f64) -> Result<Option<ApproxSet>> {
    let Some(ideal) = ideal_point(problem, IdealMethod::Bisection)? else {
        return Ok(None);
    };
    let lo: Vec<f64> = ideal.iter().map(|v| v - BISECTION_TOL * (1.0 + v.abs())).collect();
    let lo: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| l.min(*h)).collect();
    let grid = Grid::with_step(&lo, hi, step)?;
    let class: GridClassification = classify_membership(problem, &grid, None)?;
    Ok(Some(ApproxSet {
        epsilon,
        bounds: CapitalBox { lo, hi: hi.to_vec() },
        generators: class.generators(),
        ideal,
    }))
}

pub fn convergence_study(net: &FinancialNetwork, grouping: &Grouping, cfg: &ConvergenceConfig) -> Result<ConvergenceTable> {
    if cfg.n_list.is_empty() || cfg.seeds.is_empty() {
        return validation("convergence study needs sample sizes and seeds");
    }
    if cfg.n_list.iter().any(|&n| n == 0 || n > cfg.n_ref) {
        return validation("every sample size must lie in [1, n_ref]");
    }
    if !(cfg.epsilon > 0.0) {
        return validation("epsilon must be positive");
    }
    let g = grouping.groups();
    let step = cfg.epsilon / (g as f64).sqrt();

    let per_seed: Vec<Vec<ConvergenceRow>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<ConvergenceRow>> {
            let mut params = cfg.shocks.clone();
            params.n = cfg.n_ref;
            params.seed = seed;
            let all = sample_shocks(&params, grouping)?;
            let hi = z_bounds(net, grouping, &all)?.hi;
            let reference_problem = SaaProblem::new(net, grouping, &all, cfg.spec)?;
            let reference = lattice_set(&reference_problem, &hi, step, cfg.epsilon)?;
            let probes: Vec<Vec<f64>> = match &reference {
                Some(r) => cfg
                    .probe_fractions
                    .iter()
                    .map(|t| r.bounds.lo.iter().zip(&r.bounds.hi).map(|(l, h)| l + t * (h - l)).collect())
                    .collect(),
                None => Vec::new(),
            };
            cfg.n_list
                .par_iter()
                .map(|&n| {
                    let sample = all.prefix(n);
                    let problem = SaaProblem::new(net, grouping, &sample, cfg.spec)?;
                    let set = if n == cfg.n_ref { reference.clone() } else { lattice_set(&problem, &hi, step, cfg.epsilon)? };
                    let (h, probe_values) = match (&set, &reference) {
                        (Some(s), Some(r)) => (hausdorff(s, r)?, probes.iter().map(|v| distance_probe(v, s)).collect()),
                        _ => (f64::INFINITY, vec![f64::INFINITY; cfg.probe_fractions.len()]),
                    };
                    Ok(ConvergenceRow { seed: Some(seed), n, hausdorff_to_ref: h, probes: probe_values })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<ConvergenceRow> = per_seed.into_iter().flatten().collect();
    for &n in &cfg.n_list {
        let cell: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.seed.is_some() && r.n == n).collect();
        let mut h: Vec<f64> = cell.iter().map(|r| r.hausdorff_to_ref).collect();
        let probes = (0..cfg.probe_fractions.len())
            .map(|p| median(&mut cell.iter().map(|r| r.probes[p]).collect::<Vec<_>>()))
            .collect();
        let row = ConvergenceRow { seed: None, n, hausdorff_to_ref: median(&mut h), probes };
        rows.push(row);
    }
    Ok(ConvergenceTable { rows })
}
