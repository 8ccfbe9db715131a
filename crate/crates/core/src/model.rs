//! Shared domain types: the network, the grouping of institutions, the
//! scenario sample and the value-at-risk specification.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Tolerance for row sums of the relative liability matrix.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// An Eisenberg-Noe liability structure: relative liabilities `pi` and
/// total obligations `pbar`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinancialNetwork {
    pi: Vec<Vec<f64>>,
    pbar: Vec<f64>,
}

impl FinancialNetwork {
    pub fn new(pi: Vec<Vec<f64>>, pbar: Vec<f64>) -> Result<Self> {
        let d = pbar.len();
        if d == 0 {
            return validation("network must have at least one node");
        }
        if pi.len() != d || pi.iter().any(|r| r.len() != d) {
            return validation(format!("pi must be {d}x{d}"));
        }
        for (i, row) in pi.iter().enumerate() {
            if row[i] != 0.0 {
                return validation(format!("pi[{i}][{i}] must be zero"));
            }
            if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return validation(format!("row {i} of pi has a negative or non-finite entry"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return validation(format!("row {i} of pi sums to {s}, expected 1"));
            }
        }
        if let Some(i) = pbar.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return validation(format!("pbar[{i}] must be strictly positive"));
        }
        Ok(Self { pi, pbar })
    }

    pub fn dim(&self) -> usize {
        self.pbar.len()
    }

    pub fn pi(&self) -> &[Vec<f64>] {
        &self.pi
    }

    pub fn pbar(&self) -> &[f64] {
        &self.pbar
    }

    pub fn total_obligations(&self) -> f64 {
        self.pbar.iter().sum()
    }

    /// `(pi^T p)_i`, the payments received by each node.
    pub fn inflows(&self, p: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (j, row) in self.pi.iter().enumerate() {
            let pj = p[j];
            if pj == 0.0 {
                continue;
            }
            for (i, &w) in row.iter().enumerate() {
                out[i] += w * pj;
            }
        }
        out
    }
}

/// Partition of the `d` institutions into `g` nonempty groups.
///
/// Realizes the grouping matrix `B` with `B[j][i] = 1` iff institution `i`
/// belongs to group `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grouping {
    g: usize,
    assignment: Vec<usize>,
}

impl Grouping {
    pub fn new(g: usize, assignment: Vec<usize>) -> Result<Self> {
        if g == 0 {
            return validation("grouping needs at least one group");
        }
        if let Some(&a) = assignment.iter().find(|&&a| a >= g) {
            return validation(format!("group index {a} out of range for g = {g}"));
        }
        let mut sizes = vec![0usize; g];
        for &a in &assignment {
            sizes[a] += 1;
        }
        if let Some(j) = sizes.iter().position(|&s| s == 0) {
            return validation(format!("group {j} is empty"));
        }
        Ok(Self { g, assignment })
    }

    /// Every institution in its own group.
    pub fn singletons(d: usize) -> Self {
        Self { g: d, assignment: (0..d).collect() }
    }

    /// All institutions in one group.
    pub fn single(d: usize) -> Self {
        Self { g: 1, assignment: vec![0; d] }
    }

    pub fn groups(&self) -> usize {
        self.g
    }

    pub fn dim(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn group_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.g];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn members(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment.iter().enumerate().filter(move |(_, &a)| a == j).map(|(i, _)| i)
    }

    /// Dense grouping matrix `B` (g x d).
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let mut b = vec![vec![0.0; self.dim()]; self.g];
        for (i, &a) in self.assignment.iter().enumerate() {
            b[a][i] = 1.0;
        }
        b
    }

    /// `B^T z`: the per-institution capital injection for group levels `z`.
    pub fn expand(&self, z: &[f64]) -> Vec<f64> {
        self.assignment.iter().map(|&a| z[a]).collect()
    }

    /// `x + B^T z`.
    pub fn shifted(&self, x: &[f64], z: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.assignment).map(|(xi, &a)| xi + z[a]).collect()
    }

    /// `B mu`: aggregates a per-institution vector into group totals.
    pub fn collapse(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.g];
        for (i, &a) in self.assignment.iter().enumerate() {
            out[a] += mu[i];
        }
        out
    }
}

/// `N` operating cash-flow scenarios in `R^d_+`, one per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    d: usize,
    values: Vec<Vec<f64>>,
}

impl ScenarioSet {
    pub fn new(d: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        for (n, row) in values.iter().enumerate() {
            if row.len() != d {
                return validation(format!("scenario {n} has {} entries, expected {d}", row.len()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return validation(format!("scenario {n} has a non-finite entry"));
            }
        }
        Ok(Self { d, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n]
    }

    /// The first `n` scenarios.
    pub fn prefix(&self, n: usize) -> Self {
        Self { d: self.d, values: self.values[..n.min(self.values.len())].to_vec() }
    }

    /// Every scenario shifted by the same vector.
    pub fn translated(&self, shift: &[f64]) -> Self {
        let values = self
            .values
            .iter()
            .map(|r| r.iter().zip(shift).map(|(a, b)| a + b).collect())
            .collect();
        Self { d: self.d, values }
    }
}

/// Value-at-risk threshold `alpha` and level `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskSpec {
    pub alpha: f64,
    pub lambda: f64,
}

impl RiskSpec {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return validation(format!("alpha must be positive, got {alpha}"));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return validation(format!("lambda must lie in (0, 1), got {lambda}"));
        }
        Ok(Self { alpha, lambda })
    }

    /// Largest number of scenarios that may violate the threshold.
    pub fn allowed_violations(&self, n: usize) -> usize {
        allowed_violations(n, self.lambda)
    }

    /// Number of scenarios that must meet the threshold, `ceil(N (1 - lambda))`.
    pub fn required_successes(&self, n: usize) -> usize {
        n - self.allowed_violations(n).min(n)
    }
}

/// Lower and upper corners of the capital search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapitalBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// The data that defines one sample-average risk set.
#[derive(Debug, Clone, Copy)]
pub struct SaaProblem<'a> {
    pub network: &'a FinancialNetwork,
    pub grouping: &'a Grouping,
    pub scenarios: &'a ScenarioSet,
    pub spec: RiskSpec,
}

impl<'a> SaaProblem<'a> {
    pub fn new(
        network: &'a FinancialNetwork,
        grouping: &'a Grouping,
        scenarios: &'a ScenarioSet,
        spec: RiskSpec,
    ) -> Result<Self> {
        let d = network.dim();
        if grouping.dim() != d {
            return validation(format!("grouping covers {} institutions, network has {d}", grouping.dim()));
        }
        if scenarios.dim() != d {
            return validation(format!("scenarios have dimension {}, network has {d}", scenarios.dim()));
        }
        if scenarios.is_empty() {
            return validation("at least one scenario is required");
        }
        RiskSpec::new(spec.alpha, spec.lambda)?;
        Ok(Self { network, grouping, scenarios, spec })
    }

    pub fn groups(&self) -> usize {
        self.grouping.groups()
    }

    /// Number of scenarios that must clear at or above alpha.
    pub fn required_successes(&self) -> usize {
        self.spec.required_successes(self.scenarios.len())
    }
}

/// `floor(N lambda)` with a small guard against representation error in
/// products such as `100 * 0.29`.
pub fn allowed_violations(n: usize, lambda: f64) -> usize {
    ((n as f64) * lambda + 1e-9).floor().max(0.0) as usize
}
