#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sysvar_core::{FinancialNetwork, Grouping, ScenarioSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random network with roughly `density` of the off-diagonal links present.
pub fn random_network(rng: &mut ChaCha8Rng, d: usize, density: f64) -> FinancialNetwork {
    let mut pi = vec![vec![0.0; d]; d];
    for i in 0..d {
        let mut row: Vec<f64> = (0..d)
            .map(|j| if j != i && rng.random::<f64>() < density { rng.random_range(0.1..1.0) } else { 0.0 })
            .collect();
        if row.iter().all(|&v| v == 0.0) {
            let mut j = rng.random_range(0..d - 1);
            if j >= i {
                j += 1;
            }
            row[j] = 1.0;
        }
        let s: f64 = row.iter().sum();
        pi[i] = row.iter().map(|v| v / s).collect();
    }
    // re-normalize exactly enough for validation
    for row in pi.iter_mut() {
        let s: f64 = row.iter().sum();
        let last = row.iter().rposition(|&v| v > 0.0).unwrap();
        row[last] += 1.0 - s;
    }
    let pbar = (0..d).map(|_| rng.random_range(1.0..10.0)).collect();
    FinancialNetwork::new(pi, pbar).unwrap()
}

pub fn random_cash(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(0.0..scale)).collect()
}

pub fn random_scenarios(rng: &mut ChaCha8Rng, d: usize, n: usize, scale: f64) -> ScenarioSet {
    ScenarioSet::new(d, (0..n).map(|_| random_cash(rng, d, scale)).collect()).unwrap()
}

/// Two groups, each nonempty.
pub fn random_grouping(rng: &mut ChaCha8Rng, d: usize, g: usize) -> Grouping {
    loop {
        let assignment: Vec<usize> = (0..d).map(|_| rng.random_range(0..g)).collect();
        if let Ok(gr) = Grouping::new(g, assignment) {
            return gr;
        }
    }
}

/// All subsets of `0..n` of size `k`, as index lists.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}
