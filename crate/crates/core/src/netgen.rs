//! Directed preferential-attachment graphs, liability construction and
//! network statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::model::{FinancialNetwork, Grouping};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BollobasParams {
    pub theta: f64,
    pub eta: f64,
    pub zeta: f64,
    pub delta_in: f64,
    pub delta_out: f64,
    pub target_nodes: usize,
    pub seed: u64,
}

impl BollobasParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta", self.theta), ("eta", self.eta), ("zeta", self.zeta)] {
            if !(0.0..=1.0).contains(&v) {
                return validation(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        let s = self.theta + self.eta + self.zeta;
        if (s - 1.0).abs() > 1e-12 {
            return validation(format!("theta + eta + zeta must equal 1, got {s}"));
        }
        if !(self.delta_in >= 0.0) || !(self.delta_out >= 0.0) {
            return validation("delta_in and delta_out must be nonnegative");
        }
        if self.target_nodes < 1 {
            return validation("target_nodes must be at least 1");
        }
        if self.target_nodes > 1 && self.theta + self.zeta == 0.0 {
            return validation("theta + zeta = 0 cannot add nodes");
        }
        Ok(())
    }
}

/// Directed multigraph; loops and parallel edges are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedMultigraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

/// How often each growth rule fired during generation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GrowthEvents {
    pub new_source: u64,
    pub new_edge: u64,
    pub new_target: u64,
}

impl GrowthEvents {
    pub fn total(&self) -> u64 {
        self.new_source + self.new_edge + self.new_target
    }
}

struct DegreeSampler {
    deg: Vec<u64>,
    /// Endpoint of every edge on the side this sampler tracks.
    ends: Vec<usize>,
    delta: f64,
}

impl DegreeSampler {
    /// Picks `w` with probability `(deg(w) + delta) / (t + delta n)`.
    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let t = self.ends.len() as f64;
        let n = self.deg.len();
        let mass = t + self.delta * n as f64;
        if rng.random::<f64>() * mass < t {
            self.ends[rng.random_range(0..self.ends.len())]
        } else {
            rng.random_range(0..n)
        }
    }

    fn push_node(&mut self) {
        self.deg.push(0);
    }

    fn push_end(&mut self, v: usize) {
        self.deg[v] += 1;
        self.ends.push(v);
    }
}

/// Bollobas-Borgs-Chayes-Riordan growth from a single node with a self-loop.
pub fn generate_bollobas(params: &BollobasParams) -> Result<DirectedMultigraph> {
    Ok(generate_bollobas_with_events(params)?.0)
}

pub fn generate_bollobas_with_events(params: &BollobasParams) -> Result<(DirectedMultigraph, GrowthEvents)> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut ins = DegreeSampler { deg: vec![0], ends: Vec::new(), delta: params.delta_in };
    let mut outs = DegreeSampler { deg: vec![0], ends: Vec::new(), delta: params.delta_out };
    let mut edges = vec![(0, 0)];
    ins.push_end(0);
    outs.push_end(0);
    let mut events = GrowthEvents::default();
    let mut n = 1;
    while n < params.target_nodes {
        let u: f64 = rng.random();
        let (v, w) = if u < params.theta {
            events.new_source += 1;
            let w = ins.sample(&mut rng);
            ins.push_node();
            outs.push_node();
            n += 1;
            (n - 1, w)
        } else if u < params.theta + params.eta {
            events.new_edge += 1;
            let v = outs.sample(&mut rng);
            let w = ins.sample(&mut rng);
            (v, w)
        } else {
            events.new_target += 1;
            let v = outs.sample(&mut rng);
            ins.push_node();
            outs.push_node();
            n += 1;
            (v, n - 1)
        };
        outs.push_end(v);
        ins.push_end(w);
        edges.push((v, w));
    }
    Ok((DirectedMultigraph { n, edges }, events))
}

/// Simple adjacency: `A[i][j] = 1` iff some edge `i -> j` with `i != j`.
pub fn adjacency(graph: &DirectedMultigraph) -> Vec<Vec<u8>> {
    let mut a = vec![vec![0u8; graph.n]; graph.n];
    for &(s, t) in &graph.edges {
        if s != t {
            a[s][t] = 1;
        }
    }
    a
}

/// Liability network built from a graph, with the core/periphery grouping
/// (group 0 is the core).
#[derive(Debug, Clone, PartialEq)]
pub struct LiabilityNetwork {
    pub network: FinancialNetwork,
    pub grouping: Grouping,
    pub adjacency: Vec<Vec<u8>>,
    /// Nodes that received a repair liability, with the chosen creditor.
    pub repaired: Vec<(usize, usize)>,
}

/// Builds `pi` and `pbar` from the simple adjacency of `graph` and the 2x2
/// intergroup liability matrix `m` (rows and columns ordered core, periphery).
pub fn build_liabilities(
    graph: &DirectedMultigraph,
    core_size: usize,
    m: &[Vec<f64>],
    repair: bool,
) -> Result<LiabilityNetwork> {
    let n = graph.n;
    if core_size < 1 || core_size >= n {
        return validation(format!("core size must lie in [1, {}), got {core_size}", n));
    }
    if m.len() != 2 || m.iter().any(|r| r.len() != 2) {
        return validation("intergroup liability matrix must be 2x2");
    }
    if m.iter().flatten().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return validation("intergroup liabilities must be finite and nonnegative");
    }
    let a = adjacency(graph);
    if a.iter().all(|r| r.iter().all(|&v| v == 0)) {
        return validation("graph has no links between distinct nodes");
    }
    let degree: Vec<usize> = (0..n)
        .map(|i| (0..n).map(|j| (a[i][j] + a[j][i]) as usize).sum())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| degree[j].cmp(&degree[i]).then(i.cmp(&j)));
    let mut assignment = vec![1usize; n];
    for &i in &order[..core_size] {
        assignment[i] = 0;
    }
    let grouping = Grouping::new(2, assignment.clone())?;

    let mut l: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| m[assignment[i]][assignment[j]] * a[i][j] as f64).collect())
        .collect();
    let mut repaired = Vec::new();
    for i in 0..n {
        if l[i].iter().sum::<f64>() > 0.0 {
            continue;
        }
        if !repair {
            return validation(format!("node {i} has no outgoing liabilities"));
        }
        let amount = m.iter().flatten().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
        if !amount.is_finite() {
            return validation("intergroup liability matrix has no positive entry");
        }
        let creditor = order.iter().copied().find(|&j| assignment[j] != assignment[i]).expect("both groups are nonempty");
        l[i][creditor] = amount;
        repaired.push((i, creditor));
    }
    let pbar: Vec<f64> = l.iter().map(|r| r.iter().sum()).collect();
    let pi: Vec<Vec<f64>> = l.iter().zip(&pbar).map(|(r, s)| r.iter().map(|v| v / s).collect()).collect();
    let network = FinancialNetwork::new(pi, pbar)?;
    Ok(LiabilityNetwork { network, grouping, adjacency: a, repaired })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub avg_degree: f64,
    pub density: f64,
    pub total_clustering: f64,
    pub cpe: f64,
    pub cpi: f64,
}

/// Degree, density, clustering and core-periphery statistics. Group 0 of
/// `grouping` is treated as the core, every other group as periphery.
pub fn network_stats(a: &[Vec<u8>], grouping: &Grouping) -> Result<NetworkStats> {
    let d = a.len();
    if grouping.dim() != d || a.iter().any(|r| r.len() != d) {
        return validation("adjacency and grouping dimensions disagree");
    }
    if (0..d).any(|i| a[i][i] != 0) {
        return validation("adjacency must have a zero diagonal");
    }
    let core = |i: usize| grouping.group_of(i) == 0;
    let mut edges = 0usize;
    let mut pp = 0usize;
    let mut cc_missing = 0usize;
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let e = a[i][j] != 0;
            edges += e as usize;
            if !core(i) && !core(j) && e {
                pp += 1;
            }
            if core(i) && core(j) && !e {
                cc_missing += 1;
            }
        }
    }
    if edges == 0 {
        return validation("network has no links; core-periphery statistics are undefined");
    }
    let e = edges as f64;
    let u: Vec<Vec<bool>> = (0..d).map(|i| (0..d).map(|j| i != j && (a[i][j] != 0 || a[j][i] != 0)).collect()).collect();
    let mut total_clustering = 0.0;
    for i in 0..d {
        let nb: Vec<usize> = (0..d).filter(|&j| u[i][j]).collect();
        let k = nb.len();
        if k < 2 {
            continue;
        }
        let mut links = 0usize;
        for x in 0..k {
            for y in x + 1..k {
                links += u[nb[x]][nb[y]] as usize;
            }
        }
        total_clustering += links as f64 / (k * (k - 1) / 2) as f64;
    }
    let density = if d > 1 { e / (d * (d - 1)) as f64 } else { 0.0 };
    Ok(NetworkStats {
        avg_degree: e / d as f64,
        density,
        total_clustering,
        cpe: (cc_missing + pp) as f64 / e,
        cpi: (edges - pp) as f64 / e,
    })
}
