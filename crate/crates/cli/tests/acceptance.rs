//! End-to-end acceptance checks. Each check prints one PASS or FAIL line
//! with its wall time; the process fails if any check fails or overruns its
//! time budget.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sysvar_core::clearing::{enumerate_clearing_vectors, is_clearing_vector};
use sysvar_core::netgen::{
    build_liabilities, generate_bollobas, generate_bollobas_with_events, network_stats, BollobasParams, LiabilityNetwork,
};
use sysvar_core::optim::simplex::{solve_lp, LinearProgram, LpStatus, Sense};
use sysvar_core::saa::convergence::{convergence_study, ConvergenceConfig};
use sysvar_core::saa::{
    algorithm1, algorithm2, classify_distance, classify_exhaustive, classify_membership, distance_probe, insensitive_saa,
    membership, Grid, SaaOptions,
};
use sysvar_core::scalarize::{bisection_unit, ideal_point, norm_min, weighted_sum, z_bounds, IdealMethod};
use sysvar_core::shocks::{lomax_cdf, sample_shocks, ShockParams};
use sysvar_core::{
    aggregate_en, clearing_fixed_point, clearing_lp, FinancialNetwork, Grouping, RiskSpec, SaaProblem, ScenarioSet,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_network(r: &mut ChaCha8Rng, d: usize, density: f64) -> FinancialNetwork {
    let mut pi = vec![vec![0.0; d]; d];
    for (i, slot) in pi.iter_mut().enumerate() {
        let mut row: Vec<f64> = (0..d)
            .map(|j| if j != i && r.random::<f64>() < density { r.random_range(0.1..1.0) } else { 0.0 })
            .collect();
        if row.iter().all(|&v| v == 0.0) {
            let mut j = r.random_range(0..d - 1);
            if j >= i {
                j += 1;
            }
            row[j] = 1.0;
        }
        let s: f64 = row.iter().sum();
        let mut row: Vec<f64> = row.iter().map(|v| v / s).collect();
        let s: f64 = row.iter().sum();
        let last = row.iter().rposition(|&v| v > 0.0).unwrap();
        row[last] += 1.0 - s;
        *slot = row;
    }
    let pbar = (0..d).map(|_| r.random_range(1.0..10.0)).collect();
    FinancialNetwork::new(pi, pbar).unwrap()
}

fn random_cash(r: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| r.random_range(0.0..scale)).collect()
}

fn random_scenarios(r: &mut ChaCha8Rng, d: usize, n: usize, scale: f64) -> ScenarioSet {
    ScenarioSet::new(d, (0..n).map(|_| random_cash(r, d, scale)).collect()).unwrap()
}

fn random_grouping(r: &mut ChaCha8Rng, d: usize, g: usize) -> Grouping {
    loop {
        let assignment: Vec<usize> = (0..d).map(|_| r.random_range(0..g)).collect();
        if let Ok(gr) = Grouping::new(g, assignment) {
            return gr;
        }
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
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
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// The ten-node benchmark network shared by the set-level checks.
fn benchmark_network() -> LiabilityNetwork {
    let p = BollobasParams { theta: 0.2, eta: 0.6, zeta: 0.2, delta_in: 0.5, delta_out: 0.5, target_nodes: 10, seed: 7 };
    let g = generate_bollobas(&p).unwrap();
    build_liabilities(&g, 3, &[vec![400.0, 200.0], vec![300.0, 150.0]], true).unwrap()
}

fn clearing_engines_agree() {
    let mut r = rng(11);
    for case in 0..100 {
        let d = [5, 10, 20][case % 3];
        let density = r.random_range(0.2..0.9);
        let net = random_network(&mut r, d, density);
        let scale = r.random_range(0.1..8.0);
        let x = random_cash(&mut r, d, scale);
        let a = clearing_fixed_point(&net, &x).unwrap();
        let b = clearing_lp(&net, &x, &vec![1.0; d]).unwrap();
        let gap = a.p.iter().zip(&b.p).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        assert!(gap <= 1e-7, "case {case}: {gap}");
    }
}

fn upper_corner_and_infeasibility() {
    let mut r = rng(13);
    for case in 0..100 {
        let d = r.random_range(2..12);
        let net = random_network(&mut r, d, 0.5);
        let g = r.random_range(1..=d.min(3));
        let gr = random_grouping(&mut r, d, g);
        let sc = random_scenarios(&mut r, d, 1, 5.0);
        let hi = z_bounds(&net, &gr, &sc).unwrap().hi;
        let total = aggregate_en(&net, &gr.shifted(sc.row(0), &hi)).unwrap();
        assert!((total - net.total_obligations()).abs() <= 1e-9, "case {case}");
    }
    for case in 0..10 {
        let d = r.random_range(2..6);
        let net = random_network(&mut r, d, 0.6);
        let gr = random_grouping(&mut r, d, 2);
        let sc = random_scenarios(&mut r, d, 4, 2.0);
        let total = net.total_obligations();
        for (alpha, feasible) in [(total - 1e-3, true), (total, true), (total + 1e-3, false)] {
            let spec = RiskSpec::new(alpha, 0.25).unwrap();
            let out = weighted_sum(&SaaProblem::new(&net, &gr, &sc, spec).unwrap(), &[1.0, 1.0]).unwrap();
            assert_eq!(out.feasible, feasible, "case {case} alpha {alpha} total {total}");
        }
    }
}

fn dyadic_net(r: &mut ChaCha8Rng, pbar: f64) -> FinancialNetwork {
    let pi = (0..3)
        .map(|i| {
            let others: Vec<usize> = (0..3).filter(|&j| j != i).collect();
            let mut row = vec![0.0; 3];
            match r.random_range(0..3) {
                0 => row[others[0]] = 1.0,
                1 => row[others[1]] = 1.0,
                _ => {
                    row[others[0]] = 0.5;
                    row[others[1]] = 0.5;
                }
            }
            row
        })
        .collect();
    FinancialNetwork::new(pi, vec![pbar; 3]).unwrap()
}

fn clearing_enumeration() {
    let net = FinancialNetwork::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![2.0, 2.0]).unwrap();
    let polys = enumerate_clearing_vectors(&net, &[0.0, 0.0]).unwrap();
    assert!(polys.iter().any(|q| q.y == [0, 0]) && polys.iter().any(|q| q.y == [1, 1]));
    for a in 0..=80 {
        for b in 0..=80 {
            let p = [a as f64 / 40.0, b as f64 / 40.0];
            assert_eq!(polys.iter().any(|q| q.contains(&p, 1e-9)), a == b, "{p:?}");
        }
    }

    let mut r = rng(16);
    let m = 50;
    for case in 0..20 {
        let net = dyadic_net(&mut r, (m - 1) as f64);
        let x: Vec<f64> = if case % 2 == 0 { vec![0.0; 3] } else { (0..3).map(|_| r.random_range(0..4) as f64).collect() };
        let polys = enumerate_clearing_vectors(&net, &x).unwrap();
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let p = [a as f64, b as f64, c as f64];
                    let clearing = is_clearing_vector(&net, &x, &p, 1e-6);
                    let covered = polys.iter().any(|q| q.contains(&p, 1e-6));
                    assert_eq!(clearing, covered, "case {case} p {p:?}");
                }
            }
        }
    }
}

/// min w^T z when exactly the scenarios in `subset` must reach alpha.
fn subset_lp(net: &FinancialNetwork, gr: &Grouping, sc: &ScenarioSet, alpha: f64, w: &[f64], subset: &[usize]) -> Option<f64> {
    let d = net.dim();
    let g = gr.groups();
    let bounds = z_bounds(net, gr, sc).unwrap();
    let mut c = vec![0.0; g + d * subset.len()];
    c[..g].copy_from_slice(w);
    let mut lp = LinearProgram::new(Sense::Minimize, c);
    for j in 0..g {
        lp.set_bounds(j, bounds.lo[j], bounds.hi[j]);
    }
    for (s, &n) in subset.iter().enumerate() {
        let off = g + s * d;
        for i in 0..d {
            lp.set_bounds(off + i, 0.0, net.pbar()[i]);
            let mut row = vec![(off + i, 1.0), (gr.group_of(i), -1.0)];
            for j in 0..d {
                if net.pi()[j][i] > 0.0 {
                    row.push((off + j, -net.pi()[j][i]));
                }
            }
            lp.add_le(row, sc.row(n)[i]);
        }
        lp.add_ge((0..d).map(|i| (off + i, 1.0)).collect(), alpha);
    }
    let sol = solve_lp(&lp).unwrap();
    (sol.status == LpStatus::Optimal).then_some(sol.objective)
}

fn weighted_sum_oracles() {
    for seed in 0..20u64 {
        let mut r = rng(seed);
        let d = r.random_range(2..=8);
        let n = r.random_range(4..=8);
        let net = random_network(&mut r, d, 0.6);
        let gr = random_grouping(&mut r, d, 2);
        let sc = random_scenarios(&mut r, d, n, 3.0);
        let alpha = r.random_range(0.5..0.95) * net.total_obligations();
        let spec = RiskSpec::new(alpha, 0.25).unwrap();
        let problem = SaaProblem::new(&net, &gr, &sc, spec).unwrap();
        let w: Vec<f64> = (0..2).map(|_| r.random_range(0.1..2.0)).collect();
        let out = weighted_sum(&problem, &w).unwrap();
        let oracle = subsets(n, spec.required_successes(n))
            .iter()
            .filter_map(|s| subset_lp(&net, &gr, &sc, alpha, &w, s))
            .fold(f64::INFINITY, f64::min);
        assert!(out.feasible && out.optimal, "seed {seed}");
        assert!((out.value - oracle).abs() <= 1e-6, "seed {seed}: {} vs {oracle}", out.value);
    }
    for seed in 100..120u64 {
        let mut r = rng(seed);
        let d = r.random_range(2..=6);
        let n = r.random_range(5..=20);
        let net = random_network(&mut r, d, 0.6);
        let gr = random_grouping(&mut r, d, 2);
        let sc = random_scenarios(&mut r, d, n, 3.0);
        let alpha = r.random_range(0.5..0.95) * net.total_obligations();
        let problem = SaaProblem::new(&net, &gr, &sc, RiskSpec::new(alpha, 0.2).unwrap()).unwrap();
        for j in 0..2 {
            let mut w = vec![0.0; 2];
            w[j] = 1.0;
            let milp = weighted_sum(&problem, &w).unwrap();
            let bis = bisection_unit(&problem, j).unwrap().unwrap();
            assert!((milp.value - bis).abs() <= 1e-5, "seed {seed} j {j}: {} vs {bis}", milp.value);
        }
    }
}

/// Distance to the set by scanning `z1` at step `h` and bisecting for the
/// lowest acceptable `z2`.
fn scan_distance(problem: &SaaProblem, v: &[f64], h: f64) -> f64 {
    let b = z_bounds(problem.network, problem.grouping, problem.scenarios).unwrap();
    let ok = |z: [f64; 2]| membership(problem, &z).unwrap().accepted;
    let mut best = f64::INFINITY;
    let steps = ((b.hi[0] - b.lo[0]) / h).ceil() as usize;
    for s in 0..=steps {
        let z1 = (b.lo[0] + s as f64 * h).min(b.hi[0]);
        if !ok([z1, b.hi[1]]) {
            continue;
        }
        let (mut lo, mut hi) = (b.lo[1], b.hi[1]);
        if ok([z1, lo]) {
            hi = lo;
        }
        while hi - lo > 1e-7 {
            let mid = 0.5 * (lo + hi);
            if ok([z1, mid]) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let z2 = hi.max(v[1]);
        best = best.min(((z1 - v[0]).powi(2) + (z2 - v[1]).powi(2)).sqrt());
    }
    best
}

fn distance_scalarization() {
    for seed in 0..20u64 {
        let mut r = rng(1000 + seed);
        let d = r.random_range(2..=4);
        let net = random_network(&mut r, d, 0.7);
        let gr = random_grouping(&mut r, d, 2);
        let sc = random_scenarios(&mut r, d, 4, 2.0);
        let alpha = r.random_range(0.6..0.95) * net.total_obligations();
        let problem = SaaProblem::new(&net, &gr, &sc, RiskSpec::new(alpha, 0.25).unwrap()).unwrap();
        let b = z_bounds(&net, &gr, &sc).unwrap();
        let below = seed % 2 == 0;
        let v: Vec<f64> = (0..2).map(|j| if below { b.lo[j] - 1.0 } else { r.random_range(b.lo[j]..b.hi[j]) }).collect();
        let out = norm_min(&problem, &v).unwrap();
        assert!(out.feasible && out.optimal, "seed {seed}");
        let scan = scan_distance(&problem, &v, 1e-3);
        assert!((out.value - scan).abs() <= 2e-3, "seed {seed}: {} vs {scan}", out.value);
        if below {
            assert!(out.z.iter().zip(&v).all(|(z, vj)| *z >= vj - 1e-9), "seed {seed}");
        }
    }
}

struct Toy {
    net: FinancialNetwork,
    gr: Grouping,
    sc: ScenarioSet,
    spec: RiskSpec,
}

impl Toy {
    fn random(seed: u64) -> Self {
        let mut r = rng(seed);
        let d = r.random_range(2..=4);
        let net = random_network(&mut r, d, 0.7);
        let gr = random_grouping(&mut r, d, 2);
        let n = r.random_range(4..=6);
        let sc = random_scenarios(&mut r, d, n, 2.0);
        let alpha = r.random_range(0.6..0.95) * net.total_obligations();
        Self { net, gr, sc, spec: RiskSpec::new(alpha, 0.25).unwrap() }
    }

    fn problem(&self) -> SaaProblem<'_> {
        SaaProblem::new(&self.net, &self.gr, &self.sc, self.spec).unwrap()
    }
}

fn grid_algorithms() {
    let mut checked = 0;
    for seed in 0..12u64 {
        let toy = Toy::random(2000 + seed);
        let p = toy.problem();
        let Some(ideal) = ideal_point(&p, IdealMethod::Bisection).unwrap() else { continue };
        let hi = z_bounds(&toy.net, &toy.gr, &toy.sc).unwrap().hi;
        let width = ideal.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0f64, f64::max).max(1e-3);
        let eps = width / 45.0 * 2f64.sqrt();
        let grid = Grid::new(&ideal, &hi, eps).unwrap();
        assert!(grid.len() <= 2500);
        let truth = classify_exhaustive(&p, &grid).unwrap();
        assert_eq!(classify_membership(&p, &grid, None).unwrap().acceptable, truth, "seed {seed}");
        assert_eq!(classify_distance(&p, &grid, None, 100_000).unwrap().acceptable, truth, "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 8, "only {checked} nonempty toys");

    let ln = benchmark_network();
    let shocks = ShockParams { nu: 3.0, beta_by_group: vec![100.0, 50.0], rho: 0.3, n: 50, seed: 1 };
    let sc = sample_shocks(&shocks, &ln.grouping).unwrap();
    let spec = RiskSpec::new(0.8 * ln.network.total_obligations(), 0.1).unwrap();
    let p = SaaProblem::new(&ln.network, &ln.grouping, &sc, spec).unwrap();
    let eps = 10.0;
    let opts = SaaOptions::new(eps);
    let s1 = algorithm1(&p, &opts).unwrap();
    let s2 = algorithm2(&p, &opts).unwrap();
    assert!(!s1.is_empty());
    assert_eq!(s1, s2);
    for a in &s1.generators {
        assert!(membership(&p, a).unwrap().accepted, "generator {a:?}");
    }
    let mut r = rng(6);
    let mut hits = 0;
    for _ in 0..1000 {
        let v: Vec<f64> = s1.bounds.lo.iter().zip(&s1.bounds.hi).map(|(l, h)| r.random_range(*l..=*h)).collect();
        if membership(&p, &v).unwrap().accepted {
            hits += 1;
            assert!(distance_probe(&v, &s1) <= eps, "{v:?}");
        }
    }
    assert!(hits > 100, "only {hits} accepted samples");
}

fn dyadic_toy(shift: &[f64]) -> Toy {
    let pi = vec![vec![0.0, 0.5, 0.5], vec![0.25, 0.0, 0.75], vec![0.5, 0.5, 0.0]];
    let net = FinancialNetwork::new(pi, vec![4.0, 6.0, 8.0]).unwrap();
    let gr = Grouping::new(2, vec![0, 1, 1]).unwrap();
    let rows = vec![
        vec![1.0, 0.5, 2.0],
        vec![0.25, 3.0, 1.0],
        vec![2.0, 0.0, 0.5],
        vec![0.0, 1.5, 0.25],
        vec![1.5, 1.0, 3.0],
    ];
    let sc = ScenarioSet::new(3, rows).unwrap().translated(&gr.expand(shift));
    Toy { net, gr, sc, spec: RiskSpec::new(15.0, 0.2).unwrap() }
}

fn risk_measure_axioms() {
    let toy = Toy::random(2400);
    let p = toy.problem();
    let b = z_bounds(&toy.net, &toy.gr, &toy.sc).unwrap();
    let mut r = rng(7);
    let mut accepted = 0;
    for _ in 0..1000 {
        let z: Vec<f64> = b.lo.iter().zip(&b.hi).map(|(l, h)| r.random_range(*l..=*h)).collect();
        let up: Vec<f64> = z.iter().map(|a| a + r.random_range(0.0..2.0)).collect();
        if membership(&p, &z).unwrap().accepted {
            accepted += 1;
            assert!(membership(&p, &up).unwrap().accepted);
        }
    }
    assert!(accepted > 0);

    let (lo, hi, step) = (vec![-3.0, -2.0], vec![8.0, 8.0], 0.25);
    let base = classify_membership(&dyadic_toy(&[0.0, 0.0]).problem(), &Grid::with_step(&lo, &hi, step).unwrap(), None)
        .unwrap()
        .generators();
    assert!(!base.is_empty());
    for w in [[1.0, 0.5], [-0.75, 2.0], [3.0, -1.25]] {
        let lo_w: Vec<f64> = lo.iter().zip(&w).map(|(a, b)| a - b).collect();
        let hi_w: Vec<f64> = hi.iter().zip(&w).map(|(a, b)| a - b).collect();
        let moved = dyadic_toy(&w);
        let gens = classify_membership(&moved.problem(), &Grid::with_step(&lo_w, &hi_w, step).unwrap(), None)
            .unwrap()
            .generators();
        let expected: Vec<Vec<f64>> = base.iter().map(|a| a.iter().zip(&w).map(|(x, y)| x - y).collect()).collect();
        assert_eq!(gens, expected, "w = {w:?}");
    }

    // every point above a generator is acceptable
    let dp = dyadic_toy(&[0.0, 0.0]);
    let p = dp.problem();
    for a in &base {
        for _ in 0..20 {
            let z: Vec<f64> = a.iter().map(|x| x + r.random_range(0.0..5.0)).collect();
            assert!(membership(&p, &z).unwrap().accepted);
        }
    }
}

fn scan_quantile(aggregates: &[f64], spec: &RiskSpec, h: f64) -> f64 {
    let n = aggregates.len() as f64;
    let lo = spec.alpha - aggregates.iter().copied().fold(f64::NEG_INFINITY, f64::max) - 2.0 * h;
    (0u64..)
        .map(|k| lo + k as f64 * h)
        .find(|y| aggregates.iter().filter(|&&l| l + y < spec.alpha).count() as f64 / n <= spec.lambda)
        .unwrap()
}

fn insensitive_quantile() {
    let mut r = rng(51);
    for case in 0..100 {
        let n = r.random_range(1..40);
        let aggregates: Vec<f64> = (0..n).map(|_| r.random_range(0.0..10.0)).collect();
        let spec = RiskSpec::new(r.random_range(0.5..12.0), r.random_range(0.01..0.99)).unwrap();
        let exact = insensitive_saa(&aggregates, &spec).unwrap();
        let scan = scan_quantile(&aggregates, &spec, 1e-4);
        assert!((exact - scan).abs() <= 1e-4, "case {case}: {exact} vs {scan}");
        let max = aggregates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = aggregates.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(spec.alpha - max <= exact && exact <= spec.alpha - min);
    }
}

fn convergence() {
    let ln = benchmark_network();
    let n_list = vec![25, 50, 100, 200];
    let cfg = ConvergenceConfig {
        shocks: ShockParams { nu: 3.0, beta_by_group: vec![1000.0, 500.0], rho: 0.3, n: 400, seed: 0 },
        spec: RiskSpec::new(0.9 * ln.network.total_obligations(), 0.1).unwrap(),
        n_list: n_list.clone(),
        seeds: (0..10).collect(),
        epsilon: 10.0,
        n_ref: 400,
        probe_fractions: vec![0.25, 0.5, 0.75],
    };
    let table = convergence_study(&ln.network, &ln.grouping, &cfg).unwrap();
    let med: Vec<f64> = n_list.iter().map(|&n| table.median_hausdorff(n).unwrap()).collect();
    println!("      medians over N = {n_list:?}: {med:?}");
    assert!(med.iter().all(|m| m.is_finite()));
    assert!(med.windows(2).all(|w| w[1] <= w[0]), "{med:?}");
    assert!(med[3] <= 0.8 * med[0], "{med:?}");
}

fn samplers_and_generator() {
    let p = |theta, eta, zeta, nodes, seed| BollobasParams {
        theta,
        eta,
        zeta,
        delta_in: 0.5,
        delta_out: 0.5,
        target_nodes: nodes,
        seed,
    };
    assert!(generate_bollobas(&p(0.2, 0.6, 0.3, 10, 1)).is_err());
    assert!(generate_bollobas(&p(0.2, 0.6, 0.2, 10, 1)).is_ok());

    let (mut hits, mut total) = (0u64, 0u64);
    for seed in 0..500 {
        let (_, ev) = generate_bollobas_with_events(&p(0.5, 0.0, 0.5, 50, seed)).unwrap();
        hits += ev.new_source;
        total += ev.total();
    }
    let sigma = (total as f64 * 0.25).sqrt();
    assert!((hits as f64 - 0.5 * total as f64).abs() <= 3.0 * sigma, "{hits} of {total}");

    let n = 100_000;
    let sc = sample_shocks(
        &ShockParams { nu: 3.0, beta_by_group: vec![100.0], rho: 0.3, n, seed: 2024 },
        &Grouping::single(1),
    )
    .unwrap();
    let mut xs: Vec<f64> = sc.rows().iter().map(|r| r[0]).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    assert!((mean - 50.0).abs() <= 3.0 * (var / n as f64).sqrt(), "mean {mean}");
    xs.sort_by(f64::total_cmp);
    let dn = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = lomax_cdf(x, 100.0, 3.0);
            (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(dn < 1.63 / (n as f64).sqrt(), "KS statistic {dn}");

    let k4: Vec<Vec<u8>> = (0..4).map(|i| (0..4).map(|j| (i != j) as u8).collect()).collect();
    let s = network_stats(&k4, &Grouping::new(2, vec![0, 0, 1, 1]).unwrap()).unwrap();
    assert!((s.cpi - 5.0 / 6.0).abs() < 1e-15);
    assert!((s.cpe - 2.0 / 12.0).abs() < 1e-15);
    let star = vec![vec![0, 0, 0], vec![1, 0, 0], vec![1, 0, 0]];
    assert_eq!(network_stats(&star, &Grouping::new(2, vec![0, 1, 1]).unwrap()).unwrap().cpi, 1.0);
}

fn sysvar(dir: &Path, threads: &str, args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_sysvar"))
        .current_dir(dir)
        .env_remove("SYSVAR_THREADS")
        .arg("--threads")
        .arg(threads)
        .args(args)
        .output()
        .unwrap();
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.code().unwrap()
}

fn determinism() {
    let runs: Vec<(&str, Vec<&str>)> = vec![
        (
            "net.json",
            "gen-network --nodes 10 --core-size 3 --theta 0.2 --eta 0.6 --zeta 0.2 --delta-in 0.5 --delta-out 0.5 \
             --m 400,200,300,150 --seed 7 --edges-out edges.csv --out net.json"
                .split_whitespace()
                .collect(),
        ),
        ("edges.csv", vec![]),
        (
            "scen.csv",
            "sample-shocks --network net.json --nu 3 --beta 100,50 --rho 0.3 --n 50 --seed 1 --out scen.csv"
                .split_whitespace()
                .collect(),
        ),
        ("clear.json", "clear --network net.json --x scen.csv --out clear.json".split_whitespace().collect()),
        ("clear_lp.json", "clear --network net.json --x scen.csv --method lp --out clear_lp.json".split_whitespace().collect()),
        (
            "enum.json",
            "enumerate --network net.json --x 0,0,0,0,0,0,0,0,0,0 --out enum.json".split_whitespace().collect(),
        ),
        (
            "ws.json",
            "scalarize --network net.json --scenarios scen.csv --alpha-frac 0.8 --lambda 0.1 --weights 1,2 --out ws.json"
                .split_whitespace()
                .collect(),
        ),
        (
            "nm.json",
            "scalarize --network net.json --scenarios scen.csv --alpha-frac 0.8 --lambda 0.1 --point 0,0 --out nm.json"
                .split_whitespace()
                .collect(),
        ),
        (
            "set1.json",
            "saa --network net.json --scenarios scen.csv --alpha-frac 0.8 --lambda 0.1 --epsilon 10 --algo 1 --out set1.json"
                .split_whitespace()
                .collect(),
        ),
        (
            "set2.json",
            "saa --network net.json --scenarios scen.csv --alpha-frac 0.8 --lambda 0.1 --epsilon 10 --algo 2 --out set2.json"
                .split_whitespace()
                .collect(),
        ),
        (
            "conv.csv",
            "converge --network net.json --nu 3 --beta 1000,500 --rho 0.3 --alpha-frac 0.9 --lambda 0.1 --epsilon 20 \
             --n-list 25,50 --n-ref 100 --seeds 3 --out conv.csv"
                .split_whitespace()
                .collect(),
        ),
        ("stats.json", "stats --network net.json --edges edges.csv --out stats.json".split_whitespace().collect()),
        ("stair.csv", "plotdata --in set1.json --out stair.csv".split_whitespace().collect()),
    ];
    let single = tempfile::tempdir().unwrap();
    let multi = tempfile::tempdir().unwrap();
    for (file, args) in &runs {
        if !args.is_empty() {
            assert_eq!(sysvar(single.path(), "1", args), 0, "{args:?}");
            assert_eq!(sysvar(multi.path(), "4", args), 0, "{args:?}");
        }
        let a = std::fs::read(single.path().join(file)).unwrap();
        let b = std::fs::read(multi.path().join(file)).unwrap();
        assert!(!a.is_empty(), "{file} is empty");
        assert!(a == b, "{file} differs between 1 and 4 threads");
    }
}

type Check = (&'static str, Duration, fn());

fn main() {
    let checks: Vec<Check> = vec![
        ("fixed point and LP clearing agree", Duration::from_secs(10), clearing_engines_agree),
        ("full payment at z_hi, infeasibility above total", Duration::from_secs(5), upper_corner_and_infeasibility),
        ("clearing-vector enumeration", Duration::from_secs(60), clearing_enumeration),
        ("weighted sum vs subset and bisection oracles", Duration::from_secs(120), weighted_sum_oracles),
        ("distance minimization vs scan", Duration::from_secs(120), distance_scalarization),
        ("grid algorithms and epsilon coverage", Duration::from_secs(300), grid_algorithms),
        ("monotonicity, translativity, upper set", Duration::from_secs(60), risk_measure_axioms),
        ("insensitive quantile vs scan", Duration::from_secs(5), insensitive_quantile),
        ("Hausdorff convergence in N", Duration::from_secs(1200), convergence),
        ("network generator and shock sampler", Duration::from_secs(60), samplers_and_generator),
        ("thread-count determinism of every subcommand", Duration::from_secs(300), determinism),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in checks.into_iter().enumerate() {
        let t = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(check)).is_ok();
        let elapsed = t.elapsed();
        let verdict = match (ok, elapsed <= budget) {
            (true, true) => "PASS",
            (true, false) => "FAIL (over time budget)",
            _ => "FAIL",
        };
        if verdict != "PASS" {
            failed += 1;
        }
        println!("[{:>2}] {verdict:<4} {name} ({:.1}s of {}s)", k + 1, elapsed.as_secs_f64(), budget.as_secs());
    }
    println!("{failed} of 11 acceptance checks failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
