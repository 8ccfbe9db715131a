use sysvar_core::shocks::{latent_normals, lomax_cdf, sample_shocks, ShockParams};
use sysvar_core::Grouping;

fn params(nu: f64, beta: Vec<f64>, rho: f64, n: usize, seed: u64) -> ShockParams {
    ShockParams { nu, beta_by_group: beta, rho, n, seed }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn parameter_validation() {
    let g = Grouping::new(2, vec![0, 1, 1]).unwrap();
    assert!(sample_shocks(&params(1.0, vec![1.0, 1.0], 0.3, 5, 1), &g).is_err());
    assert!(sample_shocks(&params(3.0, vec![1.0, 1.0], 1.0, 5, 1), &g).is_err());
    assert!(sample_shocks(&params(3.0, vec![1.0, 1.0], -0.1, 5, 1), &g).is_err());
    assert!(sample_shocks(&params(3.0, vec![1.0], 0.3, 5, 1), &g).is_err());
    assert!(sample_shocks(&params(3.0, vec![1.0, 0.0], 0.3, 5, 1), &g).is_err());
    assert!(sample_shocks(&params(3.0, vec![1.0, 2.0], 0.0, 5, 1), &g).is_ok());
}

#[test]
fn lomax_mean() {
    let g = Grouping::single(1);
    let n = 100_000;
    let sc = sample_shocks(&params(3.0, vec![100.0], 0.3, n, 2024), &g).unwrap();
    let xs: Vec<f64> = sc.rows().iter().map(|r| r[0]).collect();
    assert!(xs.iter().all(|&x| x >= 0.0));
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    assert!((mean - 50.0).abs() <= 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn marginal_passes_ks() {
    let g = Grouping::new(2, vec![0, 1]).unwrap();
    let n = 100_000;
    let sc = sample_shocks(&params(3.0, vec![100.0, 50.0], 0.3, n, 7), &g).unwrap();
    for (j, beta) in [(0usize, 100.0), (1, 50.0)] {
        let mut xs: Vec<f64> = sc.rows().iter().map(|r| r[j]).collect();
        xs.sort_by(f64::total_cmp);
        let dn = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = lomax_cdf(x, beta, 3.0);
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value
        assert!(dn < 1.63 / (n as f64).sqrt(), "coordinate {j}: D = {dn}");
    }
}

#[test]
fn latent_correlation() {
    let n = 100_000;
    let d = 3;
    let draws: Vec<Vec<f64>> = (0..n).map(|k| latent_normals(11, 0.3, d, k)).collect();
    let col = |j: usize| draws.iter().map(|r| r[j]).collect::<Vec<_>>();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let c = pearson(&col(a), &col(b));
        assert!((c - 0.3).abs() < 0.05, "{c}");
    }
    let n0 = 2_000;
    let indep: Vec<Vec<f64>> = (0..n0).map(|k| latent_normals(12, 0.0, 2, k)).collect();
    let c = pearson(&indep.iter().map(|r| r[0]).collect::<Vec<_>>(), &indep.iter().map(|r| r[1]).collect::<Vec<_>>());
    assert!(c.abs() < 4.0 / (n0 as f64).sqrt());
}

#[test]
fn prefix_stable_and_deterministic() {
    let g = Grouping::new(2, vec![0, 0, 1]).unwrap();
    let big = sample_shocks(&params(3.0, vec![100.0, 50.0], 0.3, 400, 5), &g).unwrap();
    let small = sample_shocks(&params(3.0, vec![100.0, 50.0], 0.3, 50, 5), &g).unwrap();
    assert_eq!(big.prefix(50), small);
    assert_eq!(big, sample_shocks(&params(3.0, vec![100.0, 50.0], 0.3, 400, 5), &g).unwrap());
    assert_ne!(big, sample_shocks(&params(3.0, vec![100.0, 50.0], 0.3, 400, 6), &g).unwrap());
}
