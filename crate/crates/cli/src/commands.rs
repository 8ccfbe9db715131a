use std::path::PathBuf;

use clap::{ArgGroup, Args, ValueEnum};
use serde::Serialize;
use sysvar_core::clearing::enumerate_clearing_vectors;
use sysvar_core::netgen::{adjacency, build_liabilities, generate_bollobas, network_stats, BollobasParams};
use sysvar_core::optim::bnb::DEFAULT_NODE_LIMIT;
use sysvar_core::saa::convergence::{convergence_study, ConvergenceConfig};
use sysvar_core::saa::{algorithm1, algorithm2, SaaOptions};
use sysvar_core::scalarize::{norm_min_with, weighted_sum_with, IdealMethod, ScalarOptions};
use sysvar_core::shocks::{sample_shocks, ShockParams};
use sysvar_core::{clearing_fixed_point, clearing_lp, ApproxSet, FinancialNetwork, RiskSpec, SaaProblem};
use tracing::info;

use crate::formats::{self, fmt_f64, read_network, read_scenarios, to_json};
use crate::CliError;

/// Files produced by a subcommand, plus a note when the answer is an
/// infeasible or empty risk set.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub infeasible: Option<String>,
}

impl Outcome {
    fn file(path: &PathBuf, bytes: Vec<u8>) -> Self {
        Self { files: vec![(path.clone(), bytes)], infeasible: None }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct AlphaArgs {
    /// Threshold on the aggregate clearing payment
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Threshold as a fraction of total obligations
    #[arg(long)]
    pub alpha_frac: Option<f64>,
}

impl AlphaArgs {
    pub fn resolve(&self, net: &FinancialNetwork) -> Result<f64, CliError> {
        match (self.alpha, self.alpha_frac) {
            (Some(a), None) => Ok(a),
            (None, Some(f)) if f > 0.0 && f.is_finite() => Ok(f * net.total_obligations()),
            (None, Some(f)) => Err(CliError::Input(format!("--alpha-frac must be positive, got {f}"))),
            _ => Err(CliError::Input("give exactly one of --alpha and --alpha-frac".into())),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenNetworkArgs {
    #[arg(long)]
    pub nodes: usize,
    #[arg(long)]
    pub core_size: usize,
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub eta: f64,
    #[arg(long)]
    pub zeta: f64,
    #[arg(long)]
    pub delta_in: f64,
    #[arg(long)]
    pub delta_out: f64,
    /// Intergroup liabilities: core-core, core-periphery, periphery-core,
    /// periphery-periphery
    #[arg(long, alias = "m-matrix", value_delimiter = ',', required = true)]
    pub m: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fail instead of adding a liability for nodes without creditors
    #[arg(long)]
    pub no_repair: bool,
    /// Also write the generated multigraph as an edge list
    #[arg(long)]
    pub edges_out: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn gen_network(a: &GenNetworkArgs) -> Result<Outcome, CliError> {
    if a.m.len() != 4 {
        return Err(CliError::Input(format!("--m needs 4 values, got {}", a.m.len())));
    }
    let params = BollobasParams {
        theta: a.theta,
        eta: a.eta,
        zeta: a.zeta,
        delta_in: a.delta_in,
        delta_out: a.delta_out,
        target_nodes: a.nodes,
        seed: a.seed,
    };
    let graph = generate_bollobas(&params)?;
    let m = vec![vec![a.m[0], a.m[1]], vec![a.m[2], a.m[3]]];
    let ln = build_liabilities(&graph, a.core_size, &m, !a.no_repair)?;
    info!(event = "network", nodes = graph.n, edges = graph.edges.len(), repaired = ln.repaired.len());
    let mut out = Outcome::file(&a.out, to_json(&formats::NetworkFile::new(&ln.network, &ln.grouping)));
    if let Some(p) = &a.edges_out {
        out.files.push((p.clone(), formats::edge_csv(&graph)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleShocksArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Lomax tail index
    #[arg(long)]
    pub nu: f64,
    /// Lomax scale per group
    #[arg(long, value_delimiter = ',', required = true)]
    pub beta: Vec<f64>,
    /// Latent equicorrelation
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn sample(a: &SampleShocksArgs) -> Result<Outcome, CliError> {
    let (_, grouping) = read_network(&a.network)?;
    let params = ShockParams { nu: a.nu, beta_by_group: a.beta.clone(), rho: a.rho, n: a.n, seed: a.seed };
    let set = sample_shocks(&params, &grouping)?;
    info!(event = "shocks", scenarios = set.len());
    Ok(Outcome::file(&a.out, formats::scenario_csv(&set)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClearMethod {
    /// Fictitious default
    Fp,
    /// Linear program with unit weights
    Lp,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClearArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Comma-separated cash flows, or a scenario CSV
    #[arg(long)]
    pub x: String,
    #[arg(long, value_enum, default_value_t = ClearMethod::Fp)]
    pub method: ClearMethod,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn clear(a: &ClearArgs) -> Result<Outcome, CliError> {
    let (net, _) = read_network(&a.network)?;
    let rows = formats::read_cashflows(&a.x, net.dim())?;
    let ones = vec![1.0; net.dim()];
    let results = rows
        .iter()
        .map(|x| match a.method {
            ClearMethod::Fp => clearing_fixed_point(&net, x),
            ClearMethod::Lp => clearing_lp(&net, x, &ones),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Outcome::file(&a.out, to_json(&results)))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Comma-separated cash flows, or a scenario CSV with one row
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn enumerate(a: &EnumerateArgs) -> Result<Outcome, CliError> {
    let (net, _) = read_network(&a.network)?;
    let rows = formats::read_cashflows(&a.x, net.dim())?;
    let [x] = rows.as_slice() else {
        return Err(CliError::Input(format!("enumerate takes one cash-flow vector, got {}", rows.len())));
    };
    let polytopes = enumerate_clearing_vectors(&net, x)?;
    info!(event = "enumerate", patterns = polytopes.len());
    Ok(Outcome::file(&a.out, to_json(&polytopes)))
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group(ArgGroup::new("target").required(true).args(["weights", "point"])))]
pub struct ScalarizeArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub scenarios: PathBuf,
    #[command(flatten)]
    pub alpha: AlphaArgs,
    #[arg(long)]
    pub lambda: f64,
    /// Minimize the weighted sum of capital
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Minimize the distance to this point
    #[arg(long, value_delimiter = ',')]
    pub point: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    pub node_limit: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn scalarize(a: &ScalarizeArgs) -> Result<Outcome, CliError> {
    let (net, grouping) = read_network(&a.network)?;
    let scenarios = read_scenarios(&a.scenarios, net.dim())?;
    let spec = RiskSpec::new(a.alpha.resolve(&net)?, a.lambda)?;
    let problem = SaaProblem::new(&net, &grouping, &scenarios, spec)?;
    let opts = ScalarOptions { node_limit: a.node_limit };
    let outcome = match (&a.weights, &a.point) {
        (Some(w), None) => weighted_sum_with(&problem, w, &opts)?,
        (None, Some(v)) => norm_min_with(&problem, v, &opts)?,
        _ => return Err(CliError::Input("give exactly one of --weights and --point".into())),
    };
    info!(event = "scalarize", nodes = outcome.nodes, value = outcome.value, bound = outcome.lower_bound);
    let mut out = Outcome::file(&a.out, to_json(&outcome));
    if !outcome.feasible {
        out.infeasible = Some("the risk set is empty".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IdealArg {
    Milp,
    Bisection,
}

impl From<IdealArg> for IdealMethod {
    fn from(v: IdealArg) -> Self {
        match v {
            IdealArg::Milp => IdealMethod::Milp,
            IdealArg::Bisection => IdealMethod::Bisection,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SaaArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub scenarios: PathBuf,
    #[command(flatten)]
    pub alpha: AlphaArgs,
    #[arg(long)]
    pub lambda: f64,
    /// Hausdorff accuracy of the approximation
    #[arg(long)]
    pub epsilon: f64,
    /// 1 = membership oracle, 2 = distance minimization
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub algo: u8,
    /// How the lower corner of the search box is found
    #[arg(long, value_enum, default_value_t = IdealArg::Milp)]
    pub ideal: IdealArg,
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    pub node_limit: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn saa(a: &SaaArgs) -> Result<Outcome, CliError> {
    let (net, grouping) = read_network(&a.network)?;
    let scenarios = read_scenarios(&a.scenarios, net.dim())?;
    let spec = RiskSpec::new(a.alpha.resolve(&net)?, a.lambda)?;
    let problem = SaaProblem::new(&net, &grouping, &scenarios, spec)?;
    let mut opts = SaaOptions::new(a.epsilon);
    opts.ideal = a.ideal.into();
    opts.node_limit = a.node_limit;
    let set: ApproxSet = if a.algo == 1 { algorithm1(&problem, &opts)? } else { algorithm2(&problem, &opts)? };
    info!(event = "saa", generators = set.generators.len());
    let mut out = Outcome::file(&a.out, to_json(&set));
    if set.is_empty() {
        out.infeasible = Some("the risk set is empty".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub nu: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    pub beta: Vec<f64>,
    #[arg(long)]
    pub rho: f64,
    #[command(flatten)]
    pub alpha: AlphaArgs,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_delimiter = ',', default_value = "25,50,100,200")]
    pub n_list: Vec<usize>,
    #[arg(long, default_value_t = 400)]
    pub n_ref: usize,
    /// Number of independent seeds
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// First seed; seeds run from here upward
    #[arg(long, default_value_t = 0)]
    pub seed_base: u64,
    /// Probe points as fractions of the reference box diagonal
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
    pub probes: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn converge(a: &ConvergeArgs) -> Result<Outcome, CliError> {
    let (net, grouping) = read_network(&a.network)?;
    let spec = RiskSpec::new(a.alpha.resolve(&net)?, a.lambda)?;
    if a.seeds == 0 {
        return Err(CliError::Input("--seeds must be at least 1".into()));
    }
    let cfg = ConvergenceConfig {
        shocks: ShockParams { nu: a.nu, beta_by_group: a.beta.clone(), rho: a.rho, n: a.n_ref, seed: a.seed_base },
        spec,
        n_list: a.n_list.clone(),
        seeds: (a.seed_base..a.seed_base + a.seeds).collect(),
        epsilon: a.epsilon,
        n_ref: a.n_ref,
        probe_fractions: a.probes.clone(),
    };
    cfg.shocks.validate(&grouping)?;
    let table = convergence_study(&net, &grouping, &cfg)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["seed".to_string(), "N".into(), "hausdorff_to_ref".into()];
    header.extend((1..=a.probes.len()).map(|k| format!("probe_{k}")));
    w.write_record(&header).expect("in-memory write");
    for row in &table.rows {
        let mut rec = vec![row.seed.map_or("median".to_string(), |s| s.to_string()), row.n.to_string()];
        rec.push(fmt_f64(row.hausdorff_to_ref));
        rec.extend(row.probes.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec).expect("in-memory write");
    }
    for row in table.medians() {
        info!(event = "median", n = row.n, hausdorff = row.hausdorff_to_ref);
    }
    Ok(Outcome::file(&a.out, w.into_inner().expect("in-memory write")))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Edge list to take links from; defaults to the support of pi
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn stats(a: &StatsArgs) -> Result<Outcome, CliError> {
    let (net, grouping) = read_network(&a.network)?;
    let adj = match &a.edges {
        Some(p) => adjacency(&formats::read_edges(p, net.dim())?),
        None => net.pi().iter().map(|r| r.iter().map(|&v| (v > 0.0) as u8).collect()).collect(),
    };
    let s = network_stats(&adj, &grouping)?;
    Ok(Outcome::file(&a.out, to_json(&s)))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlotdataArgs {
    /// Set JSON written by `saa`
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn plotdata(a: &PlotdataArgs) -> Result<Outcome, CliError> {
    let set: ApproxSet = formats::read_json(&a.input)?;
    let pts = formats::staircase(&set)?;
    Ok(Outcome::file(&a.out, formats::staircase_csv(&pts, set.bounds.hi.len())))
}
