//! Eisenberg-Noe clearing: the maximal clearing vector by fictitious default,
//! the clearing LP with its duals, the aggregate `Lambda^EN` and the
//! enumeration of every clearing vector by default pattern.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Lu;
use crate::model::FinancialNetwork;
use crate::optim::simplex::{solve_lp, LinearProgram, LpSolution, LpStatus, Sense};

/// Tolerance for classifying `p_i < pbar_i` as a default.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Largest dimension accepted by [`enumerate_clearing_vectors`].
pub const MAX_ENUMERATION_DIM: usize = 12;

const PICARD_TOL: f64 = 1e-12;
const PICARD_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingResult {
    pub p: Vec<f64>,
    pub defaults: Vec<bool>,
    pub iterations: usize,
    pub total_payment: f64,
}

impl ClearingResult {
    fn from_payments(net: &FinancialNetwork, p: Vec<f64>, iterations: usize) -> Self {
        let defaults = p.iter().zip(net.pbar()).map(|(pi, pb)| *pi < pb - DEFAULT_TOL).collect();
        let total_payment = p.iter().sum();
        Self { p, defaults, iterations, total_payment }
    }
}

fn check_cashflows(net: &FinancialNetwork, x: &[f64]) -> Result<()> {
    if x.len() != net.dim() {
        return Err(Error::Validation(format!("cash-flow vector has {} entries, expected {}", x.len(), net.dim())));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::Validation("cash-flow vector contains NaN".into()));
    }
    if let Some(i) = x.iter().position(|&v| v < 0.0) {
        return Err(Error::Domain(format!("x[{i}] = {} is negative", x[i])));
    }
    Ok(())
}

/// `Phi(p) = (pi^T p + x) ^ pbar`.
pub fn phi(net: &FinancialNetwork, x: &[f64], p: &[f64]) -> Vec<f64> {
    net.inflows(p).iter().zip(x).zip(net.pbar()).map(|((a, b), c)| (a + b).min(*c)).collect()
}

/// Checks limited liability and absolute priority up to `tol`.
pub fn is_clearing_vector(net: &FinancialNetwork, x: &[f64], p: &[f64], tol: f64) -> bool {
    let inflow = net.inflows(p);
    p.iter().zip(net.pbar()).enumerate().all(|(i, (&pi, &pb))| {
        let avail = inflow[i] + x[i];
        pi >= -tol && pi <= pb + tol && pi <= avail + tol && ((pb - pi).abs() <= tol || (pi - avail).abs() <= tol)
    })
}

/// Maximal clearing vector via the fictitious default algorithm.
///
/// Each round fixes the current default set `D`, pays `pbar` outside it and
/// solves `(I - pi_DD^T) p_D = pi_SD^T pbar_S + x_D`. When that system is
/// singular the round falls back to monotone iteration of `Phi` from the
/// current supersolution.
pub fn clearing_fixed_point(net: &FinancialNetwork, x: &[f64]) -> Result<ClearingResult> {
    check_cashflows(net, x)?;
    let d = net.dim();
    let pbar = net.pbar();
    let pi = net.pi();
    let mut p = pbar.to_vec();
    let mut in_default = vec![false; d];
    let cap = 50 * d;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let inflow = net.inflows(&p);
        let mut grew = false;
        for i in 0..d {
            if !in_default[i] && inflow[i] + x[i] < pbar[i] - DEFAULT_TOL {
                in_default[i] = true;
                grew = true;
            }
        }
        if !grew || rounds > cap {
            break;
        }
        let dset: Vec<usize> = (0..d).filter(|&i| in_default[i]).collect();
        let k = dset.len();
        let mut a = vec![0.0; k * k];
        let mut rhs = vec![0.0; k];
        for (ra, &i) in dset.iter().enumerate() {
            a[ra * k + ra] = 1.0;
            for (cb, &j) in dset.iter().enumerate() {
                a[ra * k + cb] -= pi[j][i];
            }
            rhs[ra] = x[i] + (0..d).filter(|&j| !in_default[j]).map(|j| pi[j][i] * pbar[j]).sum::<f64>();
        }
        let solved = Lu::factor(k, a, 1e-12).map(|lu| lu.solve(&rhs)).filter(|sol| {
            sol.iter().zip(&dset).all(|(v, &i)| v.is_finite() && *v >= -1e-9 && *v <= pbar[i] + 1e-9)
        });
        match solved {
            Some(sol) => {
                for (v, &i) in sol.iter().zip(&dset) {
                    p[i] = v.clamp(0.0, pbar[i]).min(p[i]);
                }
            }
            None => {
                let (q, it) = picard(net, x, p)?;
                p = q;
                rounds += it;
                break;
            }
        }
    }
    // polish: a few Phi steps remove round-off from the linear solves
    for _ in 0..3 {
        let q = phi(net, x, &p);
        let change = q.iter().zip(&p).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        p = q;
        if change <= PICARD_TOL {
            break;
        }
    }
    if !is_clearing_vector(net, x, &p, 1e-9 * (1.0 + net.total_obligations())) {
        let (q, it) = picard(net, x, p)?;
        p = q;
        rounds += it;
    }
    Ok(ClearingResult::from_payments(net, p, rounds))
}

fn picard(net: &FinancialNetwork, x: &[f64], mut p: Vec<f64>) -> Result<(Vec<f64>, usize)> {
    for it in 1..=PICARD_CAP {
        let q = phi(net, x, &p);
        let change = q.iter().zip(&p).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        p = q;
        if change <= PICARD_TOL {
            return Ok((p, it));
        }
    }
    Err(Error::Solver { message: "fixed-point iteration did not converge".into(), iterations: PICARD_CAP })
}

fn clearing_program(net: &FinancialNetwork, x: &[f64], f: &[f64]) -> LinearProgram {
    let d = net.dim();
    let pi = net.pi();
    let mut lp = LinearProgram::new(Sense::Maximize, f.to_vec());
    for (i, &pb) in net.pbar().iter().enumerate() {
        lp.set_bounds(i, 0.0, pb);
    }
    for i in 0..d {
        let mut row = vec![(i, 1.0)];
        for (j, pij) in pi.iter().enumerate() {
            if pij[i] != 0.0 {
                row.push((j, -pij[i]));
            }
        }
        lp.add_le(row, x[i]);
    }
    lp
}

fn solve_clearing_program(net: &FinancialNetwork, x: &[f64], f: &[f64]) -> Result<LpSolution> {
    check_cashflows(net, x)?;
    if f.len() != net.dim() || f.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::Validation("clearing weights must be strictly positive".into()));
    }
    let sol = solve_lp(&clearing_program(net, x, f))?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver {
            message: format!("clearing LP returned status {:?}", sol.status),
            iterations: sol.iterations,
        });
    }
    Ok(sol)
}

/// Clearing vector from `max f^T p  s.t.  p <= pi^T p + x,  0 <= p <= pbar`.
pub fn clearing_lp(net: &FinancialNetwork, x: &[f64], f: &[f64]) -> Result<ClearingResult> {
    let sol = solve_clearing_program(net, x, f)?;
    Ok(ClearingResult::from_payments(net, sol.x, sol.iterations))
}

/// `Lambda^EN(x)`: total payments of the maximal clearing vector, or
/// negative infinity outside the nonnegative orthant.
pub fn aggregate_en(net: &FinancialNetwork, x: &[f64]) -> Result<f64> {
    if x.len() != net.dim() {
        return Err(Error::Validation(format!("cash-flow vector has {} entries, expected {}", x.len(), net.dim())));
    }
    if x.iter().any(|&v| v < 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(clearing_fixed_point(net, x)?.total_payment)
}

/// A supergradient of `Lambda^EN` at `x`: the row duals of the clearing LP
/// with unit weights.
pub fn en_supergradient(net: &FinancialNetwork, x: &[f64]) -> Result<Vec<f64>> {
    let ones = vec![1.0; net.dim()];
    let sol = solve_clearing_program(net, x, &ones)?;
    Ok(sol.row_duals.iter().map(|m| m.max(0.0)).collect())
}

/// Clearing vectors sharing one default pattern `y`, as a raw
/// H-representation `A_eq p = b_eq`, `A_ub p <= b_ub`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingPolytope {
    pub y: Vec<u8>,
    #[serde(rename = "A_eq")]
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    #[serde(rename = "A_ub")]
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
}

impl ClearingPolytope {
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        let dot = |row: &Vec<f64>| row.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
        self.a_ub.iter().zip(&self.b_ub).all(|(r, b)| dot(r) <= b + tol)
            && self.a_eq.iter().zip(&self.b_eq).all(|(r, b)| (dot(r) - b).abs() <= tol)
    }

    fn program(&self) -> LinearProgram {
        let d = self.y.len();
        let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0; d]);
        for j in 0..d {
            lp.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY);
        }
        let sparse = |row: &Vec<f64>| row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
        for (r, b) in self.a_ub.iter().zip(&self.b_ub) {
            lp.add_le(sparse(r), *b);
        }
        for (r, b) in self.a_eq.iter().zip(&self.b_eq) {
            lp.add_eq(sparse(r), *b);
        }
        lp
    }
}

/// Every default pattern whose clearing system is feasible. The union of the
/// returned polytopes is the set of all clearing vectors for `x`.
pub fn enumerate_clearing_vectors(net: &FinancialNetwork, x: &[f64]) -> Result<Vec<ClearingPolytope>> {
    check_cashflows(net, x)?;
    let d = net.dim();
    if d > MAX_ENUMERATION_DIM {
        return Err(Error::Capacity(format!("enumeration supports d <= {MAX_ENUMERATION_DIM}, got {d}")));
    }
    let pbar = net.pbar();
    let pi = net.pi();
    let inflow_bar = net.inflows(pbar);
    let q = (0..d).map(|i| inflow_bar[i] + x[i]).fold(f64::NEG_INFINITY, f64::max);
    // (I - pi^T) as dense rows
    let ipt: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 } - pi[j][i]).collect())
        .collect();
    let unit = |i: usize, s: f64| -> Vec<f64> { (0..d).map(|j| if j == i { s } else { 0.0 }).collect() };

    let mut out = Vec::new();
    for mask in 0u32..(1u32 << d) {
        let y: Vec<u8> = (0..d).map(|i| ((mask >> i) & 1) as u8).collect();
        let mut a_ub = Vec::with_capacity(5 * d);
        let mut b_ub = Vec::with_capacity(5 * d);
        for i in 0..d {
            a_ub.push(ipt[i].clone());
            b_ub.push(x[i]);
        }
        for i in 0..d {
            a_ub.push(unit(i, -1.0));
            b_ub.push(-pbar[i] * y[i] as f64);
        }
        for i in 0..d {
            a_ub.push(ipt[i].iter().map(|v| -v).collect());
            b_ub.push(-x[i] + q * y[i] as f64);
        }
        for i in 0..d {
            a_ub.push(unit(i, 1.0));
            b_ub.push(pbar[i]);
        }
        for i in 0..d {
            a_ub.push(unit(i, -1.0));
            b_ub.push(0.0);
        }
        let mut a_eq = Vec::with_capacity(d);
        let mut b_eq = Vec::with_capacity(d);
        for i in 0..d {
            if y[i] == 1 {
                a_eq.push(unit(i, 1.0));
                b_eq.push(pbar[i]);
            } else {
                a_eq.push(ipt[i].clone());
                b_eq.push(x[i]);
            }
        }
        let poly = ClearingPolytope { y, a_eq, b_eq, a_ub, b_ub };
        let sol = solve_lp(&poly.program())?;
        if sol.status == LpStatus::Optimal {
            out.push(poly);
        }
    }
    Ok(out)
}
