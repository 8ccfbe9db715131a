//! Euclidean projection onto a polyhedron in low dimension.
//!
//! Solves `min |z - v|_2  s.t.  A z <= b,  lo <= z <= hi` with the dual
//! active-set method of Goldfarb and Idnani specialised to an identity
//! Hessian. The method starts from the unconstrained minimizer `v` and adds
//! violated constraints one at a time, so no feasible starting point is
//! needed and an empty region is detected along the way.

use crate::error::{Error, Result};
use crate::linalg::{dist2, Lu};

/// Largest dimension accepted by [`min_norm_qp`].
pub const MAX_QP_DIM: usize = 4;
const VIOLATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z: Vec<f64>,
    pub distance: f64,
    /// Stationarity residual `|z - v + sum_k u_k a_k|_inf` at the returned point.
    pub kkt_residual: f64,
}

struct Rows<'a> {
    a: &'a [Vec<f64>],
    b: &'a [f64],
    /// Finite box faces as (coordinate, sign, rhs): `sign * z_j <= rhs`.
    faces: Vec<(usize, f64, f64)>,
}

impl Rows<'_> {
    fn len(&self) -> usize {
        self.a.len() + self.faces.len()
    }

    fn normal(&self, k: usize, g: usize) -> Vec<f64> {
        if k < self.a.len() {
            self.a[k].clone()
        } else {
            let (j, s, _) = self.faces[k - self.a.len()];
            let mut n = vec![0.0; g];
            n[j] = s;
            n
        }
    }

    fn slack(&self, k: usize, z: &[f64]) -> f64 {
        if k < self.a.len() {
            self.b[k] - self.a[k].iter().zip(z).map(|(x, y)| x * y).sum::<f64>()
        } else {
            let (j, s, r) = self.faces[k - self.a.len()];
            r - s * z[j]
        }
    }
}

pub fn min_norm_qp(v: &[f64], a: &[Vec<f64>], b: &[f64], lo: &[f64], hi: &[f64]) -> Result<QpSolution> {
    let g = v.len();
    if g > MAX_QP_DIM {
        return Err(Error::Capacity(format!("min-norm QP supports g <= {MAX_QP_DIM}, got {g}")));
    }
    if a.len() != b.len() || a.iter().any(|r| r.len() != g) || lo.len() != g || hi.len() != g {
        return Err(Error::Validation("min-norm QP dimensions disagree".into()));
    }
    let mut faces = Vec::new();
    for j in 0..g {
        if hi[j].is_finite() {
            faces.push((j, 1.0, hi[j]));
        }
        if lo[j].is_finite() {
            faces.push((j, -1.0, -lo[j]));
        }
    }
    let rows = Rows { a, b, faces };
    let scale = 1.0 + v.iter().chain(b.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = VIOLATION_TOL * scale;

    let mut z = v.to_vec();
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let cap = 50 * (rows.len() + 10);
    let mut iterations = 0;
    loop {
        // most violated constraint, lowest index on ties
        let mut p = None;
        let mut worst = tol;
        for k in 0..rows.len() {
            let viol = -rows.slack(k, &z);
            if viol > worst {
                worst = viol;
                p = Some(k);
            }
        }
        let Some(p) = p else { break };
        // constraint p in ">=" form: n_p = -a_p
        let np: Vec<f64> = rows.normal(p, g).iter().map(|x| -x).collect();
        let mut up = 0.0;
        loop {
            iterations += 1;
            if iterations > cap {
                return Err(Error::Solver { message: "min-norm QP active set did not settle".into(), iterations });
            }
            let normals: Vec<Vec<f64>> = active.iter().map(|&k| rows.normal(k, g).iter().map(|x| -x).collect()).collect();
            let (dir, r) = project_out(&normals, &np, g);
            let s_p = rows.slack(p, &z);
            let dn: f64 = dir.iter().zip(&np).map(|(x, y)| x * y).sum();
            let t2 = if dn > 1e-14 { -s_p / dn } else { f64::INFINITY };
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (idx, &rk) in r.iter().enumerate() {
                if rk > 1e-14 {
                    let ratio = u[idx] / rk;
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(idx);
                    }
                }
            }
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(Error::Validation("min-norm QP region is empty".into()));
            }
            for (zi, di) in z.iter_mut().zip(&dir) {
                if t2.is_finite() {
                    *zi += t * di;
                }
            }
            for (ui, ri) in u.iter_mut().zip(&r) {
                *ui -= t * ri;
            }
            up += t;
            if t2 <= t1 {
                active.push(p);
                u.push(up);
                break;
            }
            let k = drop.expect("partial step has a blocking constraint");
            active.remove(k);
            u.remove(k);
        }
    }

    let mut grad: Vec<f64> = z.iter().zip(v).map(|(a, b)| a - b).collect();
    for (&k, &uk) in active.iter().zip(&u) {
        for (gj, nj) in grad.iter_mut().zip(rows.normal(k, g)) {
            *gj += uk * nj;
        }
    }
    let kkt_residual = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(QpSolution { distance: dist2(&z, v), z, kkt_residual })
}

/// Returns `(I - N N^+) n` and `N^+ n` for the active normals `N`.
fn project_out(normals: &[Vec<f64>], n: &[f64], g: usize) -> (Vec<f64>, Vec<f64>) {
    let k = normals.len();
    if k == 0 {
        return (n.to_vec(), Vec::new());
    }
    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            gram[i * k + j] = normals[i].iter().zip(&normals[j]).map(|(a, b)| a * b).sum();
        }
    }
    let rhs: Vec<f64> = normals.iter().map(|ni| ni.iter().zip(n).map(|(a, b)| a * b).sum()).collect();
    let r = match Lu::factor(k, gram, 1e-12) {
        Some(lu) => lu.solve(&rhs),
        None => vec![0.0; k],
    };
    let mut dir = n.to_vec();
    for (ni, ri) in normals.iter().zip(&r) {
        for j in 0..g {
            dir[j] -= ri * ni[j];
        }
    }
    if dir.iter().all(|x| x.abs() < 1e-12) {
        dir.iter_mut().for_each(|x| *x = 0.0);
    }
    (dir, r)
}
