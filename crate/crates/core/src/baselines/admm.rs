//! ADMM for the trimmed lasso with the consensus splitting `x = z`:
//! a ridge solve for `x` and the exact prox of `λτ_k + η‖·‖₁` for `z`.
//! This is a reimplementation; the splitting details of other published
//! variants may differ.

use nalgebra::{Cholesky, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::{trimmed_objective, BaselineRun};
use crate::error::{invalid, GsmError, Result};
use crate::linalg::{norm2, ProblemInstance};
use crate::objective::top_k_indices;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmConfig {
    pub rho: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Double or halve `ρ` to keep primal and dual residuals within a
    /// factor of 10 of each other.
    pub adaptive_rho: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self { rho: 1.0, max_iters: 1000, tol: 1e-8, adaptive_rho: true }
    }
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// `argmin_z ½‖z − v‖² + a·τ_k(z) + b‖z‖₁`: the `k` largest `|v_i|` are
/// shrunk by `b`, the rest by `a + b`. Every tie-consistent choice of the
/// top `k` gives the same value, so ties go to the lower index.
pub fn prox_trimmed(v: &[f64], k: usize, a: f64, b: f64) -> Vec<f64> {
    let mut z: Vec<f64> = v.iter().map(|&vi| soft(vi, a + b)).collect();
    for i in top_k_indices(v, k) {
        z[i] = soft(v[i], b);
    }
    z
}

/// `(AᵀA + ρI)⁻¹`, applied through whichever of the `n × n` or `d × d`
/// systems is smaller.
struct RidgeSolver<'a> {
    p: &'a ProblemInstance,
    rho: f64,
    chol: Cholesky<f64, Dyn>,
    wide: bool,
}

impl<'a> RidgeSolver<'a> {
    fn new(p: &'a ProblemInstance, rho: f64) -> Result<Self> {
        let a = p.a();
        let wide = p.n() < p.d();
        let mut m = if wide { a * a.transpose() } else { a.transpose() * a };
        for i in 0..m.nrows() {
            m[(i, i)] += rho;
        }
        let chol = m.cholesky().ok_or_else(|| GsmError::Numeric("ridge system not positive definite".into()))?;
        Ok(Self { p, rho, chol, wide })
    }

    fn solve(&self, q: &[f64]) -> Vec<f64> {
        if self.wide {
            // (AᵀA + ρI)⁻¹ q = (q − Aᵀ(AAᵀ + ρI)⁻¹Aq)/ρ
            let aq = DVector::from_vec(self.p.apply(q));
            let s = self.chol.solve(&aq);
            let ats = self.p.apply_t(s.as_slice());
            q.iter().zip(&ats).map(|(qi, ai)| (qi - ai) / self.rho).collect()
        } else {
            self.chol.solve(&DVector::from_column_slice(q)).as_slice().to_vec()
        }
    }
}

pub fn admm_trimmed_lasso(p: &ProblemInstance, lambda: f64, eta: f64, x0: &[f64], cfg: &AdmmConfig) -> Result<BaselineRun> {
    if !(lambda >= 0.0 && eta >= 0.0 && lambda.is_finite() && eta.is_finite()) {
        return Err(invalid("lambda and eta must be finite and nonnegative"));
    }
    if !(cfg.rho > 0.0 && cfg.rho.is_finite()) {
        return Err(GsmError::Config("rho must be positive".into()));
    }
    let (d, k) = (p.d(), p.k());
    if x0.len() != d {
        return Err(invalid("x0 must have length d"));
    }
    let aty = p.apply_t(p.y());
    let mut rho = cfg.rho;
    let mut solver = RidgeSolver::new(p, rho)?;
    let mut z = x0.to_vec();
    let mut u = vec![0.0; d];
    let mut trace = vec![trimmed_objective(p, &z, lambda)];
    let x_scale = p.y_norm() / p.max_col_norm();
    let mut iterations = 0;
    let mut q = vec![0.0; d];
    let mut v = vec![0.0; d];
    while iterations < cfg.max_iters {
        iterations += 1;
        for i in 0..d {
            q[i] = aty[i] + rho * (z[i] - u[i]);
        }
        let x = solver.solve(&q);
        for i in 0..d {
            v[i] = x[i] + u[i];
        }
        let z_new = prox_trimmed(&v, k, lambda / rho, eta / rho);
        let mut r_pri = 0.0;
        let mut r_dual = 0.0;
        for i in 0..d {
            u[i] += x[i] - z_new[i];
            r_pri += (x[i] - z_new[i]).powi(2);
            r_dual += (z_new[i] - z[i]).powi(2);
        }
        let (r_pri, r_dual) = (r_pri.sqrt(), rho * r_dual.sqrt());
        z = z_new;
        if !z.iter().all(|v| v.is_finite()) {
            return Err(GsmError::Numeric("non-finite ADMM iterate".into()));
        }
        trace.push(trimmed_objective(p, &z, lambda));
        let scale = norm2(&x).max(norm2(&z)).max(x_scale);
        if r_pri <= cfg.tol * scale && r_dual <= cfg.tol * rho * scale {
            break;
        }
        if cfg.adaptive_rho {
            let factor = if r_pri > 10.0 * r_dual {
                2.0
            } else if r_dual > 10.0 * r_pri {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                u.iter_mut().for_each(|ui| *ui /= factor);
                solver = RidgeSolver::new(p, rho)?;
            }
        }
    }
    Ok(BaselineRun { objective: trimmed_objective(p, &z, lambda), x: z, trace, iterations })
}
