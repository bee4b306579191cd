//! Difference-of-convex iterations for the trimmed lasso.
//!
//! `λτ_k(x) = λ‖x‖₁ − λh_k(x)` with `h_k` the sum of the `k` largest
//! magnitudes. Each step linearizes `h_k` at the current point and solves
//! `min ½‖Ax−y‖² + (λ+η)‖x‖₁ − λ⟨g, x⟩` exactly.

use serde::{Deserialize, Serialize};

use super::{trimmed_objective, BaselineRun};
use crate::error::{invalid, GsmError, Result};
use crate::linalg::{norm1, ProblemInstance};
use crate::objective::top_k_indices;
use crate::wl1::{solve_l1_ls, InnerSolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub inner: InnerSolverConfig,
}

impl Default for DcConfig {
    fn default() -> Self {
        Self { max_iters: 200, rel_tol: 1e-8, inner: InnerSolverConfig::default() }
    }
}

/// Subgradient of `h_k` at `x`: signs on the top-`k` support.
fn top_k_signs(x: &[f64], k: usize) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for i in top_k_indices(x, k) {
        g[i] = x[i].signum() * (x[i] != 0.0) as u8 as f64;
    }
    g
}

pub fn dc_trimmed_lasso(p: &ProblemInstance, lambda: f64, eta: f64, x0: &[f64], cfg: &DcConfig) -> Result<BaselineRun> {
    if !(lambda >= 0.0 && eta >= 0.0 && lambda.is_finite() && eta.is_finite()) {
        return Err(invalid("lambda and eta must be finite and nonnegative"));
    }
    if x0.len() != p.d() {
        return Err(invalid("x0 must have length d"));
    }
    let k = p.k();
    let objective = |x: &[f64]| trimmed_objective(p, x, lambda) + eta * norm1(x);
    let t = vec![lambda + eta; p.d()];
    let mut x = x0.to_vec();
    let mut f = objective(&x);
    let mut trace = vec![f];
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let c: Vec<f64> = top_k_signs(&x, k).iter().map(|gi| lambda * gi).collect();
        let sol = solve_l1_ls(p, &t, Some(&c), &x, &cfg.inner)?;
        let f_new = objective(&sol.x);
        if !f_new.is_finite() {
            return Err(GsmError::Numeric("non-finite DC iterate".into()));
        }
        // The convex step majorizes the objective, so an increase is roundoff.
        if f_new > f {
            break;
        }
        let change = f - f_new;
        x = sol.x;
        f = f_new;
        trace.push(f);
        if change <= cfg.rel_tol * f.abs() {
            break;
        }
    }
    Ok(BaselineRun { objective: trimmed_objective(p, &x, lambda), x, trace, iterations })
}
