//! Lasso path `min ½‖Ax−y‖² + λ‖x‖₁` over a logarithmic grid, warm-started
//! from the largest λ down.

use crate::error::{invalid, Result};
use crate::linalg::ProblemInstance;
use crate::wl1::{solve_l1_ls, InnerSolverConfig};

pub const LASSO_GRID_LEN: usize = 61;
/// Smallest λ of the default grid relative to `‖Aᵀy‖∞`.
pub const LASSO_GRID_SPAN: f64 = 1e-8;

/// `len` values from `‖Aᵀy‖∞` down to `span·‖Aᵀy‖∞`, geometrically spaced.
pub fn lasso_grid(p: &ProblemInstance, len: usize, span: f64) -> Vec<f64> {
    let top = p.apply_t(p.y()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if len == 1 {
        return vec![top];
    }
    (0..len).map(|i| top * span.powf(i as f64 / (len - 1) as f64)).collect()
}

/// Solutions for each λ of `lambdas`, in the given order.
pub fn lasso_sweep(p: &ProblemInstance, lambdas: &[f64], inner: &InnerSolverConfig) -> Result<Vec<Vec<f64>>> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(invalid("lambda grid must be nonempty and nonnegative"));
    }
    // Solve from large to small λ for warm starts, then restore the order.
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let mut out = vec![Vec::new(); lambdas.len()];
    let mut x = vec![0.0; p.d()];
    for i in order {
        let t = vec![lambdas[i]; p.d()];
        x = solve_l1_ls(p, &t, None, &x, inner)?.x;
        out[i] = x.clone();
    }
    Ok(out)
}
