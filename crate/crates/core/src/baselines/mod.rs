//! Competing methods: LS-OMP, DC programming and ADMM for the trimmed lasso,
//! IRLS/IRL1 for ℓp penalties, and the lasso path.
//!
//! Every method's candidates go through the same post-processing before
//! they are compared: keep the `k` largest entries, refit by least squares
//! on that support, and select the candidate with the smallest residual.

pub mod admm;
pub mod dc;
pub mod lasso;
pub mod lp;
pub mod ls_omp;

pub use admm::{admm_trimmed_lasso, prox_trimmed, AdmmConfig};
pub use dc::{dc_trimmed_lasso, DcConfig};
pub use lasso::{lasso_grid, lasso_sweep};
pub use lp::{irl1, irls, min_l1_start, LpConfig};
pub use ls_omp::{ls_omp, ls_omp_from};

use crate::linalg::ProblemInstance;
use crate::objective::trimmed_lasso;
use crate::optimizer::project_and_refit;

#[derive(Clone, Debug)]
pub struct BaselineRun {
    pub x: Vec<f64>,
    /// The method's target objective at `x` (without any `η` term).
    pub objective: f64,
    /// Objective after each iteration, starting at the initial point.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// `½‖Ax−y‖² + λτ_k(x)`
pub fn trimmed_objective(p: &ProblemInstance, x: &[f64], lambda: f64) -> f64 {
    0.5 * p.residual_norm(x).powi(2) + lambda * trimmed_lasso(x, p.k())
}

/// Refits each candidate on its top-`k` support and returns the one with
/// the smallest residual (earliest on ties) with its residual norm.
pub fn best_refit<I>(p: &ProblemInstance, candidates: I) -> Option<(Vec<f64>, f64)>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    candidates
        .into_iter()
        .map(|x| {
            let fit = project_and_refit(p, &x);
            let r = p.residual_norm(&fit);
            (fit, r)
        })
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
}
