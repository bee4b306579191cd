//! Reweighted schemes for `min ½‖Ax−y‖² + λ‖x‖_p^p`, `0 < p ≤ 1`:
//! IRLS (weighted ridge steps) and IRL1 (weighted lasso steps), both with
//! an adaptively shrinking smoothing parameter `ε`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::BaselineRun;
use crate::error::{invalid, GsmError, Result};
use crate::linalg::{norm2, ProblemInstance};
use crate::objective::{top_k_indices, trimmed_lasso};
use crate::wl1::{solve_l1_ls, InnerSolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpConfig {
    pub eps_init: f64,
    /// `ε ← min(ε, alpha_eps·|x|_(k+1))` after a stall.
    pub alpha_eps: f64,
    pub eps_min: f64,
    /// A step counts as stalled when the objective drops by less than this fraction.
    pub stall_decrease: f64,
    pub stall_iters: usize,
    /// Stop after this many consecutive `k`-sparse iterates with one support.
    pub stable_support_iters: usize,
    pub max_iters: usize,
    pub inner: InnerSolverConfig,
}

impl Default for LpConfig {
    fn default() -> Self {
        Self {
            eps_init: 1.0,
            alpha_eps: 0.9,
            eps_min: 1e-8,
            stall_decrease: 1e-3,
            stall_iters: 3,
            stable_support_iters: 10,
            max_iters: 1000,
            inner: InnerSolverConfig::default(),
        }
    }
}

impl LpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_init > 0.0 && self.eps_min > 0.0 && self.alpha_eps > 0.0 && self.alpha_eps < 1.0) {
            return Err(GsmError::Config("eps schedule constants out of range".into()));
        }
        if self.max_iters == 0 || self.stall_iters == 0 || self.stable_support_iters == 0 {
            return Err(GsmError::Config("iteration counts must be at least 1".into()));
        }
        self.inner.validate()
    }
}

/// Sparsity threshold for the stable-support rule.
const SPARSE_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scheme {
    Irls,
    Irl1,
}

fn check(pexp: f64, lambda: f64) -> Result<()> {
    if !(pexp > 0.0 && pexp <= 1.0) {
        return Err(invalid("p must lie in (0, 1]"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda must be positive"));
    }
    Ok(())
}

/// `argmin ½‖Ax−y‖² + λΣ wᵢxᵢ²`, i.e. `x = DAᵀ(ADAᵀ + I)⁻¹y` with `D = (2λW)⁻¹`.
fn weighted_ridge(p: &ProblemInstance, w: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = p.n();
    let dinv: Vec<f64> = w.iter().map(|wi| 1.0 / (2.0 * lambda * wi)).collect();
    let a = p.a();
    let scaled = DMatrix::from_fn(n, p.d(), |i, j| a[(i, j)] * dinv[j].sqrt());
    let mut m = &scaled * scaled.transpose();
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    let chol = m.cholesky().ok_or_else(|| GsmError::Numeric("IRLS system not positive definite".into()))?;
    let s = chol.solve(&DVector::from_column_slice(p.y()));
    let ats = p.apply_t(s.as_slice());
    Ok(ats.iter().zip(&dinv).map(|(v, di)| v * di).collect())
}

fn run(p: &ProblemInstance, scheme: Scheme, lambda: f64, pexp: f64, x0: &[f64], cfg: &LpConfig) -> Result<BaselineRun> {
    check(pexp, lambda)?;
    cfg.validate()?;
    if x0.len() != p.d() {
        return Err(invalid("x0 must have length d"));
    }
    let k = p.k();
    // The weighted steps are exact MM steps for these smoothed objectives
    // (the 2/p and 1/p factors make the weights come out unscaled), so the
    // trace is nonincreasing while ε is fixed.
    let objective = |x: &[f64], eps: f64| {
        let pen: f64 = match scheme {
            Scheme::Irls => 2.0 / pexp * x.iter().map(|v| (v * v + eps * eps).powf(pexp / 2.0)).sum::<f64>(),
            Scheme::Irl1 => 1.0 / pexp * x.iter().map(|v| (v.abs() + eps).powf(pexp)).sum::<f64>(),
        };
        0.5 * p.residual_norm(x).powi(2) + lambda * pen
    };
    let mut x = x0.to_vec();
    let mut eps = cfg.eps_init;
    let mut f = objective(&x, eps);
    let mut trace = vec![f];
    let mut stalls = 0;
    let mut stable = 0;
    let mut last_support: Option<Vec<usize>> = None;
    let mut iterations = 0;
    while iterations < cfg.max_iters && eps >= cfg.eps_min {
        iterations += 1;
        x = match scheme {
            Scheme::Irls => {
                let w: Vec<f64> = x.iter().map(|v| (v * v + eps * eps).powf(pexp / 2.0 - 1.0)).collect();
                weighted_ridge(p, &w, lambda)?
            }
            Scheme::Irl1 => {
                let t: Vec<f64> = x.iter().map(|v| lambda * (v.abs() + eps).powf(pexp - 1.0)).collect();
                solve_l1_ls(p, &t, None, &x, &cfg.inner)?.x
            }
        };
        if !x.iter().all(|v| v.is_finite()) {
            return Err(GsmError::Numeric("non-finite reweighting iterate".into()));
        }
        let f_new = objective(&x, eps);
        stalls = if f_new > (1.0 - cfg.stall_decrease) * f { stalls + 1 } else { 0 };
        f = f_new;
        trace.push(f);
        if stalls >= cfg.stall_iters {
            let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
            mags.sort_unstable_by(|a, b| b.total_cmp(a));
            eps = eps.min(cfg.alpha_eps * mags.get(k).copied().unwrap_or(0.0));
            stalls = 0;
            f = objective(&x, eps);
        }
        if trimmed_lasso(&x, k) <= k as f64 * SPARSE_EPS * norm2(&x).max(f64::MIN_POSITIVE) {
            let mut s = top_k_indices(&x, k);
            s.sort_unstable();
            stable = if last_support.as_ref() == Some(&s) { stable + 1 } else { 1 };
            last_support = Some(s);
            if stable >= cfg.stable_support_iters {
                break;
            }
        } else {
            stable = 0;
            last_support = None;
        }
    }
    let objective = 0.5 * p.residual_norm(&x).powi(2) + lambda * x.iter().map(|v| v.abs().powf(pexp)).sum::<f64>();
    Ok(BaselineRun { x, objective, trace, iterations })
}

pub fn irls(p: &ProblemInstance, lambda: f64, pexp: f64, x0: &[f64], cfg: &LpConfig) -> Result<BaselineRun> {
    run(p, Scheme::Irls, lambda, pexp, x0, cfg)
}

pub fn irl1(p: &ProblemInstance, lambda: f64, pexp: f64, x0: &[f64], cfg: &LpConfig) -> Result<BaselineRun> {
    run(p, Scheme::Irl1, lambda, pexp, x0, cfg)
}

/// Relative level of the lasso used to approximate `argmin ‖x‖₁ s.t. Ax = y`.
pub const MIN_L1_LAMBDA: f64 = 1e-10;

/// Starting point of the reweighting schemes: the minimum-ℓ1 solution of
/// `Ax = y`, approximated by the lasso at a vanishing level. When `y` is not
/// in the range of `A` this tends to the minimum-ℓ1 least-squares solution.
pub fn min_l1_start(p: &ProblemInstance, inner: &InnerSolverConfig) -> Result<Vec<f64>> {
    let aty = p.apply_t(p.y());
    let level = MIN_L1_LAMBDA * aty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if level == 0.0 {
        return Ok(vec![0.0; p.d()]);
    }
    let t = vec![level; p.d()];
    let long = InnerSolverConfig { max_iters: inner.max_iters.max(10 * p.d()), ..*inner };
    Ok(solve_l1_ls(p, &t, None, &vec![0.0; p.d()], &long)?.x)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::data::{gen_matrix, rng, MatrixKind};
    use crate::wl1::least_squares_on_support;

    fn instance(seed: u64) -> ProblemInstance {
        let a = gen_matrix(MatrixKind::Uncorrelated, 30, 80, true, &mut rng(seed, 0, 1)).unwrap();
        let mut x0 = vec![0.0; 80];
        for (j, i) in [5usize, 22, 41, 70].iter().enumerate() {
            x0[*i] = [1.5, -2.0, 1.0, 2.5][j];
        }
        let y: Vec<f64> = (&a * DVector::from_vec(x0.clone())).iter().cloned().collect();
        ProblemInstance::new(a, y, 4).unwrap()
    }

    #[test]
    fn min_l1_start_interpolates() {
        let p = instance(1);
        let x = min_l1_start(&p, &InnerSolverConfig::default()).unwrap();
        assert!(p.residual_norm(&x) <= 1e-6 * p.y_norm());
    }

    #[test]
    fn small_lambda_approaches_least_squares() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let p = ProblemInstance::new(a, vec![1.0, 2.0, 2.0], 1).unwrap();
        let ls = least_squares_on_support(&p, &[0, 1]);
        let cfg = LpConfig { max_iters: 5, ..Default::default() };
        for run in [irls(&p, 1e-10, 0.5, &ls, &cfg).unwrap(), irl1(&p, 1e-10, 0.5, &ls, &cfg).unwrap()] {
            assert!((run.x[0] - ls[0]).abs() < 1e-6 && (run.x[1] - ls[1]).abs() < 1e-6, "{:?}", run.x);
        }
    }

    #[test]
    fn fixed_eps_trace_is_monotone() {
        let p = instance(2);
        let cfg = LpConfig { eps_min: 0.5, stall_iters: 1000, max_iters: 30, ..Default::default() };
        let x0 = min_l1_start(&p, &cfg.inner).unwrap();
        let r = irls(&p, 0.01, 1.0, &x0, &cfg).unwrap();
        assert!(r.trace.windows(2).skip(1).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn recovers_easy_sparse_signal() {
        let p = instance(3);
        let start = min_l1_start(&p, &InnerSolverConfig::default()).unwrap();
        for run in [irls(&p, 1e-4, 0.5, &start, &LpConfig::default()).unwrap(), irl1(&p, 1e-4, 0.5, &start, &LpConfig::default()).unwrap()] {
            let mut s = top_k_indices(&run.x, 4);
            s.sort_unstable();
            assert_eq!(s, vec![5, 22, 41, 70]);
        }
    }
}
