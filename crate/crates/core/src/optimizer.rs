//! Majorization-minimization at fixed `γ`, homotopy in `γ`, and the λ sweep
//! that turns trimmed-lasso solutions into `k`-sparse least-squares fits.

use serde::{Deserialize, Serialize};

use crate::baselines::ls_omp_from;
use crate::error::{invalid, GsmError, Result};
use crate::kernel::tau_and_weights;
use crate::linalg::{dist1, support, ProblemInstance};
use crate::objective::{loss, penalty, proj_k, thresholds, top_k_indices, trimmed_lasso, Power};
use crate::par::Execution;
use crate::wl1::{least_squares_on_support, solve_wl1_power1, solve_wl1_power2, InnerSolverConfig, Wl1Solution};

/// Greedy completion of solutions whose top-`k` support is ambiguous.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostprocessMode {
    /// `LsOmp` for `d ≤ 1000`, `OmpStep` above.
    #[default]
    Auto,
    LsOmp,
    OmpStep,
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomotopyConfig {
    pub delta0: f64,
    pub delta_gamma: f64,
    pub delta_gamma_big: f64,
    pub n_gamma: usize,
    pub eps_x: f64,
    pub eps_w: f64,
    pub mm_rel_tol_single: f64,
    pub mm_rel_tol_double: f64,
    pub sparse_stop_iters: usize,
    pub wsparse_stop_iters: usize,
    pub power: Power,
    pub max_mm_iters: usize,
    pub max_gamma_steps: usize,
    /// Inner tolerance while `γ` is finite; `inner.rel_obj_tol` is used for
    /// the convex start and the final `γ = ∞` pass.
    pub inner_tol_loose: f64,
    pub inner: InnerSolverConfig,
    pub postprocess: PostprocessMode,
    /// `|x|_(k) − |x|_(k+1) ≤ ambiguity_tol · |x|_(1)` flags an ambiguous vector.
    pub ambiguity_tol: f64,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        Self {
            delta0: 1e-4,
            delta_gamma: 0.02,
            delta_gamma_big: 9.0,
            n_gamma: 10,
            eps_x: 1e-6,
            eps_w: 1e-5,
            mm_rel_tol_single: 1e-6,
            mm_rel_tol_double: 1e-3,
            sparse_stop_iters: 10,
            wsparse_stop_iters: 4,
            power: Power::Two,
            max_mm_iters: 1000,
            max_gamma_steps: 10_000,
            inner_tol_loose: 1e-8,
            inner: InnerSolverConfig::default(),
            postprocess: PostprocessMode::Auto,
            ambiguity_tol: 1e-9,
        }
    }
}

impl HomotopyConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.delta0,
            self.delta_gamma,
            self.delta_gamma_big,
            self.eps_x,
            self.eps_w,
            self.mm_rel_tol_single,
            self.mm_rel_tol_double,
            self.inner_tol_loose,
            self.ambiguity_tol,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(GsmError::Config("homotopy parameters must be positive and finite".into()));
        }
        if self.delta_gamma >= self.delta_gamma_big {
            return Err(GsmError::Config("delta_gamma must be below delta_gamma_big".into()));
        }
        if self.n_gamma == 0 || self.sparse_stop_iters == 0 || self.wsparse_stop_iters == 0 {
            return Err(GsmError::Config("iteration counts must be at least 1".into()));
        }
        if self.max_mm_iters == 0 || self.max_gamma_steps == 0 {
            return Err(GsmError::Config("iteration caps must be at least 1".into()));
        }
        self.inner.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub gamma: f64,
    /// `F_{λ,γ}(x_r)`
    pub objective: f64,
    /// `τ_k(x_r)`
    pub sparsity_defect: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    /// At most `k` nonzeros: least squares on the top-`k` support of `x`.
    pub x_sparse: Vec<f64>,
    /// `F_λ(x)` at `γ = ∞`.
    pub objective: f64,
    /// `‖A x_sparse − y‖₂`
    pub residual_norm: f64,
    pub gamma_final: f64,
    pub trace: Vec<TracePoint>,
    pub lambda: f64,
    pub mm_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct MmResult {
    pub x: Vec<f64>,
    /// `F_{λ,γ}` after each accepted iterate, starting with the initial point.
    pub objectives: Vec<f64>,
    /// `w_{k,γ}(x)` at the returned point.
    pub weights: Vec<f64>,
    pub iterations: usize,
}

impl MmResult {
    pub fn objective(&self) -> f64 {
        *self.objectives.last().expect("at least the starting objective")
    }
}

fn inner_solve(
    p: &ProblemInstance,
    w: &[f64],
    lambda: f64,
    x0: &[f64],
    power: Power,
    inner: &InnerSolverConfig,
) -> Result<Wl1Solution> {
    match power {
        Power::Two => solve_wl1_power2(p, w, lambda, x0, inner),
        Power::One => solve_wl1_power1(p, w, lambda, x0, inner),
    }
}

/// `(F_{λ,γ}(x), w_{k,γ}(x))` with a single kernel call.
fn objective_and_weights(p: &ProblemInstance, x: &[f64], lambda: f64, gamma: f64, power: Power) -> Result<(f64, Vec<f64>)> {
    let (tau, w) = weights_at(x, p.k(), gamma)?;
    Ok((loss(p.residual_norm(x), power) + lambda * tau, w))
}

fn weights_at(x: &[f64], k: usize, gamma: f64) -> Result<(f64, Vec<f64>)> {
    if gamma == 0.0 {
        let d = x.len();
        let c = (d - k) as f64 / d as f64;
        return Ok((c * crate::linalg::norm1(x), vec![c; d]));
    }
    let (tau, w) = tau_and_weights(x, k, gamma)?;
    if gamma == f64::INFINITY {
        // Exact value; the kernel's γ = ∞ branch carries fractional ties.
        return Ok((trimmed_lasso(x, k), w));
    }
    Ok((tau, w))
}

/// Majorization-minimization for `F_{λ,γ}` started at `x0`.
///
/// `γ = 0` is a single convex solve with uniform weights `(d−k)/d`. For
/// `γ > 0` the weights are refreshed from the current iterate until `F`
/// drops by less than a factor `1 − mm_rel_tol_single` once, or by less
/// than `1 − mm_rel_tol_double` twice in a row. An inner solution that
/// increases `F` is rejected, so the objective sequence is nonincreasing.
pub fn mm_solve(
    p: &ProblemInstance,
    lambda: f64,
    gamma: f64,
    x0: Option<&[f64]>,
    cfg: &HomotopyConfig,
    inner: &InnerSolverConfig,
) -> Result<MmResult> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(invalid("gamma must be in [0, inf]"));
    }
    let d = p.d();
    let start = match x0 {
        Some(x) if x.len() == d => x.to_vec(),
        Some(_) => return Err(invalid("x0 must have length d")),
        None if gamma == 0.0 => vec![0.0; d],
        None => return Err(invalid("mm_solve needs x0 when gamma > 0")),
    };
    let (f0, w0) = objective_and_weights(p, &start, lambda, gamma, cfg.power)?;
    if gamma == 0.0 {
        let sol = inner_solve(p, &w0, lambda, &start, cfg.power, inner)?;
        let (f1, _) = objective_and_weights(p, &sol.x, lambda, 0.0, cfg.power)?;
        let (x, objectives) = if f1 <= f0 { (sol.x, vec![f0, f1]) } else { (start, vec![f0]) };
        return Ok(MmResult { x, objectives, weights: w0, iterations: 1 });
    }

    let mut x = start;
    let mut w = w0;
    let mut objectives = vec![f0];
    let mut slow_steps = 0;
    let mut iterations = 0;
    while iterations < cfg.max_mm_iters {
        iterations += 1;
        let f_prev = *objectives.last().unwrap();
        let sol = inner_solve(p, &w, lambda, &x, cfg.power, inner)?;
        let (f_new, w_new) = objective_and_weights(p, &sol.x, lambda, gamma, cfg.power)?;
        if !f_new.is_finite() {
            return Err(GsmError::Numeric("non-finite objective in MM".into()));
        }
        if f_new > f_prev {
            break;
        }
        x = sol.x;
        w = w_new;
        objectives.push(f_new);
        if f_new >= (1.0 - cfg.mm_rel_tol_single) * f_prev {
            break;
        }
        if f_new >= (1.0 - cfg.mm_rel_tol_double) * f_prev {
            slow_steps += 1;
            if slow_steps >= 2 {
                break;
            }
        } else {
            slow_steps = 0;
        }
    }
    Ok(MmResult { x, objectives, weights: w, iterations })
}

/// `|x|_(k) − |x|_(k+1)` is within tolerance, so the top-`k` support is not
/// uniquely determined.
pub fn is_ambiguous(x: &[f64], k: usize, tol: f64) -> bool {
    if k >= x.len() {
        return false;
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    mags[k - 1] - mags[k] <= tol * (mags[0] + 1e-300)
}

/// `γ₁ = δ₀ / (max − min of (d−k)-subset sums of |x₀|)`.
fn initial_gamma(p: &ProblemInstance, x0: &[f64], delta0: f64) -> f64 {
    let d = x0.len();
    let m = d - p.k();
    let mut mags: Vec<f64> = x0.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let spread = mags[..m].iter().sum::<f64>() - mags[d - m..].iter().sum::<f64>();
    if spread > 0.0 {
        delta0 / spread
    } else {
        delta0 / (p.y_norm() / p.max_col_norm() + f64::EPSILON)
    }
}

/// Completes an ambiguous `x` with fewer than `k` nonzeros to a `k`-sparse
/// least-squares fit, keeping it only if `F_λ` (at `γ = ∞`) decreases.
pub fn postprocess_ambiguous(
    p: &ProblemInstance,
    x: &[f64],
    lambda: f64,
    power: Power,
    mode: PostprocessMode,
) -> Result<Vec<f64>> {
    let k = p.k();
    let supp = support(x);
    if supp.len() >= k || mode == PostprocessMode::Off {
        return Ok(x.to_vec());
    }
    let mode = match mode {
        PostprocessMode::Auto if p.d() <= 1000 => PostprocessMode::LsOmp,
        PostprocessMode::Auto => PostprocessMode::OmpStep,
        m => m,
    };
    let candidate = match mode {
        PostprocessMode::LsOmp => ls_omp_from(p, &supp, k),
        _ => omp_steps(p, x, &supp, k),
    };
    let f_old = loss(p.residual_norm(x), power) + lambda * trimmed_lasso(x, k);
    let f_new = loss(p.residual_norm(&candidate), power) + lambda * trimmed_lasso(&candidate, k);
    Ok(if f_new < f_old { candidate } else { x.to_vec() })
}

/// Repeated single OMP steps: add `argmax_{i∉Λ} |⟨a_i, Ax − y⟩|`, refit.
fn omp_steps(p: &ProblemInstance, x: &[f64], supp: &[usize], k: usize) -> Vec<f64> {
    let mut supp = supp.to_vec();
    let mut x = x.to_vec();
    while supp.len() < k {
        let corr = p.apply_t(&p.residual(&x));
        let next = (0..p.d())
            .filter(|i| !supp.contains(i))
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if corr[b].abs() >= corr[i].abs() => Some(b),
                _ => Some(i),
            });
        let Some(i) = next else { break };
        supp.push(i);
        supp.sort_unstable();
        x = least_squares_on_support(p, &supp);
    }
    x
}

/// Least squares on the (at most `k`) nonzero entries of `proj_k(x)`.
pub fn project_and_refit(p: &ProblemInstance, x: &[f64]) -> Vec<f64> {
    let mut s: Vec<usize> = top_k_indices(x, p.k()).into_iter().filter(|&i| x[i] != 0.0).collect();
    s.sort_unstable();
    least_squares_on_support(p, &s)
}

/// Homotopy from the convex problem (`γ = 0`) to the trimmed lasso
/// (`γ = ∞`), warm-starting each MM run at the previous solution.
pub fn homotopy_solve(p: &ProblemInstance, lambda: f64, cfg: &HomotopyConfig) -> Result<Solution> {
    homotopy_solve_with_reference(p, lambda, cfg, None)
}

/// [`homotopy_solve`], except that each MM run starts from `reference`
/// instead of the previous iterate whenever `reference` has the lower
/// `F_{λ,γ}` at the new `γ`.
pub fn homotopy_solve_with_reference(
    p: &ProblemInstance,
    lambda: f64,
    cfg: &HomotopyConfig,
    reference: Option<&[f64]>,
) -> Result<Solution> {
    cfg.validate()?;
    if reference.is_some_and(|r| r.len() != p.d()) {
        return Err(invalid("reference must have length d"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("homotopy needs a finite lambda > 0"));
    }
    let (k, d) = (p.k(), p.d());
    let power = cfg.power;
    let loose = cfg.inner.with_tol(cfg.inner_tol_loose);
    let x_tol = p.y_norm() / p.max_col_norm() * cfg.eps_x;

    let start_from = |gamma: f64, x: &[f64]| -> Result<Vec<f64>> {
        if let Some(r) = reference {
            let f_ref = objective_and_weights(p, r, lambda, gamma, power)?.0;
            if f_ref < objective_and_weights(p, x, lambda, gamma, power)?.0 {
                return Ok(r.to_vec());
            }
        }
        Ok(x.to_vec())
    };

    let start = mm_solve(p, lambda, 0.0, None, cfg, &cfg.inner)?;
    let mut mm_iterations = start.iterations;
    let mut x = start.x;
    let mut trace = vec![TracePoint { gamma: 0.0, objective: start.objectives[start.objectives.len() - 1], sparsity_defect: trimmed_lasso(&x, k) }];

    let mut gamma = initial_gamma(p, &x, cfg.delta0);
    let mut sparse_run = 0usize;
    let mut wsparse_run = 0usize;
    let mut last_support: Option<Vec<usize>> = None;
    for r in 1..=cfg.max_gamma_steps {
        let mut accepted = None;
        if r >= 2 && (r - 1) % cfg.n_gamma == 0 {
            let big = gamma * (1.0 + cfg.delta_gamma_big);
            let res = mm_solve(p, lambda, big, Some(&start_from(big, &x)?), cfg, &loose)?;
            mm_iterations += res.iterations;
            if dist1(&res.x, &x) <= x_tol {
                accepted = Some((big, res));
            }
        }
        let (g, res) = match accepted {
            Some(v) => v,
            None => {
                let g = if r == 1 { gamma } else { gamma * (1.0 + cfg.delta_gamma) };
                let res = mm_solve(p, lambda, g, Some(&start_from(g, &x)?), cfg, &loose)?;
                mm_iterations += res.iterations;
                (g, res)
            }
        };
        gamma = g;
        x = res.x.clone();
        let defect = trimmed_lasso(&x, k);
        trace.push(TracePoint { gamma, objective: res.objective(), sparsity_defect: defect });

        if defect <= k as f64 * cfg.eps_x {
            let mut s = top_k_indices(&x, k);
            s.sort_unstable();
            sparse_run = if last_support.as_ref() == Some(&s) { sparse_run + 1 } else { 1 };
            last_support = Some(s);
        } else {
            sparse_run = 0;
            last_support = None;
        }
        let w_defect = trimmed_lasso(&res.weights, d - k);
        wsparse_run = if w_defect <= (d - k) as f64 * cfg.eps_w { wsparse_run + 1 } else { 0 };
        if sparse_run >= cfg.sparse_stop_iters || wsparse_run >= cfg.wsparse_stop_iters || !gamma.is_finite() {
            break;
        }
    }

    let last = mm_solve(p, lambda, f64::INFINITY, Some(&start_from(f64::INFINITY, &x)?), cfg, &cfg.inner)?;
    mm_iterations += last.iterations;
    let mut x = last.x.clone();
    trace.push(TracePoint { gamma: f64::INFINITY, objective: last.objective(), sparsity_defect: trimmed_lasso(&x, k) });

    if is_ambiguous(&x, k, cfg.ambiguity_tol) {
        x = postprocess_ambiguous(p, &x, lambda, power, cfg.postprocess)?;
    }
    let objective = loss(p.residual_norm(&x), power) + lambda * penalty(&x, k, f64::INFINITY)?;
    let x_sparse = project_and_refit(p, &x);
    let residual_norm = p.residual_norm(&x_sparse);
    Ok(Solution { x, x_sparse, objective, residual_norm, gamma_final: f64::INFINITY, trace, lambda, mm_iterations })
}

/// Choice of λ values for [`solve_p0`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaGrid {
    /// `len` values, geometric (power 2) or tangent-spaced (power 1); stop
    /// after `early_stop` consecutive `k`-sparse solutions (0 = never).
    Standard { len: usize, early_stop: usize },
    /// `λ_i = 10^{−3(7−i)/6}(1+δ_λ)λ̄`, stopping at the first `k`-sparse one.
    Coarse,
    Explicit { values: Vec<f64> },
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Standard { len: 50, early_stop: 7 }
    }
}

/// Offset keeping the top of the grid just above the threshold.
pub const DELTA_LAMBDA: f64 = 1e-4;

/// Ascending λ values and the early-stop count for `grid`.
pub fn lambda_values(p: &ProblemInstance, power: Power, grid: &LambdaGrid) -> Result<(Vec<f64>, usize)> {
    let t = thresholds(p);
    let dl = DELTA_LAMBDA;
    let (values, early) = match grid {
        LambdaGrid::Standard { len, early_stop } => {
            let m = *len;
            if m == 0 {
                return Err(GsmError::Config("lambda grid must be nonempty".into()));
            }
            let frac = |i: usize| if m == 1 { 0.0 } else { (m - i) as f64 / (m - 1) as f64 };
            let v = match power {
                Power::Two => (1..=m).map(|i| 10f64.powf(-8.0 * frac(i)) * (1.0 + dl) * t.lambda_bar).collect(),
                Power::One => {
                    // Rank-deficient A has λ_a = 0; start the grid just above zero.
                    let la = if t.lambda_a > 0.0 { t.lambda_a } else { 1e-8 * t.lambda_b };
                    let lo = ((1.0 - dl) / (1.0 + dl) * la / t.lambda_b).atan();
                    (1..=m)
                        .map(|i| {
                            let s = frac(i);
                            (1.0 + dl) * t.lambda_b * (s * lo + (1.0 - s) * std::f64::consts::FRAC_PI_4).tan()
                        })
                        .collect()
                }
            };
            (v, *early_stop)
        }
        LambdaGrid::Coarse => {
            ((1..=7).map(|i| 10f64.powf(-3.0 * (7 - i) as f64 / 6.0) * (1.0 + dl) * t.lambda_bar).collect(), 1)
        }
        LambdaGrid::Explicit { values } => {
            if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(GsmError::Config("explicit lambda values must be positive".into()));
            }
            let mut v = values.clone();
            v.sort_by(|a, b| a.total_cmp(b));
            (v, 0)
        }
    };
    if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(GsmError::Numeric("degenerate lambda grid (is y zero?)".into()));
    }
    Ok((values, early))
}

#[derive(Clone, Debug)]
pub struct LambdaRun {
    pub lambda: f64,
    pub residual_norm: f64,
    pub k_sparse: bool,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct P0Result {
    /// The run with the smallest `‖A x_sparse − y‖₂` (ties to smaller λ).
    pub best: Solution,
    /// One entry per λ that counts toward the result, in ascending order.
    pub runs: Vec<LambdaRun>,
}

/// Runs [`homotopy_solve`] over a λ grid and keeps the `k`-sparse refit with
/// the smallest residual.
///
/// Sequential execution stops early once `early_stop` consecutive λ values
/// give `k`-sparse solutions. Parallel execution solves every λ, then
/// applies the same rule to the ordered results, so both modes return the
/// same answer.
pub fn solve_p0(p: &ProblemInstance, cfg: &HomotopyConfig, grid: &LambdaGrid, exec: Execution) -> Result<P0Result> {
    cfg.validate()?;
    let (values, early) = lambda_values(p, cfg.power, grid)?;
    let is_sparse = |s: &Solution| trimmed_lasso(&s.x, p.k()) <= p.k() as f64 * cfg.eps_x;

    let solutions: Vec<Solution> = match exec {
        Execution::Sequential => {
            let mut out = Vec::new();
            let mut run = 0;
            for &l in &values {
                let s = homotopy_solve(p, l, cfg)?;
                run = if is_sparse(&s) { run + 1 } else { 0 };
                out.push(s);
                if early > 0 && run >= early {
                    break;
                }
            }
            out
        }
        Execution::Parallel => {
            let all = exec.map(values.clone(), |l| homotopy_solve(p, l, cfg)).into_iter().collect::<Result<Vec<_>>>()?;
            let mut cut = all.len();
            let mut run = 0;
            for (i, s) in all.iter().enumerate() {
                run = if is_sparse(s) { run + 1 } else { 0 };
                if early > 0 && run >= early {
                    cut = i + 1;
                    break;
                }
            }
            all.into_iter().take(cut).collect()
        }
    };

    let runs = solutions
        .iter()
        .map(|s| LambdaRun { lambda: s.lambda, residual_norm: s.residual_norm, k_sparse: is_sparse(s), objective: s.objective })
        .collect();
    let best = solutions
        .into_iter()
        .reduce(|a, b| if b.residual_norm < a.residual_norm { b } else { a })
        .expect("grid is nonempty");
    Ok(P0Result { best, runs })
}

/// Convenience: `proj_k` followed by least squares, as a `k`-sparse vector.
pub fn sparse_refit(p: &ProblemInstance, x: &[f64]) -> Vec<f64> {
    project_and_refit(p, &proj_k(x, p.k()))
}
