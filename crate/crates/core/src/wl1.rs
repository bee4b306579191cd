//! Convex weighted-ℓ1 subproblems
//!
//! - power 2: `min ½‖Ax−y‖² + λ⟨w,|x|⟩` by an active-set method with a
//!   monotone FISTA fallback;
//! - power 1: `min ‖Ax−y‖₂ + λ⟨w,|x|⟩` by restarted primal-dual hybrid
//!   gradient (PDHG), certified by a duality gap;
//! - least squares restricted to a support.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GsmError, Result};
use crate::linalg::{axpy, dot, norm2, ProblemInstance};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerSolverConfig {
    pub max_iters: usize,
    pub rel_obj_tol: f64,
    /// Power 2: stop once the scaled prox-gradient step `L‖y − z‖∞` is below this.
    pub abs_grad_tol: f64,
    /// Reset the momentum every this many iterations (0 = never).
    pub restart_every: usize,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self { max_iters: 2000, rel_obj_tol: 1e-10, abs_grad_tol: 1e-12, restart_every: 100 }
    }
}

impl InnerSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(GsmError::Config("max_iters must be at least 1".into()));
        }
        if !(self.rel_obj_tol > 0.0 && self.abs_grad_tol > 0.0) {
            return Err(GsmError::Config("inner tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn with_tol(self, rel_obj_tol: f64) -> Self {
        Self { rel_obj_tol, ..self }
    }
}

#[derive(Clone, Debug)]
pub struct Wl1Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Whether the stopping tolerance was met before the iteration cap.
    pub converged: bool,
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn weighted_l1(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(wi, xi)| wi * xi.abs()).sum()
}

fn check_inputs(p: &ProblemInstance, w: &[f64], lambda: f64, x0: &[f64], cfg: &InnerSolverConfig) -> Result<()> {
    cfg.validate()?;
    if w.len() != p.d() || x0.len() != p.d() {
        return Err(invalid("w and x0 must have length d"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda must be finite and nonnegative"));
    }
    if w.iter().chain(x0).any(|v| !v.is_finite()) || w.iter().any(|&v| v < 0.0) {
        return Err(invalid("w must be nonnegative and x0 finite"));
    }
    Ok(())
}

fn half_sq_dist(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
}

/// Window over which the relative objective decrease is measured.
const WINDOW: usize = 10;

/// Ridge on the reduced normal equations, relative to `‖A‖²`. It keeps the
/// direction finite when the active columns are dependent; the line search
/// uses the exact objective, so the ridge never changes the answer.
const RIDGE: f64 = 1e-13;

/// Relative KKT tolerance of the active-set method.
const KKT_TOL: f64 = 1e-10;

/// `½‖Ax−y‖² − ⟨c,x⟩ + Σ tᵢ|xᵢ|`
fn l1_ls_objective(r: &[f64], x: &[f64], t: &[f64], c: Option<&[f64]>) -> f64 {
    let lin = c.map_or(0.0, |c| dot(c, x));
    0.5 * dot(r, r) - lin + weighted_l1(t, x)
}

/// `min ½‖Ax−y‖² − ⟨c,x⟩ + Σ tᵢ|xᵢ|` with `tᵢ ≥ 0` and `|cᵢ| ≤ tᵢ`.
///
/// An active-set (feature-sign) method solves the problem exactly on the
/// current support and sign pattern, with a line search over the points
/// where coefficients change sign. If it stalls, monotone FISTA finishes
/// from the best point found. The result is never worse than `x0`.
pub fn solve_l1_ls(
    p: &ProblemInstance,
    t: &[f64],
    c: Option<&[f64]>,
    x0: &[f64],
    cfg: &InnerSolverConfig,
) -> Result<Wl1Solution> {
    check_inputs(p, t, 1.0, x0, cfg)?;
    if let Some(c) = c {
        if c.len() != p.d() || c.iter().zip(t).any(|(ci, ti)| !(ci.abs() <= *ti)) {
            return Err(invalid("linear term must satisfy |c_i| <= t_i"));
        }
    }
    let sol = active_set(p, t, c, x0, cfg)?;
    if sol.converged {
        return Ok(sol);
    }
    let polished = fista(p, t, c, &sol.x, cfg)?;
    Ok(Wl1Solution { iterations: sol.iterations + polished.iterations, ..polished })
}

/// Cholesky factor of `A_SᵀA_S + ridge·I` for an ordered column set `S`,
/// updated in `O(|S|²)` as columns enter and leave.
struct SupportFactor<'a> {
    p: &'a ProblemInstance,
    ridge: f64,
    order: Vec<usize>,
    /// Lower-triangular rows; `rows[i]` has `i + 1` entries.
    rows: Vec<Vec<f64>>,
}

impl<'a> SupportFactor<'a> {
    fn new(p: &'a ProblemInstance, ridge: f64) -> Self {
        Self { p, ridge, order: Vec::new(), rows: Vec::new() }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        let v = match self.p.gram() {
            Some(g) => g[(i, j)],
            None => dot(self.p.column(i), self.p.column(j)),
        };
        if i == j {
            v + self.ridge
        } else {
            v
        }
    }

    /// Appends column `j`; false if the pivot is not positive.
    fn push(&mut self, j: usize) -> bool {
        let mut row: Vec<f64> = Vec::with_capacity(self.order.len() + 1);
        for (a, &i) in self.order.iter().enumerate() {
            let v = self.entry(i, j) - dot(&self.rows[a][..a], &row[..a]);
            row.push(v / self.rows[a][a]);
        }
        let pivot = self.entry(j, j) - dot(&row, &row);
        if !(pivot > 0.0 && pivot.is_finite()) {
            return false;
        }
        row.push(pivot.sqrt());
        self.rows.push(row);
        self.order.push(j);
        true
    }

    /// Drops the column at position `pos`, restoring triangularity with
    /// Givens rotations.
    fn remove(&mut self, pos: usize) {
        self.rows.remove(pos);
        self.order.remove(pos);
        for i in pos..self.rows.len() {
            let (a, b) = (self.rows[i][i], self.rows[i][i + 1]);
            let h = a.hypot(b);
            let (cs, sn) = (a / h, b / h);
            for row in &mut self.rows[i..] {
                let (u, v) = (row[i], row[i + 1]);
                row[i] = cs * u + sn * v;
                row[i + 1] = cs * v - sn * u;
            }
            self.rows[i].pop();
        }
    }

    /// Refactors `order` from scratch, raising the ridge until it succeeds.
    fn rebuild(&mut self, order: &[usize]) -> bool {
        let limit = 1e-6 * self.p.spec_norm_sq();
        loop {
            self.order.clear();
            self.rows.clear();
            if order.iter().all(|&j| self.push(j)) {
                return true;
            }
            if self.ridge > limit {
                return false;
            }
            self.ridge = (self.ridge * 100.0).max(f64::MIN_POSITIVE);
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let s = self.order.len();
        let mut z = vec![0.0; s];
        for a in 0..s {
            z[a] = (rhs[a] - dot(&self.rows[a][..a], &z[..a])) / self.rows[a][a];
        }
        for a in (0..s).rev() {
            let mut v = z[a];
            for bb in a + 1..s {
                v -= self.rows[bb][a] * z[bb];
            }
            z[a] = v / self.rows[a][a];
        }
        z
    }
}

fn active_set(
    p: &ProblemInstance,
    t: &[f64],
    c: Option<&[f64]>,
    x0: &[f64],
    cfg: &InnerSolverConfig,
) -> Result<Wl1Solution> {
    let (n, d) = (p.n(), p.d());
    let gram = p.gram();
    // b = Aᵀy + c; the smooth gradient is AᵀAx − b.
    let mut b = p.apply_t(p.y());
    if let Some(c) = c {
        for (v, ci) in b.iter_mut().zip(c) {
            *v += ci;
        }
    }
    let scale = b.iter().chain(t).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = KKT_TOL * scale;

    let mut x = x0.to_vec();
    let mut r = p.residual(&x);
    let mut f = l1_ls_objective(&r, &x, t, c);
    let mut g = vec![0.0; d];
    let mut ad = vec![0.0; n];
    let stop = |x: Vec<f64>, f: f64, it: usize, converged: bool| Ok(Wl1Solution { x, objective: f, iterations: it, converged });

    let mut factor = SupportFactor::new(p, RIDGE * p.spec_norm_sq());
    let start: Vec<usize> = (0..d).filter(|&i| x[i] != 0.0).collect();
    if !factor.rebuild(&start) {
        return stop(x, f, 0, false);
    }
    let mut refreshed = false;

    for it in 1..=cfg.max_iters {
        match gram {
            Some(gm) => {
                for (gj, bj) in g.iter_mut().zip(&b) {
                    *gj = -bj;
                }
                for &i in &factor.order {
                    axpy(x[i], &gm.as_slice()[i * d..(i + 1) * d], &mut g);
                }
            }
            None => {
                p.apply_t_into(&r, &mut g);
                if let Some(c) = c {
                    for (gj, cj) in g.iter_mut().zip(c) {
                        *gj -= cj;
                    }
                }
            }
        }
        let active_ok = factor.order.iter().all(|&i| (g[i] + t[i] * x[i].signum()).abs() <= tol);
        let mut signs: Vec<f64> = factor.order.iter().map(|&i| x[i].signum()).collect();
        if active_ok {
            let mut best = (tol, None);
            for j in 0..d {
                if x[j] == 0.0 && g[j].abs() - t[j] > best.0 {
                    best = (g[j].abs() - t[j], Some(j));
                }
            }
            let Some(j) = best.1 else {
                return stop(x, f, it, true);
            };
            if !factor.push(j) {
                let mut order = factor.order.clone();
                order.push(j);
                if !factor.rebuild(&order) {
                    return stop(x, f, it, false);
                }
            }
            signs.push(-g[j].signum());
        }

        // Newton point of the reduced problem on the current sign pattern.
        let set = factor.order.clone();
        let rhs: Vec<f64> = set.iter().zip(&signs).map(|(&i, sg)| b[i] - t[i] * sg).collect();
        let u = factor.solve(&rhs);

        // Exact line search over [0, 1] restricted to sign changes.
        let delta: Vec<f64> = set.iter().zip(&u).map(|(&i, ui)| ui - x[i]).collect();
        ad.iter_mut().for_each(|v| *v = 0.0);
        for (&i, &da) in set.iter().zip(&delta) {
            if da != 0.0 {
                axpy(da, p.column(i), &mut ad);
            }
        }
        let mut steps = vec![(1.0, None)];
        for (a, &i) in set.iter().enumerate() {
            let (xi, ui) = (x[i], u[a]);
            if xi != 0.0 && xi.signum() != ui.signum() {
                steps.push((xi / (xi - ui), Some(a)));
            }
        }
        let eval = |alpha: f64, zero: Option<usize>| {
            let mut val = 0.0;
            for (ri, di) in r.iter().zip(&ad) {
                let v = ri + alpha * di;
                val += 0.5 * v * v;
            }
            for (a, &i) in set.iter().enumerate() {
                let xi = if zero == Some(a) { 0.0 } else { x[i] + alpha * delta[a] };
                val += t[i] * xi.abs() - c.map_or(0.0, |c| c[i] * xi);
            }
            val
        };
        let mut best = (f, None);
        for &(alpha, zero) in &steps {
            let v = eval(alpha, zero);
            if v < best.0 {
                best = (v, Some((alpha, zero)));
            }
        }
        let Some((alpha, zero)) = best.1 else {
            // Accumulated update error can stall progress; refactor once.
            if !refreshed && factor.rebuild(&set) {
                refreshed = true;
                continue;
            }
            return stop(x, f, it, false);
        };
        refreshed = false;
        for (a, &i) in set.iter().enumerate() {
            x[i] = if zero == Some(a) { 0.0 } else { x[i] + alpha * delta[a] };
        }
        for pos in (0..set.len()).rev() {
            if x[set[pos]] == 0.0 {
                factor.remove(pos);
            }
        }
        // Recompute the residual so it does not drift.
        r = p.residual(&x);
        let f_new = l1_ls_objective(&r, &x, t, c);
        if !f_new.is_finite() {
            return Err(GsmError::Numeric("non-finite iterate in active-set solver".into()));
        }
        f = f_new.min(f);
    }
    stop(x, f, cfg.max_iters, false)
}

/// Monotone FISTA with step `1/L`, `L = ‖A‖²` bound, warm-started at `x0`,
/// for the same problem as [`solve_l1_ls`]. Never returns a point worse
/// than `x0`.
pub fn fista(
    p: &ProblemInstance,
    t: &[f64],
    c: Option<&[f64]>,
    x0: &[f64],
    cfg: &InnerSolverConfig,
) -> Result<Wl1Solution> {
    check_inputs(p, t, 1.0, x0, cfg)?;
    let (n, d) = (p.n(), p.d());
    let y = p.y();
    let l = p.spec_norm_sq();
    let thr: Vec<f64> = t.iter().map(|ti| ti / l).collect();
    let obj = |ax: &[f64], x: &[f64]| half_sq_dist(ax, y) + weighted_l1(t, x) - c.map_or(0.0, |c| dot(c, x));

    let mut x = x0.to_vec();
    let mut ax = p.apply(&x);
    let mut fx = obj(&ax, &x);
    let mut v = x.clone();
    let mut av = ax.clone();
    let mut tk = 1.0f64;
    let mut z = vec![0.0; d];
    let mut az = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut g = vec![0.0; d];
    let mut history = std::collections::VecDeque::with_capacity(WINDOW + 1);
    history.push_back(fx);

    for it in 1..=cfg.max_iters {
        for i in 0..n {
            r[i] = av[i] - y[i];
        }
        p.apply_t_into(&r, &mut g);
        if let Some(c) = c {
            for (gj, cj) in g.iter_mut().zip(c) {
                *gj -= cj;
            }
        }
        let mut step = 0.0f64;
        for j in 0..d {
            z[j] = soft(v[j] - g[j] / l, thr[j]);
            step = step.max((v[j] - z[j]).abs());
        }
        p.apply_into(&z, &mut az);
        let fz = obj(&az, &z);
        if !fz.is_finite() {
            return Err(GsmError::Numeric("non-finite iterate in FISTA".into()));
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        let restart = cfg.restart_every > 0 && it % cfg.restart_every == 0;
        if fz <= fx {
            let beta = if restart { 0.0 } else { (tk - 1.0) / t_next };
            for j in 0..d {
                v[j] = z[j] + beta * (z[j] - x[j]);
            }
            for i in 0..n {
                av[i] = az[i] + beta * (az[i] - ax[i]);
            }
            std::mem::swap(&mut x, &mut z);
            std::mem::swap(&mut ax, &mut az);
            fx = fz;
            tk = if restart { 1.0 } else { t_next };
        } else {
            // Objective went up: drop the momentum and restart from x.
            v.copy_from_slice(&x);
            av.copy_from_slice(&ax);
            tk = 1.0;
        }

        history.push_back(fx);
        if history.len() > WINDOW + 1 {
            history.pop_front();
        }
        let stalled = history.len() == WINDOW + 1 && history[0] - fx <= cfg.rel_obj_tol * fx.abs().max(f64::MIN_POSITIVE);
        if stalled || l * step <= cfg.abs_grad_tol {
            return Ok(Wl1Solution { x, objective: fx, iterations: it, converged: true });
        }
    }
    Ok(Wl1Solution { x, objective: fx, iterations: cfg.max_iters, converged: false })
}

/// `min ½‖Ax−y‖² + λ⟨w,|x|⟩`, warm-started at `x0`.
pub fn solve_wl1_power2(
    p: &ProblemInstance,
    w: &[f64],
    lambda: f64,
    x0: &[f64],
    cfg: &InnerSolverConfig,
) -> Result<Wl1Solution> {
    check_inputs(p, w, lambda, x0, cfg)?;
    let t: Vec<f64> = w.iter().map(|wi| lambda * wi).collect();
    solve_l1_ls(p, &t, None, x0, cfg)
}

/// How often the power-1 duality gap is evaluated.
const GAP_EVERY: usize = 50;

/// Dual certificate for `min ‖Ax−y‖ + λ⟨w,|x|⟩`: the dual is
/// `max −⟨u,y⟩` over `‖u‖ ≤ 1`, `|Aᵀu|_i ≤ λw_i`. Coordinates with zero
/// weight force `a_iᵀu = 0`, enforced by projecting out `range(A_F)`.
struct DualCertificate {
    free_basis: Option<DMatrix<f64>>,
    bound: Vec<f64>,
}

impl DualCertificate {
    fn new(p: &ProblemInstance, w: &[f64], lambda: f64) -> Self {
        let bound: Vec<f64> = w.iter().map(|wi| lambda * wi).collect();
        let free: Vec<usize> = (0..p.d()).filter(|&i| bound[i] == 0.0).collect();
        let free_basis = if free.is_empty() {
            None
        } else {
            let af = DMatrix::from_fn(p.n(), free.len(), |i, j| p.a()[(i, free[j])]);
            let svd = nalgebra::SVD::new(af, true, false);
            let u = svd.u.expect("requested U");
            let smax = svd.singular_values.max();
            let keep: Vec<usize> = (0..svd.singular_values.len())
                .filter(|&j| svd.singular_values[j] > 1e-12 * smax.max(f64::MIN_POSITIVE))
                .collect();
            Some(DMatrix::from_fn(p.n(), keep.len(), |i, j| u[(i, keep[j])]))
        };
        Self { free_basis, bound }
    }

    /// Best feasible dual value along the ray through `u`.
    fn value(&self, p: &ProblemInstance, u: &[f64]) -> f64 {
        let mut u = u.to_vec();
        if let Some(q) = &self.free_basis {
            let coef = q.transpose() * DVector::from_column_slice(&u);
            let proj = q * coef;
            for (ui, pi) in u.iter_mut().zip(proj.iter()) {
                *ui -= pi;
            }
        }
        let inner = -dot(&u, p.y());
        if inner <= 0.0 {
            return 0.0;
        }
        let mut scale = 1.0 / norm2(&u);
        let atu = p.apply_t(&u);
        for (i, &g) in atu.iter().enumerate() {
            if self.bound[i] > 0.0 && g.abs() * scale > self.bound[i] {
                scale = self.bound[i] / g.abs();
            }
        }
        scale * inner
    }
}

/// Restarted PDHG on the saddle problem
/// `min_x max_{‖u‖≤1} ⟨u, Ax − y⟩ + λ⟨w,|x|⟩`.
///
/// Steps are `τ = 1/(ω‖A‖)`, `σ = ω/‖A‖`, so `τσ‖A‖² = 1`; the primal
/// weight `ω` is rebalanced at every restart. Stops when the duality gap falls below
/// `rel_obj_tol` times the primal objective; returns the best primal point
/// seen, which is never worse than `x0`.
pub fn solve_wl1_power1(
    p: &ProblemInstance,
    w: &[f64],
    lambda: f64,
    x0: &[f64],
    cfg: &InnerSolverConfig,
) -> Result<Wl1Solution> {
    check_inputs(p, w, lambda, x0, cfg)?;
    let (n, d) = (p.n(), p.d());
    let y = p.y();
    let norm_a = p.spec_norm_sq().sqrt();
    let primal = |x: &[f64]| norm2(&p.residual(x)) + lambda * weighted_l1(w, x);
    let cert = DualCertificate::new(p, w, lambda);

    let mut x = x0.to_vec();
    let r0 = p.residual(&x);
    let mut u: Vec<f64> = {
        let nr = norm2(&r0);
        if nr > 0.0 { r0.iter().map(|v| v / nr).collect() } else { vec![0.0; n] }
    };
    let mut best_x = x.clone();
    let mut best_p = primal(&x);

    // Dual variables live in the unit ball; the primal scale is ~‖y‖/max‖a_i‖.
    let scale = (norm2(&x).max(p.y_norm() / p.max_col_norm())).max(f64::MIN_POSITIVE);
    let mut omega = 1.0 / scale;

    let mut x_sum = vec![0.0; d];
    let mut u_sum = vec![0.0; n];
    let mut count = 0usize;
    let mut restart_x = x.clone();
    let mut restart_u = u.clone();
    let mut gap_at_restart = f64::INFINITY;

    let mut atu = p.apply_t(&u);
    let mut xbar = vec![0.0; d];
    let mut axbar = vec![0.0; n];
    let mut x_new = vec![0.0; d];

    for it in 1..=cfg.max_iters {
        let tau = 1.0 / (omega * norm_a);
        let sigma = omega / norm_a;
        for j in 0..d {
            x_new[j] = soft(x[j] - tau * atu[j], tau * lambda * w[j]);
            xbar[j] = 2.0 * x_new[j] - x[j];
        }
        std::mem::swap(&mut x, &mut x_new);
        p.apply_into(&xbar, &mut axbar);
        for i in 0..n {
            u[i] += sigma * (axbar[i] - y[i]);
        }
        let nu = norm2(&u);
        if nu > 1.0 {
            u.iter_mut().for_each(|v| *v /= nu);
        }
        if !u.iter().chain(&x).all(|v| v.is_finite()) {
            return Err(GsmError::Numeric("non-finite iterate in PDHG".into()));
        }
        p.apply_t_into(&u, &mut atu);
        for j in 0..d {
            x_sum[j] += x[j];
        }
        for i in 0..n {
            u_sum[i] += u[i];
        }
        count += 1;

        if it % GAP_EVERY != 0 && it != cfg.max_iters {
            continue;
        }
        let inv = 1.0 / count as f64;
        let x_avg: Vec<f64> = x_sum.iter().map(|v| v * inv).collect();
        let u_avg: Vec<f64> = u_sum.iter().map(|v| v * inv).collect();
        let p_cur = primal(&x);
        let p_avg = primal(&x_avg);
        let gap_cur = p_cur - cert.value(p, &u);
        let gap_avg = p_avg - cert.value(p, &u_avg);
        for (xc, pc) in [(&x, p_cur), (&x_avg, p_avg)] {
            if pc < best_p {
                best_p = pc;
                best_x.clone_from(xc);
            }
        }
        let gap = gap_cur.min(gap_avg);
        if gap <= cfg.rel_obj_tol * best_p.max(f64::MIN_POSITIVE) {
            return Ok(Wl1Solution { x: best_x, objective: best_p, iterations: it, converged: true });
        }
        // Restart from the better candidate once the gap has shrunk enough.
        if gap <= 0.2 * gap_at_restart || count >= 20 * GAP_EVERY {
            if gap_avg < gap_cur {
                x = x_avg;
                u = u_avg;
                p.apply_t_into(&u, &mut atu);
            }
            let dx = norm2(&x.iter().zip(&restart_x).map(|(a, b)| a - b).collect::<Vec<_>>());
            let du = norm2(&u.iter().zip(&restart_u).map(|(a, b)| a - b).collect::<Vec<_>>());
            if dx > 1e-300 && du > 1e-300 {
                omega = (0.5 * (du / dx).ln() + 0.5 * omega.ln()).exp();
            }
            restart_x.clone_from(&x);
            restart_u.clone_from(&u);
            gap_at_restart = gap;
            x_sum.iter_mut().for_each(|v| *v = 0.0);
            u_sum.iter_mut().for_each(|v| *v = 0.0);
            count = 0;
        }
    }
    Ok(Wl1Solution { x: best_x, objective: best_p, iterations: cfg.max_iters, converged: false })
}

/// Minimizer of `‖A_S u − y‖₂` over `u` supported on `support`
/// (minimum-norm among minimizers), embedded in `R^d`.
pub fn least_squares_on_support(p: &ProblemInstance, support: &[usize]) -> Vec<f64> {
    let mut x = vec![0.0; p.d()];
    if support.is_empty() {
        return x;
    }
    let n = p.n();
    let sub = DMatrix::from_fn(n, support.len(), |i, j| p.a()[(i, support[j])]);
    let svd = nalgebra::SVD::new(sub, true, true);
    let smax = svd.singular_values.max();
    let eps = smax * f64::EPSILON * n.max(support.len()) as f64;
    let b = DVector::from_column_slice(p.y());
    let u = svd.solve(&b, eps).expect("U and V were computed");
    for (j, &i) in support.iter().enumerate() {
        x[i] = u[j];
    }
    x
}
