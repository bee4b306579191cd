//! Trimmed-lasso objectives, penalty thresholds, majorizers and the
//! `α_{2k}` lower-bound oracle.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GsmError, Result};
use crate::kernel::{for_each_subset, ln_binom, tau_and_weights};
use crate::linalg::{norm1, ProblemInstance};

/// Power of the residual norm: `½‖Ax−y‖²` or `‖Ax−y‖₂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Power {
    One,
    #[default]
    Two,
}

impl TryFrom<u8> for Power {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Power::One),
            2 => Ok(Power::Two),
            _ => Err(format!("power must be 1 or 2, got {v}")),
        }
    }
}

impl From<Power> for u8 {
    fn from(p: Power) -> u8 {
        match p {
            Power::One => 1,
            Power::Two => 2,
        }
    }
}

/// Indices of the `k` largest-magnitude entries, largest first; ties go to
/// the lower index.
pub fn top_k_indices(x: &[f64], k: usize) -> Vec<usize> {
    let k = k.min(x.len());
    let cmp = |a: &usize, b: &usize| x[*b].abs().total_cmp(&x[*a].abs()).then(a.cmp(b));
    let mut idx: Vec<usize> = (0..x.len()).collect();
    if k > 0 && k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
    }
    idx.truncate(k);
    idx.sort_unstable_by(cmp);
    idx
}

/// `τ_k(x)`: the ℓ1 mass outside the `k` largest magnitudes.
pub fn trimmed_lasso(x: &[f64], k: usize) -> f64 {
    if k >= x.len() {
        return 0.0;
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    if k > 0 {
        mags.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    }
    mags[k..].iter().sum()
}

/// Keeps the `k` largest-magnitude entries (ties to the lower index).
pub fn proj_k(x: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for i in top_k_indices(x, k) {
        out[i] = x[i];
    }
    out
}

/// `τ_{k,γ}(x)`; `γ = ∞` gives the trimmed lasso itself.
pub fn penalty(x: &[f64], k: usize, gamma: f64) -> Result<f64> {
    if gamma == f64::INFINITY {
        return Ok(trimmed_lasso(x, k));
    }
    if gamma == 0.0 {
        return Ok((x.len() - k) as f64 / x.len() as f64 * norm1(x));
    }
    Ok(tau_and_weights(x, k, gamma)?.0)
}

/// Data-fit term: `½‖r‖²` or `‖r‖₂`.
pub fn loss(residual_norm: f64, power: Power) -> f64 {
    match power {
        Power::Two => 0.5 * residual_norm * residual_norm,
        Power::One => residual_norm,
    }
}

/// `F_{λ,γ}(x)` for the given power.
pub fn objective_value(p: &ProblemInstance, x: &[f64], lambda: f64, gamma: f64, power: Power) -> Result<f64> {
    check_lambda(lambda)?;
    let fit = loss(p.residual_norm(x), power);
    Ok(fit + lambda * penalty(x, p.k(), gamma)?)
}

/// `G(x, x_ref) = loss(x) + λ(τ_{k,γ}(x_ref) + ⟨w(x_ref), |x| − |x_ref|⟩)`.
pub fn majorizer_value(
    p: &ProblemInstance,
    x: &[f64],
    x_ref: &[f64],
    lambda: f64,
    gamma: f64,
    power: Power,
) -> Result<f64> {
    check_lambda(lambda)?;
    let (tau, w) = tau_and_weights(x_ref, p.k(), gamma)?;
    let lin: f64 = w.iter().zip(x.iter().zip(x_ref)).map(|(wi, (a, b))| wi * (a.abs() - b.abs())).sum();
    Ok(loss(p.residual_norm(x), power) + lambda * (tau + lin))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda must be finite and nonnegative"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyThresholds {
    /// `‖y‖₂ · max_i ‖a_i‖₂`
    pub lambda_bar: f64,
    /// `σ_n(A)/√(d−k)`, zero when `A` is not of full row rank.
    pub lambda_a: f64,
    /// `max_i ‖a_i‖₂`
    pub lambda_b: f64,
}

pub fn thresholds(p: &ProblemInstance) -> PenaltyThresholds {
    let lambda_b = p.max_col_norm();
    PenaltyThresholds {
        lambda_bar: p.y_norm() * lambda_b,
        lambda_a: p.sigma_n() / ((p.d() - p.k()) as f64).sqrt(),
        lambda_b,
    }
}

/// Subset budget of [`alpha2k_lower_bound`].
pub const ALPHA_SUBSET_LIMIT: f64 = 1e5;

/// `min_{|S|=2k} σ_min(A_S)/√(2k)`, a lower bound on the constant `α_{2k}`
/// with `‖Ax‖₂ ≥ α_{2k}‖x‖₁` for all `2k`-sparse `x`. Tiny instances only.
pub fn alpha2k_lower_bound(p: &ProblemInstance) -> Result<f64> {
    let (n, d) = (p.n(), p.d());
    let s = (2 * p.k()).min(d);
    let needed = ln_binom(d, s).exp();
    if needed > ALPHA_SUBSET_LIMIT * (1.0 + 1e-12) {
        return Err(GsmError::BudgetExceeded { needed, limit: ALPHA_SUBSET_LIMIT });
    }
    if n < s {
        return Ok(0.0);
    }
    let mut best = f64::INFINITY;
    for_each_subset(d, s, |cols| {
        let sub = DMatrix::from_fn(n, s, |i, j| p.a()[(i, cols[j])]);
        let sv = nalgebra::SVD::new(sub, false, false).singular_values;
        best = best.min(sv.min());
    });
    Ok(best.max(0.0) / (s as f64).sqrt())
}

/// Right-hand side of the power-2 recovery bound for `proj_k(x̂)`:
/// `τ_k(x0) + (2/α)(‖e‖ + λ_b τ_k(x0)) + (1/(2λα))(‖e‖ + λ_b τ_k(x0))²`.
pub fn recovery_bound_power2(alpha: f64, e_norm: f64, lambda_b: f64, lambda: f64, tau_x0: f64) -> f64 {
    let c = e_norm + lambda_b * tau_x0;
    tau_x0 + 2.0 / alpha * c + c * c / (2.0 * lambda * alpha)
}

/// Power-1 bound: `τ_k(x0) + (1/α)(1 + max{1, λ_b/λ})(‖e‖ + λ_b τ_k(x0))`.
pub fn recovery_bound_power1(alpha: f64, e_norm: f64, lambda_b: f64, lambda: f64, tau_x0: f64) -> f64 {
    tau_x0 + (1.0 + (lambda_b / lambda).max(1.0)) / alpha * (e_norm + lambda_b * tau_x0)
}

/// Bound for a `k`-sparse `x̂` (either power): `(2/α)‖e‖ + (1 + 2λ_b/α)τ_k(x0)`.
pub fn recovery_bound_sparse(alpha: f64, e_norm: f64, lambda_b: f64, tau_x0: f64) -> f64 {
    2.0 / alpha * e_norm + (1.0 + 2.0 * lambda_b / alpha) * tau_x0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(y: Vec<f64>, k: usize) -> ProblemInstance {
        let n = y.len();
        ProblemInstance::new(DMatrix::identity(n, n), y, k).unwrap()
    }

    #[test]
    fn trimmed_lasso_examples() {
        assert_eq!(trimmed_lasso(&[3.0, -1.0, 2.0], 1), 3.0);
        assert_eq!(trimmed_lasso(&[3.0, -1.0, 2.0], 3), 0.0);
        assert_eq!(trimmed_lasso(&[3.0, -1.0, 2.0], 0), 6.0);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(proj_k(&[3.0, -1.0, 2.0], 2), vec![3.0, 0.0, 2.0]);
        assert_eq!(proj_k(&[0.0, 5.0, 0.0], 2), vec![0.0, 5.0, 0.0]);
        assert_eq!(top_k_indices(&[1.0, -1.0, 1.0], 2), vec![0, 1]);
    }

    #[test]
    fn objective_at_zero() {
        let p = identity(vec![3.0, 4.0], 1);
        let f = objective_value(&p, &[0.0, 0.0], 2.0, f64::INFINITY, Power::Two).unwrap();
        assert_eq!(f, 12.5);
        let f1 = objective_value(&p, &[0.0, 0.0], 2.0, 3.0, Power::One).unwrap();
        assert_eq!(f1, 5.0);
        // k-sparse at γ = ∞: only the residual remains
        let f = objective_value(&p, &[0.0, 4.0], 2.0, f64::INFINITY, Power::Two).unwrap();
        assert_eq!(f, 4.5);
    }

    #[test]
    fn thresholds_identity() {
        let p = identity(vec![3.0, 4.0], 1);
        let t = thresholds(&p);
        assert!((t.lambda_bar - 5.0).abs() < 1e-14);
        assert!((t.lambda_a - 1.0).abs() < 1e-12);
        assert_eq!(t.lambda_b, 1.0);
    }

    #[test]
    fn majorizer_touches() {
        let a = DMatrix::from_fn(3, 5, |i, j| ((i + 2 * j) % 4) as f64 - 1.5);
        let p = ProblemInstance::new(a, vec![1.0, -2.0, 0.5], 2).unwrap();
        let x = [0.3, -0.1, 0.0, 1.2, 0.7];
        for &g in &[0.0, 1.0, 10.0] {
            let f = objective_value(&p, &x, 0.4, g, Power::Two).unwrap();
            let gv = majorizer_value(&p, &x, &x, 0.4, g, Power::Two).unwrap();
            assert!((f - gv).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_bound_orthonormal_and_duplicate() {
        let p = identity(vec![1.0; 6], 2);
        assert!((alpha2k_lower_bound(&p).unwrap() - 0.5).abs() < 1e-14);
        let mut a = DMatrix::identity(4, 4);
        a.set_column(3, &a.column(0).clone_owned());
        let q = ProblemInstance::new(a, vec![1.0; 4], 1).unwrap();
        assert!(alpha2k_lower_bound(&q).unwrap() < 1e-12);
    }

    #[test]
    fn power_parses() {
        assert_eq!(Power::try_from(1u8).unwrap(), Power::One);
        assert!(Power::try_from(3u8).is_err());
    }
}
