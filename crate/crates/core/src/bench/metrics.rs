//! Quality measures for a `k`-sparse estimate against the ground truth.

use serde::{Deserialize, Serialize};

use crate::linalg::{dist1, norm1, support, ProblemInstance};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `‖Ax̂ − y‖ / ‖Ax₀ − y‖`. Noiseless data (`Ax₀ = y`) gives 1 when `x̂`
    /// also fits exactly and `∞` otherwise.
    pub norm_obj: f64,
    /// `‖x̂ − x₀‖₁ / ‖x₀‖₁`
    pub rec_err: f64,
    /// `|supp x̂ ∩ supp x₀| / k`
    pub supp_prec: f64,
    /// `norm_obj ≤ 1`
    pub obj_success: bool,
    /// `rec_err ≤ max(2ν, 1e−3)`
    pub rec_success: bool,
}

pub const MIN_REC_TOL: f64 = 1e-3;

pub fn evaluate(p: &ProblemInstance, x_hat: &[f64], x0: &[f64], nu: f64) -> Metrics {
    let r_hat = p.residual_norm(x_hat);
    let r0 = p.residual_norm(x0);
    let norm_obj = if r0 > 0.0 {
        r_hat / r0
    } else if r_hat == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let rec_err = dist1(x_hat, x0) / norm1(x0);
    let s0 = support(x0);
    let hits = support(x_hat).iter().filter(|i| s0.binary_search(i).is_ok()).count();
    let supp_prec = hits as f64 / p.k() as f64;
    Metrics {
        norm_obj,
        rec_err,
        supp_prec,
        obj_success: norm_obj <= 1.0,
        rec_success: rec_err <= (2.0 * nu).max(MIN_REC_TOL),
    }
}
