//! The generalized soft-min kernel.
//!
//! `μ_{k,γ}(z) = (1/γ)·log(mean over k-subsets Λ of exp(γ Σ_{i∈Λ} z_i))` and
//! its gradient `θ_{k,γ}(z)`, computed in `O(kd)` time without overflow for
//! every `γ ∈ [0, ∞]`. The GSM penalty of a vector `x` is
//! `τ_{k,γ}(x) = μ_{d−k,−γ}(|x|)` with weights `w = θ_{d−k,−γ}(|x|)`.
//!
//! All recursions are generic over [`Real`], so [`highprec_mu_theta`] runs the
//! identical algorithm in double-double arithmetic as a reference.

mod btable;
mod delta;
mod oracle;
mod theta;

pub use delta::{delta_table, log_two_set_binom};
pub use oracle::{brute_force_mu_theta, naive_recursion_mu_theta, BRUTE_FORCE_LIMIT};
pub(crate) use oracle::{for_each_subset, ln_binom};

use crate::dd::DoubleDouble;
use crate::error::{invalid, GsmError, Result};
use crate::real::Real;

/// θ entries may leave `[0, 1]` by roundoff; larger excursions are reported
/// as a numerical failure.
pub const CLAMP_LIMIT: f64 = 1e-9;

/// Log-domain accumulators `b[q] = b_{q,γ}(z)` and the sorted top entries
/// `zsorted[q] = z_(q)` for `q = 0..=s`, with `zsorted[0] = +∞`.
/// `permutation[q-1]` is the original index of `z_(q)`.
#[derive(Clone, Debug)]
pub struct BTable {
    pub b: Vec<f64>,
    pub zsorted: Vec<f64>,
    pub permutation: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct GsmKernelResult {
    pub mu: f64,
    pub theta: Vec<f64>,
    /// Present for `0 < γ < ∞` in the canonical regime.
    pub btable: Option<BTable>,
    /// Largest amount by which an entry of θ had to be clamped into `[0, 1]`.
    pub clamp_excess: f64,
}

fn check_input(z: &[f64], gamma: f64) -> Result<()> {
    if z.is_empty() {
        return Err(invalid("z must be nonempty"));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(GsmError::NonFinite);
    }
    if gamma.is_nan() {
        return Err(invalid("gamma is NaN"));
    }
    Ok(())
}

/// Indices sorted by decreasing value, ties by increasing index.
fn desc_order(z: &[f64], idx: &mut [usize]) {
    idx.sort_unstable_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
}

fn top_permutation(z: &[f64], s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    if s < z.len() && s > 0 {
        idx.select_nth_unstable_by(s - 1, |&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    }
    idx.truncate(s);
    desc_order(z, &mut idx);
    idx
}

/// `μ_{k,γ}(z)` and the tables `b_{q,γ}(z)`, `z_(q)` for `q = 0..=s`.
pub fn mu_btable(z: &[f64], k: usize, s: usize, gamma: f64) -> Result<(f64, BTable)> {
    check_input(z, gamma)?;
    if !(1 <= k && k <= s && s <= z.len()) {
        return Err(invalid("mu_btable requires 1 <= k <= s <= d"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("mu_btable requires 0 < gamma < inf"));
    }
    let (t, _) = btable::run(z, s, gamma, None);
    let mu = btable::mu_from(&t, k, gamma);
    Ok((mu, BTable { b: t.b, zsorted: t.v, permutation: top_permutation(z, s) }))
}

/// `θ^i_{k,γ}(z)` for a single entry value `zi`, by the forward recursion.
///
/// Only reliable when the safety condition holds, in particular whenever
/// `zi` is not among the `2k−2` largest entries of `z`.
pub fn theta_forward(zi: f64, d: usize, k: usize, gamma: f64, table: &BTable) -> f64 {
    theta::forward(zi, k, gamma, &table.b, &table.zsorted, &theta::forward_ratios(d, k))
}

/// `θ^i_{q,γ}(z_L)` for `q = 0..=k`, where `zi` is an entry of `z_L` and
/// `table` holds the full tables of `z_L` (`s = len(z_L)`).
pub fn theta_backward_left(zi: f64, k: usize, gamma: f64, table: &BTable) -> Vec<f64> {
    let dl = table.b.len() - 1;
    let mut out = Vec::new();
    let ratios = theta::LeftRatios::new(dl);
    theta::backward_left(zi, dl, k, gamma, &table.b, &table.zsorted, &ratios, &mut out);
    out
}

/// Merges `θ^i_{t,γ}(z_L)` (`t = 0..=k`) into `θ^i_{k,γ}(z)` for the split
/// `z = [z_L, z_R]`, given the tables of `z`, `z_L` and `z_R`.
pub fn theta_convert(
    k: usize,
    gamma: f64,
    d_right: usize,
    full: &BTable,
    left: &BTable,
    right: &BTable,
    theta_left: &[f64],
) -> f64 {
    let dl = left.b.len() - 1;
    let delta = delta::table(&full.zsorted, &left.zsorted, &right.zsorted, k, d_right);
    let log_alpha = delta::log_alpha_row::<f64>(dl, d_right, k);
    theta::convert(k, d_right, gamma, full.b[k], &left.b, &right.b, &log_alpha, &delta, theta_left)
}

struct Core<T> {
    mu: T,
    theta: Vec<T>,
    table: Option<(Vec<T>, Vec<T>)>,
    order: Vec<usize>,
}

/// Canonical regime: `0 ≤ k ≤ d/2`, `γ ∈ [0, ∞]`.
fn core<T: Real>(z: &[f64], k: usize, gamma: f64) -> Core<T> {
    let d = z.len();
    if k == 0 {
        return Core { mu: T::zero(), theta: vec![T::zero(); d], table: None, order: Vec::new() };
    }
    if gamma == 0.0 {
        let mut sum = T::zero();
        for &v in z {
            sum += T::from_f64(v);
        }
        let frac = T::from_usize(k) / T::from_usize(d);
        return Core { mu: frac * sum, theta: vec![frac; d], table: None, order: Vec::new() };
    }
    if gamma == f64::INFINITY {
        return top_k_limit(z, k);
    }

    let gamma_t = T::from_f64(gamma);
    let dl = (2 * k).saturating_sub(2).max(1);
    let dr = d - dl;

    let mut idx: Vec<usize> = (0..d).collect();
    if dl < d {
        idx.select_nth_unstable_by(dl - 1, |&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    }
    let zs: Vec<T> = idx.iter().map(|&i| T::from_f64(z[i])).collect();

    let (full, right) = btable::run(&zs, k, gamma_t, Some(dl));
    let right = right.expect("split point inside the vector");
    let (left, _) = btable::run(&zs[..dl], dl, gamma_t, None);
    let mu = btable::mu_from(&full, k, gamma_t);

    let delta = delta::table(&full.v, &left.v, &right.v, k, dr);
    let log_alpha = delta::log_alpha_row::<T>(dl, dr, k);
    let weights = theta::convert_weights(k, dr, gamma_t, full.b[k], &left.b, &right.b, &log_alpha, &delta);
    let ratios = theta::LeftRatios::new(dl);
    let fwd = theta::forward_ratios::<T>(d, k);
    let threshold = (T::from_usize(d - k + 1) / T::from_usize(k)).ln();
    let gap = full.b[k - 1] - full.b[k];

    let mut theta_sorted = vec![T::zero(); d];
    let mut scratch = Vec::with_capacity(dl + 1);
    for (p, &zi) in zs.iter().enumerate() {
        let safe = p >= dl || gamma_t * (zi - full.v[k]) + gap <= threshold;
        theta_sorted[p] = if safe {
            theta::forward(zi, k, gamma_t, &full.b, &full.v, &fwd)
        } else {
            theta::backward_left(zi, dl, k, gamma_t, &left.b, &left.v, &ratios, &mut scratch);
            theta::convert_with(&weights, &scratch)
        };
    }

    let mut theta = vec![T::zero(); d];
    for (p, &i) in idx.iter().enumerate() {
        theta[i] = theta_sorted[p];
    }
    let mut order = idx;
    order.truncate(dl);
    Core { mu, theta, table: Some((full.b, full.v)), order }
}

/// `γ = ∞`: top-k sum; weight 1 above the k-th value, the leftover mass
/// spread evenly over entries equal to it (exact comparison).
fn top_k_limit<T: Real>(z: &[f64], k: usize) -> Core<T> {
    let mut sorted = z.to_vec();
    let kth = *sorted.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a)).1;
    let above = z.iter().filter(|&&v| v > kth).count();
    let ties = z.iter().filter(|&&v| v == kth).count();
    let share = T::from_usize(k - above) / T::from_usize(ties);
    let mut mu = T::zero();
    for &v in z.iter().filter(|&&v| v > kth) {
        mu += T::from_f64(v);
    }
    mu += T::from_usize(k - above) * T::from_f64(kth);
    let theta = z
        .iter()
        .map(|&v| {
            if v > kth {
                T::one()
            } else if v == kth {
                share
            } else {
                T::zero()
            }
        })
        .collect();
    Core { mu, theta, table: None, order: Vec::new() }
}

/// Any `0 ≤ k ≤ d`, `γ ∈ [−∞, ∞]`, reduced to the canonical regime by
/// `μ_{k,γ}(z) = −μ_{k,−γ}(−z)` and `μ_{k,γ}(z) = Σz − μ_{d−k,−γ}(z)`.
/// Returns `(μ, θ, table of the canonical call)`.
fn full<T: Real>(z: &[f64], k: usize, gamma: f64) -> (T, Vec<T>, Option<Core<T>>) {
    if gamma < 0.0 {
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let (mu, theta, c) = full::<T>(&neg, k, -gamma);
        return (-mu, theta, c);
    }
    let d = z.len();
    if 2 * k > d {
        // μ_{k,γ}(z) = Σz + μ_{d−k,γ}(−z),  θ_{k,γ}(z) = 1 − θ_{d−k,γ}(−z)
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let c = core::<T>(&neg, d - k, gamma);
        let mut sum = T::zero();
        for &v in z {
            sum += T::from_f64(v);
        }
        let theta = c.theta.iter().map(|&t| T::one() - t).collect();
        return (sum + c.mu, theta, None);
    }
    let mut c = core::<T>(z, k, gamma);
    let mu = c.mu;
    let theta = std::mem::take(&mut c.theta);
    (mu, theta, Some(c))
}

fn clamp_theta(theta: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let mut excess = 0.0f64;
    let mut out = theta;
    for t in out.iter_mut() {
        if !t.is_finite() {
            return Err(GsmError::Numeric("non-finite weight".into()));
        }
        excess = excess.max(-*t).max(*t - 1.0);
        *t = t.clamp(0.0, 1.0);
    }
    if excess > CLAMP_LIMIT {
        return Err(GsmError::Numeric(format!("weights left [0,1] by {excess:e}")));
    }
    Ok((out, excess.max(0.0)))
}

fn to_result(z: &[f64], k: usize, mu: f64, theta: Vec<f64>, c: Option<Core<f64>>) -> Result<GsmKernelResult> {
    if !mu.is_finite() {
        return Err(GsmError::Numeric("non-finite mu".into()));
    }
    let (theta, clamp_excess) = clamp_theta(theta)?;
    let btable = c.and_then(|c| {
        let order = c.order;
        c.table.map(|(b, v)| {
            let mut perm = order;
            desc_order(z, &mut perm);
            perm.truncate(k);
            BTable { b, zsorted: v, permutation: perm }
        })
    });
    Ok(GsmKernelResult { mu, theta, btable, clamp_excess })
}

/// `μ_{k,γ}(z)` and `θ_{k,γ}(z)` for `0 ≤ k ≤ ⌊d/2⌋`, `γ ∈ [0, ∞]`.
pub fn mu_theta(z: &[f64], k: usize, gamma: f64) -> Result<GsmKernelResult> {
    check_input(z, gamma)?;
    if 2 * k > z.len() {
        return Err(invalid("mu_theta requires k <= d/2; use mu_theta_full"));
    }
    if gamma < 0.0 {
        return Err(invalid("mu_theta requires gamma >= 0; use mu_theta_full"));
    }
    let mut c = core::<f64>(z, k, gamma);
    let theta = std::mem::take(&mut c.theta);
    to_result(z, k, c.mu, theta, Some(c))
}

/// `μ_{k,γ}(z)` and `θ_{k,γ}(z)` for any `0 ≤ k ≤ d` and `γ ∈ [−∞, ∞]`.
pub fn mu_theta_full(z: &[f64], k: usize, gamma: f64) -> Result<GsmKernelResult> {
    check_input(z, gamma)?;
    if k > z.len() {
        return Err(invalid("k must not exceed d"));
    }
    let (mu, theta, c) = full::<f64>(z, k, gamma);
    to_result(z, k, mu, theta, if gamma >= 0.0 { c } else { None })
}

/// Same algorithm as [`mu_theta_full`], evaluated in double-double
/// arithmetic. Used as the reference for accuracy measurements.
pub fn highprec_mu_theta(z: &[f64], k: usize, gamma: f64) -> Result<(f64, Vec<f64>)> {
    let (mu, theta) = highprec_mu_theta_dd(z, k, gamma)?;
    Ok((mu.to_f64(), theta.into_iter().map(|t| t.to_f64()).collect()))
}

/// [`highprec_mu_theta`] without rounding the results back to `f64`.
pub fn highprec_mu_theta_dd(z: &[f64], k: usize, gamma: f64) -> Result<(DoubleDouble, Vec<DoubleDouble>)> {
    check_input(z, gamma)?;
    if k > z.len() {
        return Err(invalid("k must not exceed d"));
    }
    let (mu, theta, _) = full::<DoubleDouble>(z, k, gamma);
    Ok((mu, theta))
}

/// GSM penalty `τ_{k,γ}(x)` and its weight vector `w_{k,γ}(x)`.
pub fn tau_and_weights(x: &[f64], k: usize, gamma: f64) -> Result<(f64, Vec<f64>)> {
    if k >= x.len() {
        return Err(invalid("tau_and_weights requires k < d"));
    }
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let r = mu_theta_full(&abs, x.len() - k, -gamma)?;
    // τ is a sum of nonnegative terms; cancellation may leave a tiny negative.
    Ok((r.mu.max(0.0), r.theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn gamma_zero_is_uniform() {
        let r = mu_theta(&[0.4, 0.1, 0.9, 0.2], 2, 0.0).unwrap();
        assert_close(r.mu, 0.8, 1e-15);
        assert_eq!(r.theta, vec![0.5; 4]);
    }

    #[test]
    fn gamma_infinite_splits_ties() {
        let r = mu_theta(&[1.0, 1.0], 1, f64::INFINITY).unwrap();
        assert_eq!(r.mu, 1.0);
        assert_eq!(r.theta, vec![0.5, 0.5]);
    }

    #[test]
    fn three_entries() {
        let (mu, b) = mu_btable(&[1.0, 2.0, 3.0], 2, 2, 1.0).unwrap();
        let expect = ((3f64.exp() + 4f64.exp() + 5f64.exp()) / 3.0).ln();
        assert_close(mu, expect, 1e-14);
        assert_eq!(b.zsorted[1..], [3.0, 2.0]);
        assert_eq!(b.permutation, vec![2, 1]);
        let (mu, _) = mu_btable(&[1.0, 2.0, 3.0], 2, 2, 1e-12).unwrap();
        assert_close(mu, 4.0, 1e-9);
    }

    #[test]
    fn constant_vector() {
        let z = [0.3; 11];
        for k in 1..=5 {
            let r = mu_theta(&z, k, 3.7).unwrap();
            assert_close(r.mu, 0.3 * k as f64, 1e-14);
            for t in &r.theta {
                assert_close(*t, k as f64 / 11.0, 1e-14);
            }
        }
    }

    #[test]
    fn matches_brute_force_random() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let z: Vec<f64> = (0..12).map(|_| rng.random()).collect();
        let r = mu_theta(&z, 3, 5.0).unwrap();
        let (mu, theta) = brute_force_mu_theta(&z, 3, 5.0).unwrap();
        assert_close(r.mu, mu, 1e-10);
        for (a, b) in r.theta.iter().zip(&theta) {
            assert_close(*a, *b, 1e-10);
        }
    }

    #[test]
    fn split_pieces_reproduce_unsplit_theta() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut z: Vec<f64> = (0..14).map(|_| rng.random::<f64>() * 3.0).collect();
        z.sort_by(|a, b| b.total_cmp(a));
        let (k, gamma) = (3, 4.0);
        let (left_z, right_z) = z.split_at(6);
        let (_, full) = mu_btable(&z, k, k, gamma).unwrap();
        let (_, left) = mu_btable(left_z, 1, 6, gamma).unwrap();
        let (_, right) = mu_btable(right_z, 1, k, gamma).unwrap();
        let (_, brute) = brute_force_mu_theta(&z, k, gamma).unwrap();
        for i in 0..6 {
            let tl = theta_backward_left(z[i], k, gamma, &left);
            let th = theta_convert(k, gamma, 8, &full, &left, &right, &tl);
            assert_close(th, brute[i], 1e-10);
        }
    }

    #[test]
    fn complement_and_sign_identities() {
        let z = [1.0, 2.0, 3.0];
        assert_close(mu_theta_full(&z, 2, f64::NEG_INFINITY).unwrap().mu, 3.0, 0.0);
        let r = mu_theta_full(&z, 3, 0.7).unwrap();
        assert_close(r.mu, 6.0, 1e-14);
        assert!(r.theta.iter().all(|&t| t == 1.0));

        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let z: Vec<f64> = (0..10).map(|_| rng.random::<f64>() - 0.5).collect();
        let a = mu_theta_full(&z, 7, 2.0).unwrap();
        let b = mu_theta_full(&z, 3, -2.0).unwrap();
        let sum: f64 = z.iter().sum();
        assert_close(a.mu + b.mu, sum, 1e-12);
        for (x, y) in a.theta.iter().zip(&b.theta) {
            assert_close(x + y, 1.0, 1e-12);
        }
        let (mu, _) = brute_force_mu_theta(&z, 7, 2.0).unwrap();
        assert_close(a.mu, mu, 1e-12);
    }

    #[test]
    fn tau_examples() {
        let (tau, w) = tau_and_weights(&[3.0, -1.0, 2.0], 1, f64::INFINITY).unwrap();
        assert_close(tau, 3.0, 0.0);
        assert_eq!(w, vec![0.0, 1.0, 1.0]);
        let x = [0.5, -2.0, 1.5, 0.0, 3.0];
        let (tau, w) = tau_and_weights(&x, 2, 0.0).unwrap();
        assert_close(tau, 0.6 * 7.0, 1e-14);
        assert!(w.iter().all(|&v| (v - 0.6).abs() < 1e-15));
    }

    #[test]
    fn extreme_gammas_stay_finite() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let z: Vec<f64> = (0..200).map(|_| rng.random()).collect();
        for &g in &[1e-20, 1e-10, 1e10, 1e20] {
            for k in [1, 2, 10, 100] {
                let r = mu_theta(&z, k, g).unwrap();
                assert!(r.mu.is_finite());
                let s: f64 = r.theta.iter().sum();
                assert_close(s, k as f64, 1e-9 * 200.0);
            }
        }
    }

    #[test]
    fn highprec_agrees_with_double() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let z: Vec<f64> = (0..60).map(|_| rng.random()).collect();
        for &g in &[0.01, 1.0, 30.0, 1e5] {
            let a = mu_theta(&z, 20, g).unwrap();
            let (mu, theta) = highprec_mu_theta(&z, 20, g).unwrap();
            assert_close(a.mu, mu, 1e-13 * mu.abs());
            for (x, y) in a.theta.iter().zip(&theta) {
                assert_close(*x, *y, 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(mu_theta(&[1.0, 2.0, 3.0], 2, 1.0).is_err());
        assert!(mu_theta(&[1.0, f64::NAN], 1, 1.0).is_err());
        assert!(tau_and_weights(&[1.0, 2.0], 2, 1.0).is_err());
    }
}
