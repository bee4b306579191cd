//! Per-coordinate recursions for `θ_{k,γ}`.

use crate::real::Real;

/// `ratio[q] = q/(n−q+1)` for `q = 0..=s`.
pub(crate) fn forward_ratios<T: Real>(n: usize, s: usize) -> Vec<T> {
    (0..=s).map(|q| T::from_usize(q) / T::from_usize(n - q + 1)).collect()
}

/// Forward recursion `θ_q = c_q (1 − θ_{q−1})` with
/// `c_q = q/(d−q+1) · exp(γ(z_i − z_(q)) + b_{q−1} − b_q)`.
///
/// Safe whenever `c_k ≤ 1`, which holds for every entry outside the
/// `2k−2` largest. `ratio` comes from [`forward_ratios`]`(d, k)`.
pub(crate) fn forward<T: Real>(zi: T, k: usize, gamma: T, b: &[T], v: &[T], ratio: &[T]) -> T {
    let mut theta = T::zero();
    for q in 1..=k {
        let c = ratio[q] * (gamma * (zi - v[q]) + b[q - 1] - b[q]).exp();
        theta = c * (T::one() - theta);
    }
    theta
}

/// `θ_q^i(z_L)` for `q = 0..=k`, where `z_L` has length `dl`, `bl`/`vl`
/// are its full tables and `zi` is one of its entries.
///
/// Runs forward while `c_q ≤ 1`; from the first crossing order `q̂` on, runs
/// backwards from `θ_{dl} = 1` using `θ_q = 1 − θ_{q+1}/c_{q+1}`.
/// `ratios` comes from [`LeftRatios::new`]`(dl)`.
pub(crate) fn backward_left<T: Real>(
    zi: T,
    dl: usize,
    k: usize,
    gamma: T,
    bl: &[T],
    vl: &[T],
    ratios: &LeftRatios<T>,
    out: &mut Vec<T>,
) {
    out.clear();
    out.resize(dl + 1, T::zero());
    out[dl] = T::one();
    let mut q_hat = k + 1;
    for q in 1..=k {
        let eta = gamma * (zi - vl[q]) + bl[q - 1] - bl[q];
        if eta <= ratios.log_threshold[q] {
            out[q] = ratios.forward[q] * eta.exp() * (T::one() - out[q - 1]);
        } else {
            q_hat = q;
            break;
        }
    }
    if q_hat <= k {
        for q in (q_hat..dl).rev() {
            let eta = bl[q + 1] - bl[q] - gamma * (zi - vl[q + 1]);
            out[q] = T::one() - ratios.backward[q] * eta.exp() * out[q + 1];
        }
    }
    out.truncate(k + 1);
}

/// Step ratios for [`backward_left`] on a vector of length `dl`.
pub(crate) struct LeftRatios<T> {
    /// `ln((dl−q+1)/q)`
    pub log_threshold: Vec<T>,
    /// `q/(dl−q+1)`
    pub forward: Vec<T>,
    /// `(dl−q)/(q+1)`
    pub backward: Vec<T>,
}

impl<T: Real> LeftRatios<T> {
    pub fn new(dl: usize) -> Self {
        let forward = forward_ratios(dl, dl);
        let log_threshold = (0..=dl)
            .map(|q| if q == 0 { T::zero() } else { (T::one() / forward[q]).ln() })
            .collect();
        let backward = (0..=dl).map(|q| T::from_usize(dl - q) / T::from_usize(q + 1)).collect();
        Self { log_threshold, forward, backward }
    }
}

/// Weights `ω_t = exp(log α_t + bL_t + bR_{k−t} − b_k − γΔ_t)` of the
/// conversion `θ_k^i(z) = Σ_t ω_t θ_t^i(z_L)`; zero outside the support.
/// They do not depend on the entry `i`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn convert_weights<T: Real>(
    k: usize,
    d_r: usize,
    gamma: T,
    bk: T,
    bl: &[T],
    br: &[T],
    log_alpha: &[T],
    delta: &[T],
) -> Vec<T> {
    let lo = k.saturating_sub(d_r).max(1);
    let mut w = vec![T::zero(); k + 1];
    for t in lo..=k {
        w[t] = (log_alpha[t] + bl[t] + br[k - t] - bk - gamma * delta[t]).exp();
    }
    w
}

/// `Σ_t ω_t θ_t`, largest orders first.
pub(crate) fn convert_with<T: Real>(weights: &[T], theta_left: &[T]) -> T {
    let mut acc = T::zero();
    for t in (1..weights.len()).rev() {
        acc += weights[t] * theta_left[t];
    }
    acc
}

/// Combines `θ_t^i(z_L)` into `θ_k^i(z)`:
/// `Σ_t exp(log α_t + bL_t + bR_{k−t} − b_k − γΔ_t) · θ_t^i(z_L)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn convert<T: Real>(
    k: usize,
    d_r: usize,
    gamma: T,
    bk: T,
    bl: &[T],
    br: &[T],
    log_alpha: &[T],
    delta: &[T],
    theta_left: &[T],
) -> T {
    convert_with(&convert_weights(k, d_r, gamma, bk, bl, br, log_alpha, delta), theta_left)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::btable;
    use crate::kernel::oracle::brute_force_mu_theta;

    #[test]
    fn forward_matches_brute_force_on_safe_entries() {
        let z = [2.1, 1.9, 0.3, 0.5, -0.2, 0.1, 0.05, 0.4];
        let (k, gamma) = (2, 3.0);
        let mut sorted: Vec<f64> = z.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let (t, _) = btable::run(&sorted, k, gamma, None);
        let (_, brute) = brute_force_mu_theta(&sorted, k, gamma).unwrap();
        for i in 2..z.len() {
            let th = forward(sorted[i], k, gamma, &t.b, &t.v, &forward_ratios(z.len(), k));
            assert!((th - brute[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn k_one_is_a_single_softmax_step() {
        let z = [0.2, 1.0, -0.5, 0.7];
        let gamma = 2.0;
        let (t, _) = btable::run(&z, 1, gamma, None);
        for &zi in &z {
            let th = forward(zi, 1, gamma, &t.b, &t.v, &forward_ratios(4, 1));
            let expect = 0.25 * (gamma * (zi - 1.0) - t.b[1]).exp();
            assert!((th - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn backward_left_matches_enumeration() {
        let zl = [3.0, 2.2, 2.9, 1.1, 0.4, 2.5];
        let (dl, k, gamma) = (6, 4, 10.0);
        let (t, _) = btable::run(&zl, dl, gamma, None);
        let ratios = LeftRatios::new(dl);
        let mut out = Vec::new();
        for (i, &zi) in zl.iter().enumerate() {
            backward_left(zi, dl, k, gamma, &t.b, &t.v, &ratios, &mut out);
            for q in 1..=k {
                let (_, brute) = brute_force_mu_theta(&zl, q, gamma).unwrap();
                assert!((out[q] - brute[i]).abs() < 1e-10, "i={i} q={q}");
            }
        }
    }

    #[test]
    fn backward_left_symmetric_input() {
        let zl = [0.7; 5];
        let (t, _) = btable::run(&zl, 5, 4.0, None);
        let mut out = Vec::new();
        backward_left(0.7, 5, 3, 4.0, &t.b, &t.v, &LeftRatios::new(5), &mut out);
        for q in 0..=3 {
            assert!((out[q] - q as f64 / 5.0).abs() < 1e-14);
        }
    }
}
