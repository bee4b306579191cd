//! Reference evaluations of `μ_{k,γ}` and `θ_{k,γ}` straight from their
//! definitions. Exponential cost; meant for validating the fast kernel.

use crate::error::{invalid, GsmError, Result};

/// Largest number of subsets [`brute_force_mu_theta`] will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

pub(crate) fn ln_binom(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|j| ((n - j) as f64 / (j + 1) as f64).ln()).sum()
}

pub(crate) fn for_each_subset(d: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + d - k {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Enumerates all `k`-subsets. Accepts any `γ ∈ [−∞, ∞]` and `0 ≤ k ≤ d`.
pub fn brute_force_mu_theta(z: &[f64], k: usize, gamma: f64) -> Result<(f64, Vec<f64>)> {
    let d = z.len();
    if k > d {
        return Err(invalid("k must not exceed d"));
    }
    if gamma.is_nan() {
        return Err(invalid("gamma is NaN"));
    }
    let needed = ln_binom(d, k).exp();
    if needed > BRUTE_FORCE_LIMIT {
        return Err(GsmError::BudgetExceeded { needed, limit: BRUTE_FORCE_LIMIT });
    }
    if k == 0 {
        return Ok((0.0, vec![0.0; d]));
    }

    let mut sums = Vec::with_capacity(needed.round() as usize);
    let mut members = Vec::with_capacity(sums.capacity() * k);
    for_each_subset(d, k, |s| {
        sums.push(s.iter().map(|&i| z[i]).sum::<f64>());
        members.extend_from_slice(s);
    });
    let count = sums.len() as f64;

    let mut theta = vec![0.0; d];
    if gamma == 0.0 {
        let mean = sums.iter().sum::<f64>() / count;
        theta.iter_mut().for_each(|t| *t = k as f64 / d as f64);
        return Ok((mean, theta));
    }

    let pick = if gamma > 0.0 { f64::max } else { f64::min };
    let best = sums.iter().cloned().fold(sums[0], pick);

    if gamma.is_infinite() {
        let mut hits = 0.0;
        for (j, &s) in sums.iter().enumerate() {
            if s == best {
                hits += 1.0;
                for &i in &members[j * k..(j + 1) * k] {
                    theta[i] += 1.0;
                }
            }
        }
        theta.iter_mut().for_each(|t| *t /= hits);
        return Ok((best, theta));
    }

    let mut total = 0.0;
    let mut total_m1 = 0.0;
    for (j, &s) in sums.iter().enumerate() {
        let x = gamma * (s - best);
        let e = x.exp();
        total += e;
        total_m1 += x.exp_m1();
        for &i in &members[j * k..(j + 1) * k] {
            theta[i] += e;
        }
    }
    theta.iter_mut().for_each(|t| *t /= total);
    // log(mean) in the form that keeps precision when all terms are near 1.
    let log_mean = if total / count >= 0.5 {
        (total_m1 / count).ln_1p()
    } else {
        (total / count).ln()
    };
    Ok((best + log_mean / gamma, theta))
}

/// Elementary-symmetric-polynomial recursion
/// `t_q^i = (s_{q−1} − t_{q−1}^i)·e^{γz_i}`, `s_q = (1/q)Σ_i t_q^i`.
///
/// Only valid while the unnormalized sums stay representable; finite
/// nonzero `γ` only.
pub fn naive_recursion_mu_theta(z: &[f64], k: usize, gamma: f64) -> Result<(f64, Vec<f64>)> {
    let d = z.len();
    if k == 0 || k > d {
        return Err(invalid("naive recursion requires 1 <= k <= d"));
    }
    if !gamma.is_finite() || gamma == 0.0 {
        return Err(invalid("naive recursion requires finite nonzero gamma"));
    }
    let zmax = z.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let scale = gamma.abs() * k as f64 * zmax + ln_binom(d, k);
    if scale >= 700.0 {
        return Err(GsmError::Numeric(format!("naive recursion would overflow (scale {scale:.1})")));
    }
    let e: Vec<f64> = z.iter().map(|&x| (gamma * x).exp()).collect();
    let mut t = vec![0.0; d];
    let mut s_prev = 1.0;
    for q in 1..=k {
        for i in 0..d {
            t[i] = (s_prev - t[i]) * e[i];
        }
        s_prev = t.iter().sum::<f64>() / q as f64;
    }
    let mu = ((s_prev).ln() - ln_binom(d, k)) / gamma;
    let theta = t.iter().map(|&ti| ti / s_prev).collect();
    Ok((mu, theta))
}
