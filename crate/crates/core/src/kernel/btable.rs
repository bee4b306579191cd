//! Log-domain subset-sum accumulators.
//!
//! For a vector `z` of length `d`, `b[q] = log(s_q / C(d, q))` where `s_q`
//! sums `exp(γ(Σ_{j∈Λ} z_j − M_q))` over all `q`-subsets `Λ` and `M_q` is
//! the largest `q`-subset sum. Every `b[q]` lies in `[-q·ln d, 0]`.

use crate::real::Real;

/// Tables `b[0..=s]` and the sorted top entries `v[0..=s]` (`v[0] = +∞`).
#[derive(Clone, Debug)]
pub(crate) struct Tables<T> {
    pub b: Vec<T>,
    pub v: Vec<T>,
}

/// Runs the recursion from the last entry of `z` to the first.
///
/// When `split = Some(l)`, the tables of the suffix `z[l..]` are captured
/// on the way (valid for `q <= min(s, d - l)`), at no extra cost.
pub(crate) fn run<T: Real>(
    z: &[T],
    s: usize,
    gamma: T,
    split: Option<usize>,
) -> (Tables<T>, Option<Tables<T>>) {
    let d = z.len();
    debug_assert!(s <= d);
    let mut b = vec![T::zero(); s + 1];
    let mut v = vec![T::infinity(); s + 1];
    let mut suffix = None;

    for j in (0..d).rev() {
        let m = d - 1 - j;
        let zr = z[j];
        let inv = T::one() / T::from_usize(m + 1);
        if s > m {
            v[m + 1] = zr.min(v[m]);
            b[m + 1] = T::zero();
        }
        for q in (1..=s.min(m)).rev() {
            let xi = gamma * (zr - v[q]);
            let eta = b[q] - b[q - 1] - xi;
            let nb = if eta <= T::zero() {
                (T::from_usize(m + 1 - q) * inv * eta.exp_m1()).ln_1p() + b[q - 1] + xi.neg_part()
            } else {
                (T::from_usize(q) * inv * (-eta).exp_m1()).ln_1p() + b[q] - xi.pos_part()
            };
            v[q] = zr.min(v[q - 1]).max(v[q]);
            b[q] = nb;
        }
        if split == Some(j) {
            let len = s.min(d - j) + 1;
            suffix = Some(Tables {
                b: b[..len].to_vec(),
                v: v[..len].to_vec(),
            });
        }
    }
    (Tables { b, v }, suffix)
}

/// `μ_{k,γ}` from the tables: `b[k]/γ + Σ_{q≤k} v[q]`.
pub(crate) fn mu_from<T: Real>(t: &Tables<T>, k: usize, gamma: T) -> T {
    let mut acc = t.b[k] / gamma;
    for q in 1..=k {
        acc += t.v[q];
    }
    acc
}
