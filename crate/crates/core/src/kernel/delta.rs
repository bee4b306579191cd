//! Max-sum defects `Δ_{k,t}(u, v) = M_k([u, v]) − M_t(u) − M_{k−t}(v)` and
//! the log two-set binomial coefficients used when merging split tables.

use crate::real::Real;

/// `Δ_{k,t}` for `t = 0..=k`, given the sorted prefixes (index 0 is `+∞`)
/// of the merged vector (`zs`, length ≥ k+1), the left part (`zl`, ≥ k+1)
/// and the right part (`zr`, ≥ min(k, d_r)+1).
///
/// The update only adds nonnegative differences, so the result is never
/// negative and is exactly zero whenever the decompositions coincide.
pub(crate) fn table<T: Real>(zs: &[T], zl: &[T], zr: &[T], k: usize, d_r: usize) -> Vec<T> {
    let mut delta = vec![T::zero(); k + 1];
    for q in 1..=k {
        let ta = q.saturating_sub(d_r);
        let tb = q.min(k);
        for t in (ta.max(1)..=tb).rev() {
            if zs[q] >= zl[t] {
                delta[t] = delta[t - 1] + (zs[q] - zl[t]);
            } else {
                delta[t] += zs[q] - zr[q - t];
            }
        }
        if ta == 0 {
            delta[0] += zs[q] - zr[q];
        } else {
            delta[ta - 1] = T::zero();
        }
    }
    delta
}

/// `log(C(m,t)·C(n,q−t)/C(m+n,q))` for `t = 0..=q`; `−∞` outside the support.
///
/// Built from the smallest admissible `t` by exact integer ratios, which is
/// more accurate than differencing log-gamma values of large arguments.
pub(crate) fn log_alpha_row<T: Real>(m: usize, n: usize, q: usize) -> Vec<T> {
    let mut out = vec![-T::infinity(); q + 1];
    if q > m + n {
        return out;
    }
    let t_lo = q.saturating_sub(n);
    let t_hi = q.min(m);
    let total = (m + n) as f64;
    let mut acc = T::zero();
    if q <= n {
        // C(n,q)/C(m+n,q) = Π_{j<q} (1 − m/(m+n−j))
        for j in 0..q {
            acc += (-T::from_f64(m as f64) / T::from_f64(total - j as f64)).ln_1p();
        }
    } else {
        // C(m,q')/C(m+n,q') with q' = m+n−q
        for j in 0..(m + n - q) {
            acc += (-T::from_f64(n as f64) / T::from_f64(total - j as f64)).ln_1p();
        }
    }
    out[t_lo] = acc;
    for t in (t_lo + 1)..=t_hi {
        let num = ((m - t + 1) as f64) * ((q - t + 1) as f64);
        let den = (t as f64) * ((n + t - q) as f64);
        acc += (T::from_f64(num) / T::from_f64(den)).ln();
        out[t] = acc;
    }
    out
}

/// `log(C(m,t)·C(n,q−t)/C(m+n,q))`, or `−∞` when the coefficient vanishes.
pub fn log_two_set_binom(m: usize, n: usize, q: usize, t: usize) -> f64 {
    if t > q {
        return f64::NEG_INFINITY;
    }
    log_alpha_row::<f64>(m, n, q)[t]
}

/// `Δ_{k,t}(u, v)` for `t = 0..=k` on unsorted input vectors.
pub fn delta_table(u: &[f64], v: &[f64], k: usize) -> crate::Result<Vec<f64>> {
    if k == 0 || k > u.len() {
        return Err(crate::error::invalid("delta_table requires 1 <= k <= len(u)"));
    }
    let desc = |x: &[f64]| {
        let mut s = x.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        s.insert(0, f64::INFINITY);
        s
    };
    let zl = desc(u);
    let zr = desc(v);
    let mut merged = u.to_vec();
    merged.extend_from_slice(v);
    let zs = desc(&merged);
    Ok(table(&zs, &zl, &zr, k, v.len()))
}
