//! Least-squares orthogonal matching pursuit.
//!
//! Each step adds the column that minimizes the residual after refitting on
//! the enlarged support. With `Q` an orthonormal basis of the current
//! columns, that is the column maximizing `(r̃_jᵀ r)² / ‖r̃_j‖²` where
//! `r̃_j = (I − QQᵀ) a_j`; the `r̃_j` are updated in place.

use crate::linalg::{axpy, dot, ProblemInstance};
use crate::wl1::least_squares_on_support;

/// Columns whose orthogonalized norm falls below this fraction of the
/// original are treated as linearly dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

/// Greedy `k`-sparse least-squares fit.
pub fn ls_omp(p: &ProblemInstance, k: usize) -> Vec<f64> {
    ls_omp_from(p, &[], k)
}

/// Continues LS-OMP from `initial` until the support has `k` entries (or no
/// independent column is left) and refits on the final support.
pub fn ls_omp_from(p: &ProblemInstance, initial: &[usize], k: usize) -> Vec<f64> {
    let (n, d) = (p.n(), p.d());
    let mut cols: Vec<f64> = p.a().as_slice().to_vec();
    let mut r = p.y().to_vec();
    let mut in_support = vec![false; d];
    let mut support = Vec::with_capacity(k);

    let add = |j: usize, cols: &mut Vec<f64>, r: &mut Vec<f64>, in_support: &mut Vec<bool>| {
        in_support[j] = true;
        let qn = dot(&cols[j * n..(j + 1) * n], &cols[j * n..(j + 1) * n]).sqrt();
        if qn <= DEPENDENCE_TOL * p.col_norms()[j] {
            return;
        }
        let q: Vec<f64> = cols[j * n..(j + 1) * n].iter().map(|v| v / qn).collect();
        let c = dot(&q, r);
        axpy(-c, &q, r);
        for l in 0..d {
            if !in_support[l] {
                let col = &mut cols[l * n..(l + 1) * n];
                let c = dot(&q, col);
                axpy(-c, &q, col);
            }
        }
    };

    for &j in initial {
        if j < d && !in_support[j] {
            add(j, &mut cols, &mut r, &mut in_support);
            support.push(j);
        }
    }
    while support.len() < k.min(d) {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..d {
            if in_support[j] {
                continue;
            }
            let col = &cols[j * n..(j + 1) * n];
            let nn = dot(col, col);
            if nn <= (DEPENDENCE_TOL * p.col_norms()[j]).powi(2) {
                continue;
            }
            let c = dot(col, &r);
            let score = c * c / nn;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else { break };
        add(j, &mut cols, &mut r, &mut in_support);
        support.push(j);
    }
    support.sort_unstable();
    least_squares_on_support(p, &support)
}
