//! Problem data `(A, y, k)` and the dense kernels shared by the solvers.
//!
//! `A` is stored column-major (nalgebra's layout), so `A x` is a sum of
//! scaled columns and `Aᵀ r` is a dot product per column.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::sync::OnceLock;

use crate::error::{invalid, GsmError, Result};

/// Relative tolerance below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Largest `min(n, d)` for which spectral quantities come from an exact
/// eigendecomposition of the smaller Gram matrix.
pub const EXACT_SPECTRUM_LIMIT: usize = 1000;

/// Largest `d` for which [`ProblemInstance::gram`] caches `AᵀA`.
pub const GRAM_LIMIT: usize = 2000;

const POWER_ITERS: usize = 50;
const SAFETY: f64 = 1.01;

#[derive(Debug)]
pub struct ProblemInstance {
    a: DMatrix<f64>,
    y: Vec<f64>,
    k: usize,
    col_norms: Vec<f64>,
    spec_norm_sq: f64,
    sigma_n: OnceLock<f64>,
    gram: OnceLock<Option<DMatrix<f64>>>,
}

impl Clone for ProblemInstance {
    fn clone(&self) -> Self {
        let sigma_n = OnceLock::new();
        if let Some(&s) = self.sigma_n.get() {
            let _ = sigma_n.set(s);
        }
        let gram = OnceLock::new();
        if let Some(g) = self.gram.get() {
            let _ = gram.set(g.clone());
        }
        Self {
            a: self.a.clone(),
            y: self.y.clone(),
            k: self.k,
            col_norms: self.col_norms.clone(),
            spec_norm_sq: self.spec_norm_sq,
            sigma_n,
            gram,
        }
    }
}

impl ProblemInstance {
    pub fn new(a: DMatrix<f64>, y: Vec<f64>, k: usize) -> Result<Self> {
        let (n, d) = a.shape();
        if n == 0 || d == 0 {
            return Err(invalid("A must be nonempty"));
        }
        if y.len() != n {
            return Err(invalid(format!("y has length {} but A has {n} rows", y.len())));
        }
        if k == 0 || k >= d {
            return Err(invalid(format!("need 0 < k < d (k = {k}, d = {d})")));
        }
        if a.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(GsmError::NonFinite);
        }
        let col_norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
        if let Some(j) = col_norms.iter().position(|&c| c == 0.0) {
            return Err(invalid(format!("column {j} of A is zero")));
        }
        let spec_norm_sq = spectral_norm_sq_bound(&a);
        Ok(Self { a, y, k, col_norms, spec_norm_sq, sigma_n: OnceLock::new(), gram: OnceLock::new() })
    }

    /// Same `A` and `y` with a different target sparsity.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        if k == 0 || k >= self.d() {
            return Err(invalid(format!("need 0 < k < d (k = {k}, d = {})", self.d())));
        }
        let mut p = self.clone();
        p.k = k;
        Ok(p)
    }

    /// Same `A` and `k` with a different measurement vector.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(invalid("y has the wrong length"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(GsmError::NonFinite);
        }
        let mut p = self.clone();
        p.y = y;
        Ok(p)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    pub fn col_norms(&self) -> &[f64] {
        &self.col_norms
    }

    pub fn max_col_norm(&self) -> f64 {
        self.col_norms.iter().cloned().fold(0.0, f64::max)
    }

    /// Upper bound on `‖A‖₂²`, the Lipschitz constant of `∇ ½‖Ax − y‖²`.
    pub fn spec_norm_sq(&self) -> f64 {
        self.spec_norm_sq
    }

    pub fn y_norm(&self) -> f64 {
        norm2(&self.y)
    }

    /// `σ_n(A)`, or 0 when `A` has fewer than `n` columns or is rank
    /// deficient (relative tolerance [`RANK_TOL`]).
    pub fn sigma_n(&self) -> f64 {
        *self.sigma_n.get_or_init(|| {
            let (n, d) = self.a.shape();
            if n > d {
                return 0.0;
            }
            let gram = &self.a * self.a.transpose();
            let eig = SymmetricEigen::new(gram).eigenvalues;
            let hi = eig.max().max(0.0);
            let lo = eig.min().max(0.0);
            if lo <= (RANK_TOL * RANK_TOL) * hi {
                0.0
            } else {
                lo.sqrt()
            }
        })
    }

    /// `AᵀA`, computed on first use; `None` when `d > GRAM_LIMIT`.
    pub fn gram(&self) -> Option<&DMatrix<f64>> {
        self.gram
            .get_or_init(|| (self.d() <= GRAM_LIMIT).then(|| self.a.transpose() * &self.a))
            .as_ref()
    }

    /// `out = A x`, skipping zero entries of `x`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.column(j), out);
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.apply_into(x, &mut out);
        out
    }

    /// `out = Aᵀ r`.
    pub fn apply_t_into(&self, r: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = dot(self.column(j), r);
        }
    }

    pub fn apply_t(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d()];
        self.apply_t_into(r, &mut out);
        out
    }

    /// `A x − y`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.apply(x);
        for (ri, yi) in r.iter_mut().zip(&self.y) {
            *ri -= yi;
        }
        r
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        norm2(&self.residual(x))
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.a.as_slice()[j * n..(j + 1) * n]
    }
}

/// `SAFETY · ‖A‖₂²`: exact for small Gram matrices, power iteration otherwise.
pub fn spectral_norm_sq_bound(a: &DMatrix<f64>) -> f64 {
    let (n, d) = a.shape();
    if n.min(d) <= EXACT_SPECTRUM_LIMIT {
        let gram = if n <= d { a * a.transpose() } else { a.transpose() * a };
        return SAFETY * SymmetricEigen::new(gram).eigenvalues.max().max(0.0);
    }
    // Deterministic, non-degenerate start vector.
    let mut v = DVector::from_fn(d, |i, _| 1.0 + ((i * 7919) % 101) as f64 / 101.0);
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..POWER_ITERS {
        let w = a.transpose() * (a * &v);
        est = w.norm();
        if est == 0.0 {
            break;
        }
        v = w / est;
    }
    SAFETY * est
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

/// `y += alpha · x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn dist1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn support(x: &[f64]) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
}
