//! Random problem instances: design matrices, sparse signals and noise.
//!
//! Every draw comes from a ChaCha20 generator keyed by the experiment seed,
//! with the stream id `(trial << 8) | purpose` selecting an independent
//! sub-stream. Changing the number of trials or methods therefore never
//! shifts the data of an existing trial.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Sub-stream purposes.
pub mod stream {
    pub const MATRIX: u64 = 1;
    pub const SIGNAL: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const MONTE_CARLO: u64 = 4;
    pub const KERNEL_INPUT: u64 = 5;
}

/// Signals drawn when estimating `E‖Ax‖²` for the noise level.
pub const NOISE_MC_SIGNALS: usize = 2000;

pub fn rng(seed: u64, trial: u64, purpose: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream((trial << 8) | purpose);
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixKind {
    /// i.i.d. standard normal entries.
    Uncorrelated,
    /// Rows drawn from `N(0, Σ)` with `Σ_ij = ρ^|i−j|`.
    Correlated { rho: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// Random support, `N(0,1)` values.
    Gaussian,
    /// Equispaced support, distinct magnitudes from `{1 + 29(i−1)/(k−1)}`, random signs.
    EquispacedLinear,
    /// Equispaced support, random `±1` values.
    EquispacedPm1,
}

/// `n × d` design matrix. Correlated rows use the AR(1) recursion
/// `a_j = ρ a_{j−1} + √(1−ρ²) g_j`, which has covariance `ρ^|i−j|`.
pub fn gen_matrix<R: Rng>(kind: MatrixKind, n: usize, d: usize, normalize: bool, rng: &mut R) -> Result<DMatrix<f64>> {
    if n == 0 || d == 0 {
        return Err(invalid("matrix dimensions must be positive"));
    }
    let mut a = DMatrix::zeros(n, d);
    match kind {
        MatrixKind::Uncorrelated => {
            // Row by row so the draw order does not depend on the storage layout.
            for i in 0..n {
                for j in 0..d {
                    a[(i, j)] = rng.sample(StandardNormal);
                }
            }
        }
        MatrixKind::Correlated { rho } => {
            if !(0.0..1.0).contains(&rho) {
                return Err(invalid("rho must lie in [0, 1)"));
            }
            let c = (1.0 - rho * rho).sqrt();
            for i in 0..n {
                let mut prev: f64 = rng.sample(StandardNormal);
                a[(i, 0)] = prev;
                for j in 1..d {
                    let g: f64 = rng.sample(StandardNormal);
                    prev = rho * prev + c * g;
                    a[(i, j)] = prev;
                }
            }
        }
    }
    if normalize {
        for mut col in a.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
    }
    Ok(a)
}

/// `k` indices spread evenly over `0..d`.
pub fn equispaced_support(d: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| ((2 * i + 1) * d) / (2 * k)).collect()
}

fn random_sign<R: Rng>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// A `k`-sparse signal of length `d`.
pub fn gen_signal<R: Rng>(kind: SignalKind, d: usize, k: usize, rng: &mut R) -> Result<Vec<f64>> {
    if k == 0 || k > d {
        return Err(invalid("need 1 <= k <= d"));
    }
    let mut x = vec![0.0; d];
    match kind {
        SignalKind::Gaussian => {
            let mut idx = sample(rng, d, k).into_vec();
            idx.sort_unstable();
            for i in idx {
                // A zero draw has probability zero, but keep the count exact.
                let mut v: f64 = rng.sample(StandardNormal);
                while v == 0.0 {
                    v = rng.sample(StandardNormal);
                }
                x[i] = v;
            }
        }
        SignalKind::EquispacedLinear => {
            let order = sample(rng, k, k).into_vec();
            for (&i, &m) in equispaced_support(d, k).iter().zip(&order) {
                let mag = if k == 1 { 1.0 } else { 1.0 + m as f64 / (k - 1) as f64 * 29.0 };
                x[i] = random_sign(rng) * mag;
            }
        }
        SignalKind::EquispacedPm1 => {
            for i in equispaced_support(d, k) {
                x[i] = random_sign(rng);
            }
        }
    }
    Ok(x)
}

/// Noise standard deviation `σ = ν·√(E‖Ax‖²/n)`, with the expectation
/// estimated from [`NOISE_MC_SIGNALS`] signals of the given kind.
pub fn noise_sigma<R: Rng>(a: &DMatrix<f64>, kind: SignalKind, k: usize, nu: f64, rng: &mut R) -> Result<f64> {
    if !(0.0..=1.0).contains(&nu) {
        return Err(invalid("nu must lie in [0, 1]"));
    }
    if nu == 0.0 {
        return Ok(0.0);
    }
    let (n, d) = a.shape();
    let mut total = 0.0;
    let mut ax = vec![0.0; n];
    for _ in 0..NOISE_MC_SIGNALS {
        let x = gen_signal(kind, d, k, rng)?;
        ax.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (o, aij) in ax.iter_mut().zip(a.column(j).iter()) {
                    *o += xj * aij;
                }
            }
        }
        total += ax.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(nu * (total / NOISE_MC_SIGNALS as f64 / n as f64).sqrt())
}

pub fn gen_noise<R: Rng>(n: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; n];
    }
    (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
}
