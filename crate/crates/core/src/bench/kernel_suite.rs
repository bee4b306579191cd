//! Accuracy and timing measurements for the soft-min kernel.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::data::{rng, stream};
use crate::dd::DoubleDouble;
use crate::error::{invalid, Result};
use crate::kernel::{highprec_mu_theta_dd, mu_theta_full};
use crate::par::Execution;

/// γ values of the accuracy grid, from `1e−20` to `1e20`.
pub const ACCURACY_GAMMAS: [f64; 18] =
    [1e-20, 1e-10, 1e-5, 1e-2, 0.2, 0.4, 0.6, 0.8, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 1e2, 1e5, 1e10, 1e20];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputDist {
    /// `z_i ~ U(0, 1)`
    Uniform,
    /// `z_i = |g_i|`, `g_i ~ N(0, 1)`
    AbsNormal,
}

impl InputDist {
    fn id(self) -> u64 {
        match self {
            InputDist::Uniform => 0,
            InputDist::AbsNormal => 1,
        }
    }
}

pub fn gen_input<R: Rng>(dist: InputDist, d: usize, rng: &mut R) -> Vec<f64> {
    match dist {
        InputDist::Uniform => (0..d).map(|_| rng.random::<f64>()).collect(),
        InputDist::AbsNormal => (0..d).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub d: usize,
    pub k: usize,
    pub gamma: f64,
    pub dist: InputDist,
    pub trials: usize,
    /// `max |μ − μ_ref| / |μ_ref|` over the trials.
    pub max_mu_rel_err: f64,
    /// `max (1/k)‖θ − θ_ref‖∞` over the trials.
    pub max_theta_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccuracySpec {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub ks: Vec<usize>,
    pub gammas: Vec<f64>,
    pub dists: Vec<InputDist>,
    pub trials: usize,
}

impl Default for AccuracySpec {
    fn default() -> Self {
        Self {
            seed: 1,
            dims: vec![1000],
            ks: vec![10, 100, 500],
            gammas: ACCURACY_GAMMAS.to_vec(),
            dists: vec![InputDist::Uniform, InputDist::AbsNormal],
            trials: 20,
        }
    }
}

/// Errors of one kernel evaluation against the double-double reference.
pub fn kernel_errors(z: &[f64], k: usize, gamma: f64) -> Result<(f64, f64)> {
    let r = mu_theta_full(z, k, gamma)?;
    let (mu_ref, theta_ref) = highprec_mu_theta_dd(z, k, gamma)?;
    let diff = (DoubleDouble::from(r.mu) - mu_ref).hi().abs();
    let mu_err = if mu_ref.hi() != 0.0 { diff / mu_ref.hi().abs() } else { diff };
    let theta_err = r
        .theta
        .iter()
        .zip(&theta_ref)
        .map(|(t, tr)| (DoubleDouble::from(*t) - *tr).hi().abs())
        .fold(0.0, f64::max);
    Ok((mu_err, theta_err / k.max(1) as f64))
}

/// One row per `(d, k, γ, distribution)` cell.
pub fn run_kernel_accuracy(spec: &AccuracySpec, exec: Execution) -> Result<Vec<AccuracyRow>> {
    if spec.trials == 0 || spec.dims.is_empty() || spec.ks.is_empty() || spec.gammas.is_empty() || spec.dists.is_empty() {
        return Err(invalid("accuracy spec needs at least one value per axis"));
    }
    if spec.ks.iter().any(|&k| spec.dims.iter().any(|&d| k > d)) {
        return Err(invalid("every k must be at most every d"));
    }
    let mut cells = Vec::new();
    for &d in &spec.dims {
        for &k in &spec.ks {
            for &dist in &spec.dists {
                for &gamma in &spec.gammas {
                    cells.push((d, k, dist, gamma));
                }
            }
        }
    }
    exec.map(cells, |(d, k, dist, gamma)| {
        let (mut mu_max, mut th_max) = (0.0f64, 0.0f64);
        for t in 0..spec.trials {
            // The input depends on (d, distribution, trial) only, so every
            // (k, γ) cell sees the same vectors.
            let id = ((d as u64) << 24) | (dist.id() << 20) | t as u64;
            let z = gen_input(dist, d, &mut rng(spec.seed, id, stream::KERNEL_INPUT));
            let (mu_err, th_err) = kernel_errors(&z, k, gamma)?;
            mu_max = mu_max.max(mu_err);
            th_max = th_max.max(th_err);
        }
        Ok(AccuracyRow { d, k, gamma, dist, trials: spec.trials, max_mu_rel_err: mu_max, max_theta_err: th_max })
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub d: usize,
    pub k: usize,
    pub trials: usize,
    pub mean_seconds: f64,
}

/// γ used for timing; the kernel's cost does not depend on it.
pub const TIMING_GAMMA: f64 = 1.0;

/// Mean wall time of one kernel call per `(d, k)` pair with `k ≤ d`,
/// on `U(0,1)` inputs. Always sequential, so calls do not compete.
pub fn run_kernel_timing(dims: &[usize], ks: &[usize], trials: usize, seed: u64) -> Result<Vec<TimingRow>> {
    if trials == 0 || dims.is_empty() || ks.is_empty() {
        return Err(invalid("timing needs at least one trial, dimension and k"));
    }
    let mut rows = Vec::new();
    for &d in dims {
        for &k in ks.iter().filter(|&&k| k <= d) {
            let mut total = 0.0;
            for t in 0..trials {
                let z = gen_input(InputDist::Uniform, d, &mut rng(seed, ((d as u64) << 24) | t as u64, stream::KERNEL_INPUT));
                let start = Instant::now();
                let r = mu_theta_full(&z, k, TIMING_GAMMA)?;
                total += start.elapsed().as_secs_f64();
                std::hint::black_box(r);
            }
            rows.push(TimingRow { d, k, trials, mean_seconds: total / trials as f64 });
        }
    }
    Ok(rows)
}
