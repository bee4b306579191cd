//! Sparse recovery experiment: random instances, every requested method,
//! one result row per (instance, method) and a success-rate summary.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentSpec, Method};
use super::data::{gen_matrix, gen_noise, gen_signal, noise_sigma, rng, stream};
use super::io::write_rows;
use super::metrics::{evaluate, Metrics};
use crate::baselines::{
    admm_trimmed_lasso, dc_trimmed_lasso, irl1, irls, lasso_grid, lasso_sweep, ls_omp, min_l1_start,
};
use crate::baselines::lasso::LASSO_GRID_SPAN;
use crate::error::{GsmError, Result};
use crate::linalg::ProblemInstance;
use crate::objective::Power;
use crate::optimizer::{lambda_values, project_and_refit, solve_p0, HomotopyConfig};
use crate::par::Execution;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial: usize,
    pub method: Method,
    pub k: usize,
    /// Penalty level of the selected candidate; empty for LS-OMP.
    pub lambda: Option<f64>,
    pub norm_obj: f64,
    pub rec_err: f64,
    pub supp_prec: f64,
    pub obj_success: bool,
    pub rec_success: bool,
    /// Seconds; the only column that varies between identical runs.
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub k: usize,
    pub trials: usize,
    pub obj_success_rate: f64,
    pub rec_success_rate: f64,
    pub mean_norm_obj: f64,
    pub mean_rec_err: f64,
    pub mean_supp_prec: f64,
    pub mean_wall_time: f64,
}

#[derive(Clone, Debug)]
pub struct RecoveryReport {
    /// Sorted by `k`, then trial, then the order of `spec.methods`.
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

impl RecoveryReport {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_rows(&dir.join("rows.csv"), &self.rows)?;
        write_rows(&dir.join("summary.csv"), &self.summary)
    }

    pub fn summary_for(&self, method: Method, k: usize) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.method == method && s.k == k)
    }
}

/// A generated instance with its ground truth.
pub struct Instance {
    pub problem: ProblemInstance,
    pub x0: Vec<f64>,
}

/// Instance `trial` at sparsity `k`. Each `(k, trial)` pair owns the
/// sub-streams of trial id `(k << 24) | trial`.
pub fn make_instance(spec: &ExperimentSpec, k: usize, trial: usize) -> Result<Instance> {
    let id = ((k as u64) << 24) | trial as u64;
    let a = gen_matrix(spec.matrix, spec.n, spec.d, spec.normalize_columns, &mut rng(spec.seed, id, stream::MATRIX))?;
    let x0 = gen_signal(spec.signal, spec.d, k, &mut rng(spec.seed, id, stream::SIGNAL))?;
    let sigma = noise_sigma(&a, spec.signal, k, spec.nu, &mut rng(spec.seed, id, stream::MONTE_CARLO))?;
    let e = gen_noise(spec.n, sigma, &mut rng(spec.seed, id, stream::NOISE));
    let ax = &a * nalgebra::DVector::from_column_slice(&x0);
    let y: Vec<f64> = ax.iter().zip(&e).map(|(u, v)| u + v).collect();
    Ok(Instance { problem: ProblemInstance::new(a, y, k)?, x0 })
}

/// Best `k`-sparse refit over `(λ, candidate)` pairs: smallest residual,
/// earliest on ties.
fn select(p: &ProblemInstance, candidates: Vec<(f64, Vec<f64>)>) -> Option<(Vec<f64>, f64)> {
    candidates
        .into_iter()
        .map(|(l, x)| {
            let fit = project_and_refit(p, &x);
            (p.residual_norm(&fit), fit, l)
        })
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .map(|(_, x, l)| (x, l))
}

/// Runs one method; returns the `k`-sparse estimate and the λ it came from.
pub fn run_method(spec: &ExperimentSpec, p: &ProblemInstance, method: Method) -> Result<(Vec<f64>, Option<f64>)> {
    let zero = vec![0.0; p.d()];
    let inner = &spec.gsm.inner;
    let none = || GsmError::Numeric("method produced no candidate".into());
    match method {
        Method::Gsm2 | Method::Gsm1 => {
            let power = if method == Method::Gsm2 { Power::Two } else { Power::One };
            let cfg = HomotopyConfig { power, ..spec.gsm.clone() };
            let r = solve_p0(p, &cfg, &spec.lambda_grid, Execution::Sequential)?;
            Ok((r.best.x_sparse, Some(r.best.lambda)))
        }
        Method::LsOmp => Ok((ls_omp(p, p.k()), None)),
        Method::Dc | Method::Admm => {
            let (lambdas, _) = lambda_values(p, Power::Two, &spec.lambda_grid)?;
            let eta = spec.trimmed.eta;
            let mut cands = Vec::with_capacity(lambdas.len());
            for l in lambdas {
                let run = if method == Method::Dc {
                    dc_trimmed_lasso(p, l, eta, &zero, &spec.trimmed.dc)?
                } else {
                    admm_trimmed_lasso(p, l, eta, &zero, &spec.trimmed.admm)?
                };
                cands.push((l, run.x));
            }
            let (x, l) = select(p, cands).ok_or_else(none)?;
            Ok((x, Some(l)))
        }
        Method::Irls | Method::Irl1 => {
            let start = min_l1_start(p, inner)?;
            let mut cands = vec![(0.0, start.clone())];
            for &pexp in &spec.lp.p_values {
                for l in spec.lp.lambdas() {
                    let run = if method == Method::Irls {
                        irls(p, l, pexp, &start, &spec.lp.solver)?
                    } else {
                        irl1(p, l, pexp, &start, &spec.lp.solver)?
                    };
                    cands.push((l, run.x));
                }
            }
            let (x, l) = select(p, cands).ok_or_else(none)?;
            Ok((x, Some(l)))
        }
        Method::Lasso => {
            let lambdas = lasso_grid(p, spec.lasso_grid_len, LASSO_GRID_SPAN);
            let xs = lasso_sweep(p, &lambdas, inner)?;
            let (x, l) = select(p, lambdas.into_iter().zip(xs).collect()).ok_or_else(none)?;
            Ok((x, Some(l)))
        }
    }
}

fn row(trial: usize, method: Method, k: usize, lambda: Option<f64>, m: Metrics, wall_time: f64) -> ResultRow {
    ResultRow {
        trial,
        method,
        k,
        lambda,
        norm_obj: m.norm_obj,
        rec_err: m.rec_err,
        supp_prec: m.supp_prec,
        obj_success: m.obj_success,
        rec_success: m.rec_success,
        wall_time,
    }
}

fn run_instance(spec: &ExperimentSpec, k: usize, trial: usize) -> Result<Vec<ResultRow>> {
    let inst = make_instance(spec, k, trial)?;
    let p = &inst.problem;
    spec.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let (x, lambda) = run_method(spec, p, method)?;
            let elapsed = start.elapsed().as_secs_f64();
            Ok(row(trial, method, k, lambda, evaluate(p, &x, &inst.x0, spec.nu), elapsed))
        })
        .collect()
}

/// Success rates and means per `(method, k)`, in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Method, usize)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.method, r.k)) {
            keys.push((r.method, r.k));
        }
    }
    keys.into_iter()
        .map(|(method, k)| {
            let g: Vec<&ResultRow> = rows.iter().filter(|r| r.method == method && r.k == k).collect();
            let m = g.len() as f64;
            let mean = |f: &dyn Fn(&ResultRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / m;
            SummaryRow {
                method,
                k,
                trials: g.len(),
                obj_success_rate: mean(&|r| r.obj_success as u8 as f64),
                rec_success_rate: mean(&|r| r.rec_success as u8 as f64),
                mean_norm_obj: mean(&|r| r.norm_obj),
                mean_rec_err: mean(&|r| r.rec_err),
                mean_supp_prec: mean(&|r| r.supp_prec),
                mean_wall_time: mean(&|r| r.wall_time),
            }
        })
        .collect()
}

/// Runs every `(k, trial)` instance (in parallel when the spec asks for it)
/// and collects the rows in a fixed order.
pub fn run_recovery(spec: &ExperimentSpec) -> Result<RecoveryReport> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec.k.iter().flat_map(|&k| (0..spec.trials).map(move |t| (k, t))).collect();
    let per_job = spec.execution.map(jobs, |(k, t)| run_instance(spec, k, t));
    let mut rows = Vec::new();
    for r in per_job {
        rows.extend(r?);
    }
    let summary = summarize(&rows);
    Ok(RecoveryReport { rows, summary })
}
