//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line straight to stdout (bypassing the harness capture) and then asserts.
//! A global lock runs them one at a time so the timing check is not
//! disturbed by the others.

use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use sparse_gsm::baselines::{admm_trimmed_lasso, dc_trimmed_lasso, trimmed_objective, AdmmConfig, DcConfig};
use sparse_gsm::bench::config::{ExperimentSpec, LpSweep, Method};
use sparse_gsm::bench::data::{gen_matrix, gen_noise, gen_signal, noise_sigma, rng, stream, MatrixKind, SignalKind};
use sparse_gsm::bench::kernel_suite::{run_kernel_accuracy, run_kernel_timing, AccuracySpec};
use sparse_gsm::bench::recovery::{run_recovery, ResultRow};
use sparse_gsm::kernel::{brute_force_mu_theta, mu_theta_full, tau_and_weights};
use sparse_gsm::linalg::{dist1, norm2, ProblemInstance};
use sparse_gsm::objective::{
    alpha2k_lower_bound, objective_value, proj_k, recovery_bound_power1, recovery_bound_power2, recovery_bound_sparse,
    thresholds, trimmed_lasso, Power,
};
use sparse_gsm::optimizer::{homotopy_solve, homotopy_solve_with_reference, HomotopyConfig, LambdaGrid, Solution};
use sparse_gsm::par::Execution;

static LOCK: Mutex<()> = Mutex::new(());

/// Relative slack for monotone objective traces.
const TRACE_SLACK: f64 = 1e-10;
/// Relative slack when comparing objectives of different methods.
const TIE_SLACK: f64 = 1e-9;

fn report(n: u32, pass: bool, detail: &str) {
    let line = format!("criterion {n}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn serial() -> std::sync::MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

/// `y = A x0 + e` with unit-norm Gaussian columns and a Gaussian `k`-sparse signal.
fn instance(seed: u64, t: u64, n: usize, d: usize, k: usize, noise: impl Fn(&[f64], u64) -> Vec<f64>) -> (ProblemInstance, Vec<f64>, Vec<f64>) {
    let a = gen_matrix(MatrixKind::Uncorrelated, n, d, true, &mut rng(seed, t, stream::MATRIX)).unwrap();
    let x0 = gen_signal(SignalKind::Gaussian, d, k, &mut rng(seed, t, stream::SIGNAL)).unwrap();
    let ax: Vec<f64> = (&a * DVector::from_column_slice(&x0)).iter().cloned().collect();
    let e = noise(&ax, t);
    let y = ax.iter().zip(&e).map(|(u, v)| u + v).collect();
    (ProblemInstance::new(a, y, k).unwrap(), x0, e)
}

fn trace_is_monotone(s: &Solution) -> bool {
    s.trace.windows(2).all(|w| w[1].objective <= w[0].objective + TRACE_SLACK * w[0].objective.abs())
}

#[test]
fn criterion_01_kernel_matches_enumeration() {
    let _g = serial();
    let start = Instant::now();
    let mut r = rng(101, 0, stream::KERNEL_INPUT);
    let (mut worst_mu, mut worst_theta) = (0.0f64, 0.0f64);
    for _ in 0..500 {
        let d = r.random_range(1..=18);
        let k = r.random_range(0..=d);
        let scale = 10f64.powf(r.random_range(-2.0..2.0));
        let z: Vec<f64> = (0..d).map(|_| scale * r.random_range(-1.0..1.0)).collect();
        let gamma = match r.random_range(0..10) {
            0 => 0.0,
            1 => f64::INFINITY,
            2 => f64::NEG_INFINITY,
            _ => (if r.random::<bool>() { 1.0 } else { -1.0 }) * 10f64.powf(r.random_range(-4.0..4.0)),
        };
        let fast = mu_theta_full(&z, k, gamma).unwrap();
        let (mu, theta) = brute_force_mu_theta(&z, k, gamma).unwrap();
        worst_mu = worst_mu.max((fast.mu - mu).abs() / mu.abs().max(1.0));
        for (a, b) in fast.theta.iter().zip(&theta) {
            worst_theta = worst_theta.max((a - b).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        worst_mu <= 1e-10 && worst_theta <= 1e-10 && secs < 60.0,
        &format!("max mu err {worst_mu:.1e}, max theta err {worst_theta:.1e}, {secs:.1} s"),
    );
}

#[test]
fn criterion_02_kernel_accuracy_at_scale() {
    let _g = serial();
    let start = Instant::now();
    let rows = run_kernel_accuracy(&AccuracySpec { seed: 102, ..Default::default() }, Execution::Parallel).unwrap();
    let mu = rows.iter().map(|r| r.max_mu_rel_err).fold(0.0, f64::max);
    let th = rows.iter().map(|r| r.max_theta_err).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    report(
        2,
        rows.len() == 3 * 18 * 2 && mu <= 1e-12 && th <= 1e-11 && secs < 600.0,
        &format!("{} cells, max mu rel err {mu:.1e}, max theta err/k {th:.1e}, {secs:.0} s", rows.len()),
    );
}

#[test]
fn criterion_03_kernel_scaling() {
    let _g = serial();
    let within = |ratio: f64, linear: f64| ratio >= linear / 3.0 && ratio <= linear * 3.0;
    // warm-up, then the measurements
    run_kernel_timing(&[10_000], &[100], 2, 103).unwrap();
    let by_d = run_kernel_timing(&[1_000, 10_000, 100_000], &[100], 5, 103).unwrap();
    let by_k = run_kernel_timing(&[10_000], &[10, 100, 500], 5, 103).unwrap();
    let td: Vec<f64> = by_d.iter().map(|r| r.mean_seconds).collect();
    let tk: Vec<f64> = by_k.iter().map(|r| r.mean_seconds).collect();
    let rd = [td[1] / td[0], td[2] / td[1]];
    let rk = [tk[1] / tk[0], tk[2] / tk[1]];
    let pass = within(rd[0], 10.0) && within(rd[1], 10.0) && within(rk[0], 10.0) && within(rk[1], 5.0);
    report(
        3,
        pass,
        &format!(
            "d x10 ratios {:.1}, {:.1}; k ratios {:.1} (x10), {:.1} (x5); d=1e5,k=100 {:.3} s",
            rd[0], rd[1], rk[0], rk[1], td[2]
        ),
    );
}

#[test]
fn criterion_04_identities_and_gradient() {
    let _g = serial();
    let mut r = rng(104, 0, stream::KERNEL_INPUT);
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok && !failures.contains(&what.to_string()) {
            failures.push(what.to_string());
        }
    };
    for _ in 0..200 {
        let d = r.random_range(2..=40);
        let k = r.random_range(1..d);
        let z: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        let gamma = 10f64.powf(r.random_range(-2.0..1.3));
        let sum: f64 = z.iter().sum();
        let l1: f64 = z.iter().map(|v| v.abs()).sum::<f64>().max(1.0);

        // complement and sign identities
        let a = mu_theta_full(&z, k, gamma).unwrap();
        let b = mu_theta_full(&z, d - k, -gamma).unwrap();
        check((a.mu + b.mu - sum).abs() <= 1e-12 * l1, "complement mu");
        check(a.theta.iter().zip(&b.theta).all(|(x, y)| (x + y - 1.0).abs() <= 1e-12), "complement theta");
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let c = mu_theta_full(&neg, k, -gamma).unwrap();
        check((a.mu + c.mu).abs() <= 1e-12 * l1, "sign mu");

        // Σθ = k and Σw = d − k
        check((a.theta.iter().sum::<f64>() - k as f64).abs() <= 1e-12 * d as f64, "sum theta");
        let (tau, w) = tau_and_weights(&z, k, gamma).unwrap();
        check((w.iter().sum::<f64>() - (d - k) as f64).abs() <= 1e-12 * d as f64, "sum w");

        // central differences
        let h = 1e-6;
        for i in 0..d {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[i] += h;
            zm[i] -= h;
            let fd = (mu_theta_full(&zp, k, gamma).unwrap().mu - mu_theta_full(&zm, k, gamma).unwrap().mu) / (2.0 * h);
            check((fd - a.theta[i]).abs() <= 1e-6 * a.theta[i].abs().max(1e-2), "finite differences");
        }

        // monotone in γ
        let mus: Vec<f64> =
            [0.0, 0.1, 1.0, 10.0, 100.0, f64::INFINITY].iter().map(|&g| mu_theta_full(&z, k, g).unwrap().mu).collect();
        check(mus.windows(2).all(|m| m[1] >= m[0] - 1e-12 * l1), "monotone in gamma");

        // τ_k ≤ τ_{k,γ} ≤ τ_k + log C(d,k)/γ
        let ln_c: f64 = (1..=k).map(|i| ((d - k + i) as f64 / i as f64).ln()).sum();
        let t = trimmed_lasso(&z, k);
        check(tau >= t - 1e-12 * l1 && tau <= t + ln_c / gamma + 1e-12 * l1, "sandwich");
    }
    let detail = if failures.is_empty() { "200 instances per property".to_string() } else { failures.join(", ") };
    report(4, failures.is_empty(), &detail);
}

/// Criterion 5 instances: 40×120, k = 8, noise level ν = 0.05.
fn threshold_instance(t: u64) -> ProblemInstance {
    instance(105, t, 40, 120, 8, |ax, t| {
        let a = gen_matrix(MatrixKind::Uncorrelated, 40, 120, true, &mut rng(105, t, stream::MATRIX)).unwrap();
        let sigma = noise_sigma(&a, SignalKind::Gaussian, 8, 0.05, &mut rng(105, t, stream::MONTE_CARLO)).unwrap();
        gen_noise(ax.len(), sigma, &mut rng(105, t, stream::NOISE))
    })
    .0
}

fn threshold_runs() -> (Vec<Solution>, Vec<(Solution, f64)>) {
    let p2 = HomotopyConfig::default();
    let p1 = HomotopyConfig { power: Power::One, ..Default::default() };
    let mut a = Vec::new();
    let mut b = Vec::new();
    for t in 0..100 {
        let p = threshold_instance(t);
        let th = thresholds(&p);
        a.push(homotopy_solve(&p, 1.5 * th.lambda_bar, &p2).unwrap());
        assert!(th.lambda_a > 0.0, "Gaussian instances are full rank");
        let s = homotopy_solve(&p, 0.5 * th.lambda_a, &p1).unwrap();
        let rel = p.residual_norm(&s.x) / p.y_norm();
        b.push((s, rel));
    }
    (a, b)
}

/// Criterion 7 instances: 60×300, k = 25, `‖e‖ = 0.01‖Ax0‖`.
fn comparison_instance(t: u64) -> ProblemInstance {
    instance(107, t, 60, 300, 25, |ax, t| {
        let g = gen_noise(ax.len(), 1.0, &mut rng(107, t, stream::NOISE));
        let s = 0.01 * norm2(ax) / norm2(&g);
        g.iter().map(|v| v * s).collect()
    })
    .0
}

struct Comparison {
    gsm: f64,
    dc: f64,
    admm: f64,
    gsm_runs: Vec<Solution>,
}

/// Each method's best objective over initializations `0` and its own
/// solution at `λ_small = 1e−5·λ̄` (and over `η` for DC and ADMM). GSM
/// also runs with that solution as a reference point.
fn compare(p: &ProblemInstance) -> Comparison {
    let th = thresholds(p);
    let lambda = 0.005 * th.lambda_bar;
    let small = 1e-5 * th.lambda_bar;
    let cfg = HomotopyConfig::default();
    let plain = homotopy_solve(p, lambda, &cfg).unwrap();
    let reference = homotopy_solve(p, small, &cfg).unwrap();
    let with_ref = homotopy_solve_with_reference(p, lambda, &cfg, Some(&reference.x)).unwrap();
    let gsm = plain.objective.min(with_ref.objective);

    let zero = vec![0.0; p.d()];
    let (dcc, adc) = (DcConfig::default(), AdmmConfig::default());
    let (mut dc, mut admm) = (f64::INFINITY, f64::INFINITY);
    for eta in [1e-2, 1e-6] {
        let dref = dc_trimmed_lasso(p, small, eta, &zero, &dcc).unwrap().x;
        for x0 in [&zero, &dref] {
            dc = dc.min(dc_trimmed_lasso(p, lambda, eta, x0, &dcc).unwrap().objective);
        }
        let aref = admm_trimmed_lasso(p, small, eta, &zero, &adc).unwrap().x;
        for x0 in [&zero, &aref] {
            admm = admm.min(admm_trimmed_lasso(p, lambda, eta, x0, &adc).unwrap().objective);
        }
    }
    // Solutions report F_λ itself; recheck against the shared definition.
    assert!((trimmed_objective(p, &plain.x, lambda) - plain.objective).abs() <= 1e-9 * plain.objective);
    Comparison { gsm, dc, admm, gsm_runs: vec![plain, reference, with_ref] }
}

#[test]
fn criterion_05_06_thresholds_and_monotone_traces() {
    let _g = serial();
    let start = Instant::now();
    let (a, b) = threshold_runs();
    let sparse = a.iter().filter(|s| trimmed_lasso(&s.x, 8) <= 8.0 * 1e-6).count();
    let fits = b.iter().filter(|(_, rel)| *rel <= 1e-5).count();
    let worst = b.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let pass5 = sparse >= 99 && fits >= 99;
    let mono5 = a.iter().chain(b.iter().map(|(s, _)| s)).filter(|s| trace_is_monotone(s)).count();

    let mut mono7 = 0;
    let mut total7 = 0;
    for t in 0..5 {
        let c = compare(&comparison_instance(1000 + t));
        total7 += c.gsm_runs.len();
        mono7 += c.gsm_runs.iter().filter(|s| trace_is_monotone(s)).count();
    }
    let detail5 = format!("(a) {sparse}/100 k-sparse, (b) {fits}/100 fit y (worst rel residual {worst:.1e}), {secs:.0} s");
    let detail6 = format!("{mono5}/200 threshold runs and {mono7}/{total7} comparison runs monotone; the comparison runs of criterion 7 are checked there too");
    let pass6 = mono5 == 200 && mono7 == total7;
    let mut out = std::io::stdout().lock();
    out.write_all(format!("criterion 5: {} ({detail5})\n", if pass5 { "PASS" } else { "FAIL" }).as_bytes()).unwrap();
    drop(out);
    report(6, pass6, &detail6);
    assert!(pass5, "criterion 5 failed: {detail5}");
}

#[test]
fn criterion_07_objective_comparison() {
    let _g = serial();
    let start = Instant::now();
    let (mut vs_dc, mut vs_admm, mut monotone) = (0, 0, true);
    let mut ratio_dc = Vec::new();
    for t in 0..50 {
        let p = comparison_instance(t);
        let c = compare(&p);
        vs_dc += (c.gsm <= c.dc * (1.0 + TIE_SLACK)) as usize;
        vs_admm += (c.gsm <= c.admm * (1.0 + TIE_SLACK)) as usize;
        ratio_dc.push(c.gsm / c.dc);
        monotone &= c.gsm_runs.iter().all(trace_is_monotone);
    }
    ratio_dc.sort_by(f64::total_cmp);
    let secs = start.elapsed().as_secs_f64();
    report(
        7,
        vs_dc >= 45 && vs_admm >= 45 && monotone && secs < 7200.0,
        &format!(
            "GSM <= DC on {vs_dc}/50, GSM <= ADMM on {vs_admm}/50, median GSM/DC {:.3}, traces monotone: {monotone}, {secs:.0} s",
            ratio_dc[25]
        ),
    );
}

#[test]
fn criterion_08_recovery_desk_scale() {
    let _g = serial();
    let start = Instant::now();
    let spec = ExperimentSpec { seed: 108, ..Default::default() };
    let report_ = run_recovery(&spec).unwrap();
    let rate = |m, k| report_.summary_for(m, k).unwrap().rec_success_rate;
    let g16 = rate(Method::Gsm2, 16);
    let (g24, o24) = (rate(Method::Gsm2, 24), rate(Method::LsOmp, 24));
    let (g30, o30) = (rate(Method::Gsm2, 30), rate(Method::LsOmp, 30));
    let secs = start.elapsed().as_secs_f64();
    report(
        8,
        g16 >= 0.9 && g24 >= o24 && g30 >= o30,
        &format!("GSM k=16 {g16:.2}; k=24 GSM {g24:.2} vs LS-OMP {o24:.2}; k=30 GSM {g30:.2} vs LS-OMP {o30:.2}; {secs:.0} s"),
    );
}

#[test]
fn criterion_09_recovery_bounds() {
    let _g = serial();
    let (n, d, k) = (12, 16, 2);
    let (mut checked, mut violations) = (0, Vec::new());
    for t in 0..20 {
        let (p, x0, e) = instance(109, t, n, d, k, |ax, t| gen_noise(ax.len(), 0.02, &mut rng(109, t, stream::NOISE)));
        let alpha = alpha2k_lower_bound(&p).unwrap();
        let th = thresholds(&p);
        let e_norm = norm2(&e);
        let tau0 = trimmed_lasso(&x0, k);
        let px0 = proj_k(&x0, k);
        for (power, lambda) in [(Power::Two, 0.05 * th.lambda_bar), (Power::Two, 0.5 * th.lambda_bar), (Power::One, 0.5 * th.lambda_b)] {
            let cfg = HomotopyConfig { power, ..Default::default() };
            let s = homotopy_solve(&p, lambda, &cfg).unwrap();
            let f = |x: &[f64]| objective_value(&p, x, lambda, f64::INFINITY, power).unwrap();
            let f0 = f(&px0);
            if f(&s.x) <= f0 {
                checked += 1;
                let err = dist1(&proj_k(&s.x, k), &x0);
                let bound = match power {
                    Power::Two => recovery_bound_power2(alpha, e_norm, th.lambda_b, lambda, tau0),
                    Power::One => recovery_bound_power1(alpha, e_norm, th.lambda_b, lambda, tau0),
                };
                if err > bound {
                    violations.push(format!("t{t} {power:?} general {err:.3e} > {bound:.3e}"));
                }
            }
            // The refit is exactly k-sparse; the tighter bound applies when it also succeeds.
            if f(&s.x_sparse) <= f0 {
                checked += 1;
                let err = dist1(&s.x_sparse, &x0);
                let bound = recovery_bound_sparse(alpha, e_norm, th.lambda_b, tau0);
                if err > bound {
                    violations.push(format!("t{t} {power:?} sparse {err:.3e} > {bound:.3e}"));
                }
            }
        }
    }
    let detail = format!("{checked} successful solves checked, {} violations {}", violations.len(), violations.join("; "));
    report(9, checked > 0 && violations.is_empty(), detail.trim_end());
}

/// Rows as CSV text without the timing column.
fn metric_csv(rows: &[ResultRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(ResultRow { wall_time: 0.0, ..r.clone() }).unwrap();
    }
    w.into_inner().unwrap()
}

#[test]
fn criterion_10_determinism() {
    let _g = serial();
    let spec = ExperimentSpec {
        seed: 110,
        trials: 3,
        n: 30,
        d: 80,
        k: vec![4, 6],
        nu: 1e-3,
        matrix: MatrixKind::Correlated { rho: 0.8 },
        signal: SignalKind::EquispacedLinear,
        methods: vec![
            Method::Gsm2,
            Method::Gsm1,
            Method::Irls,
            Method::Irl1,
            Method::Dc,
            Method::Admm,
            Method::LsOmp,
            Method::Lasso,
        ],
        lambda_grid: LambdaGrid::Standard { len: 6, early_stop: 3 },
        lp: LpSweep { p_values: vec![0.5, 1e-8], lambda_count: 4, ..Default::default() },
        ..Default::default()
    };
    let first = metric_csv(&run_recovery(&spec).unwrap().rows);
    let again = metric_csv(&run_recovery(&spec).unwrap().rows);
    let seq = metric_csv(&run_recovery(&ExperimentSpec { execution: Execution::Sequential, ..spec.clone() }).unwrap().rows);
    report(
        10,
        first == again && first == seq,
        &format!("{} bytes of metric columns; rerun identical: {}; sequential identical: {}", first.len(), first == again, first == seq),
    );
}
