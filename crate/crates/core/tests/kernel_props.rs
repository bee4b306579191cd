//! Randomized properties of the soft-min kernel and the GSM penalty.

use proptest::prelude::*;
use sparse_gsm::kernel::{brute_force_mu_theta, mu_theta_full, tau_and_weights};
use sparse_gsm::objective::{penalty, trimmed_lasso};

fn ln_choose(d: usize, k: usize) -> f64 {
    (1..=k).map(|i| ((d - k + i) as f64 / i as f64).ln()).sum()
}

/// `(z, k)` with `2 ≤ d ≤ 30` and `1 ≤ k < d`.
fn vec_and_k(lo: f64, hi: f64) -> impl Strategy<Value = (Vec<f64>, usize)> {
    (2usize..=30).prop_flat_map(move |d| (prop::collection::vec(lo..hi, d), 1..d))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn theta_sums_to_k((z, k) in vec_and_k(-3.0, 3.0), gamma in -50.0f64..50.0) {
        let r = mu_theta_full(&z, k, gamma).unwrap();
        prop_assert!(r.theta.iter().all(|t| (0.0..=1.0).contains(t)));
        let s: f64 = r.theta.iter().sum();
        prop_assert!(close(s, k as f64, 1e-12 * z.len() as f64), "{s} vs {k}");
    }

    #[test]
    fn complement_identity((z, k) in vec_and_k(-3.0, 3.0), gamma in 0.0f64..50.0) {
        let d = z.len();
        let a = mu_theta_full(&z, k, gamma).unwrap();
        let b = mu_theta_full(&z, d - k, -gamma).unwrap();
        let sum: f64 = z.iter().sum();
        let scale = z.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!(close(a.mu + b.mu, sum, 1e-12 * scale));
        for (x, y) in a.theta.iter().zip(&b.theta) {
            prop_assert!(close(x + y, 1.0, 1e-12));
        }
    }

    #[test]
    fn sign_identity((z, k) in vec_and_k(-3.0, 3.0), gamma in 0.0f64..50.0) {
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let a = mu_theta_full(&z, k, gamma).unwrap();
        let b = mu_theta_full(&neg, k, -gamma).unwrap();
        let scale = z.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!(close(a.mu, -b.mu, 1e-12 * scale));
        for (x, y) in a.theta.iter().zip(&b.theta) {
            prop_assert!(close(*x, *y, 1e-12));
        }
    }

    #[test]
    fn permutation_invariance((z, k) in vec_and_k(0.0, 5.0), gamma in 0.0f64..20.0, shift in 0usize..30) {
        let d = z.len();
        let rot: Vec<f64> = (0..d).map(|i| z[(i + shift) % d]).collect();
        let a = mu_theta_full(&z, k, gamma).unwrap();
        let b = mu_theta_full(&rot, k, gamma).unwrap();
        prop_assert!(close(a.mu, b.mu, 1e-12 * a.mu.abs().max(1.0)));
        for i in 0..d {
            prop_assert!(close(b.theta[i], a.theta[(i + shift) % d], 1e-12));
        }
    }

    #[test]
    fn gradient_matches_finite_differences((z, k) in vec_and_k(-1.0, 1.0), gamma in 0.01f64..20.0) {
        let r = mu_theta_full(&z, k, gamma).unwrap();
        let scale = z.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-3);
        let h = 1e-6 * scale;
        for i in 0..z.len() {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += h;
            zm[i] -= h;
            let fd = (mu_theta_full(&zp, k, gamma).unwrap().mu - mu_theta_full(&zm, k, gamma).unwrap().mu) / (2.0 * h);
            let t = r.theta[i];
            prop_assert!((fd - t).abs() <= 1e-6 * t.abs().max(1e-2), "i={i}: fd {fd} vs theta {t}");
        }
    }

    #[test]
    fn mu_nondecreasing_in_gamma((z, k) in vec_and_k(0.0, 5.0)) {
        let grid = [0.0, 0.1, 1.0, 10.0, 100.0, f64::INFINITY];
        let mus: Vec<f64> = grid.iter().map(|&g| mu_theta_full(&z, k, g).unwrap().mu).collect();
        let slack = 1e-12 * z.iter().sum::<f64>().max(1.0);
        for w in mus.windows(2) {
            prop_assert!(w[1] >= w[0] - slack, "{mus:?}");
        }
    }

    #[test]
    fn penalty_sandwich((x, k) in vec_and_k(-4.0, 4.0), gamma in 0.01f64..100.0) {
        let d = x.len();
        let tau = trimmed_lasso(&x, k);
        let (t, w) = tau_and_weights(&x, k, gamma).unwrap();
        let slack = 1e-12 * x.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!(t >= tau - slack);
        prop_assert!(t <= tau + ln_choose(d, k) / gamma + slack);
        prop_assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(close(w.iter().sum::<f64>(), (d - k) as f64, 1e-12 * d as f64));
    }

    #[test]
    fn penalty_at_gamma_zero_is_scaled_l1((x, k) in vec_and_k(-4.0, 4.0)) {
        let d = x.len() as f64;
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        let (t, w) = tau_and_weights(&x, k, 0.0).unwrap();
        prop_assert!(close(t, (d - k as f64) / d * l1, 1e-12 * l1.max(1.0)));
        prop_assert!(w.iter().all(|v| close(*v, (d - k as f64) / d, 1e-15)));
        prop_assert!(close(penalty(&x, k, 0.0).unwrap(), t, 1e-12 * l1.max(1.0)));
    }

    #[test]
    fn agrees_with_enumeration((z, k) in (2usize..=12).prop_flat_map(|d| (prop::collection::vec(-2.0f64..2.0, d), 0..=d)),
                               gamma in -30.0f64..30.0) {
        let r = mu_theta_full(&z, k, gamma).unwrap();
        let (mu, theta) = brute_force_mu_theta(&z, k, gamma).unwrap();
        prop_assert!(close(r.mu, mu, 1e-10 * mu.abs().max(1.0)));
        for (a, b) in r.theta.iter().zip(&theta) {
            prop_assert!(close(*a, *b, 1e-10));
        }
    }
}
