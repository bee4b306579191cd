//! Experiment specifications, read from TOML.
//!
//! Every field has a desk-scale default, so a config file only needs the
//! keys it changes. `ExperimentSpec::default()` serialized with
//! [`ExperimentSpec::to_toml`] documents the full schema.

use serde::{Deserialize, Serialize};

use super::data::{MatrixKind, SignalKind};
use crate::baselines::{AdmmConfig, DcConfig, LpConfig};
use crate::error::{GsmError, Result};
use crate::optimizer::{HomotopyConfig, LambdaGrid};
use crate::par::Execution;

/// Parses any config struct; errors map to [`GsmError::Config`].
pub fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| GsmError::Config(e.to_string()))
}

pub fn render_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("config types serialize to TOML")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Trimmed lasso with squared residual, GSM homotopy.
    Gsm2,
    /// Trimmed lasso with plain residual norm, GSM homotopy.
    Gsm1,
    Irls,
    Irl1,
    Dc,
    Admm,
    LsOmp,
    Lasso,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gsm2 => "gsm2",
            Method::Gsm1 => "gsm1",
            Method::Irls => "irls",
            Method::Irl1 => "irl1",
            Method::Dc => "dc",
            Method::Admm => "admm",
            Method::LsOmp => "ls_omp",
            Method::Lasso => "lasso",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpSweep {
    pub p_values: Vec<f64>,
    /// `λ_i = lambda_start · lambda_ratio^(i−1)`, `i = 1..=lambda_count`.
    pub lambda_start: f64,
    pub lambda_ratio: f64,
    pub lambda_count: usize,
    pub solver: LpConfig,
}

impl Default for LpSweep {
    fn default() -> Self {
        Self {
            p_values: vec![1e-8, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            lambda_start: 1e-8,
            // Desk scale: 20 values spanning the same range as 90 steps of 1.5.
            lambda_ratio: 1.5f64.powf(89.0 / 19.0),
            lambda_count: 20,
            solver: LpConfig::default(),
        }
    }
}

impl LpSweep {
    /// Full-scale grid: 90 values with ratio 1.5.
    pub fn full_scale() -> Self {
        Self { lambda_ratio: 1.5, lambda_count: 90, ..Self::default() }
    }

    pub fn lambdas(&self) -> Vec<f64> {
        (0..self.lambda_count).map(|i| self.lambda_start * self.lambda_ratio.powi(i as i32)).collect()
    }
}

/// Trimmed-lasso baselines (DC, ADMM) swept over the power-2 GSM λ grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrimmedSweep {
    pub eta: f64,
    pub dc: DcConfig,
    pub admm: AdmmConfig,
}

impl Default for TrimmedSweep {
    fn default() -> Self {
        Self { eta: 1e-2, dc: DcConfig::default(), admm: AdmmConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub trials: usize,
    pub n: usize,
    pub d: usize,
    pub k: Vec<usize>,
    /// Noise level: `E‖e‖² = ν² E‖Ax‖²`.
    pub nu: f64,
    pub matrix: MatrixKind,
    pub normalize_columns: bool,
    pub signal: SignalKind,
    pub methods: Vec<Method>,
    pub execution: Execution,
    pub lambda_grid: LambdaGrid,
    pub gsm: HomotopyConfig,
    pub lp: LpSweep,
    pub trimmed: TrimmedSweep,
    pub lasso_grid_len: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 50,
            n: 100,
            d: 800,
            k: vec![16, 24, 30],
            nu: 1e-6,
            matrix: MatrixKind::Uncorrelated,
            normalize_columns: true,
            signal: SignalKind::Gaussian,
            methods: vec![Method::Gsm2, Method::LsOmp],
            execution: Execution::Parallel,
            lambda_grid: LambdaGrid::Standard { len: 20, early_stop: 7 },
            gsm: HomotopyConfig::default(),
            lp: LpSweep::default(),
            trimmed: TrimmedSweep::default(),
            lasso_grid_len: crate::baselines::lasso::LASSO_GRID_LEN,
        }
    }
}

impl ExperimentSpec {
    /// Trial count and grids of the original protocol.
    pub fn full_scale(self) -> Self {
        Self { trials: 200, lambda_grid: LambdaGrid::default(), lp: LpSweep::full_scale(), ..self }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = parse_toml(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        render_toml(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GsmError::Config(m.into()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.trials >= 1 << 24 {
            return bad("trials must be below 2^24");
        }
        if self.n == 0 || self.d == 0 {
            return bad("n and d must be positive");
        }
        if self.k.is_empty() || self.k.iter().any(|&k| k == 0 || k >= self.d || k > self.n) {
            return bad("every k must satisfy 1 <= k <= n and k < d");
        }
        if !(0.0..=1.0).contains(&self.nu) {
            return bad("nu must lie in [0, 1]");
        }
        if let MatrixKind::Correlated { rho } = self.matrix {
            if !(0.0..1.0).contains(&rho) {
                return bad("rho must lie in [0, 1)");
            }
        }
        if self.methods.is_empty() {
            return bad("methods must be nonempty");
        }
        if self.lp.p_values.is_empty() || self.lp.p_values.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return bad("p_values must be nonempty and in (0, 1]");
        }
        if self.lp.lambda_count == 0 || !(self.lp.lambda_start > 0.0 && self.lp.lambda_ratio > 0.0) {
            return bad("lp lambda grid must be nonempty and positive");
        }
        if !(self.trimmed.eta >= 0.0) || self.lasso_grid_len == 0 {
            return bad("eta must be nonnegative and the lasso grid nonempty");
        }
        self.gsm.validate()?;
        self.lp.solver.validate()
    }
}
