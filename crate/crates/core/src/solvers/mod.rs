//! The dual accelerated block coordinate descent method and the two primal
//! ADMM baselines, sharing one discrete KKT context.

mod admm;
mod dabcd;
mod ihadmm;
mod kkt;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use admm::admm;
pub use dabcd::fe_dabcd;
pub use ihadmm::ihadmm;
pub use kkt::{KktContext, LambdaUpdate, MuUpdate, PSubproblem};

use crate::error::{Error, Result};
use crate::fem::FemSystem;
use crate::problems::ProblemSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dabcd,
    Ihadmm,
    Admm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Dabcd, Algorithm::Ihadmm, Algorithm::Admm];

    pub fn name(self) -> &'static str {
        match self {
            Self::Dabcd => "dabcd",
            Self::Ihadmm => "ihadmm",
            Self::Admm => "admm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dabcd" | "fe-dabcd" => Ok(Self::Dabcd),
            "ihadmm" => Ok(Self::Ihadmm),
            "admm" => Ok(Self::Admm),
            other => Err(Error::Unknown { kind: "algorithm", name: other.into() }),
        }
    }
}

/// Run parameters. Plain `f64` so one config serves every scalar type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Stop once the algorithm's residual drops below this.
    pub outer_tol: f64,
    pub max_iter: usize,
    /// Inexactness schedule `ε_k = min(eps_cap, k^-eps_power)`.
    pub eps_cap: f64,
    pub eps_power: i32,
    /// Lower bound on the relative GMRES tolerance.
    pub gmres_floor: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    /// Penalty of the ADMM baselines.
    pub admm_sigma: f64,
    /// Overrides the problem's regularization weight.
    pub alpha: Option<f64>,
    pub projection_tol: f64,
    /// Evaluate the dual (or primal) objective every iteration.
    pub record_objective: bool,
    /// Project the ihADMM state copy in the lumped-mass norm instead of the
    /// Euclidean one.
    pub ihadmm_weighted_projection: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            outer_tol: 1e-4,
            max_iter: 100,
            eps_cap: 1e-3,
            eps_power: 4,
            gmres_floor: 1e-12,
            gmres_restart: 50,
            gmres_max_iter: 500,
            admm_sigma: 0.1,
            alpha: None,
            projection_tol: crate::projections::DEFAULT_PROJECTION_TOL,
            record_objective: true,
            ihadmm_weighted_projection: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("outer_tol", self.outer_tol),
            ("eps_cap", self.eps_cap),
            ("gmres_floor", self.gmres_floor),
            ("admm_sigma", self.admm_sigma),
            ("projection_tol", self.projection_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0) {
                return Err(Error::InvalidArgument(format!("alpha must be positive, got {a}")));
            }
        }
        // Σ k ε_k < ∞ needs ε_k = o(k^-2).
        if self.eps_power <= 2 {
            return Err(Error::InvalidArgument(format!(
                "eps_power must exceed 2 for a summable schedule, got {}",
                self.eps_power
            )));
        }
        if self.max_iter == 0 || self.gmres_restart == 0 || self.gmres_max_iter == 0 {
            return Err(Error::InvalidArgument("iteration limits must be positive".into()));
        }
        Ok(())
    }

    /// Subproblem error bound at outer iteration `k >= 1`.
    pub fn eps_k(&self, k: usize) -> f64 {
        self.eps_cap.min((k as f64).powi(-self.eps_power))
    }

    /// Relative GMRES tolerance `max(ε_k / (1 + ‖rhs‖), floor)`.
    pub fn gmres_tol(&self, k: usize, rhs_norm: f64) -> f64 {
        (self.eps_k(k) / (1.0 + rhs_norm)).max(self.gmres_floor)
    }

    /// Applies a flat `key = value` text, one entry per line; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<V: FromStr>(key: &str, value: &str) -> Result<V> {
            value.parse().map_err(|_| Error::Parse(format!("bad value `{value}` for `{key}`")))
        }
        match key {
            "outer_tol" | "tol" => self.outer_tol = num(key, value)?,
            "max_iter" => self.max_iter = num(key, value)?,
            "eps_cap" => self.eps_cap = num(key, value)?,
            "eps_power" => self.eps_power = num(key, value)?,
            "gmres_floor" => self.gmres_floor = num(key, value)?,
            "gmres_restart" => self.gmres_restart = num(key, value)?,
            "gmres_max_iter" => self.gmres_max_iter = num(key, value)?,
            "admm_sigma" => self.admm_sigma = num(key, value)?,
            "alpha" => self.alpha = Some(num(key, value)?),
            "projection_tol" => self.projection_tol = num(key, value)?,
            "record_objective" => self.record_objective = num(key, value)?,
            "ihadmm_weighted_projection" => self.ihadmm_weighted_projection = num(key, value)?,
            _ => return Err(Error::Unknown { kind: "config key", name: key.into() }),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport<T> {
    pub algorithm: Algorithm,
    pub problem: String,
    pub level: usize,
    pub dofs: usize,
    pub alpha: f64,
    pub delta: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Last entry of `residual_history`.
    pub residual: f64,
    pub residual_history: Vec<f64>,
    /// Dual objective for the dual method, primal objective for the baselines.
    pub objective_history: Vec<f64>,
    pub inner_gmres_iters: Vec<usize>,
    pub newton_iters: Vec<usize>,
    /// Per-iteration `max(δ_p, δ_λ, δ_μ)` certificates of the dual method.
    pub subproblem_errors: Vec<f64>,
    pub eps_schedule: Vec<f64>,
    pub setup_time_seconds: f64,
    pub wall_time_seconds: f64,
    pub final_y: Vec<T>,
    pub final_u: Vec<T>,
    pub final_p: Vec<T>,
    pub final_lambda: Vec<T>,
    pub final_mu: Vec<T>,
    /// Feasible companions `z ∈ C`, `w ∈ S` of `final_y`, `final_u`: the splitting
    /// copies for the ADMM baselines, the primal points of the two prox steps
    /// for the dual method.
    #[serde(default)]
    pub final_z: Vec<T>,
    #[serde(default)]
    pub final_w: Vec<T>,
}

impl<T: Scalar> SolverReport<T> {
    pub(crate) fn new(algorithm: Algorithm, problem: &ProblemSpec<T>, sys: &FemSystem<T>, alpha: T) -> Self {
        Self {
            algorithm,
            problem: problem.name.clone(),
            level: sys.level,
            dofs: sys.num_dofs(),
            alpha: alpha.as_f64(),
            delta: problem.delta.as_f64(),
            lower: problem.box_set.lower.as_f64(),
            upper: problem.box_set.upper.as_f64(),
            iterations: 0,
            converged: false,
            residual: f64::INFINITY,
            residual_history: Vec::new(),
            objective_history: Vec::new(),
            inner_gmres_iters: Vec::new(),
            newton_iters: Vec::new(),
            subproblem_errors: Vec::new(),
            eps_schedule: Vec::new(),
            setup_time_seconds: 0.0,
            wall_time_seconds: 0.0,
            final_y: Vec::new(),
            final_u: Vec::new(),
            final_p: Vec::new(),
            final_lambda: Vec::new(),
            final_mu: Vec::new(),
            final_z: Vec::new(),
            final_w: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Resolves the regularization weight of a run.
pub(crate) fn effective_alpha<T: Scalar>(problem: &ProblemSpec<T>, config: &SolverConfig) -> T {
    config.alpha.map_or(problem.alpha, T::lit)
}

pub fn solve<T: Scalar>(
    algorithm: Algorithm,
    problem: &ProblemSpec<T>,
    sys: &FemSystem<T>,
    config: &SolverConfig,
) -> Result<SolverReport<T>> {
    match algorithm {
        Algorithm::Dabcd => fe_dabcd(problem, sys, config),
        Algorithm::Ihadmm => ihadmm(problem, sys, config),
        Algorithm::Admm => admm(problem, sys, config),
    }
}
