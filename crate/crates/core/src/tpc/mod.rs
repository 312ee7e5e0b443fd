//! Uplink transmit power control.
//!
//! Three policies are provided: everyone at full power ([`max_power`]),
//! max-min SE ([`max_min_se`]) and max-min EE under an SE floor
//! ([`max_min_ee`]). The max-min problems are solved for fixed combiners by
//! bisection on a common SINR target, where each probe is a standard
//! interference-function fixed point ([`feasible_powers`]). MMSE combiners
//! depend on the powers, so for them weights and powers are refreshed in
//! alternation.

mod feasibility;
mod maxmin;
mod oracle;

pub use feasibility::{feasible_powers, solve_fixed_point, FixedPoint};
pub use maxmin::{max_min_ee, max_min_se, min_max_power, MinMaxPower};
pub use oracle::{brute_force_oracle, random_instance, OracleInstance, OracleObjective, OracleOutcome, ORACLE_MAX_UES};

use serde::{Deserialize, Serialize};

use crate::combining::{mmse_directions, CombinerKind};
use crate::metrics::{link_metrics, EffectiveGains, LinkMetrics, SystemConfig};
use crate::{CMatrix, Error, RMatrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TpcOptions {
    /// Relative tolerance on the SINR target, absolute on the power cap.
    pub bisection_tol: f64,
    /// Relative per-UE step below which the fixed point counts as converged.
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
    /// Weight/power rounds for MMSE combining.
    pub alternations: usize,
    /// Early exit of the alternation once powers move less than this.
    pub alternation_tol: f64,
    pub hill_step_init: f64,
    pub hill_step_min: f64,
    pub max_hill_evaluations: usize,
    /// Minimum SE every UE must reach under max-min EE, bits/s/Hz.
    pub target_se: f64,
}

impl Default for TpcOptions {
    fn default() -> Self {
        Self {
            bisection_tol: 1e-9,
            fixed_point_tol: 1e-10,
            max_fixed_point_iters: 100_000,
            alternations: 5,
            alternation_tol: 1e-4,
            hill_step_init: 0.1,
            hill_step_min: 1e-4,
            max_hill_evaluations: 500,
            target_se: 1.0,
        }
    }
}

impl TpcOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.bisection_tol,
            self.fixed_point_tol,
            self.alternation_tol,
            self.hill_step_init,
            self.hill_step_min,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument("tolerances and step sizes must be positive".into()));
        }
        if self.max_fixed_point_iters == 0 || self.alternations == 0 || self.max_hill_evaluations == 0 {
            return Err(Error::InvalidArgument("iteration limits must be positive".into()));
        }
        if !(self.target_se >= 0.0 && self.target_se.is_finite()) {
            return Err(Error::InvalidArgument(format!("target SE {} must be finite and >= 0", self.target_se)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TpcStatus {
    Optimal,
    Infeasible,
    MaxIters,
}

impl TpcStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TpcStatus::Optimal => "optimal",
            TpcStatus::Infeasible => "infeasible",
            TpcStatus::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TpcDiagnostics {
    pub bisection_steps: usize,
    pub fixed_point_iterations: usize,
    /// Fixed-point probes that hit the iteration limit (treated as infeasible).
    pub max_iter_hits: usize,
    pub alternation_rounds: usize,
    pub hill_evaluations: usize,
    /// Common SINR target reached by the last bisection.
    pub sinr_target: f64,
    pub nu: Option<f64>,
    pub nu_star: Option<f64>,
    pub min_se: f64,
    pub min_ee: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TpcResult {
    pub q: Vec<f64>,
    pub metrics: LinkMetrics,
    pub status: TpcStatus,
    pub diagnostics: TpcDiagnostics,
}

/// Estimated channel state and combiner choice shared by all solvers.
#[derive(Debug, Clone, Copy)]
pub struct TpcProblem<'a> {
    pub h_hat: &'a CMatrix,
    pub err_var: &'a RMatrix,
    pub rho: f64,
    pub combiner: CombinerKind,
}

impl<'a> TpcProblem<'a> {
    pub fn new(h_hat: &'a CMatrix, err_var: &'a RMatrix, rho: f64, combiner: CombinerKind) -> Result<Self> {
        if h_hat.shape() != err_var.shape() {
            return Err(Error::ShapeMismatch {
                expected: h_hat.shape(),
                actual: err_var.shape(),
            });
        }
        if h_hat.ncols() == 0 {
            return Err(Error::InvalidArgument("no UEs".into()));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("transmit SNR {rho} must be positive")));
        }
        Ok(Self {
            h_hat,
            err_var,
            rho,
            combiner,
        })
    }

    pub fn num_ues(&self) -> usize {
        self.h_hat.ncols()
    }

    /// Effective gains of the combiner evaluated at powers `q`. MMSE weights
    /// are used without their `rho q_k` prefactor, which SINR ignores.
    pub fn gains(&self, q: &[f64]) -> Result<EffectiveGains> {
        let w = match self.combiner {
            CombinerKind::Mr => self.h_hat.clone(),
            CombinerKind::Mmse => mmse_directions(self.h_hat, self.err_var, q, self.rho)?,
        };
        EffectiveGains::new(&w, self.h_hat, self.err_var)
    }

    /// Metrics at `q` with the combiner recomputed for `q`.
    pub fn metrics(&self, q: &[f64], config: &SystemConfig) -> Result<LinkMetrics> {
        Ok(link_metrics(&self.gains(q)?, q, config, self.rho))
    }
}

/// Every UE at full power.
pub fn max_power(num_ues: usize) -> Vec<f64> {
    vec![1.0; num_ues]
}

/// Full-power allocation wrapped as a [`TpcResult`].
pub fn max_power_result(problem: &TpcProblem<'_>, config: &SystemConfig) -> Result<TpcResult> {
    let q = max_power(problem.num_ues());
    let metrics = problem.metrics(&q, config)?;
    let diagnostics = TpcDiagnostics {
        min_se: metrics.min_se(),
        min_ee: metrics.min_ee(),
        ..TpcDiagnostics::default()
    };
    Ok(TpcResult {
        q,
        metrics,
        status: TpcStatus::Optimal,
        diagnostics,
    })
}
