//! Solver-versus-grid comparison on small random instances.

use std::fmt::Write as _;

use cfmimo_core::metrics::SystemConfig;
use cfmimo_core::tpc::{
    brute_force_oracle, max_min_ee, max_min_se, random_instance, OracleObjective, TpcOptions, ORACLE_MAX_UES,
};
use cfmimo_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::OracleConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub instance: usize,
    pub solver_min_se: f64,
    pub grid_min_se: f64,
    /// `None` when the SE floor is unreachable.
    pub solver_min_ee: Option<f64>,
    pub grid_min_ee: Option<f64>,
}

impl OracleRow {
    pub fn se_gap(&self) -> f64 {
        self.solver_min_se - self.grid_min_se
    }

    /// Relative EE gap; `Some(0)` when both sides agree the floor is
    /// unreachable and `None` when they disagree.
    pub fn ee_gap(&self) -> Option<f64> {
        match (self.solver_min_ee, self.grid_min_ee) {
            (Some(s), Some(g)) => Some((s - g) / g),
            (None, None) => Some(0.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub se_tolerance: f64,
    pub ee_tolerance: f64,
}

impl OracleReport {
    pub fn se_pass(&self, row: &OracleRow) -> bool {
        row.se_gap().abs() <= self.se_tolerance
    }

    pub fn ee_pass(&self, row: &OracleRow) -> bool {
        row.ee_gap().is_some_and(|g| g.abs() <= self.ee_tolerance)
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| self.se_pass(r) && self.ee_pass(r))
    }

    pub fn max_se_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.se_gap().abs()).fold(0.0, f64::max)
    }

    pub fn max_ee_gap(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.ee_gap().map_or(f64::INFINITY, f64::abs))
            .fold(0.0, f64::max)
    }

    pub fn render(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "infeasible".to_string(), |v| format!("{v:.6e}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>4} {:>12} {:>12} {:>10} {:>5} {:>13} {:>13} {:>10} {:>5}",
            "inst", "solver_se", "grid_se", "se_gap", "ok", "solver_ee", "grid_ee", "ee_gap", "ok"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>4} {:>12.6} {:>12.6} {:>10.2e} {:>5} {:>13} {:>13} {:>10} {:>5}",
                r.instance,
                r.solver_min_se,
                r.grid_min_se,
                r.se_gap(),
                if self.se_pass(r) { "pass" } else { "FAIL" },
                fmt(r.solver_min_ee),
                fmt(r.grid_min_ee),
                r.ee_gap().map_or_else(|| "mismatch".to_string(), |g| format!("{g:.2e}")),
                if self.ee_pass(r) { "pass" } else { "FAIL" },
            );
        }
        let _ = writeln!(
            out,
            "max |se gap| {:.3e} (tolerance {:e}), max |ee gap| {:.3e} (tolerance {:e}): {}",
            self.max_se_gap(),
            self.se_tolerance,
            self.max_ee_gap(),
            self.ee_tolerance,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        out
    }
}

fn infeasible_as_none<T>(r: cfmimo_core::Result<T>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Infeasible(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Compare max-min SE and max-min EE against the exhaustive grid on
/// `cfg.instances` seeded random instances.
pub fn run_oracle(cfg: &OracleConfig, system: &SystemConfig, tpc: &TpcOptions) -> Result<OracleReport, CliError> {
    if cfg.num_ues > ORACLE_MAX_UES {
        return Err(Error::TooManyUes {
            max: ORACLE_MAX_UES,
            got: cfg.num_ues,
        }
        .into());
    }
    let opts = TpcOptions {
        target_se: cfg.target_se,
        ..tpc.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.instances);
    for instance in 0..cfg.instances {
        let inst = random_instance(cfg.num_antennas, cfg.num_ues, cfg.snr_db, cfg.gain_spread_db, &mut rng)?;
        let problem = inst.problem(cfg.combiner)?;
        let se = max_min_se(&problem, system, &opts)?;
        let grid_se = brute_force_oracle(&problem, system, OracleObjective::MinSe, 0.0, cfg.grid_points)?;
        let ee = infeasible_as_none(max_min_ee(&problem, system, &opts))?;
        let grid_ee = infeasible_as_none(brute_force_oracle(
            &problem,
            system,
            OracleObjective::MinEe,
            cfg.target_se,
            cfg.grid_points,
        ))?;
        rows.push(OracleRow {
            instance,
            solver_min_se: se.metrics.min_se(),
            grid_min_se: grid_se.min_se,
            solver_min_ee: ee.map(|r| r.metrics.min_ee()),
            grid_min_ee: grid_ee.map(|o| o.min_ee),
        });
    }
    Ok(OracleReport {
        rows,
        se_tolerance: cfg.se_tolerance,
        ee_tolerance: cfg.ee_tolerance,
    })
}
