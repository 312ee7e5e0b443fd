use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TpcProblem;
use crate::channel::complex_normal;
use crate::metrics::{energy_efficiency, spectral_efficiency, SystemConfig};
use crate::{CMatrix, Error, RMatrix, Result};

/// Largest number of UEs the exhaustive search accepts.
pub const ORACLE_MAX_UES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleObjective {
    MinSe,
    MinEe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub q: Vec<f64>,
    /// Best objective value found on the grid.
    pub objective: f64,
    pub min_se: f64,
    pub min_ee: f64,
}

/// Small perfect-CSI problem for checking solvers against the grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleInstance {
    pub h: CMatrix,
    pub err_var: RMatrix,
    pub rho: f64,
}

impl OracleInstance {
    pub fn problem(&self, combiner: crate::combining::CombinerKind) -> Result<TpcProblem<'_>> {
        TpcProblem::new(&self.h, &self.err_var, self.rho, combiner)
    }
}

/// I.i.d. Rayleigh channel whose UE gains are spread uniformly in dB over
/// `[-gain_spread_db, gain_spread_db]`; `snr_db` is the per-antenna SNR of a
/// unit-gain UE at full power.
pub fn random_instance<R: Rng + ?Sized>(
    num_antennas: usize,
    num_ues: usize,
    snr_db: f64,
    gain_spread_db: f64,
    rng: &mut R,
) -> Result<OracleInstance> {
    if num_antennas == 0 || num_ues == 0 {
        return Err(Error::InvalidArgument("instance needs antennas and UEs".into()));
    }
    if !(snr_db.is_finite() && gain_spread_db.is_finite() && gain_spread_db >= 0.0) {
        return Err(Error::InvalidArgument(format!("snr {snr_db} dB, spread {gain_spread_db} dB")));
    }
    let amp: Vec<f64> = (0..num_ues)
        .map(|_| {
            let db = if gain_spread_db > 0.0 { rng.random_range(-gain_spread_db..=gain_spread_db) } else { 0.0 };
            10f64.powf(db / 20.0)
        })
        .collect();
    let mut h = CMatrix::zeros(num_antennas, num_ues);
    for k in 0..num_ues {
        for m in 0..num_antennas {
            h[(m, k)] = complex_normal(rng) * amp[k];
        }
    }
    Ok(OracleInstance {
        h,
        err_var: RMatrix::zeros(num_antennas, num_ues),
        rho: 10f64.powf(snr_db / 10.0),
    })
}

/// Exhaustive search over the uniform grid `{0, 1/(G-1), ..., 1}^K` with the
/// combiners fixed at full power. For [`OracleObjective::MinEe`] only grid
/// points where every UE reaches `target_se` qualify. The first maximizer in
/// lexicographic grid order wins ties.
pub fn brute_force_oracle(
    problem: &TpcProblem<'_>,
    config: &SystemConfig,
    objective: OracleObjective,
    target_se: f64,
    grid_points: usize,
) -> Result<OracleOutcome> {
    let k = problem.num_ues();
    if k > ORACLE_MAX_UES {
        return Err(Error::TooManyUes {
            max: ORACLE_MAX_UES,
            got: k,
        });
    }
    if grid_points < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points per axis".into()));
    }
    let gains = problem.gains(&vec![1.0; k])?;
    let step = 1.0 / (grid_points - 1) as f64;

    let mut index = vec![0usize; k];
    let mut q = vec![0.0; k];
    let mut best: Option<OracleOutcome> = None;
    loop {
        for (qi, ii) in q.iter_mut().zip(&index) {
            *qi = *ii as f64 * step;
        }
        let se: Vec<f64> = gains.sinr_all(&q, problem.rho).into_iter().map(spectral_efficiency).collect();
        let min_se = se.iter().copied().fold(f64::INFINITY, f64::min);
        let admissible = objective == OracleObjective::MinSe || min_se >= target_se;
        if admissible {
            let min_ee = energy_efficiency(&se, &q, config).into_iter().fold(f64::INFINITY, f64::min);
            let value = match objective {
                OracleObjective::MinSe => min_se,
                OracleObjective::MinEe => min_ee,
            };
            if best.as_ref().is_none_or(|b| value > b.objective) {
                best = Some(OracleOutcome {
                    q: q.clone(),
                    objective: value,
                    min_se,
                    min_ee,
                });
            }
        }

        // odometer over the grid, last UE fastest
        let mut pos = k;
        loop {
            if pos == 0 {
                return best.ok_or_else(|| Error::Infeasible(format!("no grid point reaches {target_se} bits/s/Hz")));
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < grid_points {
                break;
            }
            index[pos] = 0;
        }
    }
}
