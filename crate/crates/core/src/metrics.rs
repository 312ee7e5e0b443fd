//! Per-UE SINR, spectral efficiency, power consumption and energy efficiency.

use serde::{Deserialize, Serialize};

use crate::{CMatrix, Error, RMatrix, Result};

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Radio constants of the uplink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub bandwidth_hz: f64,
    pub noise_temperature_k: f64,
    pub noise_figure_db: f64,
    /// Maximum UE transmit power.
    pub p_max_w: f64,
    /// UE circuit power.
    pub p_circuit_w: f64,
    /// Transmit SNR override; derived from the constants above when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Pilot SNR; equals the data transmit SNR when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_p: Option<f64>,
    /// Pilot length; equals the number of UEs when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_p: Option<usize>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 20e6,
            noise_temperature_k: 290.0,
            noise_figure_db: 7.0,
            p_max_w: 0.2,
            p_circuit_w: 0.1,
            rho: None,
            rho_p: None,
            tau_p: None,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.bandwidth_hz, self.noise_temperature_k, self.p_max_w, self.p_circuit_w];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !self.noise_figure_db.is_finite() {
            return Err(Error::InvalidArgument("radio constants must be positive and finite".into()));
        }
        for v in [self.rho, self.rho_p].into_iter().flatten() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("SNR {v} must be positive")));
            }
        }
        if self.tau_p == Some(0) {
            return Err(Error::InvalidArgument("pilot length must be positive".into()));
        }
        Ok(())
    }

    /// Thermal noise power `k_B T B 10^(NF/10)` in watts.
    pub fn noise_power_w(&self) -> f64 {
        BOLTZMANN * self.noise_temperature_k * self.bandwidth_hz * 10f64.powf(self.noise_figure_db / 10.0)
    }

    /// Transmit SNR derived from the radio constants, ignoring any override.
    pub fn transmit_snr(&self) -> f64 {
        self.p_max_w / self.noise_power_w()
    }

    /// Transmit SNR in effect.
    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or_else(|| self.transmit_snr())
    }

    pub fn pilot_snr(&self) -> f64 {
        self.rho_p.unwrap_or_else(|| self.rho())
    }

    pub fn pilot_length(&self, num_ues: usize) -> usize {
        self.tau_p.unwrap_or(num_ues)
    }
}

/// Per-UE performance at one power allocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkMetrics {
    pub sinr: Vec<f64>,
    /// bits/s/Hz
    pub se: Vec<f64>,
    /// watts
    pub power: Vec<f64>,
    /// bits/J
    pub ee: Vec<f64>,
}

impl LinkMetrics {
    pub fn zeros(num_ues: usize, config: &SystemConfig) -> Self {
        let q = vec![0.0; num_ues];
        Self {
            sinr: q.clone(),
            se: q.clone(),
            power: ue_power(&q, config),
            ee: q,
        }
    }

    pub fn min_se(&self) -> f64 {
        self.se.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_ee(&self) -> f64 {
        self.ee.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Quadratic forms of a fixed combiner bank, enough to evaluate every SINR for
/// any power vector in `O(K^2)`:
///
/// * `gain[(k, i)] = |w_k^H h_i|^2`
/// * `err[(k, i)] = sum_m C_i(m) |w_k(m)|^2`
/// * `norm[k] = ||w_k||^2`
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGains {
    pub gain: RMatrix,
    pub err: RMatrix,
    pub norm: Vec<f64>,
}

impl EffectiveGains {
    pub fn new(w: &CMatrix, h_hat: &CMatrix, err_var: &RMatrix) -> Result<Self> {
        let (m, k) = h_hat.shape();
        if w.shape() != (m, k) {
            return Err(Error::ShapeMismatch {
                expected: (m, k),
                actual: w.shape(),
            });
        }
        if err_var.shape() != (m, k) {
            return Err(Error::ShapeMismatch {
                expected: (m, k),
                actual: err_var.shape(),
            });
        }
        let gain = (w.adjoint() * h_hat).map(|z| z.norm_sqr());
        let w_pow = w.map(|z| z.norm_sqr());
        let err = w_pow.transpose() * err_var;
        let norm = w_pow.row_sum().iter().copied().collect();
        Ok(Self { gain, err, norm })
    }

    pub fn num_ues(&self) -> usize {
        self.norm.len()
    }

    /// Desired-signal gain `|w_k^H h_k|^2`.
    pub fn own(&self, k: usize) -> f64 {
        self.gain[(k, k)]
    }

    /// Interference-plus-noise of UE `k`:
    /// `rho sum_{i != k} q_i gain[k][i] + rho sum_i q_i err[k][i] + ||w_k||^2`.
    pub fn denominator(&self, k: usize, q: &[f64], rho: f64) -> f64 {
        let mut acc = 0.0;
        for (i, qi) in q.iter().enumerate() {
            let g = if i == k { 0.0 } else { self.gain[(k, i)] };
            acc += qi * (g + self.err[(k, i)]);
        }
        rho * acc + self.norm[k]
    }

    pub fn sinr(&self, k: usize, q: &[f64], rho: f64) -> f64 {
        if self.norm[k] == 0.0 || q[k] == 0.0 {
            return 0.0;
        }
        rho * q[k] * self.own(k) / self.denominator(k, q, rho)
    }

    pub fn sinr_all(&self, q: &[f64], rho: f64) -> Vec<f64> {
        (0..self.num_ues()).map(|k| self.sinr(k, q, rho)).collect()
    }
}

pub fn spectral_efficiency(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// SINR and SE of every UE for combiner `w`. A zero weight vector yields
/// SINR 0.
pub fn sinr_and_se(w: &CMatrix, h_hat: &CMatrix, err_var: &RMatrix, q: &[f64], rho: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_powers(q, h_hat.ncols())?;
    let sinr = EffectiveGains::new(w, h_hat, err_var)?.sinr_all(q, rho);
    let se = sinr.iter().map(|s| spectral_efficiency(*s)).collect();
    Ok((sinr, se))
}

/// `P_k = P_max q_k + P_circuit`.
pub fn ue_power(q: &[f64], config: &SystemConfig) -> Vec<f64> {
    q.iter().map(|qk| config.p_max_w * qk + config.p_circuit_w).collect()
}

/// `E_k = B S_k / P_k` in bits per joule.
pub fn energy_efficiency(se: &[f64], q: &[f64], config: &SystemConfig) -> Vec<f64> {
    se.iter()
        .zip(ue_power(q, config))
        .map(|(s, p)| config.bandwidth_hz * s / p)
        .collect()
}

pub fn link_metrics(gains: &EffectiveGains, q: &[f64], config: &SystemConfig, rho: f64) -> LinkMetrics {
    let sinr = gains.sinr_all(q, rho);
    let se: Vec<f64> = sinr.iter().map(|s| spectral_efficiency(*s)).collect();
    LinkMetrics {
        ee: energy_efficiency(&se, q, config),
        power: ue_power(q, config),
        sinr,
        se,
    }
}

pub(crate) fn check_powers(q: &[f64], num_ues: usize) -> Result<()> {
    if q.len() != num_ues {
        return Err(Error::InvalidArgument(format!("{} powers for {num_ues} UEs", q.len())));
    }
    if q.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidArgument("powers must lie in [0, 1]".into()));
    }
    Ok(())
}
