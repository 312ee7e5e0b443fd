//! Channel synthesis: distance-law path loss, log-normal shadowing and
//! Rayleigh small-scale fading, plus ingestion of measured channels.

mod dataset;
mod fit;

pub use dataset::{synthesize_dataset, DatasetLayout, MeasuredDataset};
pub use fit::{fit_path_loss, PathLossFit};

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::scenario::{link_distance, Environment, Topology};
use crate::{CMatrix, Cx, Error, RMatrix, Result};

pub const DEFAULT_INDOOR_PENALTY_DB: f64 = 20.0;

/// `L(d) = intercept + slope * log10(d / reference_distance)` in dB, with
/// log-normal shadowing of standard deviation `shadow_sigma` dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub intercept: f64,
    pub slope: f64,
    pub reference_distance: f64,
    pub shadow_sigma: f64,
}

impl PathLossModel {
    /// Literature urban-microcell law, 4 dB shadowing.
    pub const LITERATURE: Self = Self {
        intercept: 30.5,
        slope: 36.7,
        reference_distance: 1.0,
        shadow_sigma: 4.0,
    };

    /// Law fitted to the drone measurements, 9 dB shadowing.
    pub const ADJUSTED: Self = Self {
        intercept: 68.3568,
        slope: 52.3,
        reference_distance: 25.0,
        shadow_sigma: 9.0,
    };

    pub fn validate(&self) -> Result<()> {
        let ok = self.slope > 0.0
            && self.reference_distance > 0.0
            && self.shadow_sigma >= 0.0
            && self.intercept.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid path-loss model {self:?}")))
        }
    }

    /// Path loss in dB. Held at the intercept below the reference distance.
    pub fn path_loss_db(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::NonPositiveDistance(d));
        }
        let ratio = (d / self.reference_distance).max(1.0);
        Ok(self.intercept + self.slope * ratio.log10())
    }

    /// Same law expressed relative to another reference distance.
    pub fn rereferenced(&self, reference_distance: f64) -> Self {
        Self {
            intercept: self.intercept + self.slope * (reference_distance / self.reference_distance).log10(),
            reference_distance,
            ..*self
        }
    }

    pub fn without_shadowing(&self) -> Self {
        Self {
            shadow_sigma: 0.0,
            ..*self
        }
    }
}

/// One channel realization together with what the receiver knows about it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    /// True channel, antennas x UEs.
    pub h: CMatrix,
    /// Large-scale gain per antenna and UE.
    pub beta: RMatrix,
    /// Channel estimate.
    pub h_hat: CMatrix,
    /// Estimation-error variance per antenna and UE.
    pub err_var: RMatrix,
    pub indoor_penalty_applied: bool,
}

impl ChannelState {
    pub fn num_antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn num_ues(&self) -> usize {
        self.h.ncols()
    }
}

/// Large-scale gains for every antenna and UE.
///
/// Shadowing is drawn once per AP-UE pair and shared by the AP's antennas.
/// Indoor UEs take an additional `indoor_penalty_db` of loss.
pub fn draw_large_scale<R: Rng + ?Sized>(
    topology: &Topology,
    model: &PathLossModel,
    indoor_penalty_db: f64,
    rng: &mut R,
) -> Result<RMatrix> {
    model.validate()?;
    let n = topology.antennas_per_ap;
    let mut beta = RMatrix::zeros(topology.num_antennas(), topology.num_ues());
    let shadow = Normal::new(0.0, model.shadow_sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    for l in 0..topology.num_aps {
        for (k, ue) in topology.ues.iter().enumerate() {
            let x = shadow.sample(rng);
            let penalty = match ue.environment {
                Environment::Indoor => indoor_penalty_db,
                Environment::Outdoor => 0.0,
            };
            // the anchor antenna's distance stands for the whole co-located array
            let anchor = &topology.ap(l)[0];
            let d = link_distance(&anchor.position, &ue.position).max(f64::MIN_POSITIVE);
            let beta_db = -model.path_loss_db(d)? - x - penalty;
            let gain = 10f64.powf(beta_db / 10.0);
            for m in l * n..(l + 1) * n {
                beta[(m, k)] = gain;
            }
        }
    }
    Ok(beta)
}

/// i.i.d. unit-variance circularly-symmetric complex Gaussian entries.
pub fn draw_small_scale<R: Rng + ?Sized>(num_antennas: usize, num_ues: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(num_antennas, num_ues, |_, _| complex_normal(rng))
}

pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Cx {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Cx::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `H = sqrt(beta) ⊙ g`.
pub fn realize(beta: &RMatrix, g: &CMatrix) -> Result<CMatrix> {
    if beta.shape() != g.shape() {
        return Err(Error::ShapeMismatch {
            expected: beta.shape(),
            actual: g.shape(),
        });
    }
    Ok(CMatrix::from_fn(beta.nrows(), beta.ncols(), |m, k| g[(m, k)] * beta[(m, k)].sqrt()))
}
