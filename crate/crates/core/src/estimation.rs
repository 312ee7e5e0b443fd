//! Uplink pilot phase and per-antenna MMSE channel estimation.

use std::f64::consts::TAU;

use rand::Rng;

use crate::channel::complex_normal;
use crate::{CMatrix, Cx, Error, RMatrix, Result};

/// Unit-norm pilot sequences, one column per UE (`tau_p x K`).
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    sequences: CMatrix,
}

impl PilotBook {
    pub fn tau_p(&self) -> usize {
        self.sequences.nrows()
    }

    pub fn num_ues(&self) -> usize {
        self.sequences.ncols()
    }

    pub fn sequences(&self) -> &CMatrix {
        &self.sequences
    }

    /// `|phi_a^H phi_b|^2`.
    pub fn overlap(&self, a: usize, b: usize) -> f64 {
        self.sequences.column(a).dotc(&self.sequences.column(b)).norm_sqr()
    }
}

/// First `K` columns of the normalized `tau_p`-point DFT matrix.
pub fn make_pilots(num_ues: usize, tau_p: usize) -> Result<PilotBook> {
    if num_ues == 0 {
        return Err(Error::InvalidArgument("need at least one UE".into()));
    }
    if tau_p < num_ues {
        return Err(Error::TauTooSmall { tau_p, num_ues });
    }
    let scale = 1.0 / (tau_p as f64).sqrt();
    let sequences = CMatrix::from_fn(tau_p, num_ues, |n, k| {
        let angle = -TAU * ((n * k) % tau_p) as f64 / tau_p as f64;
        Cx::from_polar(scale, angle)
    });
    Ok(PilotBook { sequences })
}

/// Received pilot block without noise: `sqrt(rho_p tau_p) * H * Phi^T`,
/// one row per antenna.
pub fn received_pilots_noiseless(h: &CMatrix, pilots: &PilotBook, rho_p: f64) -> Result<CMatrix> {
    if h.ncols() != pilots.num_ues() {
        return Err(Error::ShapeMismatch {
            expected: (h.nrows(), pilots.num_ues()),
            actual: h.shape(),
        });
    }
    let amp = (rho_p * pilots.tau_p() as f64).sqrt();
    Ok(h * pilots.sequences.transpose() * Cx::new(amp, 0.0))
}

/// Received pilot block with unit-variance complex Gaussian receiver noise.
pub fn simulate_pilot_rx<R: Rng + ?Sized>(h: &CMatrix, pilots: &PilotBook, rho_p: f64, rng: &mut R) -> Result<CMatrix> {
    let mut y = received_pilots_noiseless(h, pilots, rho_p)?;
    for z in y.iter_mut() {
        *z += complex_normal(rng);
    }
    Ok(y)
}

/// Channel estimate and per-antenna estimation-error variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub h_hat: CMatrix,
    pub err_var: RMatrix,
}

/// Per-antenna MMSE estimate from the received pilots, assuming the large-scale
/// gains are known.
///
/// The estimate variance is
/// `gamma = rho_p tau_p beta^2 / (rho_p tau_p sum_k' beta_k' |phi_k^H phi_k'|^2 + 1)`
/// and the stored error variance is `beta - gamma`.
pub fn mmse_estimate(pilot_rx: &CMatrix, beta: &RMatrix, pilots: &PilotBook, rho_p: f64) -> Result<Estimate> {
    let (m, k) = beta.shape();
    if pilot_rx.shape() != (m, pilots.tau_p()) {
        return Err(Error::ShapeMismatch {
            expected: (m, pilots.tau_p()),
            actual: pilot_rx.shape(),
        });
    }
    if pilots.num_ues() != k {
        return Err(Error::ShapeMismatch {
            expected: (pilots.tau_p(), k),
            actual: pilots.sequences.shape(),
        });
    }
    let rt = rho_p * pilots.tau_p() as f64;
    let overlaps = RMatrix::from_fn(k, k, |a, b| pilots.overlap(a, b));
    // projections[(m, k)] = phi_k^H y_m
    let projections = pilot_rx * pilots.sequences.map(|z| z.conj());

    let mut h_hat = CMatrix::zeros(m, k);
    let mut err_var = RMatrix::zeros(m, k);
    for a in 0..m {
        for ue in 0..k {
            let b = beta[(a, ue)];
            if b == 0.0 {
                continue;
            }
            let load: f64 = (0..k).map(|j| beta[(a, j)] * overlaps[(ue, j)]).sum();
            let denom = rt * load + 1.0;
            h_hat[(a, ue)] = projections[(a, ue)] * (rt.sqrt() * b / denom);
            let gamma = rt * b * b / denom;
            err_var[(a, ue)] = (b - gamma).clamp(0.0, b);
        }
    }
    Ok(Estimate { h_hat, err_var })
}

/// Genie receiver: the estimate equals the channel and carries no error.
pub fn perfect_csi(h: &CMatrix) -> Estimate {
    Estimate {
        h_hat: h.clone(),
        err_var: RMatrix::zeros(h.nrows(), h.ncols()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_small_scale, realize};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pilots_are_orthonormal() {
        let p = make_pilots(2, 2).unwrap();
        assert!(p.overlap(0, 1) < 1e-28);
        let p = make_pilots(1, 5).unwrap();
        assert!((p.overlap(0, 0) - 1.0).abs() < 1e-15);
        let p = make_pilots(8, 8).unwrap();
        let gram = p.sequences().adjoint() * p.sequences();
        let eye = CMatrix::identity(8, 8);
        assert!((gram - eye).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn short_pilots_rejected() {
        assert!(matches!(make_pilots(4, 3), Err(Error::TauTooSmall { tau_p: 3, num_ues: 4 })));
    }

    #[test]
    fn noiseless_single_ue_pilot() {
        let p = make_pilots(1, 4).unwrap();
        let h = CMatrix::from_row_slice(2, 1, &[Cx::new(1.0, 2.0), Cx::new(-0.5, 0.0)]);
        let y = received_pilots_noiseless(&h, &p, 3.0).unwrap();
        let amp = (3.0f64 * 4.0).sqrt();
        for m in 0..2 {
            for n in 0..4 {
                let expected = h[(m, 0)] * p.sequences()[(n, 0)] * amp;
                assert!((y[(m, n)] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_channel_gives_unit_variance_noise() {
        let p = make_pilots(2, 4).unwrap();
        let h = CMatrix::zeros(250, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut acc = 0.0;
        let mut count = 0usize;
        for _ in 0..100 {
            let y = simulate_pilot_rx(&h, &p, 10.0, &mut rng).unwrap();
            acc += y.iter().map(|z| z.norm_sqr()).sum::<f64>();
            count += y.len();
        }
        let var = acc / count as f64;
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn worked_gamma_value() {
        // rho_p tau_p = 100, beta = 0.01
        let p = make_pilots(1, 1).unwrap();
        let beta = RMatrix::from_element(1, 1, 0.01);
        let y = CMatrix::zeros(1, 1);
        let est = mmse_estimate(&y, &beta, &p, 100.0).unwrap();
        assert!((est.err_var[(0, 0)] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn zero_beta_gives_zero_estimate() {
        let p = make_pilots(2, 2).unwrap();
        let beta = RMatrix::from_row_slice(1, 2, &[0.0, 1e-9]);
        let y = CMatrix::from_element(1, 2, Cx::new(1.0, 1.0));
        let est = mmse_estimate(&y, &beta, &p, 1e9).unwrap();
        assert_eq!(est.h_hat[(0, 0)], Cx::new(0.0, 0.0));
        assert_eq!(est.err_var[(0, 0)], 0.0);
    }

    #[test]
    fn huge_pilot_energy_makes_estimation_perfect() {
        let p = make_pilots(2, 2).unwrap();
        let beta = RMatrix::from_row_slice(1, 2, &[1.0, 0.3]);
        let y = CMatrix::zeros(1, 2);
        let est = mmse_estimate(&y, &beta, &p, 0.5e12).unwrap();
        for k in 0..2 {
            assert!(est.err_var[(0, k)] / beta[(0, k)] < 1e-9);
        }
    }

    #[test]
    fn perfect_csi_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (m, k) in [(1, 1), (4, 3), (16, 8)] {
            let h = draw_small_scale(m, k, &mut rng);
            let est = perfect_csi(&h);
            assert_eq!(est.h_hat, h);
            assert!(est.err_var.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn noiseless_estimate_recovers_channel_direction() {
        let p = make_pilots(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let beta = RMatrix::from_element(4, 3, 2.0);
        let h = realize(&beta, &draw_small_scale(4, 3, &mut rng)).unwrap();
        let y = received_pilots_noiseless(&h, &p, 5.0).unwrap();
        let est = mmse_estimate(&y, &beta, &p, 5.0).unwrap();
        let shrink = 15.0 * 2.0 / (15.0 * 2.0 + 1.0);
        for (a, b) in est.h_hat.iter().zip(h.iter()) {
            assert!((a - b * shrink).norm() < 1e-12);
        }
    }
}
