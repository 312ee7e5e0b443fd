use super::{MeasuredDataset, PathLossModel};
use crate::scenario::link_distance;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossFit {
    pub model: PathLossModel,
    pub links_used: usize,
}

/// Least-squares fit of path loss (dB) against `log10(d / reference)`.
///
/// The reference distance defaults to the shortest link. Shadowing sigma is
/// the residual standard deviation with `n - 2` degrees of freedom (zero for
/// an exact two-point fit). Links with zero power are skipped.
pub fn fit_path_loss(dataset: &MeasuredDataset, reference_distance: Option<f64>) -> Result<PathLossFit> {
    let (aps, ues) = match (dataset.ap_coords(), dataset.ue_coords()) {
        (Some(a), Some(u)) => (a, u),
        _ => return Err(Error::MalformedDataset("dataset has no coordinates".into())),
    };
    let beta = dataset.beta();
    let mut points = Vec::with_capacity(beta.len());
    for (m, a) in aps.iter().enumerate() {
        for (k, u) in ues.iter().enumerate() {
            let d = link_distance(a, u);
            if d > 0.0 && beta[(m, k)] > 0.0 {
                points.push((d, -10.0 * beta[(m, k)].log10()));
            }
        }
    }
    if points.len() < 2 {
        return Err(Error::MalformedDataset("need at least two links with positive distance and power".into()));
    }
    let reference = match reference_distance {
        Some(r) if r > 0.0 => r,
        Some(r) => return Err(Error::NonPositiveDistance(r)),
        None => points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
    };

    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| (p.0 / reference).log10()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::MalformedDataset("all links at the same distance".into()));
    }
    let sxy: f64 = xs.iter().zip(&points).map(|(x, p)| (x - x_mean) * (p.1 - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ssr: f64 = xs
        .iter()
        .zip(&points)
        .map(|(x, p)| (p.1 - intercept - slope * x).powi(2))
        .sum();
    let shadow_sigma = if points.len() > 2 { (ssr / (n - 2.0)).sqrt() } else { 0.0 };
    Ok(PathLossFit {
        model: PathLossModel {
            intercept,
            slope,
            reference_distance: reference,
            shadow_sigma,
        },
        links_used: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::synthesize_dataset;
    use crate::scenario::Position;
    use crate::Cx;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_points_give_the_exact_line() {
        let aps = vec![Position::new(0.0, 0.0, 0.0), Position::new(-90.0, 0.0, 0.0)];
        let ues = vec![Position::new(10.0, 0.0, 0.0)];
        let pl = [60.0, 95.0];
        let data = pl.iter().map(|db: &f64| Cx::new(10f64.powf(-db / 20.0), 0.0)).collect();
        let ds = MeasuredDataset::new(2, 1, 1, Some(aps), Some(ues), data).unwrap();
        let fit = fit_path_loss(&ds, None).unwrap();
        assert!((fit.model.reference_distance - 10.0).abs() < 1e-12);
        assert!((fit.model.intercept - 60.0).abs() < 1e-9);
        assert!((fit.model.slope - 35.0).abs() < 1e-9);
        assert_eq!(fit.model.shadow_sigma, 0.0);
    }

    #[test]
    fn noiseless_recovery_of_adjusted_preset() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let aps: Vec<Position> = (0..100)
            .map(|_| Position::new(rng.random::<f64>() * 200.0, rng.random::<f64>() * 200.0, 26.5 + 20.0 * rng.random::<f64>()))
            .collect();
        let ues: Vec<Position> = (0..20)
            .map(|_| Position::new(rng.random::<f64>() * 200.0, rng.random::<f64>() * 200.0, 1.5))
            .collect();
        let model = PathLossModel::ADJUSTED.without_shadowing();
        let ds = synthesize_dataset(aps, ues, &model, 3, false, &mut rng).unwrap();
        let fit = fit_path_loss(&ds, Some(25.0)).unwrap();
        assert!((fit.model.intercept - 68.3568).abs() < 5e-4, "{:?}", fit.model);
        assert!((fit.model.slope - 52.3).abs() < 5e-4);
    }

    #[test]
    fn needs_coordinates_and_spread() {
        let ds = MeasuredDataset::new(1, 2, 1, None, None, vec![Cx::new(1.0, 0.0); 2]).unwrap();
        assert!(matches!(fit_path_loss(&ds, None), Err(Error::MalformedDataset(_))));
        let same = MeasuredDataset::new(
            1,
            2,
            1,
            Some(vec![Position::origin()]),
            Some(vec![Position::new(5.0, 0.0, 0.0), Position::new(0.0, 5.0, 0.0)]),
            vec![Cx::new(1e-3, 0.0); 2],
        )
        .unwrap();
        assert!(fit_path_loss(&same, None).is_err());
    }
}
