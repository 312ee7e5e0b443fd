use crate::{Error, Result};

/// Empirical CDF as `(value, cumulative fraction)` pairs with plotting
/// positions `(i - 0.5) / n` for the `i`-th smallest value.
pub fn cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("CDF of non-finite values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, (i as f64 + 0.5) / n))
        .collect())
}

/// `p`-th percentile (`0..=100`) of the values behind `cdf`, interpolating
/// linearly between order statistics at rank `(n - 1) p / 100`.
///
/// The "95%-likely" value of a metric is its 5th percentile.
pub fn percentile(cdf: &[(f64, f64)], p: f64) -> Result<f64> {
    if cdf.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("percentile {p} outside [0, 100]")));
    }
    let rank = (cdf.len() - 1) as f64 * p / 100.0;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Ok(cdf[lo].0 + frac * (cdf[hi].0 - cdf[lo].0))
}

pub fn median(values: &[f64]) -> Result<f64> {
    percentile(&cdf(values)?, 50.0)
}
