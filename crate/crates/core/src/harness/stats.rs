//! Order statistics and the log–log rate fit.

use crate::error::{Error, Result};

/// Linearly interpolated quantile (`q ∈ [0, 1]`) of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Interquartile range `Q₃ − Q₁`.
pub fn iqr(values: &[f64]) -> f64 {
    quantile(values, 0.75) - quantile(values, 0.25)
}

/// Least-squares slope of `log(regret)` against `log(n)`.
pub fn loglog_slope(horizons: &[f64], regrets: &[f64]) -> Result<f64> {
    if horizons.len() != regrets.len() {
        return Err(Error::invalid(format!(
            "{} horizons but {} regrets",
            horizons.len(),
            regrets.len()
        )));
    }
    if horizons.len() < 3 {
        return Err(Error::invalid("slope fit needs at least 3 horizons"));
    }
    if let Some(r) = regrets.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::invalid(format!("regrets must be positive, got {r}")));
    }
    if let Some(n) = horizons.iter().find(|n| !(**n > 0.0 && n.is_finite())) {
        return Err(Error::invalid(format!(
            "horizons must be positive, got {n}"
        )));
    }
    let x: Vec<f64> = horizons.iter().map(|n| n.ln()).collect();
    let y: Vec<f64> = regrets.iter().map(|r| r.ln()).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("horizons must not all be equal"));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&v), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(iqr(&v), 1.5);
        assert_eq!(median(&[7.0]), 7.0);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn slope_of_power_laws() {
        let n = [1000.0, 2000.0, 4000.0, 8000.0];
        let two_thirds: Vec<f64> = n.iter().map(|n: &f64| 3.7 * n.powf(2.0 / 3.0)).collect();
        assert!((loglog_slope(&n, &two_thirds).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        let linear: Vec<f64> = n.iter().map(|n| 0.2 * n).collect();
        assert!((loglog_slope(&n, &linear).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn slope_rejects_bad_input() {
        assert!(loglog_slope(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(loglog_slope(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).is_err());
        assert!(loglog_slope(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }
}
