//! Shared report plumbing: log-log slope fits and numeric serialization
//! helpers used by diagnostics and the CLI.

use serde::Serialize;

/// Least-squares fit of `log(y) = slope·log(x) + intercept`.
///
/// Inputs must be positive; non-positive pairs are skipped (and counted).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of the log-log fit.
    pub r_squared: f64,
    pub points_used: usize,
    pub points_skipped: usize,
}

/// Fits a power law `y ≈ C·x^slope` by least squares in log-log coordinates.
pub fn slope_fit(xs: &[f64], ys: &[f64]) -> SlopeFit {
    assert_eq!(xs.len(), ys.len());
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let skipped = xs.len() - pts.len();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return SlopeFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            r_squared: f64::NAN,
            points_used: pts.len(),
            points_skipped: skipped,
        };
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    SlopeFit {
        slope,
        intercept,
        r_squared,
        points_used: pts.len(),
        points_skipped: skipped,
    }
}

/// Formats a float with 17 significant digits (round-trip exact for f64).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

/// Serializes a value as pretty JSON with a stable field order (serde keeps
/// declaration order for structs; maps in scope use BTreeMap).
pub fn to_json_pretty<T: Serialize>(value: &T) -> crate::error::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs: Vec<f64> = (1..=6).map(|i| 2f64.powi(i)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.5 * x.powf(2.25)).collect();
        let fit = slope_fit(&xs, &ys);
        assert!((fit.slope - 2.25).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn skips_nonpositive() {
        let fit = slope_fit(&[1.0, 2.0, 4.0, 8.0], &[1.0, 4.0, 0.0, 64.0]);
        assert_eq!(fit.points_used, 3);
        assert_eq!(fit.points_skipped, 1);
        assert!((fit.slope - 2.0).abs() < 1e-12);
    }
}
