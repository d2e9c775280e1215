//! Jackknife errors, equilibration checks and a weighted line fit.

use crate::error::{domain, Result};

pub const MIN_BINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub err: f64,
    pub bins: usize,
}

/// Mean of a correlated series with a binned jackknife error.
///
/// The series is cut into `bins` contiguous bins (at least [`MIN_BINS`]);
/// trailing samples that do not fill a bin are dropped.
pub fn jackknife_mean(samples: &[f64], bins: usize) -> Result<MeanEstimate> {
    jackknife(samples, bins, |m| m)
}

/// Jackknife estimate of `f(mean)` over binned samples.
pub fn jackknife(samples: &[f64], bins: usize, f: impl Fn(f64) -> f64) -> Result<MeanEstimate> {
    let bins = bins.max(MIN_BINS);
    if samples.len() < bins {
        return domain(format!("need at least {bins} samples for the jackknife, got {}", samples.len()));
    }
    let per = samples.len() / bins;
    let used = per * bins;
    let bin_sums: Vec<f64> = samples[..used].chunks(per).map(|c| c.iter().sum()).collect();
    let total: f64 = bin_sums.iter().sum();
    let full = f(total / used as f64);
    let leave_out: Vec<f64> = bin_sums
        .iter()
        .map(|b| f((total - b) / (used - per) as f64))
        .collect();
    let lbar = leave_out.iter().sum::<f64>() / bins as f64;
    let var = leave_out.iter().map(|v| (v - lbar).powi(2)).sum::<f64>() * (bins as f64 - 1.0) / bins as f64;
    Ok(MeanEstimate {
        mean: full,
        err: var.sqrt(),
        bins,
    })
}

/// Compares the means of the two halves of a series; `true` when they agree
/// within three combined standard errors.
pub fn halves_agree(samples: &[f64]) -> Result<(bool, f64)> {
    let half = samples.len() / 2;
    let a = jackknife_mean(&samples[..half], MIN_BINS)?;
    let b = jackknife_mean(&samples[half..2 * half], MIN_BINS)?;
    let sigma = (a.err * a.err + b.err * b.err).sqrt();
    let z = if sigma > 0.0 {
        (a.mean - b.mean).abs() / sigma
    } else if a.mean == b.mean {
        0.0
    } else {
        f64::INFINITY
    };
    Ok((z <= 3.0, z))
}

/// Weighted least-squares line `y = c0 + c1 x`; returns
/// `(c0, err c0, c1, err c1)`.
///
/// Points with zero error borrow the smallest positive error. When no
/// point has a positive error the fit is ordinary least squares and the
/// errors come from the residual scatter (zero for collinear data).
pub fn weighted_line(x: &[f64], y: &[f64], err: &[f64]) -> Result<(f64, f64, f64, f64)> {
    if x.len() < 2 || x.len() != y.len() || y.len() != err.len() {
        return domain("weighted line fit needs at least two matching points");
    }
    let floor = err.iter().cloned().filter(|e| *e > 0.0).fold(f64::INFINITY, f64::min);
    let unweighted = !floor.is_finite();
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let weight = |e: f64| {
        if unweighted {
            1.0
        } else {
            let e = if e > 0.0 { e } else { floor };
            1.0 / (e * e)
        }
    };
    for i in 0..x.len() {
        let w = weight(err[i]);
        s += w;
        sx += w * x[i];
        sxx += w * x[i] * x[i];
        sy += w * y[i];
        sxy += w * x[i] * y[i];
    }
    let det = s * sxx - sx * sx;
    if det.abs() <= 1e-14 * s * sxx {
        return domain("degenerate abscissae in line fit");
    }
    let c0 = (sxx * sy - sx * sxy) / det;
    let c1 = (s * sxy - sx * sy) / det;
    let scale = if unweighted {
        let dof = x.len().saturating_sub(2);
        if dof == 0 {
            0.0
        } else {
            let chi2: f64 = (0..x.len()).map(|i| (y[i] - c0 - c1 * x[i]).powi(2)).sum();
            (chi2 / dof as f64).sqrt()
        }
    } else {
        1.0
    };
    Ok((c0, scale * (sxx / det).sqrt(), c1, scale * (s / det).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn jackknife_of_independent_series() {
        let xs: Vec<f64> = (0..1600).map(|i| ((i * 7919) % 101) as f64).collect();
        let j = jackknife_mean(&xs, 16).unwrap();
        let mean = xs.iter().sum::<f64>() / 1600.0;
        assert_relative_eq!(j.mean, mean, max_relative = 1e-14);
        assert!(j.err > 0.0 && j.err < 2.0);
        assert!(jackknife_mean(&xs[..10], 16).is_err());
        assert_eq!(jackknife_mean(&xs, 4).unwrap().bins, 16);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [0.1, 0.2, 0.4];
        let y: Vec<f64> = x.iter().map(|v| 0.3 + 2.0 * v).collect();
        let (c0, _, c1, _) = weighted_line(&x, &y, &[0.01, 0.02, 0.01]).unwrap();
        assert_relative_eq!(c0, 0.3, max_relative = 1e-12);
        assert_relative_eq!(c1, 2.0, max_relative = 1e-12);
        let (c0, e0, _, e1) = weighted_line(&x, &y, &[0.0; 3]).unwrap();
        assert_relative_eq!(c0, 0.3, max_relative = 1e-12);
        assert!(e0 < 1e-12 && e1 < 1e-12);
        let (_, e0, _, _) = weighted_line(&x, &[1.0, 0.0, 1.0], &[0.0; 3]).unwrap();
        assert!(e0 > 0.1);
    }

    #[test]
    fn drifting_series_fails_halves_check() {
        let xs: Vec<f64> = (0..3200).map(|i| i as f64 / 3200.0 + 0.01 * ((i * 31) % 7) as f64).collect();
        assert!(!halves_agree(&xs).unwrap().0);
    }
}
