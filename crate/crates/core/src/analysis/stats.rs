use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

/// Sample mean and standard error (`n - 1` normalisation).
pub fn mean_stderr(xs: &[f64]) -> MeanStderr {
    let n = xs.len();
    if n == 0 {
        return MeanStderr {
            mean: f64::NAN,
            stderr: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanStderr { mean, stderr: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    MeanStderr {
        mean,
        stderr: (var / n as f64).sqrt(),
    }
}

/// Decay rate from least squares of `ln y` on `t`: `y ~ C e^{-rate t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLinearFit {
    pub rate: f64,
    pub stderr: f64,
    /// `rate -/+ z * stderr`.
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

/// Fits over the points with `t` in `[t_lo, t_hi]` and positive finite `y`.
/// Needs at least three such points.
pub fn fit_log_linear(t: &[f64], y: &[f64], t_lo: f64, t_hi: f64, z: f64) -> Option<LogLinearFit> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(&t, &y)| t >= t_lo && t <= t_hi && y > 0.0 && y.is_finite())
        .map(|(&t, &y)| (t, y.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (rss / (nf - 2.0) / sxx).sqrt();
    let rate = -slope;
    Some(LogLinearFit {
        rate,
        stderr,
        ci_low: rate - z * stderr,
        ci_high: rate + z * stderr,
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let f = fit_log_linear(&t, &y, 2.0, 10.0, 3.0).unwrap();
        assert!((f.rate - 0.7).abs() < 1e-12);
        assert!(f.stderr < 1e-10);
        assert_eq!(f.points, 16);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_log_linear(&[0.0, 1.0], &[1.0, 0.5], 0.0, 1.0, 3.0).is_none());
        assert!(fit_log_linear(&[0.0, 1.0, 2.0], &[0.0, 0.0, 0.0], 0.0, 2.0, 3.0).is_none());
    }

    #[test]
    fn mean_and_stderr() {
        let m = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }
}
