use serde::{Deserialize, Serialize};

use super::SpectrumCurve;
use crate::error::{Error, Result};

/// Peak position, height and width of the dominant line in a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineMetrics {
    pub peak_frequency: f64,
    pub peak_value: f64,
    /// Median of the outer 10% of the grid (5% at each end).
    pub baseline: f64,
    /// Interpolated half-maximum crossings.
    pub left: f64,
    pub right: f64,
    pub fwhm: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Locate the dominant (first global maximum) line and its half-maximum
/// crossings above the baseline.
pub fn line_metrics(spec: &SpectrumCurve) -> Result<LineMetrics> {
    let (f, v) = (&spec.f, &spec.values);
    let n = v.len();
    if n < 3 || f.len() != n {
        return Err(Error::Metrology(format!("need at least 3 samples, got {n}")));
    }
    let edge = (n / 20).max(1);
    let baseline = median(v[..edge].iter().chain(&v[n - edge..]).copied().collect());
    let ip = (0..n).fold(0, |best, k| if v[k] > v[best] { k } else { best });
    let peak = v[ip];
    if !(peak > baseline) {
        return Err(Error::Metrology(format!(
            "no peak above baseline (peak {peak:e}, baseline {baseline:e})"
        )));
    }
    let half = baseline + 0.5 * (peak - baseline);
    let cross = |a: usize, b: usize| f[a] + (half - v[a]) * (f[b] - f[a]) / (v[b] - v[a]);
    let left = (0..ip)
        .rev()
        .find(|&k| v[k] < half)
        .map(|k| cross(k, k + 1))
        .ok_or_else(|| Error::Metrology("lower half-maximum crossing lies outside the grid".into()))?;
    let right = (ip + 1..n)
        .find(|&k| v[k] < half)
        .map(|k| cross(k - 1, k))
        .ok_or_else(|| Error::Metrology("upper half-maximum crossing lies outside the grid".into()))?;
    Ok(LineMetrics {
        peak_frequency: f[ip],
        peak_value: peak,
        baseline,
        left,
        right,
        fwhm: right - left,
    })
}

/// Full width at half of (peak - baseline) [Hz].
pub fn fwhm(spec: &SpectrumCurve) -> Result<f64> {
    line_metrics(spec).map(|m| m.fwhm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;
    use crate::spectrum::{Sidedness, SpectrumModel};
    use approx::assert_relative_eq;

    fn curve(f: Vec<f64>, values: Vec<f64>) -> SpectrumCurve {
        SpectrumCurve {
            f,
            values,
            model: SpectrumModel::Lorentzian,
            sidedness: Sidedness::TwoSided,
            variance: 1.0,
            warnings: vec![],
        }
    }

    #[test]
    fn triangle_width_is_exact() {
        let f = linspace(-10.0, 10.0, 201);
        let v = f.iter().map(|x: &f64| (2.0 - x.abs()).max(0.0) + 0.25).collect();
        let m = line_metrics(&curve(f, v)).unwrap();
        assert_relative_eq!(m.baseline, 0.25);
        assert_relative_eq!(m.fwhm, 2.0, max_relative = 1e-12);
        assert_relative_eq!(m.left, -1.0, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_width() {
        let sigma = 3.0;
        let f = linspace(-50.0, 50.0, 10_001);
        let v = f.iter().map(|x| (-x * x / (2.0 * sigma * sigma)).exp()).collect();
        let w = fwhm(&curve(f, v)).unwrap();
        assert_relative_eq!(w, 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma, max_relative = 1e-5);
    }

    #[test]
    fn metrology_errors() {
        let flat = curve(linspace(0.0, 1.0, 50), vec![1.0; 50]);
        assert!(matches!(fwhm(&flat), Err(Error::Metrology(_))));
        let f = linspace(0.0, 1.0, 50);
        let ramp = f.iter().map(|x| 1.0 + x).collect();
        assert!(matches!(fwhm(&curve(f, ramp)), Err(Error::Metrology(_))));
        assert!(fwhm(&curve(vec![0.0, 1.0], vec![0.0, 1.0])).is_err());
    }
}
