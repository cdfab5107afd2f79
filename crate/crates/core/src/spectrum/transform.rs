//! Discrete Wiener–Khinchin transform of a sampled correlation function.
//!
//! On a uniform delay grid `tau_j = j dt`, `j = 0..=N`, the two-sided spectrum
//! is the trapezoidal cosine sum
//! `S(f) = <phi^2> dt [C_0 + 2 sum_{0<j<N} C_j cos(2 pi f tau_j) + C_N cos(2 pi f tau_N)]`.
//! Uniform frequency grids are evaluated with a chirp-z transform, other
//! grids by direct summation; both evaluate the same sum.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::analytic::check_frequency_grid;
use super::{Sidedness, SpectrumCurve, SpectrumModel};
use crate::corrfn::CorrelationCurve;
use crate::error::{Error, Result};
use crate::grid::{linspace, uniform_step};

/// Minimum number of points on a default frequency grid.
pub const MIN_DEFAULT_POINTS: usize = 4097;
/// Default frequency span floor on either side of f_L [Hz].
const MIN_HALF_SPAN: f64 = 2e6;
/// Required correlation span in units of T2.
const SPAN_IN_T2: f64 = 10.0;
/// Required samples per period of the highest frequency.
const SAMPLES_PER_PERIOD: f64 = 20.0;
/// Relative spacing tolerance for treating a grid as uniform.
const UNIFORM_TOL: f64 = 1e-9;
/// Below this many frequencies the direct sum is used even on uniform grids.
const CHIRP_MIN_POINTS: usize = 32;
/// Recurrence steps between exact re-evaluations of the rotating phasor.
const RESYNC: usize = 256;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformOptions {
    /// Report the one-sided density (doubled for f > 0, zero for f < 0).
    pub one_sided: bool,
}

/// Grid symmetric about f_L spanning +-max(10/(2 pi T2), 2 MHz).
pub fn default_frequency_grid(larmor_frequency: f64, t2: f64) -> Vec<f64> {
    let half = (SPAN_IN_T2 / (2.0 * PI * t2)).max(MIN_HALF_SPAN);
    linspace(larmor_frequency - half, larmor_frequency + half, MIN_DEFAULT_POINTS)
}

/// `n` points centred on `center`, `half_width` either side (for linewidth work).
pub fn metrology_grid(center: f64, half_width: f64, n: usize) -> Vec<f64> {
    linspace(center - half_width, center + half_width, n)
}

/// Delay step: the Nyquist-style bound `1/(20 f_max)`, tightened to the
/// waist transit time `w0^2/4D` so the kink of C at tau = 0 is resolved.
pub fn default_transform_step(f_max: f64, waist_time: f64) -> f64 {
    (1.0 / (SAMPLES_PER_PERIOD * f_max.abs())).min(waist_time)
}

/// `e^{2 pi i a b}` with `a b` reduced modulo one before the trig call.
fn turns(a: f64, b: f64) -> Complex64 {
    let p = a * b;
    let err = a.mul_add(b, -p);
    let frac = (p - p.round()) + err;
    Complex64::from_polar(1.0, 2.0 * PI * frac)
}

/// Trapezoid weights `C_0, 2 C_1, ..., 2 C_{N-1}, C_N`.
fn trapezoid_weights(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    values
        .iter()
        .enumerate()
        .map(|(j, &c)| if j == 0 || j + 1 == n { c } else { 2.0 * c })
        .collect()
}

/// `dt * sum_j a_j cos(2 pi f j dt)` by direct summation for every `f`.
pub fn cosine_transform_direct(values: &[f64], dt: f64, f_grid: &[f64]) -> Vec<f64> {
    let a = trapezoid_weights(values);
    f_grid
        .iter()
        .map(|&f| {
            let c = -f * dt;
            let step = turns(c, 1.0);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut z = Complex64::new(1.0, 0.0);
            for (j, &aj) in a.iter().enumerate() {
                if j % RESYNC == 0 {
                    z = turns(c, j as f64);
                }
                acc += z * aj;
                z *= step;
            }
            dt * acc.re
        })
        .collect()
}

/// Chirp-z evaluation of the same sum on `f_m = f0 + m df`, `m < count`.
fn cosine_transform_chirp(values: &[f64], dt: f64, f0: f64, df: f64, count: usize) -> Vec<f64> {
    let a = trapezoid_weights(values);
    let n = a.len();
    let len = (n + count - 1).next_power_of_two();
    let half_alpha = 0.5 * df * dt;
    let shift = -f0 * dt;
    let chirp = |k: usize| {
        let k = k as f64;
        turns(half_alpha, k * k)
    };

    let mut y = vec![Complex64::new(0.0, 0.0); len];
    for (j, &aj) in a.iter().enumerate() {
        y[j] = aj * turns(shift, j as f64) * chirp(j).conj();
    }
    let mut h = vec![Complex64::new(0.0, 0.0); len];
    for (m, slot) in h.iter_mut().enumerate().take(count) {
        *slot = chirp(m);
    }
    for j in 1..n {
        h[len - j] = chirp(j);
    }

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    forward.process(&mut y);
    forward.process(&mut h);
    for (yk, hk) in y.iter_mut().zip(&h) {
        *yk *= hk;
    }
    inverse.process(&mut y);
    let norm = dt / len as f64;
    (0..count).map(|m| norm * (y[m] * chirp(m).conj()).re).collect()
}

/// Trapezoidal cosine transform on any strictly increasing grid (chirp-z on
/// uniform grids, direct summation otherwise).
pub fn cosine_transform(values: &[f64], dt: f64, f_grid: &[f64]) -> Vec<f64> {
    match uniform_step(f_grid, UNIFORM_TOL) {
        Some(df) if f_grid.len() >= CHIRP_MIN_POINTS => {
            cosine_transform_chirp(values, dt, f_grid[0], df, f_grid.len())
        }
        _ => cosine_transform_direct(values, dt, f_grid),
    }
}

/// Validates the delay grid of a full correlation and returns `(dt, T2)`.
fn check_delays(corr: &CorrelationCurve) -> Result<(f64, f64)> {
    let t2 = corr
        .meta
        .t2
        .ok_or_else(|| Error::config("spectrum needs the full correlation (precession and T2 applied)"))?;
    let tau = &corr.tau;
    if tau.len() < 2 || tau[0] != 0.0 {
        return Err(Error::config("correlation must be sampled from tau = 0"));
    }
    if uniform_step(tau, UNIFORM_TOL).is_none() {
        return Err(Error::config("correlation must be sampled on a uniform delay grid"));
    }
    let tau_max = tau[tau.len() - 1];
    if tau_max < SPAN_IN_T2 * t2 * (1.0 - 1e-12) {
        return Err(Error::config(format!(
            "delay span too short: tau_max = {tau_max:e} s < 10 T2 = {:e} s",
            SPAN_IN_T2 * t2
        )));
    }
    Ok((tau_max / (tau.len() - 1) as f64, t2))
}

/// Two-sided numeric spectrum `<phi^2> int C(|tau|) e^{-2 pi i f tau} dtau` on `f_grid`.
pub fn spectrum_numeric(
    corr: &CorrelationCurve,
    f_grid: &[f64],
    variance: f64,
    options: TransformOptions,
) -> Result<SpectrumCurve> {
    check_frequency_grid(f_grid)?;
    let (dt, _) = check_delays(corr)?;
    let f_max = f_grid.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    if f_max > 0.0 && dt > (1.0 + 1e-12) / (SAMPLES_PER_PERIOD * f_max) {
        return Err(Error::config(format!(
            "delay step too coarse: dt = {dt:e} s > 1/(20 f_max) = {:e} s",
            1.0 / (SAMPLES_PER_PERIOD * f_max)
        )));
    }
    let mut values: Vec<f64> = cosine_transform(&corr.values, dt, f_grid)
        .into_iter()
        .map(|s| variance * s)
        .collect();
    let sidedness = if options.one_sided {
        for (v, &f) in values.iter_mut().zip(f_grid) {
            if f > 0.0 {
                *v *= 2.0;
            } else if f < 0.0 {
                *v = 0.0;
            }
        }
        Sidedness::OneSided
    } else {
        Sidedness::TwoSided
    };
    Ok(SpectrumCurve {
        f: f_grid.to_vec(),
        values,
        model: SpectrumModel::NumericWk,
        sidedness,
        variance,
        warnings: Vec::new(),
    })
}

/// Two-sided spectrum on the full conjugate grid `f_k = k / (2 N dt)`,
/// `k = -N..N-1`, by one FFT of the even extension of the correlation.
pub fn full_band_spectrum(corr: &CorrelationCurve, variance: f64) -> Result<SpectrumCurve> {
    let (dt, _) = check_delays(corr)?;
    let c = &corr.values;
    let n = c.len() - 1;
    let len = 2 * n;
    let mut x: Vec<Complex64> = (0..len)
        .map(|j| Complex64::new(if j <= n { c[j] } else { c[len - j] }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut x);
    let df = 1.0 / (len as f64 * dt);
    let (f, values) = (0..len)
        .map(|i| {
            let k = i as isize - n as isize;
            let idx = k.rem_euclid(len as isize) as usize;
            (k as f64 * df, variance * dt * x[idx].re)
        })
        .unzip();
    Ok(SpectrumCurve {
        f,
        values,
        model: SpectrumModel::NumericWk,
        sidedness: Sidedness::TwoSided,
        variance,
        warnings: Vec::new(),
    })
}

/// Sum S df over the full band against `<phi^2> C(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParsevalReport {
    pub sum: f64,
    pub expected: f64,
    pub relative_error: f64,
}

pub fn parseval(corr: &CorrelationCurve, variance: f64) -> Result<ParsevalReport> {
    let spec = full_band_spectrum(corr, variance)?;
    let df = spec.f[1] - spec.f[0];
    let sum = spec.values.iter().sum::<f64>() * df;
    let expected = variance * corr.values[0];
    Ok(ParsevalReport {
        sum,
        expected,
        relative_error: ((sum - expected) / expected).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrfn::{CorrelationModel, CorrelationMeta};
    use crate::grid::uniform_delays;
    use crate::physcore::BeamGeometry;
    use crate::quad::Tolerance;
    use crate::spectrum::{fwhm, lorentzian_reference};
    use approx::assert_relative_eq;

    fn geometry(w0: f64) -> BeamGeometry {
        BeamGeometry::new(w0, 795e-9, 15e-3).unwrap()
    }

    /// Pure damped precession, C_d = 1.
    fn bare_curve(f_l: f64, t2: f64, dt: f64) -> CorrelationCurve {
        let tau = uniform_delays(dt, 10.0 * t2).unwrap();
        let values = tau
            .iter()
            .map(|&t| (2.0 * PI * f_l * t).cos() * (-t / t2).exp())
            .collect();
        CorrelationCurve {
            tau,
            values,
            model: CorrelationModel::CollimatedLimit,
            meta: CorrelationMeta {
                geometry: geometry(1e-3),
                diffusion: 1e-4,
                larmor_frequency: Some(f_l),
                t2: Some(t2),
            },
            error_bounds: None,
        }
    }

    #[test]
    fn damped_cosine_gives_lorentzian_pair() {
        let (f_l, t2) = (20e3, 1e-3);
        let grid = metrology_grid(f_l, 3e3, 3001);
        let dt = default_transform_step(f_l + 3e3, 1.0);
        let spec = spectrum_numeric(&bare_curve(f_l, t2, dt), &grid, 1.0, TransformOptions::default()).unwrap();
        let exact = lorentzian_reference(&grid, f_l, t2, 1.0).unwrap();
        let peak = exact.peak().unwrap().1;
        for (a, b) in spec.values.iter().zip(&exact.values) {
            assert!((a - b).abs() < 0.01 * peak, "{a} vs {b}");
        }
        assert_relative_eq!(fwhm(&spec).unwrap(), 1.0 / (PI * t2), max_relative = 0.01);
    }

    #[test]
    fn two_sided_symmetric_and_one_sided_flag() {
        let (f_l, t2) = (5e3, 2e-3);
        let grid = linspace(-8e3, 8e3, 801);
        let curve = bare_curve(f_l, t2, default_transform_step(8e3, 1.0));
        let two = spectrum_numeric(&curve, &grid, 1.0, TransformOptions::default()).unwrap();
        let one = spectrum_numeric(&curve, &grid, 1.0, TransformOptions { one_sided: true }).unwrap();
        let n = grid.len();
        let peak = two.peak().unwrap().1;
        for k in 0..n {
            assert!((two.values[k] - two.values[n - 1 - k]).abs() < 1e-12 * peak);
            match grid[k] {
                f if f > 0.0 => assert_eq!(one.values[k], 2.0 * two.values[k]),
                f if f < 0.0 => assert_eq!(one.values[k], 0.0),
                _ => assert_eq!(one.values[k], two.values[k]),
            }
        }
        assert_eq!(one.sidedness, Sidedness::OneSided);
    }

    #[test]
    fn chirp_matches_direct_sum() {
        let geom = geometry(2e-6);
        let d = 2.865e-4;
        let (f_l, t2) = (332e3, 1e-4);
        let dt = 2e-8;
        let tau = uniform_delays(dt, 10.0 * t2).unwrap();
        let corr = CorrelationCurve::diffusion(CorrelationModel::Analytic, &geom, d, &tau, &Tolerance::default())
            .unwrap()
            .with_precession(f_l, t2)
            .unwrap();
        let grid = linspace(-2.4e6, 2.4e6, 257);
        let fast = cosine_transform(&corr.values, dt, &grid);
        let slow = cosine_transform_direct(&corr.values, dt, &grid);
        let peak = slow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9 * peak, "{a} vs {b}");
        }
    }

    #[test]
    fn direct_sum_matches_plain_cosines() {
        let values: Vec<f64> = (0..3000).map(|j| (-(j as f64) / 700.0).exp()).collect();
        let dt = 1e-6;
        let grid = [-1234.5, 0.0, 17.0, 99_999.0];
        let fast = cosine_transform_direct(&values, dt, &grid);
        for (&f, s) in grid.iter().zip(fast) {
            let n = values.len();
            let plain: f64 = values
                .iter()
                .enumerate()
                .map(|(j, &c)| {
                    let w = if j == 0 || j + 1 == n { 1.0 } else { 2.0 };
                    w * c * (2.0 * PI * f * j as f64 * dt).cos()
                })
                .sum::<f64>()
                * dt;
            assert_relative_eq!(s, plain, max_relative = 1e-11, epsilon = 1e-15);
        }
    }

    #[test]
    fn full_band_matches_direct_sum_and_parseval() {
        let (f_l, t2) = (1e3, 1e-3);
        let curve = bare_curve(f_l, t2, 2e-5);
        let full = full_band_spectrum(&curve, 3.0).unwrap();
        let n = curve.tau.len() - 1;
        assert_eq!(full.f.len(), 2 * n);
        let picks: Vec<usize> = (0..full.f.len()).step_by(97).collect();
        let grid: Vec<f64> = picks.iter().map(|&i| full.f[i]).collect();
        let direct = cosine_transform_direct(&curve.values, 2e-5, &grid);
        let peak = full.peak().unwrap().1;
        for (&i, d) in picks.iter().zip(direct) {
            assert!((full.values[i] - 3.0 * d).abs() < 1e-10 * peak);
        }
        let report = parseval(&curve, 3.0).unwrap();
        assert!(report.relative_error < 1e-10, "{report:?}");
        assert_relative_eq!(report.expected, 3.0);
    }

    #[test]
    fn resolution_checks_name_the_bound() {
        let curve = bare_curve(1e3, 1e-3, 1e-5);
        let err = spectrum_numeric(&curve, &[1e4], 1.0, TransformOptions::default()).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("1/(20 f_max)")), "{err}");

        let mut short = curve.clone();
        short.tau.truncate(500);
        short.values.truncate(500);
        let err = spectrum_numeric(&short, &[1e3], 1.0, TransformOptions::default()).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("10 T2")), "{err}");

        let mut bare = curve.clone();
        bare.meta.t2 = None;
        assert!(spectrum_numeric(&bare, &[1e3], 1.0, TransformOptions::default()).is_err());

        let mut uneven = curve;
        uneven.tau[3] *= 1.01;
        assert!(spectrum_numeric(&uneven, &[1e3], 1.0, TransformOptions::default()).is_err());
    }

    #[test]
    fn deterministic_bits() {
        let curve = bare_curve(2e3, 1e-3, 2e-5);
        let grid = linspace(0.0, 2e3, 513);
        let a = spectrum_numeric(&curve, &grid, 1.0, TransformOptions::default()).unwrap();
        let b = spectrum_numeric(&curve, &grid, 1.0, TransformOptions::default()).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn default_grid_and_step() {
        let g = default_frequency_grid(332e3, 1e-3);
        assert!(g.len() >= 4096);
        assert_relative_eq!(g[g.len() / 2], 332e3, max_relative = 1e-12);
        assert_relative_eq!(g[g.len() - 1] - 332e3, 2e6, max_relative = 1e-12);
        let wide = default_frequency_grid(0.0, 1e-8);
        assert_relative_eq!(wide[wide.len() - 1], 10.0 / (2.0 * PI * 1e-8), max_relative = 1e-12);
        assert_relative_eq!(default_transform_step(1e6, 1.0), 5e-8);
        assert_relative_eq!(default_transform_step(1e6, 1e-9), 1e-9);
    }
}
