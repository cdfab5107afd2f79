//! Sampling grids for delays and frequencies.

use crate::error::{Error, Result};

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { stop } else { start + step * k as f64 })
                .collect()
        }
    }
}

/// Log-spaced points from `start` to `stop` (both > 0) with a fixed density per decade.
pub fn logspace_per_decade(start: f64, stop: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop > start) || per_decade == 0 {
        return Err(Error::config(format!(
            "log grid needs 0 < start < stop and a positive density, got [{start}, {stop}] x {per_decade}"
        )));
    }
    let decades = (stop / start).log10();
    let n = (decades * per_decade as f64).ceil() as usize + 1;
    Ok(logspace(start, stop, n))
}

/// `n` log-spaced points from `start` to `stop` inclusive.
pub fn logspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    let (a, b) = (start.ln(), stop.ln());
    linspace(a, b, n)
        .into_iter()
        .enumerate()
        .map(|(k, x)| if k == 0 { start } else if k + 1 == n { stop } else { x.exp() })
        .collect()
}

/// Delay grid `0, dt, 2 dt, ..., n dt` covering at least `tau_max`.
pub fn uniform_delays(dt: f64, tau_max: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && tau_max > 0.0) {
        return Err(Error::config("uniform delay grid needs positive step and span"));
    }
    let n = (tau_max / dt).ceil() as usize;
    Ok((0..=n).map(|j| j as f64 * dt).collect())
}

pub fn is_strictly_increasing(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite()) && xs.windows(2).all(|w| w[1] > w[0])
}

/// Step of a uniform grid, or `None` when the spacing varies by more than `rel_tol`.
pub fn uniform_step(xs: &[f64], rel_tol: f64) -> Option<f64> {
    if xs.len() < 2 || !is_strictly_increasing(xs) {
        return None;
    }
    let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    let ok = xs
        .iter()
        .enumerate()
        .all(|(k, &x)| (x - (xs[0] + step * k as f64)).abs() <= rel_tol * step);
    ok.then_some(step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let g = linspace(-1.0, 1.0, 5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(linspace(3.0, 4.0, 1), vec![3.0]);
    }

    #[test]
    fn logspace_density() {
        let g = logspace_per_decade(1e-8, 1e-2, 64).unwrap();
        assert_eq!(g.len(), 6 * 64 + 1);
        assert_eq!(g[0], 1e-8);
        assert_eq!(*g.last().unwrap(), 1e-2);
        assert!(is_strictly_increasing(&g));
        assert!(logspace_per_decade(0.0, 1.0, 10).is_err());
    }

    #[test]
    fn uniform_detection() {
        let g = uniform_delays(0.1, 1.0).unwrap();
        assert_eq!(g.len(), 11);
        assert!((uniform_step(&g, 1e-9).unwrap() - 0.1).abs() < 1e-15);
        assert!(uniform_step(&[0.0, 1.0, 3.0], 1e-9).is_none());
    }
}
