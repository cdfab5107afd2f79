//! Exponential integral E1 of complex argument in the right half-plane.
//!
//! `E1(s) = int_s^inf e^-x / x dx`. Small arguments (`|s| <= 4`) use the
//! convergent power series, larger ones the continued fraction for the
//! scaled product `e^s E1(s)`, which stays O(1/|s|) where E1 itself would
//! underflow.

use num_complex::Complex64;

use crate::constants::EULER_GAMMA;
use crate::error::{Error, Result};

/// Series / continued-fraction switch point on |s|.
pub const SERIES_RADIUS: f64 = 4.0;

const MAX_TERMS: usize = 200;
const MAX_FRACTION_DEPTH: usize = 100_000;

fn check_domain(s: Complex64) -> Result<()> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::domain(format!("E1 argument must be finite, got {s}")));
    }
    if s.re <= 0.0 {
        return Err(Error::domain(format!("E1 needs Re(s) > 0, got {s}")));
    }
    Ok(())
}

/// E1(s) = -gamma - ln s - sum_{k>=1} (-s)^k / (k k!).
pub fn e1_series(s: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..=MAX_TERMS {
        let kf = k as f64;
        term *= -s / kf;
        let contribution = term / kf;
        sum += contribution;
        if contribution.norm() <= f64::EPSILON * sum.norm() {
            break;
        }
    }
    -EULER_GAMMA - s.ln() - sum
}

/// e^s E1(s) = 1/(s+1- 1/(s+3- 4/(s+5- ...))), modified Lentz evaluation.
pub fn e1_continued_fraction_scaled(s: Complex64) -> Result<Complex64> {
    let tiny = Complex64::new(1e-300, 0.0);
    let mut b = s + 1.0;
    let mut c = Complex64::new(1.0 / 1e-300, 0.0);
    let mut d = b.finv();
    let mut h = d;
    for i in 1..=MAX_FRACTION_DEPTH {
        let fi = i as f64;
        let an = -fi * fi;
        b += 2.0;
        d = an * d + b;
        if d.norm() < 1e-300 {
            d = tiny;
        }
        c = b + an / c;
        if c.norm() < 1e-300 {
            c = tiny;
        }
        d = d.finv();
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            return Ok(h);
        }
    }
    Err(Error::Numeric(format!(
        "E1 continued fraction did not converge at s = {s}"
    )))
}

/// E1(s) for Re(s) > 0.
pub fn exp_e1(s: Complex64) -> Result<Complex64> {
    check_domain(s)?;
    if s.norm() <= SERIES_RADIUS {
        Ok(e1_series(s))
    } else {
        Ok((-s).exp() * e1_continued_fraction_scaled(s)?)
    }
}

/// e^s E1(s) for Re(s) > 0, without overflow for large Re(s).
pub fn exp_scaled_e1(s: Complex64) -> Result<Complex64> {
    check_domain(s)?;
    if s.norm() <= SERIES_RADIUS {
        Ok(s.exp() * e1_series(s))
    } else {
        e1_continued_fraction_scaled(s)
    }
}
