use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-negative integer or half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "f64", try_from = "f64")]
pub struct HalfInt(u32);

impl HalfInt {
    pub const fn from_twice(twice: u32) -> Self {
        HalfInt(twice)
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl From<HalfInt> for f64 {
    fn from(h: HalfInt) -> f64 {
        h.value()
    }
}

impl TryFrom<f64> for HalfInt {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        let twice = 2.0 * v;
        if !(twice >= 0.0 && twice.fract() == 0.0 && twice <= f64::from(u32::MAX)) {
            return Err(Error::domain(format!("{v} is not a non-negative half-integer")));
        }
        Ok(HalfInt(twice as u32))
    }
}

impl FromStr for HalfInt {
    type Err = Error;

    /// Accepts `5/2`, `3` or `1.5`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("bad half-integer `{s}`")))?;
            return match den.trim() {
                "2" if num % 2 == 1 => Ok(HalfInt(num)),
                "1" => Ok(HalfInt(2 * num)),
                _ => Err(Error::domain(format!("bad half-integer `{s}`"))),
            };
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::domain(format!("bad half-integer `{s}`")))?;
        HalfInt::try_from(v)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// One ground-state hyperfine level and its optical resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperfineLine {
    /// Total angular momentum F = I +/- 1/2.
    pub f: HalfInt,
    /// Optical resonance frequency from this level [Hz].
    pub resonance: f64,
}

/// One alkali isotope in the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    pub label: String,
    pub nuclear_spin: HalfInt,
    pub lines: Vec<HyperfineLine>,
    /// Isotopic abundance fraction in (0, 1].
    pub abundance: f64,
    /// Total alkali number density [m^-3]; the isotope sees `abundance * density`.
    pub density: f64,
    /// Larmor frequency f_L [Hz].
    pub larmor_frequency: f64,
    /// Transverse relaxation time T2 [s].
    pub t2: f64,
    /// Optical resonance half-width Gamma [Hz].
    pub optical_half_width: Option<f64>,
    /// Oscillator strength of the probed transition.
    pub oscillator_strength: Option<f64>,
}

impl SpinSystem {
    /// Number density of this isotope [m^-3].
    pub fn partial_density(&self) -> f64 {
        self.abundance * self.density
    }

    pub fn validate(&self) -> Result<()> {
        let i2 = self.nuclear_spin.twice();
        if i2 % 2 == 0 {
            // an integer nuclear spin would make F integer-shifted; alkali I are half-integers
            return Err(Error::domain(format!(
                "{}: nuclear spin must be a half-integer, got {}",
                self.label, self.nuclear_spin
            )));
        }
        for line in &self.lines {
            let f2 = line.f.twice();
            if f2 + 1 != i2 && f2 != i2 + 1 {
                return Err(Error::domain(format!(
                    "{}: F = {} is not I +/- 1/2 for I = {}",
                    self.label, line.f, self.nuclear_spin
                )));
            }
        }
        if !(self.abundance > 0.0 && self.abundance <= 1.0) {
            return Err(Error::domain(format!("{}: abundance must lie in (0, 1]", self.label)));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::domain(format!("{}: density must be positive", self.label)));
        }
        if !(self.t2 > 0.0 && self.t2.is_finite()) {
            return Err(Error::domain(format!("{}: T2 must be positive", self.label)));
        }
        if !self.larmor_frequency.is_finite() {
            return Err(Error::domain(format!("{}: Larmor frequency must be finite", self.label)));
        }
        if let Some(g) = self.optical_half_width {
            if !(g > 0.0) {
                return Err(Error::domain(format!("{}: optical half-width must be positive", self.label)));
            }
        }
        Ok(())
    }
}

/// Spin variance <s_z^2>_F of an unpolarized atom in hyperfine level F:
/// the population fraction of F, the projection factor (s_z/F_z)^2 and
/// <F_z^2> = F(F+1)/3.
pub fn sz2_unpolarized(nuclear_spin: HalfInt, f: HalfInt) -> Result<f64> {
    let i2 = nuclear_spin.twice();
    let f2 = f.twice();
    if i2 % 2 == 0 || (f2 + 1 != i2 && f2 != i2 + 1) {
        return Err(Error::domain(format!(
            "F = {f} is not I +/- 1/2 for I = {nuclear_spin}"
        )));
    }
    let i = nuclear_spin.value();
    let fv = f.value();
    let mult = 2.0 * i + 1.0;
    let fraction = (2.0 * fv + 1.0) / (2.0 * mult);
    Ok(fraction * (fv * (fv + 1.0) / 3.0) / (mult * mult))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn h(s: &str) -> HalfInt {
        s.parse().unwrap()
    }

    #[test]
    fn parse_half_integers() {
        assert_eq!(h("5/2").twice(), 5);
        assert_eq!(h("3").twice(), 6);
        assert_eq!(h("1.5").twice(), 3);
        assert!("4/2".parse::<HalfInt>().is_err());
        assert!("-1/2".parse::<HalfInt>().is_err());
        assert!("0.3".parse::<HalfInt>().is_err());
        assert_eq!(h("7/2").to_string(), "7/2");
        assert_eq!(h("2").to_string(), "2");
    }

    #[test]
    fn rb85_values() {
        assert_relative_eq!(sz2_unpolarized(h("5/2"), h("3")).unwrap(), 7.0 / 108.0, max_relative = 1e-15);
        assert_relative_eq!(sz2_unpolarized(h("5/2"), h("2")).unwrap(), 5.0 / 216.0, max_relative = 1e-15);
        assert_relative_eq!(sz2_unpolarized(h("1/2"), h("1")).unwrap(), 1.0 / 8.0, max_relative = 1e-15);
    }

    #[test]
    fn invalid_f_rejected() {
        assert!(sz2_unpolarized(h("5/2"), h("1")).is_err());
        assert!(sz2_unpolarized(h("5/2"), h("4")).is_err());
        assert!(sz2_unpolarized(h("2"), h("5/2")).is_err());
    }

    /// Angular-momentum matrices (Jz, J+) for spin j in the |j, m> basis, m descending.
    fn spin_matrices(twice_j: u32) -> (DMatrix<f64>, DMatrix<f64>) {
        let dim = twice_j as usize + 1;
        let j = f64::from(twice_j) / 2.0;
        let mut jz = DMatrix::zeros(dim, dim);
        let mut jp = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let m = j - k as f64;
            jz[(k, k)] = m;
            if k > 0 {
                // <m+1| J+ |m>
                jp[(k - 1, k)] = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
            }
        }
        (jz, jp)
    }

    /// Tr[rho (P_F s_z P_F)^2] for the maximally mixed ground state, built from
    /// the uncoupled electron x nucleus basis and an exact diagonalisation of F^2.
    fn brute_force_sz2(twice_i: u32, twice_f: u32) -> f64 {
        let (sz, sp) = spin_matrices(1);
        let (iz, ip) = spin_matrices(twice_i);
        let ni = iz.nrows();
        let e_i = DMatrix::<f64>::identity(ni, ni);
        let e_s = DMatrix::<f64>::identity(2, 2);
        let sz_full = sz.kronecker(&e_i);
        let fz = &sz_full + e_s.kronecker(&iz);
        let fp = sp.kronecker(&e_i) + e_s.kronecker(&ip);
        let fm = fp.transpose();
        let f2 = &fz * &fz + 0.5 * (&fp * &fm + &fm * &fp);
        let eig = f2.symmetric_eigen();
        let f = f64::from(twice_f) / 2.0;
        let target = f * (f + 1.0);
        let dim = 2 * ni;
        let mut proj = DMatrix::<f64>::zeros(dim, dim);
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if (lambda - target).abs() < 1e-8 {
                let v = eig.eigenvectors.column(k);
                proj += &v * v.transpose();
            }
        }
        let projected = &proj * &sz_full * &proj;
        (&projected * &projected).trace() / dim as f64
    }

    #[test]
    fn matches_angular_momentum_trace() {
        for twice_i in [3u32, 5] {
            let mut total = 0.0;
            let mut total_bf = 0.0;
            for twice_f in [twice_i - 1, twice_i + 1] {
                let formula = sz2_unpolarized(HalfInt::from_twice(twice_i), HalfInt::from_twice(twice_f)).unwrap();
                let bf = brute_force_sz2(twice_i, twice_f);
                assert_relative_eq!(formula, bf, max_relative = 1e-10);
                total += formula;
                total_bf += bf;
            }
            assert!(total > 0.0 && total < 0.25);
            assert_relative_eq!(total, total_bf, max_relative = 1e-10);
        }
    }

    #[test]
    fn sums_over_both_levels() {
        // I = 3/2: (5/8)(1/16)(2) + (3/8)(1/16)(2/3) = 5/64 + 1/64
        let i = HalfInt::from_twice(3);
        let s = sz2_unpolarized(i, HalfInt::from_twice(4)).unwrap()
            + sz2_unpolarized(i, HalfInt::from_twice(2)).unwrap();
        assert_relative_eq!(s, 6.0 / 64.0, max_relative = 1e-15);
        // I = 5/2: 7/108 + 5/216 = 19/216
        let i = HalfInt::from_twice(5);
        let s = sz2_unpolarized(i, HalfInt::from_twice(6)).unwrap()
            + sz2_unpolarized(i, HalfInt::from_twice(4)).unwrap();
        assert_relative_eq!(s, 19.0 / 216.0, max_relative = 1e-15);
    }
}
