use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::exp_scaled_e1;

/// A parameter of the lineshape models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    T2,
    Amplitude,
    LarmorFrequency,
    Waist,
    Diffusion,
}

impl Param {
    pub const ALL: [Param; 5] = [
        Param::T2,
        Param::Amplitude,
        Param::LarmorFrequency,
        Param::Waist,
        Param::Diffusion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::T2 => "t2",
            Param::Amplitude => "amplitude",
            Param::LarmorFrequency => "larmor_frequency",
            Param::Waist => "waist",
            Param::Diffusion => "diffusion",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl std::str::FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown fit parameter `{s}`")))
    }
}

/// Complete parameter vector of a lineshape; `amplitude` is <phi^2> [rad^2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub t2: f64,
    pub amplitude: f64,
    pub larmor_frequency: f64,
    pub waist: f64,
    pub diffusion: f64,
}

impl ParamSet {
    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::T2 => self.t2,
            Param::Amplitude => self.amplitude,
            Param::LarmorFrequency => self.larmor_frequency,
            Param::Waist => self.waist,
            Param::Diffusion => self.diffusion,
        }
    }

    pub fn set(&mut self, p: Param, v: f64) {
        match p {
            Param::T2 => self.t2 = v,
            Param::Amplitude => self.amplitude = v,
            Param::LarmorFrequency => self.larmor_frequency = v,
            Param::Waist => self.waist = v,
            Param::Diffusion => self.diffusion = v,
        }
    }
}

/// Lineshapes available for fitting; they evaluate exactly as the
/// corresponding spectrum functions (Lorentzian pair, single-peak closed forms).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardModel {
    Lorentzian,
    Collimated,
    Focused,
}

impl ForwardModel {
    /// Parameters the model depends on.
    pub fn params(self) -> &'static [Param] {
        match self {
            ForwardModel::Lorentzian => &[Param::T2, Param::Amplitude, Param::LarmorFrequency],
            _ => &Param::ALL,
        }
    }

    pub fn evaluate(self, f: f64, p: &ParamSet) -> Result<f64> {
        self.value_and_gradient(f, p).map(|(v, _)| v)
    }

    /// Value and partial derivatives, indexed like [`Param::ALL`].
    pub fn value_and_gradient(self, f: f64, p: &ParamSet) -> Result<(f64, [f64; 5])> {
        let mut g = [0.0; 5];
        let value = match self {
            ForwardModel::Lorentzian => {
                let (t, a) = (p.t2, p.amplitude);
                let line = |u: f64| {
                    let x = 2.0 * PI * u * t;
                    let den = 1.0 + x * x;
                    let value = t / den;
                    let d_t = (1.0 - x * x) / (den * den);
                    let d_u = -2.0 * (2.0 * PI * t).powi(2) * t * u / (den * den);
                    (value, d_t, d_u)
                };
                let (v1, t1, u1) = line(f - p.larmor_frequency);
                let (v2, t2, u2) = line(f + p.larmor_frequency);
                g[Param::T2.index()] = a * (t1 + t2);
                g[Param::Amplitude.index()] = v1 + v2;
                g[Param::LarmorFrequency.index()] = a * (u2 - u1);
                a * (v1 + v2)
            }
            ForwardModel::Collimated => {
                let q = p.waist * p.waist / (4.0 * p.diffusion);
                let rate = Complex64::new(1.0 / p.t2, 2.0 * PI * (f - p.larmor_frequency));
                let s = q * rate;
                let e = exp_scaled_e1(s)?;
                let de = e - 1.0 / s;
                let a = p.amplitude;
                let value = 2.0 * a * q * e.re;
                let d_q = 2.0 * a * (e + s * de).re;
                g[Param::T2.index()] = 2.0 * a * q * (de * (-q / (p.t2 * p.t2))).re;
                g[Param::Amplitude.index()] = 2.0 * q * e.re;
                g[Param::LarmorFrequency.index()] = 2.0 * a * q * (de * Complex64::new(0.0, -2.0 * PI * q)).re;
                g[Param::Waist.index()] = d_q * 2.0 * q / p.waist;
                g[Param::Diffusion.index()] = -d_q * q / p.diffusion;
                value
            }
            ForwardModel::Focused => {
                let rate = Complex64::new(1.0 / p.t2, 2.0 * PI * (f - p.larmor_frequency));
                let pref = p.waist / p.diffusion.sqrt() * PI.sqrt();
                let root = rate.sqrt();
                let shape = 1.0 / root;
                let d_rate = -0.5 * shape / rate;
                let a = p.amplitude;
                let value = a * pref * shape.re;
                g[Param::T2.index()] = a * pref * (d_rate * (-1.0 / (p.t2 * p.t2))).re;
                g[Param::Amplitude.index()] = pref * shape.re;
                g[Param::LarmorFrequency.index()] = a * pref * (d_rate * Complex64::new(0.0, -2.0 * PI)).re;
                g[Param::Waist.index()] = value / p.waist;
                g[Param::Diffusion.index()] = -0.5 * value / p.diffusion;
                value
            }
        };
        Ok((value, g))
    }
}
