//! Numbers with unit suffixes, converted to SI.

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Length,
    Pressure,
    Temperature,
    Frequency,
    Time,
    Diffusivity,
    Density,
    Area,
    Dimensionless,
}

impl Quantity {
    fn describe(self) -> &'static str {
        match self {
            Quantity::Length => "a length (m, cm, mm, um, nm)",
            Quantity::Pressure => "a pressure (torr, mbar, Pa, kPa, atm)",
            Quantity::Temperature => "a temperature (K, C)",
            Quantity::Frequency => "a frequency (Hz, kHz, MHz, GHz, THz)",
            Quantity::Time => "a time (s, ms, us, ns)",
            Quantity::Diffusivity => "a diffusion constant (m2/s, cm2/s)",
            Quantity::Density => "a number density (m-3, cm-3)",
            Quantity::Area => "an area (m2, cm2)",
            Quantity::Dimensionless => "a plain number",
        }
    }

    /// `(scale, offset)` such that `SI = value * scale + offset`.
    fn unit(self, unit: &str) -> Option<(f64, f64)> {
        let scale = match (self, unit) {
            (Quantity::Length, "m") => 1.0,
            (Quantity::Length, "cm") => 1e-2,
            (Quantity::Length, "mm") => 1e-3,
            (Quantity::Length, "um") => 1e-6,
            (Quantity::Length, "nm") => 1e-9,
            (Quantity::Pressure, "Pa") => 1.0,
            (Quantity::Pressure, "kPa") => 1e3,
            (Quantity::Pressure, "mbar") => 100.0,
            (Quantity::Pressure, "torr" | "Torr") => spinoise_core::constants::TORR,
            (Quantity::Pressure, "atm") => 101_325.0,
            (Quantity::Temperature, "K") => 1.0,
            (Quantity::Temperature, "C") => return Some((1.0, spinoise_core::constants::ZERO_CELSIUS)),
            (Quantity::Frequency, "Hz") => 1.0,
            (Quantity::Frequency, "kHz") => 1e3,
            (Quantity::Frequency, "MHz") => 1e6,
            (Quantity::Frequency, "GHz") => 1e9,
            (Quantity::Frequency, "THz") => 1e12,
            (Quantity::Time, "s") => 1.0,
            (Quantity::Time, "ms") => 1e-3,
            (Quantity::Time, "us") => 1e-6,
            (Quantity::Time, "ns") => 1e-9,
            (Quantity::Diffusivity, "m2/s") => 1.0,
            (Quantity::Diffusivity, "cm2/s") => 1e-4,
            (Quantity::Density, "m-3") => 1.0,
            (Quantity::Density, "cm-3") => 1e6,
            (Quantity::Area, "m2") => 1.0,
            (Quantity::Area, "cm2") => 1e-4,
            _ => return None,
        };
        Some((scale, 0.0))
    }
}

/// Splits `"2 um"`, `"2um"` or `"1.5e-3 s"` into number and unit text.
fn split(text: &str) -> Option<(f64, &str)> {
    let text = text.trim();
    let bytes = text.as_bytes();
    let mut end = 0;
    while end < bytes.len() {
        let c = bytes[end] as char;
        let exponent = (c == 'e' || c == 'E')
            && bytes
                .get(end + 1)
                .is_some_and(|&n| (n as char).is_ascii_digit() || n == b'-' || n == b'+');
        if c.is_ascii_digit() || c == '.' || exponent || ((c == '-' || c == '+') && (end == 0 || matches!(bytes[end - 1], b'e' | b'E'))) {
            end += if exponent { 2 } else { 1 };
        } else {
            break;
        }
    }
    let value = text[..end].parse().ok()?;
    Some((value, text[end..].trim()))
}

/// Parses `text` as the given quantity; `key` names the setting in errors.
pub fn parse(key: &str, text: &str, quantity: Quantity) -> Result<f64> {
    let (value, unit) = split(text).ok_or_else(|| CliError::config(format!("{key}: `{text}` is not a number")))?;
    let si = if quantity == Quantity::Dimensionless {
        if !unit.is_empty() {
            return Err(CliError::config(format!("{key}: unexpected unit `{unit}` on a plain number")));
        }
        value
    } else {
        if unit.is_empty() {
            return Err(CliError::config(format!(
                "{key}: `{text}` needs a unit suffix ({})",
                quantity.describe()
            )));
        }
        let (scale, offset) = quantity.unit(unit).ok_or_else(|| {
            CliError::config(format!(
                "{key}: invalid unit `{unit}`, expected {}",
                quantity.describe()
            ))
        })?;
        value * scale + offset
    };
    if !si.is_finite() {
        return Err(CliError::config(format!("{key}: value must be finite")));
    }
    Ok(si)
}

/// Comma-separated list; a unit on the last entry applies to bare entries
/// (`"56.5, 200, 820 torr"`).
pub fn parse_list(key: &str, text: &str, quantity: Quantity) -> Result<Vec<f64>> {
    let items = split_list(text);
    if items.is_empty() {
        return Err(CliError::config(format!("{key}: empty list")));
    }
    items.iter().map(|item| parse(key, item, quantity)).collect()
}

/// Splits a comma list into entries, propagating a trailing unit to bare numbers.
pub fn split_list(text: &str) -> Vec<String> {
    let raw: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let shared_unit = raw.last().and_then(|s| split(s)).map(|(_, u)| u.to_string()).unwrap_or_default();
    raw.iter()
        .map(|s| match split(s) {
            Some((_, "")) if !shared_unit.is_empty() => format!("{s} {shared_unit}"),
            _ => s.to_string(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn converts_common_units() {
        assert_relative_eq!(parse("w0", "2 um", Quantity::Length).unwrap(), 2e-6);
        assert_relative_eq!(parse("w0", "2um", Quantity::Length).unwrap(), 2e-6);
        assert_relative_eq!(parse("p", "760 torr", Quantity::Pressure).unwrap(), 101_325.0);
        assert_relative_eq!(parse("T", "100 C", Quantity::Temperature).unwrap(), 373.15);
        assert_relative_eq!(parse("d", "-50 GHz", Quantity::Frequency).unwrap(), -5e10);
        assert_relative_eq!(parse("D0", "0.159 cm2/s", Quantity::Diffusivity).unwrap(), 1.59e-5);
        assert_relative_eq!(parse("n", "6.12e12 cm-3", Quantity::Density).unwrap(), 6.12e18);
        assert_relative_eq!(parse("s", "5e-15 cm2", Quantity::Area).unwrap(), 5e-19);
        assert_relative_eq!(parse("T2", "1.5e-3 s", Quantity::Time).unwrap(), 1.5e-3);
        assert_relative_eq!(parse("f", "0.34", Quantity::Dimensionless).unwrap(), 0.34);
    }

    #[test]
    fn rejects_bad_units_naming_the_key() {
        let err = parse("geometry.w0", "2 furlongs", Quantity::Length).unwrap_err();
        assert!(err.to_string().contains("geometry.w0") && err.to_string().contains("furlongs"));
        assert_eq!(err.exit_code(), 2);
        assert!(parse("geometry.w0", "2", Quantity::Length).is_err());
        assert!(parse("x", "abc", Quantity::Dimensionless).is_err());
        assert!(parse("x", "3 um", Quantity::Dimensionless).is_err());
        assert!(parse("p", "2 um", Quantity::Pressure).is_err());
    }

    #[test]
    fn lists_share_a_trailing_unit() {
        let v = parse_list("p", "56.5, 200, 500, 820 torr", Quantity::Pressure).unwrap();
        assert_eq!(v.len(), 4);
        assert_relative_eq!(v[0], 56.5 * spinoise_core::constants::TORR);
        let mixed = parse_list("w0", "2 um, 0.5 mm, 1.5 mm", Quantity::Length).unwrap();
        assert_relative_eq!(mixed[1], 5e-4);
        assert!(parse_list("p", " , ", Quantity::Pressure).is_err());
    }
}
