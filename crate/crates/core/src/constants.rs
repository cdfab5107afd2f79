//! Physical constants (CODATA 2018) and unit conversion factors.

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Classical electron radius [m].
pub const CLASSICAL_ELECTRON_RADIUS: f64 = 2.817_940_326_2e-15;

/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// One Torr in pascal (101325/760).
pub const TORR: f64 = 101_325.0 / 760.0;

/// Offset between the Celsius and Kelvin scales.
pub const ZERO_CELSIUS: f64 = 273.15;

/// One cm^2/s in m^2/s.
pub const CM2_PER_S: f64 = 1e-4;
