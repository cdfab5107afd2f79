//! Physical building blocks: probe-beam geometry, buffer-gas diffusion,
//! alkali spin bookkeeping and the integrated Faraday-rotation noise.

mod beam;
mod gas;
mod noise;
mod spin;

pub use beam::BeamGeometry;
pub use gas::{DiffusionDatum, DiffusionRegime, GasConditions};
pub use noise::{
    dispersion_factor, effective_atom_number, rotation_variance, NoiseBudget, OpticalProbe,
};
pub use spin::{sz2_unpolarized, HalfInt, HyperfineLine, SpinSystem};
