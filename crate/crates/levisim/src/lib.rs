//! Planning and simulation of pulsed squared-position measurements on an
//! optically levitated nanosphere: cavity and decoherence rates, closed-form
//! Gaussian moment evolution, pulse planning with operational slit bounds,
//! and grid-based wavefunction simulation of the resulting interference.

pub mod gaussian;
pub mod manifest;
pub mod params;
pub mod protocol;
pub mod rates;
pub mod wavesim;
