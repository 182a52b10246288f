//! Strongly magnetized Vlasov–Maxwell–Fokker–Planck plasma on a periodic
//! plane, together with its guiding-center drift limit and the diagnostics
//! that compare the two.

pub mod diagnostics;
pub mod error;
pub mod fieldsolve;
pub mod grid;
pub mod harness;
pub mod kinetic;
pub mod limit;
pub mod maxwellian;
pub mod moments;
pub mod params;
pub mod rotation;
pub mod spectral;

pub use error::{Result, VmfpError};
pub use grid::{DistributionField, PerpGrid, ScalarField, VectorField, VelGrid};
pub use params::PlasmaParams;
