//! Construction and verification of planar regions whose boundary is an
//! ε-neighbourhood boundary densely packed with corner singularities.
//!
//! The crate has two halves. The analytic half builds radial profiles on
//! `[0, 2π]`: [`rational`] enumerates the rational angles used as jump
//! locations, [`profile`] evaluates the jump function, its integral and the
//! cubic closure term, and [`cantor`] adds a Cantor-function layer whose
//! curvature-failure set has fractal dimension. [`curve`] wraps a profile
//! around the origin into a closed Jordan curve and exports it.
//!
//! The raster half ([`raster`]) verifies that such a curve really bounds an
//! ε-neighbourhood: it rasterizes the region, recovers the underlying set by
//! erosion, dilates it back and measures the Hausdorff gap, and estimates
//! metric-projection multiplicity and reach on the grid.

pub mod cantor;
pub mod curve;
pub mod error;
pub mod profile;
pub mod raster;
pub mod rational;
pub mod rng;

pub use error::{Error, Result};
pub use profile::ProfileValue;
