//! Numerical estimation of fractal dimensions and their interpolation
//! spectra for finite-resolution point clouds.
//!
//! The crate covers:
//! - box, Assouad and Fourier dimension estimators and a Hausdorff proxy;
//! - the Assouad spectrum, intermediate dimensions and Fourier spectrum;
//! - kernel capacities, equilibrium measures and dimension profiles;
//! - orthogonal-projection sweeps over Grassmannians;
//! - closed-form reference curves and the inequality system that every
//!   estimate must satisfy.
//!
//! All estimators respect the resolution floor declared on a
//! [`PointCloud`]: no scale-dependent quantity is evaluated below it.

pub mod assouad;
pub mod capacity;
pub mod covering;
pub mod curve;
pub mod error;
pub mod fourier;
pub mod geometry;
pub mod intermediate;
pub mod oracles;
pub mod projections;

pub use covering::{BoxDimEstimate, CountCurve, SlopeFit};
pub use curve::SpectrumCurve;
pub use error::{DimlabError, Result};
pub use geometry::{DyadicCube, GeneratorSpec, PointCloud};
