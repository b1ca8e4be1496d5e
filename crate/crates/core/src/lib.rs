//! Time-inhomogeneous random walks on graphs with time-varying conductances:
//! exact kernels, evolving measures, isoperimetric profiles and numerical
//! checks of on-diagonal, Gaffney, Harnack and Gaussian heat-kernel bounds.

pub mod error;
pub mod experiments;
pub mod fit;
pub mod geometry;
pub mod graphs;
pub mod heat_checks;
pub mod kernels;
pub mod linalg;
pub mod nash_bounds;
pub mod profiles;
pub mod scalar;

pub use error::{Error, ErrorClass, Result};
pub use scalar::Scalar;

/// Default scalar for every model-level quantity.
pub type Real = f64;
pub type Matrix = linalg::DenseMatrix<Real>;
pub type Matrix32 = linalg::DenseMatrix<f32>;
pub type Kernel64 = kernels::Kernel<f64>;
pub type Kernel32 = kernels::Kernel<f32>;
