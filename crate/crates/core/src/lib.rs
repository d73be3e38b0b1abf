//! Graph neural tangent kernels for GCNs on degree-corrected stochastic block models.
//!
//! The crate computes exact NTK matrices (vanilla, Skip-PC, Skip-alpha) for four
//! graph convolutions, closed-form population kernels at finite and infinite depth,
//! block-gap statistics, and kernel-regression node classification.
//!
//! Numerics are generic over [`Real`]; `f64` aliases are exported at the root.

pub mod analysis;
pub mod cli;
pub mod conv;
pub mod dcsbm;
mod error;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod ntk;
pub mod population;
pub mod predict;

pub use error::{Error, Result};

use std::fmt::{Debug, Display, LowerExp};

/// Floating point scalar accepted by every numeric routine (`f32` or `f64`).
pub trait Real:
    nalgebra::RealField
    + Copy
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Send
    + Sync
    + Debug
    + Display
    + LowerExp
    + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("finite literal")
    }

    fn from_count(n: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(n).expect("representable count")
    }

    fn as_f64(self) -> f64 {
        <Self as num_traits::ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// Dense matrix used throughout.
pub type Mat<T> = nalgebra::DMatrix<T>;
/// Dense column vector.
pub type Vector<T> = nalgebra::DVector<T>;

pub type Matrix64 = Mat<f64>;
pub type Matrix32 = Mat<f32>;
pub type DcSbm64 = dcsbm::DcSbmParams<f64>;
pub type DcSbm32 = dcsbm::DcSbmParams<f32>;
pub type Graph64 = dcsbm::Graph<f64>;
pub type Graph32 = dcsbm::Graph<f32>;
pub type Kernel64 = kernel::KernelMatrix<f64>;
pub type Kernel32 = kernel::KernelMatrix<f32>;

pub type PopulationParams64 = population::PopulationParams<f64>;

