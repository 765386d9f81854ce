//! Simulated skyrmion-texture reservoir computing.
//!
//! A film of unit spins (the [`texture`] model) stands in for a Hall-bar
//! device. A time-dependent out-of-plane field drives it, the mean
//! out-of-plane magnetisation under the Hall cross is read as a voltage, and
//! several such subsections biased by different constant fields form the
//! reservoir ([`harness`]). Only a linear [`readout`] is trained. The
//! [`analysis`] module characterises textures and reservoir outputs.
//!
//! Numerical kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the `f64` instantiations used by the pipeline.

pub mod analysis;
pub mod backend;
pub mod encoding;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod pipeline;
pub mod readout;
pub mod rng;
pub mod scalar;
pub mod texture;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Vec3 = texture::Vec3<f64>;
pub type SpinLattice = texture::SpinLattice<f64>;
pub type MaterialParams = texture::MaterialParams<f64>;
pub type Matrix = matrix::Matrix<f64>;
pub type ReadoutWeights = readout::ReadoutWeights<f64>;

pub type SpinLattice32 = texture::SpinLattice<f32>;
pub type MaterialParams32 = texture::MaterialParams<f32>;
pub type Matrix32 = matrix::Matrix<f32>;
