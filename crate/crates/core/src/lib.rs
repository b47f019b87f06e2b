//! Pseudospectral simulation of stochastic PDEs with pseudo-differential
//! transport noise on the torus.

pub mod config;
pub mod dealias;
pub mod error;
pub mod experiment;
pub mod fft;
pub mod field;
pub mod grid;
pub mod integrator;
pub mod lab;
pub mod models;
pub mod noise;
pub mod psdo;
pub mod snapshot;
pub mod verify;

pub use error::{Error, Result};
pub use field::{RealField, SpectralField};
pub use grid::Grid;
pub use psdo::{Multiplier, Operator, XSymbol};
pub use rustfft::num_complex::Complex64;
