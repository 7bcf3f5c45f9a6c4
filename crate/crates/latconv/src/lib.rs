//! Convolution powers of finitely supported complex functions on the integer lattice.
//!
//! The crate locates the points where the Fourier symbol has unit modulus, classifies
//! each of them, builds the attractors that govern the local limit, and measures decay,
//! local-limit error, pointwise bounds and stability of `f^(n)`.

pub mod attractor;
pub mod cli;
pub mod error;
pub mod examples;
pub mod expansion;
pub mod fft;
pub mod format;
pub mod homogeneous;
pub mod lattice;
pub mod legendre;
pub mod multiindex;
pub mod sampling;
pub mod symbol;
pub mod verify;

pub use error::{LatconvError, Result};
pub use expansion::{analyze, classify, Classification, SpectralAnalysis, Verdict};
pub use homogeneous::HomogeneousPolynomial;
pub use lattice::{DenseGrid, LatticeBox, LatticeFunction, LatticePoint, PowerConfig, PowerMethod};
pub use num_complex::Complex64;
pub use symbol::SymbolView;
