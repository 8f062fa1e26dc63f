//! Corank and cokernel distributions of random matrices over finite fields
//! and p-adic integers, the reversible Markov chains that generate them,
//! and their spectral analysis.

pub mod chain;
pub mod classgroup;
pub mod error;
pub mod ffmat;
pub mod padic;
pub mod par;
pub mod qseries;
pub mod real;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use real::{Approx, Precision, Real};
