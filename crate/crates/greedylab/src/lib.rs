//! Measurement toolkit for thresholding greedy approximation in quasi-Banach
//! sequence spaces: quasi-norm evaluators, the greedy operator family,
//! democracy and Lebesgue profiles, lattice convexity probes, a constructive
//! K-fold marriage solver, and a reproducible experiment harness.

pub mod convexity;
pub mod democracy;
pub mod error;
pub mod greedy;
pub mod hardy;
pub mod harness;
pub mod matching;
pub mod numutil;
pub mod sampler;
pub mod spaces;
pub mod vector;

pub use error::{Error, Result};
pub use vector::{CoefficientVector, Scalar};
