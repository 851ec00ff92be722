//! Numerical toolkit for the resource theory of quantum coherence.
//!
//! The basis is the computational basis `{|0⟩, …, |d−1⟩}` throughout.
//!
//! - [`numerics`]: dense complex matrices, Hermitian eigensolver, PSD roots.
//! - [`states`]: pure states and density matrices, dephasing, sampling.
//! - [`channels`]: Kraus channels, incoherent operations, relabeling unitaries.
//! - [`measures`]: ℓ1, relative entropy, intrinsic randomness, skew information, trivial.
//! - [`mcs`]: maximally coherent states and the channels they feed.
//! - [`harness`]: randomized checks of the monotonicity / maximality criteria.
//! - [`cli`]: the `coherence-lab` command line.

pub mod channels;
pub mod cli;
pub mod error;
pub mod harness;
pub mod mcs;
pub mod measures;
pub mod numerics;
pub mod states;

pub use channels::{IncoherentKrausForm, IncoherentUnitary, KrausChannel};
pub use error::{CoherenceError, Result};
pub use measures::{DiagonalObservable, Measure, OptimizerConfig};
pub use numerics::{ComplexMatrix, HermitianEigen};
pub use states::{DensityMatrix, PureState};
