//! Quantum reliability for open-system storage: projector-valued
//! structure functions over component survival events, trajectory weights
//! of survival/failure histories, iterated-projection reliability curves,
//! and the lifetime record of a measurement counter coupled to the
//! system, with the three-qubit flip-code worked end to end.
//!
//! Module map:
//! - [`numkernel`]: dense complex linear algebra (products, Kronecker,
//!   partial trace, matrix exponential, Hermitian eigendecomposition).
//! - [`events`]: survival projectors, the structure-function DSL and its
//!   compiler, the flip-code survival projector.
//! - [`dynamics`]: thermal-qubit Lindblad models and superoperator maps.
//! - [`histories`]: chain kets, trajectory weights, consistency checks,
//!   Markov reliability curves and failure weights.
//! - [`apparatus`]: counter measurement operators, apparatus density
//!   matrices, lifetime statistics, failure rate, entropies.
//! - [`flipcode`]: closed-form analytics, FT/NFT classification and
//!   parameter scans for flip-code storage.

pub mod apparatus;
pub mod dynamics;
pub mod error;
pub mod events;
pub mod flipcode;
pub mod histories;
pub mod numkernel;

pub use error::{Error, Result};
pub use num_complex::Complex64;
