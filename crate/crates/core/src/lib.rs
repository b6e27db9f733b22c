//! Renewal measures of transient Markov chains on the real line.
//!
//! The crate computes `U(B) = sum_n P{X_n in B}` for asymptotically
//! space-homogeneous chains, exactly (with certified truncation brackets) for
//! lattice chains and by Monte Carlo otherwise, and checks the quantities that
//! govern its tail behaviour: drift, domination certificates, the uniform
//! visit bounds `(A+h)/(eps delta)`, and the limiting density `p0 / E xi`.

pub mod chain;
pub mod conditions;
pub mod error;
pub mod exact;
pub mod law;
pub mod limit;
pub mod monte_carlo;

pub use chain::{build_chain, ChainName, ChainSpec, MarkovKernel};
pub use error::{Error, Result};
pub use law::{ContinuousLaw, JumpLaw, LatticePmf};
