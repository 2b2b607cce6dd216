//! Simulator, scheme verifier and bound calculator for the three-user
//! Wyner-type interference channel with alternating connectivity, where
//! transmitters know only the topology.
//!
//! - [`galois`]: prime-field arithmetic, rank and linear solves.
//! - [`topology`]: the 27-state catalog, converse state sets, distributions.
//! - [`coding`]: joint and separate schemes, decoders, rank-based verifier.
//! - [`simulate`]: scheduling, exact accounting and end-to-end runs.
//! - [`bounds`]: closed-form upper bound and achievable-vs-bound reports.

pub mod bounds;
pub mod coding;
pub mod galois;
pub mod simulate;
pub mod topology;

/// Exact rational used for masses, rates and bounds.
pub type Rational = num::BigRational;
