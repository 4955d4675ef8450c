//! Optimal estimation of the coupling constant of a two-mode bilinear
//! interaction `κ(a†b + b†a)`.
//!
//! The crate covers the two-mode Fock space in the `(n, d)` labelling, the
//! Schwinger generators and their block exponentials, the covariant phase
//! measurement, the energy-constrained cost minimization and Monte Carlo
//! sampling of the resulting outcome distribution.

pub mod cli;
pub mod fock;
pub mod optimizer;
pub mod povm;
pub mod schwinger;
pub mod simulate;
