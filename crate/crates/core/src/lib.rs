//! Symbol calculus for homogeneous constant-coefficient differential
//! operators: rank classification over the sphere, Moore–Penrose
//! pseudoinverses of symbols, Fourier multipliers on the periodic torus and
//! empirical checks of the estimate
//!
//! ```text
//! ‖D^k(φ − P_A φ)‖_p ≤ C_p ‖A φ‖_p
//! ```
//!
//! together with explicit counterexample families when the rank of the
//! symbol drops.

pub mod cli;
pub mod experiments;
pub mod linalg;
pub mod operator;
pub mod pinv;
pub mod ranklab;
pub mod spectral;
pub mod zoo;

pub use linalg::{ComplexMatrix, ComplexVector};
pub use operator::{MultiIndex, Operator, OperatorError};
pub use ranklab::{RankProfile, Verdict};
