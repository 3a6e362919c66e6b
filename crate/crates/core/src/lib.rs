//! Pointwise ergodic theory on finite atomic measure spaces.
//!
//! The crate models (possibly truncated) measure spaces as weighted atoms and
//! provides:
//!
//! * non-increasing rearrangements, Hardy-Littlewood majorization and the
//!   symmetric norms built on them ([`measure_space`]);
//! * Dunford-Schwartz operators in kernel and composition form, with
//!   contraction certificates, linear modulus and weighted adjoints
//!   ([`operators`]);
//! * streaming Cesàro and weighted averages ([`averaging`]) driven by bounded
//!   weight sequences ([`weights`]);
//! * Wiener-Wintner sweeps and return-times averages ([`return_times`]);
//! * the alternating-block operator whose averages of a non-vanishing
//!   rearrangement fail to converge ([`counterexample`]).
//!
//! Operators, weight sequences and norms are selected by name through the
//! registries in [`registry`], which is how JSON descriptions are turned into
//! trait objects.

pub mod averaging;
pub mod counterexample;
pub mod descriptors;
pub mod error;
pub mod measure_space;
pub mod operators;
pub mod registry;
pub mod return_times;
pub mod weights;

mod numeric;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
