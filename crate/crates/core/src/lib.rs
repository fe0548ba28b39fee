//! Discretized generalized Besov-type and Triebel-Lizorkin-type function spaces.
//!
//! Functions live on a uniform grid over a box in R^n (n = 1, 2). On top of
//! that sit Littlewood-Paley systems and Peetre maximal functions, pluggable
//! quasi-normed lattices (Lebesgue, Morrey, Orlicz, Herz, variable exponent,
//! amalgam, ...), weight classes, the mixed sequence norms, and the equivalent
//! characterizations of the resulting space norms (local means, atoms,
//! wavelets, differences, oscillations).

pub mod battery;
pub mod decompositions;
pub mod diffosc;
pub mod error;
pub mod fft;
pub mod grid;
pub mod kernels;
pub mod norms;
pub mod sequence;
pub mod spaces;
pub mod stats;
pub mod wavelets;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{BoxDomain, DyadicCube, GridFunction, ScaleWindow};
pub use kernels::LpSystem;
pub use norms::{Scale, SpaceSpec};
pub use sequence::{MixKind, SequenceField};
pub use spaces::FundamentalSpace;
pub use wavelets::{FilterBank, FilterBank32, FilterBank64};
pub use weights::WeightModel;

/// Crate version recorded in run logs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex sample type used by every grid function.
pub type C64 = num_complex::Complex64;
