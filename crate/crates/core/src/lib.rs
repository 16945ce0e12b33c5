//! Correlation-filter single-object tracking with selective background context.
//!
//! The tracker learns a ridge-regression correlation filter in the Fourier
//! domain, regularizes it with the one background patch nearest to a coarse
//! prediction, optionally reshapes it with a Wiener or constrained
//! least-squares restoration term, and anchors it to the first-frame target
//! appearance. The crate also carries an OTB-style evaluation toolkit.

pub mod context;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod filter;
pub mod geometry;
pub mod sequence;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::BBox;
