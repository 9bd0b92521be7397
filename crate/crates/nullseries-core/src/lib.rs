//! Numerical lab for null trigonometric series built on random Cantor sets.
//!
//! The pipeline runs `weights` → `cantor` → `profile` → `harmonic` → `pla`:
//! a weight ω fixes the thickness schedule of a randomized Cantor set, the
//! profiles g_n hang integrable singularities off the contiguous intervals,
//! and F = exp(G + iG̃) yields a series c(n) = f̂(n) − F̂(n) that is nonzero yet
//! sums to zero off the set. `uniqueness` carries the opposite side: harmonic
//! measure by walk-on-spheres, the truncation lemma and the ε_k recursion audit.
//!
//! Everything here is `no_std` with `alloc`; IO lives in the companion crate.

#![no_std]
#![warn(missing_docs)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod cantor;
/// Error type shared by all modules.
pub mod error;
pub mod fft;
pub mod harmonic;
pub mod jet;
pub mod pla;
pub mod profile;
pub mod quad;
pub mod rng;
pub mod uniqueness;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64;
