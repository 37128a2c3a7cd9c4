//! Loop-group index theory toolkit: fusion rings, positive-energy modules,
//! super-Sugawara operators, spectral indices and KK-theoretic bookkeeping.

// Matrix and tensor code indexes several arrays with the same loop variable.
#![allow(clippy::needless_range_loop)]

pub mod affine;
pub mod cache;
pub mod error;
pub mod exact;
pub mod fermion;
pub mod index;
pub mod kk;
pub mod lie;
pub mod report;
pub mod scalar;
pub mod sparse;
pub mod sugawara;
pub mod verlinde;

pub use error::{Error, Result};
