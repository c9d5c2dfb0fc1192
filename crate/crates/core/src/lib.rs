//! Polyhedral proximal maps, generalized strips, and certified boundary covers.
//!
//! A polyhedral function `f(x) = max_i (<v_i, x> + c_i)` induces the
//! 1-Lipschitz proximal map `prox_f(x) = argmin_y f(y) + |x - y|^2 / 2`.
//! The *generalized strip* of `f` is the set of points whose proximal image
//! lands on a kink of `f`; its width is tracked by the certified upper bound
//! `2 * lip(f)`. This crate builds such strips, merges them so that a single
//! near-identity map flattens a whole family at once, constructs strip covers
//! of curved and fractal boundaries within a prescribed width budget, and
//! verifies the resulting maps by sampling (contraction, displacement,
//! flattening, measure loss).
//!
//! The crate is `no_std`-compatible (`alloc` required). Enable the `std`
//! feature (default) or the `libm` feature to provide scalar math.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("gstrip-core needs either the `std` or the `libm` feature");

pub mod covers;
pub mod error;
pub mod geom;
pub mod gstrip;
pub mod kolmap;
pub(crate) mod lp;
pub(crate) mod math;
pub mod polyfun;
pub(crate) mod qp;
pub mod setlib;

pub use error::Error;
