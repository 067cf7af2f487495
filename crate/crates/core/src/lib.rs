//! Core library for computing optimal discriminatory retail electricity prices.
//!
//! A retailer buys energy at a wholesale base price and resells it to `N`
//! consumers, quoting each consumer an individual unit price. Consumers react
//! to their quoted price by choosing how much elastic demand to consume (and,
//! when net metering is enabled, how much locally generated energy to sell
//! back). The retailer anticipates those reactions and picks prices that
//! trade off revenue, load flattening, and consumer welfare, subject to a cap
//! on each price and a bound `eta` on how far any two prices may differ.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] — dense matrix/vector kernels and factorizations;
//! * [`qp`] — a self-contained convex quadratic programming solver;
//! * [`consumer`] — closed-form consumer and prosumer best responses;
//! * [`formulations`] — the retailer's pricing problems lowered to QPs,
//!   closed-form optima for the unconstrained case, and a brute-force grid
//!   oracle for small instances;
//! * [`scenario`] — deterministic construction of consumer populations;
//! * [`experiments`] — parameter sweeps producing CSV-ready tables.
//!
//! The crate is `no_std`-compatible (with `alloc`): disable the default
//! `std` feature and enable `libm` instead. File IO, JSON/CSV persistence,
//! and the command-line interface live in the companion `gridprice-cli`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
// The numeric kernels walk several co-indexed arrays per iteration; plain
// index loops are the readable form for them.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("building without `std` requires the `libm` feature");

pub mod consumer;
pub mod experiments;
pub mod formulations;
pub mod linalg;
pub mod qp;
pub mod scenario;

pub(crate) mod math {
    #[cfg(feature = "std")]
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }

    #[cfg(not(feature = "std"))]
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }

    #[cfg(feature = "std")]
    #[inline]
    pub fn hypot(x: f64, y: f64) -> f64 {
        x.hypot(y)
    }

    #[cfg(not(feature = "std"))]
    #[inline]
    pub fn hypot(x: f64, y: f64) -> f64 {
        libm::hypot(x, y)
    }
}
