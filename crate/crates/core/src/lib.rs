//! Fractional Ginzburg-Landau energies on one- and two-dimensional lattices.
//!
//! The energy of a field `u : R^n -> [-1, 1]` that is prescribed outside a
//! domain `Omega` is the Gagliardo interaction
//! `K(u; Omega) = (1/2) int int_{R^2n \ (CO x CO)} |u(x) - u(y)|^2 / |x - y|^(n+2s)`
//! plus a double-well potential. Fields are piecewise constant on a regular
//! cell grid; the exterior is described analytically.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod error;
pub mod lattice;
pub mod minimize;
pub mod nonlocal;
pub mod potential;
pub mod quad;
pub mod setgeom;
pub mod sum;

pub use error::{Error, Result};
