//! Numerical core for invariant metrics on explicit bounded domains.
//!
//! Everything here is a pure function of its inputs and works without `std`
//! (an allocator is required). The companion `metriclab` crate adds the
//! command-line runner, configuration files and report writers.

#![no_std]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;

pub mod bergman;
pub mod domain;
pub mod error;
pub mod extremal;
pub mod fan;
pub mod form;
pub mod hyperdual;
pub mod linalg;
pub mod quadrature;
pub mod socp;
pub mod surface;

pub use num_complex::Complex64 as C64;

pub use bergman::KernelSeries;
pub use domain::{BoundaryFrame, DomainSpec, Variant};
pub use error::{Error, Result};
pub use form::HermitianForm;
pub use domain::{Direction, Point};
