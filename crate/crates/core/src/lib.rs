//! Gamma white-noise calculus on a finite time partition.
//!
//! The crate works on step functions over a partition of `[0, T]`, where
//! every measure-level formula of the gamma noise is exactly computable:
//!
//! * [`model`]: partitions, step functions, the characteristic functional,
//!   the gamma density and the Lévy triple of the gamma process.
//! * [`sampler`]: two independent gamma-process samplers (exact increments
//!   and truncated compound-Poisson jumps) and Monte Carlo estimators.
//! * [`chaos`]: Laguerre and Appell systems and the orthogonal multi-index
//!   chaos basis.
//! * [`wick`]: truncated chaos elements with the S-transform, Wick product,
//!   inverse, powers and exponential.
//! * [`verhulst`]: the Wick-Verhulst equation driven by gamma noise, solved
//!   in closed form and by integrating the S-coefficient system.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod chaos;
pub mod error;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod verhulst;
pub mod wick;

pub use error::{Error, Result};
pub use model::{LevyTriple, Partition, StepFunction};
pub use chaos::MultiIndex;
pub use wick::{ChaosElement, ChaosSpace};
