//! Vehicle-to-vehicle channel model, max-min SNR power allocation and
//! Age-of-Information analysis.
//!
//! * [`channel`] evaluates per-link SNR under mutual interference and the
//!   resulting transmission delay.
//! * [`allocator`] solves the max-min SNR power allocation problem (uniform,
//!   greedy, genetic, and an exhaustive grid oracle for small scenes).
//! * [`aoi`] turns delays into sampling-grid data ages.
//! * [`metrics`] compares strategies over batches of seeded scenes.
//! * [`proxy`] maps ages to an AP estimate using measured degradation curves.
//! * [`scenario`] loads or synthesizes distance matrices.
//! * [`cli`] wires everything into the `v2v-aoi` command.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocator;
pub mod aoi;
pub mod channel;
pub mod cli;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod proxy;
pub mod scenario;
pub mod seed;

pub use error::{Error, LoadError, Result};
