//! Label-based scheduling of scientific workflow tasks on heterogeneous
//! clusters.
//!
//! [`profiler`] groups nodes by benchmark similarity and ranks the groups,
//! [`monitor`] turns task traces into per-feature labels, [`allocator`]
//! matches task labels to group labels (plus four baseline policies), and
//! [`simulator`] replays workflows on a modeled cluster. [`harness`] runs
//! scheduler comparisons over seeds.

pub mod allocator;
pub mod error;
pub mod harness;
pub mod model;
pub mod monitor;
pub mod presets;
pub mod profiler;
pub mod simulator;

pub use error::{Error, Result};
