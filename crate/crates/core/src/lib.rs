//! Multi-source coflow scheduling on multi-hop edge networks.
//!
//! Every flow of a coflow can be fetched from one of several sources, each
//! with its own release time and routed path; at most one flow occupies a
//! link at a time. The crate generates random instances, schedules them with
//! the SCASA heuristic and a set of baselines, evaluates and validates the
//! resulting sum of coflow completion times and runs parameter sweeps.

pub mod benchmarks;
pub mod cli;
pub mod error;
pub mod harness;
pub mod instance;
pub mod io;
pub mod scasa;
pub mod schedule;

pub use error::{Error, Result};
