//! Multi-cell massive MIMO link-level simulation with UAV-induced pilot
//! contamination and distributed, detection-based pilot decontamination.
//!
//! The crate is organised bottom-up:
//!
//! * [`topology`] places co-pilot base stations on a hexagonal reuse lattice
//!   and drops one UAV or ground user per cell.
//! * [`channel`] synthesises uniform-circular-array steering vectors, LoS
//!   UAV channels, Rayleigh ground-user channels and path loss.
//! * [`training`] produces the least-squares uplink channel estimate that is
//!   contaminated by same-pilot UAVs.
//! * [`detector`] runs the matched-filter angular spectrum and successive
//!   LoS component detection.
//! * [`pdc`] applies decontamination: ground-user interference removal, the
//!   two-training-block UAV identification, and the genie projection.
//! * [`linklevel`] evaluates MRC / conjugate-precoding SINRs and their
//!   closed-form large-array limits.
//! * [`harness`] drives Monte Carlo trials, CDFs, reports and the CLI.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detector;
mod error;
pub mod harness;
pub mod linklevel;
pub mod pdc;
pub mod topology;
pub mod training;
pub mod vector;

pub use error::{Error, Result};
pub use vector::{ChannelVector, VectorRole, C64};
