//! Budget pacing and bidding for online ad campaigns, with a deterministic
//! auction simulator that runs every controller end to end.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod auctions;
pub mod brand;
pub mod cli;
pub mod common;
pub mod config;
pub mod deepfunnel;
pub mod dogd;
pub mod error;
pub mod evenpacing;
pub mod experiments;
pub mod initbid;
pub mod io;
pub mod mpc;
pub mod pid;
pub mod portfolio;
pub mod shading;
pub mod sim;
pub mod throttle;

pub use error::{Error, Result};
