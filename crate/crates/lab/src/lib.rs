//! Experiment driver for `relcap`: threaded replicate runner, config files,
//! run directories with manifests, and the command implementations behind the
//! `relcap` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod shorthand;

pub use relcap;
