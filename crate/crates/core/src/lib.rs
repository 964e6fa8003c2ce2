//! Relative capacity on Wiener space.
//!
//! This crate holds the pure numerical machinery: Kolmogorov ε-entropy of
//! subsets of `[0, 1]`, small-ball probabilities of the sup-norm, exact
//! sampling of the Ornstein–Uhlenbeck process on path space through slices of
//! a Brownian sheet, Monte Carlo estimators of hitting probabilities and
//! relative capacities, and integral-test classification of lower functions.
//!
//! Everything here is `no_std` + `alloc`. Replicate-level parallelism is
//! abstracted behind [`capacity::ReplicateRunner`]; the companion `relcap-lab`
//! crate supplies a threaded runner together with the command-line front end
//! and file formats.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod capacity;
pub mod error;
pub mod integral;
pub mod lower;
pub mod paths;
pub mod quad;
pub mod rng;
pub mod sets;
pub mod smallball;
pub mod stats;

pub use capacity::{
    CapacityReport, CountingStats, EventSpec, McConfig, McEstimate, ReplicateRunner, Sequential,
};
pub use error::{Error, Result};
pub use integral::{PsiResult, Verdict};
pub use lower::LowerFunctionSpec;
pub use paths::{ConfinementRegion, OuEnsemble, SupCorrection, TimeGrid};
pub use rng::RngStream;
pub use sets::{DimensionEstimate, EntropyProfile, SetModel, SetSpec};
pub use smallball::{sigma_asymptotic, sigma_series, SmallBallValue};
