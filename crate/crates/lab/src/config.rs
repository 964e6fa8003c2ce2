//! Serializable experiment configurations. A run is a pure function of its
//! config, so a manifest carrying the config is enough to reproduce it.

use relcap::smallball::Inequality;
use relcap::{LowerFunctionSpec, McConfig, SetSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Entropy(EntropyConfig),
    Smallball(SmallballConfig),
    Capacity(CapacityConfig),
    Liltest(LiltestConfig),
    Audit(AuditConfig),
    Simulate(SimulateConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyConfig {
    pub set: SetSpec,
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallballConfig {
    pub radii: Vec<f64>,
    pub tol: f64,
    /// Monte Carlo cross-check on a single Wiener path per replicate.
    pub compare_mc: Option<McConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityConfig {
    pub set: SetSpec,
    pub radii: Vec<f64>,
    pub mc: McConfig,
    /// Re-run each radius at `k + 2` and at half the s-mesh.
    #[serde(default)]
    pub audit_discretization: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LilMode {
    /// Quasi-sure test.
    Qs,
    /// Almost-sure test.
    As,
    /// `ψ_H(G)` for the given set.
    Set,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiltestConfig {
    pub h: LowerFunctionSpec,
    pub mode: LilMode,
    pub set: Option<SetSpec>,
    /// Horizons as `ln ln T`; empty means a default doubling grid.
    pub horizons: Vec<f64>,
    /// Number of Erdős blocks for the sum–integral comparison.
    pub sum_blocks: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub inequality: Inequality,
    pub lo: u64,
    pub hi: u64,
    pub h: LowerFunctionSpec,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub mc: McConfig,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Experiment {
    /// `P{U*_s ≤ r, U*_{s+gap} ≤ r}` across gaps.
    Joint { s: f64, gaps: Vec<f64>, r: f64 },
    /// Moments of the confined-slice count over Kolmogorov points.
    Counting { set: SetSpec, radii: Vec<f64> },
    /// Hitting probability over `[0, r⁶]`.
    ShortWindow { radii: Vec<f64>, slices: usize },
    /// Capacity relative to `[0, horizon]` against `[0, 1]`.
    Window { horizon: f64, radii: Vec<f64> },
    /// Planar Brownian confinement across `λ`.
    Planar { lambdas: Vec<f64>, r: f64 },
    /// Raw OU slices for plotting.
    Paths { s_values: Vec<f64>, replicates: u64 },
}

impl ExperimentConfig {
    pub fn command(&self) -> &'static str {
        match self {
            Self::Entropy(_) => "entropy",
            Self::Smallball(_) => "smallball",
            Self::Capacity(_) => "capacity",
            Self::Liltest(_) => "liltest",
            Self::Audit(_) => "audit",
            Self::Simulate(_) => "simulate",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::Smallball(c) => c.compare_mc.map(|m| m.master_seed),
            Self::Capacity(c) => Some(c.mc.master_seed),
            Self::Simulate(c) => Some(c.mc.master_seed),
            _ => None,
        }
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configs always serialize");
        hex::encode(Sha256::digest(&bytes))
    }
}
