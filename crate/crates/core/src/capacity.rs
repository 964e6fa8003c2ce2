//! Monte Carlo hitting probabilities and relative capacities of sup-norm
//! balls.
//!
//! Every estimator draws replicate `i` from `RngStream::new(seed)
//! .with_replicate(i)` and reduces per-replicate integers in replicate order,
//! so results are bit-identical under any [`ReplicateRunner`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{OuChain, SupCorrection, TimeGrid, DEFAULT_RESOLUTION};
use crate::rng::RngStream;
use crate::sets::SetModel;
use crate::smallball::{sigma_series, DEFAULT_TOL};

/// Substream holding the exponential horizon of the capacity estimator.
const HORIZON_SUBSTREAM: u64 = u64::MAX;

/// Maps a function over replicate indices `0..count`, returning results in
/// index order.
pub trait ReplicateRunner {
    fn map<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl ReplicateRunner for Sequential {
    fn map<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..count).map(f).collect()
    }
}

/// The event `{sup_{[0, horizon]} |f| ≤ radius}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub radius: f64,
    #[serde(default = "unit")]
    pub horizon: f64,
}

fn unit() -> f64 {
    1.0
}

impl EventSpec {
    pub fn sup_ball(radius: f64) -> Result<Self> {
        let e = Self { radius, horizon: 1.0 };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius <= 1.0) {
            return Err(Error::InvalidArgument(format!("radius must lie in (0, 1], got {}", self.radius)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::NonPositive { name: "horizon", value: self.horizon });
        }
        Ok(())
    }

    /// Radius for `f*` after Brownian scaling of the horizon to 1.
    pub fn unit_radius(&self) -> f64 {
        self.radius / libm::sqrt(self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub replicates: u64,
    /// Time grid has `2^resolution` cells.
    pub resolution: u32,
    /// Mesh of the s-discretisation; `None` means `r⁶`.
    pub s_mesh: Option<f64>,
    pub master_seed: u64,
    /// Largest number of OU slices per replicate.
    pub max_slices: usize,
    pub correction: SupCorrection,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            replicates: 10_000,
            resolution: DEFAULT_RESOLUTION,
            s_mesh: None,
            master_seed: 0,
            max_slices: 4096,
            correction: SupCorrection::default(),
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 100 {
            return Err(Error::InvalidArgument("at least 100 replicates are required".into()));
        }
        if let Some(m) = self.s_mesh {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::NonPositive { name: "s_mesh", value: m });
            }
        }
        self.grid().map(|_| ())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::new(self.resolution)?.with_correction(self.correction))
    }

    fn mesh_for(&self, r: f64) -> f64 {
        self.s_mesh.unwrap_or_else(|| libm::pow(r, 6.0))
    }
}

/// Binomial proportion with a Wald interval clipped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub replicates: u64,
    pub successes: u64,
}

impl McEstimate {
    pub fn from_counts(successes: u64, replicates: u64) -> Self {
        let n = replicates.max(1) as f64;
        let p = successes as f64 / n;
        let stderr = libm::sqrt(p * (1.0 - p) / n);
        Self {
            value: p,
            stderr,
            ci95: ((p - 1.96 * stderr).max(0.0), (p + 1.96 * stderr).min(1.0)),
            replicates,
            successes,
        }
    }
}

fn slices_for(g: &SetModel, mesh: f64, cap: usize) -> Result<Vec<f64>> {
    if g.is_empty() {
        return Err(Error::EmptySet);
    }
    let k = g.kolmogorov_entropy(mesh)?;
    if k > cap as u64 {
        return Err(Error::ResourceCap(format!("{k} OU slices exceed the cap of {cap}")));
    }
    g.kolmogorov_points(mesh)
}

struct Outcome {
    /// Number of confined slices.
    count: u32,
    /// Some confined slice lies below the exponential horizon.
    early: bool,
}

fn simulate<R: ReplicateRunner>(
    s_values: &[f64],
    r: f64,
    cfg: &McConfig,
    runner: &R,
    with_horizon: bool,
) -> Result<Vec<Outcome>> {
    cfg.validate()?;
    let chain = OuChain::new(s_values, cfg.grid()?)?;
    let base = RngStream::new(cfg.master_seed);
    Ok(runner.map(cfg.replicates, |i| {
        let stream = base.with_replicate(i);
        let mut inside = vec![false; chain.len()];
        let count = chain.confined(stream, r, &mut inside) as u32;
        let early = with_horizon && count > 0 && {
            let e: f64 = Exp1.sample(&mut stream.with_substream(HORIZON_SUBSTREAM).rng());
            s_values.iter().zip(&inside).any(|(s, ok)| *ok && *s <= e)
        };
        Outcome { count, early }
    }))
}

/// `P{∃ s ∈ G_disc : sup_{[0,1]} |U_s| ≤ r}` with `G_disc` the Kolmogorov
/// points of `G` at the configured mesh.
pub fn hit_prob<R: ReplicateRunner>(
    g: &SetModel,
    event: &EventSpec,
    cfg: &McConfig,
    runner: &R,
) -> Result<McEstimate> {
    event.validate()?;
    let r = event.unit_radius();
    let s = slices_for(g, cfg.mesh_for(r), cfg.max_slices)?;
    let out = simulate(&s, r, cfg, runner, false)?;
    Ok(McEstimate::from_counts(out.iter().filter(|o| o.count > 0).count() as u64, cfg.replicates))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub hit: McEstimate,
    pub capacity: McEstimate,
    pub slices: usize,
    pub s_mesh: f64,
    /// `q` in the lower bound `e^{-q}·hit ≤ capacity`.
    pub q: f64,
    /// Standard error of `capacity - e^{-q}·hit` on the shared samples.
    pub lower_gap_stderr: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

impl CapacityReport {
    pub fn sandwich_holds(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Capacity through an exponential horizon `E`: the fraction of replicates
/// with a confined slice at some `s ≤ E`. Hit and capacity share samples.
pub fn capacity<R: ReplicateRunner>(
    g: &SetModel,
    event: &EventSpec,
    cfg: &McConfig,
    runner: &R,
) -> Result<CapacityReport> {
    event.validate()?;
    let r = event.unit_radius();
    let mesh = cfg.mesh_for(r);
    let s = slices_for(g, mesh, cfg.max_slices)?;
    capacity_on(&s, r, mesh, 1.0, cfg, runner)
}

fn capacity_on<R: ReplicateRunner>(
    s: &[f64],
    r: f64,
    mesh: f64,
    q: f64,
    cfg: &McConfig,
    runner: &R,
) -> Result<CapacityReport> {
    let out = simulate(s, r, cfg, runner, true)?;
    let hits = out.iter().filter(|o| o.count > 0).count() as u64;
    let early = out.iter().filter(|o| o.early).count() as u64;
    let hit = McEstimate::from_counts(hits, cfg.replicates);
    let cap = McEstimate::from_counts(early, cfg.replicates);
    // d_i = c_i - w·h_i takes values 1 - w, -w and 0
    let w = libm::exp(-q);
    let n = cfg.replicates as f64;
    let (both, only_hit) = (early as f64 / n, (hits - early) as f64 / n);
    let mean = both * (1.0 - w) - only_hit * w;
    let second = both * (1.0 - w) * (1.0 - w) + only_hit * w * w;
    let gap_se = libm::sqrt((second - mean * mean).max(0.0) / n);
    Ok(CapacityReport {
        lower_ok: mean >= -3.0 * gap_se,
        upper_ok: cap.value <= hit.value,
        hit,
        capacity: cap,
        slices: s.len(),
        s_mesh: mesh,
        q,
        lower_gap_stderr: gap_se,
    })
}

/// Capacity relative to `[0, horizon]` on an s-grid of the given mesh, a
/// stand-in for the half-line when `horizon` is large. The neglected
/// contribution of `s > horizon` is at most `e^{-horizon}`.
pub fn window_capacity<R: ReplicateRunner>(
    horizon: f64,
    event: &EventSpec,
    cfg: &McConfig,
    runner: &R,
) -> Result<CapacityReport> {
    event.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::NonPositive { name: "horizon", value: horizon });
    }
    let r = event.unit_radius();
    let mesh = cfg.mesh_for(r);
    let n = libm::ceil(horizon / mesh) as usize;
    if n + 1 > cfg.max_slices {
        return Err(Error::ResourceCap(format!("{} OU slices exceed the cap of {}", n + 1, cfg.max_slices)));
    }
    let s: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n.max(1) as f64).collect();
    capacity_on(&s, r, horizon / n.max(1) as f64, horizon, cfg, runner)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub r: f64,
    pub entropy: u64,
    pub sigma: f64,
    pub hit: McEstimate,
    /// `hit / (K_G(r⁶) σ(r))`.
    pub rho: f64,
    pub rho_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub rows: Vec<RatioRow>,
    pub max_over_min: f64,
}

pub fn ratio_experiment<R: ReplicateRunner>(
    g: &SetModel,
    radii: &[f64],
    cfg: &McConfig,
    runner: &R,
) -> Result<RatioTable> {
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidArgument(format!("ratio radii must lie in (0, 1), got {r}")));
        }
        let k = g.kolmogorov_entropy(libm::pow(r, 6.0))?;
        if k == 0 {
            return Err(Error::EmptySet);
        }
        let sigma = sigma_series(r, DEFAULT_TOL)?.value;
        let hit = hit_prob(g, &EventSpec::sup_ball(r)?, cfg, runner)?;
        let scale = k as f64 * sigma;
        rows.push(RatioRow { r, entropy: k, sigma, hit, rho: hit.value / scale, rho_stderr: hit.stderr / scale });
    }
    let max = rows.iter().map(|r| r.rho).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.rho).fold(f64::INFINITY, f64::min);
    Ok(RatioTable { rows, max_over_min: max / min })
}

/// `P{U*_s ≤ r, U*_S ≤ r}`. Gaps beyond `[0, 1]` are allowed.
pub fn joint_prob<R: ReplicateRunner>(
    s: f64,
    big_s: f64,
    r: f64,
    cfg: &McConfig,
    runner: &R,
) -> Result<McEstimate> {
    EventSpec::sup_ball(r)?;
    if !(big_s >= s) {
        return Err(Error::InvalidArgument("joint_prob needs S ≥ s".into()));
    }
    let out = simulate(&[s, big_s], r, cfg, runner, false)?;
    Ok(McEstimate::from_counts(out.iter().filter(|o| o.count == 2).count() as u64, cfg.replicates))
}

/// Moments of `N_r`, the number of confined slices among the Kolmogorov
/// points of `G` at mesh `r⁶`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingStats {
    pub k: u64,
    pub r: f64,
    pub sigma: f64,
    pub mean_n: f64,
    pub mean_stderr: f64,
    pub second_moment_n: f64,
    /// `mean_n² / second_moment_n`, zero when no slice was ever confined.
    pub pz_lower_bound: f64,
    /// `P{N_r > 0}` on the same samples.
    pub hit: McEstimate,
    /// `(ΣN)² ≤ ΣN² · #{N > 0}` in exact integer arithmetic.
    pub pz_exact: bool,
}

impl CountingStats {
    /// `E[N²] / (k σ(r))`.
    pub fn second_moment_constant(&self) -> f64 {
        self.second_moment_n / (self.k as f64 * self.sigma)
    }
}

pub fn counting_stats<R: ReplicateRunner>(
    g: &SetModel,
    r: f64,
    cfg: &McConfig,
    runner: &R,
) -> Result<CountingStats> {
    EventSpec::sup_ball(r)?;
    let s = slices_for(g, cfg.mesh_for(r), cfg.max_slices)?;
    let out = simulate(&s, r, cfg, runner, false)?;
    let (mut sum, mut sum_sq, mut positive) = (0u128, 0u128, 0u128);
    for o in &out {
        let c = u128::from(o.count);
        sum += c;
        sum_sq += c * c;
        positive += u128::from(o.count > 0);
    }
    let n = cfg.replicates as f64;
    let mean = sum as f64 / n;
    let second = sum_sq as f64 / n;
    let var = (second - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(CountingStats {
        k: s.len() as u64,
        r,
        sigma: sigma_series(r, DEFAULT_TOL)?.value,
        mean_n: mean,
        mean_stderr: libm::sqrt(var / n),
        second_moment_n: second,
        pz_lower_bound: if sum_sq == 0 { 0.0 } else { mean * mean / second },
        hit: McEstimate::from_counts(positive as u64, cfg.replicates),
        pz_exact: sum * sum <= sum_sq * positive,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortWindow {
    pub r: f64,
    pub slices: usize,
    pub hit: McEstimate,
    pub sigma: f64,
    pub ratio: f64,
    pub ratio_stderr: f64,
}

/// `P{inf_{s ∈ [0, r⁶]} U*_s ≤ r}` on `slices` equally spaced s-values,
/// relative to `σ(r)`.
pub fn short_window_bound<R: ReplicateRunner>(
    r: f64,
    slices: usize,
    cfg: &McConfig,
    runner: &R,
) -> Result<ShortWindow> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("radius must lie in (0, 1), got {r}")));
    }
    if slices < 2 {
        return Err(Error::InvalidArgument("the window needs at least two slices".into()));
    }
    let width = libm::pow(r, 6.0);
    let s: Vec<f64> = (0..slices).map(|i| width * i as f64 / (slices - 1) as f64).collect();
    let out = simulate(&s, r, cfg, runner, false)?;
    let hit = McEstimate::from_counts(out.iter().filter(|o| o.count > 0).count() as u64, cfg.replicates);
    let sigma = sigma_series(r, DEFAULT_TOL)?.value;
    Ok(ShortWindow { r, slices, hit, sigma, ratio: hit.value / sigma, ratio_stderr: hit.stderr / sigma })
}

/// Sensitivity of [`hit_prob`] to the time grid (`k → k + 2`) and to the
/// s-mesh (`ε_s → ε_s / 2`). Shifts are in units of the standard error of
/// the difference; the refined runs draw fresh paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationAudit {
    pub base: McEstimate,
    pub finer_grid: McEstimate,
    pub finer_mesh: McEstimate,
    pub grid_shift: f64,
    pub mesh_shift: f64,
}

impl DiscretizationAudit {
    /// The grid has converged when refining it moves the estimate by less
    /// than one standard error.
    pub fn grid_converged(&self) -> bool {
        libm::fabs(self.grid_shift) < 1.0
    }
}

pub fn discretization_audit<R: ReplicateRunner>(
    g: &SetModel,
    event: &EventSpec,
    cfg: &McConfig,
    runner: &R,
) -> Result<DiscretizationAudit> {
    event.validate()?;
    let base = hit_prob(g, event, cfg, runner)?;
    let finer = McConfig { resolution: cfg.resolution + 2, ..*cfg };
    let finer_grid = hit_prob(g, event, &finer, runner)?;
    let halved = McConfig { s_mesh: Some(cfg.mesh_for(event.unit_radius()) / 2.0), ..*cfg };
    let finer_mesh = hit_prob(g, event, &halved, runner)?;
    let floor = 1.0 / cfg.replicates as f64;
    let shift = |e: &McEstimate| (e.value - base.value) / libm::hypot(base.stderr, e.stderr).max(floor);
    Ok(DiscretizationAudit {
        base,
        finer_grid,
        finer_mesh,
        grid_shift: shift(&finer_grid),
        mesh_shift: shift(&finer_mesh),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::SetSpec;

    fn cfg(replicates: u64, resolution: u32, seed: u64) -> McConfig {
        McConfig { replicates, resolution, master_seed: seed, ..McConfig::default() }
    }

    fn point() -> SetModel {
        SetModel::normalize(&SetSpec::Points { points: vec![0.0] }).unwrap()
    }

    fn unit() -> SetModel {
        SetModel::normalize(&SetSpec::Interval { a: 0.0, b: 1.0 }).unwrap()
    }

    #[test]
    fn estimate_interval_is_clipped() {
        let e = McEstimate::from_counts(0, 100);
        assert_eq!((e.value, e.stderr, e.ci95), (0.0, 0.0, (0.0, 0.0)));
        let e = McEstimate::from_counts(99, 100);
        assert!(e.ci95.1 <= 1.0 && e.ci95.0 <= e.value);
    }

    #[test]
    fn config_validation() {
        assert!(cfg(99, 8, 0).validate().is_err());
        assert!(cfg(100, 3, 0).validate().is_err());
        let bad = McConfig { s_mesh: Some(0.0), ..cfg(100, 8, 0) };
        assert!(bad.validate().is_err());
        assert!(EventSpec::sup_ball(0.0).is_err());
        assert!(EventSpec::sup_ball(1.5).is_err());
    }

    #[test]
    fn point_hit_is_the_small_ball_probability() {
        let c = cfg(40_000, 10, 1);
        let r = 0.8;
        let est = hit_prob(&point(), &EventSpec::sup_ball(r).unwrap(), &c, &Sequential).unwrap();
        let sigma = sigma_series(r, DEFAULT_TOL).unwrap().value;
        assert!((est.value - sigma).abs() < 3.0 * est.stderr, "{} vs {sigma}", est.value);
    }

    #[test]
    fn horizon_scaling() {
        let c = cfg(2_000, 8, 2);
        let a = hit_prob(&point(), &EventSpec { radius: 0.8, horizon: 4.0 }, &c, &Sequential).unwrap();
        let b = hit_prob(&point(), &EventSpec::sup_ball(0.4).unwrap(), &c, &Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_and_capped_sets_are_rejected() {
        let empty = SetModel::normalize(&SetSpec::Points { points: vec![] }).unwrap();
        let e = EventSpec::sup_ball(0.5).unwrap();
        assert_eq!(hit_prob(&empty, &e, &cfg(100, 6, 0), &Sequential), Err(Error::EmptySet));
        let tight = McConfig { s_mesh: Some(1e-5), ..cfg(100, 6, 0) };
        assert!(matches!(hit_prob(&unit(), &e, &tight, &Sequential), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn inclusion_monotonicity_on_shared_samples() {
        let c = cfg(3_000, 8, 3);
        let e = EventSpec::sup_ball(0.7).unwrap();
        let small = hit_prob(&point(), &e, &c, &Sequential).unwrap();
        let big = hit_prob(&unit(), &e, &c, &Sequential).unwrap();
        // slice 0 of both ensembles is the same path
        assert!(small.value <= big.value);
    }

    #[test]
    fn capacity_of_a_point_equals_hit() {
        let c = cfg(5_000, 8, 4);
        let rep = capacity(&point(), &EventSpec::sup_ball(0.8).unwrap(), &c, &Sequential).unwrap();
        assert_eq!(rep.capacity, rep.hit);
        assert!(rep.sandwich_holds());
    }

    #[test]
    fn capacity_sandwich_on_the_unit_interval() {
        let c = cfg(5_000, 9, 5);
        let rep = capacity(&unit(), &EventSpec::sup_ball(0.7).unwrap(), &c, &Sequential).unwrap();
        assert!(rep.sandwich_holds(), "{rep:?}");
        assert!(rep.capacity.value < rep.hit.value);
    }

    #[test]
    fn window_capacity_runs() {
        let c = cfg(1_000, 8, 6);
        let rep = window_capacity(5.0, &EventSpec::sup_ball(0.7).unwrap(), &c, &Sequential).unwrap();
        assert!(rep.capacity.value <= rep.hit.value);
        assert!(rep.slices >= 43);
    }

    #[test]
    fn joint_of_equal_slices_is_marginal() {
        let c = cfg(4_000, 8, 7);
        let j = joint_prob(0.3, 0.3, 0.8, &c, &Sequential).unwrap();
        let m = hit_prob(&point(), &EventSpec::sup_ball(0.8).unwrap(), &c, &Sequential).unwrap();
        assert_eq!(j.successes, m.successes);
        assert!(joint_prob(0.5, 0.2, 0.8, &c, &Sequential).is_err());
    }

    #[test]
    fn counting_moments_on_shared_samples() {
        let c = cfg(4_000, 8, 8);
        let stats = counting_stats(&unit(), 0.7, &c, &Sequential).unwrap();
        assert!(stats.pz_exact);
        assert!(stats.pz_lower_bound <= stats.hit.value + 1e-12);
        assert!(stats.second_moment_n >= stats.mean_n);
        assert_eq!(stats.k, unit().kolmogorov_entropy(libm::pow(0.7, 6.0)).unwrap());
    }

    #[test]
    fn short_window_contains_its_origin() {
        let c = cfg(2_000, 8, 9);
        let w = short_window_bound(0.6, 9, &c, &Sequential).unwrap();
        let p = hit_prob(&point(), &EventSpec::sup_ball(0.6).unwrap(), &c, &Sequential).unwrap();
        assert!(w.hit.successes >= p.successes);
    }

    #[test]
    fn ratio_of_a_point_is_near_one() {
        let c = cfg(20_000, 9, 10);
        let t = ratio_experiment(&point(), &[0.7, 0.9], &c, &Sequential).unwrap();
        for row in &t.rows {
            assert_eq!(row.entropy, 1);
            assert!((row.rho - 1.0).abs() < 3.0 * row.rho_stderr + 0.02, "{row:?}");
        }
        assert!(ratio_experiment(&point(), &[1.0], &c, &Sequential).is_err());
    }

    #[test]
    fn discretization_audit_on_a_point() {
        let a = discretization_audit(&point(), &EventSpec::sup_ball(0.8).unwrap(), &cfg(4000, 8, 5), &Sequential).unwrap();
        // a single point has nothing to refine in s
        assert_eq!(a.finer_mesh, a.base);
        assert!(a.grid_shift.abs() < 3.0, "{a:?}");
        let capped = McConfig { max_slices: 5, ..cfg(200, 6, 0) };
        assert!(discretization_audit(&unit(), &EventSpec::sup_ball(0.8).unwrap(), &capped, &Sequential).is_err());
    }
}
