//! Brownian paths and the Ornstein–Uhlenbeck process on path space.
//!
//! `U_s(t) = B(e^s, t) / e^{s/2}` for a Brownian sheet `B`. For `S > s` the
//! sheet's Markov property gives the exact update
//!
//! ```text
//! U_S = U_s · e^{-(S-s)/2} + V · sqrt(1 - e^{-(S-s)})
//! ```
//!
//! with `V` a Brownian motion independent of `U_s`, so a finite set of slices
//! is sampled by one Wiener path followed by one fresh path per gap.

use alloc::vec;
use alloc::vec::Vec;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{RngStream, StreamRng};

/// `-ζ(1/2) / sqrt(2π)`: expected overshoot of a continuous maximum over its
/// grid maximum, in units of `sqrt(dt)`.
pub const BARRIER_SHIFT: f64 = 0.582_597_157_939_010_6;

/// How grid maxima are compared against a sup-norm radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupCorrection {
    /// Compare the grid maximum with `r` directly. Overestimates
    /// `P(sup ≤ r)` by `O(sqrt(dt))`.
    None,
    /// Compare with `r - BARRIER_SHIFT·sqrt(dt)`, which removes the leading
    /// discretisation bias.
    #[default]
    BarrierShift,
}

/// Uniform grid of `2^resolution + 1` points on `[0, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    resolution: u32,
    t_max: f64,
    correction: SupCorrection,
}

pub const DEFAULT_RESOLUTION: u32 = 12;

impl TimeGrid {
    pub fn new(resolution: u32) -> Result<Self> {
        Self::with_horizon(resolution, 1.0)
    }

    pub fn with_horizon(resolution: u32, t_max: f64) -> Result<Self> {
        if !(4..=24).contains(&resolution) {
            return Err(Error::InvalidArgument("grid resolution k must lie in 4..=24".into()));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::NonPositive { name: "t_max", value: t_max });
        }
        Ok(Self { resolution, t_max, correction: SupCorrection::default() })
    }

    pub fn with_correction(self, correction: SupCorrection) -> Self {
        Self { correction, ..self }
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn correction(&self) -> SupCorrection {
        self.correction
    }

    pub fn cells(&self) -> usize {
        1 << self.resolution
    }

    pub fn len(&self) -> usize {
        self.cells() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.cells() as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i == self.cells() {
            self.t_max
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Threshold the grid maximum is compared against for radius `r`.
    pub fn effective_radius(&self, r: f64) -> f64 {
        match self.correction {
            SupCorrection::None => r,
            SupCorrection::BarrierShift => r - BARRIER_SHIFT * libm::sqrt(self.dt()),
        }
    }

    /// Whether a sampled path stays within radius `r` over the whole grid.
    pub fn within(&self, path: &[f64], r: f64) -> bool {
        let level = self.effective_radius(r);
        path.iter().all(|x| libm::fabs(*x) <= level)
    }
}

/// `(e^{-Δs/2}, sqrt(1 - e^{-Δs}))`, the weights of the old slice and of the
/// fresh path.
pub fn ou_weights(ds: f64) -> (f64, f64) {
    (libm::exp(-0.5 * ds), libm::sqrt(-libm::expm1(-ds)))
}

/// Standard Brownian motion sampled on the grid.
pub fn sample_brownian(grid: &TimeGrid, stream: RngStream) -> Vec<f64> {
    let mut rng = stream.rng();
    let sd = libm::sqrt(grid.dt());
    let mut path = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    path.push(acc);
    for _ in 0..grid.cells() {
        let z: f64 = StandardNormal.sample(&mut rng);
        acc += sd * z;
        path.push(acc);
    }
    path
}

/// `U_0`: the stationary law of the process is Wiener measure.
pub fn ou_initial(grid: &TimeGrid, stream: RngStream) -> Vec<f64> {
    sample_brownian(grid, stream)
}

/// Advances a slice by `ds > 0` in the OU time parameter.
pub fn ou_evolve(current: &[f64], ds: f64, grid: &TimeGrid, stream: RngStream) -> Result<Vec<f64>> {
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(Error::NonPositive { name: "Δs", value: ds });
    }
    if current.len() != grid.len() {
        return Err(Error::InvalidArgument("path length does not match the grid".into()));
    }
    Ok(evolve(current, ds, grid, stream))
}

fn evolve(current: &[f64], ds: f64, grid: &TimeGrid, stream: RngStream) -> Vec<f64> {
    let (a, b) = ou_weights(ds);
    let fresh = sample_brownian(grid, stream);
    current.iter().zip(&fresh).map(|(u, v)| a * u + b * v).collect()
}

/// Slices `U_s` on a finite s-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuEnsemble {
    pub s_values: Vec<f64>,
    pub grid: TimeGrid,
    /// `values[i][j] = U_{s_i}(t_j)`.
    pub values: Vec<Vec<f64>>,
    pub stream: RngStream,
}

fn check_sorted(s_values: &[f64]) -> Result<()> {
    if s_values.is_empty() {
        return Err(Error::InvalidArgument("at least one s value is required".into()));
    }
    if s_values.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("s values must be finite".into()));
    }
    if s_values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Unsorted("s values"));
    }
    Ok(())
}

/// Samples the joint law of `(U_{s_0}, …, U_{s_n})`. Slice `i` draws its
/// fresh path from substream `i` of `stream`.
pub fn ou_ensemble(s_values: &[f64], grid: &TimeGrid, stream: RngStream) -> Result<OuEnsemble> {
    check_sorted(s_values)?;
    let mut values = Vec::with_capacity(s_values.len());
    values.push(ou_initial(grid, stream.with_substream(0)));
    for (i, w) in s_values.windows(2).enumerate() {
        let next = evolve(&values[i], w[1] - w[0], grid, stream.with_substream(i as u64 + 1));
        values.push(next);
    }
    Ok(OuEnsemble { s_values: s_values.to_vec(), grid: *grid, values, stream })
}

/// `max |path(t)|` over grid points `t ≤ horizon`.
pub fn sup_norm(path: &[f64], grid: &TimeGrid, horizon: f64) -> Result<f64> {
    if horizon > grid.t_max() * (1.0 + 1e-12) || horizon < 0.0 {
        return Err(Error::InvalidArgument("horizon exceeds the grid".into()));
    }
    let last = ((horizon / grid.dt()) * (1.0 + 1e-12)) as usize;
    Ok(path.iter().take(last.min(grid.cells()) + 1).fold(0.0, |m, x| m.max(libm::fabs(*x))))
}

/// The planar region `{|x| ≤ r, |x·sqrt(1-λ) + y·sqrt(λ)| ≤ r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfinementRegion {
    lambda: f64,
    r: f64,
}

impl ConfinementRegion {
    pub fn new(lambda: f64, r: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidArgument("λ must lie in (0, 1]".into()));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::NonPositive { name: "r", value: r });
        }
        Ok(Self { lambda, r })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

/// Whether a planar Brownian motion stays in the region at every grid point.
pub fn planar_confinement(region: &ConfinementRegion, grid: &TimeGrid, stream: RngStream) -> bool {
    let mut rng = stream.rng();
    let level = grid.effective_radius(region.r);
    if level < 0.0 {
        return false;
    }
    let sd = libm::sqrt(grid.dt());
    let (cx, cy) = (libm::sqrt(1.0 - region.lambda), libm::sqrt(region.lambda));
    let (mut x, mut y) = (0.0f64, 0.0f64);
    for _ in 0..grid.cells() {
        let zx: f64 = StandardNormal.sample(&mut rng);
        let zy: f64 = StandardNormal.sample(&mut rng);
        x += sd * zx;
        y += sd * zy;
        if libm::fabs(x) > level || libm::fabs(cx * x + cy * y) > level {
            return false;
        }
    }
    true
}

/// Time-major sampler of an OU chain that stops as soon as every slice has
/// left the ball.
///
/// Slice `i` draws from substream `i` exactly as [`ou_ensemble`] does and
/// performs the same floating-point operations, so the confinement flags are
/// identical to those computed from the full ensemble.
#[derive(Debug, Clone)]
pub struct OuChain {
    grid: TimeGrid,
    weights: Vec<(f64, f64)>,
}

impl OuChain {
    pub fn new(s_values: &[f64], grid: TimeGrid) -> Result<Self> {
        check_sorted(s_values)?;
        let mut weights = Vec::with_capacity(s_values.len());
        weights.push((0.0, 1.0));
        weights.extend(s_values.windows(2).map(|w| ou_weights(w[1] - w[0])));
        Ok(Self { grid, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Sets `inside[i]` to whether `sup_t |U_{s_i}(t)| ≤ r` and returns the
    /// number of confined slices.
    pub fn confined(&self, stream: RngStream, r: f64, inside: &mut [bool]) -> usize {
        let k = self.weights.len();
        assert_eq!(inside.len(), k);
        let level = self.grid.effective_radius(r);
        if level < 0.0 {
            inside.fill(false);
            return 0;
        }
        inside.fill(true);
        let mut rngs: Vec<StreamRng> = (0..k).map(|i| stream.with_substream(i as u64).rng()).collect();
        let mut fresh = vec![0.0f64; k];
        let mut slice = vec![0.0f64; k];
        let sd = libm::sqrt(self.grid.dt());
        let mut alive = k;
        let mut last = k - 1;
        for _ in 0..self.grid.cells() {
            for i in 0..=last {
                let z: f64 = StandardNormal.sample(&mut rngs[i]);
                fresh[i] += sd * z;
                slice[i] = if i == 0 {
                    fresh[0]
                } else {
                    let (a, b) = self.weights[i];
                    a * slice[i - 1] + b * fresh[i]
                };
                if inside[i] && libm::fabs(slice[i]) > level {
                    inside[i] = false;
                    alive -= 1;
                }
            }
            if alive == 0 {
                break;
            }
            while !inside[last] {
                last -= 1;
            }
        }
        alive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smallball::sigma_series;
    use crate::stats::{correlation, ks_two_sample, mean_var, spearman};

    fn grid(k: u32) -> TimeGrid {
        TimeGrid::new(k).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(3).is_err());
        assert!(TimeGrid::with_horizon(8, 0.0).is_err());
        let g = grid(4);
        assert_eq!(g.len(), 17);
        assert_eq!(g.point(0), 0.0);
        assert_eq!(g.point(16), 1.0);
        assert!(g.points().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn brownian_path_starts_at_zero_and_replays() {
        let g = grid(8);
        let s = RngStream::new(11).with_replicate(5);
        let p = sample_brownian(&g, s);
        assert_eq!(p[0], 0.0);
        assert_eq!(p.len(), g.len());
        assert_eq!(p, sample_brownian(&g, s));
        assert_eq!(ou_initial(&g, s), p);
    }

    #[test]
    fn brownian_endpoint_variance_is_one() {
        let g = grid(6);
        let ends: Vec<f64> =
            (0..100_000).map(|i| *sample_brownian(&g, RngStream::new(1).with_replicate(i)).last().unwrap()).collect();
        let (mean, var) = mean_var(&ends);
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn brownian_increments_are_independent() {
        let g = grid(4);
        let (mut first, mut second) = (Vec::new(), Vec::new());
        for i in 0..20_000 {
            let p = sample_brownian(&g, RngStream::new(2).with_replicate(i));
            first.push(p[8]);
            second.push(p[16] - p[8]);
        }
        assert!(correlation(&first, &second).abs() < 3.0 / libm::sqrt(20_000.0));
        let (_, v) = mean_var(&second);
        assert!((v - 0.5).abs() < 0.02);
    }

    #[test]
    fn initial_slice_matches_wiener_law_of_the_sup() {
        let g = grid(8);
        let a: Vec<f64> = (0..10_000)
            .map(|i| sup_norm(&ou_initial(&g, RngStream::new(3).with_replicate(i)), &g, 1.0).unwrap())
            .collect();
        let b: Vec<f64> = (0..10_000)
            .map(|i| sup_norm(&sample_brownian(&g, RngStream::new(4).with_replicate(i)), &g, 1.0).unwrap())
            .collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
    }

    #[test]
    fn evolve_rejects_nonpositive_steps() {
        let g = grid(4);
        let p = sample_brownian(&g, RngStream::new(0));
        assert!(ou_evolve(&p, 0.0, &g, RngStream::new(1)).is_err());
        assert!(ou_evolve(&p, -1.0, &g, RngStream::new(1)).is_err());
        assert!(ou_evolve(&p[..3], 1.0, &g, RngStream::new(1)).is_err());
        assert_eq!(ou_evolve(&p, 0.3, &g, RngStream::new(1)).unwrap()[0], 0.0);
    }

    fn endpoint_correlation(ds: f64, n: u64) -> f64 {
        let g = grid(4);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for i in 0..n {
            let s = RngStream::new(5).with_replicate(i);
            let u = ou_initial(&g, s.with_substream(0));
            let w = ou_evolve(&u, ds, &g, s.with_substream(1)).unwrap();
            x.push(u[16]);
            y.push(w[16]);
        }
        correlation(&x, &y)
    }

    #[test]
    fn large_gap_decouples() {
        assert!(endpoint_correlation(50.0, 10_000).abs() < 0.02);
    }

    #[test]
    fn small_gap_correlation_matches_ou_covariance() {
        let rho = endpoint_correlation(0.1, 100_000);
        let expected = libm::exp(-0.05);
        let se = (1.0 - expected * expected) / libm::sqrt(100_000.0);
        assert!((rho - expected).abs() < 4.0 * se, "{rho} vs {expected}");
    }

    #[test]
    fn ensemble_covariance_across_slices() {
        let g = grid(4);
        let n = 100_000u64;
        let mut prods = Vec::with_capacity(n as usize);
        for i in 0..n {
            let e = ou_ensemble(&[0.0, 0.5], &g, RngStream::new(6).with_replicate(i)).unwrap();
            prods.push(e.values[0][16] * e.values[1][16]);
        }
        let (cov, var) = mean_var(&prods);
        let se = libm::sqrt(var / n as f64);
        let expected = libm::exp(-0.25);
        assert!((cov - expected).abs() < 3.0 * se, "{cov} vs {expected} (se {se})");
    }

    #[test]
    fn ensemble_basics() {
        let g = grid(5);
        let s = RngStream::new(8).with_replicate(1);
        let single = ou_ensemble(&[0.3], &g, s).unwrap();
        assert_eq!(single.values[0], ou_initial(&g, s.with_substream(0)));
        let e = ou_ensemble(&[0.0, 0.2, 0.2, 0.9], &g, s).unwrap();
        assert!(e.values.iter().all(|p| p[0] == 0.0));
        assert_eq!(e.values[1], e.values[2]);
        assert_eq!(e, ou_ensemble(&[0.0, 0.2, 0.2, 0.9], &g, s).unwrap());
        assert!(matches!(ou_ensemble(&[0.5, 0.1], &g, s), Err(Error::Unsorted(_))));
    }

    #[test]
    fn stationarity_of_later_slices() {
        let g = grid(8);
        let (mut first, mut later) = (Vec::new(), Vec::new());
        for i in 0..10_000 {
            let e = ou_ensemble(&[0.0, 0.7], &g, RngStream::new(100).with_replicate(i)).unwrap();
            first.push(sup_norm(&e.values[0], &g, 1.0).unwrap());
            let f = ou_ensemble(&[0.0, 0.7], &g, RngStream::new(101).with_replicate(i)).unwrap();
            later.push(sup_norm(&f.values[1], &g, 1.0).unwrap());
        }
        assert!(ks_two_sample(&first, &later).p_value > 0.01);
    }

    #[test]
    fn slice_and_fresh_path_are_uncorrelated() {
        let g = grid(4);
        let (mut u, mut v) = (Vec::new(), Vec::new());
        for i in 0..20_000 {
            let s = RngStream::new(12).with_replicate(i);
            u.push(ou_initial(&g, s.with_substream(0))[10]);
            v.push(sample_brownian(&g, s.with_substream(1))[10]);
        }
        assert!(correlation(&u, &v).abs() < 3.0 / libm::sqrt(20_000.0));
    }

    #[test]
    fn sup_norm_examples() {
        let g = grid(4);
        assert_eq!(sup_norm(&vec![0.0; 17], &g, 1.0).unwrap(), 0.0);
        let identity = g.points();
        assert_eq!(sup_norm(&identity, &g, 1.0).unwrap(), 1.0);
        assert_eq!(sup_norm(&identity, &g, 0.5).unwrap(), 0.5);
        assert!(sup_norm(&identity, &g, 1.5).is_err());
    }

    #[test]
    fn chain_matches_ensemble_bit_for_bit() {
        let g = grid(7).with_correction(SupCorrection::None);
        let s_values = [0.0, 0.01, 0.05, 0.3, 0.3, 0.8];
        let chain = OuChain::new(&s_values, g).unwrap();
        let mut flags = [false; 6];
        for rep in 0..300 {
            let stream = RngStream::new(13).with_replicate(rep);
            let e = ou_ensemble(&s_values, &g, stream).unwrap();
            for r in [0.4, 0.7, 1.2] {
                let n = chain.confined(stream, r, &mut flags);
                let expected: Vec<bool> = e.values.iter().map(|p| g.within(p, r)).collect();
                assert_eq!(&flags[..], &expected[..], "rep {rep} r {r}");
                assert_eq!(n, expected.iter().filter(|b| **b).count());
            }
        }
    }

    #[test]
    fn square_confinement_is_product_of_small_balls() {
        let g = grid(10);
        let region = ConfinementRegion::new(1.0, 0.8).unwrap();
        let n = 40_000u64;
        let hits = (0..n).filter(|&i| planar_confinement(&region, &g, RngStream::new(14).with_replicate(i))).count();
        let p = hits as f64 / n as f64;
        let sigma = sigma_series(0.8, 1e-14).unwrap().value;
        let se = libm::sqrt(sigma * sigma * (1.0 - sigma * sigma) / n as f64);
        assert!((p - sigma * sigma).abs() < 3.0 * se, "{p} vs {}", sigma * sigma);
    }

    #[test]
    fn wide_region_always_confines() {
        let g = grid(8);
        let region = ConfinementRegion::new(0.5, 10.0).unwrap();
        assert!((0..500).all(|i| planar_confinement(&region, &g, RngStream::new(15).with_replicate(i))));
        assert!(ConfinementRegion::new(0.0, 1.0).is_err());
        assert!(ConfinementRegion::new(0.5, -1.0).is_err());
    }

    #[test]
    fn confinement_decays_with_lambda() {
        let g = grid(9);
        let r = 0.8;
        let sigma = sigma_series(r, 1e-14).unwrap().value;
        let lambdas = [0.02, 0.1, 0.3, 0.6, 1.0];
        let n = 20_000u64;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &lambda in &lambdas {
            let region = ConfinementRegion::new(lambda, r).unwrap();
            let hits =
                (0..n).filter(|&i| planar_confinement(&region, &g, RngStream::new(16).with_replicate(i))).count();
            xs.push(libm::cbrt(lambda) / (r * r));
            ys.push(libm::log(hits as f64 / n as f64 / sigma));
        }
        assert!(spearman(&xs, &ys) < -0.99, "{ys:?}");
        // the confinement probability never exceeds the one-coordinate ball
        assert!(ys.iter().all(|y| *y < 0.1));
    }
}
