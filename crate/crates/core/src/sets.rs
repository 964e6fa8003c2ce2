//! Borel subsets of `[0, 1]` in canonical form, with their Kolmogorov
//! ε-entropy, Minkowski content and dimension estimates.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::least_squares;

/// Relative slack under which a distance counts as equal to ε.
///
/// Separation is `|x - y| ≥ ε`, ties included. Floating point cannot
/// represent most ties exactly, so any distance within this relative slack
/// of ε is treated as a tie.
pub const TIE_SLACK: f64 = 1e-12;

/// Cap on the number of level-L intervals a Cantor recipe may expand to.
pub const MAX_CANTOR_INTERVALS: u64 = 1 << 22;

/// Declarative description of a set, as read from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    Interval { a: f64, b: f64 },
    Points { points: Vec<f64> },
    Union { children: Vec<SetSpec> },
    Cantor { pieces: u32, ratio: f64, depth: u32 },
}

/// Self-similar recipe: `pieces` copies scaled by `ratio`, evenly spread so
/// that the first starts at 0 and the last ends at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantorRecipe {
    pub pieces: u32,
    pub ratio: f64,
    pub depth: u32,
}

impl CantorRecipe {
    pub fn new(pieces: u32, ratio: f64, depth: u32) -> Result<Self> {
        if pieces < 2 {
            return Err(Error::InvalidCantor("at least two pieces are required"));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidCantor("ratio must lie in (0, 1)"));
        }
        // pieces * ratio <= 1, with room for the rounding of decimal inputs
        if f64::from(pieces) * ratio > 1.0 + 1e-12 {
            return Err(Error::InvalidCantor("pieces overlap (pieces * ratio > 1)"));
        }
        let total = u64::from(pieces).checked_pow(depth);
        if total.is_none_or(|t| t > MAX_CANTOR_INTERVALS) {
            return Err(Error::InvalidCantor("too many level intervals"));
        }
        Ok(Self { pieces, ratio, depth })
    }

    /// Similarity dimension `ln m / ln(1/ρ)` of the limit set.
    pub fn dimension(&self) -> f64 {
        libm::log(f64::from(self.pieces)) / -libm::log(self.ratio)
    }

    /// Length of a level-`depth` interval; the model is not meaningful
    /// below this scale.
    pub fn resolution(&self) -> f64 {
        libm::pow(self.ratio, f64::from(self.depth))
    }

    fn intervals(&self) -> Vec<(f64, f64)> {
        let m = self.pieces as usize;
        let step = (1.0 - self.ratio) / (m as f64 - 1.0);
        let mut level = alloc::vec![(0.0_f64, 1.0_f64)];
        for _ in 0..self.depth {
            let mut next = Vec::with_capacity(level.len() * m);
            for &(x, len) in &level {
                let child = len * self.ratio;
                for j in 0..m {
                    let start = if j + 1 == m { x + len - child } else { x + j as f64 * step * len };
                    next.push((start, child));
                }
            }
            level = next;
        }
        level.into_iter().map(|(x, len)| (x, x + len)).collect()
    }
}

/// Canonical form of a set: disjoint sorted closed intervals plus isolated
/// points lying outside every interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetModel {
    intervals: Vec<(f64, f64)>,
    points: Vec<f64>,
    generator: Option<CantorRecipe>,
    resolution: Option<f64>,
    exact_dimension: Option<f64>,
}

/// `K_G(ε)` along a decreasing ε sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub epsilons: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    /// Least-squares slope of `ln K_G(ε)` against `ln(1/ε)`.
    pub upper_minkowski: f64,
    pub packing: f64,
    /// Whether `packing` comes from a closed form rather than the regression.
    pub exact: bool,
    pub regression_r2: f64,
}

enum Piece {
    Interval(f64, f64),
    Point(f64),
}

fn check_coord(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutsideUnitInterval(x))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name: "epsilon", value: eps })
    }
}

/// Separation predicate shared by every entropy computation.
#[inline]
pub fn is_separated(distance: f64, eps: f64) -> bool {
    distance >= eps * (1.0 - TIE_SLACK)
}

/// Floor that snaps values within rounding noise of an integer onto it.
fn floor_snap(v: f64) -> f64 {
    let r = libm::round(v);
    if libm::fabs(v - r) <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        libm::floor(v)
    }
}

struct Parts {
    intervals: Vec<(f64, f64)>,
    points: Vec<f64>,
    resolution: Option<f64>,
    dimension: Option<f64>,
}

fn collect(spec: &SetSpec, parts: &mut Parts) -> Result<()> {
    match spec {
        SetSpec::Interval { a, b } => {
            check_coord(*a)?;
            check_coord(*b)?;
            if a > b {
                return Err(Error::ReversedInterval(*a, *b));
            }
            if a == b {
                parts.points.push(*a);
                merge_dim(parts, 0.0);
            } else {
                parts.intervals.push((*a, *b));
                merge_dim(parts, 1.0);
            }
        }
        SetSpec::Points { points } => {
            if points.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Unsorted("points"));
            }
            for &x in points {
                check_coord(x)?;
            }
            parts.points.extend_from_slice(points);
            if !points.is_empty() {
                merge_dim(parts, 0.0);
            }
        }
        SetSpec::Union { children } => {
            for child in children {
                collect(child, parts)?;
            }
        }
        SetSpec::Cantor { pieces, ratio, depth } => {
            let recipe = CantorRecipe::new(*pieces, *ratio, *depth)?;
            parts.intervals.extend(recipe.intervals());
            let res = recipe.resolution();
            parts.resolution = Some(parts.resolution.map_or(res, |r| r.min(res)));
            merge_dim(parts, recipe.dimension());
        }
    }
    Ok(())
}

fn merge_dim(parts: &mut Parts, d: f64) {
    parts.dimension = Some(parts.dimension.map_or(d, |old| old.max(d)));
}

impl SetModel {
    /// Canonicalises a [`SetSpec`]. Cantor recipes are expanded to their
    /// level-`depth` cover of `pieces^depth` closed intervals.
    pub fn normalize(spec: &SetSpec) -> Result<Self> {
        let mut parts = Parts {
            intervals: Vec::new(),
            points: Vec::new(),
            resolution: None,
            dimension: None,
        };
        collect(spec, &mut parts)?;
        let generator = match spec {
            SetSpec::Cantor { pieces, ratio, depth } => Some(CantorRecipe::new(*pieces, *ratio, *depth)?),
            _ => None,
        };
        let mut model = Self::from_parts(parts.intervals, parts.points);
        model.generator = generator;
        model.resolution = parts.resolution;
        model.exact_dimension = if model.is_empty() { None } else { parts.dimension };
        Ok(model)
    }

    fn from_parts(mut intervals: Vec<(f64, f64)>, mut points: Vec<f64>) -> Self {
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        points.retain(|&x| !covers(&merged, x));
        Self { intervals: merged, points, generator: None, resolution: None, exact_dimension: None }
    }

    /// Re-canonicalises an existing model; idempotent.
    pub fn renormalize(&self) -> Self {
        let mut model = Self::from_parts(self.intervals.clone(), self.points.clone());
        model.generator = self.generator;
        model.resolution = self.resolution;
        model.exact_dimension = self.exact_dimension;
        model
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn generator(&self) -> Option<&CantorRecipe> {
        self.generator.as_ref()
    }

    /// Smallest scale at which the model represents the intended set.
    pub fn resolution(&self) -> Option<f64> {
        self.resolution
    }

    /// Closed-form dimension when every constituent has one: 1 for sets of
    /// positive length, 0 for finite sets, `ln m / ln(1/ρ)` for Cantor
    /// recipes, the maximum over a union.
    pub fn exact_dimension(&self) -> Option<f64> {
        self.exact_dimension
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty() && self.points.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        covers(&self.intervals, x) || self.points.binary_search_by(|p| p.total_cmp(&x)).is_ok()
    }

    /// Envelope `K_G(ε) ≤ A ε^{-d}` valid for `ε ≤ 1`, returned as `(A, d)`.
    pub fn entropy_envelope(&self) -> Option<(f64, f64)> {
        if let Some(g) = &self.generator {
            return Some((f64::from(g.pieces), g.dimension()));
        }
        if self.resolution.is_some() || self.is_empty() {
            return None;
        }
        if self.intervals.is_empty() {
            return Some((self.points.len() as f64, 0.0));
        }
        let length: f64 = self.intervals.iter().map(|(a, b)| b - a).sum();
        let components = (self.intervals.len() + self.points.len()) as f64;
        Some((length + components, 1.0))
    }

    fn pieces(&self) -> impl Iterator<Item = Piece> + '_ {
        let mut iv = self.intervals.iter().peekable();
        let mut pt = self.points.iter().peekable();
        core::iter::from_fn(move || match (iv.peek(), pt.peek()) {
            (Some(&&(a, b)), Some(&&x)) => {
                if a <= x {
                    iv.next();
                    Some(Piece::Interval(a, b))
                } else {
                    pt.next();
                    Some(Piece::Point(x))
                }
            }
            (Some(&&(a, b)), None) => {
                iv.next();
                Some(Piece::Interval(a, b))
            }
            (None, Some(&&x)) => {
                pt.next();
                Some(Piece::Point(x))
            }
            (None, None) => None,
        })
    }

    fn check_scale(&self, eps: f64) -> Result<()> {
        check_eps(eps)?;
        match self.resolution {
            Some(floor) if eps < floor * (1.0 - TIE_SLACK) => Err(Error::BelowResolution { scale: eps, floor }),
            _ => Ok(()),
        }
    }

    /// Leftmost greedy sweep; calls `place(start, count, step, end)` for each
    /// run of `count` points `start + i·step`, none of which exceeds `end`.
    fn sweep(&self, eps: f64, mut place: impl FnMut(f64, u64, f64, f64)) {
        let step = eps * (1.0 - TIE_SLACK);
        let mut last: Option<f64> = None;
        for piece in self.pieces() {
            match piece {
                Piece::Point(x) => {
                    if last.is_none_or(|l| is_separated(x - l, eps)) {
                        place(x, 1, step, x);
                        last = Some(x);
                    }
                }
                Piece::Interval(a, b) => {
                    let start = match last {
                        None => a,
                        Some(l) => a.max(l + step),
                    };
                    if start > b {
                        continue;
                    }
                    let count = libm::floor((b - start) / step) as u64 + 1;
                    place(start, count, step, b);
                    last = Some((start + (count - 1) as f64 * step).min(b));
                }
            }
        }
    }

    /// Kolmogorov ε-entropy: the largest number of points of the set that
    /// are pairwise at least ε apart.
    pub fn kolmogorov_entropy(&self, eps: f64) -> Result<u64> {
        self.check_scale(eps)?;
        let mut total = 0u64;
        self.sweep(eps, |_, count, _, _| total += count);
        Ok(total)
    }

    /// A maximal ε-separated subset, chosen leftmost-first.
    pub fn kolmogorov_points(&self, eps: f64) -> Result<Vec<f64>> {
        self.check_scale(eps)?;
        let mut out = Vec::new();
        self.sweep(eps, |start, count, step, end| {
            out.extend((0..count).map(|i| (start + i as f64 * step).min(end)));
        });
        Ok(out)
    }

    /// Number of mesh cells `[j/n, (j+1)/n)`, `0 ≤ j ≤ n`, that meet the set.
    pub fn minkowski_content(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::InvalidArgument("mesh count n must be at least 1".into()));
        }
        let nf = n as f64;
        let cell = |x: f64| floor_snap(x * nf).clamp(0.0, nf) as u64;
        let mut count = 0u64;
        let mut covered_to: Option<u64> = None;
        for piece in self.pieces() {
            let (lo, hi) = match piece {
                Piece::Interval(a, b) => (cell(a), cell(b)),
                Piece::Point(x) => (cell(x), cell(x)),
            };
            let lo = match covered_to {
                Some(c) if lo <= c => c + 1,
                _ => lo,
            };
            if lo <= hi {
                count += hi - lo + 1;
            }
            covered_to = Some(covered_to.map_or(hi, |c| c.max(hi)));
        }
        Ok(count)
    }

    /// `K_G(ε)` along a strictly decreasing sweep.
    pub fn entropy_profile(&self, epsilons: &[f64]) -> Result<EntropyProfile> {
        if epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("ε sweep must be strictly decreasing".into()));
        }
        let counts = epsilons.iter().map(|&e| self.kolmogorov_entropy(e)).collect::<Result<Vec<_>>>()?;
        Ok(EntropyProfile { epsilons: epsilons.to_vec(), counts })
    }

    /// Regression of `ln K_G(ε)` on `ln(1/ε)`, with the closed-form packing
    /// dimension substituted where the model carries one.
    pub fn dimension_estimate(&self, sweep: &[f64]) -> Result<DimensionEstimate> {
        let mut distinct: Vec<f64> = sweep.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(Error::InvalidArgument("dimension sweep needs at least two distinct ε".into()));
        }
        let mut xs = Vec::with_capacity(distinct.len());
        let mut ys = Vec::with_capacity(distinct.len());
        for &eps in &distinct {
            let k = self.kolmogorov_entropy(eps)?;
            if k == 0 {
                return Err(Error::EmptySet);
            }
            xs.push(-libm::log(eps));
            ys.push(libm::log(k as f64));
        }
        let fit = least_squares(&xs, &ys);
        let (packing, exact) = match self.exact_dimension {
            Some(d) => (d, true),
            None => (fit.slope, false),
        };
        Ok(DimensionEstimate { upper_minkowski: fit.slope, packing, exact, regression_r2: fit.r2 })
    }
}

fn covers(intervals: &[(f64, f64)], x: f64) -> bool {
    let idx = intervals.partition_point(|&(a, _)| a <= x);
    idx > 0 && x <= intervals[idx - 1].1
}

/// Geometric sweep with ratio 1/2 from 2⁻³ down to 2⁻¹².
pub fn default_sweep() -> Vec<f64> {
    (3..=12).map(|j| libm::ldexp(1.0, -j)).collect()
}

/// Geometric sweep from `start` down to at least `end` with the given ratio.
pub fn geometric_sweep(start: f64, end: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && end > 0.0 && end <= start && ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument("geometric sweep needs start ≥ end > 0 and ratio in (0, 1)".into()));
    }
    let mut out = Vec::new();
    let mut eps = start;
    while eps >= end * (1.0 - 1e-9) {
        out.push(eps);
        eps *= ratio;
    }
    Ok(out)
}
