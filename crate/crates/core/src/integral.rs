//! Integral tests for lower functions relative to a parameter set `G`.
//!
//! The integral
//!
//! ```text
//! ψ_H(G) = ∫_1^∞ K_G(H⁶(s)) / (s H²(s)) · exp(-π²/(8H²(s))) ds
//! ```
//!
//! is evaluated after the substitutions `v = ln s` on `[1, e]` and
//! `u = ln ln s` beyond, where the integrand of the `H_ν` family behaves like
//! `u^{1 + 3d - ν}`. Horizons `T` are therefore passed as `u = ln ln T`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::Cell;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lower::LowerFunctionSpec;
use crate::quad::integrate;
use crate::sets::SetModel;
use crate::smallball::{erdos_sequence, ln_erdos, sigma_series, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converges,
    Diverges,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiResult {
    /// `(ln ln T, ψ up to T)`.
    pub partial_integrals: Vec<(f64, f64)>,
    pub verdict: Verdict,
    pub method: Method,
    /// Critical parameter: `ν*` for `H_ν`, `c*` for the Chung family.
    pub threshold: Option<f64>,
    /// Upper bound on the integral beyond the last horizon.
    pub tail_bound: Option<f64>,
    /// Ratio of the increments over `[U/2, U]` and `[U/4, U/2]`.
    pub doubling_ratio: Option<f64>,
    pub note: String,
}

impl PsiResult {
    fn analytic(verdict: Verdict, threshold: Option<f64>, note: String) -> Self {
        Self {
            partial_integrals: Vec::new(),
            verdict,
            method: Method::Analytic,
            threshold,
            tail_bound: None,
            doubling_ratio: None,
            note,
        }
    }
}

/// Doubling ratios below this are read as convergence.
pub const CONVERGENT_RATIO: f64 = 0.75;
/// Doubling ratios above this are read as divergence.
pub const DIVERGENT_RATIO: f64 = 0.95;
const SHORTEST_DOUBLING: f64 = 8.0;
const REL_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 20_000;

fn verdict_from_ratio(ratio: f64) -> Verdict {
    if ratio < CONVERGENT_RATIO {
        Verdict::Converges
    } else if ratio > DIVERGENT_RATIO {
        Verdict::Diverges
    } else {
        Verdict::Undetermined
    }
}

struct Integrand<'a> {
    h: &'a LowerFunctionSpec,
    g: &'a SetModel,
    error: Cell<Option<Error>>,
}

impl<'a> Integrand<'a> {
    fn new(h: &'a LowerFunctionSpec, g: &'a SetModel) -> Self {
        Self { h, g, error: Cell::new(None) }
    }

    fn record<T>(&self, r: Result<T>) -> Option<T> {
        match r {
            Ok(x) => Some(x),
            Err(e) => {
                self.error.set(Some(e));
                None
            }
        }
    }

    fn eval(&self, p: Result<crate::lower::Profile>, jacobian_log: f64) -> f64 {
        let Some(p) = self.record(p) else { return 0.0 };
        let h6 = libm::pow(p.h, 6.0);
        let Some(k) = self.record(self.g.kolmogorov_entropy(h6)) else { return 0.0 };
        if k == 0 {
            return 0.0;
        }
        k as f64 / (p.h * p.h) * libm::exp(jacobian_log - p.exponent)
    }

    /// Integrand with respect to `v = ln s`.
    fn in_v(&self, v: f64) -> f64 {
        self.eval(self.h.at_ln(v), 0.0)
    }

    /// Integrand with respect to `u = ln ln s`.
    fn in_u(&self, u: f64) -> f64 {
        self.eval(self.h.at_lnln(u), u)
    }

    fn finish(&self) -> Result<()> {
        match self.error.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn over_u(&self, a: f64, b: f64) -> Result<f64> {
        let r = integrate(|u| self.in_u(u), a, b, 0.0, REL_TOL, MAX_PANELS);
        self.finish()?;
        Ok(r.value)
    }

    fn over_v(&self, a: f64, b: f64) -> Result<f64> {
        let r = integrate(|v| self.in_v(v), a, b, 0.0, REL_TOL, MAX_PANELS);
        self.finish()?;
        Ok(r.value)
    }
}

/// Checks that `H⁶` stays above the set's resolution and that a table covers
/// `[1, T]` for `ln ln T = u`.
fn check_reach(h: &LowerFunctionSpec, g: &SetModel, u: f64) -> Result<()> {
    if let LowerFunctionSpec::Tabulated { .. } = h {
        let (lo, hi) = h.ln_domain();
        let need = libm::exp(u);
        if lo > 0.0 || hi < need * (1.0 - 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "table covers ln t ∈ [{lo}, {hi}] but the integral needs [0, {need}]"
            )));
        }
    }
    if let Some(floor) = g.resolution() {
        let h6 = libm::pow(h.at_lnln(u)?.h, 6.0);
        if h6 < floor * (1.0 - crate::sets::TIE_SLACK) {
            return Err(Error::BelowResolution { scale: h6, floor });
        }
    }
    Ok(())
}

/// Largest `u ≤ cap` at which `H⁶` is still resolved by `G`.
pub fn resolved_reach(h: &LowerFunctionSpec, g: &SetModel, cap: f64) -> f64 {
    if check_reach(h, g, cap).is_ok() {
        return cap;
    }
    if check_reach(h, g, 0.0).is_err() {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if check_reach(h, g, mid).is_ok() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `∫_U^∞` bound for `H_ν` from the envelope `K_G(ε) ≤ A ε^{-d}`, valid for
/// `U ≥ e` and `ν > 2 + 3d`.
pub fn tail_bound(nu: f64, envelope: (f64, f64), u: f64) -> Option<f64> {
    let (a, d) = envelope;
    let m = 3.0 * d + 1.0;
    if u < core::f64::consts::E || nu <= m + 1.0 {
        return None;
    }
    let c = 8.0 / (PI * PI);
    Some(a * libm::pow(c, m) * libm::pow(1.0 + nu * libm::log(u) / u, m) * libm::pow(u, m + 1.0 - nu) / (nu - m - 1.0))
}

/// Partial integrals `ψ` up to each `T` with `ln ln T` in `horizons`.
pub fn psi_numeric(h: &LowerFunctionSpec, g: &SetModel, horizons: &[f64]) -> Result<PsiResult> {
    h.validate()?;
    if horizons.is_empty() {
        return Err(Error::InvalidArgument("at least one horizon is required".into()));
    }
    if horizons[0] < 0.0 || horizons.iter().any(|u| !u.is_finite()) {
        return Err(Error::InvalidArgument("horizons must satisfy T ≥ e".into()));
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Unsorted("horizons"));
    }
    let top = horizons[horizons.len() - 1];
    let f = Integrand::new(h, g);
    let mut partial_integrals = Vec::with_capacity(horizons.len());
    if g.is_empty() {
        partial_integrals.extend(horizons.iter().map(|u| (*u, 0.0)));
        return Ok(PsiResult {
            partial_integrals,
            verdict: Verdict::Converges,
            method: Method::Numeric,
            threshold: None,
            tail_bound: Some(0.0),
            doubling_ratio: None,
            note: "empty set".into(),
        });
    }
    check_reach(h, g, top)?;
    let mut total = f.over_v(0.0, 1.0)?;
    let mut last = 0.0;
    for &u in horizons {
        total += f.over_u(last, u)?;
        partial_integrals.push((u, total));
        last = u;
    }
    let (verdict, doubling_ratio, mut note) = if top >= SHORTEST_DOUBLING {
        let first = f.over_u(top / 4.0, top / 2.0)?;
        let second = f.over_u(top / 2.0, top)?;
        let ratio = second / first;
        (verdict_from_ratio(ratio), Some(ratio), format!("doubling test at ln ln T = {top}"))
    } else {
        (Verdict::Undetermined, None, format!("ln ln T = {top} is too short for the doubling test"))
    };
    let tail = match (h, g.entropy_envelope()) {
        (LowerFunctionSpec::HNu { nu }, Some(env)) => tail_bound(*nu, env, top),
        _ => None,
    };
    if tail.is_some() {
        note.push_str("; analytic tail bound attached");
    }
    Ok(PsiResult {
        partial_integrals,
        verdict,
        method: Method::Numeric,
        threshold: None,
        tail_bound: tail,
        doubling_ratio,
        note,
    })
}

/// Closed-form verdict for a set of Minkowski dimension `d`.
pub fn classify_dimension(h: &LowerFunctionSpec, d: f64) -> Result<PsiResult> {
    h.validate()?;
    Ok(match h {
        LowerFunctionSpec::HNu { nu } => {
            let threshold = 2.0 + 3.0 * d;
            let verdict = if *nu > threshold { Verdict::Converges } else { Verdict::Diverges };
            PsiResult::analytic(
                verdict,
                Some(threshold),
                format!("integrand ≍ u^{{{}}} in u = ln ln s", 1.0 + 3.0 * d - nu),
            )
        }
        LowerFunctionSpec::CriticalChung { c } => {
            let threshold = PI * PI / 8.0;
            let verdict = if *c < threshold { Verdict::Converges } else { Verdict::Diverges };
            PsiResult::analytic(
                verdict,
                Some(threshold),
                format!("integrand ≍ v^{{-{}}} (ln v)^{{{}}} in v = ln s", threshold / c, 1.0 + 3.0 * d),
            )
        }
        LowerFunctionSpec::Tabulated { .. } => PsiResult::analytic(
            Verdict::Undetermined,
            None,
            "a table says nothing beyond its last sample".into(),
        ),
    })
}

/// Analytic classification of `ψ_H(G)`.
pub fn classify(h: &LowerFunctionSpec, g: &SetModel) -> Result<PsiResult> {
    if g.is_empty() {
        h.validate()?;
        return Ok(PsiResult::analytic(Verdict::Converges, None, "empty set".into()));
    }
    match g.exact_dimension() {
        Some(d) => classify_dimension(h, d),
        None => {
            h.validate()?;
            Ok(PsiResult::analytic(Verdict::Undetermined, None, "the set has no closed-form dimension".into()))
        }
    }
}

/// Quasi-sure test: `∫ exp(-π²/(8H²)) ds / (s H⁸)`.
pub fn qs_verdict(h: &LowerFunctionSpec) -> Result<Verdict> {
    Ok(classify_dimension(h, 1.0)?.verdict)
}

/// Almost-sure test: `∫ exp(-π²/(8H²)) ds / (s H²)`.
pub fn as_verdict(h: &LowerFunctionSpec) -> Result<Verdict> {
    Ok(classify_dimension(h, 0.0)?.verdict)
}

/// Partial integrals of `∫ exp(-π²/(8H²)) ds / (s H^{2m})` at `ln ln T` in
/// `horizons`: `m = 1` is the almost-sure test, `m = 4` the quasi-sure one.
pub fn scalar_partials(h: &LowerFunctionSpec, m: i32, horizons: &[f64]) -> Result<Vec<(f64, f64)>> {
    h.validate()?;
    if horizons.first().is_none_or(|u| *u < 0.0) || horizons.iter().any(|u| !u.is_finite()) {
        return Err(Error::InvalidArgument("horizons must be finite and satisfy T ≥ e".into()));
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Unsorted("horizons"));
    }
    let one = SetModel::normalize(&crate::sets::SetSpec::Points { points: alloc::vec![0.0] })?;
    check_reach(h, &one, horizons[horizons.len() - 1])?;
    let error = Cell::new(None);
    let f = |p: Result<crate::lower::Profile>, jac: f64| match p {
        Ok(p) => libm::pow(p.h, -2.0 * f64::from(m)) * libm::exp(jac - p.exponent),
        Err(e) => {
            error.set(Some(e));
            0.0
        }
    };
    let mut total = integrate(|v| f(h.at_ln(v), 0.0), 0.0, 1.0, 0.0, REL_TOL, MAX_PANELS).value;
    let mut last = 0.0;
    let mut out = Vec::with_capacity(horizons.len());
    for &u in horizons {
        total += integrate(|x| f(h.at_lnln(x), x), last, u, 0.0, REL_TOL, MAX_PANELS).value;
        out.push((u, total));
        last = u;
    }
    match error.take() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumIntegralRow {
    pub n: u64,
    /// `ln ln 𝓮_n`.
    pub u: f64,
    /// `Σ_{m ≤ n} K_G(H_m⁶) σ(H_m)`.
    pub sum: f64,
    /// `ψ` up to `𝓮_n`.
    pub integral: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumIntegralReport {
    pub n_max: u64,
    pub rows: Vec<SumIntegralRow>,
    /// `(n, term_n / ∫ over [𝓮_n, 𝓮_{n+1}])`.
    pub block_ratios: Vec<(u64, f64)>,
    pub block_band: (f64, f64),
    pub analytic: Verdict,
    pub integral_numeric: Verdict,
    pub doubling_ratio: Option<f64>,
    /// The sum inherits the integral's verdict when every block ratio lies
    /// in `block_band`.
    pub sum_verdict: Verdict,
    pub contradictions: Vec<String>,
}

pub const MAX_BLOCKS: u64 = 1_000_000;
const BLOCK_BAND: (f64, f64) = (0.1, 10.0);
const DOUBLING_REACH: f64 = 1000.0;

fn checkpoints(n_max: u64, per_decade: f64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut x = 1.0f64;
    while x < n_max as f64 {
        let n = libm::round(x) as u64;
        if out.last() != Some(&n) {
            out.push(n);
        }
        x *= libm::pow(10.0, 1.0 / per_decade);
    }
    if out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}

/// Compares the Erdős-block sum with the integral along `T = 𝓮_n`.
pub fn sum_integral_equivalence(h: &LowerFunctionSpec, g: &SetModel, n_max: u64) -> Result<SumIntegralReport> {
    h.validate()?;
    if n_max == 0 || n_max > MAX_BLOCKS {
        return Err(Error::InvalidArgument(format!("N must lie in 1..={MAX_BLOCKS}")));
    }
    if g.is_empty() {
        return Err(Error::EmptySet);
    }
    let marks = checkpoints(n_max, 4.0);
    let horizons: Vec<f64> = marks.iter().map(|&n| libm::log(ln_erdos(n))).collect();
    let psi = psi_numeric(h, g, &horizons)?;

    let samples = checkpoints(n_max, 10.0);
    let f = Integrand::new(h, g);
    let mut rows = Vec::with_capacity(marks.len());
    let mut block_ratios = Vec::with_capacity(samples.len());
    let mut contradictions = Vec::new();
    let (mut next_mark, mut next_sample) = (0, 0);
    let mut sum = 0.0;
    for n in 1..=n_max {
        let e = erdos_sequence(n, h)?;
        let k = g.kolmogorov_entropy(libm::pow(e.h, 6.0))?;
        let term = k as f64 * sigma_series(e.h, DEFAULT_TOL)?.value;
        sum += term;
        if next_sample < samples.len() && samples[next_sample] == n {
            next_sample += 1;
            let block = f.over_v(e.ln_e, ln_erdos(n + 1))?;
            let ratio = term / block;
            if !(ratio >= BLOCK_BAND.0 && ratio <= BLOCK_BAND.1) {
                contradictions.push(format!("block ratio {ratio} at n = {n} leaves {BLOCK_BAND:?}"));
            }
            block_ratios.push((n, ratio));
        }
        if next_mark < marks.len() && marks[next_mark] == n {
            let (u, integral) = psi.partial_integrals[next_mark];
            rows.push(SumIntegralRow { n, u, sum, integral, ratio: sum / integral });
            next_mark += 1;
        }
    }
    if rows.windows(2).any(|w| w[1].sum < w[0].sum || w[1].integral < w[0].integral) {
        contradictions.push("a partial trajectory decreased".into());
    }

    let analytic = classify(h, g)?.verdict;
    let reach = resolved_reach(h, g, DOUBLING_REACH);
    let (integral_numeric, doubling_ratio) = if reach >= SHORTEST_DOUBLING {
        let d = psi_numeric(h, g, &[reach / 4.0, reach / 2.0, reach])?;
        (d.verdict, d.doubling_ratio)
    } else {
        (Verdict::Undetermined, None)
    };
    if analytic != Verdict::Undetermined
        && integral_numeric != Verdict::Undetermined
        && analytic != integral_numeric
    {
        contradictions.push(format!("numeric verdict {integral_numeric:?} disagrees with analytic {analytic:?}"));
    }
    let lo = block_ratios.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
    let hi = block_ratios.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    let banded = lo >= BLOCK_BAND.0 && hi <= BLOCK_BAND.1;
    let reference = if analytic == Verdict::Undetermined { integral_numeric } else { analytic };
    Ok(SumIntegralReport {
        n_max,
        rows,
        block_ratios,
        block_band: (lo, hi),
        analytic,
        integral_numeric,
        doubling_ratio,
        sum_verdict: if banded { reference } else { Verdict::Undetermined },
        contradictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub pieces: Vec<Verdict>,
    pub overall: Verdict,
    /// First diverging piece when `overall` is `Diverges`.
    pub witness: Option<usize>,
}

/// `Ψ_H` over a user-supplied decomposition: finite iff every piece
/// converges.
pub fn psi_decomposed(h: &LowerFunctionSpec, pieces: &[SetModel]) -> Result<Decomposition> {
    if pieces.is_empty() {
        return Err(Error::InvalidArgument("a decomposition needs at least one piece".into()));
    }
    let verdicts = pieces.iter().map(|g| classify(h, g).map(|r| r.verdict)).collect::<Result<Vec<_>>>()?;
    let witness = verdicts.iter().position(|v| *v == Verdict::Diverges);
    let overall = if verdicts.contains(&Verdict::Undetermined) {
        Verdict::Undetermined
    } else if witness.is_some() {
        Verdict::Diverges
    } else {
        Verdict::Converges
    };
    Ok(Decomposition { pieces: verdicts, overall, witness: if overall == Verdict::Diverges { witness } else { None } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::SetSpec;
    use alloc::vec;
    use proptest::prelude::*;

    fn set(spec: SetSpec) -> SetModel {
        SetModel::normalize(&spec).unwrap()
    }

    fn unit() -> SetModel {
        set(SetSpec::Interval { a: 0.0, b: 1.0 })
    }

    fn point(x: f64) -> SetModel {
        set(SetSpec::Points { points: vec![x] })
    }

    fn cantor(depth: u32) -> SetModel {
        set(SetSpec::Cantor { pieces: 2, ratio: 1.0 / 3.0, depth })
    }

    fn hnu(nu: f64) -> LowerFunctionSpec {
        LowerFunctionSpec::h_nu(nu)
    }

    #[test]
    fn thresholds_of_the_model_sets() {
        assert_eq!(classify(&hnu(5.5), &unit()).unwrap().verdict, Verdict::Converges);
        assert_eq!(classify(&hnu(4.5), &unit()).unwrap().verdict, Verdict::Diverges);
        assert_eq!(classify(&hnu(2.5), &point(0.2)).unwrap().verdict, Verdict::Converges);
        assert_eq!(classify(&hnu(1.5), &point(0.2)).unwrap().verdict, Verdict::Diverges);
        let c = classify(&hnu(3.5), &cantor(8)).unwrap();
        assert_eq!(c.verdict, Verdict::Diverges);
        assert!((c.threshold.unwrap() - (2.0 + 3.0 * libm::log(2.0) / libm::log(3.0))).abs() < 1e-12);
        assert_eq!(classify(&hnu(4.2), &cantor(8)).unwrap().verdict, Verdict::Converges);
        assert_eq!(classify(&hnu(4.0), &cantor(8)).unwrap().verdict, Verdict::Converges);
    }

    #[test]
    fn quasi_sure_and_almost_sure_thresholds() {
        let qs: Vec<Verdict> = [4.5, 5.0, 5.5].iter().map(|nu| qs_verdict(&hnu(*nu)).unwrap()).collect();
        assert_eq!(qs, [Verdict::Diverges, Verdict::Diverges, Verdict::Converges]);
        let as_: Vec<Verdict> = [1.5, 2.0, 2.5].iter().map(|nu| as_verdict(&hnu(*nu)).unwrap()).collect();
        assert_eq!(as_, [Verdict::Diverges, Verdict::Diverges, Verdict::Converges]);
        assert_eq!(as_verdict(&hnu(3.0)).unwrap(), Verdict::Converges);
        assert_eq!(qs_verdict(&hnu(3.0)).unwrap(), Verdict::Diverges);
    }

    #[test]
    fn chung_family_flips_at_the_critical_constant() {
        let crit = PI * PI / 8.0;
        for (c, v) in [(0.9 * crit, Verdict::Converges), (crit, Verdict::Diverges), (1.1 * crit, Verdict::Diverges)] {
            let h = LowerFunctionSpec::CriticalChung { c };
            assert_eq!(qs_verdict(&h).unwrap(), v, "c = {c}");
            assert_eq!(as_verdict(&h).unwrap(), v, "c = {c}");
        }
    }

    #[test]
    fn tabulated_and_dimensionless_inputs_are_undetermined() {
        let table = LowerFunctionSpec::Tabulated { samples: vec![(1.0, 1.0), (100.0, 0.5)] };
        assert_eq!(qs_verdict(&table).unwrap(), Verdict::Undetermined);
        let empty = set(SetSpec::Points { points: vec![] });
        assert_eq!(classify(&hnu(0.0), &empty).unwrap().verdict, Verdict::Converges);
    }

    #[test]
    fn point_integral_has_a_closed_form() {
        // H_0 over a point: ψ(U) = 8/π² + 4(U² - 1)/π² for U ≥ 1
        let r = psi_numeric(&hnu(0.0), &point(0.5), &[1.0, 3.0, 10.0]).unwrap();
        for (u, v) in r.partial_integrals {
            let exact = 8.0 / (PI * PI) + 4.0 * (u * u - 1.0) / (PI * PI);
            assert!((v / exact - 1.0).abs() < 1e-9, "u = {u}: {v} vs {exact}");
        }
        assert_eq!(r.verdict, Verdict::Diverges);
    }

    #[test]
    fn borderline_interval_grows_slowly() {
        let r = psi_numeric(&hnu(5.0), &unit(), &[10.0, 100.0, 1000.0, 10_000.0]).unwrap();
        let p: Vec<f64> = r.partial_integrals.iter().map(|x| x.1).collect();
        assert!(p.windows(2).all(|w| w[1] > w[0]));
        // increments per decade of u decrease toward (8/π²)⁴ ln 10, never below
        let inc: Vec<f64> = p.windows(2).map(|w| w[1] - w[0]).collect();
        let floor = libm::pow(8.0 / (PI * PI), 4.0) * libm::log(10.0);
        assert!(inc.windows(2).all(|w| w[1] < w[0]), "{inc:?}");
        assert!(inc.iter().all(|x| *x > floor), "{inc:?}");
        assert_eq!(classify(&hnu(5.0), &unit()).unwrap().verdict, Verdict::Diverges);
    }

    #[test]
    fn convergent_tail_is_small_far_out() {
        let r = psi_numeric(&hnu(6.0), &unit(), &[20.0, 10_000.0]).unwrap();
        let total = r.partial_integrals[1].1;
        let tail = r.tail_bound.unwrap();
        assert!(tail < 1e-3 * total, "tail {tail}, total {total}");
        assert_eq!(r.verdict, Verdict::Converges);
        // the bound at u = 20 dominates the actual remainder
        let short = psi_numeric(&hnu(6.0), &unit(), &[20.0]).unwrap();
        assert!(short.tail_bound.unwrap() >= total - short.partial_integrals[0].1);
    }

    #[test]
    fn cantor_numeric_agrees_with_classification() {
        let g = cantor(14);
        for (nu, v) in [(3.0, Verdict::Diverges), (5.0, Verdict::Converges)] {
            let reach = resolved_reach(&hnu(nu), &g, 1000.0);
            assert!(reach >= 100.0);
            let r = psi_numeric(&hnu(nu), &g, &[reach / 4.0, reach / 2.0, reach]).unwrap();
            assert_eq!(r.verdict, v, "ν = {nu}: {:?}", r.doubling_ratio);
            assert_eq!(classify(&hnu(nu), &g).unwrap().verdict, v);
        }
    }

    #[test]
    fn psi_rejects_bad_inputs() {
        assert!(matches!(psi_numeric(&hnu(6.0), &unit(), &[2.0, 1.0]), Err(Error::Unsorted(_))));
        assert!(psi_numeric(&hnu(6.0), &unit(), &[-1.0]).is_err());
        assert!(matches!(
            psi_numeric(&hnu(6.0), &cantor(4), &[100.0]),
            Err(Error::BelowResolution { .. })
        ));
        let table = LowerFunctionSpec::Tabulated { samples: vec![(1.0, 1.0), (100.0, 0.5)] };
        assert!(psi_numeric(&table, &unit(), &[3.0]).is_err());
        assert!(psi_numeric(&table, &unit(), &[1.0]).is_ok());
    }

    #[test]
    fn sums_track_integrals() {
        for (nu, v) in [(4.0, Verdict::Diverges), (6.0, Verdict::Converges)] {
            let rep = sum_integral_equivalence(&hnu(nu), &unit(), 100_000).unwrap();
            assert!(rep.contradictions.is_empty(), "{:?}", rep.contradictions);
            assert_eq!(rep.analytic, v);
            assert_eq!(rep.integral_numeric, v);
            assert_eq!(rep.sum_verdict, v);
        }
        let rep = sum_integral_equivalence(&hnu(3.0), &point(0.0), 10_000).unwrap();
        assert_eq!(rep.sum_verdict, as_verdict(&hnu(3.0)).unwrap());
        assert!(sum_integral_equivalence(&hnu(3.0), &unit(), MAX_BLOCKS + 1).is_err());
    }

    #[test]
    fn scalar_partials_match_the_point_integral() {
        let h = hnu(1.5);
        let a = scalar_partials(&h, 1, &[1.0, 5.0, 40.0]).unwrap();
        let b = psi_numeric(&h, &point(0.0), &[1.0, 5.0, 40.0]).unwrap().partial_integrals;
        for (x, y) in a.iter().zip(&b) {
            assert!((x.1 / y.1 - 1.0).abs() < 1e-9);
        }
        let qs = scalar_partials(&hnu(6.0), 4, &[10.0, 100.0]).unwrap();
        assert!(qs[1].1 > qs[0].1);
        assert!(scalar_partials(&h, 1, &[]).is_err());
    }

    #[test]
    fn decompositions() {
        let halves = [set(SetSpec::Interval { a: 0.0, b: 0.5 }), set(SetSpec::Interval { a: 0.5, b: 1.0 })];
        assert_eq!(psi_decomposed(&hnu(6.0), &halves).unwrap().overall, Verdict::Converges);
        let d = psi_decomposed(&hnu(4.0), &[unit()]).unwrap();
        assert_eq!((d.overall, d.witness), (Verdict::Diverges, Some(0)));
        let points = [point(0.1), point(0.4), point(0.9)];
        assert_eq!(psi_decomposed(&hnu(3.0), &points).unwrap().overall, Verdict::Converges);
        assert!(psi_decomposed(&hnu(3.0), &[]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn qs_is_classify_on_the_unit_interval(nu in 0.0f64..10.0) {
            prop_assert_eq!(qs_verdict(&hnu(nu)).unwrap(), classify(&hnu(nu), &unit()).unwrap().verdict);
            prop_assert_eq!(as_verdict(&hnu(nu)).unwrap(), classify(&hnu(nu), &point(0.3)).unwrap().verdict);
        }

        #[test]
        fn partial_integrals_are_nondecreasing(nu in 0.0f64..8.0, a in 0.0f64..5.0, b in 0.1f64..20.0) {
            let r = psi_numeric(&hnu(nu), &unit(), &[a, a + b, a + 2.0 * b]).unwrap();
            let p: Vec<f64> = r.partial_integrals.iter().map(|x| x.1).collect();
            prop_assert!(p[0] >= 0.0 && p[1] >= p[0] && p[2] >= p[1]);
        }
    }
}
