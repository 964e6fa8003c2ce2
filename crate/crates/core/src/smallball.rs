//! Small-ball probabilities of the sup-norm and the Erdős blocking skeleton.

use alloc::vec::Vec;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lower::{ln_plus, LowerFunctionSpec};

pub const DEFAULT_TOL: f64 = 1e-14;
const MAX_TERMS: u64 = 1_000_000;

/// `σ(r) = P(sup_{[0,1]} |W| ≤ r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallBallValue {
    pub r: f64,
    pub value: f64,
    /// `ln σ(r)`, finite even when `value` underflows.
    pub ln_value: f64,
    pub truncation_terms: u64,
    /// Magnitude of the first omitted term, which bounds the remainder.
    pub truncation_bound: f64,
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name: "r", value: r })
    }
}

/// Sums the eigenfunction series
/// `(4/π) Σ_k (-1)^k/(2k+1) · exp(-(2k+1)²π²/(8r²))`.
pub fn sigma_series(r: f64, tol: f64) -> Result<SmallBallValue> {
    check_r(r)?;
    if !(tol > 0.0) {
        return Err(Error::NonPositive { name: "tol", value: tol });
    }
    let c = PI * PI / (8.0 * r * r);
    // terms relative to the leading one: (-1)^k/(2k+1) · exp(-((2k+1)² - 1) c)
    let mut sum = 1.0;
    let mut k = 1u64;
    let next = loop {
        let m = (2 * k + 1) as f64;
        let term = libm::exp(-(m * m - 1.0) * c) / m;
        if term < tol * sum {
            break term;
        }
        if k >= MAX_TERMS {
            return Err(Error::ResourceCap("small-ball series did not converge".into()));
        }
        sum += if k % 2 == 1 { -term } else { term };
        k += 1;
    };
    let ln_value = libm::log(4.0 / PI) - c + libm::log(sum);
    Ok(SmallBallValue {
        r,
        value: libm::exp(ln_value).min(1.0),
        ln_value,
        truncation_terms: k,
        truncation_bound: next * libm::exp(ln_value) / sum,
    })
}

/// Leading term `(4/π) e^{-π²/(8r²)}`.
pub fn sigma_asymptotic(r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(4.0 / PI * libm::exp(-PI * PI / (8.0 * r * r)))
}

/// `ln 𝓮_n = n / ln₊ n`.
pub fn ln_erdos(n: u64) -> f64 {
    let x = n as f64;
    x / ln_plus(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErdosSequence {
    pub n: u64,
    pub ln_e: f64,
    pub h: f64,
}

impl ErdosSequence {
    /// `𝓮_n`; infinite once it leaves the double range.
    pub fn e_n(&self) -> f64 {
        libm::exp(self.ln_e)
    }
}

pub fn erdos_sequence(n: u64, h: &LowerFunctionSpec) -> Result<ErdosSequence> {
    if n == 0 {
        return Err(Error::InvalidArgument("the Erdős sequence starts at n = 1".into()));
    }
    let ln_e = ln_erdos(n);
    Ok(ErdosSequence { n, ln_e, h: h.at_ln(ln_e)?.h })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockingQuantities {
    pub i: u64,
    pub j: u64,
    /// `𝓮_j / (𝓮_j - 𝓮_i)`.
    pub lambda: f64,
    /// `H_j sqrt(λ) + H_i sqrt(λ - 1)`.
    pub delta: f64,
}

pub fn blocking_quantities(i: u64, j: u64, h: &LowerFunctionSpec) -> Result<BlockingQuantities> {
    if i == 0 || j <= i {
        return Err(Error::InvalidArgument("blocking needs j > i ≥ 1".into()));
    }
    let a = erdos_sequence(i, h)?;
    let b = erdos_sequence(j, h)?;
    let gap = b.ln_e - a.ln_e;
    let lambda = 1.0 / -libm::expm1(-gap);
    let lambda_minus_one = 1.0 / libm::expm1(gap);
    let delta = b.h * libm::sqrt(lambda) + a.h * libm::sqrt(lambda_minus_one);
    Ok(BlockingQuantities { i, j, lambda, delta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    /// `(1/a) H_n² 𝓮_{n+1} ≤ 𝓮_{n+1} - 𝓮_n ≤ a H_{n+1}² 𝓮_n`.
    KeyEe,
    /// `𝓮_j - 𝓮_i ≥ 𝓮_i (j - i)/ln i · (1 + o(1))`.
    Ees,
}

/// One audited index. For `KeyEe`, `lhs = H_n² 𝓮_{n+1}/𝓮_n`,
/// `rhs = H_{n+1}²`, `gap = (𝓮_{n+1} - 𝓮_n)/𝓮_n` and `ratio` is the smallest
/// `a` making both sides hold. For `Ees`, `lhs = (𝓮_j - 𝓮_i)/𝓮_i`,
/// `rhs = (j - i)/ln i` and `ratio = lhs/rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub n: u64,
    pub j: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub inequality: Inequality,
    pub range: (u64, u64),
    pub evaluated: u64,
    /// Largest needed `a` (`KeyEe`) or smallest ratio (`Ees`) over every
    /// evaluated index.
    pub fitted_constant: f64,
    /// Rows for which no finite constant works (`KeyEe`) or the ratio falls
    /// below `floor` (`Ees`).
    pub violations: u64,
    pub floor: Option<f64>,
    /// Log-spaced subset of the evaluated rows plus every violating row.
    pub rows: Vec<AuditRow>,
}

pub const AUDIT_MIN: u64 = 10;
pub const AUDIT_MAX: u64 = 10_000_000;
const ROWS_PER_DECADE: f64 = 40.0;

fn check_range(lo: u64, hi: u64) -> Result<()> {
    if lo < AUDIT_MIN || hi > AUDIT_MAX || lo > hi {
        return Err(Error::InvalidArgument(alloc::format!(
            "audit range must satisfy {AUDIT_MIN} ≤ lo ≤ hi ≤ {AUDIT_MAX}"
        )));
    }
    Ok(())
}

fn log_bucket(n: u64) -> i64 {
    libm::floor(libm::log10(n as f64) * ROWS_PER_DECADE) as i64
}

pub fn audit_key_ee(lo: u64, hi: u64, h: &LowerFunctionSpec) -> Result<AuditReport> {
    check_range(lo, hi)?;
    let mut rows = Vec::new();
    let mut fitted: f64 = 0.0;
    let mut violations = 0;
    let mut bucket = i64::MIN;
    let mut cur = erdos_sequence(lo, h)?;
    for n in lo..=hi {
        let next = erdos_sequence(n + 1, h)?;
        let d = next.ln_e - cur.ln_e;
        let gap = libm::expm1(d);
        let lhs = cur.h * cur.h * libm::exp(d);
        let rhs = next.h * next.h;
        let ratio = (lhs / gap).max(gap / rhs);
        let bad = !(gap > 0.0 && ratio.is_finite());
        if bad {
            violations += 1;
        } else {
            fitted = fitted.max(ratio);
        }
        let b = log_bucket(n);
        if bad || b != bucket || n == hi {
            bucket = b;
            rows.push(AuditRow { n, j: n + 1, lhs, rhs, ratio });
        }
        cur = next;
    }
    Ok(AuditReport {
        inequality: Inequality::KeyEe,
        range: (lo, hi),
        evaluated: hi - lo + 1,
        fitted_constant: fitted,
        violations,
        floor: None,
        rows,
    })
}

/// Audits pairs `i` on a geometric grid of `[lo, hi]` and `j - i` on a
/// geometric grid of `[1, i]`.
pub fn audit_ees(lo: u64, hi: u64, floor: f64) -> Result<AuditReport> {
    check_range(lo, hi)?;
    let mut rows = Vec::new();
    let mut fitted = f64::INFINITY;
    let mut violations = 0;
    let mut evaluated = 0;
    let mut last_i = 0;
    let mut x = lo as f64;
    while x <= hi as f64 * (1.0 + 1e-12) {
        let i = (libm::round(x) as u64).min(hi);
        x *= libm::pow(10.0, 1.0 / ROWS_PER_DECADE);
        if i == last_i {
            continue;
        }
        last_i = i;
        let mut last_j = i;
        let mut step = 1.0f64;
        while step <= i as f64 {
            let j = i + libm::round(step) as u64;
            step *= 2.0;
            if j == last_j {
                continue;
            }
            last_j = j;
            let lhs = libm::expm1(ln_erdos(j) - ln_erdos(i));
            let rhs = (j - i) as f64 / libm::log(i as f64);
            let ratio = lhs / rhs;
            evaluated += 1;
            fitted = fitted.min(ratio);
            if !(ratio >= floor) {
                violations += 1;
            }
            rows.push(AuditRow { n: i, j, lhs, rhs, ratio });
        }
    }
    Ok(AuditReport {
        inequality: Inequality::Ees,
        range: (lo, hi),
        evaluated,
        fitted_constant: fitted,
        violations,
        floor: Some(floor),
        rows,
    })
}
