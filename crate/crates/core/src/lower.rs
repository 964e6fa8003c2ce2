//! Lower functions `H(t)` for the sup-norm of Brownian motion.
//!
//! Every spec is evaluated from `ln t` (or `ln ln t`) so that horizons such as
//! `t = e^{e^{700}}` stay representable.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ln₊ x = ln(max(x, e))`, always at least 1.
#[inline]
pub fn ln_plus(x: f64) -> f64 {
    if x > core::f64::consts::E {
        libm::log(x)
    } else {
        1.0
    }
}

const PI2_8: f64 = PI * PI / 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LowerFunctionSpec {
    /// `H_ν(t) = π / sqrt(8 (ln₊ln₊ t + ν ln₊ln₊ln₊ t))`.
    HNu { nu: f64 },
    /// `H(t) = sqrt(c / ln₊ln₊ t)`.
    CriticalChung { c: f64 },
    /// Piecewise-linear in `ln t` through `(t, H)` samples.
    Tabulated { samples: Vec<(f64, f64)> },
}

/// `H` together with the exponent `π² / (8H²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub h: f64,
    pub exponent: f64,
}

impl Profile {
    fn from_exponent(exponent: f64) -> Self {
        Self { h: libm::sqrt(PI2_8 / exponent), exponent }
    }

    fn from_h(h: f64) -> Self {
        Self { h, exponent: PI2_8 / (h * h) }
    }
}

impl LowerFunctionSpec {
    pub fn h_nu(nu: f64) -> Self {
        Self::HNu { nu }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::HNu { nu } => {
                if !(*nu >= 0.0 && nu.is_finite()) {
                    return Err(Error::InvalidArgument(format!("ν must be finite and ≥ 0, got {nu}")));
                }
            }
            Self::CriticalChung { c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::NonPositive { name: "c", value: *c });
                }
            }
            Self::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Err(Error::InvalidArgument("a table needs at least two samples".into()));
                }
                if samples.iter().any(|(t, h)| !(*t > 0.0 && t.is_finite() && *h > 0.0 && h.is_finite())) {
                    return Err(Error::InvalidArgument("table entries must be positive and finite".into()));
                }
                if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Unsorted("table times"));
                }
                if samples.windows(2).any(|w| w[1].1 > w[0].1) {
                    return Err(Error::InvalidArgument("tabulated H must be nonincreasing".into()));
                }
            }
        }
        Ok(())
    }

    /// Range of `ln t` on which the spec is defined.
    pub fn ln_domain(&self) -> (f64, f64) {
        match self {
            Self::Tabulated { samples } => {
                (libm::log(samples[0].0), libm::log(samples[samples.len() - 1].0))
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Evaluates at `t` with `ln t = ln_t`.
    pub fn at_ln(&self, ln_t: f64) -> Result<Profile> {
        match self {
            Self::Tabulated { samples } => tabulated(samples, ln_t),
            _ => {
                let l1 = if ln_t > 1.0 { ln_t } else { 1.0 };
                Ok(self.analytic(ln_plus(l1)))
            }
        }
    }

    /// Evaluates at `t` with `ln ln t = u`.
    pub fn at_lnln(&self, u: f64) -> Result<Profile> {
        match self {
            Self::Tabulated { samples } => tabulated(samples, libm::exp(u)),
            _ => Ok(self.analytic(if u > 1.0 { u } else { 1.0 })),
        }
    }

    // `l2 = ln₊ln₊ t`
    fn analytic(&self, l2: f64) -> Profile {
        match self {
            Self::HNu { nu } => Profile::from_exponent(l2 + nu * ln_plus(l2)),
            Self::CriticalChung { c } => Profile { h: libm::sqrt(c / l2), exponent: PI2_8 * l2 / c },
            Self::Tabulated { .. } => unreachable!(),
        }
    }

    pub fn h(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return match self {
                Self::Tabulated { .. } => Err(Error::NonPositive { name: "t", value: t }),
                _ => Ok(self.analytic(1.0).h),
            };
        }
        Ok(self.at_ln(libm::log(t))?.h)
    }

    /// `κ = π² / (8c)` for the Chung family: the exponent is `κ ln₊ln₊ t`.
    pub fn chung_exponent(&self) -> Option<f64> {
        match self {
            Self::CriticalChung { c } => Some(PI2_8 / c),
            _ => None,
        }
    }
}

fn tabulated(samples: &[(f64, f64)], ln_t: f64) -> Result<Profile> {
    let lo = libm::log(samples[0].0);
    let hi = libm::log(samples[samples.len() - 1].0);
    let slack = 1e-12 * (1.0 + libm::fabs(hi));
    if !(ln_t >= lo - slack && ln_t <= hi + slack) {
        return Err(Error::InvalidArgument(format!(
            "ln t = {ln_t} lies outside the tabulated range [{lo}, {hi}]"
        )));
    }
    let idx = samples.partition_point(|(t, _)| libm::log(*t) <= ln_t).clamp(1, samples.len() - 1);
    let (t0, h0) = samples[idx - 1];
    let (t1, h1) = samples[idx];
    let (x0, x1) = (libm::log(t0), libm::log(t1));
    let w = ((ln_t - x0) / (x1 - x0)).clamp(0.0, 1.0);
    Ok(Profile::from_h(h0 + w * (h1 - h0)))
}
