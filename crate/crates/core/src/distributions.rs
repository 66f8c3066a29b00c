//! Continuous distributions with closed-form CDF, survival and quantile.
//!
//! Every family evaluates the survival function from its own closed form so
//! that tails near the right endpoint keep full relative precision, and
//! `log_cdf` goes through `ln_1p(-survival)` once `F(x) > 1/2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family<T> {
    /// Uniform on (0, 1).
    Uniform01,
    /// `F(x) = 1 - 1/x` for `x >= 1`.
    Pareto1,
    /// `F(x) = 1 - exp(-rate x)` for `x >= 0`.
    Exponential { rate: T },
}

/// Right endpoint `sup { x : F(x) < 1 }`, possibly `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RightEndpoint<T>(pub T);

impl<T: Real> RightEndpoint<T> {
    pub fn value(self) -> T {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

/// A validated distribution. Construct through [`Distribution::new`] or the
/// family shorthands; degenerate parameters are rejected there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution<T> {
    family: Family<T>,
}

impl<T: Real> Distribution<T> {
    pub fn new(family: Family<T>) -> Result<Self> {
        if let Family::Exponential { rate } = family {
            if !(rate > T::zero()) || !rate.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "exponential rate must be positive and finite, got {rate}"
                )));
            }
        }
        Ok(Self { family })
    }

    pub fn uniform01() -> Self {
        Self {
            family: Family::Uniform01,
        }
    }

    pub fn pareto1() -> Self {
        Self {
            family: Family::Pareto1,
        }
    }

    pub fn exponential(rate: T) -> Result<Self> {
        Self::new(Family::Exponential { rate })
    }

    pub fn family(&self) -> Family<T> {
        self.family
    }

    /// Left edge of the support.
    pub fn left_edge(&self) -> T {
        match self.family {
            Family::Uniform01 | Family::Exponential { .. } => T::zero(),
            Family::Pareto1 => T::one(),
        }
    }

    pub fn right_endpoint(&self) -> RightEndpoint<T> {
        match self.family {
            Family::Uniform01 => RightEndpoint(T::one()),
            Family::Pareto1 | Family::Exponential { .. } => RightEndpoint(T::infinity()),
        }
    }

    pub fn cdf(&self, x: T) -> T {
        if x.is_nan() {
            return T::nan();
        }
        match self.family {
            Family::Uniform01 => x.max(T::zero()).min(T::one()),
            Family::Pareto1 => {
                if x <= T::one() {
                    T::zero()
                } else {
                    T::one() - x.recip()
                }
            }
            Family::Exponential { rate } => {
                if x <= T::zero() {
                    T::zero()
                } else {
                    -(-rate * x).exp_m1()
                }
            }
        }
    }

    /// `1 - F(x)` from the closed form, never by subtraction from one
    /// (except for the uniform family, where `1 - x` is the closed form).
    pub fn survival(&self, x: T) -> T {
        if x.is_nan() {
            return T::nan();
        }
        match self.family {
            Family::Uniform01 => (T::one() - x).max(T::zero()).min(T::one()),
            Family::Pareto1 => {
                if x <= T::one() {
                    T::one()
                } else {
                    x.recip()
                }
            }
            Family::Exponential { rate } => {
                if x <= T::zero() {
                    T::one()
                } else {
                    (-rate * x).exp()
                }
            }
        }
    }

    /// `ln F(x)`, exactly 0 at and beyond the right endpoint.
    pub fn log_cdf(&self, x: T) -> T {
        let half = T::lit(0.5);
        let s = self.survival(x);
        if s.is_nan() {
            return T::nan();
        }
        if s == T::zero() {
            return T::zero();
        }
        if s < half {
            (-s).ln_1p()
        } else {
            self.cdf(x).ln()
        }
    }

    /// `ln (1 - F(x))`.
    pub fn log_survival(&self, x: T) -> T {
        if x.is_nan() {
            return T::nan();
        }
        match self.family {
            Family::Uniform01 => {
                if x >= T::one() {
                    T::neg_infinity()
                } else if x <= T::zero() {
                    T::zero()
                } else {
                    (-x).ln_1p()
                }
            }
            Family::Pareto1 => {
                if x <= T::one() {
                    T::zero()
                } else if x.is_infinite() {
                    T::neg_infinity()
                } else {
                    -x.ln()
                }
            }
            Family::Exponential { rate } => {
                if x <= T::zero() {
                    T::zero()
                } else {
                    -rate * x
                }
            }
        }
    }

    /// `ln (F(b) - F(a))` for `a <= b`; `-inf` when the interval carries no mass.
    ///
    /// Differences are taken on whichever side of the distribution keeps
    /// relative precision: CDF values in the left half, survival values in
    /// the right half.
    pub fn log_interval_prob(&self, a: T, b: T) -> T {
        if a.is_nan() || b.is_nan() || b < a {
            return T::nan();
        }
        let half = T::lit(0.5);
        if self.survival(a) <= half {
            crate::numerics::log_diff_exp(self.log_survival(a), self.log_survival(b))
        } else {
            crate::numerics::log_diff_exp(self.log_cdf(b), self.log_cdf(a))
        }
    }

    /// [`log_cdf`](Self::log_cdf) with an optional full-precision `ln x`.
    ///
    /// For the uniform family `ln F(x) = ln x`, so a threshold just below 1
    /// keeps the precision that rounding `x` itself would lose.
    pub fn log_cdf_hinted(&self, x: T, ln_x: Option<T>) -> T {
        match (self.family, ln_x) {
            (Family::Uniform01, Some(l)) if !l.is_nan() => l.min(T::zero()),
            _ => self.log_cdf(x),
        }
    }

    /// [`log_survival`](Self::log_survival) with an optional full-precision `ln x`.
    pub fn log_survival_hinted(&self, x: T, ln_x: Option<T>) -> T {
        match (self.family, ln_x) {
            (Family::Uniform01, Some(l)) if !l.is_nan() => {
                if l >= T::zero() {
                    T::neg_infinity()
                } else {
                    crate::numerics::log1m_exp(l)
                }
            }
            _ => self.log_survival(x),
        }
    }

    /// [`log_interval_prob`](Self::log_interval_prob) with optional
    /// full-precision logarithms of both endpoints.
    pub fn log_interval_prob_hinted(&self, a: T, ln_a: Option<T>, b: T, ln_b: Option<T>) -> T {
        match (self.family, ln_a, ln_b) {
            (Family::Uniform01, Some(la), Some(lb)) if la <= lb => {
                let (la, lb) = (la.min(T::zero()), lb.min(T::zero()));
                if la == lb {
                    T::neg_infinity()
                } else {
                    crate::numerics::log_diff_exp(lb, la)
                }
            }
            _ => self.log_interval_prob(a, b),
        }
    }

    /// `F^{-1}(u)` for `u` in the open unit interval.
    pub fn quantile(&self, u: T) -> Result<T> {
        if !(u > T::zero() && u < T::one()) {
            return Err(Error::domain(
                "quantile",
                format!("probability {u} outside (0, 1)"),
            ));
        }
        Ok(self.quantile_unchecked(u))
    }

    #[inline]
    fn quantile_unchecked(&self, u: T) -> T {
        match self.family {
            Family::Uniform01 => u,
            Family::Pareto1 => (T::one() - u).recip(),
            Family::Exponential { rate } => -(-u).ln_1p() / rate,
        }
    }

    /// Inverse-transform draw from the stream's next open-interval uniform.
    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> T {
        let mut u = T::lit(rng.next_open01());
        // narrower scalars can round the top of the 2^-53 grid up to 1
        if u >= T::one() {
            u = T::one() - T::epsilon();
        }
        self.quantile_unchecked(u)
    }
}

impl<T: Real> fmt::Display for Distribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Uniform01 => write!(f, "uniform01"),
            Family::Pareto1 => write!(f, "pareto1"),
            Family::Exponential { rate } => write!(f, "exponential:{rate}"),
        }
    }
}

/// Parses the scenario-file names `uniform01`, `pareto1`, `exponential:<rate>`.
impl<T: Real> FromStr for Distribution<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "uniform01" => Ok(Self::uniform01()),
            "pareto1" => Ok(Self::pareto1()),
            _ => {
                if let Some(rate) = s.strip_prefix("exponential:") {
                    let rate: f64 = rate.trim().parse().map_err(|_| {
                        Error::InvalidParameter(format!("bad exponential rate `{rate}`"))
                    })?;
                    Self::exponential(T::lit(rate))
                } else {
                    Err(Error::InvalidParameter(format!(
                        "unknown distribution `{s}` (expected uniform01, pareto1 or exponential:<rate>)"
                    )))
                }
            }
        }
    }
}
