//! Index-dependent monotone maps `phi_n` applied to the running maximum.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::Real;

/// A labelled real sequence `n -> a_n`.
#[derive(Clone)]
pub struct IndexSequence<T> {
    label: String,
    f: Arc<dyn Fn(u64) -> T + Send + Sync>,
}

impl<T: Real> IndexSequence<T> {
    pub fn new(label: impl Into<String>, f: impl Fn(u64) -> T + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    #[inline]
    pub fn at(&self, n: u64) -> T {
        (self.f)(n)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl<T> fmt::Debug for IndexSequence<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("IndexSequence").field(&self.label).finish()
    }
}

#[derive(Debug, Clone)]
pub enum TransformFamily<T> {
    Identity,
    /// `phi_n(m) = m^(n / ln n)`, defined for `n >= 2`.
    Power,
    /// `phi_n(m) = a_n m` with `a_n > 0`.
    Scale(IndexSequence<T>),
}

impl<T: Real> TransformFamily<T> {
    /// Coefficient sequence `a_n = ln(n) / n`.
    pub fn scale_log_over_n() -> Self {
        TransformFamily::Scale(IndexSequence::new("ln(n)/n", |n| {
            let x = T::from_index(n);
            x.ln() / x
        }))
    }

    pub fn name(&self) -> &'static str {
        match self {
            TransformFamily::Identity => "identity",
            TransformFamily::Power => "power",
            TransformFamily::Scale(_) => "scale",
        }
    }

    /// Smallest index where `phi_n` is defined.
    pub fn min_index(&self) -> u64 {
        match self {
            TransformFamily::Power => 2,
            _ => 1,
        }
    }

    fn power_exponent(n: u64) -> Result<T> {
        if n < 2 {
            return Err(Error::domain("power transform", format!("undefined at n = {n}")));
        }
        let x = T::from_index(n);
        Ok(x / x.ln())
    }

    fn scale_coefficient(seq: &IndexSequence<T>, n: u64) -> Result<T> {
        let a = seq.at(n);
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::domain(
                "scale transform",
                format!("a_{n} = {a} must be positive ({})", seq.label()),
            ));
        }
        Ok(a)
    }

    /// `phi_n(m)`.
    pub fn apply(&self, n: u64, m: T) -> Result<T> {
        match self {
            TransformFamily::Identity => Ok(m),
            TransformFamily::Power => {
                let e = Self::power_exponent(n)?;
                if m < T::zero() {
                    return Err(Error::domain(
                        "power transform",
                        format!("negative argument {m}"),
                    ));
                }
                Ok(m.powf(e))
            }
            TransformFamily::Scale(seq) => Ok(Self::scale_coefficient(seq, n)? * m),
        }
    }

    /// `phi_n^{-1}(y)`: the threshold `x_n` with `{phi_n(M_n) <= y} = {M_n <= x_n}`.
    pub fn inverse(&self, n: u64, y: T) -> Result<T> {
        if y.is_nan() {
            return Err(Error::domain("transform inverse", "level is NaN"));
        }
        match self {
            TransformFamily::Identity => Ok(y),
            TransformFamily::Power => {
                // validates n first so n = 1 reports the index problem
                Self::power_exponent(n)?;
                if !(y > T::zero() && y <= T::one()) {
                    return Err(Error::domain(
                        "power transform inverse",
                        format!("level {y} outside (0, 1]"),
                    ));
                }
                let x = T::from_index(n);
                Ok(y.powf(x.ln() / x))
            }
            TransformFamily::Scale(seq) => Ok(y / Self::scale_coefficient(seq, n)?),
        }
    }

    /// `ln phi_n^{-1}(y)` where it has a closed form more precise than the
    /// logarithm of the rounded threshold: `ln(y) ln(n) / n` for the power
    /// transform, whose thresholds crowd against 1.
    pub fn log_inverse(&self, n: u64, y: T) -> Option<T> {
        match self {
            TransformFamily::Power if n >= 2 && y > T::zero() && y <= T::one() => {
                let x = T::from_index(n);
                Some(y.ln() * x.ln() / x)
            }
            _ => None,
        }
    }
}

/// `phi_n^{-1}(level)`.
pub fn thresholds_from_transform<T: Real>(
    family: &TransformFamily<T>,
    level: T,
    n: u64,
) -> Result<T> {
    family.inverse(n, level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_threshold_example() {
        let x = thresholds_from_transform(&TransformFamily::<f64>::Power, 0.9, 100).unwrap();
        // 0.9^(ln 100 / 100) = exp(ln 0.9 * 0.0460517)
        let by_hand = (0.9_f64.ln() * (100.0_f64.ln() / 100.0)).exp();
        assert!((x - by_hand).abs() < 1e-15);
        assert!((x - 0.99515).abs() < 1e-5);
    }

    #[test]
    fn identity_threshold() {
        for n in [1, 5, 1000] {
            assert_eq!(
                thresholds_from_transform(&TransformFamily::<f64>::Identity, 0.37, n).unwrap(),
                0.37
            );
        }
    }

    #[test]
    fn scale_threshold_example() {
        let x = thresholds_from_transform(&TransformFamily::<f64>::scale_log_over_n(), 2.0, 100)
            .unwrap();
        assert!((x - 200.0 / 100.0_f64.ln()).abs() < 1e-12);
        assert!((x - 43.4294).abs() < 1e-4);
    }

    #[test]
    fn power_domain_errors() {
        let p = TransformFamily::<f64>::Power;
        assert!(p.inverse(1, 0.5).is_err());
        assert!(p.inverse(10, 0.0).is_err());
        assert!(p.inverse(10, 1.5).is_err());
        assert!(p.inverse(10, 1.0).is_ok());
        assert!(p.apply(1, 0.5).is_err());
        assert!(p.apply(10, -0.5).is_err());
    }

    #[test]
    fn scale_rejects_nonpositive_coefficients() {
        let s = TransformFamily::Scale(IndexSequence::new("n - 3", |n| n as f64 - 3.0));
        assert!(s.inverse(3, 2.0).is_err());
        assert!(s.inverse(2, 2.0).is_err());
        assert!(s.inverse(4, 2.0).is_ok());
    }

    #[test]
    fn inverse_undoes_apply() {
        let fams = [
            TransformFamily::<f64>::Identity,
            TransformFamily::Power,
            TransformFamily::scale_log_over_n(),
        ];
        for fam in &fams {
            for n in [2_u64, 10, 1000] {
                for m in [0.2, 0.7, 0.999] {
                    let y = fam.apply(n, m).unwrap();
                    let back = fam.inverse(n, y).unwrap();
                    assert!((back - m).abs() < 1e-12 * m, "{} n={n} m={m}", fam.name());
                }
            }
        }
    }
}
