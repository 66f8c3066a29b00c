//! Log-space helpers shared by the event engine and the criteria.

use crate::Real;

/// `ln(1 - e^x)` for `x <= 0`.
///
/// Switches between `ln(-expm1(x))` and `ln1p(-exp(x))` at `-ln 2`, which
/// keeps full relative precision on both sides.
pub fn log1m_exp<T: Real>(x: T) -> T {
    if x > T::zero() {
        return T::nan();
    }
    if x == T::zero() {
        return T::neg_infinity();
    }
    if x > -T::LN_2() {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(e^a - e^b)` for `a >= b`.
///
/// Returns `-inf` for `a == b` (exact zero difference) and NaN when `b > a`.
pub fn log_diff_exp<T: Real>(a: T, b: T) -> T {
    if b == T::neg_infinity() {
        return a;
    }
    if a < b {
        return T::nan();
    }
    if a == b {
        return T::neg_infinity();
    }
    a + log1m_exp(b - a)
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp<T: Real>(a: T, b: T) -> T {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == T::neg_infinity() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Ordinary least squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}
