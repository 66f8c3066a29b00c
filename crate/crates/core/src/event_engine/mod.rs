//! Exact log-space probabilities of compound maxima-threshold events.
//!
//! With `X_i` i.i.d. from `F`, `M_n = max(X_1..X_n)` and nondecreasing
//! thresholds, every event below factorizes over blocks of independent
//! samples. The run event `A_n^c ... A_{n+k-1}^c A_{n+k}` does not factor
//! into a single product for `k >= 2`; it is evaluated through the recursion
//!
//! ```text
//! D_0(y)     = F(y)^n
//! D_{k+1}(y) = [D_k(y) - D_k(x_{n+k})] F(y),   y >= x_{n+k}
//! P(run k)   = D_k(x_{n+k})
//! ```
//!
//! where `D_k(y) = P(M_n > x_n, ..., M_{n+k-1} > x_{n+k-1}, M_{n+k} <= y)`.
//! The single-product form is kept as [`EventFamily::prob_run_factorized`]:
//! it is the probability of the staircase sub-event
//! `{x_n < M_n <= x_{n+1}, ..., x_{n+k-1} < M_{n+k-1} <= x_{n+k}, M_{n+k} <= x_{n+k}}`,
//! which coincides with the run event for `k <= 1`.

mod thresholds;

pub use thresholds::{ThresholdSequence, ThresholdSource};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::numerics::{log_diff_exp, CompensatedSum};
use crate::Real;

/// `ln P(M_n <= x) = n ln F(x)`.
pub fn prob_max_le<T: Real>(d: &Distribution<T>, n: u64, x: T) -> T {
    pow_n(n, d.log_cdf(x))
}

/// `n l`, keeping `ln 1 = 0` exact.
#[inline]
fn pow_n<T: Real>(n: u64, l: T) -> T {
    if l == T::zero() {
        T::zero()
    } else {
        T::from_index(n) * l
    }
}

struct Window<T> {
    xs: Vec<T>,
    lns: Vec<Option<T>>,
    lf: Vec<T>,
}

/// `ln(e^a - e^b)` where rounding may put a nominally larger `a` just below `b`.
#[inline]
fn log_gap<T: Real>(a: T, b: T) -> T {
    if a <= b {
        T::neg_infinity()
    } else {
        log_diff_exp(a, b)
    }
}

/// Log-probability of a single run term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunTerm<T> {
    pub n: u64,
    pub k: u64,
    pub log_prob: T,
}

/// A distribution paired with a threshold sequence: the event family
/// `A_n = {M_n <= x_n}`.
#[derive(Debug, Clone)]
pub struct EventFamily<T: Real> {
    dist: Distribution<T>,
    thresholds: ThresholdSequence<T>,
}

impl<T: Real> EventFamily<T> {
    pub fn new(dist: Distribution<T>, thresholds: ThresholdSequence<T>) -> Self {
        Self { dist, thresholds }
    }

    pub fn distribution(&self) -> &Distribution<T> {
        &self.dist
    }

    pub fn thresholds(&self) -> &ThresholdSequence<T> {
        &self.thresholds
    }

    pub fn n_min(&self) -> u64 {
        self.thresholds.n_min()
    }

    /// `ln P(A_n)`.
    pub fn log_p_event(&self, n: u64) -> Result<T> {
        let x = self.thresholds.at(n)?;
        Ok(pow_n(n, self.dist.log_cdf_hinted(x, self.thresholds.ln_at(n))))
    }

    /// Thresholds of `[n, n+len]`, their closed-form logs and `ln F(x_j)`.
    fn window(&self, n: u64, len: u64) -> Result<Window<T>> {
        let xs = self.thresholds.window(n, len)?;
        let lns: Vec<_> = (n..=n + len).map(|j| self.thresholds.ln_at(j)).collect();
        let lf = xs
            .iter()
            .zip(&lns)
            .map(|(&x, &l)| self.dist.log_cdf_hinted(x, l))
            .collect();
        Ok(Window { xs, lns, lf })
    }

    fn log_interval(&self, w: &Window<T>, i: usize, j: usize) -> T {
        self.dist
            .log_interval_prob_hinted(w.xs[i], w.lns[i], w.xs[j], w.lns[j])
    }

    /// Exact `ln P(A_n^c ... A_{n+k}^c A_{n+k})` for every `k = 0..=max_k`.
    pub fn run_terms(&self, n: u64, max_k: u64) -> Result<Vec<RunTerm<T>>> {
        let lf = self.window(n, max_k)?.lf;
        let mut log_d: Vec<T> = lf.iter().map(|&l| pow_n(n, l)).collect();
        let mut out = Vec::with_capacity(lf.len());
        out.push(RunTerm {
            n,
            k: 0,
            log_prob: log_d[0],
        });
        for k in 0..max_k as usize {
            let base = log_d[k];
            for j in k + 1..lf.len() {
                log_d[j] = log_gap(log_d[j], base) + lf[j];
            }
            out.push(RunTerm {
                n,
                k: k as u64 + 1,
                log_prob: log_d[k + 1],
            });
        }
        Ok(out)
    }

    /// Exact `ln P(A_n^c ... A_{n+k-1}^c A_{n+k})`.
    pub fn prob_run(&self, n: u64, k: u64) -> Result<T> {
        Ok(self.run_terms(n, k)?[k as usize].log_prob)
    }

    /// The single-product run expression
    /// `[F(x_{n+1})^n - F(x_n)^n] Π_{j=1}^{k-1} [F(x_{n+j+1}) - F(x_{n+j})] F(x_{n+k})`,
    /// in log space. Equals [`prob_run`](Self::prob_run) for `k <= 1`; for
    /// larger `k` it is the probability of the staircase sub-event.
    pub fn prob_run_factorized(&self, n: u64, k: u64) -> Result<T> {
        let w = self.window(n, k)?;
        if k == 0 {
            return Ok(pow_n(n, w.lf[0]));
        }
        let mut acc = log_gap(pow_n(n, w.lf[1]), pow_n(n, w.lf[0]));
        for j in 1..k as usize {
            acc = acc + self.log_interval(&w, j, j + 1);
        }
        Ok(acc + w.lf[k as usize])
    }

    /// Closed-form ratio
    /// `[F(x_{n+k+1}) - F(x_{n+k})] F(x_{n+k+1}) / F(x_{n+k})`, i.e. the ratio of
    /// consecutive factorized run terms `k+1` over `k`.
    pub fn run_ratio(&self, n: u64, k: u64) -> Result<T> {
        if k == 0 {
            return Err(Error::domain("run_ratio", "k must be at least 1"));
        }
        let w = self.window(n, k + 1)?;
        let k = k as usize;
        let (la, lb) = (w.lf[k], w.lf[k + 1]);
        if la == T::neg_infinity() {
            return Err(Error::UndefinedRatio { n, k: k as u64 });
        }
        let gap = self.log_interval(&w, k, k + 1);
        if gap == T::neg_infinity() {
            return Ok(T::zero());
        }
        Ok((gap + lb - la).exp())
    }

    /// `ln P(A_n A_{n+1}^c) = ln[F(x_n)^n (1 - F(x_{n+1}))]`.
    pub fn prob_event_then_fail(&self, n: u64) -> Result<T> {
        let w = self.window(n, 1)?;
        Ok(pow_n(n, w.lf[0]) + self.dist.log_survival_hinted(w.xs[1], w.lns[1]))
    }

    /// `ln P(A_n A_{n+k}) = ln[F(x_n)^n F(x_{n+k})^k]`, `k >= 1`.
    pub fn prob_joint(&self, n: u64, k: u64) -> Result<T> {
        if k == 0 {
            return Err(Error::domain("prob_joint", "k must be at least 1"));
        }
        let w = self.window(n, k)?;
        Ok(pow_n(n, w.lf[0]) + pow_n(k, w.lf[k as usize]))
    }

    /// `P(∪_{j=n}^{n+K} A_j)` as the compensated sum of the exact run terms,
    /// which partition the union by first occurrence.
    pub fn union_window(&self, n: u64, max_k: u64) -> Result<T> {
        let acc: CompensatedSum<T> = self
            .run_terms(n, max_k)?
            .into_iter()
            .map(|t| t.log_prob.exp())
            .collect();
        Ok(acc.value().min(T::one()))
    }
}
