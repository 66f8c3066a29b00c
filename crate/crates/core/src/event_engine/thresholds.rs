use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::transforms::{IndexSequence, TransformFamily};
use crate::Real;

#[derive(Debug, Clone)]
pub enum ThresholdSource<T> {
    /// `x_n` given directly as a function of `n`.
    Explicit(IndexSequence<T>),
    /// Finite table `x_first, x_first+1, ...`.
    Listed { first: u64, values: Vec<T> },
    /// `x_n = phi_n^{-1}(level)`.
    FromTransform { family: TransformFamily<T>, level: T },
}

/// Thresholds `x_n` defining the events `A_n = {M_n <= x_n}`.
///
/// Values are computed lazily and memoized. Monotonicity is checked on
/// every window that an operation requests.
pub struct ThresholdSequence<T> {
    source: ThresholdSource<T>,
    n_min: u64,
    cache: RwLock<HashMap<u64, T>>,
}

impl<T: Real> ThresholdSequence<T> {
    pub fn new(source: ThresholdSource<T>, n_min: u64) -> Result<Self> {
        let floor = match &source {
            ThresholdSource::FromTransform { family, .. } => family.min_index(),
            ThresholdSource::Listed { first, .. } => *first,
            ThresholdSource::Explicit(_) => 1,
        };
        if n_min < floor.max(1) {
            return Err(Error::InvalidConfig(format!(
                "n_min = {n_min} below the first defined index {}",
                floor.max(1)
            )));
        }
        if let ThresholdSource::Listed { values, .. } = &source {
            if values.is_empty() {
                return Err(Error::InvalidConfig("empty threshold table".into()));
            }
        }
        Ok(Self {
            source,
            n_min,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn explicit(seq: IndexSequence<T>, n_min: u64) -> Result<Self> {
        Self::new(ThresholdSource::Explicit(seq), n_min)
    }

    pub fn listed(first: u64, values: Vec<T>) -> Result<Self> {
        Self::new(ThresholdSource::Listed { first, values }, first)
    }

    /// Transform-derived thresholds starting at the transform's first defined index.
    pub fn from_transform(family: TransformFamily<T>, level: T) -> Result<Self> {
        let n_min = family.min_index();
        Self::new(ThresholdSource::FromTransform { family, level }, n_min)
    }

    pub fn constant(c: T, n_min: u64) -> Result<Self> {
        Self::explicit(IndexSequence::new(format!("{c}"), move |_| c), n_min)
    }

    pub fn source(&self) -> &ThresholdSource<T> {
        &self.source
    }

    pub fn n_min(&self) -> u64 {
        self.n_min
    }

    /// Last defined index, `None` for unbounded sequences.
    pub fn last_index(&self) -> Option<u64> {
        match &self.source {
            ThresholdSource::Listed { first, values } => Some(first + values.len() as u64 - 1),
            _ => None,
        }
    }

    fn compute(&self, n: u64) -> Result<T> {
        match &self.source {
            ThresholdSource::Explicit(seq) => Ok(seq.at(n)),
            ThresholdSource::Listed { first, values } => Ok(values[(n - first) as usize]),
            ThresholdSource::FromTransform { family, level } => family.inverse(n, *level),
        }
    }

    /// `x_n`.
    pub fn at(&self, n: u64) -> Result<T> {
        let last = self.last_index();
        if n < self.n_min || last.is_some_and(|l| n > l) {
            return Err(Error::IndexOutOfRange {
                index: n,
                first: self.n_min,
                last: last.unwrap_or(u64::MAX),
            });
        }
        if let Ok(cache) = self.cache.read() {
            if let Some(&x) = cache.get(&n) {
                return Ok(x);
            }
        }
        let x = self.compute(n)?;
        if x.is_nan() {
            return Err(Error::NotANumber { index: n });
        }
        // values are deterministic, so a concurrent writer stores the same value
        if let Ok(mut cache) = self.cache.write() {
            cache.insert(n, x);
        }
        Ok(x)
    }

    /// `ln x_n` from the source's closed form, when it has one.
    pub fn ln_at(&self, n: u64) -> Option<T> {
        match &self.source {
            ThresholdSource::FromTransform { family, level } => family.log_inverse(n, *level),
            _ => None,
        }
    }

    /// `[x_n, ..., x_{n+len}]`, checked to be nondecreasing.
    pub fn window(&self, n: u64, len: u64) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(len as usize + 1);
        for j in n..=n + len {
            let x = self.at(j)?;
            if let Some(&prev) = out.last() {
                if x < prev {
                    return Err(Error::NonMonotone {
                        index: j - 1,
                        prev: prev.as_f64(),
                        next: x.as_f64(),
                    });
                }
            }
            out.push(x);
        }
        Ok(out)
    }

    pub fn describe(&self) -> String {
        match &self.source {
            ThresholdSource::Explicit(seq) => format!("x_n = {}", seq.label()),
            ThresholdSource::Listed { first, values } => {
                format!("x_{first}.. = {values:?}")
            }
            ThresholdSource::FromTransform { family, level } => match family {
                TransformFamily::Scale(a) => {
                    format!("x_n = {level} / a_n, a_n = {}", a.label())
                }
                other => format!("x_n = {}^-1({level})", other.name()),
            },
        }
    }
}

impl<T: Real> Clone for ThresholdSequence<T> {
    fn clone(&self) -> Self {
        Self {
            source: self.source.clone(),
            n_min: self.n_min,
            cache: RwLock::new(HashMap::new()),
        }
    }
}

impl<T: Real> fmt::Debug for ThresholdSequence<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ThresholdSequence")
            .field("source", &self.source)
            .field("n_min", &self.n_min)
            .finish()
    }
}
