use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_engine::EventFamily;
use crate::numerics::ols_slope;
use crate::Real;

/// How the window length `K_n` of `S_n = P(∪_{j=n}^{n+K_n} A_j)` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum KRule {
    Fixed { k: u64 },
    /// Smallest `K <= k_cap` whose geometric tail bound
    /// `t_K (q+ε)/(1-q-ε)` on the factorized run terms is below `tail_tol`,
    /// with `q` the largest closed-form ratio over `k = 1..=probe_k`.
    Certified { tail_tol: f64, k_cap: u64, probe_k: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemarkConfig {
    pub slope_tol: f64,
    /// Relative spread under which the last three `S_n` count as stable.
    pub stable_rel_tol: f64,
}

impl Default for RemarkConfig {
    fn default() -> Self {
        Self {
            slope_tol: 0.02,
            stable_rel_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemarkPoint {
    pub n: u64,
    pub k_window: u64,
    pub s: f64,
    /// The `k = 0` term `P(A_n)`.
    pub head: f64,
    pub tail_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TrendClass {
    DecaysToZero,
    StabilizesAt { a: f64 },
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemarkTrend {
    pub s_values: Vec<RemarkPoint>,
    /// Log-log slope of `S_n` against `n`; absent when some `S_n = 0`.
    pub slope: Option<f64>,
    pub classification: TrendClass,
    pub notes: Vec<String>,
}

fn certified_window<T: Real>(
    fam: &EventFamily<T>,
    n: u64,
    tail_tol: f64,
    k_cap: u64,
    probe_k: u64,
) -> Result<Option<(u64, f64)>> {
    let mut q = 0.0_f64;
    for k in 1..=probe_k.max(1) {
        match fam.run_ratio(n, k) {
            Ok(r) => q = q.max(r.as_f64()),
            Err(Error::UndefinedRatio { .. }) => {
                // A_{n+k} impossible so far: nothing to certify with
                if fam.log_p_event(n + k)?.exp().as_f64() == 0.0 {
                    continue;
                }
                return Ok(None);
            }
            Err(e) => return Err(e),
        }
    }
    let eps = (1.0 - q) / 10.0;
    let qe = q + eps;
    if qe >= 1.0 {
        return Ok(None);
    }
    let factor = qe / (1.0 - qe);
    for big_k in 1..=k_cap.max(1) {
        let t = fam.prob_run_factorized(n, big_k)?.exp().as_f64();
        let bound = t * factor;
        if bound <= tail_tol {
            return Ok(Some((big_k, bound)));
        }
    }
    Ok(None)
}

/// Trend of `S_n = Σ_{k=0}^{K_n} P(A_n^c ... A_{n+k-1}^c A_{n+k})` over `n_grid`.
pub fn remark_limit<T: Real>(
    fam: &EventFamily<T>,
    n_grid: &[u64],
    k_rule: KRule,
    config: &RemarkConfig,
) -> Result<RemarkTrend> {
    if n_grid.is_empty() || !n_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidConfig(
            "remark n_grid must be nonempty and strictly increasing".into(),
        ));
    }
    let mut points = Vec::with_capacity(n_grid.len());
    let mut notes = Vec::new();
    let mut certified = true;
    for &n in n_grid {
        let (k_window, tail_bound) = match k_rule {
            KRule::Fixed { k } => (k, None),
            KRule::Certified {
                tail_tol,
                k_cap,
                probe_k,
            } => match certified_window(fam, n, tail_tol, k_cap, probe_k)? {
                Some((k, b)) => (k, Some(b)),
                None => {
                    certified = false;
                    notes.push(format!("truncation at n = {n} not certifiable; K = k_cap"));
                    (k_cap, None)
                }
            },
        };
        let s = fam.union_window(n, k_window)?.as_f64();
        let head = fam.log_p_event(n)?.exp().as_f64();
        points.push(RemarkPoint {
            n,
            k_window,
            s,
            head,
            tail_bound,
        });
    }
    if matches!(k_rule, KRule::Certified { .. }) {
        notes.push(
            "window truncation is certified on the factorized run terms; the exact run terms \
             beyond K are not covered by that bound"
                .into(),
        );
    }

    let slope = if points.iter().all(|p| p.s > 0.0) && points.len() >= 2 {
        let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.s.ln()).collect();
        ols_slope(&xs, &ys)
    } else {
        None
    };

    let first = points.first().unwrap().s;
    let last = points.last().unwrap().s;
    let classification = if !certified {
        TrendClass::Inconclusive
    } else if points.iter().all(|p| p.s == 0.0)
        || (slope.is_some_and(|m| m < -config.slope_tol) && last < first)
    {
        TrendClass::DecaysToZero
    } else if points.len() >= 3 && {
        let tail = &points[points.len() - 3..];
        let hi = tail.iter().map(|p| p.s).fold(f64::MIN, f64::max);
        let lo = tail.iter().map(|p| p.s).fold(f64::MAX, f64::min);
        hi - lo <= config.stable_rel_tol * hi.abs()
    } {
        TrendClass::StabilizesAt { a: last }
    } else {
        TrendClass::Inconclusive
    };
    Ok(RemarkTrend {
        s_values: points,
        slope,
        classification,
        notes,
    })
}
