//! Borel-Cantelli type criteria evaluated on a threshold event family.
//!
//! Each checker turns one sufficient condition for `P(A_n i.o.) = 0` into
//! numerically probed series (or ratios) and reports whether the condition
//! was exhibited. A checker that cannot exhibit its condition stays
//! undecided; it never claims `P(A_n i.o.) = 1`.

mod ratio;
mod remark;
mod series;

pub use ratio::{check_ratio, RatioCheckConfig, RatioProbe, RatioReport};
pub use remark::{remark_limit, KRule, RemarkConfig, RemarkPoint, RemarkTrend, TrendClass};
pub use series::{series_verdict, SeriesReport, Verdict, VerdictConfig, VerdictRule};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_engine::EventFamily;
use crate::Real;

pub const IO_ZERO: &str = "P(A_n i.o.) = 0";

/// Index range `[n_start, n_max]` over which series terms are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesRange {
    pub n_start: u64,
    pub n_max: u64,
}

impl SeriesRange {
    pub fn new(n_start: u64, n_max: u64) -> Result<Self> {
        if n_start == 0 || n_max < n_start {
            return Err(Error::InvalidConfig(format!(
                "invalid series range [{n_start}, {n_max}]"
            )));
        }
        Ok(Self { n_start, n_max })
    }
}

/// Numerical check of the side condition `P(A_n) -> 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideCondition {
    pub from: u64,
    pub to: u64,
    pub first_value: f64,
    pub final_value: f64,
    pub nonincreasing: bool,
    pub holds: bool,
}

/// `P(A_n) -> 0` is accepted when, over the last decade `[to/10, to]`, the
/// sequence is nonincreasing, ends below `p0_tol`, and strictly decreases
/// overall (or is identically zero).
pub fn event_prob_vanishes<T: Real>(
    fam: &EventFamily<T>,
    to: u64,
    p0_tol: f64,
) -> Result<SideCondition> {
    let from = (to / 10).max(fam.n_min()).min(to);
    let mut prev = f64::INFINITY;
    let mut nonincreasing = true;
    let mut first_value = f64::NAN;
    let mut final_value = f64::NAN;
    for n in from..=to {
        let p = fam.log_p_event(n)?.exp().as_f64();
        if n == from {
            first_value = p;
        }
        if p > prev {
            nonincreasing = false;
        }
        prev = p;
        final_value = p;
    }
    let net = final_value == 0.0 || first_value > final_value;
    Ok(SideCondition {
        from,
        to,
        first_value,
        final_value,
        nonincreasing,
        holds: nonincreasing && net && final_value < p0_tol,
    })
}

/// Outcome of one series-based criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion_id: String,
    pub series: Vec<SeriesReport>,
    pub side_condition: Option<SideCondition>,
    /// The criterion's hypotheses were all exhibited.
    pub decides_io_zero: bool,
    pub conclusion: Option<String>,
    pub notes: Vec<String>,
}

impl CriterionReport {
    fn new(id: &str, series: Vec<SeriesReport>, side: Option<SideCondition>) -> Self {
        Self {
            criterion_id: id.to_string(),
            series,
            side_condition: side,
            decides_io_zero: false,
            conclusion: None,
            notes: Vec::new(),
        }
    }

    fn decide(&mut self, ok: bool) {
        self.decides_io_zero = ok;
        self.conclusion = ok.then(|| IO_ZERO.to_string());
    }
}

/// Classic first Borel-Cantelli lemma: `Σ P(A_n) < ∞`.
pub fn check_bc1<T: Real>(
    fam: &EventFamily<T>,
    range: SeriesRange,
    config: &VerdictConfig,
) -> Result<CriterionReport> {
    let s = series_verdict(
        "bc1",
        |n| Ok(fam.log_p_event(n)?.exp().as_f64()),
        range.n_start,
        range.n_max,
        config,
    )?;
    let verdict = s.verdict;
    let mut r = CriterionReport::new("bc1", vec![s], None);
    r.decide(verdict == Verdict::Converges);
    if verdict == Verdict::Diverges {
        r.notes.push(
            "sum of P(A_n) diverges; the converse for independent events does not apply \
             because maxima events are dependent"
                .into(),
        );
    }
    Ok(r)
}

/// `P(A_n) -> 0` and `Σ P(A_n A_{n+1}^c) < ∞`.
pub fn check_barndorff<T: Real>(
    fam: &EventFamily<T>,
    range: SeriesRange,
    config: &VerdictConfig,
) -> Result<CriterionReport> {
    let side = event_prob_vanishes(fam, range.n_max, config.p0_tol)?;
    let s = series_verdict(
        "barndorff",
        |n| Ok(fam.prob_event_then_fail(n)?.exp().as_f64()),
        range.n_start,
        range.n_max,
        config,
    )?;
    let ok = side.holds && s.verdict == Verdict::Converges;
    let mut r = CriterionReport::new("barndorff", vec![s], Some(side));
    r.decide(ok);
    Ok(r)
}

/// `P(A_n) -> 0` and `Σ P(A_n^c ... A_{n+m-1}^c A_{n+m}) < ∞` for fixed `m`.
pub fn check_bs<T: Real>(
    fam: &EventFamily<T>,
    m: u64,
    range: SeriesRange,
    config: &VerdictConfig,
) -> Result<CriterionReport> {
    let id = format!("bs:{m}");
    let side = event_prob_vanishes(fam, range.n_max, config.p0_tol)?;
    let s = series_verdict(
        &id,
        |n| Ok(fam.prob_run(n, m)?.exp().as_f64()),
        range.n_start,
        range.n_max,
        config,
    )?;
    let ok = side.holds && s.verdict == Verdict::Converges;
    let mut r = CriterionReport::new(&id, vec![s], Some(side));
    r.decide(ok);
    Ok(r)
}

/// Three-series criterion: `P(A_n) -> 0`, `Σ P(A_n) = ∞`,
/// `Σ P(A_n A_{n+k}) = ∞` and `Σ [P(A_n) - P(A_n A_{n+1})] < ∞`.
///
/// The third series is `Σ F(x_n)^n (1 - F(x_{n+1}))`, term for term the
/// series of [`check_barndorff`].
pub fn check_stepanov<T: Real>(
    fam: &EventFamily<T>,
    k: u64,
    range: SeriesRange,
    config: &VerdictConfig,
) -> Result<CriterionReport> {
    if k == 0 {
        return Err(Error::domain("check_stepanov", "k must be at least 1"));
    }
    let id = format!("stepanov:{k}");
    let side = event_prob_vanishes(fam, range.n_max, config.p0_tol)?;
    let events = series_verdict(
        &format!("{id}/events"),
        |n| Ok(fam.log_p_event(n)?.exp().as_f64()),
        range.n_start,
        range.n_max,
        config,
    )?;
    let joint = series_verdict(
        &format!("{id}/joint"),
        |n| Ok(fam.prob_joint(n, k)?.exp().as_f64()),
        range.n_start,
        range.n_max,
        config,
    )?;
    let diff = series_verdict(
        &format!("{id}/difference"),
        |n| Ok(fam.prob_event_then_fail(n)?.exp().as_f64()),
        range.n_start,
        range.n_max,
        config,
    )?;
    let ok = side.holds
        && events.verdict == Verdict::Diverges
        && joint.verdict == Verdict::Diverges
        && diff.verdict == Verdict::Converges;
    let mut r = CriterionReport::new(&id, vec![events, joint, diff], Some(side));
    r.decide(ok);
    r.notes.push(
        "hypotheses implemented as stated (two divergent series plus one convergent); \
         the divergence requirements look inconsistent with the conclusion and are kept verbatim"
            .into(),
    );
    Ok(r)
}
