//! Numeric convergence classifier for nonnegative series.
//!
//! Convergence of an infinite series cannot be decided from finitely many
//! terms; every verdict here is a heuristic backed by an exhibited tail
//! bound (Converges) or minorant (Diverges), and the raw terms travel with
//! the report.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converges,
    Diverges,
    Inconclusive,
}

/// Which rule produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictRule {
    /// Last `window` terms are exactly zero.
    ZeroTail,
    /// Last `window` consecutive ratios at most `ratio_threshold`.
    RatioWindow,
    /// Fitted envelope `n^-p (ln n)^beta` with `p >= 1 + exponent_margin`.
    PowerLawEnvelope,
    /// `c/n` minorant with still-growing partial sums.
    HarmonicMinorant,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerdictConfig {
    /// Number of trailing terms inspected by the ratio and minorant rules.
    pub window: usize,
    pub ratio_threshold: f64,
    /// Minimum partial-sum growth over the last decade for divergence.
    pub div_tol: f64,
    /// Half-width of the indeterminate band around exponent 1.
    pub exponent_margin: f64,
    /// Log-spaced sample size for the envelope fit.
    pub fit_points: usize,
    /// Checkpoints per decade in the reported partial sums.
    pub checkpoints_per_decade: usize,
    /// `P(A_n) -> 0` requires the final probed value below this.
    pub p0_tol: f64,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        Self {
            window: 20,
            ratio_threshold: 0.999,
            div_tol: 0.01,
            exponent_margin: 0.05,
            fit_points: 200,
            checkpoints_per_decade: 10,
            p0_tol: 0.5,
        }
    }
}

/// Classified partial sums of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub criterion_id: String,
    pub n_start: u64,
    pub n_max: u64,
    pub terms_computed: u64,
    /// `(n, S_n)` at log-spaced checkpoints and the last index.
    pub partial_sums: Vec<(u64, f64)>,
    pub final_sum: f64,
    /// Largest of the last `window` term ratios.
    pub tail_ratio_estimate: Option<f64>,
    /// Envelope exponent `p` and log power `beta` fitted over the last decade.
    pub fitted_exponent: Option<f64>,
    pub fitted_log_power: Option<f64>,
    /// `min n t_n` over the trailing window.
    pub minorant_constant: Option<f64>,
    /// `S_{n_max} - S_{n_max/10}`.
    pub decade_growth: Option<f64>,
    pub verdict: Verdict,
    pub rule: VerdictRule,
    /// Partial sum plus tail bound, present only for Converges.
    pub upper_bound: Option<f64>,
    /// Every term, index `n_start + i`; written to the CSV tables.
    #[serde(skip)]
    pub terms: Vec<f64>,
}

impl SeriesReport {
    /// `(n, term, partial sum)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (u64, f64, f64)> + '_ {
        let mut acc = CompensatedSum::<f64>::new();
        self.terms.iter().enumerate().map(move |(i, &t)| {
            acc.add(t);
            (self.n_start + i as u64, t, acc.value())
        })
    }
}

/// Exponent fit `ln t = c - p ln n + beta ln ln n`.
#[derive(Debug, Clone, Copy)]
struct EnvelopeFit {
    exponent: f64,
    log_power: f64,
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs() < 1e-300 || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (i, xi) in x.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][i] = b[r];
        }
        *xi = det(m) / d;
    }
    Some(x)
}

fn fit_envelope(samples: &[(u64, f64)]) -> Option<EnvelopeFit> {
    if samples.len() < 10 {
        return None;
    }
    // centre the regressors for conditioning
    let rows: Vec<[f64; 3]> = samples
        .iter()
        .map(|&(n, t)| {
            let l = (n as f64).ln();
            [l, l.ln(), t.ln()]
        })
        .collect();
    let len = rows.len() as f64;
    let m: [f64; 3] = [0, 1, 2].map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / len);
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for r in &rows {
        let x = [1.0, r[0] - m[0], r[1] - m[1]];
        let y = r[2] - m[2];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += x[i] * x[j];
            }
            b[i] += x[i] * y;
        }
    }
    let sol = solve3(a, b)?;
    if !sol.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some(EnvelopeFit {
        exponent: -sol[1],
        log_power: sol[2],
    })
}

/// `∫_N^∞ t_N (x/N)^-p (ln x / ln N)^beta dx` for `p > 1`.
fn envelope_tail(t_last: f64, n_last: u64, p: f64, beta: f64) -> f64 {
    let ln_n = (n_last as f64).ln().max(1e-12);
    let rate = p - 1.0;
    // integrand in s = ln(x/N): exp(-rate s) (1 + s/ln N)^beta
    let log_g = |s: f64| -rate * s + beta * (s / ln_n).ln_1p();
    let peak = (beta / rate - ln_n).max(0.0);
    let s_max = peak + 80.0 / rate;
    let steps = 8000usize;
    let h = s_max / steps as f64;
    let mut acc = log_g(0.0).exp() + log_g(s_max).exp();
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * log_g(i as f64 * h).exp();
    }
    t_last * n_last as f64 * acc * h / 3.0
}

/// Log-spaced indices in `[lo, hi]`, always including both ends.
pub(crate) fn log_spaced(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    if hi <= lo || count < 2 {
        return vec![lo.min(hi), hi];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round() as u64)
        .map(|n| n.clamp(lo, hi))
        .collect();
    out.dedup();
    if *out.last().unwrap() != hi {
        out.push(hi);
    }
    out
}

/// Evaluates `terms(n)` for `n` in `[n_start, n_max]` and classifies the series.
pub fn series_verdict(
    criterion_id: &str,
    terms: impl Fn(u64) -> Result<f64>,
    n_start: u64,
    n_max: u64,
    config: &VerdictConfig,
) -> Result<SeriesReport> {
    if n_start == 0 || n_max < n_start {
        return Err(Error::InvalidConfig(format!(
            "series range [{n_start}, {n_max}] is empty or starts at 0"
        )));
    }
    if config.window < 2 {
        return Err(Error::InvalidConfig("verdict window must be at least 2".into()));
    }
    let count = (n_max - n_start + 1) as usize;
    let mut values = Vec::with_capacity(count);
    let mut sums = Vec::with_capacity(count);
    let mut acc = CompensatedSum::<f64>::new();
    for n in n_start..=n_max {
        let t = terms(n)?;
        if !(t >= 0.0) {
            return Err(Error::NegativeTerm { index: n, value: t });
        }
        acc.add(t);
        values.push(t);
        sums.push(acc.value());
    }
    let sum_at = |n: u64| sums[(n - n_start) as usize];
    let term_at = |n: u64| values[(n - n_start) as usize];
    let final_sum = *sums.last().unwrap();

    let decades = ((n_max as f64) / (n_start as f64)).log10().max(1.0);
    let checkpoints = log_spaced(
        n_start,
        n_max,
        (decades * config.checkpoints_per_decade as f64).ceil() as usize + 1,
    );
    let partial_sums = checkpoints.iter().map(|&n| (n, sum_at(n))).collect();

    let w = config.window.min(count);
    let tail = &values[count - w..];
    let tail_ratio_estimate = if tail.iter().all(|&t| t > 0.0) && w >= 2 {
        tail.windows(2)
            .map(|p| p[1] / p[0])
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
    } else {
        None
    };

    let fit_lo = (n_max / 10).max(n_start).max(3);
    let fit_samples: Vec<(u64, f64)> = if n_max > fit_lo {
        log_spaced(fit_lo, n_max, config.fit_points)
            .into_iter()
            .map(|n| (n, term_at(n)))
            .filter(|&(_, t)| t > 0.0 && t.is_finite())
            .collect()
    } else {
        Vec::new()
    };
    let fit = fit_envelope(&fit_samples);
    let decade_growth = (n_max > fit_lo).then(|| final_sum - sum_at(fit_lo));
    let minorant_constant = {
        let c = tail
            .iter()
            .enumerate()
            .map(|(i, &t)| (n_max - (w - 1 - i) as u64) as f64 * t)
            .fold(f64::INFINITY, f64::min);
        (c.is_finite() && w > 0).then_some(c)
    };

    let mut report = SeriesReport {
        criterion_id: criterion_id.to_string(),
        n_start,
        n_max,
        terms_computed: count as u64,
        partial_sums,
        final_sum,
        tail_ratio_estimate,
        fitted_exponent: fit.map(|f| f.exponent),
        fitted_log_power: fit.map(|f| f.log_power),
        minorant_constant,
        decade_growth,
        verdict: Verdict::Inconclusive,
        rule: VerdictRule::None,
        upper_bound: None,
        terms: values.clone(),
    };

    if count >= config.window && tail.iter().all(|&t| t == 0.0) {
        report.verdict = Verdict::Converges;
        report.rule = VerdictRule::ZeroTail;
        report.upper_bound = Some(final_sum);
        return Ok(report);
    }
    if count < config.window {
        return Ok(report);
    }

    let m = config.exponent_margin;
    if let (Some(f), Some(c), Some(g)) = (fit, minorant_constant, decade_growth) {
        let slow = f.exponent < 1.0 - m || ((f.exponent - 1.0).abs() <= m && f.log_power >= -1.0);
        if slow && c > 0.0 && g > config.div_tol {
            report.verdict = Verdict::Diverges;
            report.rule = VerdictRule::HarmonicMinorant;
            return Ok(report);
        }
    }

    if let Some(rho) = tail_ratio_estimate {
        if rho <= config.ratio_threshold {
            let r = config.ratio_threshold;
            report.verdict = Verdict::Converges;
            report.rule = VerdictRule::RatioWindow;
            report.upper_bound = Some(final_sum + term_at(n_max) * r / (1.0 - r));
            return Ok(report);
        }
    }

    if let Some(f) = fit {
        let t_last = term_at(n_max);
        if f.exponent >= 1.0 + m && t_last > 0.0 {
            report.verdict = Verdict::Converges;
            report.rule = VerdictRule::PowerLawEnvelope;
            report.upper_bound =
                Some(final_sum + envelope_tail(t_last, n_max, f.exponent, f.log_power));
            return Ok(report);
        }
    }
    Ok(report)
}
