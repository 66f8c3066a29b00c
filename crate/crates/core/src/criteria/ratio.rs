use serde::{Deserialize, Serialize};

use super::{event_prob_vanishes, SideCondition, Verdict, VerdictConfig, IO_ZERO};
use crate::error::{Error, Result};
use crate::event_engine::EventFamily;
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCheckConfig {
    /// Margin added to `q_hat`; `None` selects `(1 - q_hat) / 10`.
    pub epsilon: Option<f64>,
    pub k_max: u64,
    /// Strictly increasing start indices.
    pub n_grid: Vec<u64>,
}

impl RatioCheckConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::InvalidConfig("ratio k_max must be at least 1".into()));
        }
        if self.n_grid.is_empty() || !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig(
                "ratio n_grid must be nonempty and strictly increasing".into(),
            ));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::InvalidConfig(format!("epsilon {e} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioProbe {
    pub n: u64,
    pub k: u64,
    /// `None` when `F(x_{n+k}) = 0`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    /// Largest closed-form ratio in the row of the largest probed `n`.
    pub q_hat: f64,
    /// `(n, max_k ratio)` for every probed row.
    pub row_max: Vec<(u64, f64)>,
    pub probe_grid: Vec<RatioProbe>,
    pub q_config: RatioCheckConfig,
    pub epsilon: f64,
    pub bound_n: u64,
    /// `P(A_n) + P(A_n^c A_{n+1}) (q+ε)/(1-q-ε)` at `bound_n`.
    pub bound_value: f64,
    /// Largest ratio of consecutive exact run probabilities at `bound_n`.
    pub exact_q_hat: Option<f64>,
    pub side_condition: SideCondition,
    pub verdict: Verdict,
    pub conclusion: Option<String>,
    pub notes: Vec<String>,
}

/// Ratio criterion: `P(A_n) -> 0` and run-term ratios bounded by `q < 1`.
///
/// `q_hat` is the maximum over all probed `k` of [`EventFamily::run_ratio`]
/// at the largest grid index.
pub fn check_ratio<T: Real>(
    fam: &EventFamily<T>,
    config: &RatioCheckConfig,
    verdict_config: &VerdictConfig,
) -> Result<RatioReport> {
    config.validate()?;
    let mut probes = Vec::new();
    let mut row_max = Vec::new();
    let mut undefined = Vec::new();
    for &n in &config.n_grid {
        let mut best = 0.0_f64;
        for k in 1..=config.k_max {
            let ratio = match fam.run_ratio(n, k) {
                Ok(r) => Some(r.as_f64()),
                Err(Error::UndefinedRatio { .. }) => {
                    undefined.push((n, k));
                    None
                }
                Err(e) => return Err(e),
            };
            if let Some(r) = ratio {
                best = best.max(r);
            }
            probes.push(RatioProbe { n, k, ratio });
        }
        row_max.push((n, best));
    }
    let bound_n = *config.n_grid.last().unwrap();
    let q_hat = row_max.last().unwrap().1;
    let epsilon = config.epsilon.unwrap_or((1.0 - q_hat) / 10.0);

    let p_event = fam.log_p_event(bound_n)?.exp().as_f64();
    let p_first_run = fam.prob_run(bound_n, 1)?.exp().as_f64();
    let q = q_hat + epsilon;
    let bound_value = if q < 1.0 {
        p_event + p_first_run * q / (1.0 - q)
    } else {
        f64::INFINITY
    };

    let exact_runs = fam.run_terms(bound_n, config.k_max + 1)?;
    let exact_q_hat = exact_runs[1..]
        .windows(2)
        .filter(|w| w[0].log_prob.is_finite())
        .map(|w| (w[1].log_prob - w[0].log_prob).exp().as_f64())
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));

    let side_condition = event_prob_vanishes(fam, bound_n, verdict_config.p0_tol)?;
    let mut notes = vec![
        "ratios are the closed-form factorized expression; they bound the exact run \
         probabilities only on the staircase sub-event (see exact_q_hat)"
            .to_string(),
    ];
    let last_row_undefined = undefined.iter().any(|&(n, _)| n == bound_n);
    let verdict = if last_row_undefined {
        notes.push(format!(
            "ratio undefined (F(x_(n+k)) = 0) at {:?}",
            undefined.iter().filter(|p| p.0 == bound_n).collect::<Vec<_>>()
        ));
        Verdict::Inconclusive
    } else if q < 1.0 && side_condition.holds {
        Verdict::Converges
    } else {
        if q >= 1.0 {
            notes.push(format!("q_hat + epsilon = {q} is not below 1"));
        }
        if !side_condition.holds {
            notes.push("P(A_n) -> 0 not exhibited".into());
        }
        Verdict::Inconclusive
    };
    Ok(RatioReport {
        q_hat,
        row_max,
        probe_grid: probes,
        q_config: config.clone(),
        epsilon,
        bound_n,
        bound_value,
        exact_q_hat,
        side_condition,
        verdict,
        conclusion: (verdict == Verdict::Converges).then(|| IO_ZERO.to_string()),
        notes,
    })
}
