//! Scenario files (TOML) and their resolution into core objects.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use maxima_bc::criteria::{KRule, VerdictConfig};
use maxima_bc::{
    Distribution, EventFamily, IndexSequence, QueryWindow, ThresholdSequence, TransformFamily,
};
use serde::{Deserialize, Serialize};

use crate::expr::Expr;

/// Config problem with the place it was found, e.g. `line 4, column 1` or
/// `event.thresholds, column 7`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{location}: {message}")]
pub struct ConfigError {
    pub location: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Checker {
    Bc1,
    Barndorff,
    Bs(u64),
    Stepanov(u64),
    Ratio,
    Remark,
}

impl fmt::Display for Checker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Checker::Bc1 => write!(f, "bc1"),
            Checker::Barndorff => write!(f, "barndorff"),
            Checker::Bs(m) => write!(f, "bs:{m}"),
            Checker::Stepanov(k) => write!(f, "stepanov:{k}"),
            Checker::Ratio => write!(f, "ratio"),
            Checker::Remark => write!(f, "remark"),
        }
    }
}

impl FromStr for Checker {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let arg = |rest: &str, what: &str| {
            rest.parse::<u64>()
                .map_err(|_| format!("`{s}`: {what} must be a nonnegative integer"))
        };
        match s.trim() {
            "bc1" => Ok(Checker::Bc1),
            "barndorff" => Ok(Checker::Barndorff),
            "ratio" => Ok(Checker::Ratio),
            "remark" => Ok(Checker::Remark),
            t => {
                if let Some(m) = t.strip_prefix("bs:") {
                    Ok(Checker::Bs(arg(m, "m")?))
                } else if let Some(k) = t.strip_prefix("stepanov:") {
                    let k = arg(k, "k")?;
                    if k == 0 {
                        return Err(format!("`{s}`: k must be at least 1"));
                    }
                    Ok(Checker::Stepanov(k))
                } else {
                    Err(format!(
                        "unknown checker `{s}` (expected bc1, barndorff, bs:<m>, stepanov:<k>, ratio, remark)"
                    ))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "both" => Ok(Format::Both),
            _ => Err(format!("unknown format `{s}` (expected json, csv or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// `uniform01`, `pareto1` or `exponential:<rate>`.
    pub distribution: String,
    pub event: EventSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkers: Option<CheckerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
    #[serde(default, skip_serializing_if = "OutputSpec::is_default")]
    pub output: OutputSpec,
}

/// Either explicit `thresholds` (an expression in `n`) or a `transform`
/// (`identity`, `power`, `scale:<a_n expression>`) with a `level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_min: Option<u64>,
}

/// `K` for the remark checker: a fixed integer or `"certified"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RemarkWindow {
    Fixed(u64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckerSpec {
    pub enabled: Vec<String>,
    /// First series index; defaults to the thresholds' first index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_start: Option<u64>,
    pub n_max: u64,
    /// Probe indices for `ratio` and `remark`; defaults to the last three decades.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_grid: Vec<u64>,
    #[serde(default = "default_k_max")]
    pub k_max: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default = "default_remark_window")]
    pub remark_window: RemarkWindow,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default = "default_k_cap")]
    pub k_cap: u64,
    #[serde(default, skip_serializing_if = "is_default_verdict")]
    pub verdict: VerdictConfig,
}

fn default_k_max() -> u64 {
    8
}

fn default_remark_window() -> RemarkWindow {
    RemarkWindow::Named("certified".into())
}

fn default_tail_tol() -> f64 {
    1e-6
}

fn default_k_cap() -> u64 {
    1000
}

fn is_default_verdict(v: &VerdictConfig) -> bool {
    *v == VerdictConfig::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub paths: u64,
    pub n_max: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub record_grid: Vec<u64>,
    /// Windows `[start, start + len]` whose union frequency is estimated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub windows: Vec<QueryWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default)]
    pub format: Format,
}

impl OutputSpec {
    fn is_default(&self) -> bool {
        *self == OutputSpec::default()
    }
}

/// A validated scenario: event family, its transform and the checker plan.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub family: EventFamily,
    pub transform: Option<TransformFamily>,
    pub checkers: Vec<Checker>,
    pub n_start: u64,
    pub n_grid: Vec<u64>,
    pub k_rule: KRule,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

fn expr_sequence(src: &str, location: &str) -> Result<(Arc<Expr>, String), ConfigError> {
    let e = Expr::parse(src).map_err(|e| {
        ConfigError::new(format!("{location}, column {}", e.column), e.message)
    })?;
    let label = e.to_string();
    Ok((Arc::new(e), label))
}

impl ScenarioConfig {
    /// Parses and validates a scenario file.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let (l, c) = line_col(text, span.start);
                    format!("line {l}, column {c}")
                }
                None => "scenario".to_string(),
            };
            ConfigError::new(location, e.message().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.resolve().map(|_| ())
    }

    /// Builds the event family and checker list, reporting the first problem.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        if self.name.trim().is_empty() {
            return Err(ConfigError::new("name", "must not be empty"));
        }
        if self.checkers.is_none() && self.simulation.is_none() {
            return Err(ConfigError::new(
                "scenario",
                "needs a [checkers] or a [simulation] section",
            ));
        }
        let dist = Distribution::from_str(&self.distribution)
            .map_err(|e| ConfigError::new("distribution", e.to_string()))?;
        let (thresholds, transform) = self.event.resolve()?;
        let family = EventFamily::new(dist, thresholds);

        let mut resolved = Resolved {
            n_start: family.n_min(),
            family,
            transform,
            checkers: Vec::new(),
            n_grid: Vec::new(),
            k_rule: KRule::Fixed { k: 0 },
        };
        if let Some(c) = &self.checkers {
            c.resolve_into(&mut resolved)?;
        }
        if let Some(s) = &self.simulation {
            s.validate(&resolved)?;
        }
        Ok(resolved)
    }
}

impl EventSpec {
    fn resolve(&self) -> Result<(ThresholdSequence, Option<TransformFamily>), ConfigError> {
        let here = |field: &str| format!("event.{field}");
        let bad = |field: &str, e: maxima_bc::Error| ConfigError::new(here(field), e.to_string());
        match (&self.thresholds, &self.transform) {
            (Some(_), Some(_)) => Err(ConfigError::new(
                "event",
                "give either thresholds or transform, not both",
            )),
            (None, None) => Err(ConfigError::new("event", "needs thresholds or transform")),
            (Some(src), None) => {
                if self.level.is_some() {
                    return Err(ConfigError::new(
                        here("level"),
                        "level only applies to a transform",
                    ));
                }
                let (e, label) = expr_sequence(src, &here("thresholds"))?;
                let seq = IndexSequence::new(label, move |n| e.eval(n as f64));
                let t = ThresholdSequence::explicit(seq, self.n_min.unwrap_or(1))
                    .map_err(|e| bad("n_min", e))?;
                Ok((t, None))
            }
            (None, Some(name)) => {
                let level = self
                    .level
                    .ok_or_else(|| ConfigError::new(here("level"), "required with a transform"))?;
                if !level.is_finite() {
                    return Err(ConfigError::new(here("level"), "must be finite"));
                }
                let family = match name.trim() {
                    "identity" => TransformFamily::Identity,
                    "power" => TransformFamily::Power,
                    other => match other.strip_prefix("scale:") {
                        Some(src) => {
                            let (e, label) = expr_sequence(src.trim(), &here("transform"))?;
                            TransformFamily::Scale(IndexSequence::new(label, move |n| {
                                e.eval(n as f64)
                            }))
                        }
                        None => {
                            return Err(ConfigError::new(
                                here("transform"),
                                format!(
                                    "unknown transform `{other}` (expected identity, power or scale:<expr>)"
                                ),
                            ))
                        }
                    },
                };
                let n_min = self.n_min.unwrap_or(family.min_index());
                let t = ThresholdSequence::new(
                    maxima_bc::ThresholdSource::FromTransform {
                        family: family.clone(),
                        level,
                    },
                    n_min,
                )
                .map_err(|e| bad("n_min", e))?;
                t.at(n_min).map_err(|e| {
                    ConfigError::new("event", format!("thresholds undefined at n_min = {n_min}: {e}"))
                })?;
                Ok((t, Some(family)))
            }
        }
    }
}

impl CheckerSpec {
    fn resolve_into(&self, r: &mut Resolved) -> Result<(), ConfigError> {
        let here = |field: &str| format!("checkers.{field}");
        for (i, s) in self.enabled.iter().enumerate() {
            let c = Checker::from_str(s).map_err(|m| ConfigError::new(format!("checkers.enabled[{i}]"), m))?;
            if r.checkers.contains(&c) {
                return Err(ConfigError::new(
                    format!("checkers.enabled[{i}]"),
                    format!("`{c}` listed twice"),
                ));
            }
            r.checkers.push(c);
        }
        let n_start = self.n_start.unwrap_or(r.family.n_min());
        if n_start < r.family.n_min() {
            return Err(ConfigError::new(
                here("n_start"),
                format!("{n_start} is below the first threshold index {}", r.family.n_min()),
            ));
        }
        if self.n_max < n_start {
            return Err(ConfigError::new(
                here("n_max"),
                format!("{} is below n_start = {n_start}", self.n_max),
            ));
        }
        r.n_start = n_start;
        if self.k_max == 0 {
            return Err(ConfigError::new(here("k_max"), "must be at least 1"));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(ConfigError::new(here("epsilon"), "must lie in (0, 1)"));
            }
        }
        r.n_grid = if self.n_grid.is_empty() {
            let mut g: Vec<u64> = [100, 10, 1]
                .iter()
                .map(|d| self.n_max / d)
                .filter(|&n| n >= n_start)
                .collect();
            g.dedup();
            g
        } else {
            self.n_grid.clone()
        };
        if !r.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(ConfigError::new(here("n_grid"), "must be strictly increasing"));
        }
        if let Some(&first) = r.n_grid.first() {
            if first < n_start {
                return Err(ConfigError::new(
                    here("n_grid"),
                    format!("{first} is below n_start = {n_start}"),
                ));
            }
        }
        r.k_rule = match &self.remark_window {
            RemarkWindow::Fixed(k) => KRule::Fixed { k: *k },
            RemarkWindow::Named(s) if s == "certified" => {
                if !(self.tail_tol > 0.0) {
                    return Err(ConfigError::new(here("tail_tol"), "must be positive"));
                }
                KRule::Certified {
                    tail_tol: self.tail_tol,
                    k_cap: self.k_cap,
                    probe_k: self.k_max,
                }
            }
            RemarkWindow::Named(s) => {
                return Err(ConfigError::new(
                    here("remark_window"),
                    format!("`{s}`: expected an integer or \"certified\""),
                ))
            }
        };
        Ok(())
    }
}

impl SimulationSpec {
    fn validate(&self, r: &Resolved) -> Result<(), ConfigError> {
        let here = |field: &str| format!("simulation.{field}");
        if self.paths == 0 {
            return Err(ConfigError::new(here("paths"), "must be at least 1"));
        }
        if self.n_max == 0 {
            return Err(ConfigError::new(here("n_max"), "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(ConfigError::new(here("workers"), "must be at least 1"));
        }
        if !self.record_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(ConfigError::new(here("record_grid"), "must be strictly increasing"));
        }
        if let Some(&last) = self.record_grid.last() {
            if last > self.n_max {
                return Err(ConfigError::new(
                    here("record_grid"),
                    format!("{last} exceeds n_max = {}", self.n_max),
                ));
            }
        }
        if let Some(&first) = self.record_grid.first() {
            let floor = if r.transform.is_some() { r.family.n_min() } else { 1 };
            if first < floor {
                return Err(ConfigError::new(
                    here("record_grid"),
                    format!("{first} is below the first transform index {floor}"),
                ));
            }
        }
        for (i, w) in self.windows.iter().enumerate() {
            if w.start < r.family.n_min() || w.start + w.len > self.n_max {
                return Err(ConfigError::new(
                    format!("simulation.windows[{i}]"),
                    format!(
                        "[{}, {}] must lie within [{}, {}]",
                        w.start,
                        w.start + w.len,
                        r.family.n_min(),
                        self.n_max
                    ),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
name = "demo"
distribution = "pareto1"

[event]
transform = "scale: ln(n)^2 / n"
level = 2.0
n_min = 2

[checkers]
enabled = ["bc1", "bs:2", "stepanov:1", "ratio", "remark"]
n_start = 3
n_max = 10000
remark_window = 4

[checkers.verdict]
window = 30

[simulation]
paths = 100
n_max = 50
seed = 9
record_grid = [2, 10, 50]
windows = [{ start = 5, len = 3 }]

[output]
format = "both"
dir = "out"
"#;

    #[test]
    fn full_scenario_round_trips() {
        let cfg = ScenarioConfig::from_toml(FULL).unwrap();
        let r = cfg.resolve().unwrap();
        assert_eq!(r.checkers.len(), 5);
        assert_eq!(r.checkers[1], Checker::Bs(2));
        assert_eq!(r.k_rule, KRule::Fixed { k: 4 });
        assert_eq!(r.n_grid, vec![100, 1000, 10_000]);
        assert_eq!(cfg.checkers.as_ref().unwrap().verdict.window, 30);
        let again = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn syntax_errors_report_line_and_column() {
        let e = ScenarioConfig::from_toml("name = \"x\"\ndistribution = \n").unwrap_err();
        assert!(e.location.starts_with("line 2"), "{e}");
        let e = ScenarioConfig::from_toml(
            "name = \"x\"\ndistribution = \"uniform01\"\nbogus = 1\n[event]\nthresholds = \"n\"\n",
        )
        .unwrap_err();
        assert!(e.message.contains("bogus"), "{e}");
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let base = "name = \"x\"\ndistribution = \"uniform01\"\n[simulation]\npaths = 1\nn_max = 5\nseed = 1\n";
        let with = |event: &str| format!("{base}[event]\n{event}\n");

        let e = ScenarioConfig::from_toml(&with("thresholds = \"1 - 1/m\"")).unwrap_err();
        assert_eq!(e.location, "event.thresholds, column 7");
        let e = ScenarioConfig::from_toml(&with("transform = \"cube\"\nlevel = 1")).unwrap_err();
        assert_eq!(e.location, "event.transform");
        let e = ScenarioConfig::from_toml(&with("transform = \"power\"\nlevel = 1.5")).unwrap_err();
        assert_eq!(e.location, "event");
        let e = ScenarioConfig::from_toml(&with("transform = \"scale: ln(n)\"\nlevel = 1")).unwrap_err();
        assert!(e.message.contains("n_min = 1"), "{e}");
        let e = ScenarioConfig::from_toml(&with("transform = \"power\"")).unwrap_err();
        assert_eq!(e.location, "event.level");

        let e = ScenarioConfig::from_toml(&format!(
            "{}{}",
            with("thresholds = \"0.5\""),
            "[checkers]\nenabled = [\"bc2\"]\nn_max = 10\n"
        ))
        .unwrap_err();
        assert_eq!(e.location, "checkers.enabled[0]");

        let e = ScenarioConfig::from_toml(
            "name = \"x\"\ndistribution = \"normal\"\n[event]\nthresholds = \"1\"\n[simulation]\npaths = 1\nn_max = 1\nseed = 0\n",
        )
        .unwrap_err();
        assert_eq!(e.location, "distribution");
    }

    #[test]
    fn needs_checkers_or_simulation() {
        let e = ScenarioConfig::from_toml(
            "name = \"x\"\ndistribution = \"uniform01\"\n[event]\nthresholds = \"0.5\"\n",
        )
        .unwrap_err();
        assert_eq!(e.location, "scenario");
    }

    #[test]
    fn checker_names_round_trip() {
        for s in ["bc1", "barndorff", "bs:0", "bs:3", "stepanov:2", "ratio", "remark"] {
            assert_eq!(Checker::from_str(s).unwrap().to_string(), s);
        }
        assert!(Checker::from_str("stepanov:0").is_err());
        assert!(Checker::from_str("bs:x").is_err());
    }
}
