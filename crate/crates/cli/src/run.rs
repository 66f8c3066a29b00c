//! Scenario execution and report output.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use maxima_bc::criteria::{
    check_barndorff, check_bc1, check_bs, check_ratio, check_stepanov, remark_limit,
    CriterionReport, RatioCheckConfig, RatioReport, RemarkConfig, RemarkTrend, SeriesRange,
};
use maxima_bc::rng::GENERATOR_ID;
use maxima_bc::simulator::{simulate_paths_with_windows, transform_trajectory, GridSummary};
use maxima_bc::{OracleEstimate, QueryWindow, SimulationConfig, TransformFamily};
use serde::{Deserialize, Serialize};

use crate::config::{Checker, ConfigError, Format, Resolved, ScenarioConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) | CliError::Io { .. } => 2,
        }
    }
}

/// Threshold problems found while running are config problems: the
/// sequence is validated lazily, window by window.
fn classify(location: &str, e: maxima_bc::Error) -> CliError {
    use maxima_bc::Error as E;
    match e {
        E::NonMonotone { .. } | E::IndexOutOfRange { .. } | E::NotANumber { .. } => {
            CliError::Config(ConfigError::new(location, e.to_string()))
        }
        E::InvalidConfig(m) => CliError::Config(ConfigError::new(location, m)),
        other => CliError::Runtime(other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckerOutput {
    Series { id: String, report: CriterionReport },
    Ratio { id: String, report: RatioReport },
    Remark { id: String, report: RemarkTrend },
}

impl CheckerOutput {
    pub fn id(&self) -> &str {
        match self {
            CheckerOutput::Series { id, .. }
            | CheckerOutput::Ratio { id, .. }
            | CheckerOutput::Remark { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOutput {
    pub window: QueryWindow,
    pub frequency: OracleEstimate,
    /// `P(∪_{j=start}^{start+len} A_j)` from the event engine.
    pub union_probability: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub paths: u64,
    pub n_max: u64,
    pub maxima: Vec<GridSummary>,
    /// Summaries of `phi_n(M_n)` when the event comes from a transform.
    pub transformed: Option<Vec<GridSummary>>,
    pub windows: Vec<WindowOutput>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedProvenance {
    pub master_seed: u64,
    pub generator: String,
    pub stream_rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub scenario: ScenarioConfig,
    pub thresholds: String,
    pub checkers: Vec<CheckerOutput>,
    pub simulation: Option<SimulationOutput>,
    pub seed: Option<SeedProvenance>,
    pub wall_clock_seconds: f64,
}

/// Command-line overrides of the simulation block.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub n_max: Option<u64>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self.seed.is_none() && self.paths.is_none() && self.n_max.is_none()
    }

    pub fn apply(&self, cfg: &mut ScenarioConfig) -> Result<(), ConfigError> {
        if self.is_empty() {
            return Ok(());
        }
        let sim = cfg.simulation.as_mut().ok_or_else(|| {
            ConfigError::new(
                "--seed/--paths/--n-max",
                "scenario has no [simulation] section",
            )
        })?;
        if let Some(s) = self.seed {
            sim.seed = s;
        }
        if let Some(p) = self.paths {
            sim.paths = p;
        }
        if let Some(n) = self.n_max {
            sim.n_max = n;
            // keep the grid and windows inside the shortened horizon
            sim.record_grid.retain(|&g| g <= n);
            sim.windows.retain(|w| w.start + w.len <= n);
        }
        cfg.validate()
    }
}

fn run_checker(
    c: Checker,
    cfg: &ScenarioConfig,
    r: &Resolved,
) -> Result<CheckerOutput, CliError> {
    let spec = cfg.checkers.as_ref().expect("checkers resolved from a spec");
    let range = SeriesRange::new(r.n_start, spec.n_max).map_err(|e| classify("checkers", e))?;
    let vc = &spec.verdict;
    let fam = &r.family;
    let id = c.to_string();
    let series = |res: maxima_bc::Result<CriterionReport>| {
        res.map(|report| CheckerOutput::Series {
            id: id.clone(),
            report,
        })
        .map_err(|e| classify("event", e))
    };
    match c {
        Checker::Bc1 => series(check_bc1(fam, range, vc)),
        Checker::Barndorff => series(check_barndorff(fam, range, vc)),
        Checker::Bs(m) => series(check_bs(fam, m, range, vc)),
        Checker::Stepanov(k) => series(check_stepanov(fam, k, range, vc)),
        Checker::Ratio => {
            let rc = RatioCheckConfig {
                epsilon: spec.epsilon,
                k_max: spec.k_max,
                n_grid: r.n_grid.clone(),
            };
            let report = check_ratio(fam, &rc, vc).map_err(|e| classify("event", e))?;
            Ok(CheckerOutput::Ratio { id, report })
        }
        Checker::Remark => {
            let report = remark_limit(fam, &r.n_grid, r.k_rule, &RemarkConfig::default())
                .map_err(|e| classify("event", e))?;
            Ok(CheckerOutput::Remark { id, report })
        }
    }
}

fn run_simulation(cfg: &ScenarioConfig, r: &Resolved) -> Result<SimulationOutput, CliError> {
    let spec = cfg.simulation.as_ref().expect("simulation spec present");
    let sc = SimulationConfig {
        distribution: *r.family.distribution(),
        n_max: spec.n_max,
        paths: spec.paths,
        master_seed: spec.seed,
        record_grid: spec.record_grid.clone(),
        workers: spec.workers,
    };
    let batch = simulate_paths_with_windows(&sc, Some(&r.family), &spec.windows)
        .map_err(|e| classify("simulation", e))?;
    let transformed = match &r.transform {
        Some(t) if !matches!(t, TransformFamily::Identity) && !spec.record_grid.is_empty() => {
            let tb = transform_trajectory(&batch, t).map_err(|e| classify("simulation", e))?;
            Some(tb.summary())
        }
        _ => None,
    };
    let mut windows = Vec::with_capacity(spec.windows.len());
    for (i, w) in spec.windows.iter().enumerate() {
        let frequency = batch.window_frequency(i);
        let union_probability = r
            .family
            .union_window(w.start, w.len)
            .map_err(|e| classify("simulation.windows", e))?;
        windows.push(WindowOutput {
            window: *w,
            frequency,
            union_probability,
            z_score: frequency.z_score(union_probability),
        });
    }
    Ok(SimulationOutput {
        paths: spec.paths,
        n_max: spec.n_max,
        maxima: batch.summary(),
        transformed,
        windows,
    })
}

/// Runs every requested checker and the simulation block.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let r = cfg.resolve()?;
    let checkers = r
        .checkers
        .iter()
        .map(|&c| run_checker(c, cfg, &r))
        .collect::<Result<Vec<_>, _>>()?;
    let simulation = match &cfg.simulation {
        Some(_) => Some(run_simulation(cfg, &r)?),
        None => None,
    };
    let seed = cfg.simulation.as_ref().map(|s| SeedProvenance {
        master_seed: s.seed,
        generator: GENERATOR_ID.to_string(),
        stream_rule: "path p draws from stream p of the master seed".to_string(),
    });
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: cfg.clone(),
        thresholds: r.family.thresholds().describe(),
        checkers,
        simulation,
        seed,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `(file stem, header, rows)` of the CSV table for one checker.
pub fn csv_table(c: &CheckerOutput) -> (String, Vec<String>, Vec<Vec<String>>) {
    let stem = c.id().replace(':', "_");
    match c {
        CheckerOutput::Series { report, .. } => {
            let mut header = vec!["n".to_string()];
            let short = |id: &str| id.rsplit('/').next().unwrap_or(id).to_string();
            let multi = report.series.len() > 1;
            for s in &report.series {
                if multi {
                    header.push(format!("term_{}", short(&s.criterion_id)));
                    header.push(format!("partial_sum_{}", short(&s.criterion_id)));
                } else {
                    header.push("term".into());
                    header.push("partial_sum".into());
                }
            }
            let columns: Vec<Vec<(u64, f64, f64)>> =
                report.series.iter().map(|s| s.rows().collect()).collect();
            let len = columns.first().map_or(0, Vec::len);
            let rows = (0..len)
                .map(|i| {
                    let mut row = vec![columns[0][i].0.to_string()];
                    for col in &columns {
                        row.push(col[i].1.to_string());
                        row.push(col[i].2.to_string());
                    }
                    row
                })
                .collect();
            (stem, header, rows)
        }
        CheckerOutput::Ratio { report, .. } => {
            let header = ["n", "k", "ratio"].map(String::from).to_vec();
            let rows = report
                .probe_grid
                .iter()
                .map(|p| vec![p.n.to_string(), p.k.to_string(), opt(p.ratio)])
                .collect();
            (stem, header, rows)
        }
        CheckerOutput::Remark { report, .. } => {
            let header = ["n", "k_window", "s", "head", "tail_bound"]
                .map(String::from)
                .to_vec();
            let rows = report
                .s_values
                .iter()
                .map(|p| {
                    vec![
                        p.n.to_string(),
                        p.k_window.to_string(),
                        p.s.to_string(),
                        p.head.to_string(),
                        opt(p.tail_bound),
                    ]
                })
                .collect();
            (stem, header, rows)
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `<name>.json` and/or one `<name>_<checker>.csv` per checker into `dir`.
pub fn write_outputs(report: &Report, dir: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = &report.scenario.name;
    let mut written = Vec::new();
    if format.json() {
        let path = dir.join(format!("{name}.json"));
        fs::write(&path, report.to_json()).map_err(io_err(&path))?;
        written.push(path);
    }
    if format.csv() {
        for c in &report.checkers {
            let (stem, header, rows) = csv_table(c);
            let path = dir.join(format!("{name}_{stem}.csv"));
            let csv_err = |e: csv::Error| CliError::Io {
                path: path.clone(),
                source: io::Error::other(e),
            };
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_path(&path)
                .map_err(csv_err)?;
            w.write_record(&header).map_err(csv_err)?;
            for row in rows {
                w.write_record(&row).map_err(csv_err)?;
            }
            w.flush().map_err(io_err(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}
