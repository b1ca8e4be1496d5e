use super::budget::{compute_a_t, mu_lower_bound_sweep, rescaled_schedule};
use super::counterexample::{counterexample_suite, drift_suite, CounterexampleParams};
use super::invariants::{exactness_check, exactness_tolerance, monotone_mu_check};
use crate::error::{Error, Result};
use crate::graphs::{ConductanceSchedule, ScheduleFile, TimeMode};
use crate::heat_checks::{gaffney_check, ghke_fit, GhkeMode};
use crate::kernels::{fmt_real, WeightField};
use crate::nash_bounds::diff_eq_check;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Exactness, monotone measures, Gaffney, the constant-free decay lemma and
    /// a Gaussian fit on one schedule.
    Bounds,
    Perturbative,
    Counterexample,
    Drift,
}

/// `{experiment, schedule, params, seed, output_dir}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub schedule: Option<ScheduleFile>,
    #[serde(default)]
    pub params: Option<Value>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn params<P: for<'de> Deserialize<'de> + Default>(&self) -> Result<P> {
        match &self.params {
            None => Ok(P::default()),
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::InvalidConfig(format!("params: {e}"))),
        }
    }

    fn build_schedule(&self) -> Result<ConductanceSchedule> {
        self.schedule
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("this experiment needs a schedule".into()))?
            .build()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsParams {
    pub thetas: Vec<f64>,
    /// Vertex the Gaffney weight and the Gaussian catalog are centred at.
    pub origin: usize,
    /// Largest `t - s` for the Gaffney check.
    pub gaffney_span: f64,
    /// Largest `n` for the decay lemma (discrete schedules).
    pub diff_eq_max: usize,
}

impl Default for BoundsParams {
    fn default() -> Self {
        Self { thetas: vec![-1.0, -0.5, -0.1, 0.1, 0.5, 1.0], origin: 0, gaffney_span: 16.0, diff_eq_max: 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbativeParams {
    pub gamma: f64,
    pub anchor: usize,
    pub grid: Option<Vec<usize>>,
}

impl Default for PerturbativeParams {
    fn default() -> Self {
        Self { gamma: 1.0, anchor: 0, grid: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub eta: f64,
    pub iota: f64,
    pub n_max: usize,
    pub grid: Option<Vec<usize>>,
    pub window: f64,
    pub paths: usize,
    pub mc_horizon: usize,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self { eta: 0.3, iota: 0.25, n_max: 4096, grid: None, window: 0.25, paths: 0, mc_horizon: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftParams {
    pub eta: f64,
    pub eps: f64,
    pub n: usize,
}

impl Default for DriftParams {
    fn default() -> Self {
        Self { eta: 0.3, eps: 0.3, n: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

/// Everything a run produced except wall-clock data and the output location,
/// which go to the `meta.json` sidecar so that `report.json` is reproducible
/// byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub schedule: Option<Value>,
    pub seed: u64,
    pub constants: BTreeMap<String, f64>,
    pub checks: Vec<CheckOutcome>,
    /// Reported quantities that carry no pass/fail.
    pub observations: BTreeMap<String, Value>,
    pub pass: bool,
    /// CSV files written next to the report, relative to `output_dir`.
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub output_dir: PathBuf,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub stage_ms: BTreeMap<String, u128>,
}

/// An error together with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("stage {stage}: {source}")]
pub struct StageError {
    pub stage: String,
    #[source]
    pub source: Error,
}

type Staged<T> = std::result::Result<T, StageError>;

struct Run {
    report: BoundReport,
    stage_ms: BTreeMap<String, u128>,
    csv: Vec<(String, Vec<u8>)>,
}

impl Run {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Staged<T> {
        let start = Instant::now();
        let out = f().map_err(|source| StageError { stage: name.to_string(), source });
        self.stage_ms.insert(name.to_string(), start.elapsed().as_millis());
        out
    }

    fn check(&mut self, name: &str, pass: bool, detail: impl Serialize) {
        let detail = serde_json::to_value(detail).unwrap_or(Value::Null);
        self.report.checks.push(CheckOutcome { name: name.to_string(), pass, detail });
    }

    fn constant(&mut self, name: &str, v: f64) {
        self.report.constants.insert(name.to_string(), v);
    }
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn bounds(run: &mut Run, config: &ExperimentConfig) -> Staged<()> {
    let p: BoundsParams = run.stage("config", || config.params())?;
    let schedule = run.stage("schedule", || config.build_schedule())?;
    run.report.schedule = Some(schedule.describe());
    let horizon = schedule.horizon();

    let ex = run.stage("exactness", || exactness_check(&schedule))?;
    run.check("exactness", ex.pass, &ex);

    let monotone = schedule.is_monotone();
    if monotone {
        let t = horizon.floor() as usize;
        let slack = exactness_tolerance(&schedule);
        let mu = run.stage("monotone_mu", || monotone_mu_check(&schedule, t, slack))?;
        run.check("monotone_mu", mu.violations == 0, &mu);

        let g = schedule.graph();
        let lazy = (0..g.vertex_count()).all(|x| g.has_loop(x));
        if schedule.time_mode() == TimeMode::Discrete && !lazy {
            // The discrete Gaffney bound assumes a lazy walk.
            run.report.observations.insert("gaffney".into(), Value::String("skipped: walk is not lazy".into()));
        } else {
            let span = horizon.min(p.gaffney_span);
            let gf = run.stage("gaffney", || {
                let rho = WeightField::distance_from(schedule.graph(), 0.0, p.origin)?;
                gaffney_check(&schedule, 0.0, span, &p.thetas, &rho)
            })?;
            run.constant("gaffney_c1", gf.c1);
            run.check("gaffney", gf.pass, &gf);
        }

        if schedule.time_mode() == TimeMode::Discrete {
            let n_max = (horizon as usize).min(p.diff_eq_max);
            let de = run.stage("diff_eq", || diff_eq_check(&schedule, n_max))?;
            run.constant("diff_eq_worst_ratio", de.worst_ratio);
            let summary = serde_json::json!({
                "n_max": n_max,
                "violations": de.violations,
                "worst_ratio": de.worst_ratio,
                "worst": de.worst,
                "max_duality_defect": de.max_duality_defect,
            });
            run.check("diff_eq", de.violations == 0, summary);
        }
    }

    let fit = run.stage("ghke", || {
        let n = schedule.vertex_count();
        if p.origin >= n {
            return Err(Error::InvalidConfig(format!("origin {} is not a vertex", p.origin)));
        }
        let catalog: Vec<_> = (0..n).map(|y| (0.0, horizon, p.origin, y)).collect();
        ghke_fit(&schedule, &catalog, GhkeMode::Auto)
    })?;
    run.constant("ghke_c_upper", fit.c_upper);
    run.constant("ghke_c_lower", fit.c_lower);
    run.constant("ghke_c_star", fit.c_star);
    let mut buf = Vec::new();
    run.stage("ghke", || fit.to_csv(&mut buf))?;
    run.csv.push(("ghke.csv".into(), buf));
    let summary = serde_json::json!({
        "records": fit.records.len(),
        "c_star": fit.c_star,
        "upper_witness": fit.upper_witness,
        "lower_witness": fit.lower_witness,
        "skipped_range": fit.skipped_range,
        "skipped_guard": fit.skipped_guard,
        "skipped_underflow": fit.skipped_underflow,
    });
    run.check("ghke_finite", fit.c_star.is_finite(), summary);

    if schedule.time_mode() == TimeMode::Discrete {
        let budget = run.stage("budget", || compute_a_t(&schedule, &[]))?;
        run.constant("budget_big_a", budget.big_a);
        run.constant("budget_growth_exponent", budget.growth_exponent);
    }
    Ok(())
}

fn perturbative(run: &mut Run, config: &ExperimentConfig) -> Staged<()> {
    let p: PerturbativeParams = run.stage("config", || config.params())?;
    let schedule = run.stage("schedule", || config.build_schedule())?;
    run.report.schedule = Some(schedule.describe());
    let horizon = schedule.horizon() as usize;
    let grid = p.grid.clone().unwrap_or_else(|| {
        let mut g: Vec<usize> = (0..).map(|k| (1usize << k) - 1).take_while(|&t| t <= horizon).collect();
        g.push(horizon);
        g
    });
    let budget = run.stage("budget", || compute_a_t(&schedule, &grid))?;
    run.constant("big_a", budget.big_a);
    run.constant("growth_exponent", budget.growth_exponent);
    let mut buf = Vec::new();
    run.stage("budget", || {
        use std::io::Write;
        writeln!(buf, "t,a_t,rho_step")?;
        for (t, a) in budget.a.iter().enumerate() {
            let step = if t == 0 { 0.0 } else { budget.steps[t - 1] };
            writeln!(buf, "{t},{},{}", fmt_real(*a), fmt_real(step))?;
        }
        Ok(())
    })?;
    run.csv.push(("budget.csv".into(), buf));
    let summary = serde_json::json!({
        "big_a": budget.big_a,
        "big_a_witness": budget.big_a_witness,
        "growth_exponent": budget.growth_exponent,
        "triples_checked": budget.triples_checked,
        "subadditivity_violations": budget.subadditivity_violations,
    });
    run.check("cond_pert", budget.cond_pert && budget.big_a.is_finite(), summary);
    run.check("subadditivity", budget.subadditivity_violations == 0, budget.triples_checked);

    let (_, rescaled) = run.stage("rescale", || rescaled_schedule(&schedule, &budget, p.anchor.min(horizon)))?;
    run.constant("rescaled_kernel_defect", rescaled.kernel_defect);
    run.check("rescaled_monotone", true, p.anchor.min(horizon));
    run.check("rescaled_kernels_invariant", rescaled.kernels_invariant, rescaled.kernel_defect);

    let sweep = run.stage("mu_lower_bound", || mu_lower_bound_sweep(&schedule, &budget, p.gamma))?;
    run.constant("mu_min_ratio", sweep.min_ratio);
    run.check("mu_lower_bound", sweep.violations == 0, &sweep);
    Ok(())
}

fn counterexample(run: &mut Run, config: &ExperimentConfig) -> Staged<()> {
    let c: CounterexampleConfig = run.stage("config", || config.params())?;
    let mut params = CounterexampleParams::new(c.eta, c.iota, c.n_max, config.seed);
    if let Some(g) = c.grid {
        params.grid = g;
    }
    params.window = c.window;
    params.paths = c.paths;
    params.mc_horizon = c.mc_horizon.min(c.n_max);
    let rep = run.stage("counterexample", || counterexample_suite(&params))?;
    run.report.schedule = Some(serde_json::json!({"law": "oscillating_z", "eta": c.eta, "iota": c.iota, "n_max": c.n_max}));
    let mut buf = Vec::new();
    run.stage("counterexample", || rep.to_csv(&mut buf))?;
    run.csv.push(("counterexample.csv".into(), buf));
    run.constant("budget_spread", rep.budget_spread);
    run.constant("p_slope", rep.p_slope);
    run.check("budget_bounded", rep.budget_bounded, rep.budget_spread);
    run.check("budget_step_bound", rep.step_bound_violations == 0, rep.step_bound_violations);
    run.check("p_decreasing", rep.p_strictly_decreasing, rep.entries.iter().map(|e| e.p_n).collect::<Vec<_>>());
    run.check("p_slope_negative", rep.p_slope < 0.0, rep.p_slope);
    run.check("ghkl_flag", rep.ghkl_flag, &rep.lower_flagged);
    if let Some(mc) = &rep.monte_carlo {
        run.check("monte_carlo", mc.violations == 0, mc);
    }
    let obs = &mut run.report.observations;
    obs.insert("ghku_flag".into(), Value::Bool(rep.ghku_flag));
    obs.insert("upper_flagged".into(), serde_json::json!(rep.upper_flagged));
    obs.insert("pair_frequencies".into(), serde_json::json!(rep.pair_frequencies));
    Ok(())
}

fn drift(run: &mut Run, config: &ExperimentConfig) -> Staged<()> {
    let p: DriftParams = run.stage("config", || config.params())?;
    let rep = run.stage("drift", || drift_suite(p.eta, p.eps, p.n))?;
    run.report.schedule = Some(serde_json::json!({"law": "oscillating_half_line", "eta": p.eta, "eps": p.eps, "n_max": p.n}));
    run.constant("speed", rep.speed);
    run.constant("mean_over_n", rep.mean_over_n);
    run.constant("predicted_speed", rep.predicted);
    run.check("drift_speed", rep.speed_pass, &rep);
    run.check("pair_frequencies", rep.pair_pass, rep.pair_frequencies);
    Ok(())
}

/// Runs one configured experiment. With an `output_dir`, writes `report.json`,
/// the CSV artifacts and `meta.json` there.
pub fn run_experiment(config: &ExperimentConfig) -> Staged<BoundReport> {
    let started = now_ms();
    let mut run = Run {
        report: BoundReport {
            experiment: config.experiment,
            config: ExperimentConfig { output_dir: None, ..config.clone() },
            schedule: None,
            seed: config.seed,
            constants: BTreeMap::new(),
            checks: Vec::new(),
            observations: BTreeMap::new(),
            pass: false,
            artifacts: Vec::new(),
        },
        stage_ms: BTreeMap::new(),
        csv: Vec::new(),
    };
    match config.experiment {
        ExperimentKind::Bounds => bounds(&mut run, config)?,
        ExperimentKind::Perturbative => perturbative(&mut run, config)?,
        ExperimentKind::Counterexample => counterexample(&mut run, config)?,
        ExperimentKind::Drift => drift(&mut run, config)?,
    }
    run.report.pass = run.report.checks.iter().all(|c| c.pass);
    run.report.artifacts = run.csv.iter().map(|(n, _)| n.clone()).collect();
    if let Some(dir) = &config.output_dir {
        let Run { report, stage_ms, csv } = &run;
        let write = || -> Result<()> {
            for (name, bytes) in csv {
                write_atomic(&dir.join(name), bytes)?;
            }
            let mut text = serde_json::to_vec_pretty(report)?;
            text.push(b'\n');
            write_atomic(&dir.join("report.json"), &text)?;
            let meta = RunMeta {
                output_dir: dir.clone(),
                started_unix_ms: started, finished_unix_ms: now_ms(),
                stage_ms: stage_ms.clone(),
            };
            write_atomic(&dir.join("meta.json"), &serde_json::to_vec_pretty(&meta)?)?;
            Ok(())
        };
        write().map_err(|source| StageError { stage: "write".into(), source })?;
    }
    Ok(run.report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "experiment": "bounds",
        "schedule": {"graph": {"kind": "cycle", "params": {"n": 8}, "loops": true},
                     "schedule": {"kind": "static", "params": {}, "horizon": 8}},
        "seed": 1
    }"#;

    #[test]
    fn minimal_bounds_run_is_green() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        let start = Instant::now();
        let rep = run_experiment(&cfg).unwrap();
        assert!(start.elapsed().as_secs_f64() < 5.0);
        for c in &rep.checks {
            assert!(c.pass, "{} failed: {}", c.name, c.detail);
        }
        assert!(rep.checks.iter().any(|c| c.name == "gaffney"));
        assert_eq!(rep.constants["budget_big_a"], 0.0);
    }

    #[test]
    fn malformed_config_names_the_stage() {
        assert!(ExperimentConfig::parse(r#"{"experiment": "bounds", "bogus": 1}"#).is_err());
        let cfg = ExperimentConfig::parse(r#"{"experiment": "bounds"}"#).unwrap();
        let err = run_experiment(&cfg).unwrap_err();
        assert_eq!(err.stage, "schedule");
        let cfg = ExperimentConfig::parse(r#"{"experiment": "drift", "params": {"speed": 2}}"#).unwrap();
        assert_eq!(run_experiment(&cfg).unwrap_err().stage, "config");
    }
}
