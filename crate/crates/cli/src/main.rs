use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tempo_kernel::experiments::{
    run_experiment, write_atomic, CounterexampleConfig, ExperimentConfig, ExperimentKind, StageError,
};
use tempo_kernel::graphs::{ConductanceSchedule, ScheduleFile};
use tempo_kernel::heat_checks::{
    ghke_fit, gaffney_check, holder_check, holder_cylinder, phi_estimate, solve_cylinder, GhkeMode, Lateral,
    PhiParams, RANDOM_MEMBERS,
};
use tempo_kernel::kernels::{evolving_measure, kernel, one_step_kernel, walk_mode, write_kernel_csv, write_measure_csv, WeightField};
use tempo_kernel::nash_bounds::diff_eq_check;
use tempo_kernel::profiles::{ProfileCurve, ProfileKind, ProfileMode, Profiles};
use tempo_kernel::{Error, ErrorClass};

const THREADS_ENV: &str = "TEMPO_KERNEL_THREADS";

#[derive(Parser)]
#[command(name = "tempo-kernel", version, about = "Heat kernels of random walks with time-varying conductances")]
struct Cli {
    /// Worker threads; falls back to TEMPO_KERNEL_THREADS, then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel K_{s,t} as CSV.
    Kernel(Window),
    /// Evolving measure mu_{s,t} = pi_s K_{s,t} as CSV.
    Measure(Window),
    /// Spectral and conductance profiles of the one-step kernel at time t.
    Profile(Window),
    /// Constant-free decay lemma on every pair m <= n <= nmax.
    NashCheck(NashArgs),
    /// Gaffney bound on [s, t].
    GaffneyCheck(Window),
    /// PHI constant on a cylinder ending at t.
    PhiCheck(CheckArgs),
    /// Hölder exponent and oscillation decay on a cylinder ending at t.
    HolderCheck(CheckArgs),
    /// Gaussian envelope fit over (s, t, x, y) with x from the config.
    GhkeFit(Window),
    /// Oscillating counterexample suite.
    Counterexample(CounterexampleArgs),
    /// Perturbative budget, rescaling and measure lower bound.
    Perturbative(RunArgs),
    /// Any experiment config.
    Run(RunArgs),
}

#[derive(Args)]
struct Window {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    s: f64,
    /// Defaults to the horizon.
    #[arg(long)]
    t: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NashArgs {
    #[arg(long)]
    config: PathBuf,
    /// Defaults to min(horizon, 24).
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    /// Cylinder top T; defaults to the horizon.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 0.3)]
    eta: f64,
    #[arg(long, default_value_t = 0.25)]
    iota: f64,
    #[arg(long, default_value_t = 4096)]
    nmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

/// Schedule file with an optional `params` block for the heat checks.
#[derive(Deserialize)]
struct CheckFile {
    #[serde(flatten)]
    schedule: ScheduleFile,
    #[serde(default)]
    params: Option<Value>,
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CheckParams {
    z: usize,
    radius: f64,
    theta: Option<[f64; 4]>,
    random_members: usize,
    /// Sources for `ghke-fit`.
    sources: Vec<usize>,
    thetas: Vec<f64>,
}

impl Default for CheckParams {
    fn default() -> Self {
        Self {
            z: 0,
            radius: 2.0,
            theta: None,
            random_members: RANDOM_MEMBERS,
            sources: vec![0],
            thetas: vec![-1.0, -0.5, -0.1, 0.1, 0.5, 1.0],
        }
    }
}

enum Failure {
    Lib(Error),
    Stage(StageError),
    Usage(String),
    /// Output was produced but an asserted inequality failed.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn class(&self) -> ErrorClass {
        match self {
            Failure::Lib(e) => e.class(),
            Failure::Stage(e) => e.source.class(),
            Failure::Usage(_) => ErrorClass::Validation,
            Failure::Check(_) => ErrorClass::CheckFailed,
        }
    }

    fn json(&self) -> Value {
        let class = match self.class() {
            ErrorClass::Validation => "validation",
            ErrorClass::CheckFailed => "check_failed",
            ErrorClass::Internal => "internal",
        };
        match self {
            Failure::Lib(e) => json!({"error": e.kind(), "class": class, "message": e.to_string()}),
            Failure::Stage(e) => {
                json!({"error": e.source.kind(), "class": class, "stage": e.stage, "message": e.source.to_string()})
            }
            Failure::Usage(m) => json!({"error": "Usage", "class": class, "message": m}),
            Failure::Check(m) => json!({"error": "CheckFailed", "class": class, "message": m}),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.class() {
            ErrorClass::Validation => 1,
            ErrorClass::CheckFailed => 2,
            ErrorClass::Internal => 3,
        }
    }
}

type Outcome = Result<(), Failure>;

/// Unreadable config files are input errors, not internal ones.
fn read_config(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn load_check_file(path: &Path) -> Result<(ConductanceSchedule, CheckParams), Error> {
    let text = read_config(path)?;
    let file: CheckFile = serde_json::from_str(&text)?;
    let params = match file.params {
        None => CheckParams::default(),
        Some(v) => serde_json::from_value(v).map_err(|e| Error::InvalidConfig(format!("params: {e}")))?,
    };
    Ok((file.schedule.build()?, params))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, value: &impl serde::Serialize) -> Result<(), Error> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    emit(out, &text)
}

fn kernel_cmd(w: &Window) -> Outcome {
    let (s, _) = load_check_file(&w.config)?;
    let t = w.t.unwrap_or(s.horizon());
    let k = kernel(&s, w.s, t, walk_mode(&s))?;
    let mut buf = Vec::new();
    write_kernel_csv(&k, &mut buf)?;
    Ok(emit(w.out.as_deref(), &buf)?)
}

fn measure_cmd(w: &Window) -> Outcome {
    let (s, _) = load_check_file(&w.config)?;
    let t = w.t.unwrap_or(s.horizon());
    let mu = evolving_measure(&s, w.s, t, walk_mode(&s))?;
    let mut buf = Vec::new();
    write_measure_csv(&mu.values, &mut buf)?;
    Ok(emit(w.out.as_deref(), &buf)?)
}

fn profile_cmd(w: &Window) -> Outcome {
    let (s, _) = load_check_file(&w.config)?;
    let t = w.t.unwrap_or(s.horizon());
    let k = one_step_kernel::<f64>(&s, t)?;
    let prof = Profiles::compute(&k.dense(), k.source_measure(), ProfileMode::Auto)?;
    let us = prof.breakpoints();
    let curve = |kind, f: &dyn Fn(f64) -> Option<f64>| {
        let pts = us.iter().filter_map(|&u| f(u).map(|v| (u, v))).collect();
        ProfileCurve::new(kind, pts, prof.is_exact())
    };
    let lambda = curve(ProfileKind::Lambda, &|u| prof.spectral(u));
    let phi = curve(ProfileKind::Phi, &|u| prof.conductance(u));
    let mut text = lambda.to_csv();
    text.extend(phi.to_csv().lines().skip(1).map(|l| format!("{l}\n")));
    Ok(emit(w.out.as_deref(), text.as_bytes())?)
}

fn nash_cmd(a: &NashArgs) -> Outcome {
    let (s, _) = load_check_file(&a.config)?;
    let n_max = a.nmax.unwrap_or((s.horizon() as usize).min(24));
    let rep = diff_eq_check(&s, n_max)?;
    emit_json(a.out.as_deref(), &rep)?;
    if rep.violations > 0 {
        return Err(Failure::Check(format!("{} pairs exceed psi, worst {:?}", rep.violations, rep.worst)));
    }
    Ok(())
}

fn gaffney_cmd(w: &Window) -> Outcome {
    let (s, p) = load_check_file(&w.config)?;
    let t = w.t.unwrap_or(s.horizon());
    let rho = WeightField::distance_from(s.graph(), 0.0, p.z)?;
    let rep = gaffney_check(&s, w.s, t, &p.thetas, &rho)?;
    emit_json(w.out.as_deref(), &rep)?;
    if !rep.pass {
        return Err(Failure::Check("Gaffney bound violated".into()));
    }
    Ok(())
}

fn phi_params(p: &CheckParams, seed: u64) -> PhiParams {
    let mut params = PhiParams { random_members: p.random_members, seed, ..PhiParams::default() };
    if let Some(theta) = p.theta {
        params.theta = theta;
    }
    params
}

fn phi_cmd(a: &CheckArgs) -> Outcome {
    let (s, p) = load_check_file(&a.config)?;
    let big_t = a.t.unwrap_or(s.horizon());
    let rep = phi_estimate(&s, p.z, p.radius, big_t, &phi_params(&p, a.seed))?;
    emit_json(a.out.as_deref(), &rep)?;
    if !(rep.gamma_hat > 0.0) {
        return Err(Failure::Check(format!("gamma_hat = {}", rep.gamma_hat)));
    }
    Ok(())
}

fn holder_cmd(a: &CheckArgs) -> Outcome {
    let (s, p) = load_check_file(&a.config)?;
    let big_t = a.t.unwrap_or(s.horizon());
    let phi = phi_estimate(&s, p.z, p.radius, big_t, &phi_params(&p, a.seed))?;
    let cyl = holder_cylinder(p.z, p.radius, big_t)?;
    let g = s.graph();
    let terminal: Vec<f64> = (0..g.vertex_count())
        .map(|x| if (g.distance(p.z, x) as f64) <= p.radius { 1.0 } else { 0.0 })
        .collect();
    let sol = solve_cylinder(&s, &cyl, &terminal, &Lateral::Zero)?;
    let rep = holder_check(&s, p.z, p.radius, big_t, &sol, phi.gamma_hat)?;
    emit_json(a.out.as_deref(), &json!({"gamma_hat": phi.gamma_hat, "holder": rep}))?;
    if !(rep.h_est > 0.0) || rep.oscillation_violations > 0 {
        return Err(Failure::Check(format!(
            "h_est = {}, oscillation violations = {}",
            rep.h_est, rep.oscillation_violations
        )));
    }
    Ok(())
}

fn ghke_cmd(w: &Window) -> Outcome {
    let (s, p) = load_check_file(&w.config)?;
    let t = w.t.unwrap_or(s.horizon());
    let n = s.vertex_count();
    let catalog: Vec<_> = p.sources.iter().flat_map(|&x| (0..n).map(move |y| (w.s, t, x, y))).collect();
    let fit = ghke_fit(&s, &catalog, GhkeMode::Auto)?;
    let mut buf = Vec::new();
    fit.to_csv(&mut buf)?;
    emit(w.out.as_deref(), &buf)?;
    let summary = json!({
        "c_upper": fit.c_upper,
        "c_lower": fit.c_lower,
        "c_star": fit.c_star,
        "c_ghku": fit.c_ghku,
        "records": fit.records.len(),
        "skipped_range": fit.skipped_range,
        "skipped_guard": fit.skipped_guard,
        "skipped_underflow": fit.skipped_underflow,
    });
    eprintln!("{summary}");
    Ok(())
}

fn finish_run(config: ExperimentConfig) -> Outcome {
    let rep = run_experiment(&config).map_err(Failure::Stage)?;
    if config.output_dir.is_none() {
        emit_json(None, &rep)?;
    }
    if !rep.pass {
        let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        return Err(Failure::Check(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(())
}

fn counterexample_cmd(a: &CounterexampleArgs) -> Outcome {
    let params = CounterexampleConfig { eta: a.eta, iota: a.iota, n_max: a.nmax, ..CounterexampleConfig::default() };
    let params = json!({
        "eta": params.eta,
        "iota": params.iota,
        "n_max": params.n_max,
        "window": params.window,
        "paths": params.paths,
        "mc_horizon": params.mc_horizon,
    });
    finish_run(ExperimentConfig {
        experiment: ExperimentKind::Counterexample,
        schedule: None,
        params: Some(params),
        seed: a.seed,
        output_dir: Some(a.out.clone()),
    })
}

fn run_cmd(a: &RunArgs, expect: Option<ExperimentKind>) -> Outcome {
    let mut config = ExperimentConfig::parse(&read_config(&a.config)?)?;
    if let Some(kind) = expect {
        if config.experiment != kind {
            return Err(Failure::Usage(format!("config runs {:?}, expected {:?}", config.experiment, kind)));
        }
    }
    if let Some(out) = &a.out {
        config.output_dir = Some(out.clone());
    }
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    finish_run(config)
}

fn configure_threads(flag: Option<usize>) -> Outcome {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| Failure::Usage(format!("{THREADS_ENV}={v} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Failure::Usage("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Outcome {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Kernel(w) => kernel_cmd(w),
        Command::Measure(w) => measure_cmd(w),
        Command::Profile(w) => profile_cmd(w),
        Command::NashCheck(a) => nash_cmd(a),
        Command::GaffneyCheck(w) => gaffney_cmd(w),
        Command::PhiCheck(a) => phi_cmd(a),
        Command::HolderCheck(a) => holder_cmd(a),
        Command::GhkeFit(w) => ghke_cmd(w),
        Command::Counterexample(a) => counterexample_cmd(a),
        Command::Perturbative(a) => run_cmd(a, Some(ExperimentKind::Perturbative)),
        Command::Run(a) => run_cmd(a, None),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            let f = Failure::Usage(first.to_string());
            eprintln!("{}", f.json());
            return ExitCode::from(f.exit_code());
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.json());
            ExitCode::from(f.exit_code())
        }
    }
}
