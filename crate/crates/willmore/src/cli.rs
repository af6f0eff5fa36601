//! Command-line front end: JSON config with flag overrides, four run modes
//! (evolve, converge, energy, quality), and deterministic CSV output.

use crate::adaptive::{evolve_adaptive, SmoothingWeight, TangentialConfig};
use crate::bdfk::{evolve, RedistributeMode, RunRecord, SolverConfig};
use crate::catalog::curve_catalog;
use crate::energy::EnergyCorrectorState;
use crate::error::{Error, Result};
use crate::monitor::{MonitorModel, MonitorParams};
use crate::verify::{convergence_study, ConvergenceTable, StudyMethod, StudyOptions};
use clap::Parser;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Evolve,
    Converge,
    Energy,
    Quality,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Plain BDFk, no mesh maintenance.
    Bdfk,
    /// BDFk with post-step adaptive redistribution.
    Awar,
    /// Moving-mesh BDFk with tangential velocity.
    Abdfk,
}

/// Monitor choice: automatic regime selection or a pinned model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MonitorChoice {
    Auto,
    Constant,
    Linear,
    Hybrid,
    Quadratic,
    Grad,
    Highorder,
}

impl MonitorChoice {
    fn fixed_model(self) -> Option<MonitorModel> {
        match self {
            MonitorChoice::Auto => None,
            MonitorChoice::Constant => Some(MonitorModel::Constant),
            MonitorChoice::Linear => Some(MonitorModel::Linear),
            MonitorChoice::Hybrid => Some(MonitorModel::Hybrid),
            MonitorChoice::Quadratic => Some(MonitorModel::Quadratic),
            MonitorChoice::Grad => Some(MonitorModel::GradientEnhanced),
            MonitorChoice::Highorder => Some(MonitorModel::HighOrderCombined),
        }
    }
}

/// Monitor regime thresholds, overridable as a group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub c0_low: f64,
    pub c0_high: f64,
    pub c1_low: f64,
    pub c1_high: f64,
    pub q_thresh: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        let p = MonitorParams::default();
        Thresholds {
            c0_low: p.c0_low,
            c0_high: p.c0_high,
            c1_low: p.c1_low,
            c1_high: p.c1_high,
            q_thresh: p.q_thresh,
        }
    }
}

impl std::str::FromStr for Thresholds {
    type Err = String;

    /// Comma list: c0_low,c0_high,c1_low,c1_high,q_thresh.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(format!("expected 5 comma-separated values, got {}", parts.len()));
        }
        let mut vals = [0.0f64; 5];
        for (v, p) in vals.iter_mut().zip(&parts) {
            *v = p.parse().map_err(|_| format!("not a number: {p:?}"))?;
        }
        Ok(Thresholds {
            c0_low: vals[0],
            c0_high: vals[1],
            c1_low: vals[2],
            c1_high: vals[3],
            q_thresh: vals[4],
        })
    }
}

/// Full run configuration; the JSON config file mirrors these field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    pub method: Method,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub tol: f64,
    pub max_picard: usize,
    /// Preset name or point-file path; required in evolve/energy/quality modes.
    pub curve: Option<String>,
    pub monitor: MonitorChoice,
    pub alpha0: f64,
    pub gamma0: f64,
    pub beta: f64,
    pub thresholds: Thresholds,
    /// Tangential weight (moving-mesh method).
    #[serde(rename = "P")]
    pub p: f64,
    /// Tangential relaxation constant (moving-mesh method).
    #[serde(rename = "J")]
    pub j: f64,
    /// Apply the energy corrector after each step (abdfk only).
    pub ec: bool,
    /// Energy shift used by the corrector.
    #[serde(rename = "C")]
    pub c: f64,
    /// Corrector smoothing exponent.
    pub r: f64,
    pub out_dir: Option<String>,
    pub snapshot_every: usize,
    /// Refinement levels in converge mode.
    pub levels: usize,
    /// Substep the first k-1 steps (converge mode enables this for k >= 3).
    pub startup_substeps: bool,
    /// Redistribute only when the spacing ratio exceeds this (awar method).
    pub awar_trigger_q: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Evolve,
            method: Method::Bdfk,
            k: 1,
            m: 100,
            dt: 1e-3,
            t_final: 1.0,
            tol: 1e-8,
            max_picard: 100,
            curve: None,
            monitor: MonitorChoice::Auto,
            alpha0: 1.0,
            gamma0: 0.1,
            beta: 0.3,
            thresholds: Thresholds::default(),
            p: 1.0,
            j: 0.5,
            ec: false,
            c: 1.0,
            r: 5.0,
            out_dir: None,
            snapshot_every: 0,
            levels: 4,
            startup_substeps: false,
            awar_trigger_q: None,
        }
    }
}

impl RunConfig {
    pub fn monitor_params(&self) -> MonitorParams {
        let mut p = MonitorParams::from_base(self.alpha0, self.gamma0, self.beta);
        p.c0_low = self.thresholds.c0_low;
        p.c0_high = self.thresholds.c0_high;
        p.c1_low = self.thresholds.c1_low;
        p.c1_high = self.thresholds.c1_high;
        p.q_thresh = self.thresholds.q_thresh;
        p
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut sc = SolverConfig::new(self.k, self.m, self.dt, self.t_final);
        sc.tol = self.tol;
        sc.max_picard = self.max_picard;
        sc.monitor_params = self.monitor_params();
        sc.fixed_monitor = self.monitor.fixed_model();
        sc.startup_substeps = self.startup_substeps;
        sc.snapshot_every = self.snapshot_every;
        sc.awar_trigger_q = self.awar_trigger_q;
        sc
    }

    pub fn tangential_config(&self) -> TangentialConfig {
        TangentialConfig {
            p: SmoothingWeight::Constant(self.p),
            j: self.j,
        }
    }

    fn require_curve(&self) -> Result<&str> {
        self.curve
            .as_deref()
            .ok_or_else(|| Error::Usage("--curve is required in this mode".into()))
    }

    fn out_dir(&self) -> PathBuf {
        match &self.out_dir {
            Some(d) => PathBuf::from(d),
            None => std::env::var_os("WILLMORE_OUT_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out")),
        }
    }
}

/// Command-line flags; every flag overrides the corresponding config key.
#[derive(Parser, Debug, Default)]
#[command(
    name = "willmore",
    about = "Planar Willmore flow: plain, redistributing, and moving-mesh BDFk solvers",
    after_help = "Exit codes: 0 success, 1 runtime failure (diagnostics written), 2 usage error."
)]
pub struct CliArgs {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// evolve: run one simulation; converge: refinement study;
    /// energy: corrector run; quality: compare all three methods.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// BDF order (1-4).
    #[arg(long)]
    pub k: Option<usize>,
    /// Node count.
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    pub t_final: Option<f64>,
    /// Picard stopping tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_picard: Option<usize>,
    /// Preset name or point-file path.
    #[arg(long)]
    pub curve: Option<String>,
    #[arg(long, value_enum)]
    pub monitor: Option<MonitorChoice>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Monitor thresholds as c0_low,c0_high,c1_low,c1_high,q_thresh.
    #[arg(long)]
    pub thresholds: Option<Thresholds>,
    /// Tangential weight P.
    #[arg(long = "P")]
    pub p: Option<f64>,
    /// Tangential relaxation constant J.
    #[arg(long = "J")]
    pub j: Option<f64>,
    /// Enable the energy corrector (abdfk).
    #[arg(long)]
    pub ec: bool,
    /// Corrector energy shift C.
    #[arg(long = "C")]
    pub c: Option<f64>,
    /// Corrector smoothing exponent r.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<String>,
    /// Write a curve snapshot every N steps (0: first and last only).
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Refinement levels in converge mode.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Substep the first k-1 steps for clean high-order startup.
    #[arg(long)]
    pub startup_substeps: bool,
    /// Redistribute only when max/min spacing exceeds this ratio.
    #[arg(long)]
    pub awar_trigger_q: Option<f64>,
    /// Print the effective config as JSON and exit.
    #[arg(long)]
    pub dump_config: bool,
}

/// Builds the effective config: defaults, then the config file, then flags.
pub fn effective_config(args: &CliArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = args.mode {
        cfg.mode = v;
    }
    if let Some(v) = args.method {
        cfg.method = v;
    }
    if let Some(v) = args.k {
        cfg.k = v;
    }
    if let Some(v) = args.m {
        cfg.m = v;
    }
    if let Some(v) = args.dt {
        cfg.dt = v;
    }
    if let Some(v) = args.t_final {
        cfg.t_final = v;
    }
    if let Some(v) = args.tol {
        cfg.tol = v;
    }
    if let Some(v) = args.max_picard {
        cfg.max_picard = v;
    }
    if let Some(v) = &args.curve {
        cfg.curve = Some(v.clone());
    }
    if let Some(v) = args.monitor {
        cfg.monitor = v;
    }
    if let Some(v) = args.alpha0 {
        cfg.alpha0 = v;
    }
    if let Some(v) = args.gamma0 {
        cfg.gamma0 = v;
    }
    if let Some(v) = args.beta {
        cfg.beta = v;
    }
    if let Some(v) = args.thresholds {
        cfg.thresholds = v;
    }
    if let Some(v) = args.p {
        cfg.p = v;
    }
    if let Some(v) = args.j {
        cfg.j = v;
    }
    if args.ec {
        cfg.ec = true;
    }
    if let Some(v) = args.c {
        cfg.c = v;
    }
    if let Some(v) = args.r {
        cfg.r = v;
    }
    if let Some(v) = &args.out_dir {
        cfg.out_dir = Some(v.clone());
    }
    if let Some(v) = args.snapshot_every {
        cfg.snapshot_every = v;
    }
    if let Some(v) = args.levels {
        cfg.levels = v;
    }
    if args.startup_substeps {
        cfg.startup_substeps = true;
    }
    if let Some(v) = args.awar_trigger_q {
        cfg.awar_trigger_q = Some(v);
    }
    Ok(cfg)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Curve snapshots, one row per node per snapshot time.
pub fn snapshots_csv(record: &RunRecord) -> String {
    let mut out = String::from("t,i,x,y,v,kappa\n");
    for (t, state) in &record.snapshots {
        for i in 0..state.m() {
            let p = state.curve.point(i);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_f(*t),
                i,
                fmt_f(p.x),
                fmt_f(p.y),
                fmt_f(state.v[i]),
                fmt_f(state.kappa[i])
            );
        }
    }
    out
}

/// Per-step mesh-quality history.
pub fn quality_csv(record: &RunRecord) -> String {
    let mut out = String::from("n,t,R1,R2,C0,C1,Q,model,picard_iters\n");
    for d in &record.diagnostics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            d.step,
            fmt_f(d.t),
            fmt_f(d.r1),
            fmt_f(d.r2),
            fmt_f(d.indicators.c0),
            fmt_f(d.indicators.c1),
            fmt_f(d.indicators.q),
            d.model.label(),
            d.picard_iters
        );
    }
    out
}

/// Per-step energy history. Steps without corrector numbers (the initial row)
/// report the defining values r = W + c, ratio 1, k_c 1.
pub fn energy_csv(record: &RunRecord, c: f64) -> String {
    let mut out = String::from("n,t,W,R,ratio,k_c\n");
    for d in &record.diagnostics {
        let (r, ratio, k_c) = match &d.ec {
            Some(ec) => (ec.r, ec.ratio, ec.k_c),
            None => (d.energy + c, 1.0, 1.0),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            d.step,
            fmt_f(d.t),
            fmt_f(d.energy),
            fmt_f(r),
            fmt_f(ratio),
            fmt_f(k_c)
        );
    }
    out
}

/// Refinement-study table.
pub fn convergence_csv(table: &ConvergenceTable) -> String {
    let mut out = String::from("level,M,h,dt,error,order\n");
    for row in &table.rows {
        let order = row.order.map(fmt_f).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.level,
            row.m,
            fmt_f(row.h),
            fmt_f(row.dt),
            fmt_f(row.error),
            order
        );
    }
    out
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn abort_report(record: &RunRecord) -> Option<String> {
    match record.abort_reason() {
        Some(reason) => {
            let last = record.diagnostics.last();
            Some(format!(
                "aborted: {reason}\nlast step: {}\nlast t: {}\nlast R1: {}\n",
                last.map_or(0, |d| d.step),
                last.map_or(0.0, |d| d.t),
                last.map_or(f64::NAN, |d| d.r1),
            ))
        }
        None => None,
    }
}

fn run_one_method(config: &RunConfig, method: Method, with_ec: bool) -> Result<RunRecord> {
    let initial = curve_catalog(config.require_curve()?, config.m)?;
    let mut sc = config.solver_config();
    match method {
        Method::Bdfk => {
            sc.redistribute = RedistributeMode::Off;
            evolve(&initial, &sc)
        }
        Method::Awar => {
            sc.redistribute = RedistributeMode::Awar;
            evolve(&initial, &sc)
        }
        Method::Abdfk => {
            let ec = if with_ec {
                Some(EnergyCorrectorState::init(&initial, config.c, config.r)?)
            } else {
                None
            };
            evolve_adaptive(&initial, &sc, &config.tangential_config(), ec)
        }
    }
}

fn write_run_outputs(
    dir: &Path,
    config: &RunConfig,
    record: &RunRecord,
    with_energy: bool,
) -> Result<()> {
    write_file(dir, "config.json", &serde_json::to_string_pretty(config)?)?;
    write_file(dir, "snapshots.csv", &snapshots_csv(record))?;
    write_file(dir, "quality.csv", &quality_csv(record))?;
    if with_energy {
        write_file(dir, "energy.csv", &energy_csv(record, config.c))?;
    }
    if let Some(report) = abort_report(record) {
        write_file(dir, "abort.txt", &report)?;
    }
    Ok(())
}

fn summary_line(label: &str, record: &RunRecord) -> String {
    let status = match record.abort_reason() {
        None => "completed".to_string(),
        Some(reason) => format!("aborted ({reason})"),
    };
    format!(
        "{label}: {status} at t = {:.6}, steps = {}, max R1 = {:.3}",
        record.final_time(),
        record.diagnostics.len().saturating_sub(1),
        record.max_r1()
    )
}

/// Executes the configured run. Returns the process exit code; all file output
/// lands in the configured output directory.
pub fn run(config: &RunConfig) -> Result<i32> {
    let dir = config.out_dir();
    match config.mode {
        Mode::Evolve => {
            let record = run_one_method(config, config.method, config.ec)?;
            let with_energy = config.ec && config.method == Method::Abdfk;
            write_run_outputs(&dir, config, &record, with_energy)?;
            println!("{}", summary_line("evolve", &record));
            Ok(if record.completed() { 0 } else { 1 })
        }
        Mode::Converge => {
            let method = match config.method {
                Method::Awar => StudyMethod::Awar,
                Method::Abdfk => StudyMethod::Abdfk,
                Method::Bdfk => {
                    return Err(Error::Usage(
                        "converge mode needs --method awar or abdfk".into(),
                    ))
                }
            };
            let opts = StudyOptions {
                t_final: config.t_final,
                tol: config.tol.min(1e-10),
                startup_substeps: config.startup_substeps || config.k >= 3,
            };
            let table = convergence_study(config.k, method, config.levels, &opts)?;
            write_file(dir.as_path(), "config.json", &serde_json::to_string_pretty(config)?)?;
            write_file(dir.as_path(), "convergence.csv", &convergence_csv(&table))?;
            for row in &table.rows {
                println!(
                    "level {}: M = {}, dt = {:.3e}, error = {:.6e}, order = {}",
                    row.level,
                    row.m,
                    row.dt,
                    row.error,
                    row.order.map_or("-".to_string(), |o| format!("{o:.3}")),
                );
            }
            match &table.aborted {
                Some(reason) => {
                    eprintln!("study aborted: {reason}");
                    Ok(1)
                }
                None => {
                    println!(
                        "asymptotic order: {:.3} (target {})",
                        table.asymptotic_order().unwrap_or(f64::NAN),
                        config.k
                    );
                    Ok(0)
                }
            }
        }
        Mode::Energy => {
            if config.method != Method::Abdfk {
                return Err(Error::Usage(
                    "energy mode runs the moving-mesh method; use --method abdfk".into(),
                ));
            }
            let record = run_one_method(config, Method::Abdfk, true)?;
            write_run_outputs(&dir, config, &record, true)?;
            println!("{}", summary_line("energy", &record));
            Ok(if record.completed() { 0 } else { 1 })
        }
        Mode::Quality => {
            config.require_curve()?;
            write_file(dir.as_path(), "config.json", &serde_json::to_string_pretty(config)?)?;
            let mut exit = 0;
            for (method, label) in [
                (Method::Bdfk, "bdfk"),
                (Method::Awar, "awar"),
                (Method::Abdfk, "abdfk"),
            ] {
                let record = run_one_method(config, method, false)?;
                write_file(
                    dir.as_path(),
                    &format!("quality_{label}.csv"),
                    &quality_csv(&record),
                )?;
                if let Some(report) = abort_report(&record) {
                    write_file(dir.as_path(), &format!("abort_{label}.txt"), &report)?;
                }
                println!("{}", summary_line(label, &record));
                // The plain method is allowed to degrade here; that contrast
                // is the point of quality mode.
                if !record.completed() && method != Method::Bdfk {
                    exit = 1;
                }
            }
            Ok(exit)
        }
    }
}

/// Full CLI entry: config resolution, --dump-config, dispatch, error mapping.
/// Returns the process exit code.
pub fn main_entry(args: &CliArgs) -> i32 {
    let config = match effective_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if args.dump_config {
        match serde_json::to_string_pretty(&config) {
            Ok(text) => {
                println!("{text}");
                return 0;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return 1;
            }
        }
    }
    match run(&config) {
        Ok(code) => code,
        Err(e) => {
            let usage = matches!(
                e,
                Error::Usage(_)
                    | Error::InvalidConfig(_)
                    | Error::UnknownPreset { .. }
                    | Error::UnsupportedOrder { .. }
                    | Error::GridTooSmall { .. }
            );
            eprintln!("error: {e}");
            if usage {
                2
            } else {
                1
            }
        }
    }
}
