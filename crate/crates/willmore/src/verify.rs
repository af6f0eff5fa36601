//! Verification harness: the closed-form shrinking/expanding circle solution,
//! error norms against it, mesh refinement schedules tied to the BDF order,
//! convergence-order estimation, and mesh-quality ratios.

use crate::adaptive::{evolve_adaptive, TangentialConfig};
use crate::bdfk::{evolve, RedistributeMode, RunOutcome, SolverConfig};
use crate::catalog::curve_catalog;
use crate::error::{Error, Result};
use crate::grid::{segment_lengths, GeometricState, NodalCurve, ScalarField};

/// Exact circle solution magnitudes at time t: radius R = (1+2t)^{1/4},
/// normal speed |V| = R^{-3}/2, curvature |kappa| = R^{-1}.
pub fn exact_circle(t: f64) -> (f64, f64, f64) {
    let r = (1.0 + 2.0 * t).powf(0.25);
    (r, 0.5 / (r * r * r), 1.0 / r)
}

/// Max-norm error of a circle-initialized state against the exact solution:
/// per node, radial deviation plus curvature and velocity magnitude
/// deviations, maximized over the curve.
pub fn solution_error(state: &GeometricState, t: f64) -> f64 {
    let (r, v, kappa) = exact_circle(t);
    let mut worst = 0.0f64;
    for i in 0..state.m() {
        let e = (state.curve.point(i).norm() - r).abs()
            + (state.kappa[i].abs() - kappa).abs()
            + (state.v[i].abs() - v).abs();
        worst = worst.max(e);
    }
    worst
}

/// Grid/step pair for a refinement level. Spatial and temporal factors are
/// tied so the temporal error dominates at the BDF order:
/// k=1: (h/2, dt/4); k=2: (h/2, dt/2); k=3: (h/2^1.5, dt/2); k=4: (h/4, dt/2).
/// The node count is forced even; returned h is the rounded 1/M.
pub fn refinement_schedule(k: usize, level: usize) -> Result<(f64, f64)> {
    let (h0, dt0) = match k {
        1 | 2 => (1.0 / 32.0, 0.02),
        3 | 4 => (1.0 / 32.0, 0.05),
        _ => return Err(Error::UnsupportedOrder { k }),
    };
    let (hf, dtf): (f64, f64) = match k {
        1 => (2.0, 4.0),
        2 => (2.0, 2.0),
        3 => (2.0_f64.powf(1.5), 2.0),
        _ => (4.0, 2.0),
    };
    let h_raw = h0 / hf.powi(level as i32);
    let m = schedule_nodes(h_raw);
    Ok((1.0 / m as f64, dt0 / dtf.powi(level as i32)))
}

/// Nearest even node count for a raw grid spacing.
pub fn schedule_nodes(h_raw: f64) -> usize {
    let half = (0.5 / h_raw).round() as usize;
    (2 * half).max(4)
}

/// Which pipeline a convergence study exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyMethod {
    /// BDFk with post-step adaptive redistribution.
    Awar,
    /// Moving-mesh BDFk with tangential velocity.
    Abdfk,
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub level: usize,
    pub m: usize,
    pub h: f64,
    pub dt: f64,
    pub error: f64,
    /// log(e_prev/e)/log(dt_prev/dt); None on the first level.
    pub order: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub k: usize,
    pub method: StudyMethod,
    pub rows: Vec<ConvergenceRow>,
    /// Failure description when a level aborted; the table holds the levels
    /// completed before it.
    pub aborted: Option<String>,
}

impl ConvergenceTable {
    /// Finest observed order (last row).
    pub fn asymptotic_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order)
    }
}

/// Study knobs: runs use a tight Picard tolerance so iteration error stays
/// below the discretization error being measured.
#[derive(Clone, Debug)]
pub struct StudyOptions {
    pub t_final: f64,
    pub tol: f64,
    pub startup_substeps: bool,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            t_final: 2.0,
            tol: 1e-10,
            startup_substeps: false,
        }
    }
}

fn study_config(k: usize, m: usize, dt: f64, opts: &StudyOptions) -> SolverConfig {
    let mut config = SolverConfig::new(k, m, dt, opts.t_final);
    config.tol = opts.tol;
    config.startup_substeps = opts.startup_substeps;
    config
}

/// Runs the circle problem over refinement levels and reports errors and
/// observed orders. A failed level stops the study with the partial table.
pub fn convergence_study(
    k: usize,
    method: StudyMethod,
    levels: usize,
    opts: &StudyOptions,
) -> Result<ConvergenceTable> {
    if levels < 2 {
        return Err(Error::Precondition(format!(
            "need at least 2 levels to observe an order, got {levels}"
        )));
    }
    let mut table = ConvergenceTable {
        k,
        method,
        rows: Vec::with_capacity(levels),
        aborted: None,
    };
    for level in 0..levels {
        let (h, dt) = refinement_schedule(k, level)?;
        let m = (1.0 / h).round() as usize;
        let initial = curve_catalog("circle", m)?;
        let config = study_config(k, m, dt, opts);
        let record = match method {
            StudyMethod::Awar => {
                let mut config = config;
                config.redistribute = RedistributeMode::Awar;
                evolve(&initial, &config)?
            }
            StudyMethod::Abdfk => {
                evolve_adaptive(&initial, &config, &TangentialConfig::default(), None)?
            }
        };
        match &record.outcome {
            RunOutcome::Completed => {}
            RunOutcome::Aborted { step, reason, .. } => {
                table.aborted = Some(format!("level {level} aborted at step {step}: {reason}"));
                break;
            }
        }
        let error = solution_error(&record.final_state, opts.t_final);
        let order = table.rows.last().map(|prev: &ConvergenceRow| {
            (prev.error / error).ln() / (prev.dt / dt).ln()
        });
        table.rows.push(ConvergenceRow {
            level,
            m,
            h,
            dt,
            error,
            order,
        });
    }
    Ok(table)
}

/// Mesh-quality ratios: R1 = max/min segment length, R2 = max/min weighted
/// segment mass with weights (m_j + m_{j+1})/2 * delta_s_j.
pub fn mesh_quality(curve: &NodalCurve, monitor: &ScalarField) -> Result<(f64, f64)> {
    let m = curve.m();
    if monitor.len() != m {
        return Err(Error::ShapeMismatch {
            left: monitor.len(),
            right: m,
        });
    }
    let seg = segment_lengths(curve)?;
    let mut min_ds = f64::MAX;
    let mut max_ds = f64::MIN;
    let mut min_w = f64::MAX;
    let mut max_w = f64::MIN;
    for j in 0..m {
        let ds = seg.delta_s[j];
        let w = 0.5 * (monitor[j] + monitor[(j + 1) % m]) * ds;
        min_ds = min_ds.min(ds);
        max_ds = max_ds.max(ds);
        min_w = min_w.min(w);
        max_w = max_w.max(w);
    }
    if !(min_w > 0.0) {
        return Err(Error::DegenerateGeometry {
            node: 0,
            quantity: "weighted segment mass",
            value: min_w,
            threshold: 0.0,
        });
    }
    Ok((max_ds / min_ds, max_w / min_w))
}
