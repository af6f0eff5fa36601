//! BDFk time stepping for the parametric Willmore flow system with Picard
//! linearization, plus the shared run loop used by every pipeline.
//!
//! Unknowns per node: position (x, y), normal velocity V, curvature kappa —
//! interleaved, giving a cyclic banded 4M x 4M system per Picard iteration.
//! Each iteration freezes the geometry coefficients (metric, tangent, normal)
//! at the previous iterate and solves four linear equations per node: the BDF
//! position update as a vector, split into its normal projection
//! (= V, the flow law) and its tangential projection (= 0, nodes carry no
//! tangential velocity); the velocity equation
//! V = delta2 kappa / g2 - delta kappa (delta X . delta2 X)/g4 + kappa^3/2;
//! and the curvature identity projected on the normal,
//! kappa = -(n . delta2 X)/g2.
//!
//! The projection loses nothing: the tangential part of the vector curvature
//! identity kappa n = -delta2 X/g2 + (tau . delta2 X)/g3 delta X cancels
//! identically for every polygon (tau is parallel to delta X by
//! construction), so that identity cannot pin where nodes sit along the
//! curve. Some gauge must, and the plain scheme's defining choice is zero
//! tangential motion; the price is the mesh clustering the redistribution
//! and moving-mesh variants exist to cure.

use crate::error::{Error, Result};
use crate::grid::{
    arc_derivative, diff_points, diff_scalar, discrete_curvature, willmore_energy, DiffKind,
    GeometricState, NodalCurve, ScalarField, Vec2, DEGENERACY_REL_TOL,
};
use crate::linsys::SparseSystem;
use crate::monitor::{
    compute_indicators, eval_monitor, evaluate_for_state, GeometricIndicators, MonitorEvaluation,
    MonitorModel, MonitorParams,
};
use crate::redistribute::{awar_step, resample_state, uniform_knots};
use crate::verify::mesh_quality;
use std::collections::VecDeque;

/// Backward differentiation formula of order k: coefficients alpha_0..alpha_k
/// for (1/dt) sum_p alpha_p X^{n+1-p}.
#[derive(Clone, Debug, PartialEq)]
pub struct BdfScheme {
    pub k: usize,
    pub alpha: Vec<f64>,
}

/// Exact BDF coefficients for k = 1..4.
pub fn bdf_coefficients(k: usize) -> Result<BdfScheme> {
    let alpha = match k {
        1 => vec![1.0, -1.0],
        2 => vec![1.5, -2.0, 0.5],
        3 => vec![11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0],
        4 => vec![25.0 / 12.0, -4.0, 3.0, -4.0 / 3.0, 0.25],
        _ => return Err(Error::UnsupportedOrder { k }),
    };
    Ok(BdfScheme { k, alpha })
}

/// Mesh maintenance applied after each accepted step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RedistributeMode {
    #[default]
    Off,
    Awar,
}

/// Solver settings shared by the plain and adaptive pipelines.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub k: usize,
    pub m: usize,
    pub dt: f64,
    pub t_final: f64,
    /// Picard stopping tolerance on max_i(|dX| + |dV| + |dkappa|).
    pub tol: f64,
    pub max_picard: usize,
    pub redistribute: RedistributeMode,
    /// With `redistribute = Awar`: redistribute only when Q exceeds this
    /// threshold (None = every step).
    pub awar_trigger_q: Option<f64>,
    pub monitor_params: MonitorParams,
    /// Fixed monitor model; None selects adaptively per step.
    pub fixed_monitor: Option<MonitorModel>,
    /// Adaptive pipeline only: evaluate the monitor once per step from the
    /// step-start state instead of re-evaluating it at every Picard iterate.
    pub freeze_monitor: bool,
    /// Integrate the first k-1 steps on a fine substep grid so startup error
    /// does not pollute high-order convergence.
    pub startup_substeps: bool,
    /// Record a snapshot every this many steps (0 = initial and final only).
    pub snapshot_every: usize,
}

impl SolverConfig {
    pub fn new(k: usize, m: usize, dt: f64, t_final: f64) -> Self {
        SolverConfig {
            k,
            m,
            dt,
            t_final,
            tol: 1e-8,
            max_picard: 100,
            redistribute: RedistributeMode::Off,
            awar_trigger_q: None,
            monitor_params: MonitorParams::default(),
            fixed_monitor: None,
            freeze_monitor: false,
            startup_substeps: false,
            snapshot_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.k) {
            return Err(Error::UnsupportedOrder { k: self.k });
        }
        if self.m < 4 {
            return Err(Error::GridTooSmall { m: self.m });
        }
        if !(self.dt > 0.0) || !(self.t_final > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "dt, T, tol must be positive (dt={}, T={}, tol={})",
                self.dt, self.t_final, self.tol
            )));
        }
        if self.max_picard == 0 {
            return Err(Error::InvalidConfig("max_picard must be >= 1".into()));
        }
        if let Some(q) = self.awar_trigger_q {
            if !(q >= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "awar trigger Q must be >= 1, got {q}"
                )));
            }
        }
        self.monitor_params.validate()
    }

    /// Number of time steps covering [0, T].
    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }
}

/// Ring buffer of the newest min(n+1, k) states, newest first.
#[derive(Clone, Debug)]
pub struct TimeHistory {
    capacity: usize,
    states: VecDeque<GeometricState>,
}

impl TimeHistory {
    pub fn new(k: usize) -> Self {
        TimeHistory {
            capacity: k,
            states: VecDeque::with_capacity(k + 1),
        }
    }

    pub fn push(&mut self, state: GeometricState) {
        self.states.push_front(state);
        self.states.truncate(self.capacity);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// X^{n-p}: p = 0 is the newest state.
    pub fn past(&self, p: usize) -> &GeometricState {
        &self.states[p]
    }

    pub fn latest(&self) -> &GeometricState {
        &self.states[0]
    }

    fn states_mut(&mut self) -> impl Iterator<Item = &mut GeometricState> {
        self.states.iter_mut()
    }
}

/// Frozen-iterate geometry shared by both Picard assemblies.
pub(crate) struct IterGeometry {
    pub dx: Vec<Vec2>,
    pub d2x: Vec<Vec2>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub tau: Vec<Vec2>,
    pub nrm: Vec<Vec2>,
    pub dkappa: Vec<f64>,
}

impl IterGeometry {
    pub fn new(state: &GeometricState) -> Result<Self> {
        let curve = &state.curve;
        let m = curve.m();
        let dx = diff_points(curve.points(), DiffKind::Centered);
        let d2x = diff_points(curve.points(), DiffKind::Second);
        let dkappa = diff_scalar(&state.kappa, DiffKind::Centered);
        let threshold = DEGENERACY_REL_TOL * curve.total_length();
        let mut g1 = Vec::with_capacity(m);
        let mut g2 = Vec::with_capacity(m);
        let mut tau = Vec::with_capacity(m);
        let mut nrm = Vec::with_capacity(m);
        for (i, d) in dx.iter().enumerate() {
            let len = d.norm();
            if len < threshold {
                return Err(Error::DegenerateGeometry {
                    node: i,
                    quantity: "parameter derivative",
                    value: len,
                    threshold,
                });
            }
            let t = *d * (1.0 / len);
            g1.push(len);
            g2.push(len * len);
            tau.push(t);
            nrm.push(t.rot90());
        }
        Ok(IterGeometry {
            dx,
            d2x,
            g1,
            g2,
            tau,
            nrm,
            dkappa: dkappa.values().to_vec(),
        })
    }
}

/// sum_{p=1..k} alpha_p X^{n+1-p} per node.
pub(crate) fn history_position_sum(history: &TimeHistory, scheme: &BdfScheme) -> Result<Vec<Vec2>> {
    if history.len() < scheme.k {
        return Err(Error::Precondition(format!(
            "history holds {} states, BDF{} needs {}",
            history.len(),
            scheme.k,
            scheme.k
        )));
    }
    let m = history.latest().m();
    let mut s = vec![Vec2::ZERO; m];
    for p in 1..=scheme.k {
        let state = history.past(p - 1);
        let a = scheme.alpha[p];
        for (si, pt) in s.iter_mut().zip(state.curve.points()) {
            *si += a * *pt;
        }
    }
    Ok(s)
}

/// Rebuilds a state from the stacked solution vector (x, y, V, kappa per node).
pub(crate) fn unpack_state(u: &[f64], m: usize) -> Result<GeometricState> {
    let mut points = Vec::with_capacity(m);
    let mut v = Vec::with_capacity(m);
    let mut kappa = Vec::with_capacity(m);
    for i in 0..m {
        points.push(Vec2::new(u[4 * i], u[4 * i + 1]));
        v.push(u[4 * i + 2]);
        kappa.push(u[4 * i + 3]);
    }
    GeometricState::new(
        NodalCurve::new(points)?,
        ScalarField::new(v)?,
        ScalarField::new(kappa)?,
    )
}

/// max_i(|X_a - X_b| + |V_a - V_b| + |kappa_a - kappa_b|).
pub(crate) fn iterate_diff(a: &GeometricState, b: &GeometricState) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.m() {
        let d = (a.curve.point(i) - b.curve.point(i)).norm()
            + (a.v[i] - b.v[i]).abs()
            + (a.kappa[i] - b.kappa[i]).abs();
        worst = worst.max(d);
    }
    worst
}

/// Pushes the linearized velocity equation
/// V - delta2 kappa / g2 + (delta kappa / g4)(delta X . delta2 X)
///   - (km^2/2) kappa = 0
/// into `row`, with delta kappa, delta X, and km frozen at the iterate.
/// Shared by the plain and adaptive assemblies (which place it differently).
pub(crate) fn push_velocity_row(
    sys: &mut SparseSystem,
    row: usize,
    m: usize,
    i: usize,
    geo: &IterGeometry,
    km: f64,
    h2: f64,
) {
    let col = |node: usize, var: usize| 4 * (node % m) + var;
    let ip = (i + 1) % m;
    let im = (i + m - 1) % m;
    let g2 = geo.g2[i];
    let g4 = g2 * g2;
    sys.push(row, col(i, 2), 1.0);
    let ck = -1.0 / (g2 * h2);
    sys.push(row, col(ip, 3), ck);
    sys.push(row, col(im, 3), ck);
    sys.push(row, col(i, 3), -2.0 * ck - 0.5 * km * km);
    let cp = geo.dkappa[i] / (g4 * h2);
    sys.push(row, col(ip, 0), cp * geo.dx[i].x);
    sys.push(row, col(im, 0), cp * geo.dx[i].x);
    sys.push(row, col(i, 0), -2.0 * cp * geo.dx[i].x);
    sys.push(row, col(ip, 1), cp * geo.dx[i].y);
    sys.push(row, col(im, 1), cp * geo.dx[i].y);
    sys.push(row, col(i, 1), -2.0 * cp * geo.dx[i].y);
}

/// Assembles the linearized plain system at the given iterate.
fn assemble_plain(
    iterate: &GeometricState,
    hist_sum: &[Vec2],
    alpha0: f64,
    dt: f64,
) -> Result<SparseSystem> {
    let m = iterate.m();
    let h = iterate.curve.h();
    let h2 = h * h;
    let geo = IterGeometry::new(iterate)?;
    let a0_dt = alpha0 / dt;
    let mut sys = SparseSystem::with_capacity(4 * m, 26 * m);
    let col = |node: usize, var: usize| 4 * (node % m) + var;
    for i in 0..m {
        let ip = (i + 1) % m;
        let im = (i + m - 1) % m;
        let g2 = geo.g2[i];
        let n = geo.nrm[i];
        let tau = geo.tau[i];
        let km = iterate.kappa[i];

        // Row A: (alpha0/dt) n . X - V = -(1/dt) n . sum_hist.
        let ra = 4 * i;
        sys.push(ra, col(i, 0), a0_dt * n.x);
        sys.push(ra, col(i, 1), a0_dt * n.y);
        sys.push(ra, col(i, 2), -1.0);
        sys.set_rhs(ra, -(n.dot(hist_sum[i])) / dt);

        // Row B: V - delta2 kappa / g2
        //          + (delta kappa / g4)(delta X . delta2 X) - (km^2/2) kappa = 0.
        push_velocity_row(&mut sys, 4 * i + 1, m, i, &geo, km, h2);

        // Row C: kappa + (n . delta2 X)/g2 = 0, the curvature identity
        // projected on the normal. Its tangential part holds identically
        // for any polygon and is dropped; row D supplies the missing
        // tangential condition instead.
        let rc = 4 * i + 2;
        sys.push(rc, col(i, 3), 1.0);
        for (comp, nc) in [(0usize, n.x), (1usize, n.y)] {
            let w = nc / (g2 * h2);
            sys.push(rc, col(ip, comp), w);
            sys.push(rc, col(im, comp), w);
            sys.push(rc, col(i, comp), -2.0 * w);
        }

        // Row D: (alpha0/dt) tau . X = -(1/dt) tau . sum_hist, the
        // tangential projection of the BDF position update with zero
        // tangential velocity. Nodes move only along the normal.
        let rd = 4 * i + 3;
        sys.push(rd, col(i, 0), a0_dt * tau.x);
        sys.push(rd, col(i, 1), a0_dt * tau.y);
        sys.set_rhs(rd, -(tau.dot(hist_sum[i])) / dt);
    }
    Ok(sys)
}

pub(crate) fn picard_iterate<F>(
    history: &TimeHistory,
    scheme: &BdfScheme,
    tol: f64,
    max_picard: usize,
    mut assemble: F,
) -> Result<(GeometricState, usize)>
where
    F: FnMut(&GeometricState) -> Result<SparseSystem>,
{
    if history.len() < scheme.k {
        return Err(Error::Precondition(format!(
            "history holds {} states, BDF{} needs {}",
            history.len(),
            scheme.k,
            scheme.k
        )));
    }
    let m = history.latest().m();
    let mut iterate = history.latest().clone();
    let mut last_update = f64::INFINITY;
    for iter in 1..=max_picard {
        let sys = assemble(&iterate)?;
        let u = sys.solve()?;
        let next = unpack_state(&u, m)?;
        last_update = iterate_diff(&next, &iterate);
        iterate = next;
        if last_update < tol {
            return Ok((iterate, iter));
        }
    }
    Err(Error::PicardDiverged {
        max_iters: max_picard,
        last_update,
        tol,
    })
}

/// One implicit BDFk step of the plain scheme, solved by Picard iteration to
/// `config.tol`.
pub fn picard_time_step(
    history: &TimeHistory,
    scheme: &BdfScheme,
    config: &SolverConfig,
) -> Result<(GeometricState, usize)> {
    picard_time_step_dt(history, scheme, config.tol, config.max_picard, config.dt)
}

pub(crate) fn picard_time_step_dt(
    history: &TimeHistory,
    scheme: &BdfScheme,
    tol: f64,
    max_picard: usize,
    dt: f64,
) -> Result<(GeometricState, usize)> {
    let hist_sum = history_position_sum(history, scheme)?;
    let alpha0 = scheme.alpha[0];
    picard_iterate(history, scheme, tol, max_picard, |iterate| {
        assemble_plain(iterate, &hist_sum, alpha0, dt)
    })
}

/// Per-step corrector numbers (adaptive pipeline with the energy corrector).
#[derive(Clone, Copy, Debug)]
pub struct EcDiagnostics {
    /// Auxiliary energy after the update.
    pub r: f64,
    /// Shifted Willmore energy of the provisional state (the denominator in
    /// the auxiliary update).
    pub w_c: f64,
    /// Energy matching ratio r / w_c.
    pub ratio: f64,
    /// Scaling factor applied to the state.
    pub k_c: f64,
    /// Dissipation rate measured on the previous curve.
    pub dissipation: f64,
}

/// One accepted step as reported by an engine.
pub(crate) struct AcceptedStep {
    pub state: GeometricState,
    pub ec: Option<EcDiagnostics>,
    /// Monitor model behind this step's mesh handling, when one was used.
    pub model: Option<MonitorModel>,
}

/// Strategy object: how to compute a step and what to do right after it.
pub(crate) trait Engine {
    fn compute_step(
        &mut self,
        history: &TimeHistory,
        scheme: &BdfScheme,
        dt: f64,
    ) -> Result<(GeometricState, usize)>;

    /// Post-accept processing (redistribution, energy correction). May
    /// resample `history` and `extra` states onto a new parametrization.
    fn post_accept(
        &mut self,
        state: GeometricState,
        prev_curve: &NodalCurve,
        history: &mut TimeHistory,
        extra: &mut [GeometricState],
        dt: f64,
    ) -> Result<AcceptedStep>;

    /// Current monitor parameters for quality logging.
    fn monitor_params(&self) -> &MonitorParams;
}

/// Per-step diagnostics recorded by every run.
#[derive(Clone, Debug)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    /// Discrete Willmore energy of the accepted state.
    pub energy: f64,
    pub r1: f64,
    pub r2: f64,
    pub indicators: GeometricIndicators,
    /// Model used for the R2 measurement (the step's own monitor for adaptive
    /// pipelines, the auto-selected one otherwise).
    pub model: MonitorModel,
    pub picard_iters: usize,
    pub ec: Option<EcDiagnostics>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunOutcome {
    Completed,
    Aborted { step: usize, t: f64, reason: String },
}

/// Everything a run produces: snapshots, per-step diagnostics, final state.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub snapshots: Vec<(f64, GeometricState)>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub final_state: GeometricState,
    pub outcome: RunOutcome,
    pub dt: f64,
    pub steps_planned: usize,
}

impl RunRecord {
    pub fn completed(&self) -> bool {
        self.outcome == RunOutcome::Completed
    }

    pub fn abort_reason(&self) -> Option<&str> {
        match &self.outcome {
            RunOutcome::Completed => None,
            RunOutcome::Aborted { reason, .. } => Some(reason),
        }
    }

    pub fn final_time(&self) -> f64 {
        self.diagnostics.last().map_or(0.0, |d| d.t)
    }

    pub fn max_r1(&self) -> f64 {
        self.diagnostics.iter().fold(0.0, |a, d| a.max(d.r1))
    }
}

fn quality_diagnostics(
    state: &GeometricState,
    step: usize,
    t: f64,
    picard_iters: usize,
    model: Option<MonitorModel>,
    params: &MonitorParams,
    ec: Option<EcDiagnostics>,
) -> Result<StepDiagnostics> {
    let eval = match model {
        Some(mdl) => {
            let indicators = compute_indicators(&state.curve, &state.kappa)?;
            let kappa_s = arc_derivative(&state.kappa, &state.curve)?;
            let values = eval_monitor(mdl, params, &state.kappa, &kappa_s)?;
            MonitorEvaluation {
                indicators,
                model: mdl,
                params: *params,
                values,
            }
        }
        None => evaluate_for_state(&state.curve, &state.kappa, params, None)?,
    };
    let (r1, r2) = mesh_quality(&state.curve, &eval.values)?;
    Ok(StepDiagnostics {
        step,
        t,
        energy: willmore_energy(&state.curve, &state.kappa)?,
        r1,
        r2,
        indicators: eval.indicators,
        model: eval.model,
        picard_iters,
        ec,
    })
}

/// Substeps per macro step during startup. The order ramp opens with a BDF1
/// substep of local error ~ dt_sub^2; keeping that at the scheme's global
/// error scale dt^k needs dt_sub <= dt^{k/2}, i.e. at least dt^{1 - k/2}
/// substeps. Rounded up to a power of two, floored at 2^k.
fn startup_substep_count(k: usize, dt: f64) -> usize {
    let floor = 1usize << k;
    let needed = dt.powf(1.0 - k as f64 / 2.0);
    let mut sub = floor;
    while (sub as f64) < needed && sub < (1 << 20) {
        sub *= 2;
    }
    sub
}

/// Shared time loop: startup (plain or substepped), stepping through the
/// engine, post-step hooks, and per-step diagnostics. Mid-run numerical
/// failures end the run with `RunOutcome::Aborted` and a partial record.
pub(crate) fn run_loop(
    initial: &GeometricState,
    config: &SolverConfig,
    engine: &mut dyn Engine,
) -> Result<RunRecord> {
    config.validate()?;
    if initial.m() != config.m {
        return Err(Error::ShapeMismatch {
            left: initial.m(),
            right: config.m,
        });
    }
    let steps = config.steps();
    let k = config.k;
    let dt = config.dt;
    let mut history = TimeHistory::new(k);
    history.push(initial.clone());
    let mut record = RunRecord {
        snapshots: vec![(0.0, initial.clone())],
        diagnostics: Vec::with_capacity(steps + 1),
        final_state: initial.clone(),
        outcome: RunOutcome::Completed,
        dt,
        steps_planned: steps,
    };
    match quality_diagnostics(initial, 0, 0.0, 0, None, engine.monitor_params(), None) {
        Ok(d) => record.diagnostics.push(d),
        Err(e) => return Err(e),
    }

    let abort = |record: &mut RunRecord, step: usize, e: Error| {
        record.outcome = RunOutcome::Aborted {
            step,
            t: step as f64 * dt,
            reason: e.to_string(),
        };
    };

    let mut start_step = 0usize;
    if config.startup_substeps && k > 1 {
        // Integrate the first k-1 macro steps on a fine substep grid,
        // collecting macro-spaced states for the BDF history. Redistribution
        // inside the engine also remaps the collected states.
        let sub = startup_substep_count(k, dt);
        let dt_sub = dt / sub as f64;
        let startup_macros = (k - 1).min(steps);
        let mut fine = TimeHistory::new(k);
        fine.push(initial.clone());
        let mut macro_states: Vec<GeometricState> = vec![initial.clone()];
        'startup: for mac in 0..startup_macros {
            let mut iters_macro = 0usize;
            let mut last_model = None;
            let mut last_ec = None;
            for s in 0..sub {
                let global = mac * sub + s;
                let scheme = bdf_coefficients((global + 1).min(k))?;
                let stepped = engine.compute_step(&fine, &scheme, dt_sub);
                let (state, iters) = match stepped {
                    Ok(v) => v,
                    Err(e) => {
                        abort(&mut record, mac + 1, e);
                        break 'startup;
                    }
                };
                iters_macro += iters;
                let prev_curve = fine.latest().curve.clone();
                let accepted = match engine.post_accept(
                    state,
                    &prev_curve,
                    &mut fine,
                    &mut macro_states,
                    dt_sub,
                ) {
                    Ok(v) => v,
                    Err(e) => {
                        abort(&mut record, mac + 1, e);
                        break 'startup;
                    }
                };
                last_model = accepted.model;
                last_ec = accepted.ec;
                fine.push(accepted.state);
            }
            let macro_state = fine.latest().clone();
            macro_states.push(macro_state.clone());
            let t = (mac + 1) as f64 * dt;
            match quality_diagnostics(
                &macro_state,
                mac + 1,
                t,
                iters_macro,
                last_model,
                engine.monitor_params(),
                last_ec,
            ) {
                Ok(d) => record.diagnostics.push(d),
                Err(e) => {
                    abort(&mut record, mac + 1, e);
                    break 'startup;
                }
            }
            if config.snapshot_every > 0 && (mac + 1) % config.snapshot_every == 0 {
                record.snapshots.push((t, macro_state));
            }
        }
        if record.outcome == RunOutcome::Completed {
            history = TimeHistory::new(k);
            for st in &macro_states {
                history.push(st.clone());
            }
            start_step = startup_macros;
        }
    }

    if record.outcome == RunOutcome::Completed {
        for n in start_step..steps {
            let scheme = bdf_coefficients((n + 1).min(k))?;
            let (state, iters) = match engine.compute_step(&history, &scheme, dt) {
                Ok(v) => v,
                Err(e) => {
                    abort(&mut record, n + 1, e);
                    break;
                }
            };
            let prev_curve = history.latest().curve.clone();
            let accepted =
                match engine.post_accept(state, &prev_curve, &mut history, &mut [], dt) {
                    Ok(v) => v,
                    Err(e) => {
                        abort(&mut record, n + 1, e);
                        break;
                    }
                };
            history.push(accepted.state.clone());
            let t = (n + 1) as f64 * dt;
            match quality_diagnostics(
                &accepted.state,
                n + 1,
                t,
                iters,
                accepted.model,
                engine.monitor_params(),
                accepted.ec,
            ) {
                Ok(d) => record.diagnostics.push(d),
                Err(e) => {
                    abort(&mut record, n + 1, e);
                    break;
                }
            }
            if config.snapshot_every > 0 && (n + 1) % config.snapshot_every == 0 {
                record.snapshots.push((t, accepted.state));
            }
        }
    }

    record.final_state = history.latest().clone();
    let final_t = record.final_time();
    if record
        .snapshots
        .last()
        .map_or(true, |(t, _)| (*t - final_t).abs() > 0.5 * dt)
    {
        record.snapshots.push((final_t, record.final_state.clone()));
    }
    Ok(record)
}

/// Plain BDFk engine: Picard step, no mesh maintenance.
pub(crate) struct PlainEngine {
    pub tol: f64,
    pub max_picard: usize,
    pub params: MonitorParams,
}

impl Engine for PlainEngine {
    fn compute_step(
        &mut self,
        history: &TimeHistory,
        scheme: &BdfScheme,
        dt: f64,
    ) -> Result<(GeometricState, usize)> {
        picard_time_step_dt(history, scheme, self.tol, self.max_picard, dt)
    }

    fn post_accept(
        &mut self,
        state: GeometricState,
        _prev_curve: &NodalCurve,
        _history: &mut TimeHistory,
        _extra: &mut [GeometricState],
        _dt: f64,
    ) -> Result<AcceptedStep> {
        Ok(AcceptedStep {
            state,
            ec: None,
            model: None,
        })
    }

    fn monitor_params(&self) -> &MonitorParams {
        &self.params
    }
}

/// BDFk + A-WAR engine: plain Picard step, then adaptive redistribution with
/// history resampling. Amplified monitor parameters stay sticky.
pub(crate) struct AwarEngine {
    pub tol: f64,
    pub max_picard: usize,
    pub params: MonitorParams,
    pub trigger_q: Option<f64>,
}

impl Engine for AwarEngine {
    fn compute_step(
        &mut self,
        history: &TimeHistory,
        scheme: &BdfScheme,
        dt: f64,
    ) -> Result<(GeometricState, usize)> {
        picard_time_step_dt(history, scheme, self.tol, self.max_picard, dt)
    }

    fn post_accept(
        &mut self,
        state: GeometricState,
        _prev_curve: &NodalCurve,
        history: &mut TimeHistory,
        extra: &mut [GeometricState],
        _dt: f64,
    ) -> Result<AcceptedStep> {
        if let Some(q_min) = self.trigger_q {
            let ind = compute_indicators(&state.curve, &state.kappa)?;
            if ind.q <= q_min {
                return Ok(AcceptedStep {
                    state,
                    ec: None,
                    model: None,
                });
            }
        }
        let step = awar_step(&state.curve, &state.kappa, &self.params)?;
        self.params = step.params;
        let knots = uniform_knots(state.m());
        for st in history.states_mut() {
            *st = resample_state(st, &knots, &step.rho_new)?;
        }
        for st in extra.iter_mut() {
            *st = resample_state(st, &knots, &step.rho_new)?;
        }
        // Curvature is reinitialized from the redistributed polygon; the
        // velocity is transported by the same linear map as the history.
        // Recomputing V from positions would push node roundoff through a
        // fourth difference (~M^4 amplification), burying the smooth solved
        // field in noise on fine grids.
        let transported = resample_state(&state, &knots, &step.rho_new)?;
        let kappa = discrete_curvature(&step.curve)?;
        let state = GeometricState::new(step.curve, transported.v, kappa)?;
        Ok(AcceptedStep {
            state,
            ec: None,
            model: Some(step.model),
        })
    }

    fn monitor_params(&self) -> &MonitorParams {
        &self.params
    }
}

/// Runs the plain BDFk pipeline (optionally with the A-WAR hook) from the
/// initial state to T.
pub fn evolve(initial: &GeometricState, config: &SolverConfig) -> Result<RunRecord> {
    match config.redistribute {
        RedistributeMode::Off => {
            let mut engine = PlainEngine {
                tol: config.tol,
                max_picard: config.max_picard,
                params: config.monitor_params,
            };
            run_loop(initial, config, &mut engine)
        }
        RedistributeMode::Awar => {
            let mut engine = AwarEngine {
                tol: config.tol,
                max_picard: config.max_picard,
                params: config.monitor_params,
                trigger_q: config.awar_trigger_q,
            };
            run_loop(initial, config, &mut engine)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::curve_catalog;

    #[test]
    fn coefficients_match_tables() {
        assert_eq!(bdf_coefficients(1).unwrap().alpha, vec![1.0, -1.0]);
        assert_eq!(bdf_coefficients(2).unwrap().alpha, vec![1.5, -2.0, 0.5]);
        let b3 = bdf_coefficients(3).unwrap().alpha;
        assert!((b3[0] - 11.0 / 6.0).abs() < 1e-15);
        assert!((b3[3] + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            bdf_coefficients(4).unwrap().alpha,
            vec![25.0 / 12.0, -4.0, 3.0, -4.0 / 3.0, 0.25]
        );
        assert!(matches!(
            bdf_coefficients(5),
            Err(Error::UnsupportedOrder { k: 5 })
        ));
    }

    #[test]
    fn coefficient_identities() {
        for k in 1..=4 {
            let scheme = bdf_coefficients(k).unwrap();
            let sum: f64 = scheme.alpha.iter().sum();
            let weighted: f64 = scheme
                .alpha
                .iter()
                .enumerate()
                .map(|(p, a)| p as f64 * a)
                .sum();
            assert!(sum.abs() < 1e-14, "BDF{k}: sum {sum}");
            assert!((weighted + 1.0).abs() < 1e-14, "BDF{k}: weighted {weighted}");
        }
    }

    #[test]
    fn history_ring_buffer_semantics() {
        let s = curve_catalog("circle", 8).unwrap();
        let mut h = TimeHistory::new(2);
        h.push(s.clone());
        assert_eq!(h.len(), 1);
        h.push(s.clone());
        h.push(s.clone());
        assert_eq!(h.len(), 2, "capacity caps the buffer");
    }

    #[test]
    fn one_step_tracks_exact_radius() {
        let initial = curve_catalog("circle", 100).unwrap();
        let config = SolverConfig::new(1, 100, 1e-3, 1e-3);
        let mut history = TimeHistory::new(1);
        history.push(initial);
        let scheme = bdf_coefficients(1).unwrap();
        let (state, iters) = picard_time_step(&history, &scheme, &config).unwrap();
        assert!(iters <= 10, "took {iters} Picard iterations");
        let r = (1.0 + 2.0 * 1e-3_f64).powf(0.25);
        for i in 0..100 {
            let dev = (state.curve.point(i).norm() - r).abs();
            assert!(dev <= 1e-3, "node {i} radius off by {dev}");
        }
    }

    #[test]
    fn infinite_tolerance_returns_after_one_iteration() {
        let initial = curve_catalog("circle", 64).unwrap();
        let mut config = SolverConfig::new(1, 64, 1e-3, 1e-3);
        config.tol = f64::INFINITY;
        let mut history = TimeHistory::new(1);
        history.push(initial);
        let scheme = bdf_coefficients(1).unwrap();
        let (_, iters) = picard_time_step(&history, &scheme, &config).unwrap();
        assert_eq!(iters, 1);
    }

    #[test]
    fn exit_state_satisfies_stopping_criterion() {
        let initial = curve_catalog("circle", 64).unwrap();
        let config = SolverConfig::new(2, 64, 1e-3, 1.0);
        let mut history = TimeHistory::new(2);
        history.push(initial.clone());
        history.push(initial);
        let scheme = bdf_coefficients(2).unwrap();
        let (state, _) = picard_time_step(&history, &scheme, &config).unwrap();
        // Re-assemble at the exit state and apply one more iteration: the
        // update must stay below tol.
        let hist_sum = history_position_sum(&history, &scheme).unwrap();
        let sys = assemble_plain(&state, &hist_sum, scheme.alpha[0], config.dt).unwrap();
        let next = unpack_state(&sys.solve().unwrap(), 64).unwrap();
        assert!(iterate_diff(&next, &state) < config.tol);
    }

    #[test]
    fn stiff_flower_start_converges_under_picard() {
        // The flower preset's initial Willmore velocity is violent (the
        // implicit step displaces nodes by dozens of chord lengths), which
        // makes the first step a stress test for the linearization: partial
        // freezes of the curvature identity orbit here without converging.
        let initial = curve_catalog("flower32", 100).unwrap();
        let config = SolverConfig::new(1, 100, 0.01, 0.01);
        let mut history = TimeHistory::new(1);
        history.push(initial);
        let scheme = bdf_coefficients(1).unwrap();
        let (state, iters) = picard_time_step(&history, &scheme, &config).unwrap();
        assert!(iters <= 60, "stiff start took {iters} Picard iterations");
        for i in 0..100 {
            assert!(state.curve.point(i).is_finite());
        }
    }

    #[test]
    fn short_history_is_rejected() {
        let initial = curve_catalog("circle", 16).unwrap();
        let config = SolverConfig::new(2, 16, 1e-3, 1.0);
        let mut history = TimeHistory::new(2);
        history.push(initial);
        let scheme = bdf_coefficients(2).unwrap();
        assert!(picard_time_step(&history, &scheme, &config).is_err());
    }
}
