//! Moving-mesh solver: the flow's normal velocity is coupled with a
//! monitor-driven tangential velocity, so nodes migrate toward regions where
//! the monitor is large while the curve evolves. No post-step resampling is
//! needed; the mesh adapts through the dynamics themselves.
//!
//! Per node the tangential speed is
//!   T = [P m / (J (m g1)^2) delta2 X] . tau + P (delta m) g1 / (J (m g1)^2),
//! with g1 = |delta X|, monitor m, relaxation constant J, and positive weight
//! P. The Picard linearization freezes every geometric coefficient at the
//! previous iterate except delta2 X, V, and kappa.

use crate::bdfk::{
    history_position_sum, picard_iterate, push_velocity_row, run_loop, AcceptedStep, BdfScheme,
    EcDiagnostics, Engine, IterGeometry, RunRecord, SolverConfig, TimeHistory,
};
use crate::energy::{ec_step_detailed, EnergyCorrectorState};
use crate::error::{Error, Result};
use crate::grid::{
    arc_derivative, diff_scalar, DiffKind, GeometricState, NodalCurve, ScalarField, Vec2,
};
use crate::linsys::SparseSystem;
use crate::monitor::{evaluate_for_state, MonitorModel, MonitorParams};

/// Per-node positive weight in the tangential velocity.
#[derive(Clone, Debug, PartialEq)]
pub enum SmoothingWeight {
    Constant(f64),
    Field(ScalarField),
}

impl SmoothingWeight {
    fn at(&self, i: usize) -> f64 {
        match self {
            SmoothingWeight::Constant(p) => *p,
            SmoothingWeight::Field(f) => f[i],
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            SmoothingWeight::Constant(_) => None,
            SmoothingWeight::Field(f) => Some(f.len()),
        }
    }
}

/// Tangential-velocity parameters: weight P and relaxation constant J.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentialConfig {
    pub p: SmoothingWeight,
    pub j: f64,
}

impl Default for TangentialConfig {
    fn default() -> Self {
        TangentialConfig {
            p: SmoothingWeight::Constant(1.0),
            j: 0.5,
        }
    }
}

impl TangentialConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = match &self.p {
            SmoothingWeight::Constant(p) => *p > 0.0 && p.is_finite(),
            SmoothingWeight::Field(f) => f.iter().all(|&p| p > 0.0),
        };
        if !positive {
            return Err(Error::InvalidConfig(
                "tangential weight P must be positive everywhere".into(),
            ));
        }
        if !(self.j > 0.0) || !self.j.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "relaxation constant J must be positive, got {}",
                self.j
            )));
        }
        Ok(())
    }

    fn check_len(&self, m: usize) -> Result<()> {
        if let Some(len) = self.p.len() {
            if len != m {
                return Err(Error::ShapeMismatch { left: len, right: m });
            }
        }
        Ok(())
    }
}

/// Per-node factors of the tangential velocity: T_i = c1_i (delta2 X . tau)_i
/// + c2_i with c1 = P/(J m g1^2) and c2 = P (delta m) g1/(J (m g1)^2).
fn tangential_factors(
    g1: &[f64],
    monitor: &ScalarField,
    tc: &TangentialConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = g1.len();
    if monitor.len() != m {
        return Err(Error::ShapeMismatch {
            left: monitor.len(),
            right: m,
        });
    }
    tc.check_len(m)?;
    for (i, &mf) in monitor.iter().enumerate() {
        if !(mf > 0.0) {
            return Err(Error::DegenerateGeometry {
                node: i,
                quantity: "monitor value",
                value: mf,
                threshold: 0.0,
            });
        }
    }
    let dmf = diff_scalar(monitor, DiffKind::Centered);
    let mut c1 = Vec::with_capacity(m);
    let mut c2 = Vec::with_capacity(m);
    for i in 0..m {
        let denom = tc.j * (monitor[i] * g1[i]).powi(2);
        c1.push(tc.p.at(i) * monitor[i] / denom);
        c2.push(tc.p.at(i) * dmf[i] * g1[i] / denom);
    }
    Ok((c1, c2))
}

/// Tangential speed at every node for a given monitor field.
pub fn tangential_velocity(
    curve: &NodalCurve,
    monitor: &ScalarField,
    tc: &TangentialConfig,
) -> Result<ScalarField> {
    let state = GeometricState::new(
        curve.clone(),
        ScalarField::constant(0.0, curve.m())?,
        ScalarField::constant(0.0, curve.m())?,
    )?;
    let geo = IterGeometry::new(&state)?;
    let (c1, c2) = tangential_factors(&geo.g1, monitor, tc)?;
    let values = (0..curve.m())
        .map(|i| c1[i] * geo.d2x[i].dot(geo.tau[i]) + c2[i])
        .collect();
    ScalarField::new(values)
}

/// Assembles the linearized moving-mesh system at the given iterate.
fn assemble_adaptive(
    iterate: &GeometricState,
    hist_sum: &[Vec2],
    alpha0: f64,
    dt: f64,
    tc: &TangentialConfig,
    monitor: &ScalarField,
) -> Result<SparseSystem> {
    let m = iterate.m();
    let h = iterate.curve.h();
    let h2 = h * h;
    let geo = IterGeometry::new(iterate)?;
    let (c1, c2) = tangential_factors(&geo.g1, monitor, tc)?;
    let a0_dt = alpha0 / dt;
    let mut sys = SparseSystem::with_capacity(4 * m, 34 * m);
    let col = |node: usize, var: usize| 4 * (node % m) + var;
    for i in 0..m {
        let ip = (i + 1) % m;
        let im = (i + m - 1) % m;
        let g2 = geo.g2[i];
        let n = geo.nrm[i];
        let tau = geo.tau[i];
        let km = iterate.kappa[i];

        // Position rows (x and y): (alpha0/dt) X - c1 (tau . delta2 X) tau
        //   - V n = -(1/dt) sum_hist + c2 tau.
        for (comp, tc_c, nc) in [(0usize, tau.x, n.x), (1usize, tau.y, n.y)] {
            let row = 4 * i + comp;
            sys.push(row, col(i, comp), a0_dt);
            for (d, td) in [(0usize, tau.x), (1usize, tau.y)] {
                let w = c1[i] * tc_c * td / h2;
                sys.push(row, col(ip, d), -w);
                sys.push(row, col(im, d), -w);
                sys.push(row, col(i, d), 2.0 * w);
            }
            sys.push(row, col(i, 2), -nc);
            let rhs = -(if comp == 0 {
                hist_sum[i].x
            } else {
                hist_sum[i].y
            }) / dt
                + c2[i] * tc_c;
            sys.set_rhs(row, rhs);
        }

        // Velocity row, same linearization as the plain scheme.
        push_velocity_row(&mut sys, 4 * i + 2, m, i, &geo, km, h2);

        // Curvature row: kappa + (delta2 X . n) / g2 = 0.
        let rk = 4 * i + 3;
        sys.push(rk, col(i, 3), 1.0);
        for (d, nd) in [(0usize, n.x), (1usize, n.y)] {
            let w = nd / (g2 * h2);
            sys.push(rk, col(ip, d), w);
            sys.push(rk, col(im, d), w);
            sys.push(rk, col(i, d), -2.0 * w);
        }
    }
    Ok(sys)
}

fn iterate_monitor(
    iterate: &GeometricState,
    model: MonitorModel,
    params: &MonitorParams,
) -> Result<ScalarField> {
    let kappa_s = arc_derivative(&iterate.kappa, &iterate.curve)?;
    crate::monitor::eval_monitor(model, params, &iterate.kappa, &kappa_s)
}

pub(crate) fn adaptive_picard_step_inner(
    history: &TimeHistory,
    scheme: &BdfScheme,
    tol: f64,
    max_picard: usize,
    dt: f64,
    tc: &TangentialConfig,
    model: MonitorModel,
    params: &MonitorParams,
    frozen: Option<&ScalarField>,
) -> Result<(GeometricState, usize)> {
    let hist_sum = history_position_sum(history, scheme)?;
    let alpha0 = scheme.alpha[0];
    picard_iterate(history, scheme, tol, max_picard, |iterate| {
        let owned;
        let monitor = match frozen {
            Some(f) => f,
            None => {
                owned = iterate_monitor(iterate, model, params)?;
                &owned
            }
        };
        assemble_adaptive(iterate, &hist_sum, alpha0, dt, tc, monitor)
    })
}

/// One implicit moving-mesh BDFk step. The monitor model is resolved from the
/// newest history state (or taken from `config.fixed_monitor`), then the
/// monitor values are re-evaluated at every Picard iterate unless
/// `config.freeze_monitor` keeps the step-start values.
pub fn adaptive_picard_step(
    history: &TimeHistory,
    scheme: &BdfScheme,
    config: &SolverConfig,
    tc: &TangentialConfig,
) -> Result<(GeometricState, usize)> {
    let latest = history.latest();
    let eval = evaluate_for_state(
        &latest.curve,
        &latest.kappa,
        &config.monitor_params,
        config.fixed_monitor,
    )?;
    let frozen = if config.freeze_monitor {
        Some(eval.values)
    } else {
        None
    };
    adaptive_picard_step_inner(
        history,
        scheme,
        config.tol,
        config.max_picard,
        config.dt,
        tc,
        eval.model,
        &eval.params,
        frozen.as_ref(),
    )
}

/// Moving-mesh engine with optional energy correction. Monitor model and
/// amplified parameters are refreshed from the step-start state each step;
/// amplification is sticky across the run.
pub(crate) struct AdaptiveEngine {
    pub tol: f64,
    pub max_picard: usize,
    pub params: MonitorParams,
    pub fixed: Option<MonitorModel>,
    pub tc: TangentialConfig,
    pub freeze_monitor: bool,
    pub ec: Option<EnergyCorrectorState>,
    last_model: Option<MonitorModel>,
}

impl AdaptiveEngine {
    pub fn new(
        config: &SolverConfig,
        tc: TangentialConfig,
        ec: Option<EnergyCorrectorState>,
    ) -> Self {
        AdaptiveEngine {
            tol: config.tol,
            max_picard: config.max_picard,
            params: config.monitor_params,
            fixed: config.fixed_monitor,
            tc,
            freeze_monitor: config.freeze_monitor,
            ec,
            last_model: None,
        }
    }
}

impl Engine for AdaptiveEngine {
    fn compute_step(
        &mut self,
        history: &TimeHistory,
        scheme: &BdfScheme,
        dt: f64,
    ) -> Result<(GeometricState, usize)> {
        let latest = history.latest();
        let eval = evaluate_for_state(&latest.curve, &latest.kappa, &self.params, self.fixed)?;
        self.params = eval.params;
        self.last_model = Some(eval.model);
        let frozen = if self.freeze_monitor {
            Some(eval.values)
        } else {
            None
        };
        adaptive_picard_step_inner(
            history,
            scheme,
            self.tol,
            self.max_picard,
            dt,
            &self.tc,
            eval.model,
            &self.params,
            frozen.as_ref(),
        )
    }

    fn post_accept(
        &mut self,
        state: GeometricState,
        prev_curve: &NodalCurve,
        _history: &mut TimeHistory,
        _extra: &mut [GeometricState],
        dt: f64,
    ) -> Result<AcceptedStep> {
        let (state, ec) = match &self.ec {
            Some(corrector) => {
                let (scaled, next, report) = ec_step_detailed(&state, prev_curve, corrector, dt)?;
                let diag = EcDiagnostics {
                    r: next.r,
                    w_c: report.w_c,
                    ratio: report.eta,
                    k_c: report.k_c,
                    dissipation: report.dissipation,
                };
                self.ec = Some(next);
                (scaled, Some(diag))
            }
            None => (state, None),
        };
        Ok(AcceptedStep {
            state,
            ec,
            model: self.last_model,
        })
    }

    fn monitor_params(&self) -> &MonitorParams {
        &self.params
    }
}

/// Runs the moving-mesh pipeline from the initial state to T. An energy
/// corrector, when given, is applied after every accepted step and its
/// numbers appear in the run diagnostics.
pub fn evolve_adaptive(
    initial: &GeometricState,
    config: &SolverConfig,
    tc: &TangentialConfig,
    ec: Option<EnergyCorrectorState>,
) -> Result<RunRecord> {
    tc.validate()?;
    if let Some(corrector) = &ec {
        corrector.validate()?;
    }
    let mut engine = AdaptiveEngine::new(config, tc.clone(), ec);
    run_loop(initial, config, &mut engine)
}
