//! Monitor-function models, geometric indicators, regime-based model
//! selection, parameter amplification, and the interpolation-error diagnostic.
//!
//! Selection is driven by three indicators of the current state: C0 (max
//! curvature magnitude), C1 (max arc-length derivative of curvature), and Q
//! (max/min chord ratio). C0 picks the base curvature response, C1 upgrades it
//! to a gradient-aware variant, and Q above its threshold amplifies the
//! sensitivity parameters alpha and gamma (sticky within a run).

use crate::error::{Error, Result};
use crate::grid::{arc_derivative, segment_lengths, NodalCurve, ScalarField};
use serde::{Deserialize, Serialize};

/// Scalar summaries of the current discrete geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricIndicators {
    /// max_i |kappa_i|
    pub c0: f64,
    /// max_i |delta_s kappa_i|
    pub c1: f64,
    /// max Delta s / min Delta s
    pub q: f64,
}

/// Monitor-function family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonitorModel {
    /// m = 1
    Constant,
    /// m = 1 + alpha |kappa|
    Linear,
    /// m = 1 + alpha [(1-beta)|kappa| + beta kappa^2]
    Hybrid,
    /// m = 1 + alpha kappa^2
    Quadratic,
    /// m = 1 + alpha |kappa| + gamma |kappa_s|
    #[serde(rename = "grad")]
    GradientEnhanced,
    /// m = 1 + alpha sqrt(kappa^2 + gamma kappa_s^2)
    #[serde(rename = "highorder")]
    HighOrderCombined,
}

impl MonitorModel {
    pub fn label(self) -> &'static str {
        match self {
            MonitorModel::Constant => "constant",
            MonitorModel::Linear => "linear",
            MonitorModel::Hybrid => "hybrid",
            MonitorModel::Quadratic => "quadratic",
            MonitorModel::GradientEnhanced => "grad",
            MonitorModel::HighOrderCombined => "highorder",
        }
    }
}

/// Monitor parameters: current sensitivities, regime thresholds, and
/// amplification rule. `alpha`/`gamma` start at `alpha0`/`gamma0` and may be
/// amplified (never above `alpha_max`/`gamma_max`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c0_low: f64,
    pub c0_high: f64,
    pub c1_low: f64,
    pub c1_high: f64,
    pub q_thresh: f64,
    pub amp_factor: f64,
    pub alpha0: f64,
    pub gamma0: f64,
    pub alpha_max: f64,
    pub gamma_max: f64,
    /// Optional 3-point periodic moving average of the evaluated monitor.
    pub smoothing: bool,
}

impl Default for MonitorParams {
    fn default() -> Self {
        MonitorParams::from_base(1.0, 0.1, 0.3)
    }
}

impl MonitorParams {
    /// Builds params from user-level sensitivities with default thresholds
    /// (order-of-magnitude regime separation) and caps at 100 * alpha0.
    pub fn from_base(alpha0: f64, gamma0: f64, beta: f64) -> Self {
        MonitorParams {
            alpha: alpha0,
            beta,
            gamma: gamma0,
            c0_low: 2.0,
            c0_high: 10.0,
            c1_low: 5.0,
            c1_high: 50.0,
            q_thresh: 2.0,
            amp_factor: 1.5,
            alpha0,
            gamma0,
            alpha_max: 100.0 * alpha0,
            gamma_max: 100.0 * alpha0,
            smoothing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.beta > 0.0
            && self.beta < 1.0
            && self.gamma >= 0.0
            && self.c0_low > 0.0
            && self.c0_low < self.c0_high
            && self.c1_low > 0.0
            && self.c1_low < self.c1_high
            && self.q_thresh > 1.0
            && self.amp_factor >= 1.0
            && self.alpha_max > 0.0
            && self.gamma_max > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "monitor parameters out of range: {self:?}"
            )))
        }
    }
}

/// Computes (C0, C1, Q) from the curve and its nodal curvature.
pub fn compute_indicators(
    curve: &NodalCurve,
    kappa: &ScalarField,
) -> Result<GeometricIndicators> {
    if kappa.len() != curve.m() {
        return Err(Error::ShapeMismatch {
            left: kappa.len(),
            right: curve.m(),
        });
    }
    let c0 = kappa.max_abs();
    let c1 = arc_derivative(kappa, curve)?.max_abs();
    let seg = segment_lengths(curve)?;
    let max_ds = seg.delta_s.iter().fold(f64::MIN, |a, &b| a.max(b));
    let min_ds = seg.delta_s.iter().fold(f64::MAX, |a, &b| a.min(b));
    Ok(GeometricIndicators {
        c0,
        c1,
        q: max_ds / min_ds,
    })
}

/// Regime-based model selection: base model by C0, then curvature-variation
/// enhancement by C1. Lower bounds inclusive, upper bounds exclusive.
pub fn select_monitor(ind: &GeometricIndicators, params: &MonitorParams) -> MonitorModel {
    let base = if ind.c0 < params.c0_low {
        MonitorModel::Linear
    } else if ind.c0 < params.c0_high {
        MonitorModel::Hybrid
    } else {
        MonitorModel::Quadratic
    };
    if ind.c1 >= params.c1_high {
        MonitorModel::HighOrderCombined
    } else if ind.c1 >= params.c1_low {
        MonitorModel::GradientEnhanced
    } else {
        base
    }
}

/// Evaluates the monitor model at every node. Output is >= 1 everywhere.
pub fn eval_monitor(
    model: MonitorModel,
    params: &MonitorParams,
    kappa: &ScalarField,
    kappa_s: &ScalarField,
) -> Result<ScalarField> {
    if kappa.len() != kappa_s.len() {
        return Err(Error::ShapeMismatch {
            left: kappa.len(),
            right: kappa_s.len(),
        });
    }
    let a = params.alpha;
    let b = params.beta;
    let g = params.gamma;
    let values: Vec<f64> = kappa
        .iter()
        .zip(kappa_s.iter())
        .map(|(&k, &ks)| match model {
            MonitorModel::Constant => 1.0,
            MonitorModel::Linear => 1.0 + a * k.abs(),
            MonitorModel::Hybrid => 1.0 + a * ((1.0 - b) * k.abs() + b * k * k),
            MonitorModel::Quadratic => 1.0 + a * k * k,
            MonitorModel::GradientEnhanced => 1.0 + a * k.abs() + g * ks.abs(),
            MonitorModel::HighOrderCombined => 1.0 + a * (k * k + g * ks * ks).sqrt(),
        })
        .collect();
    let field = ScalarField::new(values)?;
    if params.smoothing {
        let m = field.len();
        let smoothed: Vec<f64> = (0..m)
            .map(|i| (field[(i + m - 1) % m] + field[i] + field[(i + 1) % m]) / 3.0)
            .collect();
        ScalarField::new(smoothed)
    } else {
        Ok(field)
    }
}

/// Amplifies alpha and gamma by `amp_factor` (clamped at the caps) when the
/// mesh-ratio indicator exceeds its threshold; otherwise returns params
/// unchanged. Amplification is sticky: callers keep the returned params.
pub fn amplify_params(params: &MonitorParams, q: f64) -> MonitorParams {
    let mut out = *params;
    if q > params.q_thresh {
        out.alpha = (out.alpha * out.amp_factor).min(out.alpha_max);
        out.gamma = (out.gamma * out.amp_factor).min(out.gamma_max);
    }
    out
}

/// Per-segment interpolation-error diagnostic
/// e_i = Delta s_i^2 |kappa_i| + Delta s_i^3 |kappa_s,i| + Delta s_i^3 kappa_i^2
/// (unit constants).
pub fn interpolation_error_bound(
    kappa: &ScalarField,
    kappa_s: &ScalarField,
    seg: &ScalarField,
) -> Result<ScalarField> {
    if kappa.len() != kappa_s.len() || kappa.len() != seg.len() {
        return Err(Error::ShapeMismatch {
            left: kappa.len(),
            right: seg.len(),
        });
    }
    let values: Vec<f64> = (0..kappa.len())
        .map(|i| {
            let ds = seg[i];
            let ds2 = ds * ds;
            let ds3 = ds2 * ds;
            ds2 * kappa[i].abs() + ds3 * kappa_s[i].abs() + ds3 * kappa[i] * kappa[i]
        })
        .collect();
    ScalarField::new(values)
}

/// Convenience: indicators, selection, amplification, and evaluation for one
/// state, returning everything a logging caller needs.
pub struct MonitorEvaluation {
    pub indicators: GeometricIndicators,
    pub model: MonitorModel,
    pub params: MonitorParams,
    pub values: ScalarField,
}

/// Runs the full selection pipeline on a state: indicators from (curve, kappa),
/// amplification via Q, model selection, then evaluation. `fixed` skips
/// selection and evaluates the given model instead (amplification still fires).
pub fn evaluate_for_state(
    curve: &NodalCurve,
    kappa: &ScalarField,
    params: &MonitorParams,
    fixed: Option<MonitorModel>,
) -> Result<MonitorEvaluation> {
    let indicators = compute_indicators(curve, kappa)?;
    let params = amplify_params(params, indicators.q);
    let model = fixed.unwrap_or_else(|| select_monitor(&indicators, &params));
    let kappa_s = arc_derivative(kappa, curve)?;
    let values = eval_monitor(model, &params, kappa, &kappa_s)?;
    Ok(MonitorEvaluation {
        indicators,
        model,
        params,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{discrete_curvature, regular_polygon};

    #[test]
    fn indicators_on_uniform_polygon() {
        let curve = regular_polygon(1.0, 100).unwrap();
        let kappa = discrete_curvature(&curve).unwrap();
        let ind = compute_indicators(&curve, &kappa).unwrap();
        assert!((ind.c0 - 1.000987).abs() < 5e-6);
        assert!(ind.c1 < 1e-10, "symmetry forces C1 = 0, got {}", ind.c1);
        assert!((ind.q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn indicator_c0_is_plain_max() {
        let curve = regular_polygon(1.0, 4).unwrap();
        let kappa = ScalarField::new(vec![1.0, -2.0, 0.5, 0.0]).unwrap();
        let ind = compute_indicators(&curve, &kappa).unwrap();
        assert_eq!(ind.c0, 2.0);
    }

    #[test]
    fn q_is_scale_invariant() {
        let a = regular_polygon(1.0, 16).unwrap();
        let b = regular_polygon(7.5, 16).unwrap();
        let kappa = ScalarField::constant(0.0, 16).unwrap();
        let qa = compute_indicators(&a, &kappa).unwrap().q;
        let qb = compute_indicators(&b, &kappa).unwrap().q;
        assert!((qa - qb).abs() < 1e-12);
    }

    fn ind(c0: f64, c1: f64) -> GeometricIndicators {
        GeometricIndicators { c0, c1, q: 1.0 }
    }

    #[test]
    fn selection_regimes() {
        let p = MonitorParams::default();
        assert_eq!(select_monitor(&ind(0.5 * p.c0_low, 0.0), &p), MonitorModel::Linear);
        assert_eq!(select_monitor(&ind(5.0, 0.0), &p), MonitorModel::Hybrid);
        assert_eq!(select_monitor(&ind(50.0, 0.0), &p), MonitorModel::Quadratic);
        assert_eq!(
            select_monitor(&ind(0.5, 10.0), &p),
            MonitorModel::GradientEnhanced
        );
        assert_eq!(
            select_monitor(&ind(50.0, 80.0), &p),
            MonitorModel::HighOrderCombined
        );
        // Boundary convention: lower bound inclusive, upper exclusive.
        assert_eq!(select_monitor(&ind(p.c0_low, 0.0), &p), MonitorModel::Hybrid);
        assert_eq!(select_monitor(&ind(p.c0_high, 0.0), &p), MonitorModel::Quadratic);
        assert_eq!(
            select_monitor(&ind(0.0, p.c1_low), &p),
            MonitorModel::GradientEnhanced
        );
        assert_eq!(
            select_monitor(&ind(0.0, p.c1_high), &p),
            MonitorModel::HighOrderCombined
        );
    }

    #[test]
    fn monitor_hand_values() {
        let p = MonitorParams {
            alpha: 2.0,
            ..MonitorParams::default()
        };
        let kappa = ScalarField::new(vec![-3.0, -3.0, -3.0, -3.0]).unwrap();
        let zeros = ScalarField::constant(0.0, 4).unwrap();
        let m = eval_monitor(MonitorModel::Linear, &p, &kappa, &zeros).unwrap();
        assert_eq!(m[0], 7.0);

        let p = MonitorParams {
            alpha: 1.0,
            beta: 0.3,
            ..MonitorParams::default()
        };
        let kappa = ScalarField::constant(2.0, 4).unwrap();
        let m = eval_monitor(MonitorModel::Hybrid, &p, &kappa, &zeros).unwrap();
        assert!((m[0] - 3.6).abs() < 1e-14);
    }

    #[test]
    fn zero_curvature_gives_unit_monitor() {
        let p = MonitorParams::default();
        let zeros = ScalarField::constant(0.0, 8).unwrap();
        for model in [
            MonitorModel::Constant,
            MonitorModel::Linear,
            MonitorModel::Hybrid,
            MonitorModel::Quadratic,
            MonitorModel::GradientEnhanced,
            MonitorModel::HighOrderCombined,
        ] {
            let m = eval_monitor(model, &p, &zeros, &zeros).unwrap();
            assert!(m.iter().all(|&v| v == 1.0), "{model:?}");
        }
    }

    #[test]
    fn hybrid_limits_match_linear_and_quadratic() {
        let kappa = ScalarField::new(vec![0.3, -1.7, 2.2, 0.0, 4.1]).unwrap();
        let zeros = ScalarField::constant(0.0, 5).unwrap();
        let base = MonitorParams::default();

        let near_linear = MonitorParams { beta: 1e-12, ..base };
        let lin = eval_monitor(MonitorModel::Linear, &near_linear, &kappa, &zeros).unwrap();
        let hyb = eval_monitor(MonitorModel::Hybrid, &near_linear, &kappa, &zeros).unwrap();
        for i in 0..5 {
            assert!((lin[i] - hyb[i]).abs() <= 1e-8 * lin[i].abs());
        }

        let near_quad = MonitorParams {
            beta: 1.0 - 1e-12,
            ..base
        };
        let quad = eval_monitor(MonitorModel::Quadratic, &near_quad, &kappa, &zeros).unwrap();
        let hyb = eval_monitor(MonitorModel::Hybrid, &near_quad, &kappa, &zeros).unwrap();
        for i in 0..5 {
            assert!((quad[i] - hyb[i]).abs() <= 1e-8 * quad[i].abs());
        }
    }

    #[test]
    fn amplification_rules() {
        let p = MonitorParams::default();
        let same = amplify_params(&p, 1.0);
        assert_eq!(same, p);

        let amped = amplify_params(&p, 2.0 * p.q_thresh);
        assert!((amped.alpha - 1.5).abs() < 1e-15);
        assert!((amped.gamma - 0.15).abs() < 1e-15);

        // Repeated amplification saturates at the caps.
        let mut q = p;
        for _ in 0..100 {
            q = amplify_params(&q, 10.0);
        }
        assert_eq!(q.alpha, p.alpha_max);
        assert_eq!(q.gamma, p.gamma_max);
    }

    #[test]
    fn interpolation_bound_hand_value() {
        let kappa = ScalarField::new(vec![1.0; 4]).unwrap();
        let zeros = ScalarField::constant(0.0, 4).unwrap();
        let seg = ScalarField::constant(0.1, 4).unwrap();
        let e = interpolation_error_bound(&kappa, &zeros, &seg).unwrap();
        assert!((e[0] - 0.011).abs() < 1e-15);

        let bound_zero = interpolation_error_bound(&zeros, &zeros, &seg).unwrap();
        assert!(bound_zero.iter().all(|&v| v == 0.0));

        let half = ScalarField::constant(0.05, 4).unwrap();
        let e2 = interpolation_error_bound(&kappa, &zeros, &half).unwrap();
        // Leading quadratic term drops by 4, cubic by 8.
        assert!((e2[0] - (0.0025 + 0.000125)).abs() < 1e-15);
    }
}
