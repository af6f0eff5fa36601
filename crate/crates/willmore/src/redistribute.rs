//! Weighted arc-length redistribution (WAR) and its adaptive composition
//! (A-WAR).
//!
//! WAR equidistributes the monitor-weighted arc length: per-segment weights
//! omega_j = (m_j + m_{j+1})/2 * Delta s_j accumulate to w, targets split
//! [0, L_w] evenly, the piecewise-linear w is inverted for new parameters, and
//! the curve is resampled there. Node 0 stays pinned at parameter 0 and
//! periodicity is enforced by construction. A-WAR prepends monitor selection
//! and amplification from the current geometric indicators.

use crate::error::{Error, Result};
use crate::grid::{
    discrete_curvature, discrete_velocity, segment_lengths, GeometricState, NodalCurve,
    ScalarField, Vec2,
};
use crate::monitor::{
    evaluate_for_state, GeometricIndicators, MonitorModel, MonitorParams,
};

/// Per-segment weights, their running sum, and the weighted total length.
#[derive(Clone, Debug)]
pub struct WeightedArcLength {
    /// omega_j = (m_j + m_{j+1})/2 * Delta s_j, length M (periodic wrap).
    pub omega: Vec<f64>,
    /// w_0 = 0, w_j = sum_{k<j} omega_k, length M+1, strictly increasing.
    pub w: Vec<f64>,
    /// L_w = w_M.
    pub total: f64,
}

/// Accumulates monitor-weighted segment lengths.
pub fn weighted_cumulative(delta_s: &[f64], m: &ScalarField) -> Result<WeightedArcLength> {
    let n = delta_s.len();
    if m.len() != n {
        return Err(Error::ShapeMismatch {
            left: m.len(),
            right: n,
        });
    }
    for (j, &ds) in delta_s.iter().enumerate() {
        if !(ds > 0.0) || !ds.is_finite() {
            return Err(Error::Precondition(format!(
                "segment length {ds} at index {j} must be positive"
            )));
        }
    }
    for (j, &mj) in m.values().iter().enumerate() {
        if !(mj > 0.0) {
            return Err(Error::Precondition(format!(
                "monitor value {mj} at index {j} must be positive"
            )));
        }
    }
    let mut omega = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n + 1);
    w.push(0.0);
    let mut run = 0.0;
    for j in 0..n {
        let o = 0.5 * (m[j] + m[(j + 1) % n]) * delta_s[j];
        omega.push(o);
        run += o;
        w.push(run);
    }
    Ok(WeightedArcLength {
        omega,
        w,
        total: run,
    })
}

/// M+1 equally spaced targets from 0 to L_w: w_i^tar = (i/M) L_w.
/// The ratio is formed first so the last target equals L_w exactly; the
/// product l_w * i rounded and divided back can overshoot by an ulp.
pub fn equidistribution_targets(l_w: f64, m: usize) -> Vec<f64> {
    (0..=m).map(|i| l_w * (i as f64 / m as f64)).collect()
}

/// Inverts the piecewise-linear cumulative map: for each target t locates
/// w_j <= t <= w_{j+1} and interpolates the parameter linearly. Targets equal
/// to a knot return the knot parameter exactly.
pub fn invert_parameters(w: &[f64], rho: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
    if w.len() != rho.len() {
        return Err(Error::ShapeMismatch {
            left: w.len(),
            right: rho.len(),
        });
    }
    if w.len() < 2 {
        return Err(Error::Precondition("cumulative map needs >= 2 knots".into()));
    }
    for j in 1..w.len() {
        if !(w[j] > w[j - 1]) {
            return Err(Error::Precondition(format!(
                "cumulative weights not strictly increasing at index {j}"
            )));
        }
    }
    let last = w.len() - 1;
    let slack = 1e-12 * (w[last] - w[0]).abs();
    let mut out = Vec::with_capacity(targets.len());
    for &t in targets {
        if t < w[0] - slack || t > w[last] + slack {
            return Err(Error::Precondition(format!(
                "target {t} outside cumulative range [{}, {}]",
                w[0], w[last]
            )));
        }
        let t = t.clamp(w[0], w[last]);
        // First index with w > t, minus one: w_j <= t < w_{j+1}.
        let j = w.partition_point(|&x| x <= t).saturating_sub(1).min(last - 1);
        let frac = (t - w[j]) / (w[j + 1] - w[j]);
        let r = if frac >= 1.0 {
            rho[j + 1]
        } else {
            rho[j] + frac * (rho[j + 1] - rho[j])
        };
        out.push(r);
    }
    Ok(out)
}

/// Interpolation scheme for curve resampling. Linear matches the linear
/// inversion of w and preserves the exact-equidistribution property; the
/// periodic cubic is smoother but breaks that exactness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ResampleScheme {
    #[default]
    Linear,
    PeriodicCubic,
}

/// Samples the curve at new parameters. `rho_old` has M+1 knots covering one
/// period (node j at rho_old[j], node M wrapping to node 0); `rho_new` has M
/// strictly increasing values inside that period.
pub fn resample_curve(
    curve: &NodalCurve,
    rho_old: &[f64],
    rho_new: &[f64],
    scheme: ResampleScheme,
) -> Result<NodalCurve> {
    let m = curve.m();
    if rho_old.len() != m + 1 {
        return Err(Error::ShapeMismatch {
            left: rho_old.len(),
            right: m + 1,
        });
    }
    if rho_new.len() != m {
        return Err(Error::ShapeMismatch {
            left: rho_new.len(),
            right: m,
        });
    }
    for i in 1..rho_new.len() {
        if !(rho_new[i] > rho_new[i - 1]) {
            return Err(Error::Precondition(format!(
                "new parameters not strictly increasing at index {i}"
            )));
        }
    }
    let points = match scheme {
        ResampleScheme::Linear => sample_linear(curve.points(), rho_old, rho_new, |p| *p)?,
        ResampleScheme::PeriodicCubic => sample_periodic_cubic(curve, rho_old, rho_new)?,
    };
    NodalCurve::new(points)
}

/// Piecewise-linear sampling shared by curve and field resampling. `value`
/// projects a node to the interpolated quantity.
fn sample_linear<T, F, V>(nodes: &[T], rho_old: &[f64], rho_new: &[f64], value: F) -> Result<Vec<V>>
where
    F: Fn(&T) -> V,
    V: Lerp,
{
    let m = nodes.len();
    let last = rho_old.len() - 1;
    let mut out = Vec::with_capacity(rho_new.len());
    for &r in rho_new {
        if r < rho_old[0] || r > rho_old[last] {
            return Err(Error::Precondition(format!(
                "parameter {r} outside knot range [{}, {}]",
                rho_old[0], rho_old[last]
            )));
        }
        let j = rho_old.partition_point(|&x| x <= r).saturating_sub(1).min(last - 1);
        let frac = (r - rho_old[j]) / (rho_old[j + 1] - rho_old[j]);
        let a = value(&nodes[j % m]);
        let b = value(&nodes[(j + 1) % m]);
        out.push(V::lerp(a, b, frac));
    }
    Ok(out)
}

trait Lerp: Copy {
    fn lerp(a: Self, b: Self, t: f64) -> Self;
}

impl Lerp for f64 {
    fn lerp(a: f64, b: f64, t: f64) -> f64 {
        a + t * (b - a)
    }
}

impl Lerp for Vec2 {
    fn lerp(a: Vec2, b: Vec2, t: f64) -> Vec2 {
        a + t * (b - a)
    }
}

/// Periodic natural cubic spline through the nodes, evaluated at rho_new.
/// Second derivatives come from the standard cyclic tridiagonal system.
fn sample_periodic_cubic(
    curve: &NodalCurve,
    rho_old: &[f64],
    rho_new: &[f64],
) -> Result<Vec<Vec2>> {
    let m = curve.m();
    let last = rho_old.len() - 1;
    let node = |j: usize| curve.point(j % m);
    // Interval widths h_j = rho_{j+1} - rho_j, j = 0..M-1.
    let mut widths = Vec::with_capacity(m);
    for j in 0..m {
        let h = rho_old[j + 1] - rho_old[j];
        if !(h > 0.0) {
            return Err(Error::Precondition(format!(
                "old parameters not strictly increasing at index {}",
                j + 1
            )));
        }
        widths.push(h);
    }
    // Cyclic tridiagonal for second derivatives s_j (per component):
    // h_{j-1} s_{j-1} + 2(h_{j-1}+h_j) s_j + h_j s_{j+1} = 6 (d_j - d_{j-1})
    // with d_j = (X_{j+1} - X_j)/h_j.
    let mut sys = crate::linsys::SparseSystem::new(2 * m);
    for comp in 0..2usize {
        let base = comp * m;
        let coord = |p: Vec2| if comp == 0 { p.x } else { p.y };
        for j in 0..m {
            let jm = (j + m - 1) % m;
            let d_j = (coord(node(j + 1)) - coord(node(j))) / widths[j];
            let d_prev = (coord(node(j)) - coord(node(jm))) / widths[jm];
            sys.push(base + j, base + jm, widths[jm]);
            sys.push(base + j, base + j, 2.0 * (widths[jm] + widths[j]));
            sys.push(base + j, base + (j + 1) % m, widths[j]);
            sys.set_rhs(base + j, 6.0 * (d_j - d_prev));
        }
    }
    let s = sys.solve()?;
    let mut out = Vec::with_capacity(rho_new.len());
    for &r in rho_new {
        if r < rho_old[0] || r > rho_old[last] {
            return Err(Error::Precondition(format!(
                "parameter {r} outside knot range [{}, {}]",
                rho_old[0], rho_old[last]
            )));
        }
        let j = rho_old.partition_point(|&x| x <= r).saturating_sub(1).min(last - 1);
        let h = widths[j % m];
        let t0 = rho_old[j + 1] - r;
        let t1 = r - rho_old[j];
        let eval = |a: f64, b: f64, sa: f64, sb: f64| {
            sa * t0 * t0 * t0 / (6.0 * h) + sb * t1 * t1 * t1 / (6.0 * h)
                + (a / h - sa * h / 6.0) * t0
                + (b / h - sb * h / 6.0) * t1
        };
        let pa = node(j);
        let pb = node(j + 1);
        let ja = j % m;
        let jb = (j + 1) % m;
        out.push(Vec2::new(
            eval(pa.x, pb.x, s[ja], s[jb]),
            eval(pa.y, pb.y, s[m + ja], s[m + jb]),
        ));
    }
    Ok(out)
}

/// Uniform parameter knots 0, 1/M, ..., 1 (exact endpoints).
pub fn uniform_knots(m: usize) -> Vec<f64> {
    (0..=m).map(|j| j as f64 / m as f64).collect()
}

/// One WAR pass: weighted cumulative arc length, even targets, inversion, and
/// piecewise-linear resampling. Node 0 is pinned and the output is periodic.
pub fn war_redistribute(curve: &NodalCurve, m: &ScalarField) -> Result<NodalCurve> {
    war_redistribute_with(curve, m, ResampleScheme::Linear)
}

/// WAR with an explicit resampling scheme (the cubic option trades the exact
/// equidistribution property for smoother node placement).
pub fn war_redistribute_with(
    curve: &NodalCurve,
    m: &ScalarField,
    scheme: ResampleScheme,
) -> Result<NodalCurve> {
    let seg = segment_lengths(curve)?;
    let wc = weighted_cumulative(&seg.delta_s, m)?;
    let targets = equidistribution_targets(wc.total, curve.m());
    let knots = uniform_knots(curve.m());
    let rho_new = invert_parameters(&wc.w, &knots, &targets)?;
    resample_curve(curve, &knots, &rho_new[..curve.m()], scheme)
}

/// Result of one adaptive redistribution step.
pub struct AwarStep {
    pub curve: NodalCurve,
    pub model: MonitorModel,
    pub indicators: GeometricIndicators,
    /// Possibly amplified parameters; callers keep these (sticky within a run).
    pub params: MonitorParams,
    /// Monitor values used for the redistribution (pre-step geometry).
    pub monitor: ScalarField,
    /// New node parameters in the old parametrization (length M); lets callers
    /// move companion data (e.g. BDF history) with the same map.
    pub rho_new: Vec<f64>,
}

/// Adaptive WAR: indicators, model selection, Q-amplification, monitor
/// evaluation, then redistribution.
pub fn awar_step(
    curve: &NodalCurve,
    kappa: &ScalarField,
    params: &MonitorParams,
) -> Result<AwarStep> {
    let eval = evaluate_for_state(curve, kappa, params, None)?;
    let seg = segment_lengths(curve)?;
    let wc = weighted_cumulative(&seg.delta_s, &eval.values)?;
    let targets = equidistribution_targets(wc.total, curve.m());
    let knots = uniform_knots(curve.m());
    let mut rho_new = invert_parameters(&wc.w, &knots, &targets)?;
    rho_new.truncate(curve.m());
    let new_curve = resample_curve(curve, &knots, &rho_new, ResampleScheme::Linear)?;
    Ok(AwarStep {
        curve: new_curve,
        model: eval.model,
        indicators: eval.indicators,
        params: eval.params,
        monitor: eval.values,
        rho_new,
    })
}

/// Rebuilds a self-consistent state on a redistributed curve: curvature from
/// the new geometry, velocity from the discrete flow formula.
pub fn state_on_curve(curve: NodalCurve) -> Result<GeometricState> {
    let kappa = discrete_curvature(&curve)?;
    let v = discrete_velocity(&curve, &kappa)?;
    GeometricState::new(curve, v, kappa)
}

/// Resamples a whole state (positions and nodal fields) at new parameters with
/// the piecewise-linear map; used to move BDF history onto a redistributed
/// parametrization.
pub fn resample_state(
    state: &GeometricState,
    rho_old: &[f64],
    rho_new: &[f64],
) -> Result<GeometricState> {
    let points = sample_linear(state.curve.points(), rho_old, rho_new, |p| *p)?;
    let v = sample_linear(state.v.values(), rho_old, rho_new, |x| *x)?;
    let kappa = sample_linear(state.kappa.values(), rho_old, rho_new, |x| *x)?;
    GeometricState::new(
        NodalCurve::new(points)?,
        ScalarField::new(v)?,
        ScalarField::new(kappa)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::regular_polygon;

    #[test]
    fn weighted_cumulative_hand_values() {
        let ds = [1.0, 1.0, 1.0, 1.0];
        let m = ScalarField::new(vec![1.0, 1.0, 3.0, 3.0]).unwrap();
        let wc = weighted_cumulative(&ds, &m).unwrap();
        assert_eq!(wc.omega, vec![1.0, 2.0, 3.0, 2.0]);
        assert_eq!(wc.w, vec![0.0, 1.0, 3.0, 6.0, 8.0]);
        assert_eq!(wc.total, 8.0);

        let m = ScalarField::new(vec![1.0, 3.0, 1.0, 3.0]).unwrap();
        let wc = weighted_cumulative(&ds, &m).unwrap();
        assert_eq!(wc.omega, vec![2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn unweighted_cumulative_is_arc_length() {
        let ds = [0.5, 0.25, 1.0, 0.75];
        let m = ScalarField::constant(1.0, 4).unwrap();
        let wc = weighted_cumulative(&ds, &m).unwrap();
        assert_eq!(wc.omega, ds.to_vec());
        assert!((wc.total - 2.5).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_inputs_rejected() {
        let m = ScalarField::constant(1.0, 4).unwrap();
        assert!(weighted_cumulative(&[1.0, 0.0, 1.0, 1.0], &m).is_err());
        let bad_m = ScalarField::new(vec![1.0, -1.0, 1.0, 1.0]).unwrap();
        assert!(weighted_cumulative(&[1.0; 4], &bad_m).is_err());
    }

    #[test]
    fn targets_hand_values() {
        let t = equidistribution_targets(8.0, 4);
        assert_eq!(t, vec![0.0, 2.0, 4.0, 6.0, 8.0]);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[4], 8.0);
        for i in 1..t.len() {
            assert!((t[i] - t[i - 1] - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inversion_hand_values() {
        let w = [0.0, 1.0, 3.0, 6.0, 8.0];
        let rho = [0.0, 0.25, 0.5, 0.75, 1.0];
        let targets = [0.0, 2.0, 4.0, 6.0, 8.0];
        let out = invert_parameters(&w, &rho, &targets).unwrap();
        assert!((out[0] - 0.0).abs() < 1e-15);
        assert!((out[1] - 0.375).abs() < 1e-15);
        assert!((out[2] - (0.5 + 0.25 / 3.0)).abs() < 1e-15);
        assert_eq!(out[3], 0.75, "target hitting a knot returns the knot");
        assert_eq!(out[4], 1.0);
        for i in 1..out.len() {
            assert!(out[i] > out[i - 1]);
        }
    }

    #[test]
    fn inversion_identity_on_equidistributed_input() {
        let w = [0.0, 2.0, 4.0, 6.0, 8.0];
        let rho = [0.0, 0.25, 0.5, 0.75, 1.0];
        let out = invert_parameters(&w, &rho, &w).unwrap();
        for (a, b) in out.iter().zip(rho.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn inversion_rejects_bad_input() {
        let rho = [0.0, 0.5, 1.0];
        assert!(invert_parameters(&[0.0, 1.0, 1.0], &rho, &[0.5]).is_err());
        assert!(invert_parameters(&[0.0, 1.0, 2.0], &rho, &[2.5]).is_err());
    }

    fn unit_square() -> NodalCurve {
        NodalCurve::new(vec![
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 0.0),
            Vec2::new(0.0, -1.0),
        ])
        .unwrap()
    }

    #[test]
    fn resample_identity_and_midpoints() {
        let sq = unit_square();
        let knots = uniform_knots(4);
        let same = resample_curve(&sq, &knots, &knots[..4], ResampleScheme::Linear).unwrap();
        for i in 0..4 {
            assert!((same.point(i) - sq.point(i)).norm() < 1e-15);
        }
        // Composition of the inversion example: node 1 lands halfway along
        // edge 1 -> 2.
        let rho_new = [0.0, 0.375, 0.5 + 0.25 / 3.0, 0.75];
        let out = resample_curve(&sq, &knots, &rho_new, ResampleScheme::Linear).unwrap();
        let mid = 0.5 * (sq.point(1) + sq.point(2));
        assert!((out.point(1) - mid).norm() < 1e-15);
        assert!((out.point(0) - sq.point(0)).norm() < 1e-15);
        assert!((out.point(3) - sq.point(3)).norm() < 1e-15);
    }

    #[test]
    fn war_exactness_property() {
        // After redistribution, the OLD cumulative map evaluated at the new
        // parameters must have increments exactly L_w / M.
        let curve = regular_polygon(1.0, 16).unwrap();
        let m_vals: Vec<f64> = (0..16)
            .map(|i| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * i as f64 / 16.0).sin().abs())
            .collect();
        let m = ScalarField::new(m_vals).unwrap();
        let seg = segment_lengths(&curve).unwrap();
        let wc = weighted_cumulative(&seg.delta_s, &m).unwrap();
        let targets = equidistribution_targets(wc.total, 16);
        let knots = uniform_knots(16);
        let rho_new = invert_parameters(&wc.w, &knots, &targets).unwrap();
        // Forward-evaluate the piecewise-linear w at rho_new.
        let eval_w = |r: f64| {
            let j = knots.partition_point(|&x| x <= r).saturating_sub(1).min(15);
            wc.w[j] + (r - knots[j]) / (knots[j + 1] - knots[j]) * (wc.w[j + 1] - wc.w[j])
        };
        let want = wc.total / 16.0;
        for i in 0..16 {
            let inc = eval_w(rho_new[i + 1]) - eval_w(rho_new[i]);
            assert!(
                (inc - want).abs() <= 1e-12 * want,
                "increment {i}: {inc} vs {want}"
            );
        }
    }

    #[test]
    fn war_identity_on_uniform_unweighted() {
        let curve = regular_polygon(1.0, 32).unwrap();
        let m = ScalarField::constant(1.0, 32).unwrap();
        let once = war_redistribute(&curve, &m).unwrap();
        for i in 0..32 {
            assert!((once.point(i) - curve.point(i)).norm() < 1e-13);
        }
        let twice = war_redistribute(&once, &m).unwrap();
        for i in 0..32 {
            assert!((twice.point(i) - once.point(i)).norm() < 1e-12);
        }
    }

    #[test]
    fn war_equidistributes_arclength_along_old_polygon() {
        // Non-uniform nodes on a circle, m = 1: consecutive new nodes must be
        // exactly L/M apart in arc length along the OLD polyline. Chords can
        // stay slightly uneven (a chord spanning a kink is shorter than its
        // arc), but their spread must strictly improve.
        let points: Vec<Vec2> = (0..16)
            .map(|i| {
                let u = i as f64 / 16.0;
                let theta = 2.0 * std::f64::consts::PI * (u + 0.05 * (2.0 * std::f64::consts::PI * u).sin());
                Vec2::new(theta.cos(), theta.sin())
            })
            .collect();
        let curve = NodalCurve::new(points).unwrap();
        let m = ScalarField::constant(1.0, 16).unwrap();
        let out = war_redistribute(&curve, &m).unwrap();
        let seg_in = segment_lengths(&curve).unwrap();

        // Arc-length coordinate of a point on the old polyline.
        let arc_position = |p: Vec2| -> f64 {
            for j in 0..16 {
                let a = curve.point(j);
                let b = curve.point((j + 1) % 16);
                let ab = b - a;
                let t = (p - a).dot(ab) / ab.norm_sq();
                if (-1e-9..=1.0 + 1e-9).contains(&t)
                    && (p - (a + t.clamp(0.0, 1.0) * ab)).norm() < 1e-9
                {
                    return seg_in.cumulative[j] + t.clamp(0.0, 1.0) * seg_in.delta_s[j];
                }
            }
            panic!("redistributed node left the old polyline");
        };
        let target = seg_in.total / 16.0;
        let mut prev = arc_position(out.point(0));
        for i in 1..16 {
            let s = arc_position(out.point(i));
            let gap = s - prev;
            assert!(
                (gap - target).abs() < 1e-12 * seg_in.total,
                "node {i}: arc gap {gap} vs {target}"
            );
            prev = s;
        }

        let seg_out = segment_lengths(&out).unwrap();
        let ratio = |seg: &crate::grid::SegmentGeometry| {
            let max = seg.delta_s.iter().fold(f64::MIN, |a, &b| a.max(b));
            let min = seg.delta_s.iter().fold(f64::MAX, |a, &b| a.min(b));
            max / min
        };
        assert!(ratio(&seg_out) < ratio(&seg_in));
    }

    #[test]
    fn new_nodes_lie_on_old_polygon() {
        let curve = regular_polygon(2.0, 12).unwrap();
        let m_vals: Vec<f64> = (0..12).map(|i| 1.0 + (i % 3) as f64).collect();
        let m = ScalarField::new(m_vals).unwrap();
        let out = war_redistribute(&curve, &m).unwrap();
        // Each new node must sit on some chord of the old polygon.
        for i in 0..12 {
            let p = out.point(i);
            let mut on_segment = false;
            for j in 0..12 {
                let a = curve.point(j);
                let b = curve.point((j + 1) % 12);
                let ab = b - a;
                let t = (p - a).dot(ab) / ab.norm_sq();
                if (-1e-12..=1.0 + 1e-12).contains(&t) {
                    let closest = a + t.clamp(0.0, 1.0) * ab;
                    if (p - closest).norm() < 1e-12 {
                        on_segment = true;
                        break;
                    }
                }
            }
            assert!(on_segment, "node {i} left the old polygon");
        }
    }

    #[test]
    fn awar_fixed_point_on_circle() {
        let curve = regular_polygon(1.0, 64).unwrap();
        let kappa = discrete_curvature(&curve).unwrap();
        let params = MonitorParams::default();
        let step = awar_step(&curve, &kappa, &params).unwrap();
        // Chord lengths of the sampled polygon agree only to roundoff, so Q
        // sits within a few ulps of 1 rather than exactly at it.
        assert!((step.indicators.q - 1.0).abs() < 1e-12);
        assert!(step.indicators.c1 < 1e-10);
        for i in 0..64 {
            assert!((step.curve.point(i) - curve.point(i)).norm() < 1e-12);
        }
    }

    #[test]
    fn awar_zero_curvature_limit() {
        let curve = regular_polygon(1.0, 16).unwrap();
        let kappa = ScalarField::constant(0.0, 16).unwrap();
        let step = awar_step(&curve, &kappa, &MonitorParams::default()).unwrap();
        assert_eq!(step.model, MonitorModel::Linear);
        assert!(step.monitor.iter().all(|&v| v == 1.0));
        for i in 0..16 {
            assert!((step.curve.point(i) - curve.point(i)).norm() < 1e-13);
        }
    }

    #[test]
    fn periodic_cubic_reproduces_nodes_and_beats_chords() {
        let curve = regular_polygon(1.0, 24).unwrap();
        let knots = uniform_knots(24);
        let same = resample_curve(&curve, &knots, &knots[..24], ResampleScheme::PeriodicCubic)
            .unwrap();
        for i in 0..24 {
            assert!((same.point(i) - curve.point(i)).norm() < 1e-10);
        }
        // Midpoint parameters: the cubic should land much nearer the circle
        // than the chord midpoint does.
        let mids: Vec<f64> = (0..24).map(|j| (j as f64 + 0.5) / 24.0).collect();
        let lin = resample_curve(&curve, &knots, &mids, ResampleScheme::Linear).unwrap();
        let cub = resample_curve(&curve, &knots, &mids, ResampleScheme::PeriodicCubic).unwrap();
        let dev = |c: &NodalCurve| {
            c.points()
                .iter()
                .map(|p| (p.norm() - 1.0).abs())
                .fold(0.0, f64::max)
        };
        assert!(dev(&cub) < 0.1 * dev(&lin), "{} vs {}", dev(&cub), dev(&lin));
    }

    #[test]
    fn resample_state_interpolates_fields() {
        let curve = regular_polygon(1.0, 8).unwrap();
        let v = ScalarField::new((0..8).map(|i| i as f64).collect()).unwrap();
        let kappa = ScalarField::constant(-1.0, 8).unwrap();
        let state = GeometricState::new(curve, v, kappa).unwrap();
        let knots = uniform_knots(8);
        let mids: Vec<f64> = (0..8).map(|j| (j as f64 + 0.5) / 8.0).collect();
        let out = resample_state(&state, &knots, &mids).unwrap();
        assert!((out.v[0] - 0.5).abs() < 1e-14);
        // Last interval wraps: halfway between v_7 = 7 and v_0 = 0.
        assert!((out.v[7] - 3.5).abs() < 1e-14);
        assert!(out.kappa.iter().all(|&k| (k + 1.0).abs() < 1e-14));
    }
}
