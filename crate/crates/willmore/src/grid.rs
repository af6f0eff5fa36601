//! Periodic grid primitives: nodal curves, scalar fields, difference stencils,
//! and the discrete geometric quantities built from them.
//!
//! A closed curve is sampled at the uniform parameter grid rho_i = i/M with
//! spacing h = 1/M and periodic wrap X_{i+M} = X_i. Orientation is
//! counterclockwise; the unit normal n = R tau (R = rotation by +90 degrees)
//! then points into the enclosed region, and the discrete curvature of a
//! counterclockwise convex curve is negative (unit circle: kappa ~ -1).

use crate::error::{Error, Result};
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

/// Relative floor for chord lengths and parameter derivatives: anything below
/// `DEGENERACY_REL_TOL * total_length` counts as a collapsed mesh.
pub const DEGENERACY_REL_TOL: f64 = 1e-14;

/// Point or vector in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Counterclockwise quarter turn: (x, y) -> (-y, x).
    #[inline]
    pub fn rot90(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

/// Periodic nodal scalar field (one value per grid node).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    /// Validates length (>= 4) and finiteness.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::GridTooSmall { m: values.len() });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "scalar field",
                    node: i,
                });
            }
        }
        Ok(ScalarField { values })
    }

    pub fn constant(value: f64, m: usize) -> Result<Self> {
        ScalarField::new(vec![value; m])
    }

    /// Internal constructor for values already known finite.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(values.len() >= 4 && values.iter().all(|v| v.is_finite()));
        ScalarField { values }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.values.iter()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Componentwise scaling; errors if the factor is not finite.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        ScalarField::new(self.values.iter().map(|v| v * k).collect())
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Closed polygonal curve on the uniform periodic parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalCurve {
    points: Vec<Vec2>,
    h: f64,
}

impl NodalCurve {
    /// Validates node count, finiteness, and that no chord has collapsed
    /// relative to the total length.
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        let m = points.len();
        if m < 4 {
            return Err(Error::GridTooSmall { m });
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite {
                    context: "curve node",
                    node: i,
                });
            }
        }
        let mut total = 0.0;
        for i in 0..m {
            total += (points[(i + 1) % m] - points[i]).norm();
        }
        let threshold = DEGENERACY_REL_TOL * total;
        for i in 0..m {
            let chord = (points[(i + 1) % m] - points[i]).norm();
            if chord < threshold {
                return Err(Error::DegenerateGeometry {
                    node: i,
                    quantity: "chord length",
                    value: chord,
                    threshold,
                });
            }
        }
        let h = 1.0 / m as f64;
        Ok(NodalCurve { points, h })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.points.len()
    }

    /// Parameter spacing h = 1/M.
    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    #[inline]
    pub fn point(&self, i: usize) -> Vec2 {
        self.points[i]
    }

    /// Total chord length of the closed polygon.
    pub fn total_length(&self) -> f64 {
        let m = self.m();
        (0..m)
            .map(|i| (self.points[(i + 1) % m] - self.points[i]).norm())
            .sum()
    }
}

impl Index<usize> for NodalCurve {
    type Output = Vec2;
    #[inline]
    fn index(&self, i: usize) -> &Vec2 {
        &self.points[i]
    }
}

/// Curve together with its nodal normal velocity and curvature.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricState {
    pub curve: NodalCurve,
    pub v: ScalarField,
    pub kappa: ScalarField,
}

impl GeometricState {
    pub fn new(curve: NodalCurve, v: ScalarField, kappa: ScalarField) -> Result<Self> {
        if v.len() != curve.m() {
            return Err(Error::ShapeMismatch {
                left: curve.m(),
                right: v.len(),
            });
        }
        if kappa.len() != curve.m() {
            return Err(Error::ShapeMismatch {
                left: curve.m(),
                right: kappa.len(),
            });
        }
        Ok(GeometricState { curve, v, kappa })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.curve.m()
    }
}

/// Difference stencil selector on the periodic grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffKind {
    /// (f_{i+1} - f_i) / h
    Forward,
    /// (f_i - f_{i-1}) / h
    Backward,
    /// (f_{i+1} - f_{i-1}) / (2h)
    Centered,
    /// (f_{i+1} - 2 f_i + f_{i-1}) / h^2
    Second,
}

#[inline]
fn stencil(fm: f64, f0: f64, fp: f64, h: f64, kind: DiffKind) -> f64 {
    match kind {
        DiffKind::Forward => (fp - f0) / h,
        DiffKind::Backward => (f0 - fm) / h,
        DiffKind::Centered => (fp - fm) / (2.0 * h),
        DiffKind::Second => (fp - 2.0 * f0 + fm) / (h * h),
    }
}

/// Periodic finite difference of a scalar field (h = 1/len).
pub fn diff_scalar(f: &ScalarField, kind: DiffKind) -> ScalarField {
    let m = f.len();
    let h = 1.0 / m as f64;
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let ip = (i + 1) % m;
        let im = (i + m - 1) % m;
        out.push(stencil(f[im], f[i], f[ip], h, kind));
    }
    ScalarField::from_raw(out)
}

/// Periodic finite difference of a point sequence, componentwise (h = 1/len).
pub fn diff_points(points: &[Vec2], kind: DiffKind) -> Vec<Vec2> {
    let m = points.len();
    let h = 1.0 / m as f64;
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let ip = (i + 1) % m;
        let im = (i + m - 1) % m;
        out.push(Vec2::new(
            stencil(points[im].x, points[i].x, points[ip].x, h, kind),
            stencil(points[im].y, points[i].y, points[ip].y, h, kind),
        ));
    }
    out
}

/// Chord lengths Delta s_j = |X_{j+1} - X_j|, their running sum, and the total.
#[derive(Clone, Debug)]
pub struct SegmentGeometry {
    /// Delta s_j for j = 0..M (segment j joins node j to node j+1).
    pub delta_s: Vec<f64>,
    /// Cumulative lengths s_0 = 0, ..., s_M = total (length M+1).
    pub cumulative: Vec<f64>,
    pub total: f64,
}

/// Computes chord lengths and cumulative arc length of the polygon.
pub fn segment_lengths(curve: &NodalCurve) -> Result<SegmentGeometry> {
    let m = curve.m();
    let mut delta_s = Vec::with_capacity(m);
    let mut cumulative = Vec::with_capacity(m + 1);
    cumulative.push(0.0);
    let mut run = 0.0;
    for i in 0..m {
        let ds = (curve[(i + 1) % m] - curve[i]).norm();
        delta_s.push(ds);
        run += ds;
        cumulative.push(run);
    }
    let threshold = DEGENERACY_REL_TOL * run;
    if let Some(i) = delta_s.iter().position(|&ds| ds < threshold) {
        return Err(Error::DegenerateGeometry {
            node: i,
            quantity: "chord length",
            value: delta_s[i],
            threshold,
        });
    }
    Ok(SegmentGeometry {
        delta_s,
        cumulative,
        total: run,
    })
}

/// Unit tangents tau_i = delta X_i / |delta X_i| (centered difference) and
/// inward normals n_i = R tau_i. Errors when |delta X_i| collapses.
pub fn tangent_normal(curve: &NodalCurve) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
    let m = curve.m();
    let dx = diff_points(curve.points(), DiffKind::Centered);
    let threshold = DEGENERACY_REL_TOL * curve.total_length();
    let mut tangents = Vec::with_capacity(m);
    let mut normals = Vec::with_capacity(m);
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
        let tau = *d * (1.0 / len);
        tangents.push(tau);
        normals.push(tau.rot90());
    }
    Ok((tangents, normals))
}

/// Discrete curvature kappa_i = -(delta2 X_i . n_i) / |delta X_i|^2.
///
/// This is the normal projection of the curvature vector identity
/// kappa n = -delta2 X / |delta X|^2 + (tau . delta2 X) / |delta X|^3 delta X;
/// the tangential part drops out because delta X . n = 0.
pub fn discrete_curvature(curve: &NodalCurve) -> Result<ScalarField> {
    let m = curve.m();
    let dx = diff_points(curve.points(), DiffKind::Centered);
    let d2x = diff_points(curve.points(), DiffKind::Second);
    let (_, normals) = tangent_normal(curve)?;
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        out.push(-d2x[i].dot(normals[i]) / dx[i].norm_sq());
    }
    ScalarField::new(out)
}

/// Difference quotient with respect to arc length:
/// (f_{i+1} - f_{i-1}) / (Delta s_i + Delta s_{i-1}).
pub fn arc_derivative(f: &ScalarField, curve: &NodalCurve) -> Result<ScalarField> {
    let m = curve.m();
    if f.len() != m {
        return Err(Error::ShapeMismatch {
            left: f.len(),
            right: m,
        });
    }
    let seg = segment_lengths(curve)?;
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let ip = (i + 1) % m;
        let im = (i + m - 1) % m;
        out.push((f[ip] - f[im]) / (seg.delta_s[i] + seg.delta_s[im]));
    }
    ScalarField::new(out)
}

/// Normal velocity of Willmore flow evaluated from the current geometry:
/// V_i = delta2 kappa_i / |delta X_i|^2
///       - delta kappa_i (delta X_i . delta2 X_i) / |delta X_i|^4
///       + kappa_i^3 / 2.
pub fn discrete_velocity(curve: &NodalCurve, kappa: &ScalarField) -> Result<ScalarField> {
    let m = curve.m();
    if kappa.len() != m {
        return Err(Error::ShapeMismatch {
            left: kappa.len(),
            right: m,
        });
    }
    let dx = diff_points(curve.points(), DiffKind::Centered);
    let d2x = diff_points(curve.points(), DiffKind::Second);
    let dk = diff_scalar(kappa, DiffKind::Centered);
    let d2k = diff_scalar(kappa, DiffKind::Second);
    let threshold = DEGENERACY_REL_TOL * curve.total_length();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let g1 = dx[i].norm();
        if g1 < threshold {
            return Err(Error::DegenerateGeometry {
                node: i,
                quantity: "parameter derivative",
                value: g1,
                threshold,
            });
        }
        let g2 = g1 * g1;
        let g4 = g2 * g2;
        let k = kappa[i];
        out.push(d2k[i] / g2 - dk[i] * dx[i].dot(d2x[i]) / g4 + 0.5 * k * k * k);
    }
    ScalarField::new(out)
}

/// Discrete Willmore energy W = (h/2) sum_i kappa_i^2 |delta X_i|.
pub fn willmore_energy(curve: &NodalCurve, kappa: &ScalarField) -> Result<f64> {
    let m = curve.m();
    if kappa.len() != m {
        return Err(Error::ShapeMismatch {
            left: kappa.len(),
            right: m,
        });
    }
    let dx = diff_points(curve.points(), DiffKind::Centered);
    let mut sum = 0.0;
    for i in 0..m {
        sum += kappa[i] * kappa[i] * dx[i].norm();
    }
    Ok(0.5 * curve.h() * sum)
}

/// Discrete dissipation functional D = h sum_i V_i^2 |delta X_i|.
pub fn dissipation(curve: &NodalCurve, v: &ScalarField) -> Result<f64> {
    let m = curve.m();
    if v.len() != m {
        return Err(Error::ShapeMismatch {
            left: v.len(),
            right: m,
        });
    }
    let dx = diff_points(curve.points(), DiffKind::Centered);
    let mut sum = 0.0;
    for i in 0..m {
        sum += v[i] * v[i] * dx[i].norm();
    }
    Ok(curve.h() * sum)
}

/// Regular M-gon inscribed in the circle of radius `r`, counterclockwise.
pub fn regular_polygon(r: f64, m: usize) -> Result<NodalCurve> {
    let points = (0..m)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            Vec2::new(r * theta.cos(), r * theta.sin())
        })
        .collect();
    NodalCurve::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

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
    fn stencils_on_sine_samples() {
        // f = sin(2 pi rho) sampled at M = 4: (0, 1, 0, -1), h = 1/4.
        let f = ScalarField::new(vec![0.0, 1.0, 0.0, -1.0]).unwrap();
        assert_eq!(diff_scalar(&f, DiffKind::Forward)[0], 4.0);
        assert_eq!(diff_scalar(&f, DiffKind::Backward)[0], 4.0);
        assert_eq!(diff_scalar(&f, DiffKind::Centered)[0], 4.0);
        assert_eq!(diff_scalar(&f, DiffKind::Second)[0], 0.0);
    }

    #[test]
    fn stencils_annihilate_constants() {
        let f = ScalarField::constant(3.5, 7).unwrap();
        for kind in [
            DiffKind::Forward,
            DiffKind::Backward,
            DiffKind::Centered,
            DiffKind::Second,
        ] {
            let d = diff_scalar(&f, kind);
            assert!(d.iter().all(|&v| v == 0.0), "{kind:?} not exact on constants");
        }
    }

    #[test]
    fn square_frame_at_first_node() {
        let (tau, n) = tangent_normal(&unit_square()).unwrap();
        assert!((tau[0] - Vec2::new(0.0, 1.0)).norm() < 1e-15);
        assert!((n[0] - Vec2::new(-1.0, 0.0)).norm() < 1e-15, "normal must point inward");
    }

    #[test]
    fn polygon_curvature_matches_closed_form() {
        // Uniform M-gon on the unit circle: kappa_i = -1 / cos^2(pi h).
        for m in [8usize, 16, 100] {
            let h = 1.0 / m as f64;
            let expected = -1.0 / (PI * h).cos().powi(2);
            let kappa = discrete_curvature(&regular_polygon(1.0, m).unwrap()).unwrap();
            for i in 0..m {
                assert!(
                    (kappa[i] - expected).abs() <= 1e-12 * expected.abs(),
                    "M = {m}, node {i}: {} vs {expected}",
                    kappa[i]
                );
            }
        }
        let kappa = discrete_curvature(&regular_polygon(1.0, 100).unwrap()).unwrap();
        assert!((kappa[0] + 1.000987).abs() < 5e-6);
    }

    #[test]
    fn curvature_scales_inversely_with_radius() {
        let k1 = discrete_curvature(&regular_polygon(1.0, 64).unwrap()).unwrap();
        let k2 = discrete_curvature(&regular_polygon(2.0, 64).unwrap()).unwrap();
        for i in 0..64 {
            assert!((k1[i] - 2.0 * k2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_second_order_on_ellipse() {
        // Exact curvature of (2 cos t, sin t), t = 2 pi rho, counterclockwise:
        // kappa = -2 / (4 sin^2 t + cos^2 t)^{3/2}.
        let run = |m: usize| -> f64 {
            let points = (0..m)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / m as f64;
                    Vec2::new(2.0 * t.cos(), t.sin())
                })
                .collect();
            let curve = NodalCurve::new(points).unwrap();
            let kappa = discrete_curvature(&curve).unwrap();
            (0..m)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / m as f64;
                    let exact = -2.0 / (4.0 * t.sin().powi(2) + t.cos().powi(2)).powf(1.5);
                    (kappa[i] - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = run(64) / run(128);
        assert!(
            (3.5..4.5).contains(&ratio),
            "curvature error should drop 4x per mesh halving, got {ratio}"
        );
    }

    #[test]
    fn square_segment_lengths() {
        let seg = segment_lengths(&unit_square()).unwrap();
        let s = 2f64.sqrt();
        for ds in &seg.delta_s {
            assert!((ds - s).abs() < 1e-15);
        }
        assert!((seg.total - 4.0 * s).abs() < 1e-14);
        assert_eq!(seg.cumulative.len(), 5);
        assert!((seg.cumulative[4] - seg.total).abs() < 1e-14);
        assert_eq!(seg.cumulative[0], 0.0);
    }

    #[test]
    fn arc_derivative_hand_value() {
        // Square with Delta s = sqrt(2) everywhere, f = (0, 1, 0, -1):
        // (f_1 - f_3) / (2 sqrt(2)) = 1/sqrt(2).
        let f = ScalarField::new(vec![0.0, 1.0, 0.0, -1.0]).unwrap();
        let d = arc_derivative(&f, &unit_square()).unwrap();
        assert!((d[0] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn energy_of_unit_polygon() {
        // W = (M/2) cos^{-4}(pi h) sin(2 pi h), approaching pi as M grows.
        let m = 100usize;
        let h = 1.0 / m as f64;
        let curve = regular_polygon(1.0, m).unwrap();
        let kappa = discrete_curvature(&curve).unwrap();
        let w = willmore_energy(&curve, &kappa).unwrap();
        let closed_form = 0.5 * m as f64 * (2.0 * PI * h).sin() / (PI * h).cos().powi(4);
        assert!((w - closed_form).abs() < 1e-12 * closed_form);
        assert!((w - 3.14573).abs() < 1e-5);
        assert!((w - PI).abs() < 5e-3);
    }

    #[test]
    fn dissipation_of_unit_velocity() {
        // V = 1 on the unit M-gon: D = M sin(2 pi h), approaching 2 pi.
        let m = 100usize;
        let h = 1.0 / m as f64;
        let curve = regular_polygon(1.0, m).unwrap();
        let v = ScalarField::constant(1.0, m).unwrap();
        let d = dissipation(&curve, &v).unwrap();
        let closed_form = m as f64 * (2.0 * PI * h).sin();
        assert!((d - closed_form).abs() < 1e-12 * closed_form);
        assert!((d - 6.27905).abs() < 1e-5);
        assert!((d - 2.0 * PI).abs() < 5e-3);
    }

    #[test]
    fn velocity_on_polygon_is_cubic_term_only() {
        // Constant curvature kills both difference terms: V = kappa^3 / 2.
        let curve = regular_polygon(1.0, 32).unwrap();
        let kappa = discrete_curvature(&curve).unwrap();
        let v = discrete_velocity(&curve, &kappa).unwrap();
        let expected = 0.5 * kappa[0].powi(3);
        for i in 0..32 {
            assert!((v[i] - expected).abs() < 1e-10, "node {i}: {} vs {expected}", v[i]);
        }
    }

    #[test]
    fn degenerate_geometry_is_rejected() {
        // Coincident consecutive nodes fail construction.
        let r = NodalCurve::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ]);
        assert!(matches!(r, Err(Error::DegenerateGeometry { .. })));

        // Fold-back: X_2 = X_0 collapses the centered difference at node 1.
        let folded = NodalCurve::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(-1.0, 0.0),
        ])
        .unwrap();
        assert!(matches!(
            tangent_normal(&folded),
            Err(Error::DegenerateGeometry { .. })
        ));
    }

    #[test]
    fn small_grids_and_shape_mismatches_are_rejected() {
        assert!(matches!(
            NodalCurve::new(vec![Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]),
            Err(Error::GridTooSmall { m: 3 })
        ));
        assert!(matches!(
            ScalarField::new(vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFinite { node: 1, .. })
        ));
        let f = ScalarField::constant(1.0, 5).unwrap();
        assert!(matches!(
            arc_derivative(&f, &unit_square()),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
