//! Auxiliary-variable energy correction: after each provisional time step the
//! auxiliary energy decays by the measured dissipation, and the state is
//! rescaled so its energy tracks the auxiliary variable. The update satisfies
//! r_new - r_old = -dt (r_new / w_c) d exactly, so monotone decay holds for
//! any step size.

use crate::error::{Error, Result};
use crate::grid::{dissipation, willmore_energy, GeometricState, NodalCurve};

/// Auxiliary energy variable plus the corrector's fixed parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyCorrectorState {
    /// Auxiliary energy r, positive and nonincreasing across steps.
    pub r: f64,
    /// Energy shift c >= 1 keeping the shifted energy strictly positive.
    pub c: f64,
    /// Smoothing exponent in the matching factor (default 5).
    pub r_exp: f64,
}

impl EnergyCorrectorState {
    /// Starts the corrector at the initial state: r = W(state) + c.
    pub fn init(state: &GeometricState, c: f64, r_exp: f64) -> Result<Self> {
        let out = EnergyCorrectorState {
            r: willmore_energy(&state.curve, &state.kappa)? + c,
            c,
            r_exp,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "energy shift must be >= 1, got {}",
                self.c
            )));
        }
        if !(self.r_exp > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "smoothing exponent must be positive, got {}",
                self.r_exp
            )));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::NonFinite {
                context: "auxiliary energy",
                node: 0,
            });
        }
        Ok(())
    }
}

/// Per-step corrector numbers, in the order they are computed.
#[derive(Clone, Copy, Debug)]
pub struct EcReport {
    /// Shifted energy of the provisional state.
    pub w_c: f64,
    /// Dissipation of the provisional velocity on the previous curve.
    pub dissipation: f64,
    /// Matching ratio r_new / w_c.
    pub eta: f64,
    /// Scaling factor 1 - (1 - eta)^r_exp.
    pub k_c: f64,
}

/// The scalar corrector update: decays r by the relative dissipated energy and
/// derives the matching factor. Pure in its inputs; `ec_step` wires it to the
/// discrete energy formulas.
pub fn corrector_update(
    r_prev: f64,
    w_c: f64,
    dissipation: f64,
    dt: f64,
    r_exp: f64,
) -> Result<(f64, EcReport)> {
    if !(w_c > 0.0) || !w_c.is_finite() || !dissipation.is_finite() || dissipation < 0.0 {
        return Err(Error::Precondition(format!(
            "corrector inputs out of range: w_c = {w_c}, dissipation = {dissipation}"
        )));
    }
    let r_new = r_prev / (1.0 + dt * dissipation / w_c);
    let eta = r_new / w_c;
    let base = 1.0 - eta;
    // Integral exponents use powi so a slightly negative base (eta just above
    // 1 after a step that gains energy headroom) stays well defined.
    let pow = if r_exp.fract() == 0.0 && r_exp.abs() <= i32::MAX as f64 {
        base.powi(r_exp as i32)
    } else {
        base.powf(r_exp)
    };
    let k_c = 1.0 - pow;
    if !r_new.is_finite() || !k_c.is_finite() {
        return Err(Error::NonFinite {
            context: "corrector update",
            node: 0,
        });
    }
    Ok((
        r_new,
        EcReport {
            w_c,
            dissipation,
            eta,
            k_c,
        },
    ))
}

/// One energy-correction pass: shifted energy of the provisional state,
/// dissipation of its velocity measured on the previous curve, auxiliary
/// decay, then a componentwise rescale of the whole state by the matching
/// factor. Returns the full report alongside the updated corrector.
pub fn ec_step_detailed(
    provisional: &GeometricState,
    prev_curve: &NodalCurve,
    state: &EnergyCorrectorState,
    dt: f64,
) -> Result<(GeometricState, EnergyCorrectorState, EcReport)> {
    state.validate()?;
    let w_c = willmore_energy(&provisional.curve, &provisional.kappa)? + state.c;
    let d = dissipation(prev_curve, &provisional.v)?;
    let (r_new, report) = corrector_update(state.r, w_c, d, dt, state.r_exp)?;
    let k_c = report.k_c;
    let scaled_points: Vec<_> = provisional
        .curve
        .points()
        .iter()
        .map(|p| *p * k_c)
        .collect();
    let scaled = GeometricState::new(
        NodalCurve::new(scaled_points)?,
        provisional.v.scaled(k_c)?,
        provisional.kappa.scaled(k_c)?,
    )?;
    Ok((
        scaled,
        EnergyCorrectorState {
            r: r_new,
            c: state.c,
            r_exp: state.r_exp,
        },
        report,
    ))
}

/// Convenience wrapper returning just the scaling factor.
pub fn ec_step(
    provisional: &GeometricState,
    prev_curve: &NodalCurve,
    state: &EnergyCorrectorState,
    dt: f64,
) -> Result<(GeometricState, EnergyCorrectorState, f64)> {
    let (scaled, next, report) = ec_step_detailed(provisional, prev_curve, state, dt)?;
    Ok((scaled, next, report.k_c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{discrete_curvature, regular_polygon, ScalarField, Vec2};

    fn polygon_state(r: f64, m: usize) -> GeometricState {
        let curve = regular_polygon(r, m).unwrap();
        let kappa = discrete_curvature(&curve).unwrap();
        let v = ScalarField::constant(1.0, m).unwrap();
        GeometricState::new(curve, v, kappa).unwrap()
    }

    #[test]
    fn update_matches_hand_computation() {
        let (r_new, rep) = corrector_update(2.0, 2.0, 1.0, 0.1, 5.0).unwrap();
        assert!((r_new - 2.0 / 1.05).abs() < 1e-15);
        assert!((rep.eta - (1.0 / 1.05)).abs() < 1e-15);
        let expected_kc = 1.0 - (1.0_f64 / 21.0).powi(5);
        assert!(
            (rep.k_c - expected_kc).abs() < 1e-15,
            "k_c = {}, expected {}",
            rep.k_c,
            expected_kc
        );
    }

    #[test]
    fn zero_dissipation_preserves_auxiliary_energy() {
        let (r_new, _) = corrector_update(3.5, 2.0, 0.0, 0.1, 5.0).unwrap();
        assert_eq!(r_new, 3.5);
    }

    #[test]
    fn exact_match_gives_unit_factor() {
        let (r_new, rep) = corrector_update(2.0, 2.0, 0.0, 0.1, 5.0).unwrap();
        assert_eq!(r_new, 2.0);
        assert_eq!(rep.eta, 1.0);
        assert_eq!(rep.k_c, 1.0, "eta = 1 must give exactly k_c = 1");
    }

    #[test]
    fn decay_identity_holds_exactly() {
        let cases = [
            (2.0, 2.0, 1.0, 0.1, 5.0),
            (3.2, 4.15, 0.37, 1e-3, 5.0),
            (10.0, 4.0, 25.0, 0.5, 3.0),
            (1.0, 1.0, 1e-6, 1e-4, 2.5),
        ];
        for (r0, w_c, d, dt, rexp) in cases {
            let (r1, _) = corrector_update(r0, w_c, d, dt, rexp).unwrap();
            // Difference form, measured against the energy scale: the
            // difference itself can be orders of magnitude below one ulp of
            // r0, so a tolerance relative to the difference would amplify the
            // single rounding in r1 by w_c / (dt d).
            let lhs = r1 - r0;
            let rhs = -dt * (r1 / w_c) * d;
            assert!(
                (lhs - rhs).abs() <= 1e-12 * r0.max(1.0),
                "identity violated: lhs {lhs}, rhs {rhs}"
            );
            // Equivalent product form is well conditioned at any dissipation.
            let prod_lhs = r1 * (w_c + dt * d);
            let prod_rhs = r0 * w_c;
            assert!(
                (prod_lhs - prod_rhs).abs() <= 1e-12 * prod_rhs.abs(),
                "product form violated: {prod_lhs} vs {prod_rhs}"
            );
            assert!(r1 <= r0, "auxiliary energy must not grow");
            assert!(r1 > 0.0);
        }
    }

    #[test]
    fn auxiliary_energy_decreases_monotonically_over_many_updates() {
        let mut r = 5.0;
        let mut seed = 0x9e3779b97f4a7c15u64;
        for _ in 0..50 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let d = (seed >> 11) as f64 / (1u64 << 53) as f64 * 10.0;
            let (r_next, _) = corrector_update(r, 3.0, d, 0.05, 5.0).unwrap();
            assert!(r_next <= r && r_next > 0.0);
            r = r_next;
        }
    }

    #[test]
    fn dissipation_is_measured_on_previous_curve() {
        let m = 100;
        let provisional = polygon_state(1.0, m);
        let prev = regular_polygon(2.0, m).unwrap();
        let (_, _, rep) = ec_step_detailed(
            &provisional,
            &prev,
            &EnergyCorrectorState {
                r: 5.0,
                c: 1.0,
                r_exp: 5.0,
            },
            0.01,
        )
        .unwrap();
        // V = 1 everywhere, so d = M * r_prev * sin(2 pi / M) for radius 2,
        // not radius 1.
        let h = 1.0 / m as f64;
        let expected = m as f64 * 2.0 * (2.0 * std::f64::consts::PI * h).sin();
        assert!(
            (rep.dissipation - expected).abs() < 1e-12 * expected,
            "d = {}, expected {}",
            rep.dissipation,
            expected
        );
    }

    #[test]
    fn scaled_state_is_componentwise_multiple() {
        let provisional = polygon_state(1.0, 32);
        let prev = regular_polygon(1.0, 32).unwrap();
        let ec = EnergyCorrectorState {
            r: 2.0,
            c: 1.0,
            r_exp: 5.0,
        };
        let (scaled, next, rep) = ec_step_detailed(&provisional, &prev, &ec, 0.1).unwrap();
        assert!(rep.k_c > 0.0 && rep.k_c <= 1.0);
        assert!(next.r <= ec.r);
        for i in 0..32 {
            let want = provisional.curve.point(i) * rep.k_c;
            let got = scaled.curve.point(i);
            assert!((want - got).norm() < 1e-15);
            assert!((scaled.v[i] - rep.k_c * provisional.v[i]).abs() < 1e-15);
            assert!((scaled.kappa[i] - rep.k_c * provisional.kappa[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn energy_scales_quadratically_in_curvature_and_cubically_overall() {
        let state = polygon_state(1.0, 48);
        let w = willmore_energy(&state.curve, &state.kappa).unwrap();
        for k in [0.5, 2.0] {
            // Scaling curvature alone is quadratic.
            let kappa_scaled = state.kappa.scaled(k).unwrap();
            let w_kappa = willmore_energy(&state.curve, &kappa_scaled).unwrap();
            assert!(
                (w_kappa - k * k * w).abs() < 1e-12 * w.abs() * k * k,
                "curvature scaling k = {k}"
            );
            // Scaling positions too adds one more power through the metric.
            let pts: Vec<Vec2> = state.curve.points().iter().map(|p| *p * k).collect();
            let curve_scaled = crate::grid::NodalCurve::new(pts).unwrap();
            let w_full = willmore_energy(&curve_scaled, &kappa_scaled).unwrap();
            assert!(
                (w_full - k * k * k * w).abs() < 1e-12 * w.abs() * k * k * k,
                "full scaling k = {k}: {} vs {}",
                w_full,
                k * k * k * w
            );
        }
    }

    #[test]
    fn init_enforces_parameter_ranges() {
        let state = polygon_state(1.0, 16);
        assert!(EnergyCorrectorState::init(&state, 1.0, 5.0).is_ok());
        assert!(EnergyCorrectorState::init(&state, 0.5, 5.0).is_err());
        assert!(EnergyCorrectorState::init(&state, 1.0, 0.0).is_err());
        let ec = EnergyCorrectorState::init(&state, 1.0, 5.0).unwrap();
        let w = willmore_energy(&state.curve, &state.kappa).unwrap();
        assert!((ec.r - (w + 1.0)).abs() < 1e-14);
    }
}
