//! Switching thrust governor.
//!
//! The governor subtracts an override `u ≥ 0` from the power reference. Its
//! PI loop is closed only while the estimated thrust exceeds the bound or
//! while the accumulated thrust error is still negative, so the override
//! unwinds smoothly instead of chattering on the boundary.

mod analysis;
pub mod bench;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analysis::{loop_analysis, log_grid, FreqPoint, LoopAnalysis};

/// Published identification and design values, in SI units (N per W, 1/s).
pub mod reference {
    use super::PlantModel;

    /// Gain quoted with the identification result.
    pub const A_IDENTIFIED: f64 = 0.068;
    /// Gain used in the controller design and Bode plots.
    pub const A_DESIGN: f64 = 0.067625;
    pub const B: f64 = 0.625;
    pub const ZETA: f64 = 0.7;
    pub const KI: f64 = 2.947;
    pub const OMEGA_N: f64 = 0.446;
    pub const PHASE_MARGIN_DEG: f64 = 65.2;
    pub const CROSSOVER_HZ: f64 = 0.047;

    pub const DESIGN_MODEL: PlantModel = PlantModel { a: A_DESIGN, b: B };

    /// Thrust reference [kN], thrust reduction [%], max power loss [MW],
    /// power reduction [%] from a large-eddy simulation under uniform inflow.
    /// Kept as trend anchors; the reduced-order plant does not reproduce them.
    pub const POWER_LOSS_TABLE: [(f64, f64, f64, f64); 4] = [
        (500.0, 2.35, 0.0750, 2.1),
        (475.0, 7.23, 0.2175, 6.2),
        (450.0, 12.12, 0.3826, 10.9),
        (425.0, 16.99, 0.5382, 15.4),
    ];
}

/// First-order demanded-power-to-thrust model `A / (s + B)` (N/(W·s), 1/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    pub a: f64,
    pub b: f64,
}

impl PlantModel {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let m = Self { a, b };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::param("a", format!("plant gain must be > 0, got {}", self.a)));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::param("b", format!("plant pole must be > 0, got {}", self.b)));
        }
        Ok(())
    }

    pub fn dc_gain(&self) -> f64 {
        self.a / self.b
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchLaw {
    /// Closed while `e < 0` or `e_i < 0`.
    #[default]
    Integral,
    /// Closed only while `e < 0`; kept for comparison.
    Sign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GovernorConfig {
    pub enabled: bool,
    /// Thrust bound, N.
    pub f_t_ref: f64,
    /// W/N.
    pub kp: f64,
    /// W/(N·s).
    pub ki: f64,
    /// Override ceiling, W; `None` means `P_ref − p_min`.
    pub u_max: Option<f64>,
    pub p_min: f64,
    /// Added to the bound to cancel a known estimation bias, N.
    pub thrust_ref_offset: f64,
    pub switch_law: SwitchLaw,
}

impl Default for GovernorConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            f_t_ref: f64::INFINITY,
            kp: 0.0,
            ki: reference::KI,
            u_max: None,
            p_min: 1.0e6,
            thrust_ref_offset: 0.0,
            switch_law: SwitchLaw::Integral,
        }
    }
}

impl GovernorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_t_ref > 0.0) {
            return Err(Error::param("f_t_ref", format!("must be > 0, got {}", self.f_t_ref)));
        }
        if !(self.ki > 0.0 && self.ki.is_finite()) {
            return Err(Error::param("ki", format!("must be > 0, got {}", self.ki)));
        }
        if !(self.kp >= 0.0 && self.kp.is_finite()) {
            return Err(Error::param("kp", format!("must be >= 0, got {}", self.kp)));
        }
        if let Some(u) = self.u_max {
            if !(u >= 0.0 && u.is_finite()) {
                return Err(Error::param("u_max", format!("must be >= 0, got {u}")));
            }
        }
        if !(self.p_min >= 0.0 && self.p_min.is_finite()) {
            return Err(Error::param("p_min", "must be >= 0"));
        }
        if !self.thrust_ref_offset.is_finite() {
            return Err(Error::param("thrust_ref_offset", "must be finite"));
        }
        Ok(())
    }

    pub fn effective_u_max(&self, p_ref: f64) -> f64 {
        self.u_max.unwrap_or(p_ref - self.p_min).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GovernorState {
    /// Switching integral of the thrust error, N·s (held ≤ 0).
    pub e_i: f64,
    /// PI integrator of the switched error, N·s.
    pub integral: f64,
    /// Current override, W.
    pub u: f64,
    pub closed: bool,
    pub active: bool,
}

/// Whether the mode switch closes the thrust loop.
pub fn switch_closed(law: SwitchLaw, e: f64, e_i: f64) -> bool {
    match law {
        SwitchLaw::Integral => e < 0.0 || e_i < 0.0,
        SwitchLaw::Sign => e < 0.0,
    }
}

/// The switched error: `e` when the loop is closed, otherwise zero.
pub fn switch_error(e: f64, e_i: f64) -> f64 {
    switch_error_with(SwitchLaw::Integral, e, e_i)
}

pub fn switch_error_with(law: SwitchLaw, e: f64, e_i: f64) -> f64 {
    if switch_closed(law, e, e_i) {
        e
    } else {
        0.0
    }
}

/// One governor step. Returns the demanded power `P_ref − u` and the new state.
pub fn governor_update(
    config: &GovernorConfig,
    state: &GovernorState,
    f_hat: f64,
    p_ref: f64,
    dt: f64,
) -> Result<(f64, GovernorState)> {
    if !f_hat.is_finite() || !p_ref.is_finite() {
        return Err(Error::NonFinite {
            step: 0,
            t: f64::NAN,
            signal: if f_hat.is_finite() { "p_ref" } else { "f_hat" },
        });
    }
    let e = config.f_t_ref + config.thrust_ref_offset - f_hat;
    let closed = switch_closed(config.switch_law, e, state.e_i);
    let e_sw = if closed { e } else { 0.0 };

    let e_i = match config.switch_law {
        SwitchLaw::Integral => (state.e_i + e_sw * dt).min(0.0),
        SwitchLaw::Sign => 0.0,
    };

    let u_max = config.effective_u_max(p_ref);
    let trial = state.integral + e_sw * dt;
    let u_trial = -(config.kp * e_sw + config.ki * trial);
    // stop integrating at the value that just saturates u
    let mut integral = if u_trial > u_max && e_sw < 0.0 {
        -(u_max + config.kp * e_sw) / config.ki
    } else {
        trial
    };
    integral = integral.clamp(-u_max / config.ki, 0.0);
    // An open switch disconnects K(s). Under the integral law the PI integral
    // is already zero by then (it never falls below e_i), so this only
    // changes the sign-switch baseline.
    if !closed {
        integral = 0.0;
    }

    let mut u = (-(config.kp * e_sw + config.ki * integral)).clamp(0.0, u_max);
    if u == 0.0 {
        u = 0.0;
    }
    let next = GovernorState {
        e_i,
        integral,
        u,
        closed,
        active: e_sw != 0.0 || u > 0.0,
    };
    Ok((p_ref - u, next))
}

/// Pole placement of `s² + (B + K_P A)s + K_I A` onto `s² + 2ζω_n s + ω_n²`.
/// Returns `(ω_n, K_I)`.
pub fn tune_pi(model: &PlantModel, zeta: f64, kp: f64) -> Result<(f64, f64)> {
    model.validate()?;
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(Error::param("zeta", format!("must be > 0, got {zeta}")));
    }
    if !(kp >= 0.0 && kp.is_finite()) {
        return Err(Error::param("kp", format!("must be >= 0, got {kp}")));
    }
    let omega_n = (model.b + kp * model.a) / (2.0 * zeta);
    Ok((omega_n, omega_n * omega_n / model.a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn switch_error_cases() {
        assert_eq!(switch_error(-10e3, 0.0), -10e3);
        assert_eq!(switch_error(5e3, -2e3), 5e3);
        assert_eq!(switch_error(5e3, 3e3), 0.0);
        assert_eq!(switch_error(0.0, 0.0), 0.0);
        assert_eq!(switch_error_with(SwitchLaw::Sign, 5e3, -2e3), 0.0);
        assert_eq!(switch_error_with(SwitchLaw::Sign, -1.0, 0.0), -1.0);
    }

    fn cfg(bound: f64) -> GovernorConfig {
        GovernorConfig {
            f_t_ref: bound,
            ..Default::default()
        }
    }

    #[test]
    fn passive_below_bound() {
        let c = cfg(8e5);
        let mut st = GovernorState::default();
        for k in 0..10_000 {
            let p_ref = 4e6 + (k as f64 * 0.01).sin() * 1e5;
            let f_hat = 7.9e5 - (k as f64 * 0.03).cos().abs() * 1e5;
            let (p_dem, next) = governor_update(&c, &st, f_hat, p_ref, 0.01).unwrap();
            assert_eq!(p_dem.to_bits(), p_ref.to_bits());
            assert_eq!(next.u.to_bits(), 0f64.to_bits());
            assert!(!next.active);
            st = next;
        }
    }

    #[test]
    fn single_integral_step() {
        let c = GovernorConfig { kp: 0.0, ki: 2.947, ..cfg(8e5) };
        let (p_dem, st) = governor_update(&c, &GovernorState::default(), 8.5e5, 4e6, 0.01).unwrap();
        assert_relative_eq!(st.u, 2.947 * 5e4 * 0.01, max_relative = 1e-12);
        assert_relative_eq!(p_dem, 4e6 - 1473.5, max_relative = 1e-12);
        assert!(st.active && st.closed);
        assert!(st.e_i < 0.0);
    }

    #[test]
    fn unwinds_and_reopens() {
        let c = cfg(8e5);
        let mut st = GovernorState::default();
        for _ in 0..500 {
            st = governor_update(&c, &st, 8.5e5, 4e6, 0.01).unwrap().1;
        }
        assert!(st.u > 0.0);
        // below bound: stays closed while e_i < 0, override shrinks
        let (_, s1) = governor_update(&c, &st, 7.5e5, 4e6, 0.01).unwrap();
        assert!(s1.closed && s1.u < st.u);
        st = s1;
        for _ in 0..10_000 {
            st = governor_update(&c, &st, 7.5e5, 4e6, 0.01).unwrap().1;
        }
        assert!(!st.closed && !st.active);
        assert_eq!(st.u, 0.0);
        assert_eq!(st.e_i, 0.0);
    }

    #[test]
    fn override_saturates_without_windup() {
        let c = GovernorConfig { u_max: Some(1e5), ..cfg(8e5) };
        let mut st = GovernorState::default();
        for _ in 0..100_000 {
            st = governor_update(&c, &st, 9e5, 4e6, 0.01).unwrap().1;
            assert!(st.u <= 1e5);
        }
        assert_eq!(st.u, 1e5);
        // leaves saturation on the first step the error reverses
        let (_, s1) = governor_update(&c, &st, 7.9e5, 4e6, 0.01).unwrap();
        assert!(s1.u < 1e5);
    }

    #[test]
    fn tune_reproduces_design() {
        let (wn, ki) = tune_pi(&reference::DESIGN_MODEL, 0.7, 0.0).unwrap();
        assert_relative_eq!(wn, 0.446, epsilon = 1e-3);
        assert_relative_eq!(ki, 2.947, epsilon = 5e-3);
    }

    #[test]
    fn tune_unit_and_scaling() {
        let m = PlantModel::new(1.0, 1.0).unwrap();
        assert_eq!(tune_pi(&m, 0.5, 0.0).unwrap(), (1.0, 1.0));
        let (w1, k1) = tune_pi(&reference::DESIGN_MODEL, 0.7, 0.0).unwrap();
        let (w2, k2) = tune_pi(&reference::DESIGN_MODEL, 1.4, 0.0).unwrap();
        assert_relative_eq!(w2, w1 / 2.0);
        assert_relative_eq!(k2, k1 / 4.0);
        assert!(tune_pi(&m, 0.0, 0.0).is_err());
        assert!(tune_pi(&m, 0.7, -1.0).is_err());
    }

    #[test]
    fn nan_fails() {
        assert!(governor_update(&cfg(8e5), &GovernorState::default(), f64::NAN, 4e6, 0.01).is_err());
    }

    proptest! {
        #[test]
        fn override_stays_in_range(
            f_hats in proptest::collection::vec(6e5f64..1e6, 1..400),
            p_ref in 2e6f64..6e6,
            kp in 0.0f64..5.0,
        ) {
            let c = GovernorConfig { kp, ..cfg(8e5) };
            let mut st = GovernorState::default();
            let u_max = c.effective_u_max(p_ref);
            for f in f_hats {
                let (p_dem, next) = governor_update(&c, &st, f, p_ref, 0.05).unwrap();
                prop_assert!(next.u >= 0.0 && next.u <= u_max);
                prop_assert!(p_dem <= p_ref);
                prop_assert!(next.e_i <= 0.0);
                st = next;
            }
        }

        #[test]
        fn tuned_poles_are_stable(a in 1e-3f64..10.0, b in 1e-3f64..10.0, zeta in 0.05f64..3.0, kp in 0.0f64..10.0) {
            let m = PlantModel::new(a, b).unwrap();
            let (_, ki) = tune_pi(&m, zeta, kp).unwrap();
            let c1 = b + kp * a;
            let c0 = ki * a;
            let disc = c1 * c1 - 4.0 * c0;
            let max_re = if disc >= 0.0 { (-c1 + disc.sqrt()) / 2.0 } else { -c1 / 2.0 };
            prop_assert!(max_re < 0.0);
        }
    }
}
