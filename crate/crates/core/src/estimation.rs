//! Rotor-effective wind speed estimation (immersion & invariance observer)
//! and the thrust estimate built on it.
//!
//! The observer keeps `v̂ = ξ + γ ω_r` with `dξ/dt = −(γ/J)(τ_a(v̂, ω_r, θ) − N τ_g)`.
//! Substituting the rotor equation gives `dv̂/dt = (γ/J)(τ_a(v) − τ_a(v̂))`, so
//! the estimate contracts onto the true speed wherever τ_a grows with v.

use serde::{Deserialize, Serialize};

use crate::aero::AeroSurface;
use crate::error::{Error, Result};
use crate::turbine::{aero_thrust_true, aero_torque, TurbineParams};

pub const V_HAT_FLOOR: f64 = 0.5;
/// Used when the steady map cannot be inverted at start-up.
pub const FALLBACK_WIND: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Observer gain, m/s per rad/s.
    pub gamma: f64,
    /// Initial estimate; `None` inverts the steady torque balance.
    pub v_hat_init: Option<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            gamma: 40.0,
            v_hat_init: None,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        if let Some(v) = self.v_hat_init {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param("v_hat_init", format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorState {
    pub xi: f64,
    pub v_hat: f64,
    pub gamma: f64,
}

impl EstimatorState {
    pub fn new(gamma: f64, v_hat: f64, omega_r: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must be > 0, got {gamma}")));
        }
        Ok(Self {
            xi: v_hat - gamma * omega_r,
            v_hat,
            gamma,
        })
    }
}

/// Wind speed at which the aerodynamic torque balances the generator load,
/// by bisection on `[V_HAT_FLOOR, 60]` m/s. Falls back to [`FALLBACK_WIND`]
/// when the balance has no root in that bracket.
pub fn steady_wind_estimate(
    params: &TurbineParams,
    surface: &AeroSurface,
    omega_r: f64,
    tau_g: f64,
    theta: f64,
) -> f64 {
    let load = params.gear_ratio * tau_g;
    let f = |v: f64| aero_torque(params, surface, v, omega_r, theta) - load;
    let (mut lo, mut hi) = (V_HAT_FLOOR, 60.0);
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return FALLBACK_WIND;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One observer step. The returned `v_hat` is the estimate at the time of
/// the given measurements; `xi` has been advanced to the next step.
#[allow(clippy::too_many_arguments)]
pub fn ii_update(
    est: &EstimatorState,
    params: &TurbineParams,
    surface: &AeroSurface,
    omega_r_meas: f64,
    tau_g_meas: f64,
    theta_meas: f64,
    dt: f64,
) -> Result<EstimatorState> {
    for (signal, x) in [
        ("omega_r_meas", omega_r_meas),
        ("tau_g_meas", tau_g_meas),
        ("theta_meas", theta_meas),
        ("xi", est.xi),
    ] {
        if !x.is_finite() {
            return Err(Error::NonFinite { step: 0, t: f64::NAN, signal });
        }
    }
    let omega = omega_r_meas.max(crate::turbine::OMEGA_R_FLOOR);
    let v_hat = (est.xi + est.gamma * omega).max(V_HAT_FLOOR);
    let mismatch = aero_torque(params, surface, v_hat, omega, theta_meas) - params.gear_ratio * tau_g_meas;
    let xi = est.xi - dt * est.gamma / params.inertia * mismatch;
    Ok(EstimatorState {
        xi,
        v_hat,
        gamma: est.gamma,
    })
}

/// Thrust computed from the estimated wind and the measured rotor state,
/// `½ρπR² v̂² Ct(Rω/v̂, θ)`.
pub fn thrust_estimate(
    params: &TurbineParams,
    surface: &AeroSurface,
    v_hat: f64,
    omega_r_meas: f64,
    theta_meas: f64,
) -> f64 {
    aero_thrust_true(params, surface, v_hat, omega_r_meas, theta_meas)
}
