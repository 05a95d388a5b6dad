//! Reduced-order turbine plant: rigid drivetrain driven by the aerodynamic
//! torque of the Cp surface, with rate- and range-limited pitch and torque
//! actuators.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::aero::AeroSurface;
use crate::error::{Error, Result};

pub const OMEGA_R_FLOOR: f64 = 1e-3;

/// Physical constants of the plant. Defaults are DTU-10MW-sized surrogates;
/// only the rotor radius comes from a published turbine geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurbineParams {
    pub rho: f64,
    pub radius: f64,
    pub inertia: f64,
    pub gear_ratio: f64,
    pub eta_eff: f64,
    pub rated_power: f64,
    pub rated_gen_speed: f64,
    pub min_gen_speed: f64,
    pub pitch_range_deg: [f64; 2],
    pub pitch_rate_limit_deg: f64,
    /// Generator side, N·m/s.
    pub torque_rate_limit: f64,
}

impl Default for TurbineParams {
    fn default() -> Self {
        Self {
            rho: 1.225,
            radius: 89.15,
            inertia: 1.6e8,
            gear_ratio: 50.0,
            eta_eff: 1.0,
            rated_power: 1.0e7,
            rated_gen_speed: 50.26,
            min_gen_speed: 15.7,
            pitch_range_deg: [0.0, 90.0],
            pitch_rate_limit_deg: 10.0,
            torque_rate_limit: 1.5e4,
        }
    }
}

impl TurbineParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("radius", self.radius),
            ("inertia", self.inertia),
            ("gear_ratio", self.gear_ratio),
            ("eta_eff", self.eta_eff),
            ("rated_power", self.rated_power),
            ("rated_gen_speed", self.rated_gen_speed),
            ("min_gen_speed", self.min_gen_speed),
            ("pitch_rate_limit_deg", self.pitch_rate_limit_deg),
            ("torque_rate_limit", self.torque_rate_limit),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if self.eta_eff > 1.0 {
            return Err(Error::param("eta_eff", "must be <= 1"));
        }
        if self.min_gen_speed >= self.rated_gen_speed {
            return Err(Error::param("min_gen_speed", "must be below rated_gen_speed"));
        }
        let [lo, hi] = self.pitch_range_deg;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::param("pitch_range_deg", format!("[{lo}, {hi}] is empty")));
        }
        Ok(())
    }

    pub fn rotor_area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn pitch_min(&self) -> f64 {
        self.pitch_range_deg[0].to_radians()
    }

    pub fn pitch_max(&self) -> f64 {
        self.pitch_range_deg[1].to_radians()
    }

    pub fn pitch_rate_limit(&self) -> f64 {
        self.pitch_rate_limit_deg.to_radians()
    }

    pub fn rated_torque(&self) -> f64 {
        self.rated_power / (self.eta_eff * self.rated_gen_speed)
    }

    pub fn tip_speed_ratio(&self, v: f64, omega_r: f64) -> f64 {
        self.radius * omega_r / v
    }

    /// Kinetic power available in the wind through the rotor disc.
    pub fn wind_power(&self, v: f64) -> f64 {
        0.5 * self.rho * self.rotor_area() * v.powi(3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TurbineState {
    pub omega_r: f64,
    pub theta: f64,
    /// Generator side.
    pub tau_g: f64,
    pub t: f64,
    pub omega_floor_hits: u32,
}

impl TurbineState {
    pub fn new(omega_r: f64, theta: f64, tau_g: f64) -> Self {
        Self {
            omega_r,
            theta,
            tau_g,
            t: 0.0,
            omega_floor_hits: 0,
        }
    }

    pub fn gen_speed(&self, params: &TurbineParams) -> f64 {
        params.gear_ratio * self.omega_r
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Commands {
    pub theta_ref: f64,
    pub tau_g_ref: f64,
}

pub fn aero_torque(params: &TurbineParams, surface: &AeroSurface, v: f64, omega_r: f64, theta: f64) -> f64 {
    let lambda = params.tip_speed_ratio(v, omega_r);
    let cp = surface.cp(lambda, theta).max(0.0);
    params.wind_power(v) * cp / omega_r
}

/// Ground-truth rotor thrust `½ρπR²v²·Ct(Rω/v, θ)`.
pub fn aero_thrust_true(params: &TurbineParams, surface: &AeroSurface, v: f64, omega_r: f64, theta: f64) -> f64 {
    let lambda = params.tip_speed_ratio(v, omega_r);
    0.5 * params.rho * params.rotor_area() * v * v * surface.ct(lambda, theta).max(0.0)
}

pub fn generated_power(params: &TurbineParams, state: &TurbineState) -> f64 {
    (params.eta_eff * state.tau_g * state.gen_speed(params)).max(0.0)
}

fn rate_limit(current: f64, target: f64, max_step: f64) -> f64 {
    current + (target - current).clamp(-max_step, max_step)
}

/// Advances the plant by `dt`.
///
/// Actuators first slew toward the commands (rate then range limits), then
/// the rotor equation `J dω/dt = τ_a − N τ_g` is integrated with classical
/// RK4 while actuators and wind are held.
pub fn step(
    params: &TurbineParams,
    surface: &AeroSurface,
    state: &TurbineState,
    commands: Commands,
    v: f64,
    dt: f64,
) -> Result<TurbineState> {
    let inputs = [
        ("omega_r", state.omega_r),
        ("theta", state.theta),
        ("tau_g", state.tau_g),
        ("theta_ref", commands.theta_ref),
        ("tau_g_ref", commands.tau_g_ref),
        ("v", v),
        ("dt", dt),
    ];
    for (signal, x) in inputs {
        if !x.is_finite() {
            return Err(Error::NonFinite {
                step: (state.t / dt).round() as usize,
                t: state.t,
                signal,
            });
        }
    }

    let theta = rate_limit(state.theta, commands.theta_ref, params.pitch_rate_limit() * dt)
        .clamp(params.pitch_min(), params.pitch_max());
    let tau_g = rate_limit(state.tau_g, commands.tau_g_ref, params.torque_rate_limit * dt).max(0.0);

    let load = params.gear_ratio * tau_g;
    let accel = |w: f64| {
        let w = w.max(OMEGA_R_FLOOR);
        (aero_torque(params, surface, v, w, theta) - load) / params.inertia
    };
    let w0 = state.omega_r;
    let k1 = accel(w0);
    let k2 = accel(w0 + 0.5 * dt * k1);
    let k3 = accel(w0 + 0.5 * dt * k2);
    let k4 = accel(w0 + dt * k3);
    let mut omega_r = w0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    let mut hits = state.omega_floor_hits;
    if omega_r < OMEGA_R_FLOOR {
        omega_r = OMEGA_R_FLOOR;
        hits += 1;
    }
    if !omega_r.is_finite() {
        return Err(Error::NonFinite {
            step: (state.t / dt).round() as usize,
            t: state.t,
            signal: "omega_r",
        });
    }
    Ok(TurbineState {
        omega_r,
        theta,
        tau_g,
        t: state.t + dt,
        omega_floor_hits: hits,
    })
}
