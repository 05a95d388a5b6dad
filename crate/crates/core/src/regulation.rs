//! Demanded-power down-regulator (pitch tracks a power-dependent generator
//! speed reference, torque delivers the demanded power) and the conventional
//! variable-speed controller it hands back to.

use serde::{Deserialize, Serialize};

use crate::aero::AeroSurface;
use crate::error::{Error, Result};
use crate::turbine::{aero_torque, Commands, TurbineParams, TurbineState};

/// Generator speed below which the inverse-speed torque law is not evaluated.
pub const OMEGA_G_FLOOR: f64 = 1.0;
/// Torque ceiling as a multiple of rated torque.
pub const TORQUE_CEILING: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegulatorConfig {
    /// Pitch proportional gain at zero pitch, rad per rad/s of generator speed.
    pub kp0: f64,
    /// Pitch integral gain at zero pitch, rad per rad of generator speed.
    pub ki0: f64,
    /// Pitch at which the scheduled gains halve, degrees. The default surface
    /// is most pitch-sensitive just above fine pitch, so the knee sits far out.
    pub theta_k_deg: f64,
    /// Torque-law constant, N·m/(rad/s)²; derived from the surface when absent.
    pub k_opt: Option<f64>,
    pub theta_switch_deg: f64,
    pub theta_fine_deg: f64,
    /// Corner of the first-order low-pass on the speed reference, Hz; 0 disables it.
    pub speed_ref_filter_hz: f64,
}

impl Default for RegulatorConfig {
    fn default() -> Self {
        Self {
            kp0: 0.08,
            ki0: 0.012,
            theta_k_deg: 90.0,
            k_opt: None,
            theta_switch_deg: 1.0,
            theta_fine_deg: 0.0,
            speed_ref_filter_hz: 0.02,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Conventional,
    Downreg,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Conventional => "conventional",
            Mode::Downreg => "downreg",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegulatorState {
    pub pitch_integrator: f64,
    pub mode: Mode,
    /// Speed reference used at the last step (after filtering), rad/s.
    pub last_omega_g_ref: f64,
    pub torque_floor_warnings: u32,
}

impl RegulatorState {
    pub fn new(pitch_integrator: f64) -> Self {
        Self {
            pitch_integrator,
            mode: Mode::Conventional,
            last_omega_g_ref: 0.0,
            torque_floor_warnings: 0,
        }
    }
}

/// `½ρπR⁵ Cp* / (λ*³ N³)`: the generator-side constant that holds the rotor
/// at the surface's best tip-speed ratio.
pub fn derive_k_opt(params: &TurbineParams, surface: &AeroSurface) -> f64 {
    let best = surface.max_cp_point();
    0.5 * params.rho * std::f64::consts::PI * params.radius.powi(5) * best.cp
        / (best.lambda.powi(3) * params.gear_ratio.powi(3))
}

/// Resolved regulator: configuration with angles in radians and k_opt fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct Regulator {
    pub kp0: f64,
    pub ki0: f64,
    pub theta_k: f64,
    pub k_opt: f64,
    pub theta_switch: f64,
    pub theta_fine: f64,
    pub theta_max: f64,
    pub speed_ref_filter_hz: f64,
}

impl Regulator {
    pub fn new(config: &RegulatorConfig, params: &TurbineParams, surface: &AeroSurface) -> Result<Self> {
        for (name, v) in [("kp0", config.kp0), ("ki0", config.ki0), ("theta_k_deg", config.theta_k_deg)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if !(config.speed_ref_filter_hz >= 0.0 && config.speed_ref_filter_hz.is_finite()) {
            return Err(Error::param("speed_ref_filter_hz", "must be >= 0"));
        }
        if config.theta_switch_deg <= config.theta_fine_deg {
            return Err(Error::param("theta_switch_deg", "must exceed theta_fine_deg"));
        }
        let k_opt = match config.k_opt {
            Some(k) if k > 0.0 && k.is_finite() => k,
            Some(k) => return Err(Error::param("k_opt", format!("must be > 0, got {k}"))),
            None => derive_k_opt(params, surface),
        };
        let theta_fine = config.theta_fine_deg.to_radians().max(params.pitch_min());
        Ok(Self {
            kp0: config.kp0,
            ki0: config.ki0,
            theta_k: config.theta_k_deg.to_radians(),
            k_opt,
            theta_switch: config.theta_switch_deg.to_radians(),
            theta_fine,
            theta_max: params.pitch_max(),
            speed_ref_filter_hz: config.speed_ref_filter_hz,
        })
    }

    /// Generator speed at which the conventional torque law would deliver
    /// `p_dem`, limited to the operating speed band.
    pub fn gen_speed_ref(&self, params: &TurbineParams, p_dem: f64) -> f64 {
        let w = (p_dem.max(0.0) / (params.eta_eff * self.k_opt)).cbrt();
        w.clamp(params.min_gen_speed, params.rated_gen_speed)
    }

    /// Scheduled gain factor `1 / (1 + θ/θ_k)`.
    pub fn gain_schedule(&self, theta_meas: f64) -> f64 {
        1.0 / (1.0 + theta_meas.max(0.0) / self.theta_k)
    }

    /// Gain-scheduled PI on the generator speed error, with the integrator
    /// frozen while the output is saturated in the direction of the error.
    pub fn pitch_command(
        &self,
        state: &mut RegulatorState,
        omega_g_meas: f64,
        omega_g_ref: f64,
        theta_meas: f64,
        dt: f64,
    ) -> f64 {
        let err = omega_g_meas - omega_g_ref;
        let g = self.gain_schedule(theta_meas);
        let (kp, ki) = (self.kp0 * g, self.ki0 * g);
        let (lo, hi) = (self.theta_fine, self.theta_max);

        let trial = state.pitch_integrator + ki * err * dt;
        let unsat = kp * err + trial;
        let winding = (unsat > hi && err > 0.0) || (unsat < lo && err < 0.0);
        if !winding {
            state.pitch_integrator = trial.clamp(lo, hi);
        }
        (kp * err + state.pitch_integrator).clamp(lo, hi)
    }

    /// `τ_g = P_dem / (η ω_g)`, limited to `[0, 1.5 τ_rated]`. Returns the
    /// torque and whether the speed was below [`OMEGA_G_FLOOR`].
    pub fn torque_command(&self, params: &TurbineParams, p_dem: f64, omega_g_meas: f64) -> (f64, bool) {
        let ceiling = TORQUE_CEILING * params.rated_torque();
        if !(omega_g_meas > OMEGA_G_FLOOR) {
            return (ceiling, true);
        }
        ((p_dem / (params.eta_eff * omega_g_meas)).clamp(0.0, ceiling), false)
    }

    pub fn mode_select(
        &self,
        p_dem: f64,
        rated_power: f64,
        omega_g_meas: f64,
        omega_g_ref: f64,
        theta_meas: f64,
    ) -> Mode {
        if p_dem < rated_power && (omega_g_meas > omega_g_ref || theta_meas > self.theta_switch) {
            Mode::Downreg
        } else {
            Mode::Conventional
        }
    }

    /// Variable-speed baseline: `k_opt ω²` torque below rated speed, constant
    /// rated power above it, pitch PI regulating to rated speed.
    pub fn conventional_step(
        &self,
        params: &TurbineParams,
        state: &mut RegulatorState,
        omega_g_meas: f64,
        theta_meas: f64,
        dt: f64,
    ) -> Commands {
        let w = omega_g_meas.max(OMEGA_G_FLOOR);
        let rated_torque = params.rated_power / (params.eta_eff * w);
        let tau = if omega_g_meas >= params.rated_gen_speed {
            rated_torque
        } else {
            (self.k_opt * w * w).min(rated_torque)
        };
        let theta = self.pitch_command(state, omega_g_meas, params.rated_gen_speed, theta_meas, dt);
        Commands {
            theta_ref: theta,
            tau_g_ref: tau.min(TORQUE_CEILING * params.rated_torque()),
        }
    }

    /// Full regulator step: mode selection followed by the active law.
    pub fn step(
        &self,
        params: &TurbineParams,
        state: &mut RegulatorState,
        p_dem: f64,
        omega_g_meas: f64,
        theta_meas: f64,
        dt: f64,
    ) -> Commands {
        let target = self.gen_speed_ref(params, p_dem);
        let omega_ref = if self.speed_ref_filter_hz > 0.0 && state.last_omega_g_ref > 0.0 {
            let alpha = 1.0 - (-2.0 * std::f64::consts::PI * self.speed_ref_filter_hz * dt).exp();
            state.last_omega_g_ref + alpha * (target - state.last_omega_g_ref)
        } else {
            target
        };
        state.last_omega_g_ref = omega_ref;
        state.mode = self.mode_select(p_dem, params.rated_power, omega_g_meas, omega_ref, theta_meas);
        match state.mode {
            Mode::Downreg => {
                let theta = self.pitch_command(state, omega_g_meas, omega_ref, theta_meas, dt);
                let (tau, floored) = self.torque_command(params, p_dem, omega_g_meas);
                if floored {
                    state.torque_floor_warnings += 1;
                }
                Commands {
                    theta_ref: theta,
                    tau_g_ref: tau,
                }
            }
            Mode::Conventional => self.conventional_step(params, state, omega_g_meas, theta_meas, dt),
        }
    }

    /// Steady operating point at constant wind `v` with demand `p_dem`:
    /// plant state plus a regulator state whose integrator reproduces the
    /// trimmed pitch.
    pub fn trim(
        &self,
        params: &TurbineParams,
        surface: &AeroSurface,
        v: f64,
        p_dem: f64,
    ) -> (TurbineState, RegulatorState) {
        let wind_power = params.wind_power(v);
        let n = params.gear_ratio;

        if p_dem < params.rated_power {
            let omega_g = self.gen_speed_ref(params, p_dem);
            let lambda = params.radius * omega_g / n / v;
            if let Some(theta) = surface.pitch_for_cp(lambda, p_dem / (params.eta_eff * wind_power)) {
                if theta >= self.theta_fine {
                    let tau = p_dem / (params.eta_eff * omega_g);
                    let mut reg = RegulatorState::new(theta);
                    reg.mode = Mode::Downreg;
                    reg.last_omega_g_ref = omega_g;
                    return (TurbineState::new(omega_g / n, theta, tau), reg);
                }
            }
        }

        // Conventional balance τ_a(ω) = N k_opt (N ω)² at fine pitch.
        let theta = self.theta_fine;
        let f = |w: f64| aero_torque(params, surface, v, w, theta) - n * self.k_opt * (n * w).powi(2);
        let (mut lo, mut hi) = (params.min_gen_speed / n * 0.5, 3.0 * params.rated_gen_speed / n);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let omega_r = 0.5 * (lo + hi);
        if n * omega_r <= params.rated_gen_speed {
            let omega_g = n * omega_r;
            let mut reg = RegulatorState::new(theta);
            reg.last_omega_g_ref = self.gen_speed_ref(params, p_dem);
            return (TurbineState::new(omega_r, theta, self.k_opt * omega_g * omega_g), reg);
        }

        // Above rated: rated speed, pitch sheds the surplus.
        let omega_g = params.rated_gen_speed;
        let lambda = params.radius * omega_g / n / v;
        let cp_needed = params.rated_power / (params.eta_eff * wind_power);
        let theta = surface.pitch_for_cp(lambda, cp_needed).unwrap_or(theta);
        let mut reg = RegulatorState::new(theta);
        reg.last_omega_g_ref = omega_g;
        (
            TurbineState::new(omega_g / n, theta, params.rated_power / (params.eta_eff * omega_g)),
            reg,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aero::{parametric_surface, ParametricCoeffs};
    use approx::assert_relative_eq;

    fn setup() -> (TurbineParams, AeroSurface, Regulator) {
        let p = TurbineParams::default();
        let s = parametric_surface(&ParametricCoeffs::default()).unwrap();
        let r = Regulator::new(&RegulatorConfig::default(), &p, &s).unwrap();
        (p, s, r)
    }

    #[test]
    fn k_opt_from_default_surface() {
        let (p, s, r) = setup();
        let best = s.max_cp_point();
        let omega_g = best.lambda * 9.0 / p.radius * p.gear_ratio;
        // at the optimum the torque law balances the aerodynamic torque
        let aero = aero_torque(&p, &s, 9.0, omega_g / p.gear_ratio, 0.0);
        assert_relative_eq!(aero, p.gear_ratio * r.k_opt * omega_g * omega_g, max_relative = 1e-12);
    }

    #[test]
    fn speed_reference_inverts_torque_law() {
        let (p, _, r) = setup();
        let p_cap = p.eta_eff * r.k_opt * p.rated_gen_speed.powi(3);
        assert_relative_eq!(r.gen_speed_ref(&p, p_cap), p.rated_gen_speed, max_relative = 1e-12);
        let a = r.gen_speed_ref(&p, 4.0e6);
        let b = r.gen_speed_ref(&p, 4.0e6 / 8.0);
        assert_relative_eq!(b, a / 2.0, max_relative = 1e-12);
        assert_eq!(r.gen_speed_ref(&p, 0.0), p.min_gen_speed);
    }

    #[test]
    fn pitch_pi_behaviour() {
        let (_, _, r) = setup();
        let mut st = RegulatorState::new(0.0);
        assert_eq!(r.pitch_command(&mut st, 40.0, 40.0, 0.0, 0.01), 0.0);

        let mut st = RegulatorState::new(0.0);
        let mut prev = r.pitch_command(&mut st, 40.5, 40.0, 0.0, 0.01);
        for _ in 0..100 {
            let next = r.pitch_command(&mut st, 40.5, 40.0, 0.0, 0.01);
            assert!(next > prev);
            prev = next;
        }
    }

    #[test]
    fn gain_schedule_halves_at_knee() {
        let (_, _, r) = setup();
        assert_relative_eq!(r.gain_schedule(r.theta_k), 0.5);
        assert_eq!(r.gain_schedule(0.0), 1.0);
    }

    #[test]
    fn pitch_integrator_bounded_under_saturation() {
        let (_, _, r) = setup();
        let mut st = RegulatorState::new(0.0);
        for _ in 0..100_000 {
            r.pitch_command(&mut st, 30.0, 40.0, 0.0, 0.01);
        }
        assert!(st.pitch_integrator >= r.theta_fine);
        for _ in 0..1_000_000 {
            r.pitch_command(&mut st, 60.0, 40.0, 0.0, 0.01);
        }
        assert!(st.pitch_integrator <= r.theta_max);
        let out = r.pitch_command(&mut st, 40.0, 40.0, 0.0, 0.01);
        assert!(out <= r.theta_max);
    }

    #[test]
    fn torque_law() {
        let (p, _, r) = setup();
        let (tau, warn) = r.torque_command(&p, 5.0e6, 50.27);
        assert_relative_eq!(tau, 99_463.0, max_relative = 1e-4);
        assert!(!warn);
        assert_eq!(r.torque_command(&p, 0.0, 40.0).0, 0.0);
        let (a, b) = (r.torque_command(&p, 3e6, 40.0).0, r.torque_command(&p, 3e6, 20.0).0);
        assert_relative_eq!(b, 2.0 * a);
        let (tau, warn) = r.torque_command(&p, 3e6, 0.5);
        assert!(warn);
        assert_relative_eq!(tau, 1.5 * p.rated_torque());
    }

    #[test]
    fn mode_conditions() {
        let (p, _, r) = setup();
        let rated = p.rated_power;
        assert_eq!(r.mode_select(rated, rated, 45.0, 40.0, 0.1), Mode::Conventional);
        assert_eq!(r.mode_select(4e6, rated, 41.0, 40.0, 0.0), Mode::Downreg);
        assert_eq!(r.mode_select(4e6, rated, 39.0, 40.0, 0.5f64.to_radians()), Mode::Conventional);
        assert_eq!(r.mode_select(4e6, rated, 39.0, 40.0, 2f64.to_radians()), Mode::Downreg);
    }

    #[test]
    fn conventional_regions() {
        let (p, _, r) = setup();
        let mut st = RegulatorState::new(0.0);
        let c = r.conventional_step(&p, &mut st, 35.0, 0.0, 0.01);
        assert_eq!(c.tau_g_ref, r.k_opt * 35.0 * 35.0);
        assert_eq!(c.theta_ref, r.theta_fine);
        let c = r.conventional_step(&p, &mut st, p.rated_gen_speed, 0.0, 0.01);
        assert_relative_eq!(c.tau_g_ref, p.rated_power / (p.eta_eff * p.rated_gen_speed));
    }

    #[test]
    fn trim_is_an_equilibrium() {
        let (p, s, r) = setup();
        for p_dem in [3.0e6, 4.0e6, 5.0e6, 9.0e6] {
            let (x, reg) = r.trim(&p, &s, 9.0, p_dem);
            let aero = aero_torque(&p, &s, 9.0, x.omega_r, x.theta);
            assert_relative_eq!(aero, p.gear_ratio * x.tau_g, max_relative = 1e-6);
            assert_eq!(reg.pitch_integrator, x.theta);
        }
        let (x, reg) = r.trim(&p, &s, 9.0, 4.0e6);
        assert_eq!(reg.mode, Mode::Downreg);
        assert_relative_eq!(crate::turbine::generated_power(&p, &x), 4.0e6, max_relative = 1e-9);
    }

    #[test]
    fn config_validation() {
        let (p, s, _) = setup();
        let bad = RegulatorConfig { theta_switch_deg: 0.0, ..Default::default() };
        assert!(Regulator::new(&bad, &p, &s).is_err());
        let bad = RegulatorConfig { k_opt: Some(-1.0), ..Default::default() };
        assert!(Regulator::new(&bad, &p, &s).is_err());
    }
}
