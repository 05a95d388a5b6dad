//! Linear test bench for the thrust loop.
//!
//! The down-regulated turbine is replaced by its first-order model:
//! `F = G (P_ref − u) + G_v v` with `G = A/(s+B)`, `G_v = A_v/(s+B_v)`, and the
//! controller sees `F̂ = F + n`.

use super::{governor_update, GovernorConfig, GovernorState, PlantModel};
use crate::error::Result;

/// A signal that jumps from `before` to `after` at time `at`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub before: f64,
    pub after: f64,
    pub at: f64,
}

impl Step {
    pub fn constant(v: f64) -> Self {
        Self { before: v, after: v, at: 0.0 }
    }

    pub fn unit(at: f64) -> Self {
        Self { before: 0.0, after: 1.0, at }
    }

    pub fn new(before: f64, after: f64, at: f64) -> Self {
        Self { before, after, at }
    }

    pub fn value(&self, t: f64) -> f64 {
        if t < self.at {
            self.before
        } else {
            self.after
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchInputs {
    pub f_ref: Step,
    pub p_ref: Step,
    pub wind: Step,
    /// Estimation bias `n`, with `F̂ = F + n`.
    pub bias: Step,
}

impl Default for BenchInputs {
    fn default() -> Self {
        let zero = Step::constant(0.0);
        Self {
            f_ref: zero,
            p_ref: zero,
            wind: zero,
            bias: zero,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearBench {
    pub plant: PlantModel,
    pub wind_path: PlantModel,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchTrace {
    pub t: Vec<f64>,
    pub thrust: Vec<f64>,
    pub thrust_ref: Vec<f64>,
    pub u: Vec<f64>,
}

impl BenchTrace {
    /// Tracking error `F − F_ref` at the final sample.
    pub fn final_error(&self) -> f64 {
        let k = self.t.len() - 1;
        self.thrust[k] - self.thrust_ref[k]
    }

    fn push(&mut self, t: f64, f: f64, f_ref: f64, u: f64) {
        self.t.push(t);
        self.thrust.push(f);
        self.thrust_ref.push(f_ref);
        self.u.push(u);
    }
}

impl LinearBench {
    pub fn new(plant: PlantModel, wind_path: PlantModel) -> Self {
        Self { plant, wind_path }
    }

    /// Plant states starting at equilibrium with the initial inputs and u = 0.
    fn initial_states(&self, inputs: &BenchInputs) -> (f64, f64) {
        (
            self.plant.dc_gain() * inputs.p_ref.value(0.0),
            self.wind_path.dc_gain() * inputs.wind.value(0.0),
        )
    }

    /// Continuous loop with an always-closed PI `u = −(K_P e + K_I ∫e)`,
    /// integrated jointly with RK4.
    pub fn simulate_linear(&self, kp: f64, ki: f64, inputs: &BenchInputs, duration: f64, dt: f64) -> BenchTrace {
        let (a, b) = (self.plant.a, self.plant.b);
        let (av, bv) = (self.wind_path.a, self.wind_path.b);
        let (x0, xv0) = self.initial_states(inputs);
        // state: [plant thrust, wind-path thrust, integral of e]
        let mut x = [x0, xv0, 0.0];
        let n = (duration / dt).round() as usize;
        let mut trace = BenchTrace::default();

        let control = |x: &[f64; 3], t: f64| {
            let f_hat = x[0] + x[1] + inputs.bias.value(t);
            let e = inputs.f_ref.value(t) - f_hat;
            (e, -(kp * e + ki * x[2]))
        };
        let deriv = |x: &[f64; 3], t: f64| {
            let (e, u) = control(x, t);
            [-b * x[0] + a * (inputs.p_ref.value(t) - u), -bv * x[1] + av * inputs.wind.value(t), e]
        };

        for k in 0..=n {
            let t = k as f64 * dt;
            let (_, u) = control(&x, t);
            trace.push(t, x[0] + x[1], inputs.f_ref.value(t), u);
            if k == n {
                break;
            }
            // inputs sampled at the step start so that steps land on grid points
            let tk = t;
            let k1 = deriv(&x, tk);
            let k2 = deriv(&add(&x, &k1, 0.5 * dt), tk);
            let k3 = deriv(&add(&x, &k2, 0.5 * dt), tk);
            let k4 = deriv(&add(&x, &k3, dt), tk);
            for i in 0..3 {
                x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        trace
    }

    /// Same loop driven by the switching governor (zero-order hold on `u`).
    /// The governor's bound follows `inputs.f_ref`.
    pub fn simulate_switched(
        &self,
        config: &GovernorConfig,
        inputs: &BenchInputs,
        duration: f64,
        dt: f64,
    ) -> Result<BenchTrace> {
        let (a, b) = (self.plant.a, self.plant.b);
        let (av, bv) = (self.wind_path.a, self.wind_path.b);
        let (mut xf, mut xv) = self.initial_states(inputs);
        let mut gov = GovernorState::default();
        let n = (duration / dt).round() as usize;
        let mut trace = BenchTrace::default();
        let mut cfg = config.clone();

        for k in 0..=n {
            let t = k as f64 * dt;
            cfg.f_t_ref = inputs.f_ref.value(t);
            let f_hat = xf + xv + inputs.bias.value(t);
            let p_ref = inputs.p_ref.value(t);
            let (p_dem, next) = governor_update(&cfg, &gov, f_hat, p_ref, dt)?;
            gov = next;
            trace.push(t, xf + xv, cfg.f_t_ref, gov.u);
            if k == n {
                break;
            }
            let v = inputs.wind.value(t);
            // exact discretisation of the first-order lags under held inputs
            let (ea, ev) = ((-b * dt).exp(), (-bv * dt).exp());
            xf = xf * ea + (1.0 - ea) * a / b * p_dem;
            xv = xv * ev + (1.0 - ev) * av / bv * v;
        }
        Ok(trace)
    }
}

fn add(x: &[f64; 3], k: &[f64; 3], h: f64) -> [f64; 3] {
    [x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::governor::{reference, tune_pi, SwitchLaw};

    fn bench() -> LinearBench {
        LinearBench::new(reference::DESIGN_MODEL, PlantModel::new(1.0e4, 0.3).unwrap())
    }

    fn tuned_ki() -> f64 {
        tune_pi(&reference::DESIGN_MODEL, 0.7, 0.0).unwrap().1
    }

    #[test]
    fn unit_steps_are_rejected_or_tracked() {
        let b = bench();
        let ki = tuned_ki();
        let cases = [
            BenchInputs { f_ref: Step::unit(1.0), ..Default::default() },
            BenchInputs { p_ref: Step::unit(1.0), ..Default::default() },
            BenchInputs { wind: Step::unit(1.0), ..Default::default() },
        ];
        for inputs in cases {
            let tr = b.simulate_linear(0.0, ki, &inputs, 61.0, 0.01);
            assert!(tr.final_error().abs() < 1e-3, "{inputs:?}: {}", tr.final_error());
        }
    }

    #[test]
    fn bias_step_shifts_thrust() {
        let b = bench();
        let n0 = 2.5e4;
        let inputs = BenchInputs { bias: Step::new(0.0, n0, 1.0), ..Default::default() };
        let tr = b.simulate_linear(0.0, tuned_ki(), &inputs, 61.0, 0.01);
        assert!((tr.final_error() + n0).abs() < 1e-3 * n0, "{}", tr.final_error());
    }

    #[test]
    fn switched_governor_returns_thrust_to_bound() {
        let b = bench();
        let p_ref = 5.0e6;
        let f0 = reference::DESIGN_MODEL.dc_gain() * p_ref;
        let bound = f0 + 2.0e4;
        let cfg = GovernorConfig { f_t_ref: bound, ki: tuned_ki(), ..Default::default() };
        // wind-path thrust rises by 5e4 N at t = 5 s
        let gust = 5.0e4 / b.wind_path.dc_gain();
        let inputs = BenchInputs {
            f_ref: Step::constant(bound),
            p_ref: Step::constant(p_ref),
            wind: Step::new(0.0, gust, 5.0),
            ..Default::default()
        };
        let tr = b.simulate_switched(&cfg, &inputs, 120.0, 0.01).unwrap();
        // nothing happens before the gust
        assert!(tr.u[..500].iter().all(|&u| u == 0.0));
        assert!(tr.final_error().abs() < 1.0, "{}", tr.final_error());
        assert!(*tr.u.last().unwrap() > 0.0);
    }

    #[test]
    fn sign_switch_chatters_where_integral_switch_does_not() {
        let b = bench();
        let p_ref = 5.0e6;
        let f0 = reference::DESIGN_MODEL.dc_gain() * p_ref;
        let inputs = BenchInputs {
            f_ref: Step::constant(f0 - 1e4),
            p_ref: Step::constant(p_ref),
            ..Default::default()
        };
        let switches = |law| {
            let cfg = GovernorConfig { f_t_ref: f0 - 1e4, ki: tuned_ki(), switch_law: law, ..Default::default() };
            let tr = b.simulate_switched(&cfg, &inputs, 60.0, 0.01).unwrap();
            tr.u.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
        };
        let (integral, sign) = (switches(SwitchLaw::Integral), switches(SwitchLaw::Sign));
        assert!(integral <= 1, "{integral}");
        assert!(sign >= 10, "{sign}");
    }
}
