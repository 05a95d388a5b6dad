//! Closed-loop simulation: estimators feed the governor, the governor feeds
//! the down-regulator, the regulator drives the plant.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::estimation::{ii_update, steady_wind_estimate, thrust_estimate, EstimatorState};
use crate::governor::{governor_update, GovernorState};
use crate::regulation::{Mode, Regulator};
use crate::turbine::{aero_thrust_true, generated_power, step, TurbineState};
use crate::windfield::{generate, load_trace};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    Mode(Mode),
    LoopClosed,
    LoopOpened,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

/// Column-wise record of a run, sampled every `log_interval`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimLog {
    pub dt: f64,
    pub t: Vec<f64>,
    pub v_true: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub omega_r: Vec<f64>,
    pub theta: Vec<f64>,
    pub tau_g: Vec<f64>,
    pub p_ref: Vec<f64>,
    pub u: Vec<f64>,
    pub p_dem: Vec<f64>,
    pub p_gen: Vec<f64>,
    pub f_true: Vec<f64>,
    pub f_hat: Vec<f64>,
    pub mode: Vec<Mode>,
    pub governor_active: Vec<bool>,
    pub loop_closed: Vec<bool>,
    /// Every mode change and every opening or closing of the thrust loop,
    /// stamped at simulation resolution.
    pub events: Vec<Event>,
    pub omega_floor_hits: u32,
    pub torque_floor_warnings: u32,
    pub wind_floor_hits: usize,
}

pub const LOG_HEADER: &str = "t [s],v_true [m/s],v_hat [m/s],omega_r [rad/s],theta [deg],tau_g [N m],\
p_ref [W],u [W],p_dem [W],p_gen [W],f_true [N],f_hat [N],mode [-],governor_active [0/1],loop_closed [0/1]";

impl SimLog {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Index of the first sample at or after `t`.
    pub fn index_at(&self, t: f64) -> usize {
        self.t.partition_point(|&x| x < t - 1e-9)
    }

    /// Equality of every logged value down to the bit pattern.
    pub fn bit_identical(&self, other: &SimLog) -> bool {
        let same = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        same(&self.t, &other.t)
            && same(&self.v_true, &other.v_true)
            && same(&self.v_hat, &other.v_hat)
            && same(&self.omega_r, &other.omega_r)
            && same(&self.theta, &other.theta)
            && same(&self.tau_g, &other.tau_g)
            && same(&self.p_ref, &other.p_ref)
            && same(&self.u, &other.u)
            && same(&self.p_dem, &other.p_dem)
            && same(&self.p_gen, &other.p_gen)
            && same(&self.f_true, &other.f_true)
            && same(&self.f_hat, &other.f_hat)
            && self.mode == other.mode
            && self.governor_active == other.governor_active
            && self.loop_closed == other.loop_closed
    }

    /// Number of loop open/close switchings with `t0 <= t < t1`.
    pub fn switch_count(&self, t0: f64, t1: f64) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::LoopClosed | EventKind::LoopOpened) && e.t >= t0 && e.t < t1)
            .count()
    }

    /// Mean of a column over `t0 <= t < t1`.
    pub fn window_mean(&self, column: &[f64], t0: f64, t1: f64) -> f64 {
        let (a, b) = (self.index_at(t0), self.index_at(t1));
        let s = &column[a..b.max(a)];
        s.iter().sum::<f64>() / s.len().max(1) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 200);
        out.push_str(LOG_HEADER);
        out.push('\n');
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.t[k],
                self.v_true[k],
                self.v_hat[k],
                self.omega_r[k],
                self.theta[k].to_degrees(),
                self.tau_g[k],
                self.p_ref[k],
                self.u[k],
                self.p_dem[k],
                self.p_gen[k],
                self.f_true[k],
                self.f_hat[k],
                self.mode[k].as_str(),
                self.governor_active[k] as u8,
                self.loop_closed[k] as u8,
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        t: f64,
        x: &TurbineState,
        v: f64,
        v_hat: f64,
        p_ref: f64,
        gov: &GovernorState,
        p_dem: f64,
        p_gen: f64,
        f_true: f64,
        f_hat: f64,
        mode: Mode,
    ) {
        self.t.push(t);
        self.v_true.push(v);
        self.v_hat.push(v_hat);
        self.omega_r.push(x.omega_r);
        self.theta.push(x.theta);
        self.tau_g.push(x.tau_g);
        self.p_ref.push(p_ref);
        self.u.push(gov.u);
        self.p_dem.push(p_dem);
        self.p_gen.push(p_gen);
        self.f_true.push(f_true);
        self.f_hat.push(f_hat);
        self.mode.push(mode);
        self.governor_active.push(gov.active);
        self.loop_closed.push(gov.closed);
    }
}

fn locate(e: Error, k: usize, t: f64) -> Error {
    match e {
        Error::NonFinite { signal, .. } => Error::NonFinite { step: k, t, signal },
        other => other,
    }
}

struct Noise {
    rng: ChaCha8Rng,
    omega: Option<Normal<f64>>,
    theta: Option<Normal<f64>>,
    tau: Option<Normal<f64>>,
}

impl Noise {
    fn draw(d: &Option<Normal<f64>>, rng: &mut ChaCha8Rng) -> f64 {
        d.as_ref().map_or(0.0, |d| d.sample(rng))
    }
}

/// Runs a scenario to completion.
pub fn run(sc: &Scenario) -> Result<SimLog> {
    sc.validate()?;
    let params = &sc.turbine;
    let surface = sc.surface.build()?;
    let regulator = Regulator::new(&sc.regulator, params, &surface)?;
    let reference = sc.power_reference.signal()?;

    let mut wind_spec = sc.wind.clone();
    if let Some(seed) = sc.seed {
        wind_spec.seed = seed;
    }
    let n = sc.steps();
    let wind = match &sc.wind_trace {
        Some(path) => load_trace(path, sc.dt)?,
        None => generate(&wind_spec, n as f64 * sc.dt + sc.dt, sc.dt)?,
    };

    let m = &sc.measurement;
    let normal = |std: f64| (std > 0.0).then(|| Normal::new(0.0, std).expect("validated std"));
    let mut noise = Noise {
        rng: ChaCha8Rng::seed_from_u64(wind_spec.seed ^ 0x6d65_6173),
        omega: normal(m.omega_r_std),
        theta: normal(m.theta_std_deg.to_radians()),
        tau: normal(m.tau_g_std),
    };

    let v0 = wind.samples[0];
    let (mut x, mut reg) = regulator.trim(params, &surface, v0, reference.at(0.0));
    let v_hat0 = match sc.estimator.v_hat_init {
        Some(v) => v,
        None => steady_wind_estimate(params, &surface, x.omega_r, x.tau_g, x.theta),
    };
    let mut est = EstimatorState::new(sc.estimator.gamma, v_hat0, x.omega_r)?;
    let mut gov = GovernorState::default();

    let every = sc.log_every();
    let mut log = SimLog {
        dt: sc.log_interval,
        ..SimLog::default()
    };
    let mut last_mode: Option<Mode> = None;
    let mut last_closed = false;

    for k in 0..=n {
        let t = k as f64 * sc.dt;
        let v = wind.samples[k.min(wind.len() - 1)];

        // measure
        let omega_meas = x.omega_r + Noise::draw(&noise.omega, &mut noise.rng);
        let theta_meas = x.theta + Noise::draw(&noise.theta, &mut noise.rng);
        let tau_meas = x.tau_g + Noise::draw(&noise.tau, &mut noise.rng);

        // estimate wind, then thrust
        est = ii_update(&est, params, &surface, omega_meas, tau_meas, theta_meas, sc.dt).map_err(|e| locate(e, k, t))?;
        let f_hat = thrust_estimate(params, &surface, est.v_hat, omega_meas, theta_meas);

        // governor
        let p_ref = reference.at(t);
        let p_dem = if sc.governor.enabled {
            let (p_dem, next) = governor_update(&sc.governor, &gov, f_hat, p_ref, sc.dt).map_err(|e| locate(e, k, t))?;
            gov = next;
            p_dem
        } else {
            p_ref
        };

        // mode select and regulator commands
        let cmd = regulator.step(params, &mut reg, p_dem, params.gear_ratio * omega_meas, theta_meas, sc.dt);

        if last_mode != Some(reg.mode) {
            if last_mode.is_some() {
                log.events.push(Event { t, kind: EventKind::Mode(reg.mode) });
            }
            last_mode = Some(reg.mode);
        }
        if gov.closed != last_closed {
            let kind = if gov.closed { EventKind::LoopClosed } else { EventKind::LoopOpened };
            log.events.push(Event { t, kind });
            last_closed = gov.closed;
        }

        if k % every == 0 {
            let f_true = aero_thrust_true(params, &surface, v, x.omega_r, x.theta);
            let p_gen = generated_power(params, &x);
            for (signal, val) in [
                ("v_hat", est.v_hat),
                ("f_hat", f_hat),
                ("f_true", f_true),
                ("p_gen", p_gen),
                ("p_dem", p_dem),
            ] {
                if !val.is_finite() {
                    return Err(Error::NonFinite { step: k, t, signal });
                }
            }
            log.push(t, &x, v, est.v_hat, p_ref, &gov, p_dem, p_gen, f_true, f_hat, reg.mode);
        }
        if k == n {
            break;
        }

        // plant
        x = step(params, &surface, &x, cmd, v, sc.dt).map_err(|e| locate(e, k, t))?;
    }

    log.omega_floor_hits = x.omega_floor_hits;
    log.torque_floor_warnings = reg.torque_floor_warnings;
    log.wind_floor_hits = wind.floor_hits;
    Ok(log)
}
