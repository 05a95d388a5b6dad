//! Frequency-domain analysis of the closed thrust loop `L = K G`,
//! `K = K_P + K_I/s`, `G = A/(s + B)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::PlantModel;
use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreqPoint {
    pub freq_hz: f64,
    pub l_mag_db: f64,
    pub l_phase_deg: f64,
    pub s_mag_db: f64,
    pub t_mag_db: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopAnalysis {
    pub points: Vec<FreqPoint>,
    /// dB; `f64::INFINITY` when the phase never reaches −180°.
    pub gain_margin_db: f64,
    pub phase_crossover_hz: Option<f64>,
    pub phase_margin_deg: f64,
    pub gain_crossover_hz: f64,
    /// Where |L| passes +20 dB and −20 dB.
    pub crossover_plus20_hz: f64,
    pub crossover_minus20_hz: f64,
    pub t_dc: f64,
    /// Steady-state thrust errors for unit steps in the thrust reference,
    /// power reference, wind, and estimation bias.
    pub steady_state_errors: [f64; 4],
    pub closed_loop_poles: [Complex64; 2],
}

impl LoopAnalysis {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,l_mag_db,l_phase_deg,s_mag_db,t_mag_db\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.freq_hz, p.l_mag_db, p.l_phase_deg, p.s_mag_db, p.t_mag_db
            ));
        }
        out
    }
}

/// `n` log-spaced frequencies from `lo_hz` to `hi_hz` inclusive.
pub fn log_grid(lo_hz: f64, hi_hz: f64, n: usize) -> Vec<f64> {
    let (l0, l1) = (lo_hz.log10(), hi_hz.log10());
    (0..n)
        .map(|k| 10f64.powf(l0 + (l1 - l0) * k as f64 / (n.max(2) - 1) as f64))
        .collect()
}

struct Loop {
    model: PlantModel,
    kp: f64,
    ki: f64,
}

impl Loop {
    fn l(&self, w: f64) -> Complex64 {
        let s = Complex64::new(0.0, w);
        (self.kp + self.ki / s) * self.model.a / (s + self.model.b)
    }

    fn mag(&self, w: f64) -> f64 {
        self.l(w).norm()
    }

    /// Phase as a sum of factor arguments, continuous in ω.
    fn phase_deg(&self, w: f64) -> f64 {
        let num = Complex64::new(self.ki, self.kp * w).arg();
        let integrator = PI / 2.0;
        let gain = Complex64::new(self.model.a, 0.0).arg();
        let plant = Complex64::new(self.model.b, w).arg();
        (num - integrator + gain - plant).to_degrees()
    }

    /// Frequency (rad/s) where |L| falls through `level`; |L| is strictly
    /// decreasing in ω for this structure.
    fn magnitude_crossing(&self, level: f64) -> f64 {
        let (mut lo, mut hi) = (-9.0f64, 9.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.mag(10f64.powf(mid)) > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        10f64.powf(0.5 * (lo + hi))
    }

    fn phase_crossing(&self) -> Option<f64> {
        let grid = log_grid(1e-9, 1e9, 4001);
        let f = |w: f64| self.phase_deg(w) + 180.0;
        grid.windows(2).find(|p| f(p[0]) * f(p[1]) <= 0.0).map(|p| {
            let (mut lo, mut hi) = (p[0].log10(), p[1].log10());
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(10f64.powf(lo)) * f(10f64.powf(mid)) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            10f64.powf(0.5 * (lo + hi))
        })
    }
}

pub fn loop_analysis(model: &PlantModel, kp: f64, ki: f64, freq_grid: &[f64], exec: Exec) -> Result<LoopAnalysis> {
    if !(model.a.is_finite() && model.b.is_finite() && model.a != 0.0) {
        return Err(Error::param("model", format!("need finite a != 0 and finite b, got {model:?}")));
    }
    if !(ki > 0.0 && ki.is_finite()) || !(kp >= 0.0 && kp.is_finite()) {
        return Err(Error::param("kp/ki", format!("need kp >= 0 and ki > 0, got {kp}, {ki}")));
    }
    if freq_grid.is_empty() || freq_grid.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
        return Err(Error::param("freq_grid", "frequencies must be positive and finite"));
    }
    if let Some(k) = freq_grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::param("freq_grid", format!("not increasing at index {}", k + 1)));
    }

    // Characteristic polynomial s² + c1 s + c0.
    let c1 = model.b + kp * model.a;
    let c0 = ki * model.a;
    let disc = Complex64::new(c1 * c1 - 4.0 * c0, 0.0).sqrt();
    let poles = [(-c1 + disc) / 2.0, (-c1 - disc) / 2.0];
    if poles.iter().any(|p| p.re >= 0.0) {
        return Err(Error::Unstable {
            roots: [(poles[0].re, poles[0].im), (poles[1].re, poles[1].im)],
        });
    }

    let lp = Loop { model: *model, kp, ki };
    let points = exec.map(freq_grid, |&f| {
        let w = 2.0 * PI * f;
        let l = lp.l(w);
        let s = 1.0 / (1.0 + l);
        let t = l * s;
        FreqPoint {
            freq_hz: f,
            l_mag_db: 20.0 * l.norm().log10(),
            l_phase_deg: lp.phase_deg(w),
            s_mag_db: 20.0 * s.norm().log10(),
            t_mag_db: 20.0 * t.norm().log10(),
        }
    });

    let wc = lp.magnitude_crossing(1.0);
    let phase_margin_deg = 180.0 + lp.phase_deg(wc);
    let phase_crossover = lp.phase_crossing();
    let gain_margin_db = phase_crossover.map_or(f64::INFINITY, |w| -20.0 * lp.mag(w).log10());

    // T(0) = K_I A / (K_I A), S(0) = 0 because of the integrator.
    let t_dc = (ki * model.a) / c0;
    // S(s) = s(s + B) / (s² + c1 s + c0) vanishes at DC.
    let s_dc = 0.0;
    let g_dc = model.dc_gain();
    let steady_state_errors = [t_dc - 1.0, s_dc * g_dc, s_dc, -t_dc];

    Ok(LoopAnalysis {
        points,
        gain_margin_db,
        phase_crossover_hz: phase_crossover.map(|w| w / (2.0 * PI)),
        phase_margin_deg,
        gain_crossover_hz: wc / (2.0 * PI),
        crossover_plus20_hz: lp.magnitude_crossing(10.0) / (2.0 * PI),
        crossover_minus20_hz: lp.magnitude_crossing(0.1) / (2.0 * PI),
        t_dc,
        steady_state_errors,
        closed_loop_poles: poles,
    })
}
