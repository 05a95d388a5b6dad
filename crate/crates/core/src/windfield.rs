//! Rotor-effective wind speed series: constant, stepped, and turbulent.
//!
//! The turbulent series is a discretised Ornstein–Uhlenbeck process (exact
//! update for a first-order mean-reverting process) which is then shifted and
//! scaled so that the realised trace has exactly the requested mean and
//! standard deviation.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Turbulent samples are floored at this fraction of the mean speed.
pub const FLOOR_FRACTION: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindKind {
    Constant,
    Steps,
    Turbulent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindSpec {
    pub kind: WindKind,
    pub mean_speed: f64,
    #[serde(default)]
    pub turbulence_intensity: f64,
    #[serde(default = "default_correlation_time")]
    pub correlation_time: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// `(time s, speed m/s)`; before the first entry the mean speed applies.
    #[serde(default)]
    pub step_schedule: Vec<(f64, f64)>,
}

fn default_correlation_time() -> f64 {
    10.0
}

fn default_seed() -> u64 {
    1
}

impl WindSpec {
    pub fn constant(mean_speed: f64) -> Self {
        Self {
            kind: WindKind::Constant,
            mean_speed,
            turbulence_intensity: 0.0,
            correlation_time: default_correlation_time(),
            seed: default_seed(),
            step_schedule: Vec::new(),
        }
    }

    pub fn turbulent(mean_speed: f64, turbulence_intensity: f64, seed: u64) -> Self {
        Self {
            kind: WindKind::Turbulent,
            turbulence_intensity,
            seed,
            ..Self::constant(mean_speed)
        }
    }

    pub fn steps(mean_speed: f64, schedule: Vec<(f64, f64)>) -> Self {
        Self {
            kind: WindKind::Steps,
            step_schedule: schedule,
            ..Self::constant(mean_speed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_speed > 0.0 && self.mean_speed.is_finite()) {
            return Err(Error::param("mean_speed", format!("must be > 0, got {}", self.mean_speed)));
        }
        if !(0.0..0.5).contains(&self.turbulence_intensity) {
            return Err(Error::param(
                "turbulence_intensity",
                format!("must be in [0, 0.5), got {}", self.turbulence_intensity),
            ));
        }
        if !(self.correlation_time > 0.0 && self.correlation_time.is_finite()) {
            return Err(Error::param("correlation_time", "must be > 0"));
        }
        for (k, &(t, v)) in self.step_schedule.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) || !t.is_finite() {
                return Err(Error::param("step_schedule", format!("entry {k}: ({t}, {v}) invalid")));
            }
        }
        if self.kind == WindKind::Steps && self.step_schedule.is_empty() {
            return Err(Error::param("step_schedule", "kind = steps needs at least one entry"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindTrace {
    pub dt: f64,
    pub samples: Vec<f64>,
    /// Samples raised to the floor during generation.
    pub floor_hits: usize,
}

impl WindTrace {
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be > 0, got {dt}")));
        }
        if let Some(k) = samples.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::param("samples", format!("sample {k} = {} is not positive", samples[k])));
        }
        Ok(Self {
            dt,
            samples,
            floor_hits: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Zero-order hold; times past the end repeat the last sample.
    pub fn at(&self, t: f64) -> f64 {
        let k = ((t / self.dt) + 1e-9).floor().max(0.0) as usize;
        self.samples[k.min(self.samples.len() - 1)]
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn std(&self) -> f64 {
        let m = self.mean();
        (self.samples.iter().map(|v| (v - m).powi(2)).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::with_capacity(self.samples.len() * 20);
        for v in &self.samples {
            let _ = writeln!(out, "{v}");
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

pub fn generate(spec: &WindSpec, duration: f64, dt: f64) -> Result<WindTrace> {
    spec.validate()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::param("duration", format!("must be > 0, got {duration}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    let n = (duration / dt).round() as usize;
    let mean = spec.mean_speed;
    match spec.kind {
        WindKind::Constant => WindTrace::new(dt, vec![mean; n]),
        WindKind::Steps => {
            let mut schedule = spec.step_schedule.clone();
            schedule.sort_by(|a, b| a.0.total_cmp(&b.0));
            let samples = (0..n)
                .map(|k| {
                    let t = k as f64 * dt;
                    schedule
                        .iter()
                        .take_while(|(ts, _)| *ts <= t + 1e-9)
                        .last()
                        .map_or(mean, |&(_, v)| v)
                })
                .collect();
            WindTrace::new(dt, samples)
        }
        WindKind::Turbulent => Ok(turbulent(spec, n, dt)),
    }
}

fn turbulent(spec: &WindSpec, n: usize, dt: f64) -> WindTrace {
    let mean = spec.mean_speed;
    let sigma = spec.turbulence_intensity * mean;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let decay = (-dt / spec.correlation_time).exp();
    let kick = (1.0 - decay * decay).sqrt();

    // Start from the stationary distribution.
    let mut x: f64 = StandardNormal.sample(&mut rng);
    let mut path = Vec::with_capacity(n);
    for _ in 0..n {
        path.push(x);
        let z: f64 = StandardNormal.sample(&mut rng);
        x = decay * x + kick * z;
    }

    let m = path.iter().sum::<f64>() / n.max(1) as f64;
    let s = (path.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
    let scale = if s > 0.0 { sigma / s } else { 0.0 };
    let floor = FLOOR_FRACTION * mean;
    let mut floor_hits = 0;
    let samples = path
        .iter()
        .map(|v| {
            let w = mean + (v - m) * scale;
            if w < floor {
                floor_hits += 1;
                floor
            } else {
                w
            }
        })
        .collect();
    WindTrace {
        dt,
        samples,
        floor_hits,
    }
}

/// Reads a trace with one positive speed per line (blank lines skipped).
pub fn load_trace(path: impl AsRef<Path>, dt: f64) -> Result<WindTrace> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            column: 1,
            reason: format!("`{line}` is not a number"),
        })?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: k + 1,
                column: 1,
                reason: format!("wind speed must be positive, got {v}"),
            });
        }
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            column: 1,
            reason: "trace has no samples".into(),
        });
    }
    WindTrace::new(dt, samples)
}
