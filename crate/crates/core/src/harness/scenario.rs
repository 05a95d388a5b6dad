//! Scenario files (TOML, versioned with `schema_version`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aero::{load_surface, parametric_surface, AeroSurface, ParametricCoeffs};
use crate::error::{Error, Result};
use crate::estimation::EstimatorConfig;
use crate::governor::GovernorConfig;
use crate::regulation::RegulatorConfig;
use crate::turbine::TurbineParams;
use crate::windfield::WindSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Bundled 40-minute normalized reference profile (ramps and holds in `[0, 1]`).
pub const SURROGATE_PROFILE: &str = include_str!("../../data/power_profile.csv");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    /// s
    pub duration: f64,
    /// s
    pub dt: f64,
    /// Must be a whole multiple of `dt`, s.
    #[serde(default = "default_log_interval")]
    pub log_interval: f64,
    /// Start of the window used for metrics, s.
    #[serde(default = "default_settle_time")]
    pub settle_time: f64,
    /// Overrides the wind and noise seeds when set.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub turbine: TurbineParams,
    #[serde(default)]
    pub surface: SurfaceSource,
    pub wind: WindSpec,
    /// Recorded wind trace, one m/s value per line at `dt`; replaces the
    /// generated series when set. The last sample is held past its end.
    #[serde(default)]
    pub wind_trace: Option<PathBuf>,
    pub power_reference: PowerReference,
    #[serde(default)]
    pub governor: GovernorConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub regulator: RegulatorConfig,
    #[serde(default)]
    pub measurement: MeasurementNoise,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_log_interval() -> f64 {
    0.1
}

fn default_settle_time() -> f64 {
    100.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    #[default]
    Parametric,
    File,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceSource {
    pub kind: SurfaceKind,
    pub coeffs: ParametricCoeffs,
    /// Path of `<name>_cp.csv`; the `_ct.csv` sibling is read alongside.
    pub cp_path: Option<PathBuf>,
}

impl SurfaceSource {
    pub fn build(&self) -> Result<AeroSurface> {
        match self.kind {
            SurfaceKind::Parametric => parametric_surface(&self.coeffs),
            SurfaceKind::File => match &self.cp_path {
                Some(p) => load_surface(p),
                None => Err(Error::Config("surface.kind = \"file\" needs surface.cp_path".into())),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Constant,
    /// Piecewise-linear through `points`; a repeated time gives a jump.
    Schedule,
    /// Normalized profile scaled to `[p_low, p_high]`.
    Profile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerReference {
    pub kind: ReferenceKind,
    /// W
    #[serde(default)]
    pub value: f64,
    /// `(s, W)`
    #[serde(default)]
    pub points: Vec<(f64, f64)>,
    /// Profile CSV `(t s, value in [0, 1])`; the bundled surrogate when absent.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// W
    #[serde(default)]
    pub p_low: f64,
    /// W
    #[serde(default)]
    pub p_high: f64,
}

impl PowerReference {
    pub fn constant(value: f64) -> Self {
        Self {
            kind: ReferenceKind::Constant,
            value,
            points: Vec::new(),
            path: None,
            p_low: 0.0,
            p_high: 0.0,
        }
    }

    pub fn schedule(points: Vec<(f64, f64)>) -> Self {
        Self {
            kind: ReferenceKind::Schedule,
            points,
            ..Self::constant(0.0)
        }
    }

    /// Resolves the reference into a sampled signal.
    pub fn signal(&self) -> Result<ReferenceSignal> {
        match self.kind {
            ReferenceKind::Constant => {
                if !(self.value > 0.0 && self.value.is_finite()) {
                    return Err(Error::param("power_reference.value", format!("must be > 0, got {}", self.value)));
                }
                Ok(ReferenceSignal { points: vec![(0.0, self.value)] })
            }
            ReferenceKind::Schedule => {
                if self.points.is_empty() {
                    return Err(Error::param("power_reference.points", "schedule needs at least one point"));
                }
                check_points(&self.points)?;
                if let Some(&(t, p)) = self.points.iter().find(|(_, p)| !(*p > 0.0)) {
                    return Err(Error::param("power_reference.points", format!("non-positive power {p} at t = {t}")));
                }
                Ok(ReferenceSignal { points: self.points.clone() })
            }
            ReferenceKind::Profile => {
                if !(self.p_low > 0.0 && self.p_high > self.p_low && self.p_high.is_finite()) {
                    return Err(Error::param(
                        "power_reference.p_low",
                        format!("need 0 < p_low < p_high, got [{}, {}]", self.p_low, self.p_high),
                    ));
                }
                let (text, path) = match &self.path {
                    Some(p) => (fs::read_to_string(p).map_err(|e| Error::io(p, e))?, p.clone()),
                    None => (SURROGATE_PROFILE.to_string(), PathBuf::from("<bundled profile>")),
                };
                let norm = parse_profile(&text, &path)?;
                let span = self.p_high - self.p_low;
                Ok(ReferenceSignal {
                    points: norm.into_iter().map(|(t, x)| (t, self.p_low + x * span)).collect(),
                })
            }
        }
    }
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    for (k, w) in points.windows(2).enumerate() {
        if !(w[1].0 >= w[0].0) {
            return Err(Error::param("power_reference.points", format!("time decreases at entry {}", k + 1)));
        }
    }
    if points.iter().any(|(t, p)| !t.is_finite() || !p.is_finite()) {
        return Err(Error::param("power_reference.points", "entries must be finite"));
    }
    Ok(())
}

fn parse_profile(text: &str, path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate().skip(1) {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split(',').map(str::trim);
        let mut field = |col: usize| -> Result<f64> {
            let f = it.next().ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: col,
                reason: "missing column".into(),
            })?;
            f.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: col,
                reason: format!("not a number: {f:?}"),
            })
        };
        let (t, x) = (field(1)?, field(2)?);
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: 2,
                reason: format!("normalized value {x} outside [0, 1]"),
            });
        }
        out.push((t, x));
    }
    if out.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            column: 1,
            reason: "profile has no data rows".into(),
        });
    }
    check_points(&out)?;
    Ok(out)
}

/// Piecewise-linear signal, held constant outside its time span.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSignal {
    points: Vec<(f64, f64)>,
}

impl ReferenceSignal {
    pub fn at(&self, t: f64) -> f64 {
        let p = &self.points;
        // index of the first point strictly after t
        let k = p.partition_point(|&(tk, _)| tk <= t);
        if k == 0 {
            return p[0].1;
        }
        if k == p.len() {
            return p[k - 1].1;
        }
        let (t0, p0) = p[k - 1];
        let (t1, p1) = p[k];
        p0 + (p1 - p0) * (t - t0) / (t1 - t0)
    }
}

/// Zero-mean Gaussian noise on the measured signals (default: none).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementNoise {
    /// rad/s
    pub omega_r_std: f64,
    /// deg
    pub theta_std_deg: f64,
    /// N·m
    pub tau_g_std: f64,
}

impl MeasurementNoise {
    pub fn is_zero(&self) -> bool {
        self.omega_r_std == 0.0 && self.theta_std_deg == 0.0 && self.tau_g_std == 0.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Base name for written files; the scenario name when empty.
    pub stem: String,
    pub plots: bool,
}

impl Scenario {
    /// Constant wind, constant reference, governor disabled.
    pub fn constant(v: f64, p_ref: f64, duration: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: "constant".into(),
            duration,
            dt: 0.01,
            log_interval: default_log_interval(),
            settle_time: default_settle_time(),
            seed: None,
            turbine: TurbineParams::default(),
            surface: SurfaceSource::default(),
            wind: WindSpec::constant(v),
            wind_trace: None,
            power_reference: PowerReference::constant(p_ref),
            governor: GovernorConfig {
                enabled: false,
                ..GovernorConfig::default()
            },
            estimator: EstimatorConfig::default(),
            regulator: RegulatorConfig::default(),
            measurement: MeasurementNoise::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    /// Reads a scenario file; relative paths inside it resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut sc: Scenario = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut sc.surface.cp_path, &mut sc.power_reference.path, &mut sc.wind_trace]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if sc.name.is_empty() {
            sc.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn log_every(&self) -> usize {
        (self.log_interval / self.dt).round() as usize
    }

    pub fn output_stem(&self) -> &str {
        if !self.output.stem.is_empty() {
            &self.output.stem
        } else if !self.name.is_empty() {
            &self.name
        } else {
            "run"
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::param("duration", format!("must be > 0, got {}", self.duration)));
        }
        if !(self.settle_time >= 0.0 && self.duration > self.settle_time) {
            return Err(Error::param(
                "settle_time",
                format!("need 0 <= settle_time < duration, got {} vs {}", self.settle_time, self.duration),
            ));
        }
        let ratio = self.log_interval / self.dt;
        if !(ratio >= 1.0 - 1e-9 && (ratio - ratio.round()).abs() < 1e-6) {
            return Err(Error::param(
                "log_interval",
                format!("must be a whole multiple of dt ({}), got {}", self.dt, self.log_interval),
            ));
        }
        self.turbine.validate()?;
        self.wind.validate()?;
        self.power_reference.signal()?;
        self.governor.validate()?;
        self.estimator.validate()?;
        let m = &self.measurement;
        for (name, v) in [
            ("measurement.omega_r_std", m.omega_r_std),
            ("measurement.theta_std_deg", m.theta_std_deg),
            ("measurement.tau_g_std", m.tau_g_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}
