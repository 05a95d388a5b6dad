//! First-order identification of the demanded-power to thrust response.
//!
//! For a step `ΔP` at `t₀` the model `A/(s+B)` gives
//! `F(t) = F₀ + ΔP (A/B)(1 − e^{−B(t−t₀)})`. The pole is found by a log grid
//! followed by golden-section refinement; the gain is linear least squares
//! at each candidate pole.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::governor::PlantModel;

/// A thrust record around one step of the demanded power. Sample `k` is taken
/// at `k·dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepExperiment {
    pub dt: f64,
    pub p_dem_before: f64,
    pub p_dem_after: f64,
    pub thrust_series: Vec<f64>,
    pub step_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub model: PlantModel,
    /// Pre-step thrust level, N.
    pub f0: f64,
    /// Observed steady change (mean of the last 10% minus `f0`), N.
    pub excursion: f64,
    pub residual_rms: f64,
    /// `(t, measured, fitted)` for every sample.
    pub residuals: Vec<(f64, f64, f64)>,
}

impl FitReport {
    /// Gain in kN per MW per second.
    pub fn a_kn_per_mw(&self) -> f64 {
        self.model.a * 1e3
    }

    pub fn steady_gain(&self) -> f64 {
        self.model.dc_gain()
    }

    pub fn write_residuals(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("t [s],thrust [N],fitted [N],residual [N]\n");
        for &(t, y, f) in &self.residuals {
            out.push_str(&format!("{t},{y},{f},{}\n", y - f));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

impl StepExperiment {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.step_time >= 0.0 && self.step_time.is_finite()) {
            return Err(Error::param("step_time", format!("must be >= 0, got {}", self.step_time)));
        }
        if !self.p_dem_before.is_finite() || !self.p_dem_after.is_finite() {
            return Err(Error::param("p_dem", "step levels must be finite"));
        }
        if let Some(k) = self.thrust_series.iter().position(|x| !x.is_finite()) {
            return Err(Error::param("thrust_series", format!("sample {k} is not finite")));
        }
        Ok(())
    }

    fn step_index(&self) -> usize {
        (self.step_time / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Synthetic response of `model` sampled at `dt` for `duration` seconds.
    pub fn synthetic(
        model: &PlantModel,
        f0: f64,
        p_before: f64,
        p_after: f64,
        step_time: f64,
        dt: f64,
        duration: f64,
    ) -> Self {
        let n = (duration / dt).round() as usize + 1;
        let dp = p_after - p_before;
        let thrust_series = (0..n)
            .map(|k| {
                let tau = k as f64 * dt - step_time;
                if tau < 0.0 {
                    f0
                } else {
                    f0 + dp * model.dc_gain() * (1.0 - (-model.b * tau).exp())
                }
            })
            .collect();
        Self {
            dt,
            p_dem_before: p_before,
            p_dem_after: p_after,
            thrust_series,
            step_time,
        }
    }

    /// Adds zero-mean Gaussian noise with the given standard deviation.
    pub fn with_noise(mut self, std: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, std).expect("finite noise std");
        for y in &mut self.thrust_series {
            *y += normal.sample(&mut rng);
        }
        self
    }
}

const GRID_POINTS: usize = 240;

/// Fits `(A, B)` to a step experiment.
pub fn fit_first_order(exp: &StepExperiment) -> Result<FitReport> {
    exp.validate()?;
    let dp = exp.p_dem_after - exp.p_dem_before;
    if dp == 0.0 {
        return Err(Error::FitRejected("demanded power does not change".into()));
    }
    let y = &exp.thrust_series;
    let k0 = exp.step_index();
    if k0 == 0 {
        return Err(Error::FitRejected("no samples before the step to fix the initial level".into()));
    }
    if k0 >= y.len() {
        return Err(Error::FitRejected("step lies beyond the end of the record".into()));
    }
    let post = y.len() - k0;
    if post < 20 {
        return Err(Error::FitRejected(format!("only {post} samples after the step")));
    }
    let f0 = y[..k0].iter().sum::<f64>() / k0 as f64;

    // settling: the last 10% must show no drift beyond 2% of the excursion
    let tail = (post / 10).max(4);
    let tail_slice = &y[y.len() - tail..];
    let tail_mean = tail_slice.iter().sum::<f64>() / tail as f64;
    let excursion = tail_mean - f0;
    if excursion.abs() <= f64::EPSILON * f0.abs().max(1.0) {
        return Err(Error::FitRejected("thrust shows no response to the step".into()));
    }
    let half = tail / 2;
    let first = tail_slice[..half].iter().sum::<f64>() / half as f64;
    let second = tail_slice[half..].iter().sum::<f64>() / (tail - half) as f64;
    if (second - first).abs() > 0.02 * excursion.abs() {
        return Err(Error::FitRejected(format!(
            "series has not settled: last 10% drifts by {:.3e} N against an excursion of {:.3e} N",
            second - first,
            excursion
        )));
    }

    let taus: Vec<f64> = (k0..y.len()).map(|k| k as f64 * exp.dt - exp.step_time).collect();
    let dy: Vec<f64> = y[k0..].iter().map(|v| v - f0).collect();

    // least-squares steady gain K = A/B for a candidate pole, and the residual
    let fit_gain = |b: f64| -> (f64, f64) {
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (tau, d) in taus.iter().zip(&dy) {
            let phi = dp * (1.0 - (-b * tau).exp());
            sxy += phi * d;
            sxx += phi * phi;
        }
        let k = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let ssr = taus
            .iter()
            .zip(&dy)
            .map(|(tau, d)| {
                let r = d - k * dp * (1.0 - (-b * tau).exp());
                r * r
            })
            .sum::<f64>();
        (k, ssr)
    };

    let span = taus.last().copied().unwrap_or(exp.dt).max(exp.dt);
    let (b_lo, b_hi) = (0.1 / span, 2.0 / exp.dt);
    let ratio = (b_hi / b_lo).ln();
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| b_lo * (ratio * i as f64 / (GRID_POINTS - 1) as f64).exp())
        .collect();
    let ssr: Vec<f64> = grid.iter().map(|&b| fit_gain(b).1).collect();
    let best = ssr
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if best == 0 || best == GRID_POINTS - 1 {
        return Err(Error::FitRejected(format!(
            "pole search hit the edge of [{b_lo:.3e}, {b_hi:.3e}] 1/s"
        )));
    }

    let b = golden_min(|b| fit_gain(b).1, grid[best - 1], grid[best + 1], 1e-12);
    let (k, ssr) = fit_gain(b);
    let model = PlantModel { a: k * b, b };
    if !(model.a.is_finite() && model.a != 0.0) {
        return Err(Error::FitRejected(format!("degenerate gain {}", model.a)));
    }

    let residuals = (0..y.len())
        .map(|i| {
            let t = i as f64 * exp.dt;
            let tau = t - exp.step_time;
            let fitted = if i < k0 { f0 } else { f0 + k * dp * (1.0 - (-b * tau).exp()) };
            (t, y[i], fitted)
        })
        .collect::<Vec<_>>();
    let total_ssr = ssr + y[..k0].iter().map(|v| (v - f0).powi(2)).sum::<f64>();
    Ok(FitReport {
        model,
        f0,
        excursion,
        residual_rms: (total_ssr / y.len() as f64).sqrt(),
        residuals,
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Summary of repeated fits on noisy copies of one synthetic response.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseStudy {
    pub fits: Vec<PlantModel>,
    /// Mean absolute relative error of `A`.
    pub a_error: f64,
    pub b_error: f64,
}

/// Fits `seeds.len()` noisy copies of `clean`, noise std given as a fraction of
/// the step excursion.
pub fn noise_study(
    clean: &StepExperiment,
    truth: &PlantModel,
    noise_fraction: f64,
    seeds: &[u64],
    exec: Exec,
) -> Result<NoiseStudy> {
    let excursion = (clean.p_dem_after - clean.p_dem_before).abs() * truth.dc_gain();
    let std = noise_fraction * excursion;
    let fits = exec
        .map(seeds, |&seed| fit_first_order(&clean.clone().with_noise(std, seed)).map(|r| r.model))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let n = fits.len().max(1) as f64;
    let a_error = fits.iter().map(|m| ((m.a - truth.a) / truth.a).abs()).sum::<f64>() / n;
    let b_error = fits.iter().map(|m| ((m.b - truth.b) / truth.b).abs()).sum::<f64>() / n;
    Ok(NoiseStudy { fits, a_error, b_error })
}

/// Reads a `t, p_dem, thrust` CSV with a header row. The step is taken at the
/// first change of `p_dem`.
pub fn load_experiment(path: impl AsRef<Path>) -> Result<StepExperiment> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_experiment(&text, path)
}

fn parse_experiment(text: &str, path: &Path) -> Result<StepExperiment> {
    let parse_err = |line: usize, column: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        reason,
    };
    let mut rows: Vec<[f64; 3]> = Vec::new();
    for (i, raw) in text.lines().enumerate().skip(1) {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(i + 1, 1, format!("expected 3 columns, found {}", fields.len())));
        }
        let mut row = [0.0; 3];
        for (j, f) in fields.iter().enumerate() {
            row[j] = f
                .parse()
                .map_err(|_| parse_err(i + 1, j + 1, format!("not a number: {f:?}")))?;
        }
        rows.push(row);
    }
    if rows.len() < 3 {
        return Err(parse_err(text.lines().count(), 1, "need at least 3 data rows".into()));
    }
    let dt = rows[1][0] - rows[0][0];
    if !(dt > 0.0) {
        return Err(parse_err(3, 1, "time column must increase".into()));
    }
    for (k, w) in rows.windows(2).enumerate() {
        if ((w[1][0] - w[0][0]) - dt).abs() > 1e-6 * dt.max(1e-9) + 1e-9 {
            return Err(parse_err(k + 3, 1, format!("non-uniform sample spacing at t = {}", w[1][0])));
        }
    }
    let p0 = rows[0][1];
    let tol = 1e-9 * p0.abs().max(1.0);
    let k_step = rows
        .iter()
        .position(|r| (r[1] - p0).abs() > tol)
        .ok_or_else(|| Error::FitRejected("demanded power does not change".into()))?;
    Ok(StepExperiment {
        dt,
        p_dem_before: p0,
        p_dem_after: rows[rows.len() - 1][1],
        thrust_series: rows.iter().map(|r| r[2]).collect(),
        step_time: rows[k_step][0] - rows[0][0],
    })
}

/// Writes an experiment in the format read by [`load_experiment`].
pub fn save_experiment(exp: &StepExperiment, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    let io = |e| Error::io(path, e);
    writeln!(out, "t [s],p_dem [W],thrust [N]").map_err(io)?;
    let k0 = exp.step_index();
    for (k, y) in exp.thrust_series.iter().enumerate() {
        let p = if k < k0 { exp.p_dem_before } else { exp.p_dem_after };
        writeln!(out, "{},{p},{y}", k as f64 * exp.dt).map_err(io)?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
