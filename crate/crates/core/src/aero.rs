//! Rotor conversion-efficiency surfaces Cp(λ, θ) and Ct(λ, θ).
//!
//! Pitch is stored in radians; the CSV layout and the parametric model work
//! in degrees. Lookups outside the grid clamp to the nearest edge.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BETZ_LIMIT: f64 = 16.0 / 27.0;
/// Upper bound used for validating Cp entries (Betz limit rounded to 3 places).
pub const CP_MAX: f64 = 0.593;
pub const CT_MAX: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct AeroSurface {
    lambda_grid: Vec<f64>,
    theta_grid: Vec<f64>,
    /// Row-major, one row per lambda.
    cp_table: Vec<f64>,
    ct_table: Vec<f64>,
}

/// A grid node selected by a search over the surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    pub lambda: f64,
    pub theta: f64,
    pub cp: f64,
    pub ct: f64,
}

impl AeroSurface {
    pub fn new(
        lambda_grid: Vec<f64>,
        theta_grid: Vec<f64>,
        cp_table: Vec<f64>,
        ct_table: Vec<f64>,
    ) -> Result<Self> {
        check_grid("lambda_grid", &lambda_grid)?;
        check_grid("theta_grid", &theta_grid)?;
        let n = lambda_grid.len() * theta_grid.len();
        if cp_table.len() != n || ct_table.len() != n {
            return Err(Error::param(
                "cp_table/ct_table",
                format!(
                    "expected {} x {} = {n} entries, got {} and {}",
                    lambda_grid.len(),
                    theta_grid.len(),
                    cp_table.len(),
                    ct_table.len()
                ),
            ));
        }
        let cols = theta_grid.len();
        for (k, &v) in cp_table.iter().enumerate() {
            if !(0.0..=CP_MAX).contains(&v) {
                return Err(Error::param(
                    "cp_table",
                    format!("entry [{}][{}] = {v} outside [0, {CP_MAX}]", k / cols, k % cols),
                ));
            }
        }
        for (k, &v) in ct_table.iter().enumerate() {
            if !(0.0..=CT_MAX).contains(&v) {
                return Err(Error::param(
                    "ct_table",
                    format!("entry [{}][{}] = {v} outside [0, {CT_MAX}]", k / cols, k % cols),
                ));
            }
        }
        Ok(Self {
            lambda_grid,
            theta_grid,
            cp_table,
            ct_table,
        })
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda_grid
    }

    /// Pitch grid in radians.
    pub fn theta_grid(&self) -> &[f64] {
        &self.theta_grid
    }

    pub fn cp_at(&self, i: usize, j: usize) -> f64 {
        self.cp_table[i * self.theta_grid.len() + j]
    }

    pub fn ct_at(&self, i: usize, j: usize) -> f64 {
        self.ct_table[i * self.theta_grid.len() + j]
    }

    pub fn cp(&self, lambda: f64, theta: f64) -> f64 {
        self.interpolate(&self.cp_table, lambda, theta)
    }

    pub fn ct(&self, lambda: f64, theta: f64) -> f64 {
        self.interpolate(&self.ct_table, lambda, theta)
    }

    fn interpolate(&self, table: &[f64], lambda: f64, theta: f64) -> f64 {
        let (i, tx) = locate(&self.lambda_grid, lambda);
        let (j, ty) = locate(&self.theta_grid, theta);
        let cols = self.theta_grid.len();
        let c00 = table[i * cols + j];
        let c01 = table[i * cols + j + 1];
        let c10 = table[(i + 1) * cols + j];
        let c11 = table[(i + 1) * cols + j + 1];
        (1.0 - tx) * (1.0 - ty) * c00 + tx * (1.0 - ty) * c10 + (1.0 - tx) * ty * c01 + tx * ty * c11
    }

    /// Grid node with the largest Cp (first in row-major order on ties).
    pub fn max_cp_point(&self) -> OperatingPoint {
        let mut best = (0, 0);
        for i in 0..self.lambda_grid.len() {
            for j in 0..self.theta_grid.len() {
                if self.cp_at(i, j) > self.cp_at(best.0, best.1) {
                    best = (i, j);
                }
            }
        }
        self.node(best.0, best.1)
    }

    fn node(&self, i: usize, j: usize) -> OperatingPoint {
        OperatingPoint {
            lambda: self.lambda_grid[i],
            theta: self.theta_grid[j],
            cp: self.cp_at(i, j),
            ct: self.ct_at(i, j),
        }
    }

    /// Minimum-thrust grid node among those producing at least `cp_required`.
    ///
    /// This is the min-Ct operating locus used for analysis; the control loop
    /// never calls it.
    pub fn min_ct_locus(&self, cp_required: f64) -> Result<OperatingPoint> {
        if !(cp_required > 0.0) {
            return Err(Error::param("cp_required", format!("must be > 0, got {cp_required}")));
        }
        let mut best: Option<(usize, usize)> = None;
        for i in 0..self.lambda_grid.len() {
            for j in 0..self.theta_grid.len() {
                if self.cp_at(i, j) < cp_required {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bi, bj)) => {
                        let (ct, bct) = (self.ct_at(i, j), self.ct_at(bi, bj));
                        ct < bct || (ct == bct && self.cp_at(i, j) > self.cp_at(bi, bj))
                    }
                };
                if better {
                    best = Some((i, j));
                }
            }
        }
        best.map(|(i, j)| self.node(i, j)).ok_or(Error::Infeasible {
            required: cp_required,
            max: self.max_cp_point().cp,
        })
    }

    /// Samples the min-Ct locus at `n` Cp levels between `0.3 * Cp_max` and `Cp_max`.
    pub fn min_ct_curve(&self, n: usize) -> Vec<OperatingPoint> {
        let cp_max = self.max_cp_point().cp;
        (0..n)
            .filter_map(|k| {
                let frac = if n > 1 { 0.3 + 0.7 * k as f64 / (n - 1) as f64 } else { 1.0 };
                self.min_ct_locus(frac * cp_max).ok()
            })
            .collect()
    }

    /// Smallest pitch at which Cp(lambda, ·) drops to `cp_target`, found by
    /// bisection between the fine-pitch edge and the last grid pitch. Returns
    /// `None` when even fine pitch cannot reach the target.
    pub fn pitch_for_cp(&self, lambda: f64, cp_target: f64) -> Option<f64> {
        let lo0 = self.theta_grid[0];
        let hi0 = *self.theta_grid.last().unwrap();
        if self.cp(lambda, lo0) < cp_target {
            return None;
        }
        if self.cp(lambda, hi0) >= cp_target {
            return Some(hi0);
        }
        let (mut lo, mut hi) = (lo0, hi0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.cp(lambda, mid) >= cp_target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::param(name, format!("needs at least 2 points, got {}", grid.len())));
    }
    if let Some(k) = grid.iter().position(|v| !v.is_finite()) {
        return Err(Error::param(name, format!("non-finite value at index {k}")));
    }
    if let Some(k) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::param(
            name,
            format!("not strictly increasing at index {} ({} after {})", k + 1, grid[k + 1], grid[k]),
        ));
    }
    Ok(())
}

/// Cell index and fractional position of `x` on `grid`, clamped to the edges.
fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    let last = grid.len() - 1;
    if !(x > grid[0]) {
        return (0, 0.0);
    }
    if x >= grid[last] {
        return (last - 1, 1.0);
    }
    let i = grid.partition_point(|&g| g <= x) - 1;
    (i, (x - grid[i]) / (grid[i + 1] - grid[i]))
}

/// Coefficients of the analytic surface model
///
/// `Cp = c1 (c2/λi - c3 θ - c4) exp(-c5/λi) + c6 λ`, with
/// `1/λi = 1/(λ + 0.08 θ) - 0.035/(1 + θ³)` and θ in degrees.
///
/// Ct is `Cp · k_t(λ)` with `k_t(λ) = (ct_at_optimum / Cp*) (λ/λ*)^ct_lambda_exponent`,
/// where (λ*, Cp*) is the grid maximum of Cp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametricCoeffs {
    pub c: [f64; 6],
    pub ct_at_optimum: f64,
    pub ct_lambda_exponent: f64,
}

impl Default for ParametricCoeffs {
    fn default() -> Self {
        Self {
            c: [0.5176, 116.0, 0.4, 5.0, 21.0, 0.0068],
            ct_at_optimum: 0.78,
            ct_lambda_exponent: 1.0 / 3.0,
        }
    }
}

impl ParametricCoeffs {
    fn raw_cp(&self, lambda: f64, theta_deg: f64) -> f64 {
        let [c1, c2, c3, c4, c5, c6] = self.c;
        let inv_li = 1.0 / (lambda + 0.08 * theta_deg) - 0.035 / (1.0 + theta_deg.powi(3));
        c1 * (c2 * inv_li - c3 * theta_deg - c4) * (-c5 * inv_li).exp() + c6 * lambda
    }
}

pub fn default_lambda_grid() -> Vec<f64> {
    (0..=56).map(|k| 1.0 + 0.25 * k as f64).collect()
}

pub fn default_theta_grid_deg() -> Vec<f64> {
    (0..=50).map(|k| 0.5 * k as f64).collect()
}

/// Samples the analytic model on the default grids
/// (λ ∈ [1, 15] step 0.25, θ ∈ [0°, 25°] step 0.5°).
///
/// Cp is made non-increasing in pitch along each λ row (running minimum), so
/// feathering never adds power or thrust.
pub fn parametric_surface(coeffs: &ParametricCoeffs) -> Result<AeroSurface> {
    if coeffs.c.iter().any(|c| !c.is_finite()) {
        return Err(Error::param("c", "coefficients must be finite"));
    }
    if !(coeffs.ct_at_optimum > 0.0 && coeffs.ct_at_optimum <= CT_MAX) {
        return Err(Error::param("ct_at_optimum", format!("must be in (0, {CT_MAX}]")));
    }
    if !coeffs.ct_lambda_exponent.is_finite() {
        return Err(Error::param("ct_lambda_exponent", "must be finite"));
    }
    let lambdas = default_lambda_grid();
    let thetas_deg = default_theta_grid_deg();
    let cols = thetas_deg.len();

    let mut raw_max = f64::NEG_INFINITY;
    let mut cp = Vec::with_capacity(lambdas.len() * cols);
    for &l in &lambdas {
        let mut running = f64::INFINITY;
        for &t in &thetas_deg {
            let v = coeffs.raw_cp(l, t);
            raw_max = raw_max.max(v);
            running = running.min(v.max(0.0));
            cp.push(running);
        }
    }
    if raw_max > CP_MAX {
        return Err(Error::param(
            "c",
            format!("model peaks at Cp = {raw_max:.4}, above the Betz bound {CP_MAX}"),
        ));
    }
    if raw_max <= 0.0 {
        return Err(Error::param("c", "model produces no positive Cp on the grid"));
    }

    let (mut bi, mut bj) = (0, 0);
    for i in 0..lambdas.len() {
        for j in 0..cols {
            if cp[i * cols + j] > cp[bi * cols + bj] {
                (bi, bj) = (i, j);
            }
        }
    }
    let (lambda_star, cp_star) = (lambdas[bi], cp[bi * cols + bj]);
    let kt_star = coeffs.ct_at_optimum / cp_star;
    let ct = cp
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let l = lambdas[k / cols];
            (v * kt_star * (l / lambda_star).powf(coeffs.ct_lambda_exponent)).clamp(0.0, CT_MAX)
        })
        .collect();

    let thetas = thetas_deg.iter().map(|d| d.to_radians()).collect();
    AeroSurface::new(lambdas, thetas, cp, ct)
}

fn sibling_ct_path(cp_path: &Path) -> Result<PathBuf> {
    let name = cp_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::param("path", format!("{} has no file name", cp_path.display())))?;
    let stem = name.strip_suffix("_cp.csv").ok_or_else(|| {
        Error::param("path", format!("{name}: Cp table must be named `<name>_cp.csv`"))
    })?;
    Ok(cp_path.with_file_name(format!("{stem}_ct.csv")))
}

/// Loads `<name>_cp.csv` and its sibling `<name>_ct.csv`.
pub fn load_surface(cp_path: impl AsRef<Path>) -> Result<AeroSurface> {
    let cp_path = cp_path.as_ref();
    let ct_path = sibling_ct_path(cp_path)?;
    load_surface_pair(cp_path, &ct_path)
}

pub fn load_surface_pair(cp_path: &Path, ct_path: &Path) -> Result<AeroSurface> {
    let cp_text = fs::read_to_string(cp_path).map_err(|e| Error::io(cp_path, e))?;
    let ct_text = fs::read_to_string(ct_path).map_err(|e| Error::io(ct_path, e))?;
    let cp = parse_table(cp_path, &cp_text, CP_MAX)?;
    let ct = parse_table(ct_path, &ct_text, CT_MAX)?;
    if cp.lambdas != ct.lambdas || cp.thetas_deg != ct.thetas_deg {
        return Err(Error::Parse {
            path: ct_path.to_path_buf(),
            line: 1,
            column: 1,
            reason: format!("grid differs from {}", cp_path.display()),
        });
    }
    let thetas = cp.thetas_deg.iter().map(|d| d.to_radians()).collect();
    AeroSurface::new(cp.lambdas, thetas, cp.values, ct.values)
}

struct Table {
    lambdas: Vec<f64>,
    thetas_deg: Vec<f64>,
    values: Vec<f64>,
}

fn parse_table(path: &Path, text: &str, max: f64) -> Result<Table> {
    let err = |line: usize, column: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        reason,
    };
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = rows.next().ok_or_else(|| err(1, 1, "empty file".into()))?;
    let mut thetas_deg = Vec::new();
    for (col, field) in header.split(',').enumerate().skip(1) {
        let v: f64 = field
            .trim()
            .parse()
            .map_err(|_| err(hline, col + 1, format!("bad pitch value `{}`", field.trim())))?;
        if let Some(&prev) = thetas_deg.last() {
            if v <= prev {
                return Err(err(hline, col + 1, format!("pitch grid not increasing at index {}", col - 1)));
            }
        }
        thetas_deg.push(v);
    }
    if thetas_deg.len() < 2 {
        return Err(err(hline, 1, "need at least 2 pitch columns".into()));
    }

    let mut lambdas: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for (line, row) in rows {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != thetas_deg.len() + 1 {
            return Err(err(
                line,
                fields.len().min(thetas_deg.len() + 1),
                format!("expected {} fields, got {}", thetas_deg.len() + 1, fields.len()),
            ));
        }
        let l: f64 = fields[0]
            .parse()
            .map_err(|_| err(line, 1, format!("bad lambda value `{}`", fields[0])))?;
        if let Some(&prev) = lambdas.last() {
            if !(l > prev) {
                return Err(err(
                    line,
                    1,
                    format!("lambda grid not increasing at index {} ({l} after {prev})", lambdas.len()),
                ));
            }
        }
        lambdas.push(l);
        for (col, field) in fields.iter().enumerate().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| err(line, col + 1, format!("bad coefficient `{field}`")))?;
            if !(0.0..=max).contains(&v) {
                return Err(err(line, col + 1, format!("coefficient {v} outside [0, {max}]")));
            }
            values.push(v);
        }
    }
    if lambdas.len() < 2 {
        return Err(err(hline, 1, "need at least 2 lambda rows".into()));
    }
    Ok(Table {
        lambdas,
        thetas_deg,
        values,
    })
}

fn format_table(surface: &AeroSurface, table: &[f64]) -> String {
    let mut out = String::from("lambda\\theta");
    for &t in surface.theta_grid() {
        // Rounded so that grids generated from round degree values reload exactly.
        let deg = (t.to_degrees() * 1e9).round() / 1e9;
        let _ = write!(out, ",{deg}");
    }
    out.push('\n');
    let cols = surface.theta_grid.len();
    for (i, &l) in surface.lambda_grid().iter().enumerate() {
        let _ = write!(out, "{l}");
        for v in &table[i * cols..(i + 1) * cols] {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Writes `<name>_cp.csv` and `<name>_ct.csv`.
pub fn save_surface(surface: &AeroSurface, cp_path: impl AsRef<Path>) -> Result<()> {
    let cp_path = cp_path.as_ref();
    let ct_path = sibling_ct_path(cp_path)?;
    fs::write(cp_path, format_table(surface, &surface.cp_table)).map_err(|e| Error::io(cp_path, e))?;
    fs::write(&ct_path, format_table(surface, &surface.ct_table)).map_err(|e| Error::io(&ct_path, e))?;
    Ok(())
}
