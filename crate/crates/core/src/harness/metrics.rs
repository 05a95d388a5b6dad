//! Thrust and power reductions of a constrained run against its baseline.

use std::fmt::Write as _;

use super::scenario::Scenario;
use super::sim::{run, SimLog};
use crate::error::{Error, Result};
use crate::exec::Exec;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Summary {
    /// Mean true thrust reduction over the settled window, %.
    pub thrust_reduction_pct: f64,
    /// Largest instantaneous shortfall of generated power, W.
    pub max_power_loss: f64,
    /// Mean generated power reduction over the settled window, %.
    pub power_reduction_pct: f64,
    pub mean_thrust: f64,
    pub mean_power: f64,
}

/// Compares `log` with `baseline` from `settle_time` onward.
pub fn metrics(log: &SimLog, baseline: &SimLog, settle_time: f64) -> Result<Summary> {
    if log.len() != baseline.len() {
        return Err(Error::Misaligned(format!("{} samples against {}", log.len(), baseline.len())));
    }
    if let Some(k) = (0..log.len()).find(|&k| log.t[k].to_bits() != baseline.t[k].to_bits()) {
        return Err(Error::Misaligned(format!(
            "time stamps differ at sample {k}: {} vs {}",
            log.t[k], baseline.t[k]
        )));
    }
    if let Some(k) = (0..log.len()).find(|&k| log.p_ref[k].to_bits() != baseline.p_ref[k].to_bits()) {
        return Err(Error::Misaligned(format!("power references differ at t = {}", log.t[k])));
    }
    let k0 = log.index_at(settle_time);
    if k0 >= log.len() {
        return Err(Error::Misaligned(format!("no samples after the settle time {settle_time} s")));
    }
    let mean = |c: &[f64]| c[k0..].iter().sum::<f64>() / (c.len() - k0) as f64;
    let (f, f_base) = (mean(&log.f_true), mean(&baseline.f_true));
    let (p, p_base) = (mean(&log.p_gen), mean(&baseline.p_gen));
    let max_power_loss = (k0..log.len())
        .map(|k| baseline.p_gen[k] - log.p_gen[k])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Summary {
        thrust_reduction_pct: 100.0 * (f_base - f) / f_base,
        max_power_loss,
        power_reduction_pct: 100.0 * (p_base - p) / p_base,
        mean_thrust: f,
        mean_power: p,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    /// N
    pub thrust_ref: f64,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub baseline: Summary,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "thrust_ref [kN],thrust_reduction [%],max_power_loss [MW],power_reduction [%],mean_thrust [kN],mean_power [MW]\n",
        );
        for r in &self.rows {
            let s = &r.summary;
            let _ = writeln!(
                out,
                "{},{:.4},{:.6},{:.4},{:.3},{:.6}",
                r.thrust_ref / 1e3,
                s.thrust_reduction_pct,
                s.max_power_loss / 1e6,
                s.power_reduction_pct,
                s.mean_thrust / 1e3,
                s.mean_power / 1e6
            );
        }
        out
    }
}

/// One governor-free baseline plus one constrained run per bound. Runs are
/// independent and dispatched through `exec`; rows keep the input order.
pub fn sweep(base: &Scenario, thrust_refs: &[f64], exec: Exec) -> Result<SweepTable> {
    if thrust_refs.is_empty() {
        return Err(Error::param("thrust_refs", "need at least one thrust reference"));
    }
    if let Some(r) = thrust_refs.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::param("thrust_refs", format!("references must be > 0, got {r}")));
    }
    let jobs: Vec<Option<f64>> = std::iter::once(None).chain(thrust_refs.iter().copied().map(Some)).collect();
    let logs = exec.map(&jobs, |job| {
        let mut sc = base.clone();
        match job {
            None => sc.governor.enabled = false,
            Some(r) => {
                sc.governor.enabled = true;
                sc.governor.f_t_ref = *r;
            }
        }
        run(&sc)
    });
    let mut logs = logs.into_iter();
    let baseline_log = logs.next().expect("baseline job")?;
    let baseline = metrics(&baseline_log, &baseline_log, base.settle_time)?;
    let rows = thrust_refs
        .iter()
        .zip(logs)
        .map(|(&r, log)| {
            Ok(SweepRow {
                thrust_ref: r,
                summary: metrics(&log?, &baseline_log, base.settle_time)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { baseline, rows })
}
