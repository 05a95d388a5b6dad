//! Experiments on the nonlinear closed loop: demanded-power steps for
//! identification, and settled operating levels.

use super::scenario::{PowerReference, Scenario};
use super::sim::run;
use crate::error::Result;
use crate::governor::{tune_pi, GovernorConfig, PlantModel};
use crate::sysid::{fit_first_order, FitReport, StepExperiment};

/// Steps the demanded power of `base` (governor off) from `p_before` to
/// `p_after` at `step_time` and records the true thrust at the log rate.
pub fn power_step_experiment(base: &Scenario, p_before: f64, p_after: f64, step_time: f64, duration: f64) -> Result<StepExperiment> {
    let mut sc = base.clone();
    sc.governor.enabled = false;
    sc.duration = duration;
    sc.settle_time = sc.settle_time.min(step_time);
    sc.power_reference = PowerReference::schedule(vec![(0.0, p_before), (step_time, p_before), (step_time, p_after)]);
    let log = run(&sc)?;
    Ok(StepExperiment {
        dt: sc.log_interval,
        p_dem_before: p_before,
        p_dem_after: p_after,
        thrust_series: log.f_true,
        step_time,
    })
}

/// Identifies the thrust response of the down-regulated plant around `base`.
pub fn identify(base: &Scenario, p_before: f64, p_after: f64) -> Result<FitReport> {
    let exp = power_step_experiment(base, p_before, p_after, 60.0, 180.0)?;
    fit_first_order(&exp)
}

/// Governor gains from pole placement on an identified model.
pub fn tuned_governor(model: &PlantModel, zeta: f64, kp: f64, f_t_ref: f64) -> Result<GovernorConfig> {
    let (_, ki) = tune_pi(model, zeta, kp)?;
    Ok(GovernorConfig {
        f_t_ref,
        kp,
        ki,
        ..GovernorConfig::default()
    })
}

/// Settled means of true thrust, estimated thrust and generated power of a
/// run, from its settle time to the end.
pub fn settled_levels(sc: &Scenario) -> Result<(f64, f64, f64)> {
    let log = run(sc)?;
    let end = sc.duration + 1.0;
    Ok((
        log.window_mean(&log.f_true, sc.settle_time, end),
        log.window_mean(&log.f_hat, sc.settle_time, end),
        log.window_mean(&log.p_gen, sc.settle_time, end),
    ))
}

/// Settled true thrust of `sc` without the governor.
pub fn unconstrained_thrust(sc: &Scenario) -> Result<f64> {
    let mut sc = sc.clone();
    sc.governor.enabled = false;
    Ok(settled_levels(&sc)?.0)
}
