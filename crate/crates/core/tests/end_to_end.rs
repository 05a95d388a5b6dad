use thrust_governor::governor::GovernorConfig;
use thrust_governor::harness::experiment::{identify, tuned_governor, unconstrained_thrust};
use thrust_governor::harness::{run, sweep, Scenario};
use thrust_governor::windfield::WindSpec;
use thrust_governor::Exec;

fn bounded(v: f64, p_ref: f64, frac: f64, duration: f64) -> (Scenario, f64) {
    let mut sc = Scenario::constant(v, p_ref, duration);
    let bound = frac * unconstrained_thrust(&sc).unwrap();
    sc.governor = GovernorConfig {
        enabled: true,
        f_t_ref: bound,
        ki: 2.0,
        ..GovernorConfig::default()
    };
    (sc, bound)
}

#[test]
fn free_run_tracks_reference_power() {
    let sc = Scenario::constant(9.0, 4.0e6, 250.0);
    let log = run(&sc).unwrap();
    let k0 = log.index_at(sc.settle_time);
    for &p in &log.p_gen[k0..] {
        assert!((p / 4.0e6 - 1.0).abs() < 0.01, "P_gen = {p}");
    }
}

#[test]
fn bounded_run_holds_estimate_at_every_settled_instant() {
    let (sc, bound) = bounded(9.0, 4.5e6, 0.9, 400.0);
    let log = run(&sc).unwrap();
    let k0 = log.index_at(sc.settle_time);
    for k in k0..log.len() {
        assert!((log.f_hat[k] / bound - 1.0).abs() < 0.02, "t = {}: {}", log.t[k], log.f_hat[k]);
        assert!(log.p_gen[k] < log.p_ref[k]);
    }
}

#[test]
fn constrained_power_never_exceeds_baseline() {
    for wind in [WindSpec::constant(10.0), WindSpec::turbulent(9.0, 0.05, 11)] {
        let (mut sc, _) = bounded(wind.mean_speed, 4.5e6, 0.9, 400.0);
        sc.wind = wind;
        let log = run(&sc).unwrap();
        let mut free = sc.clone();
        free.governor.enabled = false;
        let base = run(&free).unwrap();
        let k0 = log.index_at(sc.settle_time);
        for k in k0..log.len() {
            if log.governor_active[k] {
                // allow for the regulator's own transient ripple
                assert!(log.p_gen[k] <= base.p_gen[k] + 1e-3 * base.p_gen[k], "t = {}", log.t[k]);
            }
        }
    }
}

#[test]
fn sweep_is_the_same_in_parallel_and_sequentially() {
    let (sc, bound) = bounded(9.0, 4.5e6, 0.9, 200.0);
    let refs = [1.05 * bound, bound, 0.95 * bound];
    let a = sweep(&sc, &refs, Exec::Sequential).unwrap();
    let b = sweep(&sc, &refs, Exec::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn descending_bounds_give_increasing_reductions() {
    let (sc, bound) = bounded(9.0, 4.5e6, 1.0, 250.0);
    let refs = [0.97 * bound, 0.92 * bound, 0.87 * bound];
    let t = sweep(&sc, &refs, Exec::default()).unwrap();
    for w in t.rows.windows(2) {
        assert!(w[1].summary.thrust_reduction_pct > w[0].summary.thrust_reduction_pct);
        assert!(w[1].summary.power_reduction_pct > w[0].summary.power_reduction_pct);
    }
}

#[test]
fn identified_model_gives_a_usable_governor() {
    let base = Scenario::constant(9.0, 4.5e6, 300.0);
    let fit = identify(&base, 3.0e6, 4.0e6).unwrap();
    println!(
        "A' = {:.4} N/(W s), B' = {:.4} 1/s, residual rms {:.1}% of excursion",
        fit.model.a,
        fit.model.b,
        100.0 * fit.residual_rms / fit.excursion
    );
    assert!(fit.model.a > 0.0 && fit.model.b > 0.0);
    let cfg = tuned_governor(&fit.model, 0.7, 0.0, 7.0e5).unwrap();
    let mut sc = base.clone();
    sc.governor = cfg;
    let log = run(&sc).unwrap();
    let f = log.window_mean(&log.f_hat, 200.0, 301.0);
    assert!((f / 7.0e5 - 1.0).abs() < 0.01, "settled F_hat {f}");
}

#[test]
fn nonfinite_bound_behaves_like_no_governor() {
    let mut sc = Scenario::constant(9.0, 4.0e6, 150.0);
    sc.wind = WindSpec::turbulent(9.0, 0.08, 5);
    let free = run(&sc).unwrap();
    sc.governor.enabled = true;
    sc.governor.f_t_ref = f64::INFINITY;
    assert!(run(&sc).unwrap().bit_identical(&free));
}
