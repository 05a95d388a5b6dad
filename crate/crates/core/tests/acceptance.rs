//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use thrust_governor::governor::bench::{BenchInputs, LinearBench, Step};
use thrust_governor::governor::{loop_analysis, log_grid, reference, tune_pi, GovernorConfig, PlantModel, SwitchLaw};
use thrust_governor::harness::experiment::{identify, tuned_governor, unconstrained_thrust};
use thrust_governor::harness::{run, sweep, Scenario, SimLog};
use thrust_governor::sysid::{fit_first_order, noise_study, StepExperiment};
use thrust_governor::windfield::WindSpec;
use thrust_governor::Exec;

type Outcome = Result<String, String>;

const P_REF: f64 = 4.5e6;
const WIND: f64 = 9.0;
const TURBULENT_SEED: u64 = 1;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    format!("error: {e}")
}

/// Shared plant operating point and governor tuned on it.
struct Setup {
    base: Scenario,
    f_unconstrained: f64,
    governor: GovernorConfig,
}

fn setup() -> Result<Setup, String> {
    let base = Scenario::constant(WIND, P_REF, 300.0);
    let f_unconstrained = unconstrained_thrust(&base).map_err(err)?;
    let fit = identify(&base, 3.0e6, 4.0e6).map_err(err)?;
    println!(
        "  identified around {WIND} m/s: A' = {:.4} N/(W s) ({:.1} kN/MW s), B' = {:.4} 1/s, residual rms {:.1}% of excursion",
        fit.model.a,
        fit.a_kn_per_mw(),
        fit.model.b,
        100.0 * fit.residual_rms / fit.excursion
    );
    let governor = tuned_governor(&fit.model, reference::ZETA, 0.0, 0.9 * f_unconstrained).map_err(err)?;
    println!(
        "  unconstrained thrust {:.1} kN, governor ki {:.3} W/(N s)",
        f_unconstrained / 1e3,
        governor.ki
    );
    Ok(Setup {
        base,
        f_unconstrained,
        governor,
    })
}

fn constrained(s: &Setup, f_t_ref: f64) -> Scenario {
    let mut sc = s.base.clone();
    sc.governor = GovernorConfig {
        enabled: true,
        f_t_ref,
        ..s.governor.clone()
    };
    sc
}

fn turbulent(mut sc: Scenario, duration: f64) -> Scenario {
    sc.duration = duration;
    sc.wind = WindSpec::turbulent(WIND, 0.05, TURBULENT_SEED);
    sc
}

fn settled(log: &SimLog, column: &[f64], t0: f64) -> f64 {
    log.window_mean(column, t0, f64::INFINITY)
}

fn c1_tuning() -> Outcome {
    let (wn, ki) = tune_pi(&reference::DESIGN_MODEL, reference::ZETA, 0.0).map_err(err)?;
    check(
        (wn - 0.446).abs() <= 0.001 && (ki - 2.947).abs() <= 0.005,
        format!("omega_n = {wn:.4} rad/s, ki = {ki:.4}"),
    )
}

fn c2_margins() -> Outcome {
    let (_, ki) = tune_pi(&reference::DESIGN_MODEL, reference::ZETA, 0.0).map_err(err)?;
    let la = loop_analysis(&reference::DESIGN_MODEL, 0.0, ki, &log_grid(1e-4, 10.0, 400), Exec::default()).map_err(err)?;
    check(
        la.gain_margin_db.is_infinite()
            && (la.phase_margin_deg - 65.2).abs() <= 0.3
            && (la.gain_crossover_hz - 0.047).abs() <= 0.001,
        format!(
            "gain margin {} dB, phase margin {:.2} deg at {:.4} Hz (|L| = +20 dB at {:.4} Hz, -20 dB at {:.4} Hz)",
            la.gain_margin_db, la.phase_margin_deg, la.gain_crossover_hz, la.crossover_plus20_hz, la.crossover_minus20_hz
        ),
    )
}

fn c3_linear_bench() -> Outcome {
    let (_, ki) = tune_pi(&reference::DESIGN_MODEL, reference::ZETA, 0.0).map_err(err)?;
    let bench = LinearBench::new(reference::DESIGN_MODEL, PlantModel { a: 5.0e4, b: 0.4 });
    let step = Step::unit(1.0);
    let (duration, dt) = (61.0, 0.01);
    let cases = [
        ("F_ref", BenchInputs { f_ref: step, ..Default::default() }),
        ("P_ref", BenchInputs { p_ref: step, ..Default::default() }),
        ("wind", BenchInputs { wind: step, ..Default::default() }),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, inputs) in cases {
        let e = bench.simulate_linear(0.0, ki, &inputs, duration, dt).final_error();
        ok &= e.abs() < 1e-3;
        parts.push(format!("{name} {e:.2e}"));
    }
    let n0 = 1.0e4;
    let inputs = BenchInputs {
        bias: Step::new(0.0, n0, 1.0),
        ..Default::default()
    };
    let e = bench.simulate_linear(0.0, ki, &inputs, duration, dt).final_error();
    ok &= (e + n0).abs() <= 1e-3 * n0;
    parts.push(format!("bias {n0:.0} N -> {e:.3} N"));
    check(ok, format!("steady errors after 60 s: {}", parts.join(", ")))
}

fn c4_passivity(s: &Setup) -> Outcome {
    let free = run(&s.base).map_err(err)?;
    let governed = run(&constrained(s, 1.2 * s.f_unconstrained)).map_err(err)?;
    check(
        governed.bit_identical(&free) && governed.u.iter().all(|&u| u == 0.0),
        format!("{} samples compared bit for bit", free.len()),
    )
}

fn c5_constraint(s: &Setup) -> Outcome {
    let bound = 0.9 * s.f_unconstrained;
    let sc = constrained(s, bound);
    let log = run(&sc).map_err(err)?;
    let f_hat = settled(&log, &log.f_hat, sc.settle_time);
    let f_true = settled(&log, &log.f_true, sc.settle_time);
    let p_gen = settled(&log, &log.p_gen, sc.settle_time);
    let rel = |x: f64| 100.0 * (x / bound - 1.0);
    let mut ok = rel(f_hat).abs() <= 1.0 && rel(f_true).abs() <= 3.0 && p_gen < P_REF;

    let sc = turbulent(sc, 700.0);
    let log = run(&sc).map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut t0 = sc.settle_time;
    while t0 + 60.0 <= sc.duration {
        worst = worst.max(rel(log.window_mean(&log.f_hat, t0, t0 + 60.0)).abs());
        t0 += 60.0;
    }
    ok &= worst <= 2.0;
    check(
        ok,
        format!(
            "constant wind: F_hat {:+.3}%, F_true {:+.3}%, P_gen {:.3} MW; TI 5%: worst 60 s window {worst:.2}%",
            rel(f_hat),
            rel(f_true),
            p_gen / 1e6
        ),
    )
}

fn c6_sweep(s: &Setup) -> Outcome {
    // Bounds at the same fractions of the unconstrained thrust as a
    // 500/475/450/425 kN sweep on a 512 kN rotor.
    let refs: Vec<f64> = [0.977, 0.928, 0.879, 0.830].iter().map(|f| f * s.f_unconstrained).collect();
    let mut base = s.base.clone();
    base.governor = s.governor.clone();
    let table = sweep(&base, &refs, Exec::default()).map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let r = row.summary;
        let ratio = r.power_reduction_pct / r.thrust_reduction_pct;
        ok &= (0.7..=1.0).contains(&ratio);
        if i > 0 {
            let prev = table.rows[i - 1].summary;
            ok &= r.thrust_reduction_pct > prev.thrust_reduction_pct && r.power_reduction_pct > prev.power_reduction_pct;
        }
        parts.push(format!(
            "{:.0} kN: {:.2}% / {:.2}% (ratio {ratio:.3})",
            row.thrust_ref / 1e3,
            r.thrust_reduction_pct,
            r.power_reduction_pct
        ));
    }
    check(ok, parts.join("; "))
}

fn c7_chattering(s: &Setup) -> Outcome {
    let sc = turbulent(constrained(s, 0.9 * s.f_unconstrained), 700.0);
    let span = sc.duration - sc.settle_time;
    let rate = |law: SwitchLaw| -> Result<f64, String> {
        let mut sc = sc.clone();
        sc.governor.switch_law = law;
        let log = run(&sc).map_err(err)?;
        Ok(100.0 * log.switch_count(sc.settle_time, sc.duration + 1.0) as f64 / span)
    };
    let integral = rate(SwitchLaw::Integral)?;
    let sign = rate(SwitchLaw::Sign)?;
    check(
        integral <= 10.0 && integral < sign,
        format!("switches per 100 s: integral law {integral:.2}, sign law {sign:.2}"),
    )
}

fn c8_monotone() -> Outcome {
    let levels = [5.0e6, 4.5e6, 4.0e6, 3.5e6, 3.0e6];
    let runs = Exec::default().map(&levels, |&p| {
        let sc = Scenario::constant(WIND, p, 300.0);
        run(&sc).map(|log| (settled(&log, &log.f_true, sc.settle_time), settled(&log, &log.p_gen, sc.settle_time)))
    });
    let mut ok = true;
    let mut parts = Vec::new();
    let mut last = f64::INFINITY;
    for (&p, r) in levels.iter().zip(runs) {
        let (f, pg) = r.map_err(err)?;
        let perr = 100.0 * (pg - p).abs() / p;
        ok &= f <= last && perr < 1.0;
        last = f;
        parts.push(format!("{:.1} MW: {:.1} kN, {perr:.3}%", p / 1e6, f / 1e3));
    }
    check(ok, parts.join("; "))
}

fn c9_identification() -> Outcome {
    let truth = PlantModel {
        a: reference::A_IDENTIFIED,
        b: reference::B,
    };
    let clean = StepExperiment::synthetic(&truth, 6.0e5, 3.0e6, 4.0e6, 10.0, 0.1, 60.0);
    let fit = fit_first_order(&clean).map_err(err)?;
    let ea = 100.0 * (fit.model.a / truth.a - 1.0).abs();
    let eb = 100.0 * (fit.model.b / truth.b - 1.0).abs();
    let seeds: Vec<u64> = (0..100).collect();
    let study = noise_study(&clean, &truth, 0.02, &seeds, Exec::default()).map_err(err)?;
    check(
        ea < 0.1 && eb < 0.1 && study.a_error < 0.02 && study.b_error < 0.02,
        format!(
            "noiseless A {ea:.2e}%, B {eb:.2e}%; 2% noise over 100 seeds: A {:.3}%, B {:.3}%",
            100.0 * study.a_error,
            100.0 * study.b_error
        ),
    )
}

fn c10_estimator() -> Outcome {
    let mut sc = Scenario::constant(WIND, P_REF, 40.0);
    sc.settle_time = 0.0;
    sc.estimator.v_hat_init = Some(6.0);
    let log = run(&sc).map_err(err)?;
    let last_out = log.v_hat.iter().rposition(|v| (v - WIND).abs() >= 0.1);
    let t_conv = last_out.map_or(0.0, |k| log.t[k + 1]);
    check(t_conv <= 20.0, format!("within 0.1 m/s from t = {t_conv:.1} s onward"))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |n: u32, name: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if outcome.is_err() {
            failures += 1;
        }
        println!("criterion {n:>2} {tag} {name}: {detail} [{secs:.1} s]");
    };

    report(1, "tuning", &c1_tuning);
    report(2, "margins", &c2_margins);
    report(3, "linear bench", &c3_linear_bench);

    match setup() {
        Ok(s) => {
            report(4, "passivity", &|| c4_passivity(&s));
            report(5, "constraint", &|| c5_constraint(&s));
            report(6, "sweep trend", &|| c6_sweep(&s));
            report(7, "anti-chattering", &|| c7_chattering(&s));
        }
        Err(e) => {
            for (n, name) in [(4, "passivity"), (5, "constraint"), (6, "sweep trend"), (7, "anti-chattering")] {
                report(n, name, &|| Err(format!("setup failed: {e}")));
            }
        }
    }

    report(8, "regulator monotonicity", &c8_monotone);
    report(9, "identification", &c9_identification);
    report(10, "estimator convergence", &c10_estimator);

    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
