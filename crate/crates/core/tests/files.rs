use std::path::PathBuf;

use thrust_governor::aero::{load_surface, parametric_surface, save_surface, ParametricCoeffs};
use thrust_governor::harness::experiment::power_step_experiment;
use thrust_governor::harness::{run, Scenario, SurfaceKind, LOG_HEADER};
use thrust_governor::sysid::{fit_first_order, load_experiment, save_experiment};
use thrust_governor::windfield::{generate, WindSpec};
use thrust_governor::Error;

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn shipped_scenarios_load() {
    let mut n = 0;
    for entry in std::fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let sc = Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!sc.name.is_empty());
            n += 1;
        }
    }
    assert!(n >= 3);
}

#[test]
fn scenario_toml_round_trip() {
    let sc = Scenario::load(scenarios_dir().join("turbulent_9ms.toml")).unwrap();
    let back = Scenario::from_toml(&sc.to_toml().unwrap()).unwrap();
    assert_eq!(back, sc);
}

#[test]
fn unknown_schema_version_rejected() {
    let text = std::fs::read_to_string(scenarios_dir().join("constant_9ms.toml")).unwrap();
    let text = text.replace("schema_version = 1", "schema_version = 2");
    assert!(matches!(Scenario::from_toml(&text), Err(Error::Config(_))));
}

#[test]
fn recorded_trace_reproduces_generated_wind() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc = Scenario::constant(9.0, 4.0e6, 120.0);
    sc.wind = WindSpec::turbulent(9.0, 0.06, 21);
    let trace = generate(&sc.wind, sc.duration + sc.dt, sc.dt).unwrap();
    let path = dir.path().join("wind.txt");
    trace.save(&path).unwrap();
    let a = run(&sc).unwrap();
    sc.wind_trace = Some(path);
    let b = run(&sc).unwrap();
    assert!(a.bit_identical(&b));
}

#[test]
fn surface_files_drive_the_same_plant() {
    let dir = tempfile::tempdir().unwrap();
    let surface = parametric_surface(&ParametricCoeffs::default()).unwrap();
    let cp = dir.path().join("rotor_cp.csv");
    save_surface(&surface, &cp).unwrap();
    let header = std::fs::read_to_string(&cp).unwrap();
    assert!(header.starts_with("lambda\\theta,"));
    let loaded = load_surface(&cp).unwrap();
    for (l, th) in [(6.0, 0.0), (8.0, 0.02), (9.5, 0.1)] {
        assert!((loaded.cp(l, th) - surface.cp(l, th)).abs() < 1e-9);
        assert!((loaded.ct(l, th) - surface.ct(l, th)).abs() < 1e-9);
    }

    let mut sc = Scenario::constant(9.0, 4.0e6, 120.0);
    let a = run(&sc).unwrap();
    sc.surface.kind = SurfaceKind::File;
    sc.surface.cp_path = Some(cp);
    let b = run(&sc).unwrap();
    let k = b.len() - 1;
    assert!((a.f_true[k] / b.f_true[k] - 1.0).abs() < 1e-6);
}

#[test]
fn log_csv_has_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let log = run(&Scenario::constant(9.0, 4.0e6, 110.0)).unwrap();
    let path = dir.path().join("log.csv");
    log.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(LOG_HEADER));
    assert_eq!(lines.clone().count(), log.len());
    assert!(lines.all(|l| l.split(',').count() == 15));
}

#[test]
fn experiment_csv_round_trip_fits_identically() {
    let dir = tempfile::tempdir().unwrap();
    let base = Scenario::constant(9.0, 4.5e6, 300.0);
    let exp = power_step_experiment(&base, 3.0e6, 4.0e6, 60.0, 180.0).unwrap();
    let path = dir.path().join("step.csv");
    save_experiment(&exp, &path).unwrap();
    let back = load_experiment(&path).unwrap();
    let (a, b) = (fit_first_order(&exp).unwrap(), fit_first_order(&back).unwrap());
    assert!((a.model.a / b.model.a - 1.0).abs() < 1e-9);
    assert!((a.model.b / b.model.b - 1.0).abs() < 1e-9);
}
