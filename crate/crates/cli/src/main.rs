use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use thrust_governor::aero::{parametric_surface, save_surface, ParametricCoeffs};
use thrust_governor::governor::{loop_analysis, log_grid, tune_pi, PlantModel};
use thrust_governor::harness::experiment::power_step_experiment;
use thrust_governor::harness::plot::{line_plot, power_plot, thrust_plot, Series};
use thrust_governor::harness::{metrics, run, sweep, Scenario};
use thrust_governor::sysid::{fit_first_order, load_experiment, save_experiment};
use thrust_governor::windfield::{generate, WindSpec};
use thrust_governor::Exec;

/// Thrust-limiting governor for down-regulated wind turbines: simulation,
/// tuning, loop analysis and identification.
#[derive(Parser)]
#[command(name = "thrustgov", version)]
struct Cli {
    /// Seed for turbulence and measurement noise; overrides the scenario's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for written files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its log (and plots when enabled).
    Simulate {
        scenario: PathBuf,
        /// Write SVG plots even if the scenario does not ask for them.
        #[arg(long)]
        plots: bool,
    },
    /// Run a baseline plus one bounded run per thrust reference.
    Sweep {
        scenario: PathBuf,
        /// Thrust bounds in kN.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        thrust_refs: Vec<f64>,
        /// Run the cases one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Pole-placement PI gains for the model a/(s + b).
    Tune {
        /// Plant gain, N/(W s).
        #[arg(long)]
        a: f64,
        /// Plant pole, 1/s.
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 0.7)]
        zeta: f64,
        /// Proportional gain, W/N.
        #[arg(long, default_value_t = 0.0)]
        kp: f64,
    },
    /// Margins, crossovers and a Bode table of the governor loop.
    Analyze {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 0.0)]
        kp: f64,
        #[arg(long)]
        ki: f64,
        /// Lowest frequency, Hz.
        #[arg(long, default_value_t = 1e-4)]
        f_min: f64,
        /// Highest frequency, Hz.
        #[arg(long, default_value_t = 10.0)]
        f_max: f64,
        #[arg(long, default_value_t = 500)]
        points: usize,
        #[arg(long)]
        plots: bool,
    },
    /// Fit a/(s + b) to a recorded demanded-power step (CSV: t, p_dem, thrust).
    Sysid {
        csv: PathBuf,
        #[arg(long)]
        plots: bool,
    },
    /// Record a demanded-power step on a scenario's plant (governor off).
    Step {
        scenario: PathBuf,
        /// W
        #[arg(long)]
        p_before: f64,
        /// W
        #[arg(long)]
        p_after: f64,
        #[arg(long, default_value_t = 60.0)]
        step_time: f64,
        #[arg(long, default_value_t = 180.0)]
        duration: f64,
    },
    /// Generate a wind trace file, one m/s value per line.
    Wind {
        /// m/s
        #[arg(long)]
        mean: f64,
        /// Turbulence intensity, 0 for constant wind.
        #[arg(long, default_value_t = 0.0)]
        ti: f64,
        /// s
        #[arg(long, default_value_t = 10.0)]
        correlation_time: f64,
        /// s
        #[arg(long)]
        duration: f64,
        /// s
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value = "wind.txt")]
        name: String,
    },
    /// Write the default parametric rotor surface as `<name>_cp.csv` / `<name>_ct.csv`.
    ExportSurface {
        #[arg(default_value = "rotor")]
        name: String,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::Simulate { scenario, plots } => simulate(&scenario, cli.seed, out, plots),
        Command::Sweep {
            scenario,
            thrust_refs,
            sequential,
        } => run_sweep(&scenario, cli.seed, out, &thrust_refs, sequential),
        Command::Tune { a, b, zeta, kp } => {
            let (wn, ki) = tune_pi(&PlantModel { a, b }, zeta, kp)?;
            println!("omega_n = {wn:.6} rad/s");
            println!("kp      = {kp:.6} W/N");
            println!("ki      = {ki:.6} W/(N s)");
            Ok(())
        }
        Command::Analyze {
            a,
            b,
            kp,
            ki,
            f_min,
            f_max,
            points,
            plots,
        } => analyze(out, PlantModel { a, b }, kp, ki, (f_min, f_max, points), plots),
        Command::Sysid { csv, plots } => sysid(&csv, out, plots),
        Command::Step {
            scenario,
            p_before,
            p_after,
            step_time,
            duration,
        } => {
            let sc = load_scenario(&scenario, cli.seed)?;
            let exp = power_step_experiment(&sc, p_before, p_after, step_time, duration)?;
            let path = out.join(format!("{}_step.csv", sc.output_stem()));
            save_experiment(&exp, &path)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Wind {
            mean,
            ti,
            correlation_time,
            duration,
            dt,
            name,
        } => {
            let mut spec = if ti > 0.0 {
                WindSpec::turbulent(mean, ti, cli.seed.unwrap_or(1))
            } else {
                WindSpec::constant(mean)
            };
            spec.correlation_time = correlation_time;
            let trace = generate(&spec, duration, dt)?;
            let path = out.join(name);
            trace.save(&path)?;
            println!(
                "wrote {} ({} samples, mean {:.3} m/s, std {:.3} m/s)",
                path.display(),
                trace.len(),
                trace.mean(),
                trace.std()
            );
            Ok(())
        }
        Command::ExportSurface { name } => {
            let surface = parametric_surface(&ParametricCoeffs::default())?;
            let path = out.join(format!("{name}_cp.csv"));
            save_surface(&surface, &path)?;
            println!("wrote {} and its _ct sibling", path.display());
            Ok(())
        }
    }
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario> {
    let mut sc = Scenario::load(path).with_context(|| format!("loading scenario {}", path.display()))?;
    if seed.is_some() {
        sc.seed = seed;
    }
    Ok(sc)
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn simulate(scenario: &Path, seed: Option<u64>, out: &Path, plots: bool) -> Result<()> {
    let sc = load_scenario(scenario, seed)?;
    let log = run(&sc).with_context(|| format!("running {}", sc.name))?;
    let stem = sc.output_stem();
    write(out.join(format!("{stem}_log.csv")), &log.to_csv())?;
    if plots || sc.output.plots {
        let bound = sc.governor.enabled.then_some(sc.governor.f_t_ref);
        write(out.join(format!("{stem}_power.svg")), &power_plot(&log))?;
        write(out.join(format!("{stem}_thrust.svg")), &thrust_plot(&log, bound))?;
    }

    let end = sc.duration + 1.0;
    println!("settled means from t = {} s:", sc.settle_time);
    println!("  F_true {:.1} kN", log.window_mean(&log.f_true, sc.settle_time, end) / 1e3);
    println!("  F_hat  {:.1} kN", log.window_mean(&log.f_hat, sc.settle_time, end) / 1e3);
    println!("  P_gen  {:.4} MW", log.window_mean(&log.p_gen, sc.settle_time, end) / 1e6);
    println!("  loop switchings {}", log.switch_count(sc.settle_time, end));
    if sc.governor.enabled {
        let mut free = sc.clone();
        free.governor.enabled = false;
        let s = metrics(&log, &run(&free)?, sc.settle_time)?;
        println!(
            "  against the free run: thrust -{:.2}%, power -{:.2}%, max power loss {:.4} MW",
            s.thrust_reduction_pct,
            s.power_reduction_pct,
            s.max_power_loss / 1e6
        );
    }
    if log.omega_floor_hits > 0 || log.torque_floor_warnings > 0 || log.wind_floor_hits > 0 {
        eprintln!(
            "warning: rotor-speed floor hit {} times, torque floor {} times, wind floor {} samples",
            log.omega_floor_hits, log.torque_floor_warnings, log.wind_floor_hits
        );
    }
    Ok(())
}

fn run_sweep(scenario: &Path, seed: Option<u64>, out: &Path, refs_kn: &[f64], sequential: bool) -> Result<()> {
    let sc = load_scenario(scenario, seed)?;
    let refs: Vec<f64> = refs_kn.iter().map(|r| r * 1e3).collect();
    let exec = if sequential { Exec::Sequential } else { Exec::Parallel };
    let table = sweep(&sc, &refs, exec)?;
    let csv = table.to_csv();
    print!("{csv}");
    write(out.join(format!("{}_sweep.csv", sc.output_stem())), &csv)
}

fn analyze(out: &Path, model: PlantModel, kp: f64, ki: f64, grid: (f64, f64, usize), plots: bool) -> Result<()> {
    let (f_min, f_max, n) = grid;
    if !(f_min > 0.0 && f_max > f_min) || n < 2 {
        bail!("need 0 < f_min < f_max and at least 2 points");
    }
    let la = loop_analysis(&model, kp, ki, &log_grid(f_min, f_max, n), Exec::default())?;
    println!("gain margin   {} dB", la.gain_margin_db);
    if let Some(f) = la.phase_crossover_hz {
        println!("  at {f:.5} Hz");
    }
    println!("phase margin  {:.3} deg at {:.5} Hz", la.phase_margin_deg, la.gain_crossover_hz);
    println!("|L| = +20 dB  at {:.5} Hz", la.crossover_plus20_hz);
    println!("|L| = -20 dB  at {:.5} Hz", la.crossover_minus20_hz);
    println!("T(0)          {:.6}", la.t_dc);
    let e = la.steady_state_errors;
    println!(
        "steady errors per unit step: F_ref {:.3e}, P_ref {:.3e}, wind {:.3e}, bias {:.3e}",
        e[0], e[1], e[2], e[3]
    );
    let p = la.closed_loop_poles;
    println!("closed-loop poles {:.4}{:+.4}i, {:.4}{:+.4}i", p[0].re, p[0].im, p[1].re, p[1].im);
    write(out.join("bode.csv"), &la.to_csv())?;
    if plots {
        let f: Vec<f64> = la.points.iter().map(|p| p.freq_hz.log10()).collect();
        let l: Vec<f64> = la.points.iter().map(|p| p.l_mag_db).collect();
        let s: Vec<f64> = la.points.iter().map(|p| p.s_mag_db).collect();
        let t: Vec<f64> = la.points.iter().map(|p| p.t_mag_db).collect();
        let svg = line_plot(
            "Loop magnitudes",
            "log10 frequency [Hz]",
            "magnitude [dB]",
            &[
                Series { label: "|L|", x: &f, y: &l },
                Series { label: "|S|", x: &f, y: &s },
                Series { label: "|T|", x: &f, y: &t },
            ],
            Some((0.0, "0 dB")),
        );
        write(out.join("bode.svg"), &svg)?;
    }
    Ok(())
}

fn sysid(csv: &Path, out: &Path, plots: bool) -> Result<()> {
    let exp = load_experiment(csv)?;
    let fit = fit_first_order(&exp).with_context(|| format!("fitting {}", csv.display()))?;
    println!("A = {:.6} N/(W s)  ({:.3} kN/MW s)", fit.model.a, fit.a_kn_per_mw());
    println!("B = {:.6} 1/s", fit.model.b);
    println!("steady gain A/B = {:.6} N/W", fit.steady_gain());
    println!(
        "residual rms {:.1} N ({:.2}% of the {:.1} N excursion)",
        fit.residual_rms,
        100.0 * fit.residual_rms / fit.excursion.abs(),
        fit.excursion
    );
    let stem = csv.file_stem().map_or("sysid".into(), |s| s.to_string_lossy().into_owned());
    let path = out.join(format!("{stem}_residuals.csv"));
    fit.write_residuals(&path)?;
    println!("wrote {}", path.display());
    if plots {
        let t: Vec<f64> = fit.residuals.iter().map(|r| r.0).collect();
        let y: Vec<f64> = fit.residuals.iter().map(|r| r.1 / 1e3).collect();
        let m: Vec<f64> = fit.residuals.iter().map(|r| r.2 / 1e3).collect();
        let svg = line_plot(
            "Step response fit",
            "time [s]",
            "thrust [kN]",
            &[Series { label: "measured", x: &t, y: &y }, Series { label: "fitted", x: &t, y: &m }],
            None,
        );
        write(out.join(format!("{stem}_fit.svg")), &svg)?;
    }
    Ok(())
}
