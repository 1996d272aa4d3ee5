//! Subcommand implementations: scan, slopes, timeresolved, validate-jc.
//!
//! Output files are plain CSV with a '#'-prefixed header block carrying the
//! fully resolved configuration and '#'-prefixed footer lines with fitted
//! quantities. Files are written to `<path>.partial` and renamed on
//! completion, so an interrupted run never leaves a bare output file.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use nisim::analysis::{fit_fringe, phase_slope, relative_phase, wrap_angle, FringeFit};
use nisim::beamline::{self, BeamlineError, ScanParameter, ScanSpec};
use nisim::jcfield::{
    build_hamiltonian, evolve, prepare_initial, spin_flip_stats, CoherentSpec, FockBasisSpec,
    JCParams, JcError, ModeWindow,
};
use nisim::SpinLabel;

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Exit code 2: the configuration could not be parsed or is invalid.
    Config(String),
    /// Exit code 3: a physics precondition failed.
    Physics(String),
    /// Exit code 1: filesystem problem.
    Io(String),
}

impl From<BeamlineError> for CliError {
    fn from(e: BeamlineError) -> Self {
        CliError::Physics(e.to_string())
    }
}

impl From<JcError> for CliError {
    fn from(e: JcError) -> Self {
        CliError::Physics(e.to_string())
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.17e}")
}

/// Write via a `.partial` sibling and rename once the content is complete.
fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = Path::new(&partial);
    fs::write(partial, content).map_err(|e| CliError::Io(format!("{}: {e}", partial.display())))?;
    fs::rename(partial, path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Deterministic Poisson counting noise, seeded once per command.
struct NoiseModel {
    rng: ChaCha8Rng,
    counts_per_point: f64,
}

impl NoiseModel {
    fn from_config(config: &RunConfig) -> Option<NoiseModel> {
        if !config.noise.enabled {
            return None;
        }
        Some(NoiseModel {
            rng: ChaCha8Rng::seed_from_u64(config.noise.seed),
            counts_per_point: config.noise.counts_per_point,
        })
    }

    fn sample(&mut self, intensity: f64) -> f64 {
        let lambda = intensity * self.counts_per_point;
        if lambda <= 0.0 {
            return 0.0;
        }
        let counts = Poisson::new(lambda)
            .expect("positive rate")
            .sample(&mut self.rng);
        counts / self.counts_per_point
    }
}

fn apply_noise(noise: &mut Option<NoiseModel>, value: f64) -> f64 {
    match noise {
        Some(model) => model.sample(value),
        None => value,
    }
}

fn fit_o_column(points: &[(f64, f64)]) -> Result<FringeFit, CliError> {
    fit_fringe(points).map_err(|e| CliError::Physics(e.to_string()))
}

fn fit_footer(label: &str, fit: &FringeFit) -> String {
    let phase = match fit.phase {
        Some(p) => fmt_f(p),
        None => "unidentifiable".to_string(),
    };
    format!(
        "# {label}: offset_a={} visibility={} phase_rad={} residual_rms={}\n",
        fmt_f(fit.offset_a),
        fmt_f(fit.visibility),
        phase,
        fmt_f(fit.residual_rms),
    )
}

/// χ-scan (or rf-phase scan) of both detectors with a fringe fit footer.
pub fn cmd_scan(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let values = config.scan.values().map_err(CliError::Config)?;
    let points = beamline::scan(&ScanSpec {
        parameter: config.scan.parameter.into(),
        values,
        base: config.beamline_spec(),
    })?;

    let mut noise = NoiseModel::from_config(config);
    let rows: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| {
            (
                p.value,
                apply_noise(&mut noise, p.o_intensity),
                apply_noise(&mut noise, p.h_intensity),
            )
        })
        .collect();

    let o_points: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
    let fit = fit_o_column(&o_points)?;

    let mut text = config.header_block();
    text.push_str("# command: scan\n");
    text.push_str("# columns: value_rad,o_intensity,h_intensity\n");
    for (x, o, h) in &rows {
        writeln!(text, "{},{},{}", fmt_f(*x), fmt_f(*o), fmt_f(*h)).unwrap();
    }
    text.push_str(&fit_footer("fit_o", &fit));
    write_atomic(out, &text)
}

struct SlopeExperiment {
    label: &'static str,
    spin: SpinLabel,
    parameter: ScanParameter,
    ideal: f64,
}

const SLOPE_EXPERIMENTS: [SlopeExperiment; 4] = [
    SlopeExperiment {
        label: "dphi_vs_phi_omega_spin_up",
        spin: SpinLabel::Up,
        parameter: ScanParameter::PhiOmega,
        ideal: 1.0,
    },
    SlopeExperiment {
        label: "dphi_vs_phi_omega_spin_down",
        spin: SpinLabel::Down,
        parameter: ScanParameter::PhiOmega,
        ideal: -1.0,
    },
    SlopeExperiment {
        label: "dphi_vs_phi_half_spin_up",
        spin: SpinLabel::Up,
        parameter: ScanParameter::PhiHalf,
        ideal: -2.0,
    },
    SlopeExperiment {
        label: "dphi_vs_phi_half_spin_down",
        spin: SpinLabel::Down,
        parameter: ScanParameter::PhiHalf,
        ideal: 2.0,
    },
];

/// Relative phase ΔΦ± against each rf phase for both initial spins, with the
/// four regression records in the footer.
pub fn cmd_slopes(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let grid = config.slopes.grid().map_err(CliError::Config)?;
    let chi_points = config.slopes.chi_points;
    if chi_points == 0 {
        return Err(CliError::Config(
            "slopes.chi_points must be positive".into(),
        ));
    }
    let chi_values: Vec<f64> = (0..chi_points)
        .map(|i| TAU * i as f64 / chi_points as f64)
        .collect();
    let mut noise = NoiseModel::from_config(config);

    let mut rows = String::new();
    let mut footer = String::new();
    for experiment in &SLOPE_EXPERIMENTS {
        let mut phases = Vec::with_capacity(grid.len());
        for &setting in &grid {
            let mut base = config.beamline_spec();
            base.initial_spin = experiment.spin;
            match experiment.parameter {
                ScanParameter::PhiOmega => base.flipper1.phi = setting,
                ScanParameter::PhiHalf => base.flipper2.phi = setting,
                ScanParameter::Chi => unreachable!(),
            }
            let mut fit_of = |flipper1_on: bool| -> Result<FringeFit, CliError> {
                let mut spec = base.clone();
                spec.flipper1_on = flipper1_on;
                let points = beamline::scan(&ScanSpec {
                    parameter: ScanParameter::Chi,
                    values: chi_values.clone(),
                    base: spec,
                })?;
                let data: Vec<(f64, f64)> = points
                    .iter()
                    .map(|p| (p.value, apply_noise(&mut noise, p.o_intensity)))
                    .collect();
                fit_o_column(&data)
            };
            let on = fit_of(true)?;
            let off = fit_of(false)?;
            let delta_phi =
                relative_phase(&on, &off).map_err(|e| CliError::Physics(e.to_string()))?;
            writeln!(
                rows,
                "{},{},{},{}",
                experiment.label,
                match experiment.spin {
                    SpinLabel::Up => "up",
                    SpinLabel::Down => "down",
                },
                fmt_f(setting),
                fmt_f(delta_phi)
            )
            .unwrap();
            phases.push(delta_phi);
        }
        let slope = phase_slope(&grid, &phases).map_err(|e| CliError::Physics(e.to_string()))?;
        writeln!(
            footer,
            "# {}: slope={} intercept={} stderr={} ideal={:+}",
            experiment.label,
            fmt_f(slope.slope),
            fmt_f(slope.intercept),
            fmt_f(slope.stderr),
            experiment.ideal
        )
        .unwrap();
    }

    let mut text = config.header_block();
    text.push_str("# command: slopes\n");
    text.push_str("# columns: experiment,initial_spin,setting_rad,delta_phi_rad\n");
    text.push_str(&rows);
    text.push_str(&footer);
    write_atomic(out, &text)
}

/// Time-resolved polarization of the O beam over one rf period with the
/// closed-form rotating-polarization residual per row.
pub fn cmd_timeresolved(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let samples = config.time_resolved.samples;
    if samples < 2 {
        return Err(CliError::Config(
            "time_resolved.samples must be at least 2".into(),
        ));
    }
    let spec = config.beamline_spec();
    let omega = spec.flipper1.omega;
    let period = TAU / omega;
    let times: Vec<f64> = (0..samples)
        .map(|i| period * i as f64 / samples as f64)
        .collect();
    let series = beamline::time_resolved(&spec, &times)?;

    let analytic = |t: f64| -> (f64, f64) {
        let arg = spec.chi - omega * t - spec.flipper1.phi;
        match spec.initial_spin {
            SpinLabel::Up => (arg.cos(), arg.sin()),
            // inverted initial polarization mirrors the rotation sense
            SpinLabel::Down => {
                let arg = spec.chi + omega * t + spec.flipper1.phi;
                (arg.cos(), -arg.sin())
            }
        }
    };

    let mut text = config.header_block();
    text.push_str("# command: timeresolved\n");
    text.push_str("# columns: t_s,px,py,pz,analytic_residual\n");
    let mut max_residual: f64 = 0.0;
    for (t, p) in &series {
        let (ax, ay) = analytic(*t);
        let residual = (p.px - ax).abs().max((p.py - ay).abs()).max(p.pz.abs());
        max_residual = max_residual.max(residual);
        writeln!(
            text,
            "{},{},{},{},{}",
            fmt_f(*t),
            fmt_f(p.px),
            fmt_f(p.py),
            fmt_f(p.pz),
            fmt_f(residual)
        )
        .unwrap();
    }
    let average = beamline::average_polarization(&series);
    writeln!(
        text,
        "# period_average: px={} py={} pz={}",
        fmt_f(average.px),
        fmt_f(average.py),
        fmt_f(average.pz)
    )
    .unwrap();
    writeln!(text, "# max_residual: {}", fmt_f(max_residual)).unwrap();
    write_atomic(out, &text)
}

struct JcCheck {
    name: &'static str,
    value: f64,
    target: f64,
    tolerance: f64,
}

impl JcCheck {
    fn passed(&self) -> bool {
        (self.value - self.target).abs() <= self.tolerance
    }
}

/// Quantized-field correspondence suite: π-pulse flip probability, photon
/// exchange, vacuum dark state and field-phase transfer.
pub fn cmd_validate_jc(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let consts = config.constants();
    let omega = TAU * config.flipper1.frequency_hz.unwrap_or(58e3);
    let jc = &config.jc;
    if jc.mean_photons < 0.0 {
        return Err(CliError::Config("jc.mean_photons must be >= 0".into()));
    }
    if jc.phase_steps < 3 {
        return Err(CliError::Config("jc.phase_steps must be at least 3".into()));
    }
    let params = JCParams::resonant_single_mode(omega, jc.b1_t, consts);
    let drive = CoherentSpec::from_mean_photons(jc.mean_photons, 0.0);
    let idle = CoherentSpec::vacuum();
    let basis = FockBasisSpec {
        mode_omega: ModeWindow::for_coherent(&drive),
        mode_half: ModeWindow::single_level(0),
    };
    let h = build_hamiltonian(&params, &basis)?;
    let tau_pi = params.duration_for_area(PI, params.b1_omega);

    let stats_at = |phase: f64| -> Result<nisim::jcfield::SpinFlipStats, CliError> {
        let drive = CoherentSpec::from_mean_photons(jc.mean_photons, phase);
        let initial = prepare_initial(&basis, &drive, &idle, SpinLabel::Down)?;
        let evolved = evolve(&initial, &h, tau_pi, &consts)?;
        Ok(spin_flip_stats(&initial, &evolved))
    };
    let base = stats_at(0.0)?;

    // field-phase transfer: sweep the drive phase, regress the imprinted shift
    let phases: Vec<f64> = (0..jc.phase_steps)
        .map(|i| jc.max_phase.radians() * i as f64 / (jc.phase_steps - 1) as f64)
        .collect();
    let mut shifts = Vec::with_capacity(phases.len());
    for &p in &phases {
        let s = stats_at(p)?;
        shifts.push(wrap_angle(s.imprinted_phase - base.imprinted_phase));
    }
    let transfer = phase_slope(&phases, &shifts).map_err(|e| CliError::Physics(e.to_string()))?;

    // vacuum limit: the absorbing spin cannot flip without photons
    let vacuum_basis = FockBasisSpec {
        mode_omega: ModeWindow::for_coherent(&idle),
        mode_half: ModeWindow::single_level(0),
    };
    let vacuum_h = build_hamiltonian(&params, &vacuum_basis)?;
    let vacuum_initial = prepare_initial(&vacuum_basis, &idle, &idle, SpinLabel::Up)?;
    let vacuum_final = evolve(&vacuum_initial, &vacuum_h, tau_pi, &consts)?;
    let vacuum_stats = spin_flip_stats(&vacuum_initial, &vacuum_final);

    let checks = [
        JcCheck {
            name: "pi_pulse_flip_probability",
            value: base.flip_probability,
            target: 1.0,
            tolerance: 0.01,
        },
        JcCheck {
            name: "driven_mode_photon_shift",
            value: base.mean_photon_shift_omega,
            target: 1.0,
            tolerance: 0.05,
        },
        JcCheck {
            name: "idle_mode_photon_shift",
            value: base.mean_photon_shift_half,
            target: 0.0,
            tolerance: 1e-12,
        },
        JcCheck {
            name: "vacuum_absorbing_flip_probability",
            value: vacuum_stats.flip_probability,
            target: 0.0,
            tolerance: 1e-12,
        },
        JcCheck {
            name: "field_phase_transfer_slope",
            value: transfer.slope,
            target: 1.0,
            tolerance: 0.02,
        },
    ];

    let mut text = config.header_block();
    text.push_str("# command: validate-jc\n");
    writeln!(text, "# basis_dimension: {}", basis.dim()).unwrap();
    text.push_str("# columns: check,value,target,tolerance,status\n");
    let mut all_pass = true;
    for check in &checks {
        let status = if check.passed() { "pass" } else { "fail" };
        all_pass &= check.passed();
        writeln!(
            text,
            "{},{},{},{},{}",
            check.name,
            fmt_f(check.value),
            fmt_f(check.target),
            fmt_f(check.tolerance),
            status
        )
        .unwrap();
    }
    writeln!(
        text,
        "# summary: {}",
        if all_pass {
            "all checks passed"
        } else {
            "checks failed"
        }
    )
    .unwrap();
    write_atomic(out, &text)?;
    println!(
        "validate-jc: {} (report: {})",
        if all_pass {
            "all checks passed"
        } else {
            "CHECKS FAILED"
        },
        out.display()
    );
    Ok(())
}
