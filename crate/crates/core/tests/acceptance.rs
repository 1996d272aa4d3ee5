//! Acceptance suite: every exit criterion of the simulator runs here at its
//! stated tolerance and prints one pass/fail line.
//!
//! Run with `cargo test -p nisim --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nisim::analysis::{
    fit_fringe, geometric_phase, phase_slope, relative_phase, solid_angle_semi_great_circles,
    wrap_angle,
};
use nisim::beamline::{run, scan, time_resolved, BeamlineSpec, ScanParameter, ScanSpec};
use nisim::elements::resonance_frequency;
use nisim::jcfield::{
    build_hamiltonian, evolve, prepare_initial, spin_flip_stats, CoherentSpec, FockBasisSpec,
    JCParams, ModeWindow,
};
use nisim::{BeamContext, PhysicalConstants, SpinLabel};

const OMEGA: f64 = TAU * 58e3;

fn ideal_spec() -> BeamlineSpec {
    let consts = PhysicalConstants::default();
    let beam = BeamContext::from_wavelength(1.91e-10, &consts);
    BeamlineSpec::ideal(OMEGA, beam, consts)
}

fn report(name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {}: {} ({})",
        name,
        if pass { "PASS" } else { "FAIL" },
        detail
    );
    assert!(pass, "{name}: {detail}");
}

/// Criterion 1: the full-pipeline O intensity follows
/// ½(1 + ν cos(χ + φ_ω − 2φ_{ω/2} + ωT)) pointwise on a random grid.
#[test]
fn criterion_1_fringe_law() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x01);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut spec = ideal_spec();
        spec.chi = rng.random_range(-TAU..TAU);
        spec.flipper1.phi = rng.random_range(-TAU..TAU);
        spec.flipper2.phi = rng.random_range(-TAU..TAU);
        spec.zero_field_phase = rng.random_range(-TAU..TAU);
        spec.visibility_factor = rng.random_range(0.0..1.0);
        let delta = spec.chi + spec.flipper1.phi - 2.0 * spec.flipper2.phi + spec.zero_field_phase;
        let expected = 0.5 * (1.0 + spec.visibility_factor * delta.cos());
        let r = run(&spec).expect("ideal pipeline must run");
        worst = worst.max((r.o_intensity - expected).abs());
    }
    let elapsed = started.elapsed();
    report(
        "criterion 1 (fringe law)",
        worst <= 1e-9 && elapsed.as_secs_f64() < 1.0,
        &format!("max |ΔI| = {worst:.3e} over 1000 points, {elapsed:?}"),
    );
}

/// Criterion 2: relative-phase slopes ΔΦ± against φ_ω and φ_{ω/2} come out
/// as +1, −1, −2, +2 within 1e-6.
#[test]
fn criterion_2_phase_slopes() {
    let started = Instant::now();
    let chi_values: Vec<f64> = (0..16).map(|i| TAU * f64::from(i) / 16.0).collect();
    let grid: Vec<f64> = (0..8).map(|i| TAU * f64::from(i) / 8.0).collect();

    let delta_phi = |spin: SpinLabel, parameter: ScanParameter, setting: f64| -> f64 {
        let mut base = ideal_spec();
        base.initial_spin = spin;
        base.zero_field_phase = 0.9;
        base.accelerator_rotation = 0.9; // exact compensation
        match parameter {
            ScanParameter::PhiOmega => base.flipper1.phi = setting,
            ScanParameter::PhiHalf => base.flipper2.phi = setting,
            ScanParameter::Chi => unreachable!(),
        }
        let scan_of = |flipper1_on: bool| {
            let mut spec = base.clone();
            spec.flipper1_on = flipper1_on;
            let points = scan(&ScanSpec {
                parameter: ScanParameter::Chi,
                values: chi_values.clone(),
                base: spec,
            })
            .expect("scan");
            fit_fringe(
                &points
                    .iter()
                    .map(|p| (p.value, p.o_intensity))
                    .collect::<Vec<_>>(),
            )
            .expect("fit")
        };
        relative_phase(&scan_of(true), &scan_of(false)).expect("relative phase")
    };

    let mut detail = String::new();
    let mut pass = true;
    for (spin, parameter, expected) in [
        (SpinLabel::Up, ScanParameter::PhiOmega, 1.0),
        (SpinLabel::Down, ScanParameter::PhiOmega, -1.0),
        (SpinLabel::Up, ScanParameter::PhiHalf, -2.0),
        (SpinLabel::Down, ScanParameter::PhiHalf, 2.0),
    ] {
        let phases: Vec<f64> = grid
            .iter()
            .map(|&setting| delta_phi(spin, parameter, setting))
            .collect();
        let fit = phase_slope(&grid, &phases).expect("slope fit");
        let ok = (fit.slope - expected).abs() <= 1e-6 && wrap_angle(fit.intercept).abs() <= 1e-6;
        pass &= ok;
        detail.push_str(&format!("{expected:+}: {:+.9}; ", fit.slope));
    }
    let elapsed = started.elapsed();
    pass &= elapsed.as_secs_f64() < 1.0;
    detail.push_str(&format!("{elapsed:?}"));
    report("criterion 2 (phase slopes)", pass, &detail);
}

/// Criterion 3: H intensity is flat in χ with the in-loop flipper on, and
/// the compensated O intensity is independent of detection time.
#[test]
fn criterion_3_h_flatness_and_o_stationarity() {
    let mut h_values = Vec::new();
    for i in 0..100 {
        let mut spec = ideal_spec();
        spec.chi = TAU * f64::from(i) / 50.0;
        spec.flipper1.phi = 0.4;
        spec.flipper2.phi = 1.2;
        h_values.push(run(&spec).expect("run").h_intensity);
    }
    let h_min = h_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let h_max = h_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let h_dev = h_max - h_min;

    let mut spec = ideal_spec();
    spec.chi = 0.8;
    spec.flipper1.phi = 0.3;
    spec.flipper2.phi = -0.5;
    spec.zero_field_phase = 1.1;
    spec.accelerator_rotation = 1.1;
    let i0 = nisim::beamline::detector_intensity_at(&spec, 0.0).expect("run");
    let period = TAU / OMEGA;
    let t_dev = (0..64)
        .map(|i| {
            let t = period * f64::from(i) / 64.0;
            (nisim::beamline::detector_intensity_at(&spec, t).expect("run") - i0).abs()
        })
        .fold(0.0, f64::max);

    report(
        "criterion 3 (H flatness, O stationarity)",
        h_dev <= 1e-12 && t_dev <= 1e-9,
        &format!("H spread = {h_dev:.3e}, O time spread = {t_dev:.3e}"),
    );
}

/// Criterion 4: region-4 time-resolved polarization follows
/// (cos(χ − ωt − φ_ω), sin(χ − ωt − φ_ω), 0); its period average vanishes.
#[test]
fn criterion_4_time_resolved_polarization() {
    let period = TAU / OMEGA;
    let times: Vec<f64> = (0..16).map(|i| period * f64::from(i) / 16.0).collect();
    let mut worst: f64 = 0.0;
    for i in 0..12 {
        for j in 0..12 {
            let mut spec = ideal_spec();
            spec.flipper2_on = false;
            spec.chi = TAU * f64::from(i) / 12.0 - PI;
            spec.flipper1.phi = TAU * f64::from(j) / 12.0 - PI;
            let series = time_resolved(&spec, &times).expect("time resolved");
            for (t, p) in &series {
                let arg = spec.chi - OMEGA * t - spec.flipper1.phi;
                worst = worst
                    .max((p.px - arg.cos()).abs())
                    .max((p.py - arg.sin()).abs())
                    .max(p.pz.abs());
            }
        }
    }

    let mut spec = ideal_spec();
    spec.flipper2_on = false;
    spec.chi = 0.7;
    spec.flipper1.phi = 0.2;
    let dense: Vec<f64> = (0..256).map(|i| period * f64::from(i) / 256.0).collect();
    let series = time_resolved(&spec, &dense).expect("time resolved");
    let avg = nisim::beamline::average_polarization(&series);
    let avg_norm = avg.norm();

    report(
        "criterion 4 (time-resolved polarization)",
        worst <= 1e-9 && avg_norm <= 1e-9,
        &format!("max component error = {worst:.3e}, |period average| = {avg_norm:.3e}"),
    );
}

/// Criterion 5: the resonance law reproduces 58 kHz at 2 mT and is linear.
#[test]
fn criterion_5_resonance_consistency() {
    let consts = PhysicalConstants::default();
    let f_2mt = resonance_frequency(2e-3, &consts) / TAU;
    let rel_58k = (f_2mt - 58e3).abs() / 58e3;

    let w_full = resonance_frequency(2e-3, &consts);
    let w_half = resonance_frequency(1e-3, &consts);
    let halving = (w_half - 0.5 * w_full).abs() / w_full;

    report(
        "criterion 5 (resonance consistency)",
        rel_58k <= 0.01 && halving <= 1e-12,
        &format!(
            "f(2 mT) = {f_2mt:.1} Hz ({rel_58k:.4} rel. to 58 kHz), halving error {halving:.1e}"
        ),
    );
}

/// Criterion 6: quantized-field correspondence at ⟨n⟩ = 100: π-pulse flip
/// probability ≥ 0.99, photon shift +1 ± 0.05, field-phase transfer with
/// slope 1 ± 0.02 over [0, π/2]; basis ≤ 500, runtime < 30 s.
#[test]
fn criterion_6_quantized_field_correspondence() {
    let started = Instant::now();
    let consts = PhysicalConstants::default();
    let params = JCParams::resonant_single_mode(OMEGA, 1e-3, consts);
    let drive = CoherentSpec::from_mean_photons(100.0, 0.0);
    let basis = FockBasisSpec {
        mode_omega: ModeWindow::for_coherent(&drive),
        mode_half: ModeWindow::single_level(0),
    };
    let dim = basis.dim();
    let h = build_hamiltonian(&params, &basis).expect("hamiltonian");
    let tau_pi = params.duration_for_area(PI, params.b1_omega);
    let idle = CoherentSpec::vacuum();

    let stats_at_phase = |phase: f64| {
        let drive = CoherentSpec::from_mean_photons(100.0, phase);
        let initial = prepare_initial(&basis, &drive, &idle, SpinLabel::Down).expect("prepare");
        let evolved = evolve(&initial, &h, tau_pi, &consts).expect("evolve");
        spin_flip_stats(&initial, &evolved)
    };

    let base = stats_at_phase(0.0);
    let phases: Vec<f64> = (0..5).map(|i| f64::from(i) * PI / 8.0).collect();
    let shifts: Vec<f64> = phases
        .iter()
        .map(|&p| wrap_angle(stats_at_phase(p).imprinted_phase - base.imprinted_phase))
        .collect();
    let transfer = phase_slope(&phases, &shifts).expect("transfer slope");

    let elapsed = started.elapsed();
    let pass = base.flip_probability >= 0.99
        && (base.mean_photon_shift_omega - 1.0).abs() <= 0.05
        && (transfer.slope - 1.0).abs() <= 0.02
        && dim <= 500
        && elapsed.as_secs_f64() < 30.0;
    report(
        "criterion 6 (quantized-field correspondence)",
        pass,
        &format!(
            "flip = {:.4}, photon shift = {:+.4}, phase slope = {:.4}, dim = {dim}, {elapsed:?}",
            base.flip_probability, base.mean_photon_shift_omega, transfer.slope
        ),
    );
}

/// Criterion 7: the closed-form geometric phase matches half the numerically
/// integrated lune solid angle on random azimuth pairs.
#[test]
fn criterion_7_geometric_phase() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x07);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let phi1 = rng.random_range(-PI..PI);
        let phi2 = rng.random_range(-PI..PI);
        let omega = solid_angle_semi_great_circles(phi1, phi2);
        worst = worst
            .max((omega - 2.0 * wrap_angle(phi1 - phi2)).abs())
            .max((geometric_phase(phi1, phi2) - 0.5 * omega).abs());
    }
    report(
        "criterion 7 (geometric phase)",
        worst <= 1e-6,
        &format!("max |Ω − 2Δφ| = {worst:.3e} over 100 pairs"),
    );
}

/// Criterion 8: a configured visibility of 0.524 comes back out of the fit.
#[test]
fn criterion_8_visibility_pass_through() {
    let mut base = ideal_spec();
    base.visibility_factor = 0.524;
    base.flipper1.phi = 0.35;
    let values: Vec<f64> = (0..72).map(|i| 2.0 * TAU * f64::from(i) / 72.0).collect();
    let points = scan(&ScanSpec {
        parameter: ScanParameter::Chi,
        values,
        base,
    })
    .expect("scan");
    let fit = fit_fringe(
        &points
            .iter()
            .map(|p| (p.value, p.o_intensity))
            .collect::<Vec<_>>(),
    )
    .expect("fit");
    let err = (fit.visibility - 0.524).abs();
    report(
        "criterion 8 (visibility pass-through)",
        err <= 1e-6 && fit.residual_rms <= 1e-10,
        &format!(
            "fitted ν = {:.9}, residual rms = {:.2e}",
            fit.visibility, fit.residual_rms
        ),
    );
}
