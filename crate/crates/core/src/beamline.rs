//! Full interferometer pipeline: polarized input beam, beam splitter, phase
//! shifter, in-loop rf flipper, recombiner, post-loop rf flipper at half
//! frequency, accelerator coil, π/2 turner and spin analyzer.
//!
//! Detected intensities are normalized to the mean transmission of the
//! spin-analysis stage (the π/2 turner plus analyzer passes half of a beam
//! with no ẑ polarization), so every standard configuration produces fringes
//! of the form `A(1 + ν cos φ)` with `A = 1/2` of the input intensity. The
//! visibility factor ν scales only the interference term.

use thiserror::Error;

use crate::elements::{
    accelerator_phase, apply_phase_shifter, beam_split, pi_half_turner, recombine,
    rf_flip_resonant, spin_analyze, BeamContext, ElementError, FlipperConfig, PhysicalConstants,
};
use crate::qstate::{
    KetState, PathLabel, PolarizationVector, SpinLabel, StateError, ZERO_NORM_EPS,
};

#[derive(Debug, Error)]
pub enum BeamlineError {
    /// The run configuration is internally inconsistent.
    #[error("invalid beamline configuration: {0}")]
    BadConfig(String),
    /// An element rejected the state or its configuration.
    #[error("{element}: {source}")]
    Element {
        element: &'static str,
        #[source]
        source: ElementError,
    },
    #[error(transparent)]
    State(#[from] StateError),
}

fn element_err(element: &'static str) -> impl Fn(ElementError) -> BeamlineError {
    move |source| BeamlineError::Element { element, source }
}

/// Configuration of one full run, mirroring the experimental arrangement.
#[derive(Clone, Debug)]
pub struct BeamlineSpec {
    pub initial_spin: SpinLabel,
    /// In-loop flipper at the reference frequency ω (path II).
    pub flipper1: FlipperConfig,
    pub flipper1_on: bool,
    /// Post-loop flipper at ω/2 acting on the whole recombined beam.
    pub flipper2: FlipperConfig,
    pub flipper2_on: bool,
    /// Phase-shifter phase χ, rad.
    pub chi: f64,
    /// Accelerator coil ẑ rotation, rad.
    pub accelerator_rotation: f64,
    /// Zero-field phase ωT between the flippers, rad.
    pub zero_field_phase: f64,
    /// Empirical fringe contrast in [0, 1]; scales interference terms only.
    pub visibility_factor: f64,
    pub analyzer_keep: SpinLabel,
    pub turner_on: bool,
    pub beam: BeamContext,
    pub consts: PhysicalConstants,
}

impl BeamlineSpec {
    /// Ideal arrangement: resonant π flippers at `omega` and `omega/2`, both
    /// on, π/2 turner in place, up-spin input analyzed along +ẑ.
    pub fn ideal(omega: f64, beam: BeamContext, consts: PhysicalConstants) -> Self {
        let flipper1 =
            FlipperConfig::resonant_pi(omega, 0.0, 0.02, &beam, &consts).on_path(PathLabel::II);
        let flipper2 = FlipperConfig::resonant_pi(omega / 2.0, 0.0, 0.02, &beam, &consts);
        BeamlineSpec {
            initial_spin: SpinLabel::Up,
            flipper1,
            flipper1_on: true,
            flipper2,
            flipper2_on: true,
            chi: 0.0,
            accelerator_rotation: 0.0,
            zero_field_phase: 0.0,
            visibility_factor: 1.0,
            analyzer_keep: SpinLabel::Up,
            turner_on: true,
            beam,
            consts,
        }
    }

    /// Toggle the initial polarization, leaving everything else untouched.
    pub fn invert_initial_polarization(&self) -> BeamlineSpec {
        BeamlineSpec {
            initial_spin: self.initial_spin.flipped(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), BeamlineError> {
        if !(0.0..=1.0).contains(&self.visibility_factor) {
            return Err(BeamlineError::BadConfig(format!(
                "visibility factor {} outside [0, 1]",
                self.visibility_factor
            )));
        }
        if self.flipper1_on && self.flipper1.applies_to_path != Some(PathLabel::II) {
            return Err(BeamlineError::BadConfig(
                "flipper1 must act on path II only".into(),
            ));
        }
        if self.flipper2_on && self.flipper2.applies_to_path.is_some() {
            return Err(BeamlineError::BadConfig(
                "flipper2 acts on the recombined beam and cannot be path-selective".into(),
            ));
        }
        if self.flipper1_on && self.flipper2_on {
            let ratio_err =
                (self.flipper2.omega - 0.5 * self.flipper1.omega).abs() / self.flipper2.omega;
            if ratio_err > 1e-9 {
                return Err(BeamlineError::BadConfig(format!(
                    "flipper2 frequency must be half of flipper1 (relative error {ratio_err:e})"
                )));
            }
        }
        Ok(())
    }

    /// Energy ladder reference: a down-spin input starts two half-quanta
    /// below the label origin so the in-loop flipper's upward flip stays on
    /// the non-negative ladder. Phases are relative, so the anchor drops out
    /// of every observable.
    fn initial_state(&self) -> KetState {
        let k0 = match self.initial_spin {
            SpinLabel::Up => 0,
            SpinLabel::Down => 2,
        };
        KetState::basis(self.flipper1.omega, PathLabel::I, k0, self.initial_spin)
    }
}

/// Polarization of the O beam as seen by a stationary measurement.
#[derive(Clone, Debug, PartialEq)]
pub enum OPolarization {
    /// Detection-time independent; the vector is exact for any `t`.
    Stationary(PolarizationVector),
    /// The transverse polarization rotates with detection time; use
    /// [`time_resolved`] to sample it.
    TimeDependent,
}

/// Detected intensities and O-beam polarization for one configuration.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub o_intensity: f64,
    pub h_intensity: f64,
    /// `None` when the O port carries no intensity.
    pub o_polarization: Option<OPolarization>,
    pub time_series: Option<Vec<(f64, PolarizationVector)>>,
}

/// Which knob a scan sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanParameter {
    Chi,
    PhiOmega,
    PhiHalf,
}

/// A sweep of one parameter over explicit values.
#[derive(Clone, Debug)]
pub struct ScanSpec {
    pub parameter: ScanParameter,
    pub values: Vec<f64>,
    pub base: BeamlineSpec,
}

#[derive(Clone, Copy, Debug)]
pub struct ScanPoint {
    pub value: f64,
    pub o_intensity: f64,
    pub h_intensity: f64,
}

/// O-beam state after the post-loop flipper and H-beam state at the third
/// plate, before the spin-analysis stage.
struct PortStates {
    o: KetState,
    h: KetState,
}

fn propagate(
    spec: &BeamlineSpec,
    chi: f64,
    chi_path: PathLabel,
) -> Result<PortStates, BeamlineError> {
    let state = spec.initial_state();
    let state = beam_split(&state).map_err(element_err("beam splitter"))?;
    let state = apply_phase_shifter(&state, chi, chi_path);
    let state = if spec.flipper1_on {
        rf_flip_resonant(&state, &spec.flipper1, &spec.beam, &spec.consts)
            .map_err(element_err("flipper1"))?
    } else {
        state
    };
    // zero-field precession between the flippers: branch k gains e^{ik(ωT)/2}
    let state = state.phase_by_energy(0.5 * spec.zero_field_phase);
    let ports = recombine(&state);
    let o = if spec.flipper2_on {
        rf_flip_resonant(&ports.o, &spec.flipper2, &spec.beam, &spec.consts)
            .map_err(element_err("flipper2"))?
    } else {
        ports.o
    };
    Ok(PortStates { o, h: ports.h })
}

/// Detected O intensity for the state reaching the analysis stage, folded to
/// detection time `t`.
fn analyzed_intensity(spec: &BeamlineSpec, o_state: &KetState, t: f64) -> f64 {
    let state = o_state.fold_time_phase(t);
    let state = accelerator_phase(&state, spec.accelerator_rotation);
    let state = if spec.turner_on {
        pi_half_turner(&state)
    } else {
        state
    };
    let gain = if spec.turner_on { 2.0 } else { 1.0 };
    gain * spin_analyze(&state, spec.analyzer_keep).intensity()
}

/// Raw detector pair (O, H) at `chi`, before visibility scaling.
fn detect(spec: &BeamlineSpec, chi: f64, t: f64) -> Result<(f64, f64), BeamlineError> {
    let ports = propagate(spec, chi, PathLabel::II)?;
    Ok((analyzed_intensity(spec, &ports.o, t), ports.h.intensity()))
}

/// Scale the interference term of a detected intensity by ν.
///
/// Every interference term in this beamline carries the phase-shifter phase
/// exactly once, so evaluating the same pipeline at `χ` and `χ + π` isolates
/// the mean: `I(χ) = mean + cross(χ)` with `cross(χ + π) = −cross(χ)`.
fn with_visibility(i_at_chi: f64, i_at_chi_pi: f64, nu: f64) -> f64 {
    let mean = 0.5 * (i_at_chi + i_at_chi_pi);
    mean + nu * (i_at_chi - mean)
}

/// Execute one configuration at detection time `t`.
fn run_at(spec: &BeamlineSpec, t: f64) -> Result<RunResult, BeamlineError> {
    spec.validate()?;
    let (o_raw, h_raw) = detect(spec, spec.chi, t)?;
    let (o_flip, h_flip) = detect(spec, spec.chi + std::f64::consts::PI, t)?;
    let nu = spec.visibility_factor;

    let ports = propagate(spec, spec.chi, PathLabel::II)?;
    let o_polarization = if ports.o.intensity() <= ZERO_NORM_EPS {
        None
    } else if is_stationary(&ports.o) {
        let after_accelerator = accelerator_phase(&ports.o, spec.accelerator_rotation);
        Some(OPolarization::Stationary(after_accelerator.polarization()?))
    } else {
        Some(OPolarization::TimeDependent)
    };

    Ok(RunResult {
        o_intensity: with_visibility(o_raw, o_flip, nu),
        h_intensity: with_visibility(h_raw, h_flip, nu),
        o_polarization,
        time_series: None,
    })
}

/// Execute one configuration: detected intensities are time-averaged, the
/// O-beam polarization refers to the state after the accelerator coil.
pub fn run(spec: &BeamlineSpec) -> Result<RunResult, BeamlineError> {
    run_at(spec, 0.0)
}

/// Post-analyzer O intensity for a detection at time `t`; used to verify
/// stationarity of the compensated arrangement.
pub fn detector_intensity_at(spec: &BeamlineSpec, t: f64) -> Result<f64, BeamlineError> {
    spec.validate()?;
    let (o_raw, _) = detect(spec, spec.chi, t)?;
    let (o_flip, _) = detect(spec, spec.chi + std::f64::consts::PI, t)?;
    Ok(with_visibility(o_raw, o_flip, spec.visibility_factor))
}

/// The folded transverse polarization rotates with detection time whenever
/// up and down amplitudes sit on different energy rungs.
fn is_stationary(state: &KetState) -> bool {
    let mut up_rungs = Vec::new();
    let mut down_rungs = Vec::new();
    for b in state.branches() {
        let k = b.key.energy.half_quanta();
        match b.key.spin {
            SpinLabel::Up => up_rungs.push(k),
            SpinLabel::Down => down_rungs.push(k),
        }
    }
    up_rungs
        .iter()
        .all(|ku| down_rungs.iter().all(|kd| ku == kd))
}

/// Sweep one parameter; deterministic, order-preserving.
pub fn scan(spec: &ScanSpec) -> Result<Vec<ScanPoint>, BeamlineError> {
    if spec.values.is_empty() {
        return Err(BeamlineError::BadConfig("scan has no values".into()));
    }
    if spec.values.iter().any(|v| !v.is_finite()) {
        return Err(BeamlineError::BadConfig(
            "scan values must be finite".into(),
        ));
    }
    spec.values
        .iter()
        .map(|&value| {
            let mut point = spec.base.clone();
            match spec.parameter {
                ScanParameter::Chi => point.chi = value,
                ScanParameter::PhiOmega => point.flipper1.phi = value,
                ScanParameter::PhiHalf => point.flipper2.phi = value,
            }
            run(&point).map(|r| ScanPoint {
                value,
                o_intensity: r.o_intensity,
                h_intensity: r.h_intensity,
            })
        })
        .collect()
}

/// Time-resolved polarization of the O beam in the single-flipper
/// arrangement (region-4 observation).
///
/// The time-resolved convention measures the phase-shifter angle on the
/// reference path, so an up-spin input reproduces the rotating polarization
/// `(cos(χ − ωt − φ_ω), sin(χ − ωt − φ_ω), 0)`.
pub fn time_resolved(
    spec: &BeamlineSpec,
    times: &[f64],
) -> Result<Vec<(f64, PolarizationVector)>, BeamlineError> {
    spec.validate()?;
    if spec.flipper2_on {
        return Err(BeamlineError::BadConfig(
            "time-resolved observation requires flipper2 off (the compensated state is stationary)"
                .into(),
        ));
    }
    if !spec.flipper1_on {
        return Err(BeamlineError::BadConfig(
            "time-resolved observation requires flipper1 on".into(),
        ));
    }
    let ports = propagate(spec, spec.chi, PathLabel::I)?;
    times
        .iter()
        .map(|&t| {
            let folded = ports.o.fold_time_phase(t);
            Ok((t, folded.polarization()?))
        })
        .collect()
}

/// Average polarization over the sampled times (uniform weight).
pub fn average_polarization(series: &[(f64, PolarizationVector)]) -> PolarizationVector {
    let n = series.len().max(1) as f64;
    let (mut px, mut py, mut pz) = (0.0, 0.0, 0.0);
    for (_, p) in series {
        px += p.px;
        py += p.py;
        pz += p.pz;
    }
    PolarizationVector {
        px: px / n,
        py: py / n,
        pz: pz / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    const OMEGA: f64 = TAU * 58e3;

    fn ideal() -> BeamlineSpec {
        let consts = PhysicalConstants::default();
        let beam = BeamContext::from_wavelength(1.91e-10, &consts);
        BeamlineSpec::ideal(OMEGA, beam, consts)
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Closed-form detected O intensity of the full arrangement.
    fn fringe_law(spec: &BeamlineSpec) -> f64 {
        let sign = match spec.initial_spin {
            SpinLabel::Up => 1.0,
            SpinLabel::Down => -1.0,
        };
        let delta = sign * spec.chi + spec.flipper1.phi - 2.0 * spec.flipper2.phi
            + spec.zero_field_phase
            - spec.accelerator_rotation;
        0.5 * (1.0 + spec.visibility_factor * delta.cos())
    }

    #[test]
    fn empty_interferometer_is_fully_forward() {
        let mut spec = ideal();
        spec.flipper1_on = false;
        spec.flipper2_on = false;
        spec.turner_on = false;
        spec.chi = 0.0;
        let r = run(&spec).unwrap();
        assert_close(r.o_intensity, 1.0, 1e-12);
        assert_close(r.h_intensity, 0.0, 1e-12);
    }

    #[test]
    fn single_flipper_hides_fringes_and_rotates_polarization() {
        let mut spec = ideal();
        spec.flipper2_on = false;
        for i in 0..24 {
            spec.chi = TAU * f64::from(i) / 24.0;
            let r = run(&spec).unwrap();
            assert_close(r.h_intensity, 0.5, 1e-12);
            assert_eq!(r.o_polarization, Some(OPolarization::TimeDependent));
        }
    }

    #[test]
    fn full_setup_reproduces_fringe_law() {
        let mut spec = ideal();
        spec.flipper1.phi = 0.8;
        spec.flipper2.phi = -0.45;
        spec.zero_field_phase = 1.3;
        for i in 0..48 {
            spec.chi = TAU * f64::from(i) / 48.0 - PI;
            let r = run(&spec).unwrap();
            assert_close(r.o_intensity, fringe_law(&spec), 1e-12);
            assert_close(r.h_intensity, 0.5, 1e-12);
        }
    }

    #[test]
    fn full_setup_polarization_is_stationary_final_state() {
        // (cos Δ_tot, sin Δ_tot, 0) with Δ_tot = χ − 2φ_h + φ_ω + ωT over a
        // parameter grid, with no detection-time dependence
        for (chi, phi_w, phi_h, wt) in [
            (0.7, 0.25, 1.1, 0.4),
            (0.0, 0.0, 0.0, 0.0),
            (-2.1, 1.9, -0.6, 2.8),
            (3.0, -1.3, 0.4, -1.0),
            (1.2, 2.6, -2.2, 0.1),
        ] {
            let mut spec = ideal();
            spec.chi = chi;
            spec.flipper1.phi = phi_w;
            spec.flipper2.phi = phi_h;
            spec.zero_field_phase = wt;
            let delta_tot = chi - 2.0 * phi_h + phi_w + wt;
            let r = run(&spec).unwrap();
            match r.o_polarization {
                Some(OPolarization::Stationary(p)) => {
                    assert_close(p.px, delta_tot.cos(), 1e-9);
                    assert_close(p.py, delta_tot.sin(), 1e-9);
                    assert_close(p.pz, 0.0, 1e-12);
                }
                other => panic!("expected stationary polarization, got {other:?}"),
            }
        }
    }

    #[test]
    fn reference_scan_is_a_pure_chi_cosine() {
        // flipper1 off: the fringe tracks the phase shifter alone, so the
        // fitted phase offset is zero for either initial spin
        for spin in [SpinLabel::Up, SpinLabel::Down] {
            let mut base = ideal();
            base.initial_spin = spin;
            base.flipper1_on = false;
            base.flipper1.phi = 1.3;
            base.flipper2.phi = -0.4;
            let values: Vec<f64> = (0..24).map(|i| TAU * f64::from(i) / 24.0).collect();
            let points = scan(&ScanSpec {
                parameter: ScanParameter::Chi,
                values,
                base,
            })
            .unwrap();
            let fit = crate::analysis::fit_fringe(
                &points
                    .iter()
                    .map(|p| (p.value, p.o_intensity))
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            assert_close(fit.offset_a, 0.5, 1e-12);
            assert_close(fit.visibility, 1.0, 1e-9);
            assert_close(fit.phase.unwrap(), 0.0, 1e-9);
        }
    }

    #[test]
    fn relative_phase_of_simulated_scan_pairs() {
        // ΔΦ⁺ = φ_ω − 2φ_h for spin up, from on/off scan pairs
        let delta_phi = |phi_w: f64, phi_h: f64| -> f64 {
            let mut base = ideal();
            base.flipper1.phi = phi_w;
            base.flipper2.phi = phi_h;
            let values: Vec<f64> = (0..16).map(|i| TAU * f64::from(i) / 16.0).collect();
            let fit_of = |flipper1_on: bool| {
                let mut spec = base.clone();
                spec.flipper1_on = flipper1_on;
                let points = scan(&ScanSpec {
                    parameter: ScanParameter::Chi,
                    values: values.clone(),
                    base: spec,
                })
                .unwrap();
                crate::analysis::fit_fringe(
                    &points
                        .iter()
                        .map(|p| (p.value, p.o_intensity))
                        .collect::<Vec<_>>(),
                )
                .unwrap()
            };
            crate::analysis::relative_phase(&fit_of(true), &fit_of(false)).unwrap()
        };
        assert_close(delta_phi(0.7, 0.0), 0.7, 1e-9);
        assert_close(delta_phi(0.0, 0.3), -0.6, 1e-9);
    }

    #[test]
    fn visibility_scales_interference_only() {
        let mut spec = ideal();
        spec.visibility_factor = 0.524;
        spec.flipper1.phi = 0.3;
        for i in 0..16 {
            spec.chi = TAU * f64::from(i) / 16.0;
            let r = run(&spec).unwrap();
            assert_close(r.o_intensity, fringe_law(&spec), 1e-12);
        }
    }

    #[test]
    fn inverted_polarization_flips_fringe_sign() {
        let mut spec = ideal();
        spec.flipper1.phi = 0.6;
        spec.flipper2.phi = 0.2;
        let down = spec.invert_initial_polarization();
        assert_eq!(down.initial_spin, SpinLabel::Down);
        assert_eq!(
            down.invert_initial_polarization().initial_spin,
            SpinLabel::Up
        );
        for i in 0..16 {
            let chi = TAU * f64::from(i) / 16.0;
            let mut s = down.clone();
            s.chi = chi;
            let r = run(&s).unwrap();
            assert_close(r.o_intensity, fringe_law(&s), 1e-12);
        }
    }

    #[test]
    fn accelerator_compensates_zero_field_phase() {
        let mut spec = ideal();
        spec.zero_field_phase = 2.2;
        spec.accelerator_rotation = 2.2;
        spec.chi = 0.0;
        let r = run(&spec).unwrap();
        // Δ_tot collapses to χ = 0: constructive
        assert_close(r.o_intensity, 1.0, 1e-12);
    }

    #[test]
    fn detection_time_independence_with_compensation() {
        let mut spec = ideal();
        spec.chi = 1.1;
        spec.flipper1.phi = 0.5;
        spec.flipper2.phi = 0.8;
        spec.zero_field_phase = 0.9;
        spec.accelerator_rotation = 0.9;
        let period = TAU / OMEGA;
        let i0 = detector_intensity_at(&spec, 0.0).unwrap();
        for i in 0..32 {
            let t = period * f64::from(i) / 32.0;
            let it = detector_intensity_at(&spec, t).unwrap();
            assert_close(it, i0, 1e-9);
        }
    }

    #[test]
    fn detection_time_dependence_without_compensation() {
        let mut spec = ideal();
        spec.flipper2_on = false;
        let period = TAU / OMEGA;
        let i0 = detector_intensity_at(&spec, 0.0).unwrap();
        let i_half = detector_intensity_at(&spec, 0.5 * period).unwrap();
        assert!((i0 - i_half).abs() > 0.5);
    }

    #[test]
    fn time_resolved_matches_rotating_polarization() {
        let mut spec = ideal();
        spec.flipper2_on = false;
        spec.chi = 0.0;
        spec.flipper1.phi = 0.0;

        let series = time_resolved(&spec, &[0.0, PI / OMEGA]).unwrap();
        let p0 = series[0].1;
        assert_close(p0.px, 1.0, 1e-12);
        assert_close(p0.py, 0.0, 1e-12);
        let p_half = series[1].1;
        assert_close(p_half.px, -1.0, 1e-12);
        assert_close(p_half.py, 0.0, 1e-9);
    }

    #[test]
    fn time_resolved_average_vanishes() {
        let mut spec = ideal();
        spec.flipper2_on = false;
        spec.chi = 0.9;
        spec.flipper1.phi = 0.3;
        let period = TAU / OMEGA;
        let times: Vec<f64> = (0..128).map(|i| period * f64::from(i) / 128.0).collect();
        let series = time_resolved(&spec, &times).unwrap();
        let avg = average_polarization(&series);
        assert_close(avg.px, 0.0, 1e-9);
        assert_close(avg.py, 0.0, 1e-9);
        assert_close(avg.pz, 0.0, 1e-9);
    }

    #[test]
    fn time_resolved_rejects_stationary_config() {
        let spec = ideal();
        assert!(matches!(
            time_resolved(&spec, &[0.0]),
            Err(BeamlineError::BadConfig(_))
        ));
    }

    #[test]
    fn scan_over_chi_shows_two_fringes_and_flat_h() {
        let spec = ideal();
        let values: Vec<f64> = (0..72).map(|i| 2.0 * TAU * f64::from(i) / 72.0).collect();
        let points = scan(&ScanSpec {
            parameter: ScanParameter::Chi,
            values,
            base: spec,
        })
        .unwrap();
        assert_eq!(points.len(), 72);
        let maxima = points.iter().filter(|p| p.o_intensity > 0.999).count();
        assert!(maxima >= 2, "expected two fringe maxima, saw {maxima}");
        for p in &points {
            assert_close(p.h_intensity, 0.5, 1e-12);
        }
    }

    #[test]
    fn scan_over_phi_omega_is_unit_slope_cosine() {
        let mut base = ideal();
        base.chi = 0.4;
        base.flipper2.phi = 0.1;
        let values: Vec<f64> = (0..16).map(|i| TAU * f64::from(i) / 16.0).collect();
        let points = scan(&ScanSpec {
            parameter: ScanParameter::PhiOmega,
            values,
            base: base.clone(),
        })
        .unwrap();
        for p in &points {
            let delta = base.chi + p.value - 2.0 * base.flipper2.phi;
            assert_close(p.o_intensity, 0.5 * (1.0 + delta.cos()), 1e-12);
        }
    }

    #[test]
    fn scan_rejects_empty_and_non_finite_values() {
        let base = ideal();
        assert!(scan(&ScanSpec {
            parameter: ScanParameter::Chi,
            values: vec![],
            base: base.clone(),
        })
        .is_err());
        assert!(scan(&ScanSpec {
            parameter: ScanParameter::Chi,
            values: vec![f64::NAN],
            base,
        })
        .is_err());
    }

    #[test]
    fn intensity_accounting_without_turner() {
        // with the analysis stage transparent, detector intensities sum to
        // at most the input
        let mut spec = ideal();
        spec.turner_on = false;
        for chi in [0.0, 0.7, PI, 4.4] {
            spec.chi = chi;
            let r = run(&spec).unwrap();
            assert!(r.o_intensity >= 0.0 && r.h_intensity >= 0.0);
            assert!(r.o_intensity + r.h_intensity <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn detuned_flipper_is_named_in_error() {
        let mut spec = ideal();
        spec.flipper1.b0 *= 1.05;
        let err = run(&spec).unwrap_err();
        assert!(err.to_string().contains("flipper1"), "{err}");
        assert!(matches!(
            err,
            BeamlineError::Element {
                element: "flipper1",
                source: ElementError::NotResonant { .. }
            }
        ));
    }

    #[test]
    fn frequency_ratio_is_enforced() {
        let mut spec = ideal();
        spec.flipper2.omega = spec.flipper1.omega * 0.51;
        assert!(matches!(run(&spec), Err(BeamlineError::BadConfig(_))));
    }
}
