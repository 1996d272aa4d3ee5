//! Semiclassical beamline elements acting on [`KetState`]: beam splitter,
//! phase shifter, resonant rf spin flippers, recombiner, accelerator coil,
//! π/2 spin turner and spin analyzer.
//!
//! Flipper phase convention: an exact π flip maps `|k,↑⟩ ↦ e^{+iφ}|k+q,↓⟩`
//! and `|k,↓⟩ ↦ e^{−iφ}|k−q,↑⟩`, where `q` counts energy half-quanta
//! exchanged with the rf field (`q = 2` at the reference frequency ω, `q = 1`
//! at ω/2). Applying the same flipper twice is the identity.

use num_complex::Complex64;
use thiserror::Error;

use crate::qstate::{Branch, BranchKey, KetState, PathLabel, SpinLabel};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Physical constants used by the element parameterizations (SI units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    /// Magnitude of the neutron magnetic moment, J/T.
    pub mu_magnitude: f64,
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Neutron mass, kg.
    pub neutron_mass: f64,
    /// Planck constant, J·s.
    pub planck: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            mu_magnitude: 9.662_365_1e-27,
            hbar: 1.054_571_8e-34,
            neutron_mass: 1.674_927_498_04e-27,
            planck: 6.626_070_15e-34,
        }
    }
}

/// Parameters of one rf spin flipper.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlipperConfig {
    /// Angular frequency of the oscillating field, rad/s.
    pub omega: f64,
    /// Phase of the oscillating field, rad.
    pub phi: f64,
    /// Static guide field inside the coil, T.
    pub b0: f64,
    /// Amplitude of the oscillating field, T.
    pub b1: f64,
    /// Length of the rf coil along the beam, m.
    pub coil_length: f64,
    /// Restrict the flipper to one interferometer path; `None` acts on both.
    pub applies_to_path: Option<PathLabel>,
}

impl FlipperConfig {
    /// Flipper tuned to exact resonance and an exact π flip for the given
    /// beam: `b0 = ħω/(2|μ|)` and `b1 = πħ/(2τ|μ|)` with `τ` the coil
    /// traversal time.
    pub fn resonant_pi(
        omega: f64,
        phi: f64,
        coil_length: f64,
        ctx: &BeamContext,
        consts: &PhysicalConstants,
    ) -> Self {
        let tau = coil_length / ctx.velocity;
        FlipperConfig {
            omega,
            phi,
            b0: consts.hbar * omega / (2.0 * consts.mu_magnitude),
            b1: std::f64::consts::PI * consts.hbar / (2.0 * tau * consts.mu_magnitude),
            coil_length,
            applies_to_path: None,
        }
    }

    pub fn on_path(mut self, path: PathLabel) -> Self {
        self.applies_to_path = Some(path);
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }
}

/// Kinematic context of the monochromatic beam.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamContext {
    /// de Broglie wavelength, m.
    pub wavelength: f64,
    /// Beam velocity, m/s.
    pub velocity: f64,
    /// Propagation time between the two rf flippers, s.
    pub flight_time_between_flippers: f64,
}

impl BeamContext {
    /// Derive the velocity from the wavelength via `v = h/(mλ)`.
    pub fn from_wavelength(wavelength: f64, consts: &PhysicalConstants) -> Self {
        assert!(wavelength > 0.0, "wavelength must be positive");
        let velocity = consts.planck / (consts.neutron_mass * wavelength);
        debug_assert!(
            (velocity * wavelength * consts.neutron_mass - consts.planck).abs()
                <= 1e-9 * consts.planck
        );
        BeamContext {
            wavelength,
            velocity,
            flight_time_between_flippers: 0.0,
        }
    }

    pub fn with_flight_time(mut self, t: f64) -> Self {
        self.flight_time_between_flippers = t;
        self
    }
}

/// Phase-shifter plate parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseShifterConfig {
    /// Plate thickness, m.
    pub thickness_d: f64,
    /// Coherent scattering length, m.
    pub scattering_length_bc: f64,
    /// Particle density of the plate material, m⁻³.
    pub particle_density_nps: f64,
    /// Neutron wavelength, m.
    pub wavelength: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ElementError {
    /// Beam splitter input already contains a path-II component.
    #[error("beam splitter expects a single path-I input beam")]
    BadInput,
    /// Static field does not satisfy the resonance condition for the rf
    /// frequency.
    #[error("rf flipper off resonance: b0 = {b0:e} T, resonance requires {required:e} T")]
    NotResonant { b0: f64, required: f64 },
    /// Field amplitude and traversal time do not realize an exact π flip.
    #[error("rf flipper is not an exact pi pulse (flip probability {probability})")]
    NotPiPulse { probability: f64 },
    /// A down-spin branch would be driven below the bottom of the energy
    /// ladder.
    #[error("rf flip would push energy label below zero")]
    NegativeLadder,
    /// The rf frequency is not an integer number of ladder half-quanta.
    #[error("rf frequency {omega:e} rad/s incommensurate with reference {omega_ref:e} rad/s")]
    LadderMismatch { omega: f64, omega_ref: f64 },
}

/// First interferometer plate: `|I,k,s⟩ ↦ (|I,k,s⟩ + |II,k,s⟩)/√2`.
pub fn beam_split(state: &KetState) -> Result<KetState, ElementError> {
    if state.branches().iter().any(|b| b.key.path == PathLabel::II) {
        return Err(ElementError::BadInput);
    }
    let half = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Ok(KetState::from_branches(
        state.omega_ref(),
        state.branches().iter().flat_map(|b| {
            [
                (b.key, half * b.amplitude),
                (
                    BranchKey {
                        path: PathLabel::II,
                        ..b.key
                    },
                    half * b.amplitude,
                ),
            ]
        }),
    ))
}

/// Phase-shifter law `χ = N_ps · b_c · λ · D`.
pub fn phase_shift_chi(config: &PhaseShifterConfig) -> f64 {
    config.particle_density_nps
        * config.scattering_length_bc
        * config.wavelength
        * config.thickness_d
}

/// Multiply branches on `on_path` by `e^{iχ}`.
pub fn apply_phase_shifter(state: &KetState, chi: f64, on_path: PathLabel) -> KetState {
    let factor = Complex64::from_polar(1.0, chi);
    state.map_branches(|b| {
        if b.key.path == on_path {
            Branch {
                key: b.key,
                amplitude: b.amplitude * factor,
            }
        } else {
            *b
        }
    })
}

/// Spin-flip probability of a generic rf flipper,
/// `p = (ω₁²/Ω_R²)·sin²(Ω_R τ/2)` with `ω₁ = 2|μ|B₁/ħ`,
/// detuning `Δ = ω − 2|μ|B₀/ħ` and `Ω_R = √(Δ² + ω₁²)`.
///
/// The exact π flip of the beamline corresponds to `p = 1`; the general
/// formula is provided for parameter tuning.
pub fn rabi_flip_probability(
    cfg: &FlipperConfig,
    ctx: &BeamContext,
    consts: &PhysicalConstants,
) -> f64 {
    let omega_1 = 2.0 * consts.mu_magnitude * cfg.b1 / consts.hbar;
    let detuning = cfg.omega - 2.0 * consts.mu_magnitude * cfg.b0 / consts.hbar;
    let omega_r = (detuning * detuning + omega_1 * omega_1).sqrt();
    if omega_r == 0.0 {
        return 0.0;
    }
    let tau = cfg.coil_length / ctx.velocity;
    let s = (0.5 * omega_r * tau).sin();
    (omega_1 * omega_1) / (omega_r * omega_r) * s * s
}

/// Resonance condition of the rf flipper: `ω = 2|μ|B₀/ħ`.
pub fn resonance_frequency(b0: f64, consts: &PhysicalConstants) -> f64 {
    2.0 * consts.mu_magnitude * b0 / consts.hbar
}

/// Resonant π-flip: `|k,↑⟩ ↦ e^{+iφ}|k+q,↓⟩`, `|k,↓⟩ ↦ e^{−iφ}|k−q,↑⟩`.
///
/// `q` is the number of energy half-quanta exchanged,
/// `q = round(ω_cfg / (ω_ref/2))`. Branches not matching the configured path
/// pass through untouched. The configuration must satisfy the resonance
/// condition to 1e-6 relative and realize a π flip to 1e-9 in probability;
/// detuned flippers are rejected rather than partially applied.
pub fn rf_flip_resonant(
    state: &KetState,
    cfg: &FlipperConfig,
    ctx: &BeamContext,
    consts: &PhysicalConstants,
) -> Result<KetState, ElementError> {
    let required_b0 = consts.hbar * cfg.omega / (2.0 * consts.mu_magnitude);
    if cfg.b0 <= 0.0 || ((cfg.b0 - required_b0) / cfg.b0).abs() > 1e-6 {
        return Err(ElementError::NotResonant {
            b0: cfg.b0,
            required: required_b0,
        });
    }
    let probability = rabi_flip_probability(cfg, ctx, consts);
    if (probability - 1.0).abs() > 1e-9 {
        return Err(ElementError::NotPiPulse { probability });
    }
    let half_quantum = 0.5 * state.omega_ref();
    let q_real = cfg.omega / half_quantum;
    let q = q_real.round();
    if q < 1.0 || (q_real - q).abs() > 1e-9 * q_real {
        return Err(ElementError::LadderMismatch {
            omega: cfg.omega,
            omega_ref: state.omega_ref(),
        });
    }
    let q = q as u32;

    let mut mapped = Vec::with_capacity(state.branches().len());
    for b in state.branches() {
        if cfg.applies_to_path.is_some_and(|path| b.key.path != path) {
            mapped.push((b.key, b.amplitude));
            continue;
        }
        let k = b.key.energy.half_quanta();
        let (key, phase) = match b.key.spin {
            SpinLabel::Up => (BranchKey::new(b.key.path, k + q, SpinLabel::Down), cfg.phi),
            SpinLabel::Down => {
                if k < q {
                    return Err(ElementError::NegativeLadder);
                }
                (BranchKey::new(b.key.path, k - q, SpinLabel::Up), -cfg.phi)
            }
        };
        mapped.push((key, b.amplitude * Complex64::from_polar(1.0, phase)));
    }
    Ok(KetState::from_branches(state.omega_ref(), mapped))
}

/// Output ports of the third interferometer plate.
#[derive(Clone, Debug)]
pub struct Recombined {
    /// Forward beam, `(a_I + a_II)/√2` per (energy, spin).
    pub o: KetState,
    /// Deflected beam, `(a_I − a_II)/√2` per (energy, spin).
    pub h: KetState,
}

/// Recombine the two paths at the last plate. Both output beams carry the
/// nominal path label `I`; total intensity is conserved, `I_O + I_H = I_in`.
pub fn recombine(state: &KetState) -> Recombined {
    let half = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let mut o = Vec::new();
    let mut h = Vec::new();
    for b in state.branches() {
        let out_key = BranchKey {
            path: PathLabel::I,
            ..b.key
        };
        let signed = match b.key.path {
            PathLabel::I => half * b.amplitude,
            PathLabel::II => -half * b.amplitude,
        };
        o.push((out_key, half * b.amplitude));
        h.push((out_key, signed));
    }
    Recombined {
        o: KetState::from_branches(state.omega_ref(), o),
        h: KetState::from_branches(state.omega_ref(), h),
    }
}

/// Larmor precession in the accelerator coil: rotation by `z_rotation` about
/// ẑ, i.e. spin-up branches gain `e^{−iα/2}` and spin-down `e^{+iα/2}`.
pub fn accelerator_phase(state: &KetState, z_rotation: f64) -> KetState {
    let up = Complex64::from_polar(1.0, -0.5 * z_rotation);
    let down = Complex64::from_polar(1.0, 0.5 * z_rotation);
    state.map_branches(|b| Branch {
        key: b.key,
        amplitude: b.amplitude
            * match b.key.spin {
                SpinLabel::Up => up,
                SpinLabel::Down => down,
            },
    })
}

/// Static π/2 spin turner about ŷ, oriented so x̂ polarization maps to ẑ.
pub fn pi_half_turner(state: &KetState) -> KetState {
    // spinor map: a↑' = (a↑ + a↓)/√2, a↓' = (−a↑ + a↓)/√2
    let half = Complex64::new(FRAC_1_SQRT_2, 0.0);
    KetState::from_branches(
        state.omega_ref(),
        state.branches().iter().flat_map(|b| {
            let up_key = BranchKey {
                spin: SpinLabel::Up,
                ..b.key
            };
            let down_key = BranchKey {
                spin: SpinLabel::Down,
                ..b.key
            };
            match b.key.spin {
                SpinLabel::Up => [
                    (up_key, half * b.amplitude),
                    (down_key, -half * b.amplitude),
                ],
                SpinLabel::Down => [(up_key, half * b.amplitude), (down_key, half * b.amplitude)],
            }
        }),
    )
}

/// Ideal supermirror analyzer: branches with spin ≠ `keep` are removed and
/// no renormalization is applied, so the remaining intensity is the
/// transmission probability.
pub fn spin_analyze(state: &KetState, keep: SpinLabel) -> KetState {
    KetState::from_branches(
        state.omega_ref(),
        state
            .branches()
            .iter()
            .filter(|b| b.key.spin == keep)
            .map(|b| (b.key, b.amplitude)),
    )
}
