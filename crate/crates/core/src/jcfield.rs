//! Quantized-field solver for the two-mode dressed neutron on a truncated
//! Fock space, used to cross-validate the semiclassical flipper model.
//!
//! The Hamiltonian couples a spin-1/2 to two field modes at ω and ω/2:
//! Zeeman term `−μB₀σ_z`, photon energies `ħω n_ω + (ħω/2) n_{ω/2}`, and
//! rotating-wave couplings `μ(B₁/√N)(a†σ̃ + a σ̃†)` per mode with
//! `σ̃ = ½(σ_x + iσ_y)`. With the moment magnitude in the Zeeman term the
//! down state is the upper level, so a down-spin neutron flips by emitting a
//! photon into the driven mode while an up-spin neutron must absorb one
//! (and the vacuum cannot supply it). `√N` is evaluated at the coherent
//! window's photon-number center, matching the mean-field normalization.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::elements::PhysicalConstants;
use crate::qstate::SpinLabel;

/// Maximum coherent-state weight allowed outside a truncation window.
pub const TAIL_WEIGHT_LIMIT: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum JcError {
    /// Truncation window misses more than [`TAIL_WEIGHT_LIMIT`] of the
    /// coherent state, or the window itself is empty.
    #[error("Fock basis too small: {0}")]
    BasisTooSmall(String),
    /// Evolution lost unitarity beyond tolerance.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

/// Coherent-state parameters `α = |α| e^{iφ}`, `|α| = √N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentSpec {
    pub alpha_magnitude: f64,
    pub alpha_phase: f64,
}

impl CoherentSpec {
    pub fn vacuum() -> Self {
        CoherentSpec {
            alpha_magnitude: 0.0,
            alpha_phase: 0.0,
        }
    }

    pub fn from_mean_photons(n: f64, phase: f64) -> Self {
        CoherentSpec {
            alpha_magnitude: n.sqrt(),
            alpha_phase: phase,
        }
    }
}

/// Photon-number window of one mode plus the photon number at which the
/// coupling normalization `1/√N` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeWindow {
    pub n_min: u32,
    pub n_max: u32,
    pub coupling_n: f64,
}

impl ModeWindow {
    /// Window centered on `⌈|α|²⌉` with half-width `8 + ⌈8|α|⌉`, wide
    /// enough to hold all but ~1e-13 of the coherent state.
    pub fn for_coherent(spec: &CoherentSpec) -> Self {
        let mean = spec.alpha_magnitude * spec.alpha_magnitude;
        let center = mean.ceil();
        let half_width = 8.0 + (8.0 * spec.alpha_magnitude).ceil();
        ModeWindow {
            n_min: (center - half_width).max(0.0) as u32,
            n_max: (center + half_width) as u32,
            coupling_n: center.max(1.0),
        }
    }

    /// Collapse the mode to a single Fock level (idle-mode bookkeeping).
    pub fn single_level(n: u32) -> Self {
        ModeWindow {
            n_min: n,
            n_max: n,
            coupling_n: f64::from(n).max(1.0),
        }
    }

    pub fn levels(&self) -> u32 {
        self.n_max - self.n_min + 1
    }
}

/// Truncated two-mode ⊗ spin basis. Index layout:
/// `((n_ω − n_min_ω)·levels_half + (n_h − n_min_h))·2 + spin`, spin up first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FockBasisSpec {
    pub mode_omega: ModeWindow,
    pub mode_half: ModeWindow,
}

impl FockBasisSpec {
    /// Basis sized for the two coherent drives; fails if a window cannot
    /// satisfy the tail rule.
    pub fn for_coherent(
        spec_omega: &CoherentSpec,
        spec_half: &CoherentSpec,
    ) -> Result<Self, JcError> {
        let basis = FockBasisSpec {
            mode_omega: ModeWindow::for_coherent(spec_omega),
            mode_half: ModeWindow::for_coherent(spec_half),
        };
        basis.check_tails(spec_omega, spec_half)?;
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.mode_omega.levels() as usize * self.mode_half.levels() as usize * 2
    }

    pub fn index(&self, n_omega: u32, n_half: u32, spin: SpinLabel) -> usize {
        debug_assert!((self.mode_omega.n_min..=self.mode_omega.n_max).contains(&n_omega));
        debug_assert!((self.mode_half.n_min..=self.mode_half.n_max).contains(&n_half));
        let i_w = (n_omega - self.mode_omega.n_min) as usize;
        let i_h = (n_half - self.mode_half.n_min) as usize;
        let s = match spin {
            SpinLabel::Up => 0,
            SpinLabel::Down => 1,
        };
        (i_w * self.mode_half.levels() as usize + i_h) * 2 + s
    }

    /// `(n_ω, n_h, spin)` labels in index order.
    fn states(&self) -> impl Iterator<Item = (u32, u32, SpinLabel)> + '_ {
        (self.mode_omega.n_min..=self.mode_omega.n_max).flat_map(move |nw| {
            (self.mode_half.n_min..=self.mode_half.n_max)
                .flat_map(move |nh| [(nw, nh, SpinLabel::Up), (nw, nh, SpinLabel::Down)])
        })
    }

    pub fn check_tails(
        &self,
        spec_omega: &CoherentSpec,
        spec_half: &CoherentSpec,
    ) -> Result<(), JcError> {
        for (label, spec, window) in [
            ("omega", spec_omega, self.mode_omega),
            ("omega/2", spec_half, self.mode_half),
        ] {
            let outside = coherent_weight_outside(spec.alpha_magnitude, &window);
            if outside >= TAIL_WEIGHT_LIMIT {
                return Err(JcError::BasisTooSmall(format!(
                    "mode {label}: coherent weight {outside:e} outside window \
                     [{}, {}] exceeds {TAIL_WEIGHT_LIMIT:e}",
                    window.n_min, window.n_max
                )));
            }
        }
        Ok(())
    }
}

/// Poissonian weight of `|α⟩` outside the window.
pub fn coherent_weight_outside(alpha_magnitude: f64, window: &ModeWindow) -> f64 {
    let mean = alpha_magnitude * alpha_magnitude;
    if mean == 0.0 {
        return if window.n_min == 0 { 0.0 } else { 1.0 };
    }
    let mut inside = 0.0;
    let mut log_pmf = -mean; // ln P(0)
    for n in 0..=window.n_max {
        if n > 0 {
            log_pmf += mean.ln() - f64::from(n).ln();
        }
        if n >= window.n_min {
            inside += log_pmf.exp();
        }
    }
    (1.0 - inside).max(0.0)
}

/// Two-mode photon field ⊗ spin state on a truncated basis.
#[derive(Clone, Debug)]
pub struct FockState {
    pub basis: FockBasisSpec,
    pub amplitudes: DVector<Complex64>,
}

impl FockState {
    /// Pure Fock ⊗ spin product state.
    pub fn fock_product(basis: FockBasisSpec, n_omega: u32, n_half: u32, spin: SpinLabel) -> Self {
        let mut amplitudes = DVector::zeros(basis.dim());
        amplitudes[basis.index(n_omega, n_half, spin)] = Complex64::ONE;
        FockState { basis, amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Mean photon number in each mode.
    pub fn mean_photon_numbers(&self) -> (f64, f64) {
        let mut n_w = 0.0;
        let mut n_h = 0.0;
        for ((nw, nh, spin), amp) in self.basis.states().zip(self.amplitudes.iter()) {
            let w = amp.norm_sqr();
            let _ = spin;
            n_w += w * f64::from(nw);
            n_h += w * f64::from(nh);
        }
        let norm = self.norm_sqr();
        (n_w / norm, n_h / norm)
    }

    /// Weight carried by one spin projection.
    pub fn spin_weight(&self, spin: SpinLabel) -> f64 {
        self.basis
            .states()
            .zip(self.amplitudes.iter())
            .filter(|((_, _, s), _)| *s == spin)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// Physical parameters of the quantized-field model.
#[derive(Clone, Copy, Debug)]
pub struct JCParams {
    /// Reference angular frequency ω, rad/s (the second mode sits at ω/2).
    pub omega: f64,
    /// Static field, T; resonance corresponds to `b0 = ħω/(2|μ|)`.
    pub b0: f64,
    /// Oscillating-field amplitude coupled to mode ω, T.
    pub b1_omega: f64,
    /// Oscillating-field amplitude coupled to mode ω/2, T.
    pub b1_half: f64,
    pub consts: PhysicalConstants,
    /// Default evolution time, s.
    pub interaction_time: f64,
}

impl JCParams {
    /// Resonant parameters with only the ω mode driven.
    pub fn resonant_single_mode(omega: f64, b1: f64, consts: PhysicalConstants) -> Self {
        JCParams {
            omega,
            b0: consts.hbar * omega / (2.0 * consts.mu_magnitude),
            b1_omega: b1,
            b1_half: 0.0,
            consts,
            interaction_time: 0.0,
        }
    }

    /// Semiclassical Rabi frequency `ω₁ = 2|μ|B₁/ħ` of the given amplitude.
    pub fn rabi_frequency(&self, b1: f64) -> f64 {
        2.0 * self.consts.mu_magnitude * b1 / self.consts.hbar
    }

    /// Interaction time realizing the given pulse area for amplitude `b1`.
    pub fn duration_for_area(&self, area: f64, b1: f64) -> f64 {
        area / self.rabi_frequency(b1)
    }
}

/// Assemble the Hermitian Hamiltonian (J) over the truncated basis.
pub fn build_hamiltonian(
    params: &JCParams,
    basis: &FockBasisSpec,
) -> Result<DMatrix<Complex64>, JcError> {
    if basis.mode_omega.n_min > basis.mode_omega.n_max
        || basis.mode_half.n_min > basis.mode_half.n_max
    {
        return Err(JcError::BasisTooSmall("empty photon window".into()));
    }
    let dim = basis.dim();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let consts = &params.consts;
    let zeeman = consts.mu_magnitude * params.b0;
    let hbar_omega = consts.hbar * params.omega;

    for (nw, nh, spin) in basis.states() {
        let i = basis.index(nw, nh, spin);
        let spin_sign = match spin {
            SpinLabel::Up => -1.0, // −μB₀σ_z with the moment magnitude: up is the lower level
            SpinLabel::Down => 1.0,
        };
        h[(i, i)] = Complex64::new(
            spin_sign * zeeman + hbar_omega * (f64::from(nw) + 0.5 * f64::from(nh)),
            0.0,
        );

        // a†σ̃ terms: |…, n, ↓⟩ → |…, n+1, ↑⟩ with √(n+1)/√N
        if spin == SpinLabel::Down {
            if nw < basis.mode_omega.n_max && params.b1_omega != 0.0 {
                let j = basis.index(nw + 1, nh, SpinLabel::Up);
                let g = consts.mu_magnitude * params.b1_omega * (f64::from(nw) + 1.0).sqrt()
                    / basis.mode_omega.coupling_n.sqrt();
                h[(j, i)] += Complex64::new(g, 0.0);
                h[(i, j)] += Complex64::new(g, 0.0);
            }
            if nh < basis.mode_half.n_max && params.b1_half != 0.0 {
                let j = basis.index(nw, nh + 1, SpinLabel::Up);
                let g = consts.mu_magnitude * params.b1_half * (f64::from(nh) + 1.0).sqrt()
                    / basis.mode_half.coupling_n.sqrt();
                h[(j, i)] += Complex64::new(g, 0.0);
                h[(i, j)] += Complex64::new(g, 0.0);
            }
        }
    }
    Ok(h)
}

/// Truncated coherent ⊗ coherent ⊗ spin product state, renormalized to 1.
pub fn prepare_initial(
    basis: &FockBasisSpec,
    spec_omega: &CoherentSpec,
    spec_half: &CoherentSpec,
    spin: SpinLabel,
) -> Result<FockState, JcError> {
    basis.check_tails(spec_omega, spec_half)?;
    let amp_w = coherent_amplitudes(spec_omega, &basis.mode_omega);
    let amp_h = coherent_amplitudes(spec_half, &basis.mode_half);

    let mut amplitudes = DVector::zeros(basis.dim());
    for (iw, aw) in amp_w.iter().enumerate() {
        for (ih, ah) in amp_h.iter().enumerate() {
            let idx = basis.index(
                basis.mode_omega.n_min + iw as u32,
                basis.mode_half.n_min + ih as u32,
                spin,
            );
            amplitudes[idx] = aw * ah;
        }
    }
    let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return Err(JcError::BasisTooSmall(
            "coherent state has no weight inside the window".into(),
        ));
    }
    Ok(FockState {
        basis: *basis,
        amplitudes: amplitudes / Complex64::from(norm),
    })
}

/// `c_n = e^{−|α|²/2} α^n / √(n!)` over the window, evaluated in log space.
fn coherent_amplitudes(spec: &CoherentSpec, window: &ModeWindow) -> Vec<Complex64> {
    let mean = spec.alpha_magnitude * spec.alpha_magnitude;
    let mut log_mag = -0.5 * mean; // ln |c_0|
    let mut out = Vec::with_capacity(window.levels() as usize);
    for n in 0..=window.n_max {
        if n > 0 {
            log_mag += if mean > 0.0 {
                spec.alpha_magnitude.ln() - 0.5 * f64::from(n).ln()
            } else {
                f64::NEG_INFINITY
            };
        }
        if n >= window.n_min {
            let phase = spec.alpha_phase * f64::from(n);
            out.push(Complex64::from_polar(log_mag.exp(), phase));
        }
    }
    out
}

/// Schrödinger evolution `exp(−iHt/ħ)` by spectral decomposition of the
/// Hermitian `h`.
pub fn evolve(
    state: &FockState,
    h: &DMatrix<Complex64>,
    t: f64,
    consts: &PhysicalConstants,
) -> Result<FockState, JcError> {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let coeffs = eig.eigenvectors.adjoint() * &state.amplitudes;
    let phased = DVector::from_iterator(
        coeffs.len(),
        coeffs
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t / consts.hbar)),
    );
    let amplitudes = &eig.eigenvectors * phased;
    let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - state.norm_sqr().sqrt()).abs() > 1e-8 {
        return Err(JcError::NumericalFailure(format!(
            "evolution norm drifted to {norm}"
        )));
    }
    Ok(FockState {
        basis: state.basis,
        amplitudes,
    })
}

/// Real expectation value `⟨ψ|H|ψ⟩` of a Hermitian operator.
pub fn expectation(state: &FockState, h: &DMatrix<Complex64>) -> f64 {
    let hv = h * &state.amplitudes;
    state
        .amplitudes
        .iter()
        .zip(hv.iter())
        .map(|(a, b)| (a.conj() * b).re)
        .sum()
}

/// Flip statistics extracted from an (initial, final) evolution pair.
#[derive(Clone, Copy, Debug)]
pub struct SpinFlipStats {
    /// Weight of the flipped-spin subspace of the final state.
    pub flip_probability: f64,
    /// Phase imprinted on the flipped component, measured against the
    /// initial field state and oriented so that advancing the drive phase
    /// advances the imprinted phase.
    pub imprinted_phase: f64,
    /// Mean photon-number change in the ω mode.
    pub mean_photon_shift_omega: f64,
    /// Mean photon-number change in the ω/2 mode.
    pub mean_photon_shift_half: f64,
}

/// Compare initial and final states sharing one basis.
pub fn spin_flip_stats(initial: &FockState, final_state: &FockState) -> SpinFlipStats {
    assert_eq!(
        initial.basis, final_state.basis,
        "states must share a basis"
    );
    let basis = &initial.basis;
    let initial_spin = if initial.spin_weight(SpinLabel::Up) >= initial.spin_weight(SpinLabel::Down)
    {
        SpinLabel::Up
    } else {
        SpinLabel::Down
    };
    let flipped = initial_spin.flipped();

    let flip_probability = final_state.spin_weight(flipped) / final_state.norm_sqr();

    // overlap of the flipped component with the initial field amplitudes
    let mut overlap = Complex64::ZERO;
    for (nw, nh, spin) in basis.states() {
        if spin != flipped {
            continue;
        }
        let reference = initial.amplitudes[basis.index(nw, nh, initial_spin)];
        overlap += reference.conj() * final_state.amplitudes[basis.index(nw, nh, flipped)];
    }

    let (nw_i, nh_i) = initial.mean_photon_numbers();
    let (nw_f, nh_f) = final_state.mean_photon_numbers();
    SpinFlipStats {
        flip_probability,
        imprinted_phase: -overlap.arg(),
        mean_photon_shift_omega: nw_f - nw_i,
        mean_photon_shift_half: nh_f - nh_i,
    }
}
