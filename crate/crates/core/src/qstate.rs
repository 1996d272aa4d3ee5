//! Complex-amplitude algebra for the neutron's path ⊗ energy ⊗ spin state.
//!
//! The state is an expansion over basis kets labelled by the interferometer
//! path, a total-energy rung and the spin projection along ẑ. Energy is
//! bookkept in integer half-quanta of the reference frequency: a branch with
//! label `k` sits at total energy `E₀ − k·ħω/2`, so both the ω and the ω/2
//! flipper move branches by integer steps. All values are immutable and all
//! operations are pure functions.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

/// Branches with squared amplitude below `norm² ≤ 1e-30` count as zero.
pub const ZERO_NORM_EPS: f64 = 1e-30;

/// Amplitudes smaller than this in magnitude are pruned after merges.
pub const PRUNE_EPS: f64 = 1e-15;

/// Spin projection along the ẑ quantization axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpinLabel {
    Up,
    Down,
}

impl SpinLabel {
    pub fn flipped(self) -> SpinLabel {
        match self {
            SpinLabel::Up => SpinLabel::Down,
            SpinLabel::Down => SpinLabel::Up,
        }
    }
}

/// Interferometer path: right (`I`) or left (`II`) sub-beam.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathLabel {
    I,
    II,
}

/// Total-energy rung in half-quanta: label `k` means `E = E₀ − k·ħω/2`.
///
/// Distinct labels denote mutually orthogonal kets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnergyLabel(pub u32);

impl EnergyLabel {
    pub fn half_quanta(self) -> u32 {
        self.0
    }
}

/// Basis ket identifier for one branch of the expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BranchKey {
    pub path: PathLabel,
    pub energy: EnergyLabel,
    pub spin: SpinLabel,
}

impl BranchKey {
    pub fn new(path: PathLabel, energy: u32, spin: SpinLabel) -> Self {
        BranchKey {
            path,
            energy: EnergyLabel(energy),
            spin,
        }
    }
}

/// One basis ket together with its complex amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branch {
    pub key: BranchKey,
    pub amplitude: Complex64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StateError {
    /// The state carries no weight (norm² ≤ 1e-30).
    #[error("state has zero norm")]
    ZeroNorm,
    /// Two states with different reference frequencies cannot be combined.
    #[error("reference frequency mismatch")]
    FrequencyMismatch,
}

/// Transverse-plus-longitudinal polarization of the spin sub-system.
///
/// Satisfies `px² + py² + pz² ≤ 1` up to rounding for any valid state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationVector {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl PolarizationVector {
    pub fn norm(&self) -> f64 {
        (self.px * self.px + self.py * self.py + self.pz * self.pz).sqrt()
    }
}

/// Neutron state: sparse superposition over (path, energy, spin) kets.
///
/// `omega_ref` is the angular frequency whose half-quantum ħω/2 defines the
/// energy ladder spacing. Branch keys are unique and kept sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct KetState {
    branches: Vec<Branch>,
    omega_ref: f64,
}

impl KetState {
    /// Build a state from `(key, amplitude)` pairs; duplicate keys are summed.
    pub fn from_branches<I>(omega_ref: f64, branches: I) -> Self
    where
        I: IntoIterator<Item = (BranchKey, Complex64)>,
    {
        assert!(
            omega_ref.is_finite() && omega_ref > 0.0,
            "omega_ref must be positive and finite"
        );
        let mut map: BTreeMap<BranchKey, Complex64> = BTreeMap::new();
        for (key, amp) in branches {
            assert!(
                amp.re.is_finite() && amp.im.is_finite(),
                "amplitude must be finite"
            );
            *map.entry(key).or_insert(Complex64::ZERO) += amp;
        }
        KetState {
            branches: map
                .into_iter()
                .filter(|(_, a)| a.norm() >= PRUNE_EPS)
                .map(|(key, amplitude)| Branch { key, amplitude })
                .collect(),
            omega_ref,
        }
    }

    /// Single-branch state with unit amplitude.
    pub fn basis(omega_ref: f64, path: PathLabel, energy: u32, spin: SpinLabel) -> Self {
        KetState::from_branches(
            omega_ref,
            [(BranchKey::new(path, energy, spin), Complex64::ONE)],
        )
    }

    pub fn omega_ref(&self) -> f64 {
        self.omega_ref
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Amplitude of the given basis ket, zero if absent.
    pub fn amplitude(&self, key: BranchKey) -> Complex64 {
        self.branches
            .binary_search_by(|b| b.key.cmp(&key))
            .map(|i| self.branches[i].amplitude)
            .unwrap_or(Complex64::ZERO)
    }

    /// Total intensity Σ|amplitude|² (detector count rate, arbitrary units).
    pub fn intensity(&self) -> f64 {
        self.branches.iter().map(|b| b.amplitude.norm_sqr()).sum()
    }

    /// Rescale to unit norm. The scaling factor is a positive real, so all
    /// relative phases are untouched.
    pub fn normalize(&self) -> Result<KetState, StateError> {
        let n2 = self.intensity();
        if n2 <= ZERO_NORM_EPS {
            return Err(StateError::ZeroNorm);
        }
        let scale = n2.sqrt().recip();
        Ok(self.map_amplitudes(|a| a * scale))
    }

    /// Branch-wise linear combination `ca·a + cb·b`.
    ///
    /// Colliding kets are merged by complex addition and numerically dead
    /// branches are pruned, so full cancellation yields an empty state.
    pub fn superpose(
        a: &KetState,
        b: &KetState,
        ca: Complex64,
        cb: Complex64,
    ) -> Result<KetState, StateError> {
        if a.omega_ref != b.omega_ref {
            return Err(StateError::FrequencyMismatch);
        }
        let branches = a
            .branches
            .iter()
            .map(|br| (br.key, ca * br.amplitude))
            .chain(b.branches.iter().map(|br| (br.key, cb * br.amplitude)));
        Ok(KetState::from_branches(a.omega_ref, branches))
    }

    /// Free evolution to detection time `t`: branch `k` gains `e^{+ik(ω/2)t}`.
    /// Energy labels are retained; see [`KetState::fold_time_phase`] for the
    /// label-collapsing variant.
    pub fn evolve_labels(&self, t: f64) -> KetState {
        assert!(t.is_finite(), "time must be finite");
        let half_quantum = 0.5 * self.omega_ref * t;
        self.phase_by_energy(half_quantum)
    }

    /// Multiply branch `k` by `e^{+ik·phase}` where `phase` is the accrued
    /// angle per energy half-quantum. Used for zero-field precession phases.
    pub fn phase_by_energy(&self, phase: f64) -> KetState {
        assert!(phase.is_finite(), "phase must be finite");
        self.map_branches(|b| {
            let arg = phase * f64::from(b.key.energy.half_quanta());
            Branch {
                key: b.key,
                amplitude: b.amplitude * Complex64::from_polar(1.0, arg),
            }
        })
    }

    /// Model a detection at time `t`: fold the per-branch time phases
    /// `e^{+ik(ω/2)t}` into the amplitudes and collapse every energy label to
    /// `k = 0`. Branches that collide after relabelling are summed.
    pub fn fold_time_phase(&self, t: f64) -> KetState {
        let evolved = self.evolve_labels(t);
        KetState::from_branches(
            self.omega_ref,
            evolved
                .branches
                .iter()
                .map(|b| (BranchKey::new(b.key.path, 0, b.key.spin), b.amplitude)),
        )
    }

    /// Polarization vector of the spin subsystem.
    ///
    /// Path and energy labels are traced out incoherently (distinct labels
    /// are orthogonal); only same-(path, energy) spin pairs contribute to the
    /// transverse components. The transverse phase convention is fixed so a
    /// spinor `(e^{iδ}|↑⟩ + |↓⟩)/√2` maps to `(cos δ, sin δ, 0)`.
    /// Time-resolved quantities must fold their time phases first.
    pub fn polarization(&self) -> Result<PolarizationVector, StateError> {
        let n2 = self.intensity();
        if n2 <= ZERO_NORM_EPS {
            return Err(StateError::ZeroNorm);
        }
        let mut transverse = Complex64::ZERO;
        let mut pz = 0.0;
        for b in &self.branches {
            match b.key.spin {
                SpinLabel::Up => {
                    pz += b.amplitude.norm_sqr();
                    let down = self.amplitude(BranchKey {
                        spin: SpinLabel::Down,
                        ..b.key
                    });
                    // up amplitude relative to the down amplitude of the same block
                    transverse += down.conj() * b.amplitude;
                }
                SpinLabel::Down => pz -= b.amplitude.norm_sqr(),
            }
        }
        Ok(PolarizationVector {
            px: 2.0 * transverse.re / n2,
            py: 2.0 * transverse.im / n2,
            pz: pz / n2,
        })
    }

    pub(crate) fn map_amplitudes<F>(&self, f: F) -> KetState
    where
        F: Fn(Complex64) -> Complex64,
    {
        self.map_branches(|b| Branch {
            key: b.key,
            amplitude: f(b.amplitude),
        })
    }

    pub(crate) fn map_branches<F>(&self, f: F) -> KetState
    where
        F: Fn(&Branch) -> Branch,
    {
        KetState::from_branches(
            self.omega_ref,
            self.branches.iter().map(&f).map(|b| (b.key, b.amplitude)),
        )
    }
}
