//! TOML run configuration: schema, defaults and resolution into beamline
//! and quantized-field parameter sets.
//!
//! Unknown keys are rejected. Every angle is a string with an explicit unit
//! suffix (`"45 deg"` or `"0.6 rad"`); the internal canonical unit is
//! radians. Plain numeric fields carry their unit in the key name.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use nisim::beamline::{BeamlineSpec, ScanParameter};
use nisim::elements::FlipperConfig;
use nisim::{BeamContext, PathLabel, PhysicalConstants, SpinLabel};

pub const SCHEMA_VERSION: u32 = 1;

/// Angle stored in radians, read and written with an explicit unit suffix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Angle(pub f64);

impl Angle {
    pub fn radians(self) -> f64 {
        self.0
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        let mut parts = raw.split_whitespace();
        let (Some(value), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(D::Error::custom(format!(
                "angle {raw:?} must be \"<number> deg\" or \"<number> rad\""
            )));
        };
        let value: f64 = value
            .parse()
            .map_err(|e| D::Error::custom(format!("bad angle value {value:?}: {e}")))?;
        match unit {
            "deg" => Ok(Angle(value * PI / 180.0)),
            "rad" => Ok(Angle(value)),
            other => Err(D::Error::custom(format!(
                "unknown angle unit {other:?} (use deg or rad)"
            ))),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("{} rad", self.0))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad", self.0)
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SpinSetting {
    Up,
    Down,
}

impl From<SpinSetting> for SpinLabel {
    fn from(s: SpinSetting) -> SpinLabel {
        match s {
            SpinSetting::Up => SpinLabel::Up,
            SpinSetting::Down => SpinLabel::Down,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ScanParameterSetting {
    Chi,
    PhiOmega,
    PhiHalf,
}

impl From<ScanParameterSetting> for ScanParameter {
    fn from(s: ScanParameterSetting) -> ScanParameter {
        match s {
            ScanParameterSetting::Chi => ScanParameter::Chi,
            ScanParameterSetting::PhiOmega => ScanParameter::PhiOmega,
            ScanParameterSetting::PhiHalf => ScanParameter::PhiHalf,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSection {
    pub wavelength_m: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        BeamSection {
            wavelength_m: 1.91e-10,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlipperSection {
    pub enabled: bool,
    /// Drive frequency in Hz; flipper2 defaults to half of flipper1.
    pub frequency_hz: Option<f64>,
    pub phase: Angle,
    pub coil_length_m: f64,
    /// Static field override; omitted means exact resonance.
    pub b0_t: Option<f64>,
    /// Oscillating amplitude override; omitted means exact π flip.
    pub b1_t: Option<f64>,
}

impl Default for FlipperSection {
    fn default() -> Self {
        FlipperSection {
            enabled: true,
            frequency_hz: None,
            phase: Angle(0.0),
            coil_length_m: 0.02,
            b0_t: None,
            b1_t: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterferometerSection {
    pub initial_spin: SpinSetting,
    pub chi: Angle,
    pub accelerator_rotation: Angle,
    pub zero_field_phase: Angle,
    pub visibility: f64,
    pub turner_on: bool,
    pub analyzer_keep: SpinSetting,
}

impl Default for InterferometerSection {
    fn default() -> Self {
        InterferometerSection {
            initial_spin: SpinSetting::Up,
            chi: Angle(0.0),
            accelerator_rotation: Angle(0.0),
            zero_field_phase: Angle(0.0),
            visibility: 1.0,
            turner_on: true,
            analyzer_keep: SpinSetting::Up,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub parameter: ScanParameterSetting,
    pub start: Angle,
    pub stop: Angle,
    pub step: Angle,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            parameter: ScanParameterSetting::Chi,
            start: Angle(0.0),
            stop: Angle(2.0 * TAU),
            step: Angle(TAU / 36.0), // 10°
        }
    }
}

impl ScanSection {
    /// Half-open grid `[start, stop)` in steps of `step`.
    pub fn values(&self) -> Result<Vec<f64>, String> {
        let (start, stop, step) = (self.start.0, self.stop.0, self.step.0);
        if !(step.is_finite() && step > 0.0) {
            return Err(format!("scan step must be positive, got {step}"));
        }
        if stop <= start {
            return Err(format!("scan stop {stop} must exceed start {start}"));
        }
        let count = ((stop - start) / step - 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(format!("scan grid of {count} points exceeds the 1e6 limit"));
        }
        Ok((0..count).map(|i| start + step * i as f64).collect())
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlopesSection {
    pub grid_start: Angle,
    pub grid_stop: Angle,
    pub grid_step: Angle,
    /// Points per χ-scan used for each fringe fit.
    pub chi_points: usize,
}

impl Default for SlopesSection {
    fn default() -> Self {
        SlopesSection {
            grid_start: Angle(0.0),
            grid_stop: Angle(TAU),
            grid_step: Angle(TAU / 8.0), // 45°
            chi_points: 16,
        }
    }
}

impl SlopesSection {
    pub fn grid(&self) -> Result<Vec<f64>, String> {
        ScanSection {
            parameter: ScanParameterSetting::Chi,
            start: self.grid_start,
            stop: self.grid_stop,
            step: self.grid_step,
        }
        .values()
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeResolvedSection {
    /// Samples over one rf period.
    pub samples: usize,
}

impl Default for TimeResolvedSection {
    fn default() -> Self {
        TimeResolvedSection { samples: 64 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct JcSection {
    /// Mean photon number ⟨n⟩ = |α|² of the driven ω mode.
    pub mean_photons: f64,
    /// Oscillating amplitude coupled to the driven mode, T.
    pub b1_t: f64,
    /// Number of field phases sampled in the transfer check.
    pub phase_steps: usize,
    /// Largest sampled field phase.
    pub max_phase: Angle,
}

impl Default for JcSection {
    fn default() -> Self {
        JcSection {
            mean_photons: 100.0,
            b1_t: 1e-3,
            phase_steps: 5,
            max_phase: Angle(PI / 2.0),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub enabled: bool,
    pub seed: u64,
    pub counts_per_point: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            enabled: false,
            seed: 0,
            counts_per_point: 4000.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsSection {
    pub mu_magnitude_j_per_t: f64,
    pub hbar_j_s: f64,
    pub neutron_mass_kg: f64,
    pub planck_j_s: f64,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        let c = PhysicalConstants::default();
        ConstantsSection {
            mu_magnitude_j_per_t: c.mu_magnitude,
            hbar_j_s: c.hbar,
            neutron_mass_kg: c.neutron_mass,
            planck_j_s: c.planck,
        }
    }
}

impl ConstantsSection {
    pub fn to_constants(&self) -> PhysicalConstants {
        PhysicalConstants {
            mu_magnitude: self.mu_magnitude_j_per_t,
            hbar: self.hbar_j_s,
            neutron_mass: self.neutron_mass_kg,
            planck: self.planck_j_s,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
#[derive(Default)]
pub struct OutputSection {
    pub path: Option<String>,
}

/// Complete run configuration; every section has documented defaults.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub beam: BeamSection,
    #[serde(default)]
    pub flipper1: FlipperSection,
    #[serde(default)]
    pub flipper2: FlipperSection,
    #[serde(default)]
    pub interferometer: InterferometerSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub slopes: SlopesSection,
    #[serde(default)]
    pub time_resolved: TimeResolvedSection,
    #[serde(default)]
    pub jc: JcSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            beam: BeamSection::default(),
            flipper1: FlipperSection::default(),
            flipper2: FlipperSection::default(),
            interferometer: InterferometerSection::default(),
            scan: ScanSection::default(),
            slopes: SlopesSection::default(),
            time_resolved: TimeResolvedSection::default(),
            jc: JcSection::default(),
            noise: NoiseSection::default(),
            constants: ConstantsSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        let config: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {} (this build reads version {SCHEMA_VERSION})",
                config.schema_version
            ));
        }
        Ok(config)
    }

    pub fn constants(&self) -> PhysicalConstants {
        self.constants.to_constants()
    }

    pub fn beam_context(&self) -> BeamContext {
        BeamContext::from_wavelength(self.beam.wavelength_m, &self.constants())
    }

    fn resolve_flipper(
        &self,
        section: &FlipperSection,
        default_frequency_hz: f64,
        path: Option<PathLabel>,
    ) -> FlipperConfig {
        let consts = self.constants();
        let ctx = self.beam_context();
        let omega = TAU * section.frequency_hz.unwrap_or(default_frequency_hz);
        let tau = section.coil_length_m / ctx.velocity;
        FlipperConfig {
            omega,
            phi: section.phase.radians(),
            b0: section
                .b0_t
                .unwrap_or(consts.hbar * omega / (2.0 * consts.mu_magnitude)),
            b1: section
                .b1_t
                .unwrap_or(PI * consts.hbar / (2.0 * tau * consts.mu_magnitude)),
            coil_length: section.coil_length_m,
            applies_to_path: path,
        }
    }

    /// Resolve the configured beamline. The in-loop flipper drives path II;
    /// the post-loop flipper defaults to half its frequency.
    pub fn beamline_spec(&self) -> BeamlineSpec {
        let f1_hz = self.flipper1.frequency_hz.unwrap_or(58e3);
        let flipper1 = self.resolve_flipper(&self.flipper1, f1_hz, Some(PathLabel::II));
        let flipper2 = self.resolve_flipper(&self.flipper2, f1_hz / 2.0, None);
        let inter = &self.interferometer;
        BeamlineSpec {
            initial_spin: inter.initial_spin.into(),
            flipper1,
            flipper1_on: self.flipper1.enabled,
            flipper2,
            flipper2_on: self.flipper2.enabled,
            chi: inter.chi.radians(),
            accelerator_rotation: inter.accelerator_rotation.radians(),
            zero_field_phase: inter.zero_field_phase.radians(),
            visibility_factor: inter.visibility,
            analyzer_keep: inter.analyzer_keep.into(),
            turner_on: inter.turner_on,
            beam: self.beam_context(),
            consts: self.constants(),
        }
    }

    /// The resolved configuration as a '#'-prefixed TOML block for
    /// self-describing output files.
    pub fn header_block(&self) -> String {
        let serialized = toml::to_string(self).expect("config serializes");
        let mut out = String::new();
        for line in serialized.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}
