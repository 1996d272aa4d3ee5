//! Simulation of a polarized-neutron interferometer with two
//! radio-frequency spin flippers.
//!
//! The first flipper sits in one interferometer path and entangles the
//! neutron's path, total-energy and spin degrees of freedom; the second,
//! driven at half the frequency behind the interferometer, compensates the
//! energy splitting and renders the interference fringes stationary. The
//! crate provides
//!
//! - [`qstate`]: exact amplitude algebra over the path ⊗ energy ⊗ spin basis,
//! - [`elements`]: the individual beamline elements as operators,
//! - [`beamline`]: the assembled pipeline producing detector intensities,
//!   polarizations and parameter scans,
//! - [`analysis`]: fringe fitting, phase-slope extraction and the
//!   geometric-phase relations,
//! - [`jcfield`]: an independent quantized-field solver on a truncated Fock
//!   space that cross-validates the semiclassical flipper model.

pub mod analysis;
pub mod beamline;
pub mod elements;
pub mod jcfield;
pub mod qstate;

pub use elements::{BeamContext, FlipperConfig, PhysicalConstants};
pub use qstate::{KetState, PathLabel, PolarizationVector, SpinLabel};
