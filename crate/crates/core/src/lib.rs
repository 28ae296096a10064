//! Design and simulation models for type-0 quasi-phase-matched photon-pair
//! sources built around a linear beam-displacement interferometer.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; file formats, configuration and the command line
//! live in the `pairsource` crate.
//!
//! Unit conventions used throughout the public API:
//! wavelengths in nm, crystal lengths in mm, poling periods in µm,
//! wave-vector mismatch in rad/µm, temperatures in °C, rates in 1/s,
//! times in s, angles in degrees unless a name says `_rad`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod counting;
pub mod dispersion;
pub mod optim;
pub mod phasemap;
pub mod polarization;
pub mod spdc;

#[cfg(test)]
mod fixtures;

pub use counting::{CountingError, CountingScenario, EventStreams};
pub use dispersion::{
    ActsOn, ArmSign, Axis, DispersionError, ElementRole, MaterialModel, SellmeierForm,
    UniaxialElement,
};
pub use phasemap::{OpticalLayout, PhaseError, PhaseMap};
pub use polarization::{MeasurementSetup, PolarizationError, PolarizationState};
pub use spdc::{CrystalSpec, GridSpec, JointSpectrum, PumpSpectrum, SpdcError};

/// Any error produced by this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Spdc(#[from] SpdcError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error(transparent)]
    Polarization(#[from] PolarizationError),
    #[error(transparent)]
    Counting(#[from] CountingError),
}
