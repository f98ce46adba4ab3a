//! Deterministic simulator and analytic resource estimator for trapped-ion
//! quantum von Neumann (QCCD) architectures.
//!
//! The crate models a segmented ion trap as a graph of zones, tracks and
//! junctions ([`layout`]), plans ion-string transport under a multiplexed DAC
//! budget ([`shuttle`]), models the processing and detection pipelines
//! ([`pipeline`]), runs a deterministic discrete-event simulation of timed
//! circuits ([`sim`]), and provides closed-form architectural models
//! ([`models`]), supporting physics calculators ([`physics`]) and an
//! ion-species selection database ([`species`]).
//!
//! The "Quantum 4004" machine is available as a built-in preset via
//! [`layout::quantum4004_preset`].

pub mod error;
pub mod layout;
pub mod models;
pub mod physics;
pub mod pipeline;
pub mod shuttle;
pub mod sim;
pub mod species;

pub use error::QvnError;
pub use layout::{quantum4004_preset, TrapLayout};
pub use sim::{MachineParams, SimMetrics};
