//! Core library for a tunable transmon-based microwave single-photon source:
//! device model, three-level Lindblad engine, synthetic heterodyne detection
//! chain, streaming two-channel correlation estimators and rate/efficiency
//! fitters.
//!
//! Unit conventions are centralized in [`units`]: decoherence rates are
//! angular (rad/us) at module boundaries, the time-domain engine works in
//! ns and rad/ns, and all user-facing I/O is cyclic MHz/GHz.

pub mod chain;
pub mod config;
pub mod correlator;
pub mod csvio;
pub mod device;
pub mod fit;
pub mod lindblad;
pub mod pulse;
pub mod units;

pub use device::{BudgetInput, BudgetReport, FluxNoiseModel, QubitParams, Rates};
pub use pulse::{Pulse, PulseTrain};
