//! Simulation workbench for reversible-computation ideas in wireless systems.
//!
//! Two experiment families live here:
//!
//! * Distributed transmit-antenna selection for massive MIMO, driven by a
//!   reversing Petri net whose tokens mark the active antennas
//!   ([`rpn`], [`selection`]), evaluated against centralised greedy, random
//!   and exhaustive baselines on a geometric OFDM channel ([`channel`],
//!   [`capacity`]).
//! * Time-reversal mirrors in an FHP lattice gas ([`lattice`]) together with
//!   a bit-erasure ledger for the digital reversal pipeline ([`erasure`]).

pub mod capacity;
pub mod channel;
pub mod erasure;
pub mod lattice;
pub mod linalg;
pub mod rpn;
pub mod seed;
pub mod selection;

pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
