//! Privacy-aware Berrut approximated coded computing.
//!
//! The crate provides
//!
//! * [`grid`]: Chebyshev data, mask and evaluation point families,
//! * [`berrut`]: Berrut rational encoding (plain, masked, packed) and decoding,
//! * [`privacy`]: MIMO-capacity bounds on what colluding nodes learn,
//! * [`matrix`]: approximate coded matrix products (direct and blocked),
//! * [`sim`]: the multi-input secret sharing protocol and its baselines,
//! * [`experiment`]: the configuration-driven sweeps behind the `pbacc` CLI.
#![deny(unsafe_code)]

pub mod berrut;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod matrix;
pub mod privacy;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
