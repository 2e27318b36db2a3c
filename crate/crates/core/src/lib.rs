//! Reduced dynamics of a two-level atom with a doubly degenerate ground state
//! (a three-level Λ system) coupled to a boson reservoir in the stochastic
//! limit.
//!
//! The crate is organised bottom-up:
//!
//! * [`bath`] evaluates the generalized susceptivities of the reservoir
//!   (resonant delta part plus principal-value part) from formfactor,
//!   occupation and dispersion data.
//! * [`generator`] transcribes the master equation into a real 9×9
//!   superoperator, checks its invariant-subspace structure and integrates
//!   the dynamics.
//! * [`stationary`] characterises the stationary set: the conserved
//!   quantity, the one-parameter family of trapped states, the unique and
//!   oscillatory regimes.
//! * [`config`] and [`cli`] wire everything into the `cpt` command-line tool,
//!   and [`acceptance`] holds the end-to-end verification suite run by
//!   `cpt selftest`.

pub mod acceptance;
pub mod bath;
pub mod cli;
pub mod config;
pub mod error;
pub mod generator;
pub mod state;
pub mod stationary;

pub use error::{Error, Result};
