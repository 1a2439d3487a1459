//! Quantized linear systems on integer lattices.
//!
//! A quantizer `R: R^n -> Z^n` is given by a cell whose integer translates
//! tile space; a matrix `L` and a quantizer define the lattice map
//! `T = R o L`. The crate provides cells and quantizers ([`geometry`]),
//! lattice fragments and frequency estimates ([`lattice`]), forward and
//! set-valued backward dynamics ([`dynamics`]), quasiperiodic sets
//! ([`quasiperiodic`]) and statistical checks of error and preimage laws
//! ([`analysis`]). [`cli`] drives named experiments and writes CSV, JSON and
//! PGM artifacts.

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod formats;
pub mod geometry;
pub mod lattice;
pub mod output;
pub mod quasiperiodic;
pub mod tolerances;
