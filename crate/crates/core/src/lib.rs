//! Simulation and analysis toolkit for sequential quantum random access codes
//! (QRACs) with tunable-strength measurements.
//!
//! A sender encodes two bits into one qubit; a first receiver measures it
//! weakly (strength `eta` in `[0, 1]`) and passes the disturbed state on to a
//! second receiver who measures projectively. Both try to decode one of the
//! two bits. This crate provides:
//!
//! - [`qmath`]: complex 2x2 matrices, qubit density matrices, Bloch vectors;
//! - [`protocol`]: state preparation, POVM/Kraus weak measurements, the
//!   decoding witnesses `W_AB`, `W_AC`, `W_ABC`, the witness trade-off and its
//!   inverse, strength self-test bounds, and the n-receiver chain;
//! - [`optics`]: a Jones-calculus model of the photonic implementation
//!   (wave plates and a beam-displacer interferometer) verified against the
//!   protocol predictions for the bundled angle table;
//! - [`expsim`]: Poissonian coincidence-count simulation, witness estimation
//!   from count tables, and parametric bootstrap error bars.
//!
//! Sign convention used throughout: bit 0 corresponds to measurement outcome
//! +1 and bit 1 to outcome -1.

pub mod expsim;
pub mod optics;
pub mod protocol;
pub mod qmath;
