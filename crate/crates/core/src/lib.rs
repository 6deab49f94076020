//! Simulation and verification toolkit for the minimum-disturbing
//! discrimination of two non-orthogonal qubit states.
//!
//! * [`qmath`]: fixed-size complex linear algebra (dimension 2 and 4).
//! * [`analytic`]: closed-form success probability / disturbance tradeoff.
//! * [`instrument`]: executable instruments, POVMs and Choi matrices.
//! * [`oracle`]: derivative-free numerical minimization of the disturbance.
//! * [`schemes`]: Kerr dual-rail and parity-check optical schemes.
//! * [`montecarlo`]: seeded shot-by-shot simulation.
//! * [`cli`]: the `qdisturb` command line.
//!
//! With the default `parallel` feature, restarts, shot chunks and sweeps run
//! on rayon; without it they run sequentially and produce identical results.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod instrument;
pub mod montecarlo;
pub mod oracle;
mod par;
pub mod qmath;
pub mod schemes;

pub use error::{Error, Result};
