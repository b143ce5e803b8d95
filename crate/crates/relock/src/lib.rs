//! File formats, external solvers and experiment campaigns on top of
//! [`relock_core`].

pub mod bench;
pub mod clock;
pub mod dimacs;
pub mod harness;
pub mod records;
pub mod trace;

pub use relock_core as core;
