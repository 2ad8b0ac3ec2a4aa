//! Exact CR tractor calculus on the Heisenberg group.

#![allow(clippy::needless_range_loop)]

pub mod ambient;
pub mod cli;
pub mod heisenberg;
pub mod invariant_ops;
pub mod sample;
pub mod scalars;
pub mod structures;
pub mod tractor;
