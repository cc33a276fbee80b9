// SPDX-License-Identifier: MIT OR Apache-2.0

//! Test support: random graph fixtures and independent brute-force oracles.
//!
//! Nothing here calls the routine it checks; every oracle is a direct,
//! unoptimized restatement of the definition.

pub mod control;
pub mod gradcheck;
pub mod graphs;
pub mod oracles;

pub use graphs::{random_dag, random_digraph, rng};
