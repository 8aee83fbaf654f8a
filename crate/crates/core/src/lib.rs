//! Exact-rational laboratory for parity-restricted and integer-valued betting
//! strategies: validation and algebra of (super)martingales, block
//! decompositions, the three-out-of-four test construction, integer-valued
//! diagonalization, dimension estimates and the stage construction with its
//! prefix-free description ledger.

pub mod bits;
pub mod cli;
pub mod decompose;
pub mod dim_builder;
pub mod dimension;
pub mod error;
pub mod gen;
pub mod int_casino;
pub mod online;
pub mod parity_casino;
pub mod program;
pub mod rational;
pub mod table;
pub mod verify;

pub use bits::{bs, interleave, BitString};
pub use error::{Error, Result};
pub use program::{BetProgram, Component, Evaluator, StageApprox};
pub use rational::{Capital, Q};
pub use table::{validate, Diagnosis, Kind, ParityTag, SidedTag, StrategyTable};
