//! Random walks in random environment (RWRE) on Galton-Watson trees.
//!
//! The crate has three layers:
//!
//! * an analytic layer ([`law`]) with the environment-mark distributions, their
//!   log-moment transform, Legendre transform, and the escape exponents built
//!   from them;
//! * simulators for the quenched walk on a lazily grown marked tree
//!   ([`gw_tree`], [`tree_walk`]), for the one-dimensional walk driven by the
//!   potential ([`line_walk`]), and for the linearly edge reinforced walk with
//!   its Beta-environment representation ([`lerrw`]);
//! * exact small-instance oracles ([`solve`]) and statistical post-processing
//!   ([`stats`]) used to cross-validate the two against each other.
//!
//! Everything is deterministic given a seed: replicas derive independent
//! counter-based streams, so results do not depend on query order or worker
//! count.

#![forbid(unsafe_code)]

pub mod error;
pub mod exec;
pub mod extreal;
pub mod gw_tree;
pub mod law;
pub mod lerrw;
pub mod line_walk;
pub mod numerics;
pub mod seeding;
pub mod solve;
pub mod stats;
pub mod tree_walk;

pub use error::{Error, Result};
pub use extreal::ExtReal;
