//! Distributed coalition-formation solvers for heterogeneous-cost task
//! allocation with budget constraints (HCTAB).
//!
//! Agents with heterogeneous capabilities and per-task costs each pick at
//! most one task; agents sharing a task form a coalition whose reward is the
//! sum, over the task's required capabilities, of the best competency among
//! its members. The objective is the total reward across coalitions subject
//! to a global budget on allocation costs.
//!
//! The crate provides:
//!
//! - [`instance`]: the problem data model, a seeded scenario generator, and
//!   an instance file format;
//! - [`game`]: partitions, coalition values, the potential function,
//!   deviation gains, and Nash-stability certification;
//! - [`learning`]: the log-linear learner with cooperative-exchange and
//!   heterogeneous-cost strategies, plus its two ablations;
//! - [`baselines`]: cost-efficiency greedy, better-reply, and best-response
//!   comparison algorithms;
//! - [`oracle`]: an exhaustive optimal solver for small instances and a
//!   randomized checker for the exact-potential identity;
//! - [`harness`]: a multi-seed experiment driver with parameter sweeps and
//!   CSV output.

pub mod baselines;
pub mod error;
pub mod game;
pub mod harness;
pub mod instance;
pub mod learning;
pub mod oracle;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
