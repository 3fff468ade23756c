//! Backlog-adaptive erasure-coded access to object storage.
//!
//! A front-end proxy forks each file request into `n` coded tasks and
//! completes it when any `k` finish. Small chunks and extra parallel tasks
//! cut service delay when the system is idle but burn thread time, so under
//! load they backfire. This crate models that trade-off and implements the
//! full loop around it:
//!
//! - [`delay_model`]: shifted-exponential task delays, affine in chunk size
//! - [`trace`]: delay-trace ingestion, coefficient fitting, bootstrap replay
//! - [`analysis`]: closed-form delay/usage/queue formulas for static codes
//! - [`solver`]: the optimal (n, k, r) as functions of the queue length, and
//!   the threshold tables derived from them
//! - [`strategies`]: static, greedy, and backlog-adaptive code selection
//! - [`simulator`]: the discrete-event queueing simulation
//! - [`codec`]: systematic MDS codes over GF(2^8) with strip batching
//! - [`storage`]: range-addressable object stores (memory and directory)
//! - [`scenario`] / [`experiments`] / [`report`]: config-driven experiment
//!   runners and their output formats

pub mod analysis;
pub mod codec;
pub mod delay_model;
pub mod error;
pub mod experiments;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod simulator;
pub mod solver;
pub mod storage;
pub mod strategies;
pub mod trace;

pub use analysis::{ClassSpec, CodeChoice, LoadPoint, OpType};
pub use delay_model::{ChunkSize, DelayParams};
pub use error::{Error, Result};
pub use rng::RandomStream;
pub use scenario::ScenarioConfig;
pub use simulator::{run_simulation, SimConfig, SimReport};
pub use solver::ThresholdTable;
