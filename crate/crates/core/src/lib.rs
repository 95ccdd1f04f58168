//! Deterministic discrete-event simulation of multicore CPU scheduling for
//! serverless (FaaS) workloads.
//!
//! The crate compares a two-level FILTER + CFS scheduler ([`policy::Sfs`])
//! against FIFO, round robin, a CFS model, the SRTF oracle and an
//! infinite-capacity IDEAL baseline on synthetic Azure-like workloads.
//!
//! ```
//! use sfs_sim::{policy::PolicySpec, policy::PolicyName, sim, workload};
//!
//! let spec = workload::WorkloadSpec::azure_poisson(200, 4, 0.8, 1);
//! let reqs = workload::generate(&workload::scale_to_load(&spec).unwrap()).unwrap();
//! let mut sfs = PolicySpec::new(PolicyName::Sfs).build(4);
//! let res = sim::run(&reqs, sfs.as_mut(), 4, &Default::default()).unwrap();
//! assert_eq!(res.records.len(), 200);
//! ```

pub mod error;
pub mod metrics;
pub mod policy;
pub mod scenario;
pub mod sim;
pub mod workload;

/// Simulated time and durations, in microseconds.
pub type Micros = u64;

pub use error::{ConfigError, SimError};
pub use metrics::{RequestRecord, SummaryReport};
pub use sim::{run, EngineConfig, Policy, SimResult};
pub use workload::{FunctionRequest, WorkloadSpec};
