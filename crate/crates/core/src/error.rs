use std::path::PathBuf;

use thiserror::Error;

/// Invalid workload or scheduler parameters.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read trace {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("trace {0} contains no inter-arrival times")]
    Empty(PathBuf),
}

/// Internal consistency faults raised by the engine or a policy.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("unknown task id {0}")]
    UnknownTask(usize),
    #[error("core {0} does not exist")]
    UnknownCore(usize),
    #[error("core {core} is busy running task {task}")]
    CoreBusy { core: usize, task: usize },
    #[error("core {0} is idle")]
    CoreIdle(usize),
    #[error("task {task} is not runnable (status {status})")]
    NotRunnable { task: usize, status: &'static str },
    #[error("accounting {delta_us}us exceeds remaining {remaining_us}us of task {task}")]
    Overrun {
        task: usize,
        delta_us: u64,
        remaining_us: u64,
    },
    #[error("work conservation violated at t={now_us}us: {idle} idle core(s), {waiting} runnable task(s) waiting")]
    NotWorkConserving {
        now_us: u64,
        idle: usize,
        waiting: usize,
    },
    #[error("requests are not sorted by submit time (request {0})")]
    UnsortedRequests(usize),
    #[error("simulation stalled at t={now_us}us with {pending} unfinished task(s)")]
    Stalled { now_us: u64, pending: usize },
    #[error("policy fault: {0}")]
    Policy(String),
}
