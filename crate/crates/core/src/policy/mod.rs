//! Scheduling policies and their configuration.

pub mod cfs;
pub mod fifo;
pub mod sfs;
pub mod srtf;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::sim::Policy;
use crate::Micros;

pub use cfs::{Cfs, CfsConfig, CfsModel};
pub use fifo::{Fifo, RoundRobin};
pub use sfs::{BoostConfig, IoDetection, OverloadScope, Sfs, SfsConfig, TimeSliceController};
pub use srtf::{Ideal, Srtf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    Fifo,
    Rr,
    Cfs,
    Srtf,
    Ideal,
    Sfs,
}

impl PolicyName {
    pub const ALL: [PolicyName; 6] = [
        PolicyName::Fifo,
        PolicyName::Rr,
        PolicyName::Cfs,
        PolicyName::Srtf,
        PolicyName::Ideal,
        PolicyName::Sfs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyName::Fifo => "fifo",
            PolicyName::Rr => "rr",
            PolicyName::Cfs => "cfs",
            PolicyName::Srtf => "srtf",
            PolicyName::Ideal => "ideal",
            PolicyName::Sfs => "sfs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

pub const DEFAULT_RR_QUANTUM_US: Micros = 100_000;

fn default_quantum() -> Micros {
    DEFAULT_RR_QUANTUM_US
}

/// One policy to run in a scenario. `label` distinguishes several
/// configurations of the same policy and names its output files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub name: PolicyName,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "default_quantum")]
    pub rr_quantum_us: Micros,
    /// Used by `cfs` and by the lower level of `sfs`.
    #[serde(default)]
    pub cfs: CfsConfig,
    #[serde(default)]
    pub sfs: SfsConfig,
}

impl PolicySpec {
    pub fn new(name: PolicyName) -> Self {
        Self {
            name,
            label: None,
            rr_quantum_us: DEFAULT_RR_QUANTUM_US,
            cfs: CfsConfig::default(),
            sfs: SfsConfig::default(),
        }
    }

    pub fn sfs(cfg: SfsConfig) -> Self {
        Self {
            sfs: cfg,
            ..Self::new(PolicyName::Sfs)
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.name.as_str().to_string())
    }

    pub fn validate(&self, path: &str) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        match self.name {
            PolicyName::Rr if self.rr_quantum_us == 0 => errs.push(ConfigError::new(
                format!("{path}.rr_quantum_us"),
                "must be positive",
            )),
            PolicyName::Cfs => errs.extend(self.cfs.validate(&format!("{path}.cfs"))),
            PolicyName::Sfs => {
                errs.extend(self.cfs.validate(&format!("{path}.cfs")));
                errs.extend(self.sfs.validate(&format!("{path}.sfs")));
            }
            _ => {}
        }
        if let Some(l) = &self.label {
            if l.is_empty() || !l.chars().all(|c| c.is_ascii_alphanumeric() || "-_".contains(c)) {
                errs.push(ConfigError::new(
                    format!("{path}.label"),
                    "labels may only contain letters, digits, '-' and '_'",
                ));
            }
        }
        errs
    }

    pub fn build(&self, cores: usize) -> Box<dyn Policy + Send> {
        match self.name {
            PolicyName::Fifo => Box::new(Fifo::new()),
            PolicyName::Rr => Box::new(RoundRobin::new(self.rr_quantum_us)),
            PolicyName::Cfs => Box::new(Cfs::new(self.cfs, cores)),
            PolicyName::Srtf => Box::new(Srtf::new()),
            PolicyName::Ideal => Box::new(Ideal::new()),
            PolicyName::Sfs => Box::new(Sfs::new(self.sfs.clone(), self.cfs, cores)),
        }
    }
}
