//! Scenario configuration and the runner behind the `sfs-sim` binary.
//!
//! A scenario is a JSON file naming a workload, the policies to compare and
//! where to write results. Every `(policy, repetition)` pair gets its own
//! engine; repetition `i` uses seed `workload.seed + i`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ConfigError, SimError};
use crate::metrics::{self, ReportError, RequestRecord};
use crate::policy::{PolicyName, PolicySpec};
use crate::sim::{self, EngineConfig, SimResult};
use crate::workload::{self, DurationBucket, IatModel, IoProfile, WorkloadSpec};
use crate::Micros;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IatSource {
    Poisson {
        mean_us: f64,
    },
    Uniform {
        lo_us: f64,
        hi_us: f64,
    },
    Trace {
        iats_us: Vec<Micros>,
    },
    /// Plain-text trace, resolved relative to the config file.
    TraceFile {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    #[serde(default = "workload::azure_buckets")]
    pub buckets: Vec<DurationBucket>,
    #[serde(default = "default_cap")]
    pub duration_cap_us: Micros,
    pub iat: IatSource,
    #[serde(default)]
    pub io: IoProfile,
    pub n_requests: usize,
    #[serde(default)]
    pub target_load: Option<f64>,
    pub cores: usize,
    pub seed: u64,
}

fn default_cap() -> Micros {
    workload::DEFAULT_DURATION_CAP_US
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    RequestsCsv,
    SummaryJson,
    SeriesCsv,
    TimelineCsv,
    ComparisonJson,
}

fn default_formats() -> Vec<Format> {
    vec![
        Format::RequestsCsv,
        Format::SummaryJson,
        Format::SeriesCsv,
        Format::ComparisonJson,
    ]
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub workload: WorkloadConfig,
    pub policies: Vec<PolicySpec>,
    /// Label of the policy switch ratios are computed against.
    #[serde(default)]
    pub baseline: Option<String>,
    pub output_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default = "one")]
    pub repeat_count: usize,
    #[serde(default)]
    pub engine: EngineConfig,
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub cores: Option<usize>,
    pub load: Option<f64>,
    pub policies: Option<Vec<String>>,
    pub timeline: bool,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid configuration:\n{}", format_diagnostics(.0))]
    Config(Vec<ConfigError>),
    #[error("simulation of {label} (repetition {rep}) failed: {source}")]
    Sim {
        label: String,
        rep: usize,
        #[source]
        source: SimError,
    },
    #[error("report for {label}: {source}")]
    Report {
        label: String,
        #[source]
        source: ReportError,
    },
    #[error("output_dir: cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    /// 1 for configuration problems, 2 for runtime faults.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) | ScenarioError::Output { .. } => 1,
            ScenarioError::Sim { .. } | ScenarioError::Report { .. } => 2,
        }
    }
}

fn format_diagnostics(d: &[ConfigError]) -> String {
    d.iter()
        .map(|e| format!("  {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses a config document; the error carries line and column.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| {
        ConfigError::new(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|e| {
        ScenarioError::Config(vec![ConfigError::new(
            path.display().to_string(),
            e.to_string(),
        )])
    })?;
    let mut cfg = parse_config(&text).map_err(|e| ScenarioError::Config(vec![e]))?;
    if let IatSource::TraceFile { path: p } = &mut cfg.workload.iat {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

/// Reads and checks a config file, reporting every problem at once.
pub fn validate_file(path: &Path) -> Vec<ConfigError> {
    match load_config(path) {
        Ok(cfg) => validate(&cfg),
        Err(ScenarioError::Config(d)) => d,
        Err(e) => vec![ConfigError::new("config", e.to_string())],
    }
}

pub fn validate(cfg: &ScenarioConfig) -> Vec<ConfigError> {
    let mut errs = Vec::new();
    match resolve_workload(&cfg.workload) {
        Ok(spec) => errs.extend(spec.validate()),
        Err(e) => errs.push(e),
    }
    for e in &mut errs {
        e.path = format!("workload.{}", e.path);
    }
    if cfg.policies.is_empty() {
        errs.push(ConfigError::new("policies", "at least one policy is required"));
    }
    let mut labels = BTreeSet::new();
    for (i, p) in cfg.policies.iter().enumerate() {
        let path = format!("policies[{i}]");
        errs.extend(p.validate(&path));
        if !labels.insert(p.label()) {
            errs.push(ConfigError::new(
                format!("{path}.label"),
                format!("duplicate label {:?}", p.label()),
            ));
        }
    }
    if let Some(b) = &cfg.baseline {
        if !labels.contains(b) {
            errs.push(ConfigError::new(
                "baseline",
                format!("{b:?} is not the label of a configured policy"),
            ));
        }
    }
    if cfg.repeat_count == 0 {
        errs.push(ConfigError::new("repeat_count", "must be at least 1"));
    }
    if cfg.output_dir.as_os_str().is_empty() {
        errs.push(ConfigError::new("output_dir", "must not be empty"));
    }
    errs
}

/// Turns the config form into a generator spec, loading trace files and
/// rescaling IATs when a target load is set.
pub fn resolve_workload(w: &WorkloadConfig) -> Result<WorkloadSpec, ConfigError> {
    let iat = match &w.iat {
        IatSource::Poisson { mean_us } => IatModel::Poisson { mean_us: *mean_us },
        IatSource::Uniform { lo_us, hi_us } => IatModel::Uniform {
            lo_us: *lo_us,
            hi_us: *hi_us,
        },
        IatSource::Trace { iats_us } => IatModel::trace(iats_us.clone()),
        IatSource::TraceFile { path } => {
            workload::load_trace(path).map_err(|e| ConfigError::new("iat.path", e.to_string()))?
        }
    };
    let spec = WorkloadSpec {
        buckets: w.buckets.clone(),
        duration_cap_us: w.duration_cap_us,
        iat,
        io: w.io.clone(),
        n_requests: w.n_requests,
        target_load: w.target_load,
        cores: w.cores,
        seed: w.seed,
    };
    if spec.target_load.is_some() && spec.validate().is_empty() {
        workload::scale_to_load(&spec)
    } else {
        Ok(spec)
    }
}

pub fn apply_overrides(cfg: &mut ScenarioConfig, o: &Overrides) -> Result<(), ConfigError> {
    if let Some(s) = o.seed {
        cfg.workload.seed = s;
    }
    if let Some(c) = o.cores {
        cfg.workload.cores = c;
    }
    if let Some(l) = o.load {
        cfg.workload.target_load = Some(l);
    }
    if o.timeline && !cfg.formats.contains(&Format::TimelineCsv) {
        cfg.formats.push(Format::TimelineCsv);
    }
    if let Some(dir) = &o.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(list) = &o.policies {
        let mut chosen = Vec::new();
        for item in list {
            if let Some(p) = cfg.policies.iter().find(|p| &p.label() == item) {
                chosen.push(p.clone());
            } else if let Some(name) = PolicyName::parse(item) {
                chosen.push(PolicySpec::new(name));
            } else {
                return Err(ConfigError::new(
                    "policies",
                    format!("unknown policy {item:?}"),
                ));
            }
        }
        if let Some(b) = &cfg.baseline {
            if !chosen.iter().any(|p| &p.label() == b) {
                cfg.baseline = None;
            }
        }
        cfg.policies = chosen;
    }
    Ok(())
}

/// One finished `(policy, repetition)` run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub label: String,
    pub rep: usize,
    pub seed: u64,
    pub result: SimResult,
}

#[derive(Debug, Clone, Serialize)]
struct PolicyComparison {
    label: String,
    mean_turnaround_us: f64,
    turnaround_percentiles: metrics::PercentileRow,
    turnaround_cdf: Vec<(f64, f64)>,
    rte_cdf: Vec<(f64, f64)>,
    context_switches_total: u64,
}

#[derive(Debug, Clone, Serialize)]
struct SwitchRatio {
    label: String,
    baseline: String,
    ratio_cdf: Vec<(f64, f64)>,
    fraction_fewer_than_baseline: f64,
}

#[derive(Debug, Clone, Serialize)]
struct Comparison {
    rep: usize,
    seed: u64,
    requests: usize,
    policies: Vec<PolicyComparison>,
    switch_ratios: Vec<SwitchRatio>,
}

fn ratio_grid() -> Vec<f64> {
    let mut g = vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0];
    g.extend([10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0]);
    g
}

fn compare(
    rep: usize,
    seed: u64,
    runs: &[&RunOutput],
    baseline: Option<&str>,
) -> Result<Comparison, ScenarioError> {
    let report_err = |label: &str| {
        let label = label.to_string();
        move |source| ScenarioError::Report { label, source }
    };
    let mut policies = Vec::new();
    for r in runs {
        let recs = &r.result.records;
        let ta: Vec<Micros> = metrics::turnarounds(recs);
        let ta_f: Vec<f64> = ta.iter().map(|&v| v as f64).collect();
        let rtes: Vec<f64> = recs.iter().map(metrics::rte).collect();
        policies.push(PolicyComparison {
            label: r.label.clone(),
            mean_turnaround_us: ta.iter().sum::<Micros>() as f64 / ta.len() as f64,
            turnaround_percentiles: metrics::PercentileRow::of(&ta).map_err(report_err(&r.label))?,
            turnaround_cdf: metrics::cdf(&ta_f, &metrics::turnaround_grid())
                .map_err(report_err(&r.label))?,
            rte_cdf: metrics::cdf(&rtes, &metrics::rte_grid()).map_err(report_err(&r.label))?,
            context_switches_total: recs.iter().map(|x| x.n_context_switches as u64).sum(),
        });
    }
    let mut switch_ratios = Vec::new();
    if let Some(base) = baseline.and_then(|b| runs.iter().find(|r| r.label == b)) {
        for r in runs.iter().filter(|r| r.label != base.label) {
            let ratios = metrics::switch_ratio(&r.result.records, &base.result.records)
                .map_err(report_err(&r.label))?;
            let values: Vec<f64> = ratios.iter().map(|&(_, v)| v).collect();
            let fewer = fewer_switches(&r.result.records, &base.result.records);
            switch_ratios.push(SwitchRatio {
                label: r.label.clone(),
                baseline: base.label.clone(),
                ratio_cdf: metrics::cdf(&values, &ratio_grid()).map_err(report_err(&r.label))?,
                fraction_fewer_than_baseline: fewer,
            });
        }
    }
    Ok(Comparison {
        rep,
        seed,
        requests: runs.first().map_or(0, |r| r.result.records.len()),
        policies,
        switch_ratios,
    })
}

/// Fraction of requests with strictly fewer switches in `a` than in `b`.
pub fn fewer_switches(a: &[RequestRecord], b: &[RequestRecord]) -> f64 {
    let fewer = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.n_context_switches < y.n_context_switches)
        .count();
    fewer as f64 / a.len().max(1) as f64
}

/// Runs every configured policy over the same generated workload(s).
pub fn execute(cfg: &ScenarioConfig) -> Result<Vec<RunOutput>, ScenarioError> {
    let diags = validate(cfg);
    if !diags.is_empty() {
        return Err(ScenarioError::Config(diags));
    }
    let mut workloads = Vec::with_capacity(cfg.repeat_count);
    for rep in 0..cfg.repeat_count {
        let mut w = cfg.workload.clone();
        w.seed = cfg.workload.seed.wrapping_add(rep as u64);
        let spec = resolve_workload(&w).map_err(|e| ScenarioError::Config(vec![e]))?;
        let reqs = workload::generate(&spec).map_err(|e| ScenarioError::Config(vec![e]))?;
        workloads.push((w.seed, reqs));
    }
    let cores = cfg.workload.cores;
    let mut engine = cfg.engine.clone();
    engine.record_timeline |= cfg.formats.contains(&Format::TimelineCsv);

    let jobs: Vec<(usize, &PolicySpec)> = (0..cfg.repeat_count)
        .flat_map(|rep| cfg.policies.iter().map(move |p| (rep, p)))
        .collect();
    let results: Vec<Result<RunOutput, ScenarioError>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(rep, p)| {
                let (seed, reqs) = &workloads[rep];
                let engine = &engine;
                s.spawn(move || {
                    let mut policy = p.build(cores);
                    sim::run(reqs, policy.as_mut(), cores, engine)
                        .map(|result| RunOutput {
                            label: p.label(),
                            rep,
                            seed: *seed,
                            result,
                        })
                        .map_err(|source| ScenarioError::Sim {
                            label: p.label(),
                            rep,
                            source,
                        })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

/// Runs the scenario and writes all requested files. Returns the outputs
/// and the per-run summaries.
pub fn run_scenario(
    cfg: &ScenarioConfig,
) -> Result<(Vec<RunOutput>, Vec<metrics::SummaryReport>), ScenarioError> {
    let outputs = execute(cfg)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|source| ScenarioError::Output {
        path: dir.clone(),
        source,
    })?;
    let write = |name: String, body: &str| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|source| ScenarioError::Output { path, source })
    };
    let want = |f: Format| cfg.formats.contains(&f);
    let mut summaries = Vec::new();
    for out in &outputs {
        let stem = format!("{}.rep{}", out.label, out.rep);
        let summary = metrics::summarize(&out.result).map_err(|source| ScenarioError::Report {
            label: out.label.clone(),
            source,
        })?;
        if want(Format::RequestsCsv) {
            write(
                format!("{stem}.requests.csv"),
                &metrics::requests_csv(&out.result.records),
            )?;
        }
        if want(Format::SummaryJson) {
            write(format!("{stem}.summary.json"), &to_json(&summary))?;
        }
        if want(Format::TimelineCsv) {
            write(format!("{stem}.timeline.csv"), &metrics::timeline_csv(&out.result))?;
        }
        if want(Format::SeriesCsv) && !out.result.report.queue_delays.is_empty() {
            write(format!("{stem}.slice.csv"), &metrics::slice_csv(&out.result))?;
            write(
                format!("{stem}.queue_delay.csv"),
                &metrics::queue_delay_csv(&out.result),
            )?;
        }
        summaries.push(summary);
    }
    if want(Format::ComparisonJson) {
        for rep in 0..cfg.repeat_count {
            let runs: Vec<&RunOutput> = outputs.iter().filter(|o| o.rep == rep).collect();
            let seed = runs.first().map_or(cfg.workload.seed, |r| r.seed);
            let cmp = compare(rep, seed, &runs, cfg.baseline.as_deref())?;
            write(format!("comparison.rep{rep}.json"), &to_json(&cmp))?;
        }
    }
    Ok((outputs, summaries))
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "workload": {"iat": {"kind": "poisson", "mean_us": 1000}, "n_requests": 5, "cores": 2, "seed": 1},
        "policies": [{"name": "fifo"}],
        "output_dir": "out"
    }"#;

    #[test]
    fn minimal_config_is_valid() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert!(validate(&cfg).is_empty(), "{:?}", validate(&cfg));
        assert_eq!(cfg.repeat_count, 1);
        assert_eq!(cfg.workload.buckets, workload::azure_buckets());
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replace("\"cores\": 2", "\"corez\": 2");
        let err = parse_config(&text).unwrap_err();
        assert!(err.message.contains("corez"), "{err}");
        assert!(err.path.starts_with("line"));
    }

    #[test]
    fn unknown_policy_name() {
        let text = MINIMAL.replace("fifo", "lottery");
        let err = parse_config(&text).unwrap_err();
        assert!(err.message.contains("lottery"), "{err}");
    }

    #[test]
    fn all_problems_reported_together() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.workload.buckets[0].probability = 0.396;
        let mut sfs = PolicySpec::new(PolicyName::Sfs);
        sfs.sfs.window = 0;
        cfg.policies.push(sfs);
        cfg.baseline = Some("cfs".into());
        let paths: Vec<String> = validate(&cfg).into_iter().map(|e| e.path).collect();
        assert!(paths.contains(&"workload.buckets".to_string()), "{paths:?}");
        assert!(paths.contains(&"policies[1].sfs.window".to_string()), "{paths:?}");
        assert!(paths.contains(&"baseline".to_string()), "{paths:?}");
    }

    #[test]
    fn duplicate_labels_rejected() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.policies.push(PolicySpec::new(PolicyName::Fifo));
        assert_eq!(validate(&cfg)[0].path, "policies[1].label");
    }

    #[test]
    fn policy_override_list() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        let o = Overrides {
            policies: Some(vec!["sfs".into(), "fifo".into()]),
            cores: Some(8),
            ..Default::default()
        };
        apply_overrides(&mut cfg, &o).unwrap();
        assert_eq!(cfg.policies.len(), 2);
        assert_eq!(cfg.workload.cores, 8);
        let bad = Overrides {
            policies: Some(vec!["edf".into()]),
            ..Default::default()
        };
        assert!(apply_overrides(&mut cfg, &bad).is_err());
    }
}
