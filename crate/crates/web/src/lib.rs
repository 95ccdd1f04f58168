//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every entry point takes plain numbers and returns a JSON string so the page
//! needs no glue beyond what `wasm-bindgen` generates. The `*_json` functions
//! hold the logic and are callable (and tested) natively.

use serde::Serialize;
use sfs_sim::metrics;
use sfs_sim::policy::{PolicyName, PolicySpec};
use sfs_sim::sim::{self, EngineConfig, SimResult, TimelineTag};
use sfs_sim::workload::{self, FunctionRequest, WorkloadSpec};
use sfs_sim::Micros;
use wasm_bindgen::prelude::*;

const MAX_REQUESTS: usize = 20_000;
const MAX_GANTT_REQUESTS: usize = 200;

fn requests(n: usize, cores: usize, load: f64, seed: u64) -> Result<Vec<FunctionRequest>, String> {
    if n == 0 || n > MAX_REQUESTS {
        return Err(format!("request count must be in 1..={MAX_REQUESTS}"));
    }
    let spec = WorkloadSpec::azure_poisson(n, cores, load, seed);
    let errs = spec.validate();
    if let Some(e) = errs.first() {
        return Err(e.to_string());
    }
    let scaled = workload::scale_to_load(&spec).map_err(|e| e.to_string())?;
    workload::generate(&scaled).map_err(|e| e.to_string())
}

fn simulate(name: PolicyName, reqs: &[FunctionRequest], cores: usize, timeline: bool) -> Result<SimResult, String> {
    let engine = EngineConfig {
        record_timeline: timeline,
        ..EngineConfig::default()
    };
    let mut p = PolicySpec::new(name).build(cores);
    sim::run(reqs, p.as_mut(), cores, &engine).map_err(|e| e.to_string())
}

fn policy(name: &str) -> Result<PolicyName, String> {
    PolicyName::parse(name).ok_or_else(|| format!("unknown policy {name:?}"))
}

#[derive(Serialize)]
struct PolicyCurve {
    policy: String,
    mean_ms: f64,
    p50_ms: f64,
    p99_ms: f64,
    rte_ge_09: f64,
    switches: u64,
    /// `(turnaround_ms, fraction)` on a log grid.
    cdf: Vec<(f64, f64)>,
}

/// Runs each policy over one generated workload and returns turnaround CDFs.
pub fn compare_json(policies: &str, n: usize, cores: usize, load: f64, seed: u64) -> Result<String, String> {
    let reqs = requests(n, cores, load, seed)?;
    let grid: Vec<f64> = (0..=60).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
    let mut out = Vec::new();
    for name in policies.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let r = simulate(policy(name)?, &reqs, cores, false)?;
        let ta_ms: Vec<f64> = r.records.iter().map(|x| x.turnaround_us() as f64 / 1e3).collect();
        let s = metrics::summarize(&r).map_err(|e| e.to_string())?;
        let good = r.records.iter().filter(|x| metrics::rte(x) >= 0.9).count();
        out.push(PolicyCurve {
            policy: name.to_string(),
            mean_ms: s.mean_turnaround_us / 1e3,
            p50_ms: s.turnaround_percentiles.p50 as f64 / 1e3,
            p99_ms: s.turnaround_percentiles.p99 as f64 / 1e3,
            rte_ge_09: good as f64 / r.records.len() as f64,
            switches: s.context_switches_total,
            cdf: metrics::cdf(&ta_ms, &grid).map_err(|e| e.to_string())?,
        });
    }
    if out.is_empty() {
        return Err("no policies given".into());
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize, Debug, PartialEq)]
struct Bar {
    core: usize,
    task: usize,
    start_us: Micros,
    end_us: Micros,
    group: u32,
    /// Why the run ended: `done`, `io_block`, `slice_expired`, ...
    end: &'static str,
}

#[derive(Serialize)]
struct Gantt {
    cores: usize,
    makespan_us: Micros,
    bars: Vec<Bar>,
}

fn bars(r: &SimResult) -> Vec<Bar> {
    let mut open: Vec<Option<(Micros, usize)>> = vec![None; r.cores.len()];
    let mut out = Vec::new();
    for e in &r.timeline {
        if e.tag == TimelineTag::Start {
            open[e.core] = Some((e.time_us, e.task));
        } else if let Some((t0, task)) = open[e.core].take() {
            out.push(Bar {
                core: e.core,
                task,
                start_us: t0,
                end_us: e.time_us,
                group: r.records[task].group,
                end: e.tag.as_str(),
            });
        }
    }
    out
}

/// Per-core execution bars for a small workload under one policy.
pub fn gantt_json(name: &str, n: usize, cores: usize, load: f64, seed: u64) -> Result<String, String> {
    if n > MAX_GANTT_REQUESTS {
        return Err(format!("at most {MAX_GANTT_REQUESTS} requests for a timeline"));
    }
    let reqs = requests(n, cores, load, seed)?;
    let r = simulate(policy(name)?, &reqs, cores, true)?;
    let g = Gantt {
        cores: r.cores.len(),
        makespan_us: r.totals.makespan_us,
        bars: bars(&r),
    };
    serde_json::to_string(&g).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SliceSeries {
    slice: Vec<(Micros, Micros)>,
    /// `(time_us, delay_us, bypassed)`
    delays: Vec<(Micros, Micros, bool)>,
    demotions: u64,
    bypasses: u64,
}

/// The adaptive time slice and global-queue delays of an SFS run.
pub fn slice_json(n: usize, cores: usize, load: f64, seed: u64) -> Result<String, String> {
    let reqs = requests(n, cores, load, seed)?;
    let r = simulate(PolicyName::Sfs, &reqs, cores, false)?;
    let rep = r.report;
    let s = SliceSeries {
        slice: rep.slice_timeline,
        delays: rep
            .queue_delays
            .iter()
            .map(|q| (q.time_us, q.delay_us, q.bypassed))
            .collect(),
        demotions: rep.demotions,
        bypasses: rep.bypasses,
    };
    serde_json::to_string(&s).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn compare(policies: &str, n: usize, cores: usize, load: f64, seed: u32) -> Result<String, JsError> {
    compare_json(policies, n, cores, load, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn gantt(policy: &str, n: usize, cores: usize, load: f64, seed: u32) -> Result<String, JsError> {
    gantt_json(policy, n, cores, load, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn slice_series(n: usize, cores: usize, load: f64, seed: u32) -> Result<String, JsError> {
    slice_json(n, cores, load, seed as u64).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn compare_returns_monotone_cdfs() {
        let v: Value = serde_json::from_str(&compare_json("sfs, cfs", 300, 4, 0.9, 1).unwrap()).unwrap();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 2);
        for p in arr {
            let cdf = p["cdf"].as_array().unwrap();
            let ys: Vec<f64> = cdf.iter().map(|pt| pt[1].as_f64().unwrap()).collect();
            assert!(ys.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn gantt_bars_cover_all_cpu_work() {
        let reqs = requests(40, 2, 1.0, 3).unwrap();
        let r = simulate(PolicyName::Cfs, &reqs, 2, true).unwrap();
        let b = bars(&r);
        let covered: Micros = b.iter().map(|x| x.end_us - x.start_us).sum();
        let demand: Micros = reqs.iter().map(|q| q.total_cpu_us).sum();
        assert_eq!(covered, demand);
        assert_eq!(b.iter().filter(|x| x.end == "done").count(), 40);
        assert!(gantt_json("cfs", 40, 2, 1.0, 3).unwrap().contains("\"bars\""));
    }

    #[test]
    fn slice_series_starts_at_bootstrap() {
        let v: Value = serde_json::from_str(&slice_json(200, 4, 1.0, 2).unwrap()).unwrap();
        assert_eq!(v["slice"][0][1].as_u64().unwrap(), 100_000);
        assert!(v["delays"].as_array().unwrap().len() >= 200);
    }

    #[test]
    fn bad_inputs_are_errors() {
        assert!(compare_json("lottery", 10, 1, 1.0, 0).unwrap_err().contains("lottery"));
        assert!(compare_json("", 10, 1, 1.0, 0).is_err());
        assert!(gantt_json("sfs", 1_000, 2, 1.0, 0).is_err());
        assert!(slice_json(0, 2, 1.0, 0).is_err());
        assert!(slice_json(10, 0, 1.0, 0).is_err());
    }
}
