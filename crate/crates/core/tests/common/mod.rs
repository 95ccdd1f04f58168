#![allow(dead_code)]

use sfs_sim::policy::{PolicyName, PolicySpec};
use sfs_sim::sim::{self, EngineConfig, SimResult};
use sfs_sim::workload::{FunctionRequest, Segment};
use sfs_sim::Micros;

pub const MS: Micros = 1_000;

pub fn engine() -> EngineConfig {
    EngineConfig {
        record_timeline: true,
        ..EngineConfig::default()
    }
}

pub fn run_spec(spec: &PolicySpec, reqs: &[FunctionRequest], cores: usize) -> SimResult {
    let mut p = spec.build(cores);
    sim::run(reqs, p.as_mut(), cores, &engine()).expect("simulation")
}

pub fn run(name: PolicyName, reqs: &[FunctionRequest], cores: usize) -> SimResult {
    run_spec(&PolicySpec::new(name), reqs, cores)
}

/// CPU-only requests from `(arrival_ms, cpu_ms)` pairs.
pub fn cpu_ms(jobs: &[(u64, u64)]) -> Vec<FunctionRequest> {
    jobs.iter()
        .enumerate()
        .map(|(i, &(a, c))| FunctionRequest::cpu(i, a * MS, c * MS))
        .collect()
}

pub fn io_then_cpu(id: usize, at: Micros, io: Micros, cpu: Micros) -> FunctionRequest {
    FunctionRequest::new(id, at, vec![Segment::io(io), Segment::cpu(cpu)], 1)
}

pub fn completions(r: &SimResult) -> Vec<Micros> {
    r.records.iter().map(|x| x.completion_us).collect()
}

pub fn turnarounds(r: &SimResult) -> Vec<Micros> {
    r.records.iter().map(|x| x.turnaround_us()).collect()
}

pub fn mean_turnaround(r: &SimResult) -> f64 {
    let t = turnarounds(r);
    t.iter().sum::<Micros>() as f64 / t.len() as f64
}

/// Checks the accounting invariants every run must satisfy.
pub fn assert_conserved(r: &SimResult, reqs: &[FunctionRequest]) {
    let demand: Micros = reqs.iter().map(|q| q.total_cpu_us).sum();
    let busy: Micros = r.cores.iter().map(|c| c.busy_us).sum();
    assert_eq!(busy, demand, "{}: busy time != cpu demand", r.policy);
    let cpu: Micros = r.records.iter().map(|x| x.cpu_us).sum();
    assert_eq!(cpu, demand, "{}: record cpu != demand", r.policy);
    let switches: u64 = r.records.iter().map(|x| x.n_context_switches as u64).sum();
    assert_eq!(switches, r.totals.context_switches, "{}", r.policy);
    assert_eq!(r.records.len(), reqs.len());
    for (rec, req) in r.records.iter().zip(reqs) {
        assert_eq!(rec.request_id, req.id);
        assert!(rec.first_start_us >= rec.arrival_us, "{rec:?}");
        assert!(rec.completion_us >= rec.first_start_us, "{rec:?}");
        assert!(rec.turnaround_us() >= rec.service_us, "{}: {rec:?}", r.policy);
        assert_eq!(rec.service_us, req.service_us());
    }
    for c in &r.cores {
        assert_eq!(
            c.busy_us + c.idle_us + c.overhead_us,
            r.totals.makespan_us,
            "{}: core {} clock",
            r.policy,
            c.id
        );
    }
}
