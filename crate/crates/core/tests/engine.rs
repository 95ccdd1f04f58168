mod common;

use common::*;
use sfs_sim::error::SimError;
use sfs_sim::policy::{PolicyName, PolicySpec};
use sfs_sim::sim::{self, EngineConfig, Policy, PreemptReason, Sys, TaskId, TimelineTag};
use sfs_sim::workload::{FunctionRequest, Segment};
use sfs_sim::{metrics, Micros};

#[test]
fn single_request_runs_uncontended_under_every_policy() {
    let reqs = vec![FunctionRequest::cpu(0, 5 * MS, 137 * MS)];
    for name in PolicyName::ALL {
        let r = run(name, &reqs, 1);
        assert_eq!(r.records[0].turnaround_us(), 137 * MS, "{name:?}");
        assert_eq!(r.records[0].wait_us, 0);
        assert_eq!(metrics::rte(&r.records[0]), 1.0);
        assert_conserved(&r, &reqs);
    }
}

#[test]
fn two_simultaneous_requests_on_two_cores() {
    let reqs = cpu_ms(&[(0, 40), (0, 40)]);
    for name in PolicyName::ALL {
        let r = run(name, &reqs, 2);
        assert_eq!(turnarounds(&r), vec![40 * MS, 40 * MS], "{name:?}");
    }
}

#[test]
fn fifo_matches_closed_form_when_backlogged() {
    // Everything arrives before the first job finishes, so the core never idles.
    let jobs = [(0, 30), (1, 7), (2, 12), (5, 1), (9, 50), (20, 3)];
    let reqs = cpu_ms(&jobs);
    let r = run(PolicyName::Fifo, &reqs, 1);
    let mut finish = 0;
    for (i, &(a, c)) in jobs.iter().enumerate() {
        finish += c * MS;
        assert_eq!(r.records[i].turnaround_us(), finish - a * MS, "job {i}");
    }
    assert_eq!(r.totals.context_switches, 0);
}

#[test]
fn conservation_holds_with_io_and_gaps() {
    let mut reqs = vec![
        io_then_cpu(0, 0, 20 * MS, 30 * MS),
        FunctionRequest::cpu(1, 0, 45 * MS),
        io_then_cpu(2, 10 * MS, 5 * MS, 5 * MS),
        FunctionRequest::new(
            3,
            200 * MS,
            vec![Segment::cpu(10 * MS), Segment::io(10 * MS), Segment::cpu(2 * MS)],
            2,
        ),
        FunctionRequest::new(4, 201 * MS, vec![Segment::cpu(MS), Segment::io(7 * MS)], 1),
    ];
    reqs.push(FunctionRequest::cpu(5, 500 * MS, 1));
    for name in PolicyName::ALL {
        let r = run(name, &reqs, 2);
        assert_conserved(&r, &reqs);
        // IO segments take at least their length.
        assert!(r.records[0].turnaround_us() >= 50 * MS);
    }
}

#[test]
fn io_final_segment_completes_after_io() {
    let reqs = vec![FunctionRequest::new(
        0,
        0,
        vec![Segment::cpu(3 * MS), Segment::io(9 * MS)],
        1,
    )];
    let r = run(PolicyName::Cfs, &reqs, 1);
    assert_eq!(r.records[0].completion_us, 12 * MS);
    assert_eq!(r.records[0].n_io_blocks, 1);
    assert_eq!(r.totals.io_block_switches, 1);
}

#[test]
fn slice_expiry_counts_one_switch_per_preemption() {
    // 2 tasks x 24 ms on one core with 12 ms slices: A B A B.
    let reqs = cpu_ms(&[(0, 24), (0, 24)]);
    let r = run(PolicyName::Cfs, &reqs, 1);
    assert_eq!(r.totals.context_switches, 2);
    let stops = r
        .timeline
        .iter()
        .filter(|e| e.tag == TimelineTag::SliceExpired)
        .count();
    assert_eq!(stops, 2);
}

#[test]
fn timeline_is_ordered_and_paired() {
    let reqs = cpu_ms(&[(0, 30), (0, 20), (3, 9), (4, 60)]);
    let r = run(PolicyName::Cfs, &reqs, 2);
    assert!(r.timeline.windows(2).all(|w| w[0].time_us <= w[1].time_us));
    for core in 0..2 {
        let mut open: Option<TaskId> = None;
        for e in r.timeline.iter().filter(|e| e.core == core) {
            match e.tag {
                TimelineTag::Start => {
                    assert!(open.is_none(), "core {core} double start at {}", e.time_us);
                    open = Some(e.task);
                }
                _ => assert_eq!(open.take(), Some(e.task)),
            }
        }
        assert!(open.is_none());
    }
    let csv = metrics::timeline_csv(&r);
    assert!(csv.starts_with("time_us,core,task,event\n"));
    assert_eq!(csv.lines().count(), r.timeline.len() + 1);
}

#[test]
fn identical_inputs_give_identical_results() {
    let spec = sfs_sim::WorkloadSpec {
        io: sfs_sim::workload::IoProfile {
            io_fraction: 0.5,
            ..Default::default()
        },
        ..sfs_sim::WorkloadSpec::azure_poisson(400, 4, 0.9, 7)
    };
    let reqs = sfs_sim::workload::generate(&sfs_sim::workload::scale_to_load(&spec).unwrap()).unwrap();
    for name in PolicyName::ALL {
        let a = run(name, &reqs, 4);
        let b = run(name, &reqs, 4);
        assert_eq!(a.records, b.records, "{name:?}");
        assert_eq!(a.timeline, b.timeline);
        assert_eq!(metrics::requests_csv(&a.records), metrics::requests_csv(&b.records));
    }
}

#[test]
fn switch_overhead_delays_the_next_task() {
    let reqs = cpu_ms(&[(0, 24), (0, 24)]);
    let cfg = EngineConfig {
        switch_overhead_us: 5,
        ..EngineConfig::default()
    };
    let mut p = PolicySpec::new(PolicyName::Cfs).build(1);
    let r = sim::run(&reqs, p.as_mut(), 1, &cfg).unwrap();
    let busy: Micros = r.cores.iter().map(|c| c.busy_us).sum();
    assert_eq!(busy, 48 * MS);
    assert_eq!(r.cores[0].overhead_us, 5 * r.totals.context_switches);
    assert_eq!(r.totals.makespan_us, 48 * MS + r.cores[0].overhead_us);
}

#[test]
fn unsorted_requests_are_rejected() {
    let reqs = vec![FunctionRequest::cpu(0, 10, 5), FunctionRequest::cpu(1, 3, 5)];
    let mut p = PolicySpec::new(PolicyName::Fifo).build(1);
    let err = sim::run(&reqs, p.as_mut(), 1, &EngineConfig::default()).unwrap_err();
    assert!(matches!(err, SimError::UnsortedRequests(1)));
}

/// A policy that dispatches a task id nobody submitted.
struct Rogue;

impl Policy for Rogue {
    fn name(&self) -> String {
        "rogue".into()
    }
    fn on_arrival(&mut self, _: &mut Sys, _: TaskId) -> Result<(), SimError> {
        Ok(())
    }
    fn on_block(&mut self, _: &mut Sys, _: TaskId, _: usize) -> Result<(), SimError> {
        Ok(())
    }
    fn on_complete(&mut self, _: &mut Sys, _: TaskId, _: Option<usize>) -> Result<(), SimError> {
        Ok(())
    }
    fn schedule(&mut self, sys: &mut Sys) -> Result<(), SimError> {
        if sys.is_idle(0) {
            sys.dispatch(0, 99, None)?;
        }
        Ok(())
    }
    fn waiting_runnable(&self, _: &Sys) -> usize {
        0
    }
}

#[test]
fn unknown_task_is_a_consistency_fault() {
    let reqs = vec![FunctionRequest::cpu(0, 0, 5)];
    let err = sim::run(&reqs, &mut Rogue, 1, &EngineConfig::default()).unwrap_err();
    assert!(matches!(err, SimError::UnknownTask(99)), "{err:?}");
}

/// Holds tasks back while claiming they are runnable.
struct Lazy(Vec<TaskId>);

impl Policy for Lazy {
    fn name(&self) -> String {
        "lazy".into()
    }
    fn on_arrival(&mut self, _: &mut Sys, t: TaskId) -> Result<(), SimError> {
        self.0.push(t);
        Ok(())
    }
    fn on_block(&mut self, _: &mut Sys, _: TaskId, _: usize) -> Result<(), SimError> {
        Ok(())
    }
    fn on_complete(&mut self, _: &mut Sys, _: TaskId, _: Option<usize>) -> Result<(), SimError> {
        Ok(())
    }
    fn schedule(&mut self, _: &mut Sys) -> Result<(), SimError> {
        Ok(())
    }
    fn waiting_runnable(&self, _: &Sys) -> usize {
        self.0.len()
    }
}

#[test]
fn idling_with_runnable_work_is_detected() {
    let reqs = vec![FunctionRequest::cpu(0, 0, 5)];
    let err = sim::run(&reqs, &mut Lazy(vec![]), 1, &EngineConfig::default()).unwrap_err();
    assert!(matches!(err, SimError::NotWorkConserving { .. }), "{err:?}");
}

/// Preempts whatever runs at every scheduling point, to exercise `preempt` errors.
struct DoublePreempt;

impl Policy for DoublePreempt {
    fn name(&self) -> String {
        "double".into()
    }
    fn on_arrival(&mut self, sys: &mut Sys, t: TaskId) -> Result<(), SimError> {
        sys.dispatch(0, t, None)?;
        sys.preempt(0, PreemptReason::PolicyDemand)?;
        sys.preempt(0, PreemptReason::PolicyDemand)?;
        Ok(())
    }
    fn on_block(&mut self, _: &mut Sys, _: TaskId, _: usize) -> Result<(), SimError> {
        Ok(())
    }
    fn on_complete(&mut self, _: &mut Sys, _: TaskId, _: Option<usize>) -> Result<(), SimError> {
        Ok(())
    }
    fn schedule(&mut self, _: &mut Sys) -> Result<(), SimError> {
        Ok(())
    }
    fn waiting_runnable(&self, _: &Sys) -> usize {
        0
    }
}

#[test]
fn preempting_an_idle_core_is_a_fault() {
    let reqs = vec![FunctionRequest::cpu(0, 0, 5)];
    let err = sim::run(&reqs, &mut DoublePreempt, 1, &EngineConfig::default()).unwrap_err();
    assert!(matches!(err, SimError::CoreIdle(0)), "{err:?}");
}
