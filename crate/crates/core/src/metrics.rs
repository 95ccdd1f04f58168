//! Per-request outcomes and aggregate statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::sim::{SchedClass, SimResult, Task};
use crate::Micros;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("cannot summarise an empty sample")]
    Empty,
    #[error("percentile {0} is outside [0, 100]")]
    BadPercentile(String),
    #[error("request {0} is missing from one of the result sets")]
    IdMismatch(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequestRecord {
    pub request_id: usize,
    pub group: u32,
    pub arrival_us: Micros,
    pub first_start_us: Micros,
    pub completion_us: Micros,
    /// Sum of all segment lengths: the contention-free turnaround.
    pub service_us: Micros,
    pub cpu_us: Micros,
    pub wait_us: Micros,
    pub n_context_switches: u32,
    pub n_io_blocks: u32,
    pub initial_queuing_delay_us: Micros,
    pub class_history: Vec<SchedClass>,
}

impl RequestRecord {
    pub(crate) fn from_task(t: &Task) -> Self {
        let completion = t.completion_us.unwrap_or(t.arrival_us);
        let service = t.service_us();
        Self {
            request_id: t.id,
            group: t.group,
            arrival_us: t.arrival_us,
            first_start_us: t.first_start_us.unwrap_or(completion),
            completion_us: completion,
            service_us: service,
            cpu_us: t.cpu_used_us,
            wait_us: (completion - t.arrival_us).saturating_sub(service),
            n_context_switches: t.n_context_switches,
            n_io_blocks: t.n_io_blocks,
            initial_queuing_delay_us: t.initial_queue_delay_us.unwrap_or(0),
            class_history: t.class_history.clone(),
        }
    }

    pub fn turnaround_us(&self) -> Micros {
        self.completion_us - self.arrival_us
    }

    pub fn demoted(&self) -> bool {
        self.class_history.first() == Some(&SchedClass::Filter)
            && self.class_history.contains(&SchedClass::CfsPool)
    }
}

/// Run-time effectiveness: service time over turnaround, 1.0 meaning no waiting.
pub fn rte(record: &RequestRecord) -> f64 {
    let turnaround = record.turnaround_us();
    if turnaround == 0 {
        return 1.0;
    }
    record.service_us as f64 / turnaround as f64
}

/// Empirical CDF of `values` evaluated at each grid point.
pub fn cdf(values: &[f64], grid: &[f64]) -> Result<Vec<(f64, f64)>, ReportError> {
    if values.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(grid
        .iter()
        .map(|&x| {
            let count = sorted.partition_point(|&v| v <= x);
            (x, count as f64 / n)
        })
        .collect())
}

/// Nearest-rank percentile: the `ceil(p/100 * n)`-th smallest value.
pub fn percentile<T: Copy + PartialOrd>(values: &[T], p: f64) -> Result<T, ReportError> {
    if values.is_empty() {
        return Err(ReportError::Empty);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(ReportError::BadPercentile(p.to_string()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("comparable values"));
    Ok(sorted[nearest_rank(p, sorted.len())])
}

fn nearest_rank(p: f64, n: usize) -> usize {
    let rank = (p / 100.0 * n as f64).ceil() as usize;
    rank.clamp(1, n) - 1
}

fn percentile_sorted(sorted: &[Micros], p: f64) -> Micros {
    sorted[nearest_rank(p, sorted.len())]
}

/// Per-request ratio of context switches under `a` to those under `b`,
/// with a zero denominator clamped to one. Ordered by request id.
pub fn switch_ratio(
    a: &[RequestRecord],
    b: &[RequestRecord],
) -> Result<Vec<(usize, f64)>, ReportError> {
    let bmap: BTreeMap<usize, u32> = b
        .iter()
        .map(|r| (r.request_id, r.n_context_switches))
        .collect();
    if bmap.len() != a.len() {
        let amap: BTreeMap<usize, ()> = a.iter().map(|r| (r.request_id, ())).collect();
        let missing = bmap
            .keys()
            .find(|id| !amap.contains_key(id))
            .copied()
            .unwrap_or(0);
        return Err(ReportError::IdMismatch(missing));
    }
    let mut out: Vec<(usize, f64)> = a
        .iter()
        .map(|r| {
            let den = *bmap
                .get(&r.request_id)
                .ok_or(ReportError::IdMismatch(r.request_id))?;
            Ok((r.request_id, r.n_context_switches as f64 / den.max(1) as f64))
        })
        .collect::<Result<_, _>>()?;
    out.sort_by_key(|&(id, _)| id);
    Ok(out)
}

pub const PERCENTILES: [f64; 5] = [50.0, 75.0, 90.0, 99.0, 99.9];

/// Turnaround grid in microseconds: 10 log-spaced points per decade, 1 ms to 1000 s.
pub fn turnaround_grid() -> Vec<f64> {
    (0..=60).map(|i| (1e3 * 10f64.powf(i as f64 / 10.0)).round()).collect()
}

pub fn rte_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercentileRow {
    pub p50: Micros,
    pub p75: Micros,
    pub p90: Micros,
    pub p99: Micros,
    pub p99_9: Micros,
}

impl PercentileRow {
    pub fn of(values: &[Micros]) -> Result<Self, ReportError> {
        if values.is_empty() {
            return Err(ReportError::Empty);
        }
        let mut s = values.to_vec();
        s.sort_unstable();
        let [a, b, c, d, e] = PERCENTILES.map(|p| percentile_sorted(&s, p));
        Ok(Self {
            p50: a,
            p75: b,
            p90: c,
            p99: d,
            p99_9: e,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub count: usize,
    pub median_turnaround_us: Micros,
    pub mean_turnaround_us: f64,
    pub median_rte: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryReport {
    pub policy: String,
    pub requests: usize,
    pub makespan_us: Micros,
    pub mean_turnaround_us: f64,
    pub turnaround_percentiles: PercentileRow,
    pub turnaround_cdf: Vec<(f64, f64)>,
    pub rte_cdf: Vec<(f64, f64)>,
    pub groups: BTreeMap<u32, GroupSummary>,
    pub context_switches_total: u64,
    pub io_block_switches_total: u64,
    pub context_switches_per_request: f64,
    pub mean_queuing_delay_us: f64,
    pub queuing_delay_percentiles: PercentileRow,
    pub demotions: u64,
    pub overload_bypasses: u64,
    pub boosts: u64,
    pub slice_timeline: Vec<(Micros, Micros)>,
}

pub fn turnarounds(records: &[RequestRecord]) -> Vec<Micros> {
    records.iter().map(RequestRecord::turnaround_us).collect()
}

pub fn summarize(result: &SimResult) -> Result<SummaryReport, ReportError> {
    let recs = &result.records;
    if recs.is_empty() {
        return Err(ReportError::Empty);
    }
    let ta = turnarounds(recs);
    let ta_f: Vec<f64> = ta.iter().map(|&v| v as f64).collect();
    let rtes: Vec<f64> = recs.iter().map(rte).collect();

    let mut by_group: BTreeMap<u32, Vec<&RequestRecord>> = BTreeMap::new();
    for r in recs {
        by_group.entry(r.group).or_default().push(r);
    }
    let groups = by_group
        .into_iter()
        .map(|(g, rs)| {
            let t: Vec<Micros> = rs.iter().map(|r| r.turnaround_us()).collect();
            let rt: Vec<f64> = rs.iter().map(|r| rte(r)).collect();
            let summary = GroupSummary {
                count: rs.len(),
                median_turnaround_us: percentile(&t, 50.0)?,
                mean_turnaround_us: t.iter().sum::<Micros>() as f64 / t.len() as f64,
                median_rte: percentile(&rt, 50.0)?,
            };
            Ok((g, summary))
        })
        .collect::<Result<_, ReportError>>()?;

    let delays: Vec<Micros> = if result.report.queue_delays.is_empty() {
        recs.iter().map(|r| r.initial_queuing_delay_us).collect()
    } else {
        result.report.queue_delays.iter().map(|q| q.delay_us).collect()
    };
    let n = recs.len() as f64;
    Ok(SummaryReport {
        policy: result.policy.clone(),
        requests: recs.len(),
        makespan_us: result.totals.makespan_us,
        mean_turnaround_us: ta.iter().sum::<Micros>() as f64 / n,
        turnaround_percentiles: PercentileRow::of(&ta)?,
        turnaround_cdf: cdf(&ta_f, &turnaround_grid())?,
        rte_cdf: cdf(&rtes, &rte_grid())?,
        groups,
        context_switches_total: result.totals.context_switches,
        io_block_switches_total: result.totals.io_block_switches,
        context_switches_per_request: result.totals.context_switches as f64 / n,
        mean_queuing_delay_us: delays.iter().sum::<Micros>() as f64 / delays.len() as f64,
        queuing_delay_percentiles: PercentileRow::of(&delays)?,
        demotions: result.report.demotions,
        overload_bypasses: result.report.bypasses,
        boosts: result.report.boosts,
        slice_timeline: result.report.slice_timeline.clone(),
    })
}

pub const REQUEST_CSV_HEADER: &str =
    "request_id,group,arrival_us,start_us,completion_us,service_us,wait_us,switches,rte";

pub fn requests_csv(records: &[RequestRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(REQUEST_CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.6}",
            r.request_id,
            r.group,
            r.arrival_us,
            r.first_start_us,
            r.completion_us,
            r.service_us,
            r.wait_us,
            r.n_context_switches,
            rte(r)
        );
    }
    out
}

pub fn timeline_csv(result: &SimResult) -> String {
    let mut out = String::from("time_us,core,task,event\n");
    for e in &result.timeline {
        let _ = writeln!(out, "{},{},{},{}", e.time_us, e.core, e.task, e.tag.as_str());
    }
    out
}

pub fn slice_csv(result: &SimResult) -> String {
    let mut out = String::from("time_us,slice_us\n");
    for (t, s) in &result.report.slice_timeline {
        let _ = writeln!(out, "{t},{s}");
    }
    out
}

pub fn queue_delay_csv(result: &SimResult) -> String {
    let mut out = String::from("time_us,request_id,delay_us,bypassed\n");
    for q in &result.report.queue_delays {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            q.time_us, q.task, q.delay_us, q.bypassed as u8
        );
    }
    out
}
