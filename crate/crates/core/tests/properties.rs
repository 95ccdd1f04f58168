//! Invariants every policy must keep on arbitrary small workloads.

mod common;

use common::*;
use proptest::prelude::*;
use sfs_sim::policy::sfs::{BoostConfig, IoDetection, SfsConfig};
use sfs_sim::policy::{PolicyName, PolicySpec};
use sfs_sim::workload::{FunctionRequest, Segment};

fn request() -> impl Strategy<Value = (u64, Vec<(bool, u64)>)> {
    (
        0u64..300_000,
        prop::collection::vec((any::<bool>(), 1u64..80_000), 1..4),
    )
}

fn build(mut raw: Vec<(u64, Vec<(bool, u64)>)>) -> Vec<FunctionRequest> {
    raw.sort_by_key(|r| r.0);
    raw.into_iter()
        .enumerate()
        .map(|(i, (at, segs))| {
            let mut segments: Vec<Segment> = segs
                .into_iter()
                .map(|(io, len)| if io { Segment::io(len) } else { Segment::cpu(len) })
                .collect();
            if segments.iter().all(|s| s.len_us == 0 || matches!(s.kind, sfs_sim::workload::SegmentKind::Io)) {
                segments.push(Segment::cpu(1_000));
            }
            FunctionRequest::new(i, at, segments, 1)
        })
        .collect()
}

fn specs() -> Vec<PolicySpec> {
    let mut out: Vec<PolicySpec> = PolicyName::ALL.iter().map(|&n| PolicySpec::new(n)).collect();
    let mut rr = PolicySpec::new(PolicyName::Rr);
    rr.rr_quantum_us = 7_000;
    out.push(rr);
    for det in [IoDetection::Poll, IoDetection::Instant, IoDetection::Oblivious] {
        out.push(PolicySpec::sfs(SfsConfig {
            io_detection: det,
            fixed_slice_us: Some(15_000),
            overload_multiplier: 2,
            boost: BoostConfig {
                enabled: det == IoDetection::Poll,
                ..BoostConfig::default()
            },
            ..SfsConfig::default()
        }));
    }
    out.push(PolicySpec::sfs(SfsConfig {
        window: 3,
        ..SfsConfig::default()
    }));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn accounting_invariants_hold(
        raw in prop::collection::vec(request(), 1..25),
        cores in 1usize..5,
    ) {
        let reqs = build(raw);
        for spec in specs() {
            // run_spec checks work conservation at every scheduling point
            let r = run_spec(&spec, &reqs, cores);
            assert_conserved(&r, &reqs);
            let again = run_spec(&spec, &reqs, cores);
            prop_assert_eq!(&r.records, &again.records);
        }
    }
}
