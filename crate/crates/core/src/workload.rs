//! Synthetic FaaS workload generation.
//!
//! Durations follow a bucketed distribution modeled on Azure Functions
//! (Day 1) invocation statistics; inter-arrival times come from a Poisson,
//! uniform or replayed trace model. Everything is driven by an explicitly
//! passed seeded generator so a `(spec, seed)` pair always yields the same
//! request list.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, TraceError};
use crate::Micros;

pub const MS: Micros = 1_000;
pub const SEC: Micros = 1_000_000;

/// Upper bound used for the open-ended duration bucket.
pub const DEFAULT_DURATION_CAP_US: Micros = 60 * SEC;

pub type WorkloadRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> WorkloadRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationBucket {
    pub lo_us: Micros,
    /// Exclusive upper bound; `None` means unbounded (sampled up to the cap).
    #[serde(default)]
    pub hi_us: Option<Micros>,
    pub probability: f64,
    pub group: u32,
}

impl DurationBucket {
    pub fn bounded(lo_us: Micros, hi_us: Micros, probability: f64, group: u32) -> Self {
        Self {
            lo_us,
            hi_us: Some(hi_us),
            probability,
            group,
        }
    }

    fn upper(&self, cap_us: Micros) -> Micros {
        self.hi_us.unwrap_or(cap_us)
    }

    /// Analytic mean of the integer-uniform law on `[lo, hi)`.
    pub fn mean_us(&self, cap_us: Micros) -> f64 {
        let hi = self.upper(cap_us);
        (self.lo_us as f64 + (hi - 1) as f64) / 2.0
    }
}

/// The Azure-derived duration table.
///
/// The five published rows cover 95.6% of invocations; the remaining 4.4%
/// falls in the unlisted 400-1550 ms range and is assigned its own bucket
/// (group 5) so that the published row probabilities stay exact.
pub fn azure_buckets() -> Vec<DurationBucket> {
    vec![
        DurationBucket::bounded(1, 50 * MS, 0.406, 1),
        DurationBucket::bounded(50 * MS, 100 * MS, 0.098, 2),
        DurationBucket::bounded(100 * MS, 200 * MS, 0.068, 3),
        DurationBucket::bounded(200 * MS, 400 * MS, 0.227, 4),
        DurationBucket::bounded(400 * MS, 1550 * MS, 0.044, 5),
        DurationBucket {
            lo_us: 1550 * MS,
            hi_us: None,
            probability: 0.157,
            group: 6,
        },
    ]
}

pub fn validate_buckets(buckets: &[DurationBucket], cap_us: Micros) -> Vec<ConfigError> {
    let mut errs = Vec::new();
    if buckets.is_empty() {
        errs.push(ConfigError::new("buckets", "at least one bucket is required"));
        return errs;
    }
    let total: f64 = buckets.iter().map(|b| b.probability).sum();
    if (total - 1.0).abs() > 1e-9 {
        errs.push(ConfigError::new(
            "buckets",
            format!("probabilities sum to {total}, expected 1"),
        ));
    }
    let mut unbounded = 0;
    for (i, b) in buckets.iter().enumerate() {
        let path = format!("buckets[{i}]");
        if !(0.0..=1.0).contains(&b.probability) || b.probability.is_nan() {
            errs.push(ConfigError::new(
                format!("{path}.probability"),
                format!("{} is outside [0, 1]", b.probability),
            ));
        }
        if b.lo_us == 0 {
            errs.push(ConfigError::new(
                format!("{path}.lo_us"),
                "durations must be positive",
            ));
        }
        match b.hi_us {
            Some(hi) if hi <= b.lo_us => errs.push(ConfigError::new(
                format!("{path}.hi_us"),
                format!("{hi} is not above lo_us {}", b.lo_us),
            )),
            None => {
                unbounded += 1;
                if cap_us <= b.lo_us {
                    errs.push(ConfigError::new(
                        "duration_cap_us",
                        format!("cap {cap_us} is not above unbounded bucket start {}", b.lo_us),
                    ));
                }
            }
            _ => {}
        }
    }
    if unbounded > 1 {
        errs.push(ConfigError::new("buckets", "at most one bucket may be unbounded"));
    }
    let mut ranges: Vec<(Micros, Micros, usize)> = buckets
        .iter()
        .enumerate()
        .map(|(i, b)| (b.lo_us, b.hi_us.unwrap_or(Micros::MAX), i))
        .collect();
    ranges.sort_unstable();
    for w in ranges.windows(2) {
        if w[1].0 < w[0].1 {
            errs.push(ConfigError::new(
                format!("buckets[{}]", w[1].2),
                format!("overlaps buckets[{}]", w[0].2),
            ));
        }
    }
    errs
}

/// Mean duration of the bucket mixture, computed analytically.
pub fn mean_duration_us(buckets: &[DurationBucket], cap_us: Micros) -> f64 {
    buckets
        .iter()
        .map(|b| b.probability * b.mean_us(cap_us))
        .sum()
}

/// Picks a bucket by probability, then a uniform duration inside it.
/// Returns `(duration_us, group)`.
pub fn sample_duration<R: Rng + ?Sized>(
    rng: &mut R,
    buckets: &[DurationBucket],
    cap_us: Micros,
) -> Result<(Micros, u32), ConfigError> {
    if let Some(e) = validate_buckets(buckets, cap_us).into_iter().next() {
        return Err(e);
    }
    Ok(sample_duration_unchecked(rng, buckets, cap_us))
}

fn sample_duration_unchecked<R: Rng + ?Sized>(
    rng: &mut R,
    buckets: &[DurationBucket],
    cap_us: Micros,
) -> (Micros, u32) {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    // Falls through to the last bucket when rounding leaves u above the sum.
    let mut chosen = &buckets[buckets.len() - 1];
    for b in buckets {
        acc += b.probability;
        if u < acc {
            chosen = b;
            break;
        }
    }
    let d = rng.random_range(chosen.lo_us..chosen.upper(cap_us));
    (d, chosen.group)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IatModel {
    Poisson {
        mean_us: f64,
    },
    Uniform {
        lo_us: f64,
        hi_us: f64,
    },
    /// Replayed IATs; `scale` multiplies every entry.
    Trace {
        iats_us: Vec<Micros>,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl IatModel {
    pub fn trace(iats_us: Vec<Micros>) -> Self {
        IatModel::Trace {
            iats_us,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        match self {
            IatModel::Poisson { mean_us } => {
                if !(mean_us.is_finite() && *mean_us > 0.0) {
                    errs.push(ConfigError::new("iat.mean_us", "must be positive"));
                }
            }
            IatModel::Uniform { lo_us, hi_us } => {
                if !(lo_us.is_finite() && hi_us.is_finite() && *lo_us >= 0.0 && lo_us <= hi_us) {
                    errs.push(ConfigError::new(
                        "iat",
                        format!("uniform range [{lo_us}, {hi_us}] is invalid"),
                    ));
                }
            }
            IatModel::Trace { iats_us, scale } => {
                if iats_us.is_empty() {
                    errs.push(ConfigError::new("iat.iats_us", "trace must be non-empty"));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    errs.push(ConfigError::new("iat.scale", "must be positive"));
                }
            }
        }
        errs
    }

    pub fn mean_us(&self) -> f64 {
        match self {
            IatModel::Poisson { mean_us } => *mean_us,
            IatModel::Uniform { lo_us, hi_us } => (lo_us + hi_us) / 2.0,
            IatModel::Trace { iats_us, scale } => {
                if iats_us.is_empty() {
                    return 0.0;
                }
                scale * iats_us.iter().map(|&x| x as f64).sum::<f64>() / iats_us.len() as f64
            }
        }
    }

    /// Multiplies every inter-arrival time by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            IatModel::Poisson { mean_us } => IatModel::Poisson {
                mean_us: mean_us * factor,
            },
            IatModel::Uniform { lo_us, hi_us } => IatModel::Uniform {
                lo_us: lo_us * factor,
                hi_us: hi_us * factor,
            },
            IatModel::Trace { iats_us, scale } => IatModel::Trace {
                iats_us: iats_us.clone(),
                scale: scale * factor,
            },
        }
    }
}

/// Draws the `index`-th inter-arrival time. Trace models wrap around.
pub fn sample_iat<R: Rng + ?Sized>(rng: &mut R, model: &IatModel, index: usize) -> Micros {
    match model {
        IatModel::Poisson { mean_us } => {
            let exp = Exp::new(1.0 / mean_us).expect("validated poisson mean");
            exp.sample(rng).round() as Micros
        }
        IatModel::Uniform { lo_us, hi_us } => {
            if lo_us == hi_us {
                lo_us.round() as Micros
            } else {
                rng.random_range(*lo_us..=*hi_us).round() as Micros
            }
        }
        IatModel::Trace { iats_us, scale } => {
            let raw = iats_us[index % iats_us.len()];
            if *scale == 1.0 {
                raw
            } else {
                (raw as f64 * scale).round() as Micros
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoProfile {
    pub io_fraction: f64,
    pub io_lo_us: Micros,
    pub io_hi_us: Micros,
}

impl Default for IoProfile {
    fn default() -> Self {
        Self {
            io_fraction: 0.0,
            io_lo_us: 10 * MS,
            io_hi_us: 100 * MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    #[serde(default = "azure_buckets")]
    pub buckets: Vec<DurationBucket>,
    #[serde(default = "default_cap")]
    pub duration_cap_us: Micros,
    pub iat: IatModel,
    #[serde(default)]
    pub io: IoProfile,
    pub n_requests: usize,
    /// Target per-core utilisation; when set, IATs are rescaled to hit it.
    #[serde(default)]
    pub target_load: Option<f64>,
    pub cores: usize,
    pub seed: u64,
}

fn default_cap() -> Micros {
    DEFAULT_DURATION_CAP_US
}

impl WorkloadSpec {
    /// Azure duration table with Poisson arrivals, not yet scaled to a load.
    pub fn azure_poisson(n_requests: usize, cores: usize, target_load: f64, seed: u64) -> Self {
        Self {
            buckets: azure_buckets(),
            duration_cap_us: DEFAULT_DURATION_CAP_US,
            iat: IatModel::Poisson {
                mean_us: 100.0 * MS as f64,
            },
            io: IoProfile::default(),
            n_requests,
            target_load: Some(target_load),
            cores,
            seed,
        }
    }

    pub fn validate(&self) -> Vec<ConfigError> {
        let mut errs = validate_buckets(&self.buckets, self.duration_cap_us);
        errs.extend(self.iat.validate());
        let io = &self.io;
        if !(0.0..=1.0).contains(&io.io_fraction) || io.io_fraction.is_nan() {
            errs.push(ConfigError::new("io.io_fraction", "must lie in [0, 1]"));
        }
        if io.io_lo_us > io.io_hi_us {
            errs.push(ConfigError::new("io", "io_lo_us exceeds io_hi_us"));
        }
        if io.io_fraction > 0.0 && io.io_lo_us == 0 {
            errs.push(ConfigError::new("io.io_lo_us", "IO segments must be positive"));
        }
        if self.n_requests == 0 {
            errs.push(ConfigError::new("n_requests", "must be at least 1"));
        }
        if self.cores == 0 {
            errs.push(ConfigError::new("cores", "must be at least 1"));
        }
        if let Some(rho) = self.target_load {
            if !(rho.is_finite() && rho > 0.0) {
                errs.push(ConfigError::new("target_load", "must be positive"));
            }
        }
        errs
    }

    pub fn mean_service_us(&self) -> f64 {
        mean_duration_us(&self.buckets, self.duration_cap_us)
    }
}

/// Rescales the IAT model so that `rho = lambda / (c * mu)` equals the
/// target load, with `mu = 1 / E[duration]` taken from the bucket table.
pub fn scale_to_load(spec: &WorkloadSpec) -> Result<WorkloadSpec, ConfigError> {
    let rho = spec
        .target_load
        .ok_or_else(|| ConfigError::new("target_load", "no target load set"))?;
    if !(rho.is_finite() && rho > 0.0) {
        return Err(ConfigError::new("target_load", "must be positive"));
    }
    if spec.cores == 0 {
        return Err(ConfigError::new("cores", "must be at least 1"));
    }
    if let Some(e) = spec.iat.validate().into_iter().next() {
        return Err(e);
    }
    let current = spec.iat.mean_us();
    if current <= 0.0 {
        return Err(ConfigError::new("iat", "mean inter-arrival time is zero"));
    }
    let target = spec.mean_service_us() / (spec.cores as f64 * rho);
    let mut out = spec.clone();
    out.iat = spec.iat.scaled(target / current);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Cpu,
    Io,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub len_us: Micros,
}

impl Segment {
    pub fn cpu(len_us: Micros) -> Self {
        Self {
            kind: SegmentKind::Cpu,
            len_us,
        }
    }

    pub fn io(len_us: Micros) -> Self {
        Self {
            kind: SegmentKind::Io,
            len_us,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionRequest {
    pub id: usize,
    pub submit_time_us: Micros,
    pub segments: Vec<Segment>,
    pub total_cpu_us: Micros,
    pub group: u32,
}

impl FunctionRequest {
    pub fn new(id: usize, submit_time_us: Micros, segments: Vec<Segment>, group: u32) -> Self {
        let total_cpu_us = segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Cpu)
            .map(|s| s.len_us)
            .sum();
        Self {
            id,
            submit_time_us,
            segments,
            total_cpu_us,
            group,
        }
    }

    /// CPU-only request.
    pub fn cpu(id: usize, submit_time_us: Micros, cpu_us: Micros) -> Self {
        Self::new(id, submit_time_us, vec![Segment::cpu(cpu_us)], 0)
    }

    /// Wall time on a dedicated machine: every segment back to back.
    pub fn service_us(&self) -> Micros {
        self.segments.iter().map(|s| s.len_us).sum()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.segments.is_empty() {
            return Err(format!("request {} has no segments", self.id));
        }
        if self.segments.iter().any(|s| s.len_us == 0) {
            return Err(format!("request {} has an empty segment", self.id));
        }
        let cpu: Micros = self
            .segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Cpu)
            .map(|s| s.len_us)
            .sum();
        if cpu != self.total_cpu_us {
            return Err(format!(
                "request {} total_cpu_us {} != segment sum {cpu}",
                self.id, self.total_cpu_us
            ));
        }
        Ok(())
    }
}

/// Checks per-request invariants plus id/submit-time monotonicity.
pub fn validate_requests(reqs: &[FunctionRequest]) -> Result<(), String> {
    for (i, r) in reqs.iter().enumerate() {
        r.validate()?;
        if i > 0 {
            let prev = &reqs[i - 1];
            if r.id <= prev.id {
                return Err(format!("request ids not increasing at index {i}"));
            }
            if r.submit_time_us < prev.submit_time_us {
                return Err(format!("submit times decrease at request {}", r.id));
            }
        }
    }
    Ok(())
}

/// Generates `n_requests` requests. Submit times are the running sum of the
/// sampled IATs, so the first request arrives at `iat[0]`.
pub fn generate(spec: &WorkloadSpec) -> Result<Vec<FunctionRequest>, ConfigError> {
    if let Some(e) = spec.validate().into_iter().next() {
        return Err(e);
    }
    let mut rng = rng_from_seed(spec.seed);
    let mut now: Micros = 0;
    let mut out = Vec::with_capacity(spec.n_requests);
    for id in 0..spec.n_requests {
        now += sample_iat(&mut rng, &spec.iat, id);
        let (cpu, group) = sample_duration_unchecked(&mut rng, &spec.buckets, spec.duration_cap_us);
        let io = &spec.io;
        let mut segments = Vec::with_capacity(2);
        if io.io_fraction > 0.0 && rng.random::<f64>() < io.io_fraction {
            segments.push(Segment::io(rng.random_range(io.io_lo_us..=io.io_hi_us)));
        }
        segments.push(Segment::cpu(cpu));
        out.push(FunctionRequest::new(id, now, segments, group));
    }
    Ok(out)
}

/// Reads an IAT trace: one non-negative integer (microseconds) per line.
pub fn load_trace(path: impl AsRef<Path>) -> Result<IatModel, TraceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| TraceError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_trace(&text, path)
}

pub fn parse_trace(text: &str, path: &Path) -> Result<IatModel, TraceError> {
    let mut iats = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v = line.parse::<Micros>().map_err(|e| TraceError::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: format!("{line:?}: {e}"),
        })?;
        iats.push(v);
    }
    if iats.is_empty() {
        return Err(TraceError::Empty(path.to_owned()));
    }
    Ok(IatModel::trace(iats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn azure_table_is_valid() {
        let b = azure_buckets();
        assert!(validate_buckets(&b, DEFAULT_DURATION_CAP_US).is_empty());
        let published: f64 = b.iter().filter(|b| b.group != 5).map(|b| b.probability).sum();
        assert!((published - 0.956).abs() < 1e-12);
    }

    #[test]
    fn bucket_fraction_matches_table() {
        let b = azure_buckets();
        let mut rng = rng_from_seed(7);
        let n = 100_000;
        let short = (0..n)
            .filter(|_| sample_duration(&mut rng, &b, DEFAULT_DURATION_CAP_US).unwrap().0 < 50 * MS)
            .count();
        let frac = short as f64 / n as f64;
        assert!((frac - 0.406).abs() <= 0.01, "{frac}");
    }

    #[test]
    fn degenerate_bucket() {
        let b = vec![DurationBucket::bounded(100 * MS, 100 * MS + 1, 1.0, 1)];
        let mut rng = rng_from_seed(1);
        for _ in 0..100 {
            assert_eq!(sample_duration(&mut rng, &b, SEC).unwrap(), (100 * MS, 1));
        }
    }

    #[test]
    fn invalid_buckets_rejected() {
        let mut b = azure_buckets();
        b[0].probability = 0.396;
        let mut rng = rng_from_seed(1);
        let err = sample_duration(&mut rng, &b, SEC * 60).unwrap_err();
        assert_eq!(err.path, "buckets");

        let overlapping = vec![
            DurationBucket::bounded(1, 10, 0.5, 1),
            DurationBucket::bounded(5, 20, 0.5, 2),
        ];
        assert!(!validate_buckets(&overlapping, SEC).is_empty());
    }

    #[test]
    fn iat_trace_lookup_and_wrap() {
        let m = IatModel::trace(vec![5 * MS, 10 * MS, 15 * MS]);
        let mut rng = rng_from_seed(0);
        assert_eq!(sample_iat(&mut rng, &m, 1), 10 * MS);
        assert_eq!(sample_iat(&mut rng, &m, 4), 10 * MS);
    }

    #[test]
    fn iat_uniform_degenerate() {
        let m = IatModel::Uniform {
            lo_us: 4000.0,
            hi_us: 4000.0,
        };
        let mut rng = rng_from_seed(0);
        assert!((0..50).all(|i| sample_iat(&mut rng, &m, i) == 4 * MS));
    }

    #[test]
    fn poisson_mean() {
        let m = IatModel::Poisson {
            mean_us: 10_000.0,
        };
        let mut rng = rng_from_seed(3);
        let n = 100_000;
        let mean = (0..n).map(|i| sample_iat(&mut rng, &m, i) as f64).sum::<f64>() / n as f64;
        assert!((mean / 10_000.0 - 1.0).abs() < 0.02, "{mean}");
    }

    fn one_bucket(mean_ms: Micros) -> Vec<DurationBucket> {
        // integer uniform on [lo, hi) with mean exactly mean_ms
        vec![DurationBucket::bounded(1, 2 * mean_ms * MS, 1.0, 1)]
    }

    #[test]
    fn scale_to_load_matches_rearranged_formula() {
        let mut spec = WorkloadSpec::azure_poisson(10, 12, 1.0, 0);
        spec.buckets = one_bucket(1000);
        let mean_svc = spec.mean_service_us();
        assert_eq!(mean_svc, 1_000_000.0);
        let full = scale_to_load(&spec).unwrap();
        assert!((full.iat.mean_us() - 1e6 / 12.0).abs() < 1e-6);
        spec.target_load = Some(0.5);
        let half = scale_to_load(&spec).unwrap();
        assert!((half.iat.mean_us() - 1e6 / 6.0).abs() < 1e-6);
        spec.target_load = Some(0.0);
        assert!(scale_to_load(&spec).is_err());
    }

    #[test]
    fn scaling_preserves_trace_shape() {
        let mut spec = WorkloadSpec::azure_poisson(10, 4, 0.7, 0);
        spec.iat = IatModel::trace(vec![1000, 3000, 8000]);
        let scaled = scale_to_load(&spec).unwrap();
        match scaled.iat {
            IatModel::Trace { iats_us, scale } => {
                assert_eq!(iats_us, vec![1000, 3000, 8000]);
                assert!(scale > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn generate_cumulative_submit_times() {
        let mut spec = WorkloadSpec::azure_poisson(3, 1, 1.0, 9);
        spec.iat = IatModel::trace(vec![0, 10 * MS, 10 * MS]);
        let reqs = generate(&spec).unwrap();
        let t: Vec<_> = reqs.iter().map(|r| r.submit_time_us).collect();
        assert_eq!(t, vec![0, 10 * MS, 20 * MS]);
        assert!(reqs.iter().all(|r| r.segments.len() == 1));
        validate_requests(&reqs).unwrap();
    }

    #[test]
    fn generate_io_prefix() {
        let mut spec = WorkloadSpec::azure_poisson(500, 4, 1.0, 11);
        spec.io.io_fraction = 1.0;
        let reqs = generate(&spec).unwrap();
        for r in &reqs {
            assert_eq!(r.segments.len(), 2);
            assert_eq!(r.segments[0].kind, SegmentKind::Io);
            assert!((10 * MS..=100 * MS).contains(&r.segments[0].len_us));
        }
    }

    #[test]
    fn generate_is_deterministic() {
        let spec = scale_to_load(&WorkloadSpec::azure_poisson(2000, 12, 0.8, 42)).unwrap();
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let mut other = spec.clone();
        other.seed = 43;
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn trace_parse() {
        let p = Path::new("t.txt");
        assert_eq!(
            parse_trace("5000\n10000\n", p).unwrap(),
            IatModel::trace(vec![5 * MS, 10 * MS])
        );
        assert!(matches!(parse_trace("", p), Err(TraceError::Empty(_))));
        match parse_trace("1\n2\nx\n", p) {
            Err(TraceError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_trace("-4\n", p), Err(TraceError::Parse { line: 1, .. })));
    }

    #[test]
    fn missing_trace_file() {
        assert!(matches!(
            load_trace("/nonexistent/trace.txt"),
            Err(TraceError::Io { .. })
        ));
    }
}
