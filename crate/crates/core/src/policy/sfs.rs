//! Two-level FILTER + CFS scheduling.
//!
//! Requests enter a global FIFO queue. One worker per core fetches the head
//! whenever it is free and runs it at a static priority above CFS for at
//! most `S`, the global time slice. A request still running when its slice
//! runs out is demoted to the CFS model for the rest of its life. `S` is
//! the mean of the last `N` inter-arrival gaps times the core count,
//! recomputed after every `N` arrivals.
//!
//! A worker notices that its task blocked on IO only at its next status
//! poll; the slice clock keeps running until then. The unused budget is
//! remembered and the task rejoins the global queue tail once the IO is
//! done. Meanwhile CFS tasks may use the core.
//!
//! When the head of the queue has waited at least `O * S`, the worker hands
//! it straight to CFS instead (overload bypass) and keeps fetching.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, SimError};
use crate::policy::cfs::{CfsConfig, CfsModel};
use crate::sim::{CoreId, Policy, PolicyReport, PreemptReason, QueueDelaySample, SchedClass, Sys, TaskId, TaskStatus};
use crate::Micros;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IoDetection {
    /// Status polled every `poll_interval_us`, phase-aligned to dispatch.
    Poll,
    /// Blocking noticed the instant it happens.
    Instant,
    /// Never noticed: the worker stays attached until completion or slice expiry.
    Oblivious,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverloadScope {
    PerWorker,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_boost_period")]
    pub period_us: Micros,
    /// Applied to `S` for tasks boosted more than once.
    #[serde(default = "default_boost_factor")]
    pub boosted_slice_factor: f64,
}

fn default_boost_period() -> Micros {
    10_000
}

fn default_boost_factor() -> f64 {
    0.5
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            period_us: default_boost_period(),
            boosted_slice_factor: default_boost_factor(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfsConfig {
    /// Sliding window length `N`.
    #[serde(default = "default_window")]
    pub window: usize,
    /// Overload multiplier `O`.
    #[serde(default = "default_overload")]
    pub overload_multiplier: u32,
    #[serde(default = "default_true")]
    pub hybrid: bool,
    #[serde(default = "default_scope")]
    pub overload_scope: OverloadScope,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_slice_us: Micros,
    /// Disables adaptation and uses this slice throughout.
    #[serde(default)]
    pub fixed_slice_us: Option<Micros>,
    #[serde(default = "default_detection")]
    pub io_detection: IoDetection,
    #[serde(default = "default_poll")]
    pub poll_interval_us: Micros,
    #[serde(default)]
    pub boost: BoostConfig,
}

fn default_window() -> usize {
    100
}
fn default_overload() -> u32 {
    3
}
fn default_true() -> bool {
    true
}
fn default_scope() -> OverloadScope {
    OverloadScope::PerWorker
}
fn default_bootstrap() -> Micros {
    100_000
}
fn default_detection() -> IoDetection {
    IoDetection::Poll
}
fn default_poll() -> Micros {
    4_000
}

impl Default for SfsConfig {
    fn default() -> Self {
        Self {
            window: default_window(),
            overload_multiplier: default_overload(),
            hybrid: true,
            overload_scope: default_scope(),
            bootstrap_slice_us: default_bootstrap(),
            fixed_slice_us: None,
            io_detection: default_detection(),
            poll_interval_us: default_poll(),
            boost: BoostConfig::default(),
        }
    }
}

impl SfsConfig {
    pub fn validate(&self, path: &str) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        let mut bad = |key: &str, msg: &str| errs.push(ConfigError::new(format!("{path}.{key}"), msg));
        if self.window == 0 {
            bad("window", "slice window N must be at least 1");
        }
        if self.overload_multiplier == 0 {
            bad("overload_multiplier", "must be at least 1");
        }
        if self.bootstrap_slice_us == 0 {
            bad("bootstrap_slice_us", "must be positive");
        }
        if self.fixed_slice_us == Some(0) {
            bad("fixed_slice_us", "must be positive");
        }
        if self.poll_interval_us == 0 {
            bad("poll_interval_us", "must be positive");
        }
        if self.boost.enabled && self.boost.period_us == 0 {
            bad("boost.period_us", "must be positive when boosting is enabled");
        }
        let f = self.boost.boosted_slice_factor;
        if !(f > 0.0 && f <= 1.0) {
            bad("boost.boosted_slice_factor", "must lie in (0, 1]");
        }
        errs
    }
}

/// Adapts the global slice `S` from the inter-arrival gaps of the last `N`
/// enqueued requests: `S = floor(mean gap) * cores`, recomputed once per
/// `N` new gaps.
#[derive(Debug, Clone)]
pub struct TimeSliceController {
    window: usize,
    cores: usize,
    samples: VecDeque<Micros>,
    last_enqueue: Option<Micros>,
    since_recompute: usize,
    current: Micros,
    fixed: bool,
    history: Vec<(Micros, Micros)>,
}

impl TimeSliceController {
    pub fn adaptive(window: usize, cores: usize, bootstrap_us: Micros) -> Self {
        Self {
            window: window.max(1),
            cores,
            samples: VecDeque::with_capacity(window),
            last_enqueue: None,
            since_recompute: 0,
            current: bootstrap_us.max(1),
            fixed: false,
            history: vec![(0, bootstrap_us.max(1))],
        }
    }

    pub fn fixed(slice_us: Micros) -> Self {
        let mut c = Self::adaptive(1, 1, slice_us);
        c.fixed = true;
        c
    }

    pub fn current(&self) -> Micros {
        self.current
    }

    pub fn history(&self) -> &[(Micros, Micros)] {
        &self.history
    }

    /// Records an enqueue at `now`; returns the new `S` when a window completes.
    pub fn on_enqueue(&mut self, now: Micros) -> Option<Micros> {
        let prev = self.last_enqueue.replace(now);
        if self.fixed {
            return None;
        }
        let gap = now - prev?;
        if self.samples.len() == self.window {
            self.samples.pop_front();
        }
        self.samples.push_back(gap);
        self.since_recompute += 1;
        if self.since_recompute < self.window {
            return None;
        }
        self.since_recompute = 0;
        Some(self.recompute(now))
    }

    fn recompute(&mut self, now: Micros) -> Micros {
        let sum: Micros = self.samples.iter().sum();
        let mean = sum / self.samples.len() as Micros;
        // S must stay positive even when a burst makes every gap zero.
        self.current = (mean * self.cores as Micros).max(1);
        self.history.push((now, self.current));
        self.current
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Worker {
    Idle,
    /// Holding a runnable FILTER task that runs on this worker's core.
    Active {
        task: TaskId,
        deadline: Micros,
        dispatched_at: Micros,
    },
    /// Holding a FILTER task that blocked on IO but has not been noticed yet.
    Blocked {
        task: TaskId,
        deadline: Micros,
        dispatched_at: Micros,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Return {
    /// Rejoin the global queue with this much slice left.
    Global(Micros),
    Cfs,
    Worker(CoreId),
}

#[derive(Debug, Clone, Copy, Default)]
struct TaskInfo {
    boosts: u32,
    demoted_at: Option<Micros>,
    on_wake: Option<Return>,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    task: TaskId,
    enqueued_at: Micros,
    hint: Option<Micros>,
}

const TAG_BOOST: u64 = 1 << 63;

fn worker_tag(core: CoreId, gen: u64) -> u64 {
    ((gen & 0xFFFF_FFFF) << 24) | core as u64
}

fn untag(tag: u64) -> (CoreId, u64) {
    ((tag & 0xFF_FFFF) as CoreId, tag >> 24)
}

#[derive(Debug, Clone)]
pub struct Sfs {
    cfg: SfsConfig,
    queue: VecDeque<Entry>,
    slice: TimeSliceController,
    workers: Vec<Worker>,
    /// Invalidates stale poll and deadline timers.
    worker_gen: Vec<u64>,
    bypassing: Vec<bool>,
    cfs: CfsModel,
    info: Vec<TaskInfo>,
    /// CFS-pool tasks ordered by demotion time (boost candidates).
    demoted: BTreeSet<(Micros, TaskId)>,
    boost_armed: bool,
    report: PolicyReport,
}

impl Sfs {
    pub fn new(cfg: SfsConfig, cfs: CfsConfig, cores: usize) -> Self {
        let slice = match cfg.fixed_slice_us {
            Some(s) => TimeSliceController::fixed(s),
            None => TimeSliceController::adaptive(cfg.window, cores, cfg.bootstrap_slice_us),
        };
        let bypass_slots = match cfg.overload_scope {
            OverloadScope::PerWorker => cores,
            OverloadScope::Global => 1,
        };
        Self {
            cfs: CfsModel::new(cfs, cores),
            queue: VecDeque::new(),
            slice,
            workers: vec![Worker::Idle; cores],
            worker_gen: vec![0; cores],
            bypassing: vec![false; bypass_slots],
            info: Vec::new(),
            demoted: BTreeSet::new(),
            boost_armed: false,
            report: PolicyReport::default(),
            cfg,
        }
    }

    pub fn current_slice(&self) -> Micros {
        self.slice.current()
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    fn info(&mut self, task: TaskId) -> &mut TaskInfo {
        if self.info.len() <= task {
            self.info.resize(task + 1, TaskInfo::default());
        }
        &mut self.info[task]
    }

    fn bypass_slot(&mut self, core: CoreId) -> &mut bool {
        match self.cfg.overload_scope {
            OverloadScope::PerWorker => &mut self.bypassing[core],
            OverloadScope::Global => &mut self.bypassing[0],
        }
    }

    /// Load seen by CFS placement: a core busy with a FILTER task counts as one more runnable.
    fn filter_load(&self) -> Vec<usize> {
        self.workers
            .iter()
            .map(|w| matches!(w, Worker::Active { .. }) as usize)
            .collect()
    }

    fn demote_to_cfs(&mut self, sys: &mut Sys, task: TaskId) -> Result<(), SimError> {
        let now = sys.now();
        self.info(task).demoted_at = Some(now);
        self.demoted.insert((now, task));
        let load = self.filter_load();
        self.cfs.enqueue(sys, task, &load)?;
        Ok(())
    }

    fn forget_demoted(&mut self, task: TaskId) {
        if let Some(at) = self.info.get(task).and_then(|i| i.demoted_at) {
            self.demoted.remove(&(at, task));
        }
    }

    fn arm_boost(&mut self, sys: &mut Sys) {
        if self.cfg.boost.enabled && !self.boost_armed {
            self.boost_armed = true;
            let at = sys.now() + self.cfg.boost.period_us;
            sys.set_timer(at, TAG_BOOST);
        }
    }

    /// Demote a FILTER task whose worker gave up on it.
    fn demote_blocked(&mut self, core: CoreId, task: TaskId) {
        self.workers[core] = Worker::Idle;
        self.worker_gen[core] += 1;
        self.info(task).on_wake = Some(Return::Cfs);
        self.report.demotions += 1;
    }

    fn fetch(&mut self, sys: &mut Sys, core: CoreId) -> Result<(), SimError> {
        let now = sys.now();
        while let Some(entry) = self.queue.pop_front() {
            let delay = now - entry.enqueued_at;
            let s = self.slice.current();
            let over = self.cfg.hybrid
                && delay >= (self.cfg.overload_multiplier as Micros).saturating_mul(s);
            *self.bypass_slot(core) = over;
            self.report.queue_delays.push(QueueDelaySample {
                time_us: now,
                task: entry.task,
                delay_us: delay,
                bypassed: over,
            });
            sys.set_initial_queue_delay(entry.task, delay)?;
            if over {
                self.report.bypasses += 1;
                self.demote_to_cfs(sys, entry.task)?;
                self.arm_boost(sys);
                continue;
            }
            let boosts = self.info(entry.task).boosts;
            let budget = match entry.hint {
                Some(h) => h,
                None if boosts > 1 => {
                    ((s as f64 * self.cfg.boost.boosted_slice_factor) as Micros).max(1)
                }
                None => s,
            };
            sys.set_class(entry.task, SchedClass::Filter)?;
            self.workers[core] = Worker::Active {
                task: entry.task,
                deadline: now + budget,
                dispatched_at: now,
            };
            self.worker_gen[core] += 1;
            return Ok(());
        }
        Ok(())
    }
}

impl Policy for Sfs {
    fn name(&self) -> String {
        "sfs".into()
    }

    fn on_arrival(&mut self, sys: &mut Sys, task: TaskId) -> Result<(), SimError> {
        let now = sys.now();
        if self.slice.on_enqueue(now).is_some() {
            self.report.slice_timeline = self.slice.history().to_vec();
        }
        self.info(task);
        self.queue.push_back(Entry {
            task,
            enqueued_at: now,
            hint: None,
        });
        Ok(())
    }

    fn on_wakeup(&mut self, sys: &mut Sys, task: TaskId) -> Result<(), SimError> {
        match self.info(task).on_wake.take() {
            Some(Return::Worker(core)) => {
                if let Worker::Blocked {
                    task: t,
                    deadline,
                    dispatched_at,
                } = self.workers[core]
                {
                    if t == task {
                        self.workers[core] = Worker::Active {
                            task,
                            deadline,
                            dispatched_at,
                        };
                        self.worker_gen[core] += 1;
                        // The deadline timer was invalidated; re-arm via the engine slice.
                        return Ok(());
                    }
                }
                Err(SimError::Policy(format!("worker {core} lost task {task}")))
            }
            Some(Return::Global(hint)) => {
                self.queue.push_back(Entry {
                    task,
                    enqueued_at: sys.now(),
                    hint: Some(hint),
                });
                Ok(())
            }
            Some(Return::Cfs) | None => {
                if sys.task(task)?.class == Some(SchedClass::CfsPool) {
                    let load = self.filter_load();
                    self.cfs.enqueue(sys, task, &load)?;
                    if let Some(at) = self.info(task).demoted_at {
                        self.demoted.insert((at, task));
                    }
                    Ok(())
                } else {
                    self.demote_to_cfs(sys, task)
                }
            }
        }
    }

    fn on_block(&mut self, sys: &mut Sys, task: TaskId, core: CoreId) -> Result<(), SimError> {
        let now = sys.now();
        match self.workers[core] {
            Worker::Active {
                task: t,
                deadline,
                dispatched_at,
            } if t == task => {
                self.worker_gen[core] += 1;
                let gen = self.worker_gen[core];
                let detect_at = match self.cfg.io_detection {
                    IoDetection::Instant => now,
                    IoDetection::Poll => {
                        let iv = self.cfg.poll_interval_us;
                        let k = (now - dispatched_at).div_ceil(iv).max(1);
                        dispatched_at + k * iv
                    }
                    IoDetection::Oblivious => Micros::MAX,
                };
                if detect_at == now && now < deadline {
                    self.workers[core] = Worker::Idle;
                    self.info(task).on_wake = Some(Return::Global(deadline - now));
                    return Ok(());
                }
                self.workers[core] = Worker::Blocked {
                    task,
                    deadline,
                    dispatched_at,
                };
                self.info(task).on_wake = Some(Return::Worker(core));
                sys.set_timer(detect_at.min(deadline), worker_tag(core, gen));
                Ok(())
            }
            _ => {
                // A CFS-pool task: it returns to CFS on wakeup.
                if self.cfs.runqueue(core).current() == Some(task) {
                    self.cfs.clear_current(sys, core)?;
                }
                self.forget_demoted(task);
                self.info(task).on_wake = Some(Return::Cfs);
                Ok(())
            }
        }
    }

    fn on_complete(
        &mut self,
        sys: &mut Sys,
        task: TaskId,
        core: Option<CoreId>,
    ) -> Result<(), SimError> {
        for (c, w) in self.workers.iter_mut().enumerate() {
            match *w {
                Worker::Active { task: t, .. } | Worker::Blocked { task: t, .. } if t == task => {
                    *w = Worker::Idle;
                    self.worker_gen[c] += 1;
                }
                _ => {}
            }
        }
        if let Some(core) = core {
            if self.cfs.runqueue(core).current() == Some(task) {
                self.cfs.clear_current(sys, core)?;
            }
        }
        self.forget_demoted(task);
        Ok(())
    }

    fn on_slice_expiry(&mut self, sys: &mut Sys, core: CoreId, task: TaskId) -> Result<(), SimError> {
        match sys.task(task)?.class {
            Some(SchedClass::Filter) => {
                if !matches!(self.workers[core], Worker::Active { task: t, .. } if t == task) {
                    return Err(SimError::Policy(format!(
                        "FILTER expiry for task {task} not held by worker {core}"
                    )));
                }
                sys.preempt(core, PreemptReason::SliceExpired)?;
                self.workers[core] = Worker::Idle;
                self.worker_gen[core] += 1;
                self.report.demotions += 1;
                self.demote_to_cfs(sys, task)?;
                self.arm_boost(sys);
                Ok(())
            }
            Some(SchedClass::CfsPool) => {
                sys.preempt(core, PreemptReason::SliceExpired)?;
                self.cfs.requeue_current(sys, core)?;
                Ok(())
            }
            other => Err(SimError::Policy(format!(
                "slice expiry for task {task} in class {other:?}"
            ))),
        }
    }

    fn on_timer(&mut self, sys: &mut Sys, tag: u64) -> Result<(), SimError> {
        let now = sys.now();
        if tag == TAG_BOOST {
            self.boost_armed = false;
            if let Some(&(at, task)) = self.demoted.iter().find(|&&(_, t)| {
                sys.task(t).map(|x| x.status != TaskStatus::BlockedIo).unwrap_or(false)
            }) {
                self.demoted.remove(&(at, task));
                if let Some(core) = self.cfs.remove(sys, task)? {
                    if sys.running(core) == Some(task) {
                        sys.preempt(core, PreemptReason::PolicyDemand)?;
                    }
                }
                let info = self.info(task);
                info.boosts += 1;
                info.demoted_at = None;
                self.queue.push_back(Entry {
                    task,
                    enqueued_at: now,
                    hint: None,
                });
                self.report.boosts += 1;
            }
            if sys.unfinished() > 0 && !self.demoted.is_empty() {
                self.arm_boost(sys);
            }
            return Ok(());
        }
        let (core, gen) = untag(tag);
        if self.worker_gen.get(core).map(|g| g & 0xFFFF_FFFF) != Some(gen) {
            return Ok(());
        }
        if let Worker::Blocked { task, deadline, .. } = self.workers[core] {
            if now >= deadline {
                sys.set_class(task, SchedClass::CfsPool)?;
                self.demote_blocked(core, task);
                self.info(task).demoted_at = Some(now);
                self.arm_boost(sys);
            } else {
                self.workers[core] = Worker::Idle;
                self.worker_gen[core] += 1;
                self.info(task).on_wake = Some(Return::Global(deadline - now));
            }
        }
        Ok(())
    }

    fn schedule(&mut self, sys: &mut Sys) -> Result<(), SimError> {
        let n = self.workers.len();
        for core in 0..n {
            if self.workers[core] == Worker::Idle && !self.queue.is_empty() {
                self.fetch(sys, core)?;
            }
        }
        // FILTER tasks take their worker's core, displacing CFS.
        for core in 0..n {
            let Worker::Active { task, deadline, .. } = self.workers[core] else {
                continue;
            };
            match sys.running(core) {
                Some(t) if t == task => {}
                Some(_) => {
                    sys.preempt(core, PreemptReason::HigherPriority)?;
                    if let Some(displaced) = self.cfs.clear_current(sys, core)? {
                        let mut load = self.filter_load();
                        // keep it off this core while the FILTER task runs
                        load[core] += usize::MAX / 2;
                        self.cfs.enqueue(sys, displaced, &load)?;
                    }
                    sys.dispatch(core, task, Some(deadline))?;
                }
                None => sys.dispatch(core, task, Some(deadline))?,
            }
        }
        let workers = &self.workers;
        self.cfs
            .fill(sys, |core| !matches!(workers[core], Worker::Active { .. }))
    }

    fn waiting_runnable(&self, _sys: &Sys) -> usize {
        let idle_worker = self.workers.contains(&Worker::Idle);
        self.cfs.total_waiting() + if idle_worker { self.queue.len() } else { 0 }
    }

    fn report(&self) -> PolicyReport {
        let mut r = self.report.clone();
        r.slice_timeline = self.slice.history().to_vec();
        r
    }
}
