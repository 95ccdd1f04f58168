//! Discrete-event engine.
//!
//! The engine owns the clock, the per-task execution state and the cores.
//! A [`Policy`] receives callbacks for every state change and decides what
//! runs where through the [`Sys`] handle. Events with equal timestamps are
//! processed in creation order; after the last event of a timestamp the
//! policy gets one or more `schedule` calls, pending stops are resolved into
//! context switches and work conservation is checked.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::metrics::RequestRecord;
use crate::workload::{FunctionRequest, Segment, SegmentKind};
use crate::Micros;

pub type TaskId = usize;
pub type CoreId = usize;

/// Weight of a nice-0 task; all tasks use it unless a policy says otherwise.
pub const BASE_WEIGHT: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedClass {
    Filter,
    CfsPool,
    RtFifo,
    RtRr,
    Srtf,
    Ideal,
}

impl SchedClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SchedClass::Filter => "filter",
            SchedClass::CfsPool => "cfs",
            SchedClass::RtFifo => "fifo",
            SchedClass::RtRr => "rr",
            SchedClass::Srtf => "srtf",
            SchedClass::Ideal => "ideal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskStatus {
    Pending,
    Queued,
    Running,
    BlockedIo,
    Done,
}

impl TaskStatus {
    fn as_str(self) -> &'static str {
        match self {
            TaskStatus::Pending => "pending",
            TaskStatus::Queued => "queued",
            TaskStatus::Running => "running",
            TaskStatus::BlockedIo => "blocked_io",
            TaskStatus::Done => "done",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreemptReason {
    SliceExpired,
    HigherPriority,
    PolicyDemand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimelineTag {
    Start,
    SliceExpired,
    HigherPriority,
    PolicyDemand,
    IoBlock,
    Done,
}

impl TimelineTag {
    pub fn as_str(self) -> &'static str {
        match self {
            TimelineTag::Start => "start",
            TimelineTag::SliceExpired => "slice_expired",
            TimelineTag::HigherPriority => "higher_priority",
            TimelineTag::PolicyDemand => "policy_demand",
            TimelineTag::IoBlock => "io_block",
            TimelineTag::Done => "done",
        }
    }

    fn from_reason(r: PreemptReason) -> Self {
        match r {
            PreemptReason::SliceExpired => TimelineTag::SliceExpired,
            PreemptReason::HigherPriority => TimelineTag::HigherPriority,
            PreemptReason::PolicyDemand => TimelineTag::PolicyDemand,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TimelineEntry {
    pub time_us: Micros,
    pub core: CoreId,
    pub task: TaskId,
    pub tag: TimelineTag,
}

#[derive(Debug, Clone)]
pub struct Task {
    pub id: TaskId,
    pub group: u32,
    pub arrival_us: Micros,
    pub segments: Vec<Segment>,
    pub seg_index: usize,
    pub seg_remaining_us: Micros,
    /// CPU work left, excluding progress of an in-flight run.
    pub remaining_cpu_us: Micros,
    pub class: Option<SchedClass>,
    pub class_history: Vec<SchedClass>,
    pub vruntime_us: Micros,
    pub weight: u64,
    pub status: TaskStatus,
    pub core: Option<CoreId>,
    pub n_context_switches: u32,
    pub n_io_blocks: u32,
    pub first_start_us: Option<Micros>,
    pub completion_us: Option<Micros>,
    pub enqueue_times: Vec<Micros>,
    pub cpu_used_us: Micros,
    pub initial_queue_delay_us: Option<Micros>,
}

impl Task {
    fn new(id: TaskId, req: &FunctionRequest) -> Self {
        Self {
            id,
            group: req.group,
            arrival_us: req.submit_time_us,
            segments: req.segments.clone(),
            seg_index: 0,
            seg_remaining_us: req.segments[0].len_us,
            remaining_cpu_us: req.total_cpu_us,
            class: None,
            class_history: Vec::new(),
            vruntime_us: 0,
            weight: BASE_WEIGHT,
            status: TaskStatus::Pending,
            core: None,
            n_context_switches: 0,
            n_io_blocks: 0,
            first_start_us: None,
            completion_us: None,
            enqueue_times: Vec::new(),
            cpu_used_us: 0,
            initial_queue_delay_us: None,
        }
    }

    fn current_kind(&self) -> SegmentKind {
        self.segments[self.seg_index].kind
    }

    pub fn service_us(&self) -> Micros {
        self.segments.iter().map(|s| s.len_us).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoreState {
    pub id: CoreId,
    pub running: Option<TaskId>,
    pub busy_us: Micros,
    pub idle_us: Micros,
    pub overhead_us: Micros,
    #[serde(skip)]
    progress_from: Micros,
    #[serde(skip)]
    slice_end: Option<Micros>,
    #[serde(skip)]
    token: u64,
    #[serde(skip)]
    idle_since: Option<Micros>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Arrival(TaskId),
    SegmentDone { core: CoreId, token: u64 },
    SliceExpiry { core: CoreId, token: u64 },
    IoDone(TaskId),
    Timer(u64),
}

#[derive(Debug, Clone, Copy)]
enum StopKind {
    Preempt(PreemptReason),
    Block,
    Done,
}

#[derive(Debug, Clone, Copy)]
struct PendingStop {
    core: CoreId,
    task: TaskId,
    kind: StopKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    /// Fixed cost charged to a core before the task that follows a context switch makes progress.
    #[serde(default)]
    pub switch_overhead_us: Micros,
    #[serde(default)]
    pub record_timeline: bool,
    #[serde(default = "yes")]
    pub check_work_conservation: bool,
}

fn yes() -> bool {
    true
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            switch_overhead_us: 0,
            record_timeline: false,
            check_work_conservation: true,
        }
    }
}

/// The policy's view of the machine.
pub struct Sys {
    now: Micros,
    tasks: Vec<Task>,
    cores: Vec<CoreState>,
    heap: BinaryHeap<Reverse<(Micros, u64, EventKind)>>,
    seq: u64,
    pending: Vec<PendingStop>,
    timeline: Vec<TimelineEntry>,
    cfg: EngineConfig,
    idle_cores: usize,
    done: usize,
}

impl Sys {
    pub fn now(&self) -> Micros {
        self.now
    }

    pub fn n_cores(&self) -> usize {
        self.cores.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn unfinished(&self) -> usize {
        self.tasks.len() - self.done
    }

    pub fn idle_core_count(&self) -> usize {
        self.idle_cores
    }

    pub fn task(&self, id: TaskId) -> Result<&Task, SimError> {
        self.tasks.get(id).ok_or(SimError::UnknownTask(id))
    }

    fn task_mut(&mut self, id: TaskId) -> Result<&mut Task, SimError> {
        self.tasks.get_mut(id).ok_or(SimError::UnknownTask(id))
    }

    fn core(&self, id: CoreId) -> Result<&CoreState, SimError> {
        self.cores.get(id).ok_or(SimError::UnknownCore(id))
    }

    pub fn running(&self, core: CoreId) -> Option<TaskId> {
        self.cores.get(core).and_then(|c| c.running)
    }

    pub fn is_idle(&self, core: CoreId) -> bool {
        self.running(core).is_none()
    }

    pub fn set_class(&mut self, id: TaskId, class: SchedClass) -> Result<(), SimError> {
        let t = self.task_mut(id)?;
        if t.class != Some(class) {
            t.class = Some(class);
            t.class_history.push(class);
        }
        Ok(())
    }

    /// Lifts a task's vruntime to at least `floor`; vruntime never decreases.
    pub fn raise_vruntime(&mut self, id: TaskId, floor: Micros) -> Result<Micros, SimError> {
        let t = self.task_mut(id)?;
        t.vruntime_us = t.vruntime_us.max(floor);
        Ok(t.vruntime_us)
    }

    pub fn set_initial_queue_delay(&mut self, id: TaskId, delay_us: Micros) -> Result<(), SimError> {
        let t = self.task_mut(id)?;
        t.initial_queue_delay_us.get_or_insert(delay_us);
        Ok(())
    }

    fn in_flight(&self, id: TaskId) -> Micros {
        let t = &self.tasks[id];
        match (t.status, t.core) {
            (TaskStatus::Running, Some(c)) if t.current_kind() == SegmentKind::Cpu => {
                self.now.saturating_sub(self.cores[c].progress_from)
            }
            _ => 0,
        }
    }

    /// CPU work left including progress made by a running task since it was last accounted.
    pub fn remaining_cpu(&self, id: TaskId) -> Result<Micros, SimError> {
        let t = self.task(id)?;
        Ok(t.remaining_cpu_us - self.in_flight(id))
    }

    pub fn live_vruntime(&self, id: TaskId) -> Result<Micros, SimError> {
        let t = self.task(id)?;
        Ok(t.vruntime_us + self.in_flight(id) * BASE_WEIGHT / t.weight)
    }

    pub fn set_timer(&mut self, at: Micros, tag: u64) {
        self.push(at.max(self.now), EventKind::Timer(tag));
    }

    fn push(&mut self, at: Micros, kind: EventKind) {
        self.heap.push(Reverse((at, self.seq, kind)));
        self.seq += 1;
    }

    /// Starts `task` on an idle `core`. `slice_end` is an absolute deadline
    /// at which the policy receives `on_slice_expiry`.
    pub fn dispatch(
        &mut self,
        core: CoreId,
        task: TaskId,
        slice_end: Option<Micros>,
    ) -> Result<(), SimError> {
        if let Some(other) = self.core(core)?.running {
            return Err(SimError::CoreBusy { core, task: other });
        }
        let status = self.task(task)?.status;
        if status != TaskStatus::Queued {
            return Err(SimError::NotRunnable {
                task,
                status: status.as_str(),
            });
        }
        let now = self.now;
        let mut continuation = false;
        let mut switched = false;
        if let Some(pos) = self.pending.iter().rposition(|p| p.core == core) {
            let p = self.pending[pos];
            if p.task == task && matches!(p.kind, StopKind::Preempt(_)) {
                self.pending.remove(pos);
                continuation = true;
                if self.cfg.record_timeline {
                    if let Some(i) = self
                        .timeline
                        .iter()
                        .rposition(|e| e.core == core && e.task == task && e.time_us == now)
                    {
                        self.timeline.remove(i);
                    }
                }
            } else if !matches!(p.kind, StopKind::Done) {
                switched = true;
            }
        }
        let overhead = if switched { self.cfg.switch_overhead_us } else { 0 };

        let t = &mut self.tasks[task];
        t.status = TaskStatus::Running;
        t.core = Some(core);
        t.first_start_us.get_or_insert(now);
        let arrival = t.arrival_us;
        t.initial_queue_delay_us.get_or_insert(now - arrival);
        let seg_kind = t.current_kind();
        let seg_remaining = t.seg_remaining_us;

        let c = &mut self.cores[core];
        if let Some(since) = c.idle_since.take() {
            c.idle_us += now - since;
        }
        c.running = Some(task);
        c.progress_from = now + overhead;
        c.overhead_us += overhead;
        c.slice_end = slice_end;
        c.token += 1;
        self.idle_cores -= 1;

        if !continuation && self.cfg.record_timeline {
            self.timeline.push(TimelineEntry {
                time_us: now,
                core,
                task,
                tag: TimelineTag::Start,
            });
        }
        match seg_kind {
            SegmentKind::Io => {
                let (at, token) = (self.cores[core].progress_from, self.cores[core].token);
                self.push(at, EventKind::SegmentDone { core, token });
            }
            SegmentKind::Cpu => self.arm(core, seg_remaining),
        }
        Ok(())
    }

    fn arm(&mut self, core: CoreId, seg_remaining: Micros) {
        let c = &self.cores[core];
        let seg_end = c.progress_from + seg_remaining;
        let token = c.token;
        match c.slice_end {
            Some(end) if end < seg_end => {
                let at = end.max(self.now);
                self.push(at, EventKind::SliceExpiry { core, token });
            }
            _ => self.push(seg_end, EventKind::SegmentDone { core, token }),
        }
    }

    /// Replaces the slice deadline of the task running on `core`.
    pub fn set_slice(&mut self, core: CoreId, slice_end: Option<Micros>) -> Result<(), SimError> {
        let task = self.core(core)?.running.ok_or(SimError::CoreIdle(core))?;
        self.sync(core)?;
        let c = &mut self.cores[core];
        c.slice_end = slice_end;
        c.token += 1;
        if self.tasks[task].current_kind() == SegmentKind::Cpu {
            let rem = self.tasks[task].seg_remaining_us;
            self.arm(core, rem);
        }
        Ok(())
    }

    /// Brings the accounting of the task on `core` up to the current time.
    pub fn sync(&mut self, core: CoreId) -> Result<(), SimError> {
        let Some(task) = self.core(core)?.running else {
            return Ok(());
        };
        if self.tasks[task].current_kind() != SegmentKind::Cpu {
            return Ok(());
        }
        let from = self.cores[core].progress_from;
        if self.now > from {
            self.account(task, core, self.now - from)?;
            self.cores[core].progress_from = self.now;
        }
        Ok(())
    }

    fn account(&mut self, task: TaskId, core: CoreId, delta: Micros) -> Result<(), SimError> {
        let t = &mut self.tasks[task];
        if delta > t.seg_remaining_us {
            return Err(SimError::Overrun {
                task,
                delta_us: delta,
                remaining_us: t.seg_remaining_us,
            });
        }
        t.seg_remaining_us -= delta;
        t.remaining_cpu_us -= delta;
        t.cpu_used_us += delta;
        t.vruntime_us += delta * BASE_WEIGHT / t.weight;
        self.cores[core].busy_us += delta;
        Ok(())
    }

    /// Takes the running task off `core`; it becomes queued and the core idle.
    pub fn preempt(&mut self, core: CoreId, reason: PreemptReason) -> Result<TaskId, SimError> {
        let task = self.core(core)?.running.ok_or(SimError::CoreIdle(core))?;
        self.sync(core)?;
        self.vacate(core, task, StopKind::Preempt(reason));
        let now = self.now;
        let t = &mut self.tasks[task];
        t.status = TaskStatus::Queued;
        t.enqueue_times.push(now);
        Ok(task)
    }

    fn vacate(&mut self, core: CoreId, task: TaskId, kind: StopKind) {
        let now = self.now;
        let c = &mut self.cores[core];
        c.running = None;
        c.slice_end = None;
        c.token += 1;
        c.idle_since = Some(now);
        self.idle_cores += 1;
        self.tasks[task].core = None;
        self.pending.push(PendingStop { core, task, kind });
        if self.cfg.record_timeline {
            let tag = match kind {
                StopKind::Preempt(r) => TimelineTag::from_reason(r),
                StopKind::Block => TimelineTag::IoBlock,
                StopKind::Done => TimelineTag::Done,
            };
            self.timeline.push(TimelineEntry {
                time_us: now,
                core,
                task,
                tag,
            });
        }
    }

    fn resolve_pending(&mut self) {
        for p in std::mem::take(&mut self.pending) {
            if !matches!(p.kind, StopKind::Done) {
                self.tasks[p.task].n_context_switches += 1;
            }
        }
    }
}

/// Observable policy state exported alongside the per-request results.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PolicyReport {
    /// `(time_us, slice_us)` after every recomputation, starting with the bootstrap value.
    pub slice_timeline: Vec<(Micros, Micros)>,
    pub queue_delays: Vec<QueueDelaySample>,
    pub demotions: u64,
    pub bypasses: u64,
    pub boosts: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueueDelaySample {
    pub time_us: Micros,
    pub task: TaskId,
    pub delay_us: Micros,
    pub bypassed: bool,
}

pub trait Policy {
    fn name(&self) -> String;

    /// Number of cores to simulate; IDEAL asks for one per task.
    fn cores_needed(&self, cores: usize, _n_tasks: usize) -> usize {
        cores
    }

    fn on_arrival(&mut self, sys: &mut Sys, task: TaskId) -> Result<(), SimError>;

    /// A task finished an IO segment and is runnable again.
    fn on_wakeup(&mut self, sys: &mut Sys, task: TaskId) -> Result<(), SimError> {
        self.on_arrival(sys, task)
    }

    /// `task` left `core` because its next segment is IO.
    fn on_block(&mut self, sys: &mut Sys, task: TaskId, core: CoreId) -> Result<(), SimError>;

    /// `core` is `None` when the final segment was IO.
    fn on_complete(
        &mut self,
        sys: &mut Sys,
        task: TaskId,
        core: Option<CoreId>,
    ) -> Result<(), SimError>;

    fn on_slice_expiry(
        &mut self,
        sys: &mut Sys,
        core: CoreId,
        task: TaskId,
    ) -> Result<(), SimError> {
        let _ = (sys, core);
        Err(SimError::Policy(format!(
            "{} does not use time slices (task {task})",
            self.name()
        )))
    }

    fn on_timer(&mut self, _sys: &mut Sys, _tag: u64) -> Result<(), SimError> {
        Ok(())
    }

    /// Fill idle cores and apply pending preemptions.
    fn schedule(&mut self, sys: &mut Sys) -> Result<(), SimError>;

    /// Runnable tasks the policy holds that an idle core could pick up now.
    fn waiting_runnable(&self, sys: &Sys) -> usize;

    fn report(&self) -> PolicyReport {
        PolicyReport::default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Totals {
    pub context_switches: u64,
    pub io_block_switches: u64,
    pub makespan_us: Micros,
    pub busy_us: Micros,
    pub cpu_demand_us: Micros,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub policy: String,
    pub records: Vec<RequestRecord>,
    pub timeline: Vec<TimelineEntry>,
    pub totals: Totals,
    pub cores: Vec<CoreState>,
    pub report: PolicyReport,
}

/// Runs `requests` (sorted by submit time) to completion under `policy`.
pub fn run(
    requests: &[FunctionRequest],
    policy: &mut dyn Policy,
    cores: usize,
    cfg: &EngineConfig,
) -> Result<SimResult, SimError> {
    for (i, w) in requests.windows(2).enumerate() {
        if w[1].submit_time_us < w[0].submit_time_us {
            return Err(SimError::UnsortedRequests(i + 1));
        }
    }
    for (i, r) in requests.iter().enumerate() {
        r.validate().map_err(|_| SimError::UnknownTask(i))?;
    }
    if cores == 0 {
        return Err(SimError::UnknownCore(0));
    }
    let n_cores = policy.cores_needed(cores, requests.len());
    let mut sys = Sys {
        now: 0,
        tasks: requests.iter().enumerate().map(|(i, r)| Task::new(i, r)).collect(),
        cores: (0..n_cores)
            .map(|id| CoreState {
                id,
                running: None,
                busy_us: 0,
                idle_us: 0,
                overhead_us: 0,
                progress_from: 0,
                slice_end: None,
                token: 0,
                idle_since: Some(0),
            })
            .collect(),
        heap: BinaryHeap::with_capacity(requests.len() + n_cores),
        seq: 0,
        pending: Vec::new(),
        timeline: Vec::new(),
        cfg: cfg.clone(),
        idle_cores: n_cores,
        done: 0,
    };
    for (i, r) in requests.iter().enumerate() {
        sys.push(r.submit_time_us, EventKind::Arrival(i));
    }

    while sys.done < sys.tasks.len() {
        let Some(Reverse((t, _, kind))) = sys.heap.pop() else {
            return Err(SimError::Stalled {
                now_us: sys.now,
                pending: sys.unfinished(),
            });
        };
        sys.now = t;
        handle(&mut sys, policy, kind)?;
        if next_time(&sys) == Some(t) {
            continue;
        }
        policy.schedule(&mut sys)?;
        if next_time(&sys) == Some(t) {
            continue;
        }
        sys.resolve_pending();
        if cfg.check_work_conservation && sys.idle_cores > 0 {
            let waiting = policy.waiting_runnable(&sys);
            if waiting > 0 {
                return Err(SimError::NotWorkConserving {
                    now_us: sys.now,
                    idle: sys.idle_cores,
                    waiting,
                });
            }
        }
    }
    sys.resolve_pending();
    Ok(finish(sys, policy))
}

fn next_time(sys: &Sys) -> Option<Micros> {
    sys.heap.peek().map(|Reverse((t, _, _))| *t)
}

fn handle(sys: &mut Sys, policy: &mut dyn Policy, kind: EventKind) -> Result<(), SimError> {
    match kind {
        EventKind::Arrival(task) => {
            let now = sys.now;
            let t = &mut sys.tasks[task];
            t.status = TaskStatus::Queued;
            t.enqueue_times.push(now);
            policy.on_arrival(sys, task)
        }
        EventKind::SegmentDone { core, token } => {
            if sys.cores[core].token != token {
                return Ok(());
            }
            let task = sys.cores[core].running.ok_or(SimError::CoreIdle(core))?;
            sys.sync(core)?;
            let t = &mut sys.tasks[task];
            if t.current_kind() == SegmentKind::Cpu {
                if t.seg_remaining_us != 0 {
                    return Err(SimError::Policy(format!(
                        "segment of task {task} ended with {}us left",
                        t.seg_remaining_us
                    )));
                }
                t.seg_index += 1;
            }
            advance(sys, policy, task, Some(core))
        }
        EventKind::SliceExpiry { core, token } => {
            if sys.cores[core].token != token {
                return Ok(());
            }
            let task = sys.cores[core].running.ok_or(SimError::CoreIdle(core))?;
            sys.sync(core)?;
            policy.on_slice_expiry(sys, core, task)?;
            // Policy let the task keep running without a new deadline.
            if sys.cores[core].token == token && sys.cores[core].running == Some(task) {
                sys.set_slice(core, None)?;
            }
            Ok(())
        }
        EventKind::IoDone(task) => {
            sys.tasks[task].seg_index += 1;
            let t = &sys.tasks[task];
            if t.seg_index == t.segments.len() {
                complete(sys, task);
                return policy.on_complete(sys, task, None);
            }
            let now = sys.now;
            let t = &mut sys.tasks[task];
            t.seg_remaining_us = t.segments[t.seg_index].len_us;
            if t.current_kind() == SegmentKind::Io {
                // Back-to-back IO: stay blocked.
                let len = t.seg_remaining_us;
                sys.push(now + len, EventKind::IoDone(task));
                return Ok(());
            }
            t.status = TaskStatus::Queued;
            t.enqueue_times.push(now);
            policy.on_wakeup(sys, task)
        }
        EventKind::Timer(tag) => policy.on_timer(sys, tag),
    }
}

/// Moves a task that sits on `core` to its next segment.
fn advance(
    sys: &mut Sys,
    policy: &mut dyn Policy,
    task: TaskId,
    core: Option<CoreId>,
) -> Result<(), SimError> {
    let core = core.ok_or(SimError::Policy("advance without core".into()))?;
    let t = &mut sys.tasks[task];
    if t.seg_index == t.segments.len() {
        sys.vacate(core, task, StopKind::Done);
        complete(sys, task);
        return policy.on_complete(sys, task, Some(core));
    }
    let seg = t.segments[t.seg_index];
    if t.seg_remaining_us == 0 {
        t.seg_remaining_us = seg.len_us;
    }
    match seg.kind {
        SegmentKind::Cpu => {
            sys.arm(core, seg.len_us);
            Ok(())
        }
        SegmentKind::Io => {
            let now = sys.now;
            t.status = TaskStatus::BlockedIo;
            t.n_io_blocks += 1;
            let len = t.seg_remaining_us;
            sys.vacate(core, task, StopKind::Block);
            sys.push(now + len, EventKind::IoDone(task));
            policy.on_block(sys, task, core)
        }
    }
}

fn complete(sys: &mut Sys, task: TaskId) {
    let now = sys.now;
    let t = &mut sys.tasks[task];
    t.status = TaskStatus::Done;
    t.completion_us = Some(now);
    t.seg_remaining_us = 0;
    sys.done += 1;
}

fn finish(mut sys: Sys, policy: &mut dyn Policy) -> SimResult {
    let makespan = sys.now;
    for c in &mut sys.cores {
        if let Some(since) = c.idle_since.take() {
            c.idle_us += makespan - since;
        }
    }
    let records: Vec<RequestRecord> = sys.tasks.iter().map(RequestRecord::from_task).collect();
    let totals = Totals {
        context_switches: sys.tasks.iter().map(|t| t.n_context_switches as u64).sum(),
        io_block_switches: sys.tasks.iter().map(|t| t.n_io_blocks as u64).sum(),
        makespan_us: makespan,
        busy_us: sys.cores.iter().map(|c| c.busy_us).sum(),
        cpu_demand_us: sys
            .tasks
            .iter()
            .flat_map(|t| t.segments.iter())
            .filter(|s| s.kind == SegmentKind::Cpu)
            .map(|s| s.len_us)
            .sum(),
    };
    let timeline = std::mem::take(&mut sys.timeline);
    SimResult {
        policy: policy.name(),
        records,
        timeline,
        totals,
        cores: sys.cores,
        report: policy.report(),
    }
}
