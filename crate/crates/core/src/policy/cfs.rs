//! A model of the Linux Completely Fair Scheduler.
//!
//! Each core has a runqueue ordered by `(vruntime, task id)`. A dispatched
//! task gets `max(sched_latency / nr_running, min_granularity)`; at expiry it
//! is reinserted with its updated vruntime and the leftmost entry runs next.
//! Waking tasks go to the least-loaded runqueue and are lifted to that
//! queue's `min_vruntime`. A core with an empty runqueue pulls the leftmost
//! task of the most-loaded one the moment it goes idle.
//!
//! All tasks have equal weight; nice levels, group scheduling and the
//! periodic load balancer are not modelled.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::sim::{CoreId, Policy, PreemptReason, SchedClass, Sys, TaskId};
use crate::Micros;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfsConfig {
    #[serde(default = "default_latency")]
    pub sched_latency_us: Micros,
    #[serde(default = "default_granularity")]
    pub min_granularity_us: Micros,
}

fn default_latency() -> Micros {
    24_000
}

fn default_granularity() -> Micros {
    3_000
}

impl Default for CfsConfig {
    fn default() -> Self {
        Self {
            sched_latency_us: default_latency(),
            min_granularity_us: default_granularity(),
        }
    }
}

impl CfsConfig {
    pub fn validate(&self, path: &str) -> Vec<crate::error::ConfigError> {
        let mut errs = Vec::new();
        if self.min_granularity_us == 0 {
            errs.push(crate::error::ConfigError::new(
                format!("{path}.min_granularity_us"),
                "must be positive",
            ));
        }
        if self.sched_latency_us < self.min_granularity_us {
            errs.push(crate::error::ConfigError::new(
                format!("{path}.sched_latency_us"),
                "must be at least min_granularity_us",
            ));
        }
        errs
    }

    pub fn slice_for(&self, nr_running: usize) -> Micros {
        (self.sched_latency_us / nr_running.max(1) as Micros).max(self.min_granularity_us)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Runqueue {
    waiting: BTreeSet<(Micros, TaskId)>,
    current: Option<TaskId>,
    min_vruntime: Micros,
}

impl Runqueue {
    pub fn nr_running(&self) -> usize {
        self.waiting.len() + self.current.is_some() as usize
    }

    pub fn nr_waiting(&self) -> usize {
        self.waiting.len()
    }

    pub fn current(&self) -> Option<TaskId> {
        self.current
    }

    pub fn min_vruntime(&self) -> Micros {
        self.min_vruntime
    }

    pub fn leftmost(&self) -> Option<(Micros, TaskId)> {
        self.waiting.first().copied()
    }
}

/// Per-core runqueues shared by the CFS policy and the lower level of SFS.
#[derive(Debug, Clone)]
pub struct CfsModel {
    cfg: CfsConfig,
    rqs: Vec<Runqueue>,
    /// Runqueue holding each task (waiting or current).
    home: Vec<Option<CoreId>>,
}

impl CfsModel {
    pub fn new(cfg: CfsConfig, cores: usize) -> Self {
        Self {
            cfg,
            rqs: vec![Runqueue::default(); cores],
            home: Vec::new(),
        }
    }

    pub fn config(&self) -> &CfsConfig {
        &self.cfg
    }

    pub fn runqueue(&self, core: CoreId) -> &Runqueue {
        &self.rqs[core]
    }

    pub fn total_waiting(&self) -> usize {
        self.rqs.iter().map(|rq| rq.waiting.len()).sum()
    }

    pub fn contains(&self, task: TaskId) -> bool {
        self.home.get(task).copied().flatten().is_some()
    }

    fn set_home(&mut self, task: TaskId, core: Option<CoreId>) {
        if self.home.len() <= task {
            self.home.resize(task + 1, None);
        }
        self.home[task] = core;
    }

    /// Least-loaded runqueue by `nr_running + extra_load[core]`, ties to the lowest id.
    pub fn placement(&self, extra_load: &[usize]) -> CoreId {
        (0..self.rqs.len())
            .min_by_key(|&c| (self.rqs[c].nr_running() + extra_load.get(c).copied().unwrap_or(0), c))
            .expect("at least one core")
    }

    /// Places a newly runnable task.
    pub fn enqueue(
        &mut self,
        sys: &mut Sys,
        task: TaskId,
        extra_load: &[usize],
    ) -> Result<CoreId, SimError> {
        let core = self.placement(extra_load);
        self.enqueue_on(sys, core, task)?;
        Ok(core)
    }

    pub fn enqueue_on(&mut self, sys: &mut Sys, core: CoreId, task: TaskId) -> Result<(), SimError> {
        sys.set_class(task, SchedClass::CfsPool)?;
        let vr = sys.raise_vruntime(task, self.rqs[core].min_vruntime)?;
        self.rqs[core].waiting.insert((vr, task));
        self.set_home(task, Some(core));
        self.update_min_vruntime(sys, core)
    }

    /// Drops a task from whichever runqueue holds it (waiting or current).
    pub fn remove(&mut self, sys: &Sys, task: TaskId) -> Result<Option<CoreId>, SimError> {
        let Some(core) = self.home.get(task).copied().flatten() else {
            return Ok(None);
        };
        let rq = &mut self.rqs[core];
        if rq.current == Some(task) {
            rq.current = None;
        } else {
            let vr = sys.task(task)?.vruntime_us;
            if !rq.waiting.remove(&(vr, task)) {
                return Err(SimError::Policy(format!(
                    "task {task} missing from runqueue {core}"
                )));
            }
        }
        self.home[task] = None;
        Ok(Some(core))
    }

    /// Running task on `core` was preempted at slice expiry: reinsert it
    /// with its accumulated vruntime.
    pub fn requeue_current(&mut self, sys: &mut Sys, core: CoreId) -> Result<TaskId, SimError> {
        let task = self.rqs[core]
            .current
            .take()
            .ok_or(SimError::CoreIdle(core))?;
        let vr = sys.task(task)?.vruntime_us;
        self.rqs[core].waiting.insert((vr, task));
        self.update_min_vruntime(sys, core)?;
        Ok(task)
    }

    /// The current task of `core` left the CPU (blocked, completed or
    /// displaced by a higher class).
    pub fn clear_current(&mut self, sys: &Sys, core: CoreId) -> Result<Option<TaskId>, SimError> {
        let t = self.rqs[core].current.take();
        if let Some(task) = t {
            self.home[task] = None;
        }
        self.update_min_vruntime(sys, core)?;
        Ok(t)
    }

    /// Picks the next task for an idle `core` and returns it with its slice.
    /// With `steal`, an empty runqueue pulls from the most-loaded one.
    pub fn pick(
        &mut self,
        sys: &mut Sys,
        core: CoreId,
        steal: bool,
    ) -> Result<Option<(TaskId, Micros)>, SimError> {
        debug_assert!(self.rqs[core].current.is_none());
        let task = if let Some(first) = self.rqs[core].waiting.pop_first() {
            first.1
        } else if steal {
            let Some(src) = self.busiest(core) else {
                return Ok(None);
            };
            let (_, task) = self.rqs[src].waiting.pop_first().expect("busiest has waiters");
            self.update_min_vruntime(sys, src)?;
            sys.raise_vruntime(task, self.rqs[core].min_vruntime)?;
            task
        } else {
            return Ok(None);
        };
        self.rqs[core].current = Some(task);
        self.set_home(task, Some(core));
        self.update_min_vruntime(sys, core)?;
        Ok(Some((task, self.cfg.slice_for(self.rqs[core].nr_running()))))
    }

    fn busiest(&self, exclude: CoreId) -> Option<CoreId> {
        (0..self.rqs.len())
            .filter(|&c| c != exclude && !self.rqs[c].waiting.is_empty())
            .max_by_key(|&c| (self.rqs[c].nr_running(), std::cmp::Reverse(c)))
    }

    fn update_min_vruntime(&mut self, sys: &Sys, core: CoreId) -> Result<(), SimError> {
        let rq = &self.rqs[core];
        let cur = match rq.current {
            Some(t) => Some(sys.live_vruntime(t)?),
            None => None,
        };
        let left = rq.waiting.first().map(|&(v, _)| v);
        let candidate = match (cur, left) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        if let Some(v) = candidate {
            let rq = &mut self.rqs[core];
            rq.min_vruntime = rq.min_vruntime.max(v);
        }
        Ok(())
    }

    /// Dispatches onto every idle core that `eligible` allows: own
    /// runqueue first, then stealing.
    pub fn fill(&mut self, sys: &mut Sys, eligible: impl Fn(CoreId) -> bool) -> Result<(), SimError> {
        for steal in [false, true] {
            for core in 0..self.rqs.len() {
                if !sys.is_idle(core) || !eligible(core) || self.rqs[core].current.is_some() {
                    continue;
                }
                if let Some((task, slice)) = self.pick(sys, core, steal)? {
                    let now = sys.now();
                    sys.dispatch(core, task, Some(now + slice))?;
                }
            }
        }
        Ok(())
    }
}

/// Plain CFS over all cores.
#[derive(Debug, Clone)]
pub struct Cfs {
    model: CfsModel,
}

impl Cfs {
    pub fn new(cfg: CfsConfig, cores: usize) -> Self {
        Self {
            model: CfsModel::new(cfg, cores),
        }
    }

    pub fn model(&self) -> &CfsModel {
        &self.model
    }
}

impl Policy for Cfs {
    fn name(&self) -> String {
        "cfs".into()
    }

    fn on_arrival(&mut self, sys: &mut Sys, task: TaskId) -> Result<(), SimError> {
        self.model.enqueue(sys, task, &[])?;
        Ok(())
    }

    fn on_block(&mut self, sys: &mut Sys, _task: TaskId, core: CoreId) -> Result<(), SimError> {
        self.model.clear_current(sys, core)?;
        Ok(())
    }

    fn on_complete(
        &mut self,
        sys: &mut Sys,
        _task: TaskId,
        core: Option<CoreId>,
    ) -> Result<(), SimError> {
        if let Some(core) = core {
            self.model.clear_current(sys, core)?;
        }
        Ok(())
    }

    fn on_slice_expiry(&mut self, sys: &mut Sys, core: CoreId, _task: TaskId) -> Result<(), SimError> {
        sys.preempt(core, PreemptReason::SliceExpired)?;
        self.model.requeue_current(sys, core)?;
        Ok(())
    }

    fn schedule(&mut self, sys: &mut Sys) -> Result<(), SimError> {
        self.model.fill(sys, |_| true)
    }

    fn waiting_runnable(&self, _sys: &Sys) -> usize {
        self.model.total_waiting()
    }
}
