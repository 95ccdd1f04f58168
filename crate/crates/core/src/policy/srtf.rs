//! Shortest remaining time first (offline oracle) and the IDEAL
//! infinite-capacity baseline.

use std::collections::{BTreeSet, VecDeque};

use crate::error::SimError;
use crate::sim::{CoreId, Policy, PreemptReason, SchedClass, Sys, TaskId};
use crate::Micros;

/// Keeps the `c` runnable tasks with the least remaining CPU work on the
/// cores. Remaining IO is not part of the key. Ties favour the task that
/// is already running.
#[derive(Debug, Clone, Default)]
pub struct Srtf {
    waiting: BTreeSet<(Micros, TaskId)>,
}

impl Srtf {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Policy for Srtf {
    fn name(&self) -> String {
        "srtf".into()
    }

    fn on_arrival(&mut self, sys: &mut Sys, task: TaskId) -> Result<(), SimError> {
        sys.set_class(task, SchedClass::Srtf)?;
        let key = sys.remaining_cpu(task)?;
        self.waiting.insert((key, task));
        Ok(())
    }

    fn on_block(&mut self, _: &mut Sys, _: TaskId, _: CoreId) -> Result<(), SimError> {
        Ok(())
    }

    fn on_complete(&mut self, _: &mut Sys, _: TaskId, _: Option<CoreId>) -> Result<(), SimError> {
        Ok(())
    }

    fn schedule(&mut self, sys: &mut Sys) -> Result<(), SimError> {
        for core in 0..sys.n_cores() {
            if sys.is_idle(core) {
                let Some((_, task)) = self.waiting.pop_first() else {
                    return Ok(());
                };
                sys.dispatch(core, task, None)?;
            }
        }
        // All cores busy: swap in waiters that beat the longest running task.
        while let Some(&(key, task)) = self.waiting.first() {
            let mut victim: Option<(Micros, TaskId, CoreId)> = None;
            for core in 0..sys.n_cores() {
                if let Some(t) = sys.running(core) {
                    let rem = sys.remaining_cpu(t)?;
                    if victim.is_none_or(|(vr, vt, _)| (rem, t) > (vr, vt)) {
                        victim = Some((rem, t, core));
                    }
                }
            }
            let Some((vrem, _, vcore)) = victim else {
                break;
            };
            if key >= vrem {
                break;
            }
            self.waiting.pop_first();
            let out = sys.preempt(vcore, PreemptReason::HigherPriority)?;
            self.waiting.insert((sys.remaining_cpu(out)?, out));
            sys.dispatch(vcore, task, None)?;
        }
        Ok(())
    }

    fn waiting_runnable(&self, _: &Sys) -> usize {
        self.waiting.len()
    }
}

/// Every request runs on its own dedicated core from the moment it arrives.
#[derive(Debug, Clone, Default)]
pub struct Ideal {
    ready: VecDeque<TaskId>,
}

impl Ideal {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Policy for Ideal {
    fn name(&self) -> String {
        "ideal".into()
    }

    fn cores_needed(&self, _cores: usize, n_tasks: usize) -> usize {
        n_tasks.max(1)
    }

    fn on_arrival(&mut self, sys: &mut Sys, task: TaskId) -> Result<(), SimError> {
        sys.set_class(task, SchedClass::Ideal)?;
        self.ready.push_back(task);
        Ok(())
    }

    fn on_block(&mut self, _: &mut Sys, _: TaskId, _: CoreId) -> Result<(), SimError> {
        Ok(())
    }

    fn on_complete(&mut self, _: &mut Sys, _: TaskId, _: Option<CoreId>) -> Result<(), SimError> {
        Ok(())
    }

    fn schedule(&mut self, sys: &mut Sys) -> Result<(), SimError> {
        while let Some(task) = self.ready.pop_front() {
            sys.dispatch(task, task, None)?;
        }
        Ok(())
    }

    fn waiting_runnable(&self, _: &Sys) -> usize {
        self.ready.len()
    }
}
