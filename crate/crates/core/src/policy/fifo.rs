//! FIFO and round-robin over a single global run queue.

use std::collections::VecDeque;

use crate::error::SimError;
use crate::sim::{CoreId, Policy, PreemptReason, SchedClass, Sys, TaskId};
use crate::Micros;

/// Run to completion in arrival order; only IO takes a task off its core.
#[derive(Debug, Clone, Default)]
pub struct Fifo {
    queue: VecDeque<TaskId>,
}

impl Fifo {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Policy for Fifo {
    fn name(&self) -> String {
        "fifo".into()
    }

    fn on_arrival(&mut self, sys: &mut Sys, task: TaskId) -> Result<(), SimError> {
        sys.set_class(task, SchedClass::RtFifo)?;
        self.queue.push_back(task);
        Ok(())
    }

    fn on_block(&mut self, _: &mut Sys, _: TaskId, _: CoreId) -> Result<(), SimError> {
        Ok(())
    }

    fn on_complete(&mut self, _: &mut Sys, _: TaskId, _: Option<CoreId>) -> Result<(), SimError> {
        Ok(())
    }

    fn schedule(&mut self, sys: &mut Sys) -> Result<(), SimError> {
        fill_in_order(sys, &mut self.queue, None)
    }

    fn waiting_runnable(&self, _: &Sys) -> usize {
        self.queue.len()
    }
}

/// Round robin with a fixed quantum; expired tasks go to the queue tail.
#[derive(Debug, Clone)]
pub struct RoundRobin {
    quantum_us: Micros,
    queue: VecDeque<TaskId>,
}

impl RoundRobin {
    pub fn new(quantum_us: Micros) -> Self {
        assert!(quantum_us > 0, "round-robin quantum must be positive");
        Self {
            quantum_us,
            queue: VecDeque::new(),
        }
    }
}

impl Policy for RoundRobin {
    fn name(&self) -> String {
        "rr".into()
    }

    fn on_arrival(&mut self, sys: &mut Sys, task: TaskId) -> Result<(), SimError> {
        sys.set_class(task, SchedClass::RtRr)?;
        self.queue.push_back(task);
        Ok(())
    }

    fn on_block(&mut self, _: &mut Sys, _: TaskId, _: CoreId) -> Result<(), SimError> {
        Ok(())
    }

    fn on_complete(&mut self, _: &mut Sys, _: TaskId, _: Option<CoreId>) -> Result<(), SimError> {
        Ok(())
    }

    fn on_slice_expiry(&mut self, sys: &mut Sys, core: CoreId, _: TaskId) -> Result<(), SimError> {
        if self.queue.is_empty() {
            let end = sys.now() + self.quantum_us;
            return sys.set_slice(core, Some(end));
        }
        let task = sys.preempt(core, PreemptReason::SliceExpired)?;
        self.queue.push_back(task);
        Ok(())
    }

    fn schedule(&mut self, sys: &mut Sys) -> Result<(), SimError> {
        fill_in_order(sys, &mut self.queue, Some(self.quantum_us))
    }

    fn waiting_runnable(&self, _: &Sys) -> usize {
        self.queue.len()
    }
}

fn fill_in_order(
    sys: &mut Sys,
    queue: &mut VecDeque<TaskId>,
    quantum: Option<Micros>,
) -> Result<(), SimError> {
    for core in 0..sys.n_cores() {
        if queue.is_empty() {
            break;
        }
        if sys.is_idle(core) {
            let task = queue.pop_front().expect("non-empty");
            let end = quantum.map(|q| sys.now() + q);
            sys.dispatch(core, task, end)?;
        }
    }
    Ok(())
}
