//! Domain types shared by every other module: instances, schedules,
//! the execution tracker used by the repair protocol, and basic metrics.
//!
//! Conventions: time is discrete and non-negative (`u32`), job and step
//! indices are 0-based internally (external output converts steps to
//! 1-based), and machine intervals are half-open `[start, end)`.

use serde::{Deserialize, Serialize};

use crate::Error;

/// Discrete simulation time, in whole units.
pub type Time = u32;
pub type JobId = usize;
pub type MachineId = usize;
/// Flat index of an operation inside an [`Instance`] (job-major order).
pub type OpId = usize;

/// One processing step of a job on a specific machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Operation {
    pub job: JobId,
    pub step: usize,
    pub machine: MachineId,
    pub duration: Time,
}

/// A job-shop instance: `num_jobs` jobs, each an ordered chain of
/// operations over `num_machines` machines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub num_machines: usize,
    /// `jobs[j]` holds job `j`'s operations in precedence order.
    pub jobs: Vec<Vec<Operation>>,
}

impl Instance {
    /// Builds an instance from `(machine, duration)` rows, one row per job.
    pub fn from_rows(
        name: impl Into<String>,
        num_machines: usize,
        rows: &[Vec<(MachineId, Time)>],
    ) -> Result<Self, Error> {
        let name = name.into();
        let mut jobs = Vec::with_capacity(rows.len());
        for (j, row) in rows.iter().enumerate() {
            let mut ops = Vec::with_capacity(row.len());
            for (s, &(machine, duration)) in row.iter().enumerate() {
                if machine >= num_machines {
                    return Err(Error::MachineOutOfRange {
                        machine,
                        num_machines,
                    });
                }
                ops.push(Operation {
                    job: j,
                    step: s,
                    machine,
                    duration,
                });
            }
            jobs.push(ops);
        }
        Ok(Instance {
            name,
            num_machines,
            jobs,
        })
    }

    pub fn num_jobs(&self) -> usize {
        self.jobs.len()
    }

    /// Maximum number of operations in any single job.
    pub fn max_ops_per_job(&self) -> usize {
        self.jobs.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn num_ops(&self) -> usize {
        self.jobs.iter().map(Vec::len).sum()
    }

    pub fn op(&self, job: JobId, step: usize) -> Option<&Operation> {
        self.jobs.get(job).and_then(|j| j.get(step))
    }

    /// True when `step` is the last operation of its job.
    pub fn is_terminal(&self, job: JobId, step: usize) -> bool {
        self.jobs
            .get(job)
            .map(|j| step + 1 == j.len())
            .unwrap_or(false)
    }

    pub fn ops(&self) -> impl Iterator<Item = &Operation> {
        self.jobs.iter().flatten()
    }

    /// Flat job-major index of `(job, step)`.
    pub fn op_id(&self, job: JobId, step: usize) -> OpId {
        self.jobs[..job].iter().map(Vec::len).sum::<usize>() + step
    }

    /// Elementary makespan bound: the larger of the heaviest machine load
    /// and the longest job chain.
    pub fn lower_bound(&self) -> Time {
        let mut machine_load = vec![0u64; self.num_machines];
        let mut best_job = 0u64;
        for job in &self.jobs {
            let total: u64 = job.iter().map(|o| o.duration as u64).sum();
            best_job = best_job.max(total);
            for op in job {
                machine_load[op.machine] += op.duration as u64;
            }
        }
        let best_machine = machine_load.iter().copied().max().unwrap_or(0);
        best_machine.max(best_job) as Time
    }
}

/// A placed operation: interval `[start, end)` on `machine`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScheduledOp {
    pub job: JobId,
    pub step: usize,
    pub machine: MachineId,
    pub start: Time,
    pub end: Time,
}

/// A complete assignment of start times, kept sorted by `(job, step)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    ops: Vec<ScheduledOp>,
}

impl Schedule {
    pub fn new(mut ops: Vec<ScheduledOp>) -> Self {
        ops.sort_by_key(|o| (o.job, o.step));
        Schedule { ops }
    }

    pub fn ops(&self) -> &[ScheduledOp] {
        &self.ops
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn get(&self, job: JobId, step: usize) -> Option<&ScheduledOp> {
        self.ops
            .binary_search_by_key(&(job, step), |o| (o.job, o.step))
            .ok()
            .map(|i| &self.ops[i])
    }

    /// Completion time of the last operation; 0 for an empty schedule.
    pub fn makespan(&self) -> Time {
        self.ops.iter().map(|o| o.end).max().unwrap_or(0)
    }
}

/// Convenience free function mirroring the metric's usual name.
pub fn makespan(schedule: &Schedule) -> Time {
    schedule.makespan()
}

/// Execution status of a tracked operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatusLabel {
    Waiting,
    InProgress,
    Completed,
}

/// What happens to an operation interrupted mid-processing by a breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RestartPolicy {
    /// The interrupted operation restarts from scratch after the outage.
    #[default]
    RestartFull,
    /// Only the unfinished remainder is re-run after the outage.
    ResumeRemaining,
}

/// Tunables of the disruption-repair protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairConfig {
    /// Cost charged per operation whose material must be staged earlier
    /// than originally planned.
    pub t_wip: Time,
    /// Maximum reorder evaluations per machine queue.
    pub swap_budget: u32,
    pub restart_policy: RestartPolicy,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            t_wip: 1,
            swap_budget: 16,
            restart_policy: RestartPolicy::RestartFull,
        }
    }
}

/// Per-machine execution state: one status per scheduled operation plus
/// machine queues ordered by start time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTracker {
    /// Flat per-operation placements, job-major (same order as
    /// `Instance::ops`).
    pub ops: Vec<ScheduledOp>,
    pub status: Vec<StatusLabel>,
    /// `queues[m]` lists op ids on machine `m`, ascending by start, ties
    /// broken by `(job, step)`.
    pub queues: Vec<Vec<OpId>>,
    offsets: Vec<usize>,
}

impl ExecutionTracker {
    /// Builds a tracker for a complete schedule; every operation starts
    /// out `Waiting`.
    pub fn from_schedule(instance: &Instance, schedule: &Schedule) -> Result<Self, Error> {
        let n = instance.num_ops();
        let mut offsets = Vec::with_capacity(instance.num_jobs());
        let mut acc = 0;
        for job in &instance.jobs {
            offsets.push(acc);
            acc += job.len();
        }

        let mut ops: Vec<Option<ScheduledOp>> = vec![None; n];
        for sop in schedule.ops() {
            let op = instance.op(sop.job, sop.step).ok_or(Error::UnknownOp {
                job: sop.job,
                step: sop.step,
            })?;
            if op.machine != sop.machine {
                return Err(Error::MachineMismatch {
                    job: sop.job,
                    step: sop.step,
                });
            }
            let id = offsets[sop.job] + sop.step;
            if ops[id].replace(*sop).is_some() {
                return Err(Error::DuplicateOp {
                    job: sop.job,
                    step: sop.step,
                });
            }
        }
        let ops: Vec<ScheduledOp> = ops
            .into_iter()
            .enumerate()
            .map(|(id, o)| {
                o.ok_or_else(|| {
                    let (job, step) = locate(&offsets, instance, id);
                    Error::MissingOp { job, step }
                })
            })
            .collect::<Result<_, _>>()?;

        let mut queues = vec![Vec::new(); instance.num_machines];
        for (id, sop) in ops.iter().enumerate() {
            queues[sop.machine].push(id);
        }
        for q in &mut queues {
            q.sort_by_key(|&id| (ops[id].start, ops[id].job, ops[id].step));
        }

        Ok(ExecutionTracker {
            status: vec![StatusLabel::Waiting; ops.len()],
            ops,
            queues,
            offsets,
        })
    }

    pub fn op_id(&self, job: JobId, step: usize) -> OpId {
        self.offsets[job] + step
    }

    pub fn get(&self, job: JobId, step: usize) -> &ScheduledOp {
        &self.ops[self.op_id(job, step)]
    }

    pub fn to_schedule(&self) -> Schedule {
        Schedule::new(self.ops.clone())
    }

    /// Queue of `(job, step)` pairs for one machine, in queue order.
    pub fn queue(&self, machine: MachineId) -> Vec<(JobId, usize)> {
        self.queues[machine]
            .iter()
            .map(|&id| (self.ops[id].job, self.ops[id].step))
            .collect()
    }
}

fn locate(offsets: &[usize], instance: &Instance, id: OpId) -> (JobId, usize) {
    for (j, &off) in offsets.iter().enumerate() {
        if id >= off && id < off + instance.jobs[j].len() {
            return (j, id - off);
        }
    }
    (0, 0)
}

/// Aggregate result metrics for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub makespan: Time,
    pub wip_moves: u32,
    pub messages: u32,
    /// `100 * (makespan - UB) / UB`, present only when a best-known upper
    /// bound is registered for the instance.
    pub gap_percent: Option<f64>,
}

/// The 5x3 demo instance used by the white-box walkthroughs and golden
/// tests. Jobs are 0-based here; gantt rows elsewhere label them 1-based.
pub fn demo_5x3() -> Instance {
    Instance::from_rows(
        "demo:5x3",
        3,
        &[
            vec![(0, 3), (1, 2), (2, 2)],
            vec![(0, 2), (2, 1), (1, 4)],
            vec![(1, 4), (2, 3), (0, 2)],
            vec![(2, 2), (0, 1), (1, 3)],
            vec![(1, 2), (0, 4), (2, 1)],
        ],
    )
    .expect("demo instance is well-formed")
}

/// The demo instance's pre-disruption baseline schedule (makespan 19).
pub fn demo_5x3_baseline() -> Schedule {
    let place = |job, step, machine, start, end| ScheduledOp {
        job,
        step,
        machine,
        start,
        end,
    };
    Schedule::new(vec![
        place(0, 0, 0, 3, 6),
        place(0, 1, 1, 14, 16),
        place(0, 2, 2, 17, 19),
        place(1, 0, 0, 0, 2),
        place(1, 1, 2, 2, 3),
        place(1, 2, 1, 3, 7),
        place(2, 0, 1, 10, 14),
        place(2, 1, 2, 14, 17),
        place(2, 2, 0, 17, 19),
        place(3, 0, 2, 0, 2),
        place(3, 1, 0, 2, 3),
        place(3, 2, 1, 7, 10),
        place(4, 0, 1, 0, 2),
        place(4, 1, 0, 6, 10),
        place(4, 2, 2, 10, 11),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_baseline_makespan_is_19() {
        assert_eq!(demo_5x3_baseline().makespan(), 19);
    }

    #[test]
    fn makespan_trivia() {
        let single = Schedule::new(vec![ScheduledOp {
            job: 0,
            step: 0,
            machine: 0,
            start: 0,
            end: 5,
        }]);
        assert_eq!(single.makespan(), 5);
        assert_eq!(Schedule::new(vec![]).makespan(), 0);
    }

    #[test]
    fn demo_lower_bound_is_machine_1_load() {
        // machine loads 12 / 15 / 9, job loads 7,7,9,6,7
        assert_eq!(demo_5x3().lower_bound(), 15);
    }

    #[test]
    fn lower_bound_trivia() {
        let one = Instance::from_rows("one", 1, &[vec![(0, 7)]]).unwrap();
        assert_eq!(one.lower_bound(), 7);
        let two = Instance::from_rows("two", 1, &[vec![(0, 3)], vec![(0, 3)]]).unwrap();
        assert_eq!(two.lower_bound(), 6);
    }

    #[test]
    fn tracker_queue_order_on_machine_1() {
        let instance = demo_5x3();
        let tracker = ExecutionTracker::from_schedule(&instance, &demo_5x3_baseline()).unwrap();
        // 0-based jobs: J5(1)=(4,0), J2(3)=(1,2), J4(3)=(3,2), J3(1)=(2,0), J1(2)=(0,1)
        assert_eq!(
            tracker.queue(1),
            vec![(4, 0), (1, 2), (3, 2), (2, 0), (0, 1)]
        );
    }

    #[test]
    fn tracker_rejects_incomplete_schedule() {
        let instance = demo_5x3();
        let mut ops = demo_5x3_baseline().ops().to_vec();
        ops.pop();
        let err = ExecutionTracker::from_schedule(&instance, &Schedule::new(ops));
        assert!(matches!(err, Err(Error::MissingOp { .. })));
    }

    #[test]
    fn tracker_of_empty_instance_is_empty() {
        let instance = Instance::from_rows("empty", 2, &[]).unwrap();
        let tracker = ExecutionTracker::from_schedule(&instance, &Schedule::new(vec![])).unwrap();
        assert!(tracker.ops.is_empty());
        assert_eq!(tracker.queues.len(), 2);
    }

    #[test]
    fn tracker_single_op_waiting() {
        let instance = Instance::from_rows("one", 1, &[vec![(0, 7)]]).unwrap();
        let sched = Schedule::new(vec![ScheduledOp {
            job: 0,
            step: 0,
            machine: 0,
            start: 0,
            end: 7,
        }]);
        let tracker = ExecutionTracker::from_schedule(&instance, &sched).unwrap();
        assert_eq!(tracker.status, vec![StatusLabel::Waiting]);
    }

    #[test]
    fn tracker_entry_count_matches_instance() {
        let instance = demo_5x3();
        let tracker = ExecutionTracker::from_schedule(&instance, &demo_5x3_baseline()).unwrap();
        assert_eq!(tracker.ops.len(), instance.num_ops());
    }

    #[test]
    fn tracker_is_deterministic() {
        let instance = demo_5x3();
        let a = ExecutionTracker::from_schedule(&instance, &demo_5x3_baseline()).unwrap();
        let b = ExecutionTracker::from_schedule(&instance, &demo_5x3_baseline()).unwrap();
        assert_eq!(a, b);
    }
}
