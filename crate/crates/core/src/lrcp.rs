//! Reactive repair after a machine breakdown: a deterministic four-phase
//! protocol run by per-machine agents over a strict-FIFO message queue.
//!
//! 1. *Status update* — label every operation completed / in progress /
//!    waiting relative to the disruption instant; restart the interrupted
//!    operation after the outage and right-shift the broken machine's
//!    queue just far enough to clear the downtime window.
//! 2. *Delay propagation* — each rescheduled operation notifies the
//!    machine hosting its job successor with a delay message.
//! 3. *Local queue optimization* — per-machine reordering: job-terminal
//!    operations are safe to push toward the back of the queue, letting
//!    the inflexible middle-of-job operations move forward; a reorder is
//!    applied only when the makespan gain beats its work-in-progress
//!    staging cost.
//! 4. *Cascading delay handling* — drain the message queue FIFO, pushing
//!    each delayed job successor to its predecessor's new end and
//!    notifying downstream machines in turn.
//!
//! [`repair`] chains the phases as 1 -> 2 -> 4 -> 3 -> 4 so that delays
//! are fully cascaded before queues are reordered, and any delay
//! introduced by reordering is propagated again afterwards.
//!
//! WIP accounting: moving an operation earlier than planned only costs
//! real work when the job has to be staged at the machine sooner than
//! material flow provides it. A non-first operation can never start
//! before its predecessor finishes, so its material is always on hand
//! and its advance is free. A job's *first* operation has material
//! delivery planned at its original start; the protocol may expedite
//! that delivery by at most one time unit, charging one WIP unit, and
//! does so only when it strictly reduces the global makespan.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::model::{
    ExecutionTracker, Instance, MachineId, OpId, RepairConfig, RestartPolicy, Schedule,
    StatusLabel, Time,
};
use crate::validate::validate_schedule;
use crate::Error;

/// A machine outage: `machine` is down during `[t_d, t_d + delta_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Breakdown {
    pub machine: MachineId,
    pub t_d: Time,
    pub delta_t: Time,
}

impl Breakdown {
    pub fn new(machine: MachineId, t_d: Time, delta_t: Time) -> Result<Self, Error> {
        if delta_t == 0 {
            return Err(Error::InvalidBreakdown("outage duration must be >= 1".into()));
        }
        Ok(Breakdown {
            machine,
            t_d,
            delta_t,
        })
    }

    pub fn window(&self) -> Window {
        Window {
            machine: self.machine,
            start: self.t_d,
            end: self.t_d + self.delta_t,
        }
    }
}

/// A blocked interval on one machine (half-open).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub machine: MachineId,
    pub start: Time,
    pub end: Time,
}

impl Window {
    /// Breakdown view of the window, for validation.
    pub fn as_breakdown(&self) -> Breakdown {
        Breakdown {
            machine: self.machine,
            t_d: self.start,
            delta_t: self.end - self.start,
        }
    }
}

/// Point-to-point message: "job `job`'s step `step` now ends at `end`",
/// addressed to the machine hosting step `step + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayNotify {
    pub job: usize,
    pub step: usize,
    pub end: Time,
}

/// One applied queue reorder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub machine: MachineId,
    /// Queue positions moved, as (from, to) pairs.
    pub moves: Vec<(usize, usize)>,
    /// Net cost change: makespan delta plus weighted WIP delta (< 0).
    pub delta: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    StatusUpdate,
    DelayPropagation,
    QueueReorder,
    Cascade,
}

/// Full result of one repair episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub schedule: Schedule,
    pub wip_moves: u32,
    pub messages: u32,
    /// Makespan observed after each executed phase, in order.
    pub phase_trace: Vec<(Phase, Time)>,
    pub swap_log: Vec<SwapRecord>,
}

/// State transitions recorded for the persistent event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateEvent {
    Rescheduled {
        job: usize,
        step: usize,
        machine: MachineId,
        start: Time,
        end: Time,
    },
    DelaySent {
        job: usize,
        step: usize,
        end: Time,
        to_machine: MachineId,
    },
    DelayApplied {
        job: usize,
        step: usize,
        start: Time,
        end: Time,
    },
    SwapApplied {
        machine: MachineId,
        delta: i64,
    },
}

/// Internal mutable state threaded through the phases. Public so the
/// phases can be driven (and inspected) individually in tests and
/// simulations.
pub struct RepairState<'a> {
    pub instance: &'a Instance,
    pub tracker: ExecutionTracker,
    /// Pre-repair start of every op (material-delivery plan for first ops).
    baseline_start: Vec<Time>,
    /// All blocked windows, including the current breakdown.
    pub windows: Vec<Window>,
    breakdown: Breakdown,
    config: RepairConfig,
    /// Ops that may not move: finished, or running on an intact machine.
    frozen: Vec<bool>,
    /// First-op ids whose material delivery has been expedited one unit.
    expedited: Vec<bool>,
    pub messages: u32,
    inbox: VecDeque<DelayNotify>,
    pub swap_log: Vec<SwapRecord>,
    pub events: Vec<StateEvent>,
}

impl<'a> RepairState<'a> {
    pub fn new(
        instance: &'a Instance,
        schedule: &Schedule,
        breakdown: Breakdown,
        config: RepairConfig,
        prior_windows: &[Window],
    ) -> Result<Self, Error> {
        if breakdown.machine >= instance.num_machines {
            return Err(Error::MachineOutOfRange {
                machine: breakdown.machine,
                num_machines: instance.num_machines,
            });
        }
        if breakdown.delta_t == 0 {
            return Err(Error::InvalidBreakdown("outage duration must be >= 1".into()));
        }
        let tracker = ExecutionTracker::from_schedule(instance, schedule)?;
        let n = tracker.ops.len();
        // Merge the new outage with any overlapping or touching prior
        // window on the same machine (repeated failures extend downtime).
        let mut merged = breakdown.window();
        let mut windows: Vec<Window> = Vec::new();
        for w in prior_windows {
            if w.machine == merged.machine && w.start <= merged.end && merged.start <= w.end {
                merged.start = merged.start.min(w.start);
                merged.end = merged.end.max(w.end);
            } else {
                windows.push(*w);
            }
        }
        windows.push(merged);
        windows.sort_by_key(|w| (w.machine, w.start));
        Ok(RepairState {
            instance,
            baseline_start: tracker.ops.iter().map(|o| o.start).collect(),
            tracker,
            windows,
            breakdown,
            config,
            frozen: vec![false; n],
            expedited: vec![false; n],
            messages: 0,
            inbox: VecDeque::new(),
            swap_log: Vec::new(),
            events: Vec::new(),
        })
    }

    pub fn makespan(&self) -> Time {
        self.tracker.ops.iter().map(|o| o.end).max().unwrap_or(0)
    }

    /// WIP units charged so far: one per first operation actually
    /// started ahead of its planned material delivery.
    pub fn wip_moves(&self) -> u32 {
        self.expedited
            .iter()
            .enumerate()
            .filter(|&(id, &e)| e && self.tracker.ops[id].start < self.baseline_start[id])
            .count() as u32
    }

    /// Objective tracked by phase 3: makespan plus weighted WIP.
    fn cost(&self) -> i64 {
        self.makespan() as i64 + self.config.t_wip as i64 * self.wip_moves() as i64
    }

    /// Earliest `t >= lb` such that `[t, t + dur)` avoids every blocked
    /// window on `machine`.
    fn earliest_clear(&self, machine: MachineId, lb: Time, dur: Time) -> Time {
        let mut t = lb;
        loop {
            let mut moved = false;
            for w in &self.windows {
                // zero-duration ops still may not sit inside a window
                if w.machine == machine && t < w.end && w.start < t + dur.max(1) {
                    t = w.end;
                    moved = true;
                }
            }
            if !moved {
                return t;
            }
        }
    }

    fn set_op(&mut self, id: OpId, start: Time, dur: Time) {
        let op = &mut self.tracker.ops[id];
        op.start = start;
        op.end = start + dur;
        let snapshot = *op;
        self.events.push(StateEvent::Rescheduled {
            job: snapshot.job,
            step: snapshot.step,
            machine: snapshot.machine,
            start: snapshot.start,
            end: snapshot.end,
        });
    }

    /// Queues a delay notification for `id`'s job successor, if any.
    /// Coalesces with a pending message for the same operation (the
    /// later end wins, no extra message counted).
    fn send_delay_notify(&mut self, id: OpId) {
        let op = self.tracker.ops[id];
        if self.instance.is_terminal(op.job, op.step) {
            return;
        }
        let succ_id = self.tracker.op_id(op.job, op.step + 1);
        if self.tracker.status[succ_id] == StatusLabel::Completed {
            return;
        }
        let to_machine = self.tracker.ops[succ_id].machine;
        for msg in self.inbox.iter_mut() {
            if msg.job == op.job && msg.step == op.step {
                msg.end = msg.end.max(op.end);
                return;
            }
        }
        self.inbox.push_back(DelayNotify {
            job: op.job,
            step: op.step,
            end: op.end,
        });
        self.messages += 1;
        self.events.push(StateEvent::DelaySent {
            job: op.job,
            step: op.step,
            end: op.end,
            to_machine,
        });
    }

    pub fn into_outcome(self, phase_trace: Vec<(Phase, Time)>) -> RepairOutcome {
        let wip_moves = self.wip_moves();
        RepairOutcome {
            schedule: self.tracker.to_schedule(),
            wip_moves,
            messages: self.messages,
            phase_trace,
            swap_log: self.swap_log,
        }
    }
}

/// Phase 1: relabel every operation relative to `t_d`, restart the
/// interrupted operation after the outage, and right-shift the broken
/// machine's pending queue just enough to stay feasible in queue order.
/// Returns the rescheduled op ids in queue order.
pub fn phase1_status_update(state: &mut RepairState<'_>) -> Vec<OpId> {
    let Breakdown {
        machine: broken,
        t_d,
        ..
    } = state.breakdown;
    let mut rescheduled = Vec::new();

    for id in 0..state.tracker.ops.len() {
        let op = state.tracker.ops[id];
        // An operation ending exactly at t_d has finished when the
        // outage begins, so it counts as completed.
        let label = if op.end <= t_d {
            StatusLabel::Completed
        } else if op.start <= t_d {
            StatusLabel::InProgress
        } else {
            StatusLabel::Waiting
        };
        state.tracker.status[id] = label;
        state.frozen[id] = match label {
            StatusLabel::Completed => true,
            StatusLabel::InProgress => op.machine != broken,
            StatusLabel::Waiting => false,
        };
    }

    // Walk the broken machine's queue in order, restarting the
    // interrupted op and shifting later ops right to clear the window
    // and each other.
    let queue = state.tracker.queues[broken].clone();
    let mut prev_end: Time = 0;
    for id in queue {
        let op = state.tracker.ops[id];
        if state.frozen[id] {
            prev_end = prev_end.max(op.end);
            continue;
        }
        let interrupted = state.tracker.status[id] == StatusLabel::InProgress;
        let dur = if interrupted {
            match state.config.restart_policy {
                RestartPolicy::RestartFull => op.end - op.start,
                RestartPolicy::ResumeRemaining => op.end - t_d,
            }
        } else {
            op.end - op.start
        };
        let lb = if interrupted {
            // restart only once the machine is back up
            state.breakdown.t_d + state.breakdown.delta_t
        } else {
            op.start
        };
        let start = state.earliest_clear(broken, lb.max(prev_end), dur);
        if start != op.start || start + dur != op.end {
            state.set_op(id, start, dur);
            rescheduled.push(id);
        }
        if interrupted && state.config.restart_policy == RestartPolicy::ResumeRemaining {
            // The remainder continues the moment the machine recovers;
            // pin it there so later phases cannot detach the shortened
            // tail from the outage window.
            state.frozen[id] = true;
        }
        prev_end = prev_end.max(start + dur);
    }
    rescheduled
}

/// Phase 2: every rescheduled operation notifies the machine of its job
/// successor. Returns how many notifications were queued.
pub fn phase2_propagate(state: &mut RepairState<'_>, rescheduled: &[OpId]) -> u32 {
    let before = state.messages;
    for &id in rescheduled {
        state.send_delay_notify(id);
    }
    state.messages - before
}

/// Phase 4: drain the FIFO message queue. Each notification pushes the
/// named job successor to its predecessor's new end (never earlier),
/// right-shifts the rest of that machine's queue to stay feasible, and
/// notifies downstream machines about every operation that moved.
/// Returns the number of messages processed.
pub fn phase4_cascade(state: &mut RepairState<'_>) -> Result<u32, Error> {
    let mut processed = 0u32;
    while let Some(msg) = state.inbox.pop_front() {
        processed += 1;
        let job_len = state
            .instance
            .jobs
            .get(msg.job)
            .map(Vec::len)
            .ok_or(Error::UnknownOp {
                job: msg.job,
                step: msg.step,
            })?;
        if msg.step + 1 >= job_len {
            return Err(Error::UnknownOp {
                job: msg.job,
                step: msg.step + 1,
            });
        }
        let succ_id = state.tracker.op_id(msg.job, msg.step + 1);
        if state.tracker.status[succ_id] == StatusLabel::Completed {
            continue;
        }
        let succ = state.tracker.ops[succ_id];
        if succ.start >= msg.end {
            continue; // already late enough
        }
        let machine = succ.machine;
        let dur = succ.end - succ.start;
        let start = state.earliest_clear(machine, msg.end, dur);
        state.set_op(succ_id, start, dur);
        state.events.push(StateEvent::DelayApplied {
            job: msg.job,
            step: msg.step + 1,
            start,
            end: start + dur,
        });
        let mut moved = vec![succ_id];

        // Right-shift later queue entries to restore queue-order
        // feasibility on this machine.
        let queue = state.tracker.queues[machine].clone();
        let from = queue.iter().position(|&q| q == succ_id).unwrap_or(0);
        let mut prev_end = start + dur;
        for &qid in &queue[from + 1..] {
            let op = state.tracker.ops[qid];
            if state.frozen[qid] {
                prev_end = prev_end.max(op.end);
                continue;
            }
            if op.start >= prev_end {
                prev_end = op.end;
                continue;
            }
            let d = op.end - op.start;
            let s = state.earliest_clear(machine, prev_end, d);
            state.set_op(qid, s, d);
            moved.push(qid);
            prev_end = s + d;
        }
        for id in moved {
            state.send_delay_notify(id);
        }
    }
    Ok(processed)
}

/// Queue with the op at `from` moved to position `to`.
fn reordered(queue: &[OpId], from: usize, to: usize) -> Vec<OpId> {
    let mut q = queue.to_vec();
    let id = q.remove(from);
    q.insert(to, id);
    q
}

/// Evaluates a hypothetical reorder of `machine`'s queue (op at `pos_a`
/// moved back to `pos_b`) without applying it. The returned delta is
/// `(makespan + t_wip * wip) after - before`; negative means the
/// reorder pays off.
pub fn eval_swap(
    state: &RepairState<'_>,
    machine: MachineId,
    pos_a: usize,
    pos_b: usize,
) -> Result<i64, Error> {
    let queue = &state.tracker.queues[machine];
    if pos_a >= pos_b || pos_b >= queue.len() {
        return Err(Error::QueuePosition {
            machine,
            pos_a,
            pos_b,
        });
    }
    let mut orders = state.tracker.queues.clone();
    orders[machine] = reordered(queue, pos_a, pos_b);
    match advance_retime(state, &orders) {
        Some(outcome) => Ok(outcome.cost(state.config.t_wip) - state.cost()),
        None => Ok(i64::MAX), // order conflicts with job precedence
    }
}

/// Result of a trial (or committed) global re-timing.
struct RetimeOutcome {
    starts: Vec<Time>,
    expedited: Vec<bool>,
    makespan: Time,
    wip: u32,
}

impl RetimeOutcome {
    fn cost(&self, t_wip: Time) -> i64 {
        self.makespan as i64 + t_wip as i64 * self.wip as i64
    }
}

/// Earliest-start re-timing of all pending operations under the given
/// queue orders, honoring frozen intervals, downtime windows and the
/// disruption instant. Operations may move earlier into freed space; a
/// first operation may additionally start one unit before its planned
/// material delivery when that strictly lowers the makespan (one WIP
/// unit each, chosen greedily). `None` when the orders conflict with
/// job precedence.
fn advance_retime(state: &RepairState<'_>, orders: &[Vec<OpId>]) -> Option<RetimeOutcome> {
    let mut best = retime_with(state, orders, &state.expedited)?;
    let mut chosen = state.expedited.clone();
    loop {
        // Expediting can only help an op pinned at its delivery time.
        let candidates: Vec<OpId> = (0..chosen.len())
            .filter(|&id| {
                !chosen[id]
                    && !state.frozen[id]
                    && state.tracker.ops[id].step == 0
                    && best.starts[id] == state.baseline_start[id]
            })
            .collect();
        let mut improved = false;
        for id in candidates {
            let mut trial = chosen.clone();
            trial[id] = true;
            if let Some(out) = retime_with(state, orders, &trial) {
                if out.makespan < best.makespan {
                    best = out;
                    chosen = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            return Some(best);
        }
    }
}

/// List-scheduling pass for fixed queue orders; the workhorse behind
/// [`advance_retime`].
fn retime_with(
    state: &RepairState<'_>,
    orders: &[Vec<OpId>],
    expedite: &[bool],
) -> Option<RetimeOutcome> {
    let n = state.tracker.ops.len();
    let t_d = state.breakdown.t_d;
    let mut starts: Vec<Time> = state.tracker.ops.iter().map(|o| o.start).collect();
    let mut done: Vec<bool> = state.frozen.clone();
    let mut placed = done.iter().filter(|&&d| d).count();
    let mut pos: Vec<usize> = vec![0; orders.len()];
    let mut used_expedite = vec![false; n];

    // End of op `id` under the tentative starts (frozen ops keep their
    // committed interval, which may be a shortened resumed tail).
    let end_of = |id: OpId, starts: &[Time]| -> Time {
        let op = state.tracker.ops[id];
        if state.frozen[id] {
            op.end
        } else {
            starts[id] + (op.end - op.start)
        }
    };

    while placed < n {
        let mut progress = false;
        for (m, order) in orders.iter().enumerate() {
            while pos[m] < order.len() {
                let id = order[pos[m]];
                if done[id] {
                    pos[m] += 1;
                    continue;
                }
                let op = state.tracker.ops[id];
                let dur = op.end - op.start;
                let ready = if op.step == 0 {
                    0
                } else {
                    let pred = state.tracker.op_id(op.job, op.step - 1);
                    if !done[pred] {
                        break; // wait for the predecessor's machine
                    }
                    end_of(pred, &starts)
                };
                let machine_ready = order[..pos[m]]
                    .iter()
                    .map(|&qid| end_of(qid, &starts))
                    .max()
                    .unwrap_or(0);
                let mut lb = machine_ready.max(ready).max(t_d);
                if op.step == 0 {
                    let delivery = state.baseline_start[id];
                    let floor = if expedite[id] {
                        delivery.saturating_sub(1)
                    } else {
                        delivery
                    };
                    lb = lb.max(floor);
                }
                starts[id] = state.earliest_clear(op.machine, lb, dur);
                if op.step == 0 && expedite[id] {
                    used_expedite[id] = starts[id] < state.baseline_start[id];
                }
                done[id] = true;
                placed += 1;
                pos[m] += 1;
                progress = true;
            }
        }
        if !progress {
            return None;
        }
    }

    let makespan = (0..n).map(|id| end_of(id, &starts)).max().unwrap_or(0);
    let wip = used_expedite.iter().filter(|&&u| u).count() as u32;
    Some(RetimeOutcome {
        starts,
        expedited: used_expedite,
        makespan,
        wip,
    })
}

/// Commits a re-timing outcome and the queue orders that produced it.
fn commit_retime(state: &mut RepairState<'_>, orders: Vec<Vec<OpId>>, outcome: RetimeOutcome) {
    state.tracker.queues = orders;
    for id in 0..state.tracker.ops.len() {
        if state.frozen[id] {
            continue;
        }
        let op = state.tracker.ops[id];
        if outcome.starts[id] != op.start {
            let dur = op.end - op.start;
            state.set_op(id, outcome.starts[id], dur);
        }
    }
    state.expedited = outcome.expedited;
}

/// Phase 3: per-machine queue reordering with WIP accounting.
///
/// First a global advance pass pulls pending work into the space the
/// cascade freed up. Then, per machine in ascending id order, the
/// primary candidate demotes every pending job-terminal operation
/// behind the pending non-terminal ones (stable order) — terminal
/// operations have no successor to starve, so they are the safe ones to
/// wait. Afterwards single terminal-op demotions are tried while the
/// evaluation budget lasts. Only strictly cost-reducing reorders are
/// applied. Returns ids of operations whose start moved later, so the
/// caller can re-run the cascade for them.
pub fn phase3_queue_reorder(state: &mut RepairState<'_>) -> Result<Vec<OpId>, Error> {
    if state.config.swap_budget == 0 {
        return Ok(Vec::new());
    }
    let before_starts: Vec<Time> = state.tracker.ops.iter().map(|o| o.start).collect();

    // Initial advance pass under the current orders.
    let orders = state.tracker.queues.clone();
    if let Some(outcome) = advance_retime(state, &orders) {
        if outcome.cost(state.config.t_wip) - state.cost() < 0 {
            commit_retime(state, orders, outcome);
        }
    }

    let is_terminal = |state: &RepairState<'_>, id: OpId| {
        let op = state.tracker.ops[id];
        state.instance.is_terminal(op.job, op.step)
    };

    for machine in 0..state.instance.num_machines {
        let mut budget = state.config.swap_budget;

        // Primary candidate: stable partition of the pending suffix,
        // non-terminal operations first. (Frozen ops always occupy a
        // queue prefix: they started no later than t_d, pending ops no
        // earlier.)
        let queue = state.tracker.queues[machine].clone();
        let pending_from = queue
            .iter()
            .position(|&id| !state.frozen[id])
            .unwrap_or(queue.len());
        let (head, tail) = queue.split_at(pending_from);
        let mut partitioned: Vec<OpId> = head.to_vec();
        partitioned.extend(tail.iter().copied().filter(|&id| !is_terminal(state, id)));
        partitioned.extend(tail.iter().copied().filter(|&id| is_terminal(state, id)));

        if partitioned != queue && budget > 0 {
            budget -= 1;
            let mut orders = state.tracker.queues.clone();
            orders[machine] = partitioned.clone();
            if let Some(outcome) = advance_retime(state, &orders) {
                let delta = outcome.cost(state.config.t_wip) - state.cost();
                if delta < 0 {
                    let moves = position_moves(&queue, &partitioned);
                    commit_retime(state, orders, outcome);
                    state.events.push(StateEvent::SwapApplied { machine, delta });
                    state.swap_log.push(SwapRecord {
                        machine,
                        moves,
                        delta,
                    });
                }
            }
        }

        // Secondary search: single terminal-op demotions, best first.
        while budget > 0 {
            let queue = state.tracker.queues[machine].clone();
            let mut best: Option<(i64, usize, usize)> = None;
            'eval: for pos_a in 0..queue.len() {
                if state.frozen[queue[pos_a]] || !is_terminal(state, queue[pos_a]) {
                    continue;
                }
                for pos_b in pos_a + 1..queue.len() {
                    if budget == 0 {
                        break 'eval;
                    }
                    budget -= 1;
                    let delta = eval_swap(state, machine, pos_a, pos_b)?;
                    if delta < 0 && best.map_or(true, |(d, ..)| delta < d) {
                        best = Some((delta, pos_a, pos_b));
                    }
                }
            }
            let Some((delta, pos_a, pos_b)) = best else { break };
            let mut orders = state.tracker.queues.clone();
            orders[machine] = reordered(&orders[machine], pos_a, pos_b);
            let outcome = advance_retime(state, &orders).expect("evaluated reorder must retime");
            commit_retime(state, orders, outcome);
            state.events.push(StateEvent::SwapApplied { machine, delta });
            state.swap_log.push(SwapRecord {
                machine,
                moves: vec![(pos_a, pos_b)],
                delta,
            });
        }
    }

    Ok((0..state.tracker.ops.len())
        .filter(|&id| !state.frozen[id] && state.tracker.ops[id].start > before_starts[id])
        .collect())
}

fn position_moves(before: &[OpId], after: &[OpId]) -> Vec<(usize, usize)> {
    before
        .iter()
        .enumerate()
        .filter_map(|(from, id)| {
            let to = after.iter().position(|a| a == id).unwrap_or(from);
            (to != from).then_some((from, to))
        })
        .collect()
}

/// Repairs `schedule` after `breakdown`, running the phases in the
/// order 1 -> 2 -> 4 -> 3 -> 4.
pub fn repair(
    instance: &Instance,
    schedule: &Schedule,
    breakdown: Breakdown,
    config: RepairConfig,
) -> Result<RepairOutcome, Error> {
    repair_with_windows(instance, schedule, breakdown, config, &[])
}

/// Like [`repair`], with additional already-blocked windows from earlier
/// disruptions carried into every feasibility check.
pub fn repair_with_windows(
    instance: &Instance,
    schedule: &Schedule,
    breakdown: Breakdown,
    config: RepairConfig,
    prior_windows: &[Window],
) -> Result<RepairOutcome, Error> {
    let mut state = RepairState::new(instance, schedule, breakdown, config, prior_windows)?;
    let mut trace = Vec::new();

    let rescheduled = phase1_status_update(&mut state);
    trace.push((Phase::StatusUpdate, state.makespan()));
    phase2_propagate(&mut state, &rescheduled);
    trace.push((Phase::DelayPropagation, state.makespan()));
    phase4_cascade(&mut state)?;
    trace.push((Phase::Cascade, state.makespan()));
    let moved_later = phase3_queue_reorder(&mut state)?;
    trace.push((Phase::QueueReorder, state.makespan()));
    for id in moved_later {
        state.send_delay_notify(id);
    }
    phase4_cascade(&mut state)?;
    trace.push((Phase::Cascade, state.makespan()));

    let all_breakdowns: Vec<Breakdown> = state.windows.iter().map(Window::as_breakdown).collect();
    let outcome = state.into_outcome(trace);
    if cfg!(debug_assertions) {
        let report = validate_schedule(instance, &outcome.schedule, &all_breakdowns);
        debug_assert!(
            report.ok,
            "repair produced invalid schedule:\n{}",
            report.to_text()
        );
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{demo_5x3, demo_5x3_baseline};

    fn demo_breakdown() -> Breakdown {
        Breakdown::new(1, 5, 3).unwrap()
    }

    fn demo_state(instance: &Instance) -> RepairState<'_> {
        RepairState::new(
            instance,
            &demo_5x3_baseline(),
            demo_breakdown(),
            RepairConfig::default(),
            &[],
        )
        .unwrap()
    }

    #[test]
    fn zero_length_outage_rejected() {
        assert!(Breakdown::new(1, 5, 0).is_err());
        let instance = demo_5x3();
        let err = repair(
            &instance,
            &demo_5x3_baseline(),
            Breakdown {
                machine: 1,
                t_d: 5,
                delta_t: 0,
            },
            RepairConfig::default(),
        );
        assert!(matches!(err, Err(Error::InvalidBreakdown(_))));
    }

    #[test]
    fn out_of_range_machine_rejected() {
        let instance = demo_5x3();
        let err = repair(
            &instance,
            &demo_5x3_baseline(),
            Breakdown {
                machine: 9,
                t_d: 5,
                delta_t: 3,
            },
            RepairConfig::default(),
        );
        assert!(matches!(err, Err(Error::MachineOutOfRange { .. })));
    }

    #[test]
    fn phase1_restarts_and_right_shifts_broken_queue() {
        let instance = demo_5x3();
        let mut state = demo_state(&instance);
        let rescheduled = phase1_status_update(&mut state);

        // First op of job 4 ran 0..2: completed by t=5.
        assert_eq!(
            state.tracker.status[state.tracker.op_id(4, 0)],
            StatusLabel::Completed
        );
        // Job 0 step 0 runs 3..6 on machine 0: in progress, frozen.
        let j0s0 = state.tracker.op_id(0, 0);
        assert_eq!(state.tracker.status[j0s0], StatusLabel::InProgress);
        assert!(state.frozen[j0s0]);
        // Job 1 step 2 runs 3..7 on the broken machine: restarted, movable.
        let j1s2 = state.tracker.op_id(1, 2);
        assert_eq!(state.tracker.status[j1s2], StatusLabel::InProgress);
        assert!(!state.frozen[j1s2]);

        // New machine-1 row: restart 8..12, then 12..15, 15..19, 19..21.
        let span = |j, s| {
            let op = state.tracker.get(j, s);
            op.start..op.end
        };
        assert_eq!(span(1, 2), 8..12);
        assert_eq!(span(3, 2), 12..15);
        assert_eq!(span(2, 0), 15..19);
        assert_eq!(span(0, 1), 19..21);
        assert_eq!(state.makespan(), 21);
        assert_eq!(rescheduled.len(), 4);
    }

    #[test]
    fn phase2_notifies_only_nonterminal_moves() {
        let instance = demo_5x3();
        let mut state = demo_state(&instance);
        let rescheduled = phase1_status_update(&mut state);
        let sent = phase2_propagate(&mut state, &rescheduled);
        // (1,2) and (3,2) are job-terminal; (2,0) and (0,1) notify.
        assert_eq!(sent, 2);
        let msgs: Vec<_> = state.inbox.iter().copied().collect();
        assert!(msgs.contains(&DelayNotify {
            job: 2,
            step: 0,
            end: 19
        }));
        assert!(msgs.contains(&DelayNotify {
            job: 0,
            step: 1,
            end: 21
        }));
    }

    #[test]
    fn phase4_cascades_to_makespan_24() {
        let instance = demo_5x3();
        let mut state = demo_state(&instance);
        let rescheduled = phase1_status_update(&mut state);
        phase2_propagate(&mut state, &rescheduled);
        phase4_cascade(&mut state).unwrap();

        let span = |j, s| {
            let op = state.tracker.get(j, s);
            op.start..op.end
        };
        // (2,1) pushed to 19..22 dragging (0,2) and (2,2) to 22..24.
        assert_eq!(span(2, 1), 19..22);
        assert_eq!(span(0, 2), 22..24);
        assert_eq!(span(2, 2), 22..24);
        assert_eq!(state.makespan(), 24);
        // The (2,1) push generated one follow-up message: 3 in total.
        assert_eq!(state.messages, 3);
        assert!(state.inbox.is_empty());
    }

    #[test]
    fn phase3_partitions_broken_queue_and_charges_one_wip() {
        let instance = demo_5x3();
        let mut state = demo_state(&instance);
        let rescheduled = phase1_status_update(&mut state);
        phase2_propagate(&mut state, &rescheduled);
        phase4_cascade(&mut state).unwrap();
        phase3_queue_reorder(&mut state).unwrap();

        // Machine 1 pending queue reordered: non-terminal (2,0), (0,1)
        // promoted ahead of terminal (1,2), (3,2).
        assert_eq!(
            state.tracker.queue(1),
            vec![(4, 0), (2, 0), (0, 1), (1, 2), (3, 2)]
        );
        let span = |j, s| {
            let op = state.tracker.get(j, s);
            op.start..op.end
        };
        // (2,0) starts one unit before its planned material delivery.
        assert_eq!(span(2, 0), 9..13);
        assert_eq!(span(0, 1), 13..15);
        assert_eq!(span(1, 2), 15..19);
        assert_eq!(span(3, 2), 19..22);
        // Downstream work advances with it.
        assert_eq!(span(2, 1), 13..16);
        assert_eq!(span(2, 2), 16..18);
        assert_eq!(state.makespan(), 22);
        assert_eq!(state.wip_moves(), 1);
        assert!(!state.swap_log.is_empty());
    }

    #[test]
    fn full_repair_golden_trace() {
        let instance = demo_5x3();
        let outcome = repair(
            &instance,
            &demo_5x3_baseline(),
            demo_breakdown(),
            RepairConfig::default(),
        )
        .unwrap();

        assert_eq!(outcome.schedule.makespan(), 22);
        assert_eq!(outcome.wip_moves, 1);
        assert_eq!(outcome.messages, 3);
        let makespans: Vec<Time> = outcome.phase_trace.iter().map(|&(_, m)| m).collect();
        assert_eq!(makespans, vec![21, 21, 24, 22, 22]);
        assert_eq!(
            outcome
                .phase_trace
                .iter()
                .map(|&(p, _)| p)
                .collect::<Vec<_>>(),
            vec![
                Phase::StatusUpdate,
                Phase::DelayPropagation,
                Phase::Cascade,
                Phase::QueueReorder,
                Phase::Cascade,
            ]
        );
        let report = validate_schedule(&instance, &outcome.schedule, &[demo_breakdown()]);
        assert!(report.ok, "{}", report.to_text());
    }

    #[test]
    fn repair_is_deterministic() {
        let instance = demo_5x3();
        let run = || {
            repair(
                &instance,
                &demo_5x3_baseline(),
                demo_breakdown(),
                RepairConfig::default(),
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_swap_budget_skips_reordering() {
        let instance = demo_5x3();
        let config = RepairConfig {
            swap_budget: 0,
            ..RepairConfig::default()
        };
        let outcome = repair(&instance, &demo_5x3_baseline(), demo_breakdown(), config).unwrap();
        // Without phase-3 reordering the cascade result stands.
        assert_eq!(outcome.schedule.makespan(), 24);
        assert_eq!(outcome.wip_moves, 0);
        assert!(outcome.swap_log.is_empty());
        let report = validate_schedule(&instance, &outcome.schedule, &[demo_breakdown()]);
        assert!(report.ok, "{}", report.to_text());
    }

    #[test]
    fn resume_remaining_keeps_finished_work() {
        let instance = demo_5x3();
        let config = RepairConfig {
            restart_policy: RestartPolicy::ResumeRemaining,
            ..RepairConfig::default()
        };
        let outcome = repair(&instance, &demo_5x3_baseline(), demo_breakdown(), config).unwrap();
        // (1,2) ran 3..7; 2 of 4 units were done at t=5, so 2 remain:
        // the tail resumes at 8..10.
        let sop = outcome.schedule.get(1, 2).unwrap();
        assert_eq!(sop.start..sop.end, 8..10);
        assert!(outcome.schedule.makespan() <= 22);
    }

    #[test]
    fn breakdown_after_completion_changes_nothing() {
        let instance = demo_5x3();
        let baseline = demo_5x3_baseline();
        let outcome = repair(
            &instance,
            &baseline,
            Breakdown::new(1, 30, 5).unwrap(),
            RepairConfig::default(),
        )
        .unwrap();
        assert_eq!(outcome.schedule, baseline);
        assert_eq!(outcome.messages, 0);
        assert_eq!(outcome.wip_moves, 0);
    }

    #[test]
    fn breakdown_at_time_zero_repairs_validly() {
        let instance = demo_5x3();
        let bd = Breakdown::new(0, 0, 4).unwrap();
        let outcome = repair(&instance, &demo_5x3_baseline(), bd, RepairConfig::default()).unwrap();
        let report = validate_schedule(&instance, &outcome.schedule, &[bd]);
        assert!(report.ok, "{}", report.to_text());
    }

    #[test]
    fn eval_swap_rejects_bad_positions() {
        let instance = demo_5x3();
        let mut state = demo_state(&instance);
        phase1_status_update(&mut state);
        assert!(matches!(
            eval_swap(&state, 1, 3, 3),
            Err(Error::QueuePosition { .. })
        ));
        assert!(matches!(
            eval_swap(&state, 1, 0, 99),
            Err(Error::QueuePosition { .. })
        ));
    }

    #[test]
    fn eval_swap_is_side_effect_free() {
        let instance = demo_5x3();
        let mut state = demo_state(&instance);
        let rescheduled = phase1_status_update(&mut state);
        phase2_propagate(&mut state, &rescheduled);
        phase4_cascade(&mut state).unwrap();
        let before = state.tracker.ops.clone();
        // Demoting the restarted terminal (1,2) to the back of machine
        // 1's queue frees the row for the non-terminal ops.
        let delta = eval_swap(&state, 1, 1, 4).unwrap();
        assert_eq!(state.tracker.ops, before);
        assert!(delta < 0, "delta = {delta}");
    }

    #[test]
    fn prior_windows_are_respected() {
        let instance = demo_5x3();
        let first = Breakdown::new(1, 5, 3).unwrap();
        let outcome1 = repair(
            &instance,
            &demo_5x3_baseline(),
            first,
            RepairConfig::default(),
        )
        .unwrap();
        let second = Breakdown::new(0, 9, 2).unwrap();
        let outcome2 = repair_with_windows(
            &instance,
            &outcome1.schedule,
            second,
            RepairConfig::default(),
            &[first.window()],
        )
        .unwrap();
        let report = validate_schedule(&instance, &outcome2.schedule, &[first, second]);
        assert!(report.ok, "{}", report.to_text());
    }
}
