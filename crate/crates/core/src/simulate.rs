//! Multi-disruption simulation: generate a breakdown scenario, repair
//! after each failure in order, and persist every state transition to an
//! append-only event log that can be replayed deterministically.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dispatch::{schedule_with_rule, Rule};
use crate::lrcp::{repair_with_windows, Breakdown, StateEvent, Window};
use crate::model::{Instance, Metrics, RepairConfig, Schedule, ScheduledOp, Time};
use crate::Error;

/// A reproducible sequence of machine breakdowns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisruptionScenario {
    pub seed: u64,
    /// Breakdowns sorted by onset time.
    pub events: Vec<Breakdown>,
}

/// Draws `count` breakdowns for `instance`. Onsets are uniform over the
/// horizon of the instance's shortest-processing-time schedule, outage
/// lengths uniform in `1..=max_outage`, machines uniform. Sorted by
/// onset so repairs apply in causal order.
pub fn generate_scenario(
    instance: &Instance,
    count: usize,
    max_outage: Time,
    seed: u64,
) -> Result<DisruptionScenario, Error> {
    if instance.num_machines == 0 {
        return Err(Error::InvalidArgument("instance has no machines".into()));
    }
    if max_outage == 0 {
        return Err(Error::InvalidArgument("max_outage must be >= 1".into()));
    }
    let horizon = schedule_with_rule(instance, Rule::Spt).makespan().max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events: Vec<Breakdown> = (0..count)
        .map(|_| Breakdown {
            machine: rng.gen_range(0..instance.num_machines),
            t_d: rng.gen_range(0..horizon),
            delta_t: rng.gen_range(1..=max_outage),
        })
        .collect();
    events.sort_by_key(|b| (b.t_d, b.machine, b.delta_t));
    Ok(DisruptionScenario { seed, events })
}

/// One repair episode inside a scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub breakdown: Breakdown,
    pub makespan_before: Time,
    pub makespan_after: Time,
    pub wip_moves: u32,
    pub messages: u32,
}

/// Aggregate outcome of running a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub initial_makespan: Time,
    pub final_schedule: Schedule,
    pub episodes: Vec<EpisodeReport>,
    pub metrics: Metrics,
}

/// Applies the scenario's breakdowns to `initial` one by one, carrying
/// accumulated downtime windows forward. `log` (when given) receives the
/// full event stream as NDJSON.
pub fn run_scenario(
    instance: &Instance,
    initial: &Schedule,
    scenario: &DisruptionScenario,
    config: RepairConfig,
    mut log: Option<&mut EventLogWriter<'_>>,
) -> Result<ScenarioReport, Error> {
    let mut schedule = initial.clone();
    let mut windows: Vec<Window> = Vec::new();
    let mut episodes = Vec::new();
    let mut total_wip = 0u32;
    let mut total_messages = 0u32;

    if let Some(w) = log.as_deref_mut() {
        for sop in schedule.ops() {
            w.append(0, EventKind::Scheduled, scheduled_payload(sop))?;
        }
    }

    for &breakdown in &scenario.events {
        let before = schedule.makespan();
        if let Some(w) = log.as_deref_mut() {
            w.append(
                breakdown.t_d,
                EventKind::BreakdownStart,
                json!({
                    "machine": breakdown.machine,
                    "t_d": breakdown.t_d,
                    "delta_t": breakdown.delta_t,
                }),
            )?;
        }
        let outcome = repair_with_windows(instance, &schedule, breakdown, config, &windows)?;
        if let Some(w) = log.as_deref_mut() {
            // Not every intermediate StateEvent is logged — the replayable
            // record is the final placement of each op in this episode.
            for sop in outcome.schedule.ops() {
                w.append(breakdown.t_d, EventKind::Rescheduled, scheduled_payload(sop))?;
            }
            w.append(
                breakdown.t_d,
                EventKind::RepairDone,
                json!({
                    "makespan": outcome.schedule.makespan(),
                    "wip_moves": outcome.wip_moves,
                    "messages": outcome.messages,
                }),
            )?;
            w.flush()?;
        }
        episodes.push(EpisodeReport {
            breakdown,
            makespan_before: before,
            makespan_after: outcome.schedule.makespan(),
            wip_moves: outcome.wip_moves,
            messages: outcome.messages,
        });
        total_wip += outcome.wip_moves;
        total_messages += outcome.messages;
        // Carry the merged window set forward for the next episode.
        windows = merge_window(windows, breakdown.window());
        schedule = outcome.schedule;
    }

    Ok(ScenarioReport {
        initial_makespan: initial.makespan(),
        metrics: Metrics {
            makespan: schedule.makespan(),
            wip_moves: total_wip,
            messages: total_messages,
            gap_percent: None,
        },
        final_schedule: schedule,
        episodes,
    })
}

/// Adds `new` to `windows`, merging overlapping or touching intervals on
/// the same machine.
pub fn merge_window(windows: Vec<Window>, new: Window) -> Vec<Window> {
    let mut merged = new;
    let mut out: Vec<Window> = Vec::with_capacity(windows.len() + 1);
    for w in windows {
        if w.machine == merged.machine && w.start <= merged.end && merged.start <= w.end {
            merged.start = merged.start.min(w.start);
            merged.end = merged.end.max(w.end);
        } else {
            out.push(w);
        }
    }
    out.push(merged);
    out.sort_by_key(|w| (w.machine, w.start));
    out
}

/// Event kinds recorded in the append-only log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Scheduled,
    BreakdownStart,
    Rescheduled,
    DelaySent,
    DelayApplied,
    SwapApplied,
    RepairDone,
}

/// One NDJSON log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLogEntry {
    /// Strictly increasing sequence number starting at 0.
    pub seq: u64,
    /// Simulation time the event refers to.
    pub t: Time,
    pub kind: EventKind,
    pub payload: serde_json::Value,
}

fn scheduled_payload(sop: &ScheduledOp) -> serde_json::Value {
    json!({
        "job": sop.job,
        "step": sop.step,
        "machine": sop.machine,
        "start": sop.start,
        "end": sop.end,
    })
}

/// Append-only NDJSON writer with a monotone sequence counter.
pub struct EventLogWriter<'w> {
    sink: &'w mut dyn Write,
    next_seq: u64,
}

impl<'w> EventLogWriter<'w> {
    pub fn new(sink: &'w mut dyn Write) -> Self {
        EventLogWriter { sink, next_seq: 0 }
    }

    pub fn append(
        &mut self,
        t: Time,
        kind: EventKind,
        payload: serde_json::Value,
    ) -> Result<u64, Error> {
        let entry = EventLogEntry {
            seq: self.next_seq,
            t,
            kind,
            payload,
        };
        serde_json::to_writer(&mut *self.sink, &entry)?;
        self.sink.write_all(b"\n")?;
        self.next_seq += 1;
        Ok(entry.seq)
    }

    /// Mirrors detailed repair-state events into the log (optional
    /// verbosity; replay only needs the Rescheduled records).
    pub fn append_state_events(&mut self, t: Time, events: &[StateEvent]) -> Result<(), Error> {
        for ev in events {
            let (kind, payload) = match ev {
                StateEvent::Rescheduled {
                    job,
                    step,
                    machine,
                    start,
                    end,
                } => (
                    EventKind::Rescheduled,
                    json!({"job": job, "step": step, "machine": machine, "start": start, "end": end}),
                ),
                StateEvent::DelaySent {
                    job,
                    step,
                    end,
                    to_machine,
                } => (
                    EventKind::DelaySent,
                    json!({"job": job, "step": step, "end": end, "to_machine": to_machine}),
                ),
                StateEvent::DelayApplied {
                    job,
                    step,
                    start,
                    end,
                } => (
                    EventKind::DelayApplied,
                    json!({"job": job, "step": step, "start": start, "end": end}),
                ),
                StateEvent::SwapApplied { machine, delta } => (
                    EventKind::SwapApplied,
                    json!({"machine": machine, "delta": delta}),
                ),
            };
            self.append(t, kind, payload)?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), Error> {
        self.sink.flush()?;
        Ok(())
    }
}

/// Parses an NDJSON log, checking sequence continuity.
pub fn parse_log(text: &str) -> Result<Vec<EventLogEntry>, Error> {
    let mut entries = Vec::new();
    let mut last_valid: i64 = -1;
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: EventLogEntry = serde_json::from_str(line).map_err(|e| Error::CorruptLog {
            last_valid,
            msg: e.to_string(),
        })?;
        if entry.seq as i64 != last_valid + 1 {
            return Err(Error::CorruptLog {
                last_valid,
                msg: format!("expected seq {}, found {}", last_valid + 1, entry.seq),
            });
        }
        last_valid = entry.seq as i64;
        entries.push(entry);
    }
    Ok(entries)
}

/// Reconstructs the final schedule from a log: the last placement seen
/// for each operation wins. Errors on gaps or malformed payloads.
pub fn replay(text: &str) -> Result<Schedule, Error> {
    let entries = parse_log(text)?;
    let mut placements: Vec<ScheduledOp> = Vec::new();
    for entry in &entries {
        match entry.kind {
            EventKind::Scheduled | EventKind::Rescheduled => {
                let sop: ScheduledOp =
                    serde_json::from_value(entry.payload.clone()).map_err(|e| Error::CorruptLog {
                        last_valid: entry.seq as i64,
                        msg: format!("bad placement payload: {e}"),
                    })?;
                placements.retain(|p| !(p.job == sop.job && p.step == sop.step));
                placements.push(sop);
            }
            _ => {}
        }
    }
    Ok(Schedule::new(placements))
}
