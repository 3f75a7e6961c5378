//! JSON interchange format for schedules and repair outcomes.
//!
//! Schedule documents carry `{makespan, algorithm, params, schedule}`
//! where `schedule` lists `{job, step, machine, start, end}` records.
//! On the wire, `step` is 1-based (the first operation of a job is
//! step 1); `job` and `machine` are 0-based ids. Internal types always
//! use 0-based steps — conversion happens only here.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::lrcp::{Phase, RepairOutcome};
use crate::model::{Instance, Schedule, ScheduledOp, Time};
use crate::Error;

/// One schedule row in the external schema (1-based `step`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireOp {
    pub job: usize,
    /// 1-based position of the operation within its job.
    pub step: usize,
    pub machine: usize,
    pub start: Time,
    pub end: Time,
}

/// Top-level schedule document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDoc {
    pub makespan: Time,
    pub algorithm: String,
    #[serde(default)]
    pub params: Value,
    pub schedule: Vec<WireOp>,
}

impl ScheduleDoc {
    pub fn from_schedule(schedule: &Schedule, algorithm: impl Into<String>, params: Value) -> Self {
        ScheduleDoc {
            makespan: schedule.makespan(),
            algorithm: algorithm.into(),
            params,
            schedule: schedule
                .ops()
                .iter()
                .map(|op| WireOp {
                    job: op.job,
                    step: op.step + 1,
                    machine: op.machine,
                    start: op.start,
                    end: op.end,
                })
                .collect(),
        }
    }

    /// Converts back to the internal 0-based representation, rejecting
    /// 0 steps (a symptom of a document that was already 0-based).
    pub fn to_schedule(&self) -> Result<Schedule, Error> {
        let mut ops = Vec::with_capacity(self.schedule.len());
        for w in &self.schedule {
            if w.step == 0 {
                return Err(Error::InvalidArgument(format!(
                    "schedule row for job {} has step 0; wire steps are 1-based",
                    w.job
                )));
            }
            if w.end < w.start {
                return Err(Error::InvalidArgument(format!(
                    "schedule row (job {}, step {}) ends before it starts",
                    w.job, w.step
                )));
            }
            ops.push(ScheduledOp {
                job: w.job,
                step: w.step - 1,
                machine: w.machine,
                start: w.start,
                end: w.end,
            });
        }
        Ok(Schedule::new(ops))
    }

    pub fn to_json(&self) -> Result<String, Error> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(text)?)
    }
}

fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::StatusUpdate => "status_update",
        Phase::DelayPropagation => "delay_propagation",
        Phase::QueueReorder => "queue_reorder",
        Phase::Cascade => "cascade",
    }
}

/// External form of a repair result: the repaired schedule document plus
/// protocol metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairDoc {
    pub schedule: ScheduleDoc,
    pub wip_moves: u32,
    pub messages: u32,
    /// `[phase name, makespan]` pairs in execution order.
    pub phase_trace: Vec<(String, Time)>,
    pub swaps: usize,
}

impl RepairDoc {
    pub fn from_outcome(outcome: &RepairOutcome, params: Value) -> Self {
        RepairDoc {
            schedule: ScheduleDoc::from_schedule(&outcome.schedule, "lrcp-repair", params),
            wip_moves: outcome.wip_moves,
            messages: outcome.messages,
            phase_trace: outcome
                .phase_trace
                .iter()
                .map(|&(p, m)| (phase_name(p).to_string(), m))
                .collect(),
            swaps: outcome.swap_log.len(),
        }
    }

    pub fn to_json(&self) -> Result<String, Error> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Sanity-checks a document against an instance before use.
pub fn check_against_instance(doc: &ScheduleDoc, instance: &Instance) -> Result<Schedule, Error> {
    let schedule = doc.to_schedule()?;
    let report = crate::validate::validate_schedule(instance, &schedule, &[]);
    if !report.ok {
        return Err(Error::InvalidSchedule(report.to_text()));
    }
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{demo_5x3, demo_5x3_baseline};

    #[test]
    fn wire_steps_are_one_based() {
        let doc = ScheduleDoc::from_schedule(&demo_5x3_baseline(), "baseline", Value::Null);
        assert!(doc.schedule.iter().all(|w| w.step >= 1));
        assert_eq!(doc.makespan, 19);
        let first = doc
            .schedule
            .iter()
            .find(|w| w.job == 0 && w.step == 1)
            .unwrap();
        assert_eq!((first.machine, first.start, first.end), (0, 3, 6));
    }

    #[test]
    fn round_trip_preserves_schedule() {
        let baseline = demo_5x3_baseline();
        let doc = ScheduleDoc::from_schedule(&baseline, "baseline", Value::Null);
        let json = doc.to_json().unwrap();
        let back = ScheduleDoc::from_json(&json).unwrap();
        assert_eq!(back.to_schedule().unwrap(), baseline);
    }

    #[test]
    fn zero_based_step_rejected() {
        let mut doc = ScheduleDoc::from_schedule(&demo_5x3_baseline(), "x", Value::Null);
        doc.schedule[0].step = 0;
        assert!(doc.to_schedule().is_err());
    }

    #[test]
    fn check_against_instance_validates() {
        let doc = ScheduleDoc::from_schedule(&demo_5x3_baseline(), "x", Value::Null);
        assert!(check_against_instance(&doc, &demo_5x3()).is_ok());
        let mut broken = doc.clone();
        broken.schedule.pop();
        assert!(check_against_instance(&broken, &demo_5x3()).is_err());
    }

    #[test]
    fn repair_doc_names_phases() {
        let instance = demo_5x3();
        let outcome = crate::lrcp::repair(
            &instance,
            &demo_5x3_baseline(),
            crate::lrcp::Breakdown::new(1, 5, 3).unwrap(),
            crate::model::RepairConfig::default(),
        )
        .unwrap();
        let doc = RepairDoc::from_outcome(&outcome, Value::Null);
        let names: Vec<&str> = doc.phase_trace.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "status_update",
                "delay_propagation",
                "cascade",
                "queue_reorder",
                "cascade"
            ]
        );
        assert_eq!(doc.schedule.makespan, 22);
    }
}
