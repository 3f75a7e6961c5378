//! Job-shop scheduling engine with reactive disruption repair.
//!
//! The crate builds static schedules for classic job-shop benchmark
//! instances (dispatching rules plus critical-path local search), then
//! repairs them after machine breakdowns with a deterministic four-phase
//! message-passing protocol between per-machine agents. A simulation
//! layer replays multi-failure scenarios against an append-only event
//! log, and a harness computes gap-to-upper-bound tables.

pub mod dispatch;
pub mod gantt;
pub mod harness;
pub mod improve;
pub mod io;
pub mod lrcp;
pub mod model;
pub mod simulate;
pub mod validate;
pub mod wire;

pub use model::{
    demo_5x3, demo_5x3_baseline, makespan, ExecutionTracker, Instance, JobId, MachineId, Metrics,
    OpId, Operation, RepairConfig, RestartPolicy, Schedule, ScheduledOp, StatusLabel, Time,
};

use thiserror::Error as ThisError;

/// Unified error type for the engine.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("machine id {machine} out of range (instance has {num_machines} machines)")]
    MachineOutOfRange { machine: usize, num_machines: usize },
    #[error("operation (job {job}, step {step}) does not exist in the instance")]
    UnknownOp { job: usize, step: usize },
    #[error("operation (job {job}, step {step}) scheduled on the wrong machine")]
    MachineMismatch { job: usize, step: usize },
    #[error("operation (job {job}, step {step}) scheduled more than once")]
    DuplicateOp { job: usize, step: usize },
    #[error("operation (job {job}, step {step}) missing from the schedule")]
    MissingOp { job: usize, step: usize },
    #[error("invalid breakdown: {0}")]
    InvalidBreakdown(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("queue position out of range: machine {machine}, positions {pos_a}..{pos_b}")]
    QueuePosition {
        machine: usize,
        pos_a: usize,
        pos_b: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("event log corrupt after seq {last_valid}: {msg}")]
    CorruptLog { last_valid: i64, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
