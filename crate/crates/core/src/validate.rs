//! Independent schedule validator.
//!
//! Checks the hard constraints of the problem — job precedence, machine
//! capacity, completeness, duration consistency — plus downtime windows
//! from breakdowns. All intervals are half-open `[start, end)`, so
//! back-to-back operations on a machine are legal.

use serde::{Deserialize, Serialize};

use crate::lrcp::Breakdown;
use crate::model::{Instance, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    Precedence,
    Capacity,
    Completeness,
    BreakdownOverlap,
    DurationMismatch,
    NegativeStart,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub job: usize,
    pub step: usize,
    pub machine: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    /// Line-oriented text form, one violation per line.
    pub fn to_text(&self) -> String {
        if self.ok {
            return "ok\n".to_string();
        }
        let mut out = String::new();
        for v in &self.violations {
            out.push_str(&format!(
                "{:?} job={} step={} machine={}: {}\n",
                v.kind, v.job, v.step, v.machine, v.detail
            ));
        }
        out
    }
}

/// Validates `schedule` against `instance` and the given downtime
/// windows. Total: every problem becomes a report entry, never an error.
pub fn validate_schedule(
    instance: &Instance,
    schedule: &Schedule,
    breakdowns: &[Breakdown],
) -> ValidationReport {
    let mut violations = Vec::new();

    // Completeness + duration + negative start, driven by the instance.
    for op in instance.ops() {
        match schedule.get(op.job, op.step) {
            None => violations.push(Violation {
                kind: ViolationKind::Completeness,
                job: op.job,
                step: op.step,
                machine: op.machine,
                detail: "operation not scheduled".into(),
            }),
            Some(sop) => {
                if sop.machine != op.machine {
                    violations.push(Violation {
                        kind: ViolationKind::Completeness,
                        job: op.job,
                        step: op.step,
                        machine: sop.machine,
                        detail: format!("scheduled on machine {}, expected {}", sop.machine, op.machine),
                    });
                    continue;
                }
                let span = sop.end.saturating_sub(sop.start);
                let resumed_tail = sop.end >= sop.start
                    && span < op.duration
                    && span >= 1
                    && breakdowns
                        .iter()
                        .any(|b| b.machine == op.machine && b.t_d + b.delta_t == sop.start);
                // A shorter interval is only legal for the remainder of an
                // operation resumed right after an outage on its machine.
                if sop.end < sop.start || (span != op.duration && !resumed_tail) {
                    violations.push(Violation {
                        kind: ViolationKind::DurationMismatch,
                        job: op.job,
                        step: op.step,
                        machine: op.machine,
                        detail: format!(
                            "interval [{}, {}) does not match duration {}",
                            sop.start, sop.end, op.duration
                        ),
                    });
                }
            }
        }
    }

    for sop in schedule.ops() {
        if instance.op(sop.job, sop.step).is_none() {
            violations.push(Violation {
                kind: ViolationKind::Completeness,
                job: sop.job,
                step: sop.step,
                machine: sop.machine,
                detail: "operation not in the instance".into(),
            });
        }
    }

    // Precedence within each job.
    for job in &instance.jobs {
        for pair in job.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if let (Some(sa), Some(sb)) = (schedule.get(a.job, a.step), schedule.get(b.job, b.step)) {
                if sb.start < sa.end {
                    violations.push(Violation {
                        kind: ViolationKind::Precedence,
                        job: b.job,
                        step: b.step,
                        machine: b.machine,
                        detail: format!(
                            "starts at {} before step {} ends at {}",
                            sb.start, a.step, sa.end
                        ),
                    });
                }
            }
        }
    }

    // Machine capacity: pairwise overlap on each machine.
    let mut per_machine: Vec<Vec<&crate::model::ScheduledOp>> = vec![Vec::new(); instance.num_machines];
    for sop in schedule.ops() {
        if sop.machine < per_machine.len() {
            per_machine[sop.machine].push(sop);
        }
    }
    for ops in &mut per_machine {
        ops.sort_by_key(|o| (o.start, o.job, o.step));
        for pair in ops.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b.start < a.end {
                violations.push(Violation {
                    kind: ViolationKind::Capacity,
                    job: b.job,
                    step: b.step,
                    machine: b.machine,
                    detail: format!(
                        "[{}, {}) overlaps (job {}, step {}) at [{}, {})",
                        b.start, b.end, a.job, a.step, a.start, a.end
                    ),
                });
            }
        }
    }

    // Downtime windows, half-open on both sides.
    for sop in schedule.ops() {
        for b in breakdowns {
            if b.machine == sop.machine && sop.start < b.t_d + b.delta_t && b.t_d < sop.end {
                violations.push(Violation {
                    kind: ViolationKind::BreakdownOverlap,
                    job: sop.job,
                    step: sop.step,
                    machine: sop.machine,
                    detail: format!(
                        "[{}, {}) intersects downtime [{}, {})",
                        sop.start,
                        sop.end,
                        b.t_d,
                        b.t_d + b.delta_t
                    ),
                });
            }
        }
    }

    // Starts are unsigned, so NegativeStart cannot fire on well-typed
    // input; the kind exists for wire-format inputs that deserialize
    // negative numbers (rejected before reaching this type).

    violations.sort_by(|a, b| (a.kind, a.job, a.step).cmp(&(b.kind, b.job, b.step)));
    ValidationReport {
        ok: violations.is_empty(),
        violations,
    }
}
