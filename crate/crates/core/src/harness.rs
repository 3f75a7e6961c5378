//! Benchmark harness: gap-to-upper-bound tables over instance/method
//! grids, plus an empirical message-complexity probe for the repair
//! protocol.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dispatch::{schedule_with_rule, Rule};
use crate::improve::improve;
use crate::io::BoundsRegistry;
use crate::lrcp::Breakdown;
use crate::model::{Instance, RepairConfig, Time};
use crate::simulate::{generate_scenario, run_scenario};
use crate::Error;

/// Percentage gap of `makespan` over upper bound `ub`, rounded half to
/// even at two decimals. Exact integer arithmetic: no float in sight
/// until the final division by 100.
pub fn gap(makespan: Time, ub: Time) -> Result<f64, Error> {
    if ub == 0 {
        return Err(Error::InvalidArgument("upper bound must be positive".into()));
    }
    let diff = makespan as i128 - ub as i128;
    // gap% = 100 * diff / ub; scale to hundredths before rounding.
    let numer = diff * 10_000;
    let denom = ub as i128;
    let q = numer.div_euclid(denom);
    let r = numer.rem_euclid(denom);
    let hundredths = match (2 * r).cmp(&denom) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q % 2 == 0 {
                q
            } else {
                q + 1
            }
        }
    };
    Ok(hundredths as f64 / 100.0)
}

/// One benchmark measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub method: String,
    pub makespan: Time,
    /// Present when the bounds registry knows the instance.
    pub gap_percent: Option<f64>,
    pub wip_moves: u32,
    pub messages: u32,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSuite {
    pub rows: Vec<BenchRow>,
    /// Mean gap per method over the instances that have bounds.
    pub mean_gap_by_method: Vec<(String, f64)>,
}

impl BenchSuite {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance,method,makespan,gap,wip,messages,ms\n");
        for r in &self.rows {
            let gap = r
                .gap_percent
                .map(|g| format!("{g:.2}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.3}\n",
                r.instance, r.method, r.makespan, gap, r.wip_moves, r.messages, r.elapsed_ms
            ));
        }
        out
    }
}

/// Runs every rule in `methods` (plus optional local-search refinement)
/// on every instance, annotating gaps from `bounds`.
pub fn run_suite(
    instances: &[Instance],
    methods: &[Rule],
    improve_budget: u32,
    bounds: &BoundsRegistry,
) -> Result<BenchSuite, Error> {
    let mut rows = Vec::new();
    for instance in instances {
        let ub = bounds.get(&instance.name);
        for &rule in methods {
            let t0 = Instant::now();
            let mut schedule = schedule_with_rule(instance, rule);
            let mut method = rule.label();
            if improve_budget > 0 {
                let (better, _) = improve(instance, &schedule, improve_budget, 0)?;
                schedule = better;
                method = format!("{method}+ls");
            }
            let elapsed_ms = t0.elapsed().as_secs_f64() * 1_000.0;
            let gap_percent = match ub {
                Some(ub) => Some(gap(schedule.makespan(), ub)?),
                None => None,
            };
            rows.push(BenchRow {
                instance: instance.name.clone(),
                method,
                makespan: schedule.makespan(),
                gap_percent,
                wip_moves: 0,
                messages: 0,
                elapsed_ms,
            });
        }
    }

    let mut mean_gap_by_method: Vec<(String, f64)> = Vec::new();
    let mut methods_seen: Vec<String> = Vec::new();
    for r in &rows {
        if !methods_seen.contains(&r.method) {
            methods_seen.push(r.method.clone());
        }
    }
    for method in methods_seen {
        let gaps: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == method)
            .filter_map(|r| r.gap_percent)
            .collect();
        if !gaps.is_empty() {
            let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
            mean_gap_by_method.push((method, (mean * 100.0).round() / 100.0));
        }
    }

    Ok(BenchSuite {
        rows,
        mean_gap_by_method,
    })
}

/// Uniform-random rectangular instance: `jobs` jobs visiting all
/// `machines` machines in a shuffled order, durations in `1..=99`.
pub fn synthetic_instance(jobs: usize, machines: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<(usize, Time)>> = (0..jobs)
        .map(|_| {
            let mut order: Vec<usize> = (0..machines).collect();
            // Fisher-Yates with the seeded stream
            for i in (1..order.len()).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            order
                .into_iter()
                .map(|m| (m, rng.gen_range(1..=99)))
                .collect()
        })
        .collect();
    Instance::from_rows(format!("synthetic_{jobs}x{machines}_{seed}"), machines, &rows)
        .expect("synthetic rows are well-formed")
}

/// One probe measurement: message traffic for repairs at a given size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub jobs: usize,
    pub machines: usize,
    pub max_ops_per_job: usize,
    pub mean_messages: f64,
    pub max_messages: u32,
    /// `J * M * O_max` for this size.
    pub bound_units: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub points: Vec<ProbePoint>,
    /// Fitted constant: max over points of `max_messages / bound_units`.
    pub fitted_c: f64,
}

/// Empirically checks that repair messaging stays within a constant
/// multiple of `J * M * O_max`. Each trial repairs a random scenario on
/// a fresh synthetic instance.
pub fn complexity_probe(
    sizes: &[(usize, usize)],
    trials: u32,
    seed: u64,
) -> Result<ProbeReport, Error> {
    let mut points = Vec::new();
    let mut fitted_c: f64 = 0.0;
    for (idx, &(jobs, machines)) in sizes.iter().enumerate() {
        let mut total: u64 = 0;
        let mut max_messages: u32 = 0;
        let mut o_max = 0;
        for trial in 0..trials {
            let inst_seed = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add((idx as u64) << 32 | trial as u64);
            let instance = synthetic_instance(jobs, machines, inst_seed);
            o_max = instance.max_ops_per_job();
            let schedule = schedule_with_rule(&instance, Rule::Spt);
            let scenario = generate_scenario(&instance, 1, 10, inst_seed ^ 0xABCD)?;
            let report = run_scenario(
                &instance,
                &schedule,
                &scenario,
                RepairConfig::default(),
                None,
            )?;
            total += report.metrics.messages as u64;
            max_messages = max_messages.max(report.metrics.messages);
        }
        let bound_units = (jobs * machines * o_max) as u64;
        fitted_c = fitted_c.max(max_messages as f64 / bound_units as f64);
        points.push(ProbePoint {
            jobs,
            machines,
            max_ops_per_job: o_max,
            mean_messages: total as f64 / trials as f64,
            max_messages,
            bound_units,
        });
    }
    Ok(ProbeReport { points, fitted_c })
}

/// Convenience: repair metrics for a single breakdown on a dispatched
/// schedule (used by bench binaries).
pub fn repair_once(
    instance: &Instance,
    rule: Rule,
    breakdown: Breakdown,
    config: RepairConfig,
) -> Result<(Time, u32, u32), Error> {
    let schedule = schedule_with_rule(instance, rule);
    let outcome = crate::lrcp::repair(instance, &schedule, breakdown, config)?;
    Ok((
        outcome.schedule.makespan(),
        outcome.wip_moves,
        outcome.messages,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::demo_5x3;

    #[test]
    fn gap_reference_value() {
        assert_eq!(gap(1243, 1231).unwrap(), 0.97);
    }

    #[test]
    fn gap_edge_cases() {
        assert_eq!(gap(100, 100).unwrap(), 0.0);
        assert_eq!(gap(90, 100).unwrap(), -10.0);
        // 100 * 1/8 = 12.5 -> half-even rounds 12.50 exactly (no tie at
        // hundredths); tie case: 100 * 1/800 = 0.125 -> 0.12.
        assert_eq!(gap(801, 800).unwrap(), 0.12);
        // 3/800 -> 0.375 -> ties to even 0.38.
        assert_eq!(gap(803, 800).unwrap(), 0.38);
        assert!(gap(1, 0).is_err());
    }

    #[test]
    fn suite_produces_rows_and_means() {
        let instance = demo_5x3();
        let mut bounds = BoundsRegistry::default();
        bounds.insert("demo:5x3", 19);
        let suite = run_suite(
            &[instance],
            &[Rule::Spt, Rule::Lpt],
            0,
            &bounds,
        )
        .unwrap();
        assert_eq!(suite.rows.len(), 2);
        assert!(suite.rows.iter().all(|r| r.gap_percent.is_some()));
        assert_eq!(suite.mean_gap_by_method.len(), 2);
        let csv = suite.to_csv();
        assert!(csv.starts_with("instance,method,makespan,gap,wip,messages,ms\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn synthetic_instances_are_deterministic_and_rectangular() {
        let a = synthetic_instance(6, 4, 3);
        let b = synthetic_instance(6, 4, 3);
        assert_eq!(a, b);
        assert_eq!(a.num_jobs(), 6);
        assert!(a.jobs.iter().all(|j| j.len() == 4));
        // every job visits every machine exactly once
        for job in &a.jobs {
            let mut machines: Vec<usize> = job.iter().map(|o| o.machine).collect();
            machines.sort_unstable();
            assert_eq!(machines, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn probe_respects_linear_bound() {
        let report = complexity_probe(&[(4, 3), (6, 4)], 5, 1).unwrap();
        assert_eq!(report.points.len(), 2);
        for p in &report.points {
            assert!(
                (p.max_messages as u64) <= p.bound_units,
                "messages {} exceed bound {}",
                p.max_messages,
                p.bound_units
            );
        }
        assert!(report.fitted_c <= 1.0);
    }
}
