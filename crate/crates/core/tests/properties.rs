//! Property-based invariants over randomly generated instances.

use proptest::prelude::*;

use jobshop_core::dispatch::{schedule_with_rule, Rule};
use jobshop_core::io::{parse_standard, write_standard};
use jobshop_core::lrcp::{repair, Breakdown};
use jobshop_core::model::{ExecutionTracker, Instance, RepairConfig, Time};
use jobshop_core::validate::validate_schedule;

/// Random instance: each job visits a machine subset in random order.
fn arb_instance() -> impl Strategy<Value = Instance> {
    (2usize..=6, 2usize..=4, any::<u64>()).prop_map(|(jobs, machines, seed)| {
        // deterministic expansion from the seed keeps shrinking sane
        let mut x = seed;
        let mut next = move |modulus: usize| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 33) as usize) % modulus
        };
        let rows: Vec<Vec<(usize, Time)>> = (0..jobs)
            .map(|_| {
                let mut order: Vec<usize> = (0..machines).collect();
                for i in (1..order.len()).rev() {
                    let k = next(i + 1);
                    order.swap(i, k);
                }
                order
                    .into_iter()
                    .map(|m| (m, (next(9) + 1) as Time))
                    .collect()
            })
            .collect();
        Instance::from_rows("prop", machines, &rows).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standard_layout_round_trips(instance in arb_instance()) {
        let text = write_standard(&instance);
        let mut back = parse_standard(&text).unwrap();
        back.name = instance.name.clone();
        prop_assert_eq!(back, instance);
    }

    #[test]
    fn every_rule_is_deterministic_and_valid(instance in arb_instance(), seed in any::<u64>()) {
        for rule in Rule::ALL_DETERMINISTIC.into_iter().chain([Rule::Random(seed)]) {
            let a = schedule_with_rule(&instance, rule);
            let b = schedule_with_rule(&instance, rule);
            prop_assert_eq!(&a, &b);
            let report = validate_schedule(&instance, &a, &[]);
            prop_assert!(report.ok, "{:?}: {}", rule, report.to_text());
            prop_assert!(a.makespan() >= instance.lower_bound());
        }
    }

    #[test]
    fn tracker_queues_follow_start_order(instance in arb_instance()) {
        let schedule = schedule_with_rule(&instance, Rule::Spt);
        let tracker = ExecutionTracker::from_schedule(&instance, &schedule).unwrap();
        for queue in &tracker.queues {
            for pair in queue.windows(2) {
                let (a, b) = (&tracker.ops[pair[0]], &tracker.ops[pair[1]]);
                prop_assert!((a.start, a.job, a.step) <= (b.start, b.job, b.step));
            }
        }
    }

    #[test]
    fn repair_never_breaks_feasibility(
        instance in arb_instance(),
        machine_pick in 0usize..4,
        td_frac in 0.0f64..1.0,
        dt in 1u32..8,
    ) {
        let schedule = schedule_with_rule(&instance, Rule::Spt);
        let machine = machine_pick % instance.num_machines;
        let t_d = (schedule.makespan() as f64 * td_frac) as Time;
        let breakdown = Breakdown::new(machine, t_d, dt).unwrap();
        let outcome = repair(&instance, &schedule, breakdown, RepairConfig::default()).unwrap();
        let report = validate_schedule(&instance, &outcome.schedule, &[breakdown]);
        prop_assert!(report.ok, "{}", report.to_text());
        prop_assert!(outcome.schedule.makespan() >= instance.lower_bound());
    }
}
