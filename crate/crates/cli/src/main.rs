//! Command-line front end for the job-shop scheduling engine.
//!
//! Subcommands: `solve` (dispatch + optional local search), `repair`
//! (single-breakdown recovery), `simulate` (multi-failure scenarios with
//! an event log), `bench` (gap tables) and `gantt` (SVG rendering).
//!
//! Exit codes: 0 success, 2 input/usage error, 3 internal invariant
//! breach (an emitted schedule failed validation).

use std::io::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use jobshop_core::dispatch::{schedule_with_rule, Rule};
use jobshop_core::gantt::render_svg;
use jobshop_core::harness::run_suite;
use jobshop_core::improve::improve;
use jobshop_core::io::{load_bounds, load_instance, BoundsRegistry};
use jobshop_core::lrcp::{repair, Breakdown, Window};
use jobshop_core::model::{RepairConfig, RestartPolicy, Schedule};
use jobshop_core::simulate::{generate_scenario, run_scenario, EventLogWriter};
use jobshop_core::validate::validate_schedule;
use jobshop_core::wire::{check_against_instance, RepairDoc, ScheduleDoc};
use jobshop_core::{Error, Instance};

#[derive(Parser)]
#[command(name = "jobshop", version, about = "Job-shop scheduling engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a schedule with a dispatching rule, optionally refined by
    /// critical-path local search.
    Solve(SolveArgs),
    /// Repair a schedule after a machine breakdown.
    Repair(RepairArgs),
    /// Run a multi-failure scenario and write a replayable event log.
    Simulate(SimulateArgs),
    /// Benchmark rules across instances with gap-to-bound reporting.
    Bench(BenchArgs),
    /// Render a schedule as an SVG Gantt chart.
    Gantt(GanttArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file, or a built-in name such as `demo:5x3`.
    instance: String,
    /// Dispatching rule: spt|lpt|stpt|mpsr|lso|sptxtwk|spttwkr|random.
    #[arg(long, default_value = "spt")]
    rule: String,
    /// Seed for the `random` rule and tie-breaking.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Refine the dispatched schedule with local search.
    #[arg(long)]
    improve: bool,
    /// Local-search iteration budget.
    #[arg(long, default_value_t = 200)]
    budget: u32,
    /// Emit the schedule document as JSON on stdout.
    #[arg(long)]
    json: bool,
    /// Also write the schedule document to this file.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct RepairArgs {
    /// Instance file, or a built-in name such as `demo:5x3`.
    instance: String,
    /// Schedule document (JSON) to repair; when omitted one is built
    /// with --rule first.
    #[arg(long)]
    schedule: Option<String>,
    /// Dispatching rule used when --schedule is omitted.
    #[arg(long, default_value = "spt")]
    rule: String,
    /// Seed for the `random` rule.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Broken machine id (0-based).
    #[arg(long)]
    machine: usize,
    /// Disruption instant.
    #[arg(long)]
    td: u32,
    /// Outage length (>= 1).
    #[arg(long)]
    dt: u32,
    /// WIP penalty per expedited first operation.
    #[arg(long, default_value_t = 1)]
    twip: u32,
    /// Queue-reorder evaluation budget per machine.
    #[arg(long, default_value_t = 16)]
    swap_budget: u32,
    /// Resume the interrupted operation's remainder instead of
    /// restarting it from scratch.
    #[arg(long)]
    resume: bool,
    /// Emit the repair outcome as JSON on stdout.
    #[arg(long)]
    json: bool,
    /// Also write the repair outcome to this file.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Instance file, or a built-in name such as `demo:5x3`.
    instance: String,
    /// Number of random breakdowns to draw.
    #[arg(long, default_value_t = 20)]
    failures: usize,
    /// Maximum outage length per breakdown.
    #[arg(long, default_value_t = 10)]
    max_outage: u32,
    /// Scenario seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Dispatching rule for the initial schedule.
    #[arg(long, default_value = "spt")]
    rule: String,
    /// Refine the initial schedule with local search first.
    #[arg(long)]
    improve: bool,
    /// Local-search iteration budget.
    #[arg(long, default_value_t = 200)]
    budget: u32,
    /// WIP penalty per expedited first operation.
    #[arg(long, default_value_t = 1)]
    twip: u32,
    /// Queue-reorder evaluation budget per machine.
    #[arg(long, default_value_t = 16)]
    swap_budget: u32,
    /// Write the NDJSON event log here.
    #[arg(long)]
    log: Option<String>,
    /// Emit the scenario report as JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated instance files / built-ins.
    #[arg(long, value_delimiter = ',')]
    instances: Vec<String>,
    /// Comma-separated rules, or `all` for every deterministic rule
    /// plus `random`.
    #[arg(long, default_value = "all", value_delimiter = ',')]
    rules: Vec<String>,
    /// Seed for the `random` rule.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Local-search budget applied after each rule (0 = dispatch only).
    #[arg(long, default_value_t = 0)]
    improve_budget: u32,
    /// Bounds file for gap reporting.
    #[arg(long)]
    bounds: Option<String>,
    /// Emit the table as JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GanttArgs {
    /// Instance file, or a built-in name such as `demo:5x3`.
    instance: String,
    /// Schedule document (JSON) to draw; when omitted one is built with
    /// --rule first.
    #[arg(long)]
    schedule: Option<String>,
    /// Dispatching rule used when --schedule is omitted.
    #[arg(long, default_value = "spt")]
    rule: String,
    /// Seed for the `random` rule.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Downtime windows to hatch, as `machine:start:end` triples.
    #[arg(long)]
    window: Vec<String>,
    /// Write the SVG here instead of stdout.
    #[arg(long)]
    out: Option<String>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Repair(args) => cmd_repair(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Gantt(args) => cmd_gantt(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn parse_rule(name: &str, seed: u64) -> Result<Rule, Error> {
    Rule::parse_flag(name, seed)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown rule {name:?}")))
}

fn build_schedule(
    instance: &Instance,
    rule: Rule,
    do_improve: bool,
    budget: u32,
    seed: u64,
) -> Result<(Schedule, String, serde_json::Value), Error> {
    let mut schedule = schedule_with_rule(instance, rule);
    let mut algorithm = rule.label();
    let mut params = json!({"rule": rule.label(), "seed": seed});
    if do_improve {
        let (better, trace) = improve(instance, &schedule, budget, seed)?;
        schedule = better;
        algorithm = format!("{algorithm}+ls");
        params = json!({
            "rule": rule.label(),
            "seed": seed,
            "improve_budget": budget,
            "improve_iterations": trace.points.len() - 1,
        });
    }
    Ok((schedule, algorithm, params))
}

fn load_schedule_doc(path: &str, instance: &Instance) -> Result<Schedule, Error> {
    if path == "demo:baseline" {
        // The hand-built reference schedule for the demo:5x3 instance.
        let schedule = jobshop_core::demo_5x3_baseline();
        let report = validate_schedule(instance, &schedule, &[]);
        if !report.ok {
            return Err(Error::InvalidSchedule(report.to_text()));
        }
        return Ok(schedule);
    }
    let text = std::fs::read_to_string(path)?;
    let doc = ScheduleDoc::from_json(&text)?;
    check_against_instance(&doc, instance)
}

fn write_output(text: &str, json_stdout: bool, out: &Option<String>) -> Result<(), Error> {
    if let Some(path) = out {
        std::fs::write(path, text)?;
    }
    if json_stdout {
        println!("{text}");
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, Error> {
    let instance = load_instance(&args.instance)?;
    let rule = parse_rule(&args.rule, args.seed)?;
    let (schedule, algorithm, params) =
        build_schedule(&instance, rule, args.improve, args.budget, args.seed)?;

    let report = validate_schedule(&instance, &schedule, &[]);
    if !report.ok {
        eprintln!("internal error: produced schedule failed validation:\n{}", report.to_text());
        return Ok(ExitCode::from(3));
    }

    let doc = ScheduleDoc::from_schedule(&schedule, algorithm.clone(), params);
    let text = doc.to_json()?;
    write_output(&text, args.json, &args.out)?;
    if !args.json {
        println!(
            "{}: makespan {} with {} ({} operations)",
            instance.name,
            schedule.makespan(),
            algorithm,
            schedule.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_repair(args: RepairArgs) -> Result<ExitCode, Error> {
    let instance = load_instance(&args.instance)?;
    let schedule = match &args.schedule {
        Some(path) => load_schedule_doc(path, &instance)?,
        None => {
            let rule = parse_rule(&args.rule, args.seed)?;
            build_schedule(&instance, rule, false, 0, args.seed)?.0
        }
    };
    let breakdown = Breakdown::new(args.machine, args.td, args.dt)?;
    let config = RepairConfig {
        t_wip: args.twip,
        swap_budget: args.swap_budget,
        restart_policy: if args.resume {
            RestartPolicy::ResumeRemaining
        } else {
            RestartPolicy::RestartFull
        },
    };
    let outcome = repair(&instance, &schedule, breakdown, config)?;

    let report = validate_schedule(&instance, &outcome.schedule, &[breakdown]);
    if !report.ok {
        eprintln!("internal error: repaired schedule failed validation:\n{}", report.to_text());
        return Ok(ExitCode::from(3));
    }

    let params = json!({
        "machine": args.machine,
        "t_d": args.td,
        "delta_t": args.dt,
        "t_wip": args.twip,
        "swap_budget": args.swap_budget,
        "restart_policy": if args.resume { "resume_remaining" } else { "restart_full" },
    });
    let doc = RepairDoc::from_outcome(&outcome, params);
    let text = doc.to_json()?;
    write_output(&text, args.json, &args.out)?;
    if !args.json {
        println!(
            "{}: repaired makespan {} (wip {}, messages {})",
            instance.name,
            outcome.schedule.makespan(),
            outcome.wip_moves,
            outcome.messages
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let instance = load_instance(&args.instance)?;
    let rule = parse_rule(&args.rule, args.seed)?;
    let (schedule, _, _) = build_schedule(&instance, rule, args.improve, args.budget, args.seed)?;
    let scenario = generate_scenario(&instance, args.failures, args.max_outage, args.seed)?;
    let config = RepairConfig {
        t_wip: args.twip,
        swap_budget: args.swap_budget,
        restart_policy: RestartPolicy::RestartFull,
    };

    let report = match &args.log {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            let mut buffered = std::io::BufWriter::new(file);
            let report = {
                let mut writer = EventLogWriter::new(&mut buffered);
                run_scenario(&instance, &schedule, &scenario, config, Some(&mut writer))?
            };
            buffered.flush()?;
            buffered.into_inner().map_err(|e| Error::Io(e.into_error()))?.sync_all()?;
            report
        }
        None => run_scenario(&instance, &schedule, &scenario, config, None)?,
    };

    // Validate the final schedule against every merged downtime window.
    let mut windows: Vec<Window> = Vec::new();
    for e in &scenario.events {
        windows = jobshop_core::simulate::merge_window(windows, e.window());
    }
    let breakdowns: Vec<Breakdown> = windows.iter().map(Window::as_breakdown).collect();
    let check = validate_schedule(&instance, &report.final_schedule, &breakdowns);
    if !check.ok {
        eprintln!("internal error: final schedule failed validation:\n{}", check.to_text());
        return Ok(ExitCode::from(3));
    }

    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!(
            "{}: {} failures, makespan {} -> {} (wip {}, messages {})",
            instance.name,
            scenario.events.len(),
            report.initial_makespan,
            report.metrics.makespan,
            report.metrics.wip_moves,
            report.metrics.messages
        );
        for ep in &report.episodes {
            println!(
                "  t={} machine {} down {}: makespan {} -> {} (wip {}, msgs {})",
                ep.breakdown.t_d,
                ep.breakdown.machine,
                ep.breakdown.delta_t,
                ep.makespan_before,
                ep.makespan_after,
                ep.wip_moves,
                ep.messages
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, Error> {
    if args.instances.is_empty() {
        return Err(Error::InvalidArgument("--instances is required".into()));
    }
    let mut instances = Vec::new();
    for spec in &args.instances {
        instances.push(load_instance(spec)?);
    }
    let mut rules = Vec::new();
    for name in &args.rules {
        if name == "all" {
            rules.extend(Rule::ALL_DETERMINISTIC);
            rules.push(Rule::Random(args.seed));
        } else {
            rules.push(parse_rule(name, args.seed)?);
        }
    }
    let bounds = match &args.bounds {
        Some(path) => load_bounds(&std::fs::read_to_string(path)?)?,
        None => BoundsRegistry::default(),
    };
    let suite = run_suite(&instances, &rules, args.improve_budget, &bounds)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&suite)?);
    } else {
        print!("{}", suite.to_csv());
        for (method, mean) in &suite.mean_gap_by_method {
            eprintln!("mean gap {method}: {mean:.2}%");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gantt(args: GanttArgs) -> Result<ExitCode, Error> {
    let instance = load_instance(&args.instance)?;
    let schedule = match &args.schedule {
        Some(path) => load_schedule_doc(path, &instance)?,
        None => {
            let rule = parse_rule(&args.rule, args.seed)?;
            build_schedule(&instance, rule, false, 0, args.seed)?.0
        }
    };
    let mut windows = Vec::new();
    for spec in &args.window {
        let parts: Vec<&str> = spec.split(':').collect();
        let parsed: Option<Window> = (|| {
            if parts.len() != 3 {
                return None;
            }
            let machine = parts[0].parse().ok()?;
            let start: u32 = parts[1].parse().ok()?;
            let end: u32 = parts[2].parse().ok()?;
            (end > start).then_some(Window { machine, start, end })
        })();
        let window = parsed.ok_or_else(|| {
            Error::InvalidArgument(format!(
                "bad --window {spec:?}; expected machine:start:end with end > start"
            ))
        })?;
        windows.push(window);
    }
    let svg = render_svg(&instance, &schedule, &windows);
    match &args.out {
        Some(path) => std::fs::write(path, svg)?,
        None => print!("{svg}"),
    }
    Ok(ExitCode::SUCCESS)
}
