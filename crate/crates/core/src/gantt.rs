//! Deterministic SVG Gantt rendering: one row per machine, one labeled
//! bar per operation, hatched rectangles for downtime windows.

use crate::lrcp::Window;
use crate::model::{Instance, Schedule};

const BAR_H: u32 = 28;
const ROW_H: u32 = 40;
const LEFT: u32 = 60;
const TOP: u32 = 30;
const PX_PER_UNIT: u32 = 24;

// Fixed palette cycled by job id, chosen for adjacent contrast.
const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#edc948", "#9c755f",
];

/// Renders `schedule` as a standalone SVG document. Output is fully
/// deterministic: ops are drawn in (machine, start, job, step) order.
pub fn render_svg(instance: &Instance, schedule: &Schedule, windows: &[Window]) -> String {
    let makespan = schedule.makespan().max(1);
    let width = LEFT + makespan * PX_PER_UNIT + 20;
    let height = TOP + instance.num_machines.max(1) as u32 * ROW_H + 30;
    let x = |t: u32| LEFT + t * PX_PER_UNIT;
    let y = |m: usize| TOP + m as u32 * ROW_H;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"monospace\" font-size=\"11\">\n"
    ));
    svg.push_str(
        "<defs><pattern id=\"down\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" \
         patternTransform=\"rotate(45)\"><rect width=\"6\" height=\"6\" fill=\"#eeeeee\"/>\
         <line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#888888\" stroke-width=\"2\"/>\
         </pattern></defs>\n",
    );
    svg.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));

    // machine labels and row baselines
    for m in 0..instance.num_machines {
        svg.push_str(&format!(
            "<text x=\"8\" y=\"{}\">M{}</text>\n",
            y(m) + BAR_H / 2 + 4,
            m
        ));
        svg.push_str(&format!(
            "<line x1=\"{LEFT}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"#dddddd\"/>\n",
            y(m) + BAR_H + 3,
            x(makespan)
        ));
    }

    // time axis ticks every 5 units (every unit for small horizons)
    let tick = if makespan <= 30 { 1 } else { 5 };
    for t in (0..=makespan).step_by(tick as usize) {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"#666666\">{}</text>\n",
            x(t) - 3,
            height - 10,
            t
        ));
    }

    // downtime windows under the bars
    let mut ws: Vec<&Window> = windows.iter().collect();
    ws.sort_by_key(|w| (w.machine, w.start, w.end));
    for w in ws {
        if w.machine >= instance.num_machines {
            continue;
        }
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"url(#down)\" \
             stroke=\"#888888\"/>\n",
            x(w.start),
            y(w.machine),
            (w.end - w.start) * PX_PER_UNIT,
            BAR_H
        ));
    }

    // operation bars, deterministic order
    let mut ops: Vec<_> = schedule.ops().to_vec();
    ops.sort_by_key(|o| (o.machine, o.start, o.job, o.step));
    for op in ops {
        let color = PALETTE[op.job % PALETTE.len()];
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{BAR_H}\" fill=\"{color}\" \
             stroke=\"#333333\"/>\n",
            x(op.start),
            y(op.machine),
            (op.end - op.start).max(1) * PX_PER_UNIT,
        ));
        // 1-based job and step in the label, matching the wire format
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"white\">J{}.{}</text>\n",
            x(op.start) + 3,
            y(op.machine) + BAR_H / 2 + 4,
            op.job + 1,
            op.step + 1
        ));
    }

    svg.push_str("</svg>\n");
    svg
}
