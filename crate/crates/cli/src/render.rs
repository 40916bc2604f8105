//! SVG depiction of a route plan: the unit square mapped to a fixed
//! viewport, depot as a square, customers as circles sized by demand, one
//! colour class per vehicle, and a legend with per-vehicle lengths.

use std::fmt::Write;

use cmvrp_core::instances::{Point, ProblemInstance};
use cmvrp_core::plan::RoutePlan;

const PLOT: f64 = 560.0;
const MARGIN: f64 = 20.0;
const LEGEND_WIDTH: f64 = 220.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Viewport coordinates; y grows upwards in the plane, downwards on screen.
fn project(p: Point) -> (f64, f64) {
    let clamp = |v: f64| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    (MARGIN + clamp(p.x) * PLOT, MARGIN + (1.0 - clamp(p.y)) * PLOT)
}

pub fn render_svg(plan: &RoutePlan, instance: &ProblemInstance) -> String {
    let width = PLOT + 2.0 * MARGIN + LEGEND_WIDTH;
    let height = PLOT + 2.0 * MARGIN;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    svg.push_str("<style>\n");
    svg.push_str(".depot { fill: #000; }\n.customer { fill: #bbb; stroke: #333; stroke-width: 1; }\n");
    svg.push_str("polyline { fill: none; stroke-width: 2; }\ntext { font-family: sans-serif; font-size: 13px; }\n");
    for j in 0..plan.vehicles.len() {
        let c = PALETTE[j % PALETTE.len()];
        let _ = writeln!(svg, ".vehicle-{j} {{ stroke: {c}; fill: {c}; }}");
    }
    svg.push_str("</style>\n");
    let _ = writeln!(svg, "<title>{}</title>", escape(&plan.instance_id));
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="none" stroke="#ccc"/>"##
    );

    for (j, v) in plan.vehicles.iter().enumerate() {
        for tour in &v.tours {
            let points: Vec<String> = tour
                .node_sequence()
                .iter()
                .filter(|&&n| n < instance.num_nodes())
                .map(|&n| {
                    let (x, y) = project(instance.coord(n));
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline class="vehicle-{j}" style="fill: none" points="{}"/>"#,
                points.join(" ")
            );
        }
    }

    for (i, c) in instance.customers.iter().enumerate() {
        let (x, y) = project(c.coord);
        let r = 3.0 + 0.8 * f64::from(c.demand);
        let _ = writeln!(
            svg,
            r#"<circle class="customer" cx="{x:.2}" cy="{y:.2}" r="{r:.2}"><title>customer {} demand {}</title></circle>"#,
            i + 1,
            c.demand
        );
    }
    let (dx, dy) = project(instance.depot);
    let _ = writeln!(
        svg,
        r#"<rect class="depot" x="{:.2}" y="{:.2}" width="12" height="12"><title>depot</title></rect>"#,
        dx - 6.0,
        dy - 6.0
    );

    let lx = PLOT + 2.0 * MARGIN + 10.0;
    let _ = writeln!(
        svg,
        r#"<text x="{lx}" y="{}">total {:.4}{}</text>"#,
        MARGIN + 10.0,
        plan.total_length,
        if plan.feasible { "" } else { " (incomplete)" }
    );
    for (j, v) in plan.vehicles.iter().enumerate() {
        let y = MARGIN + 36.0 + 22.0 * j as f64;
        let length: f64 = v.tours.iter().map(|t| t.length(instance)).sum();
        let _ = writeln!(
            svg,
            r#"<line class="vehicle-{j}" x1="{lx}" y1="{:.1}" x2="{}" y2="{:.1}" stroke-width="3"/>"#,
            y - 4.0,
            lx + 24.0,
            y - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y:.1}">vehicle {} (cap {}): {:.4}</text>"#,
            lx + 32.0,
            j + 1,
            v.capacity,
            length
        );
    }
    svg.push_str("</svg>\n");
    svg
}
