//! Minimal SVG rendering of a tank trajectory: the level on top, then one
//! lane per sensor.

use std::fmt::Write;

use plcmine::plant::{Trajectory, TrajectoryRow};

const WIDTH: f64 = 1000.0;
const MARGIN: f64 = 60.0;
const LEVEL_HEIGHT: f64 = 220.0;
const LANE_HEIGHT: f64 = 40.0;
const GAP: f64 = 20.0;

fn polyline(points: &[(f64, f64)], colour: &str) -> String {
    let mut d = String::new();
    for (x, y) in points {
        let _ = write!(d, "{x:.1},{y:.1} ");
    }
    format!(
        "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1\" points=\"{}\"/>\n",
        d.trim_end()
    )
}

pub fn render(traj: &Trajectory, title: &str, capacity: f64) -> String {
    let lanes: [(&str, fn(&TrajectoryRow) -> bool); 3] = [("LLS", |r| r.lls), ("ULS", |r| r.uls), ("MLS", |r| r.mls)];
    let height = MARGIN + LEVEL_HEIGHT + lanes.len() as f64 * (LANE_HEIGHT + GAP) + MARGIN;
    let plot_w = WIDTH - 2.0 * MARGIN;
    let t_max = traj.rows.last().map_or(1.0, |r| r.time_s).max(traj.dt);
    let x = |t: f64| MARGIN + plot_w * t / t_max;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(svg, "<text x=\"{MARGIN}\" y=\"{}\" font-size=\"14\">{title}</text>", MARGIN / 2.0);

    let top = MARGIN;
    let level_y = |l: f64| top + LEVEL_HEIGHT * (1.0 - l / capacity);
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{top}\" width=\"{plot_w}\" height=\"{LEVEL_HEIGHT}\" fill=\"none\" stroke=\"#888\"/>"
    );
    let _ = writeln!(svg, "<text x=\"5\" y=\"{}\">level</text>", top + LEVEL_HEIGHT / 2.0);
    for mark in [0.0, capacity / 2.0, capacity] {
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{mark}</text>", MARGIN - 4.0, level_y(mark) + 4.0);
    }
    let points: Vec<(f64, f64)> = traj.rows.iter().map(|r| (x(r.time_s), level_y(r.level))).collect();
    svg.push_str(&polyline(&points, "#1f77b4"));

    for (i, (name, get)) in lanes.iter().enumerate() {
        let lane_top = top + LEVEL_HEIGHT + GAP + i as f64 * (LANE_HEIGHT + GAP);
        let y = |on: bool| if on { lane_top } else { lane_top + LANE_HEIGHT };
        let _ = writeln!(svg, "<text x=\"5\" y=\"{}\">{name}</text>", lane_top + LANE_HEIGHT / 2.0 + 4.0);
        let mut points = Vec::with_capacity(traj.rows.len() * 2);
        let mut prev: Option<bool> = None;
        for r in &traj.rows {
            let v = get(r);
            if let Some(p) = prev.filter(|&p| p != v) {
                points.push((x(r.time_s), y(p)));
            }
            points.push((x(r.time_s), y(v)));
            prev = Some(v);
        }
        svg.push_str(&polyline(&points, "#d62728"));
    }
    let axis_y = height - MARGIN + 16.0;
    let _ = writeln!(svg, "<text x=\"{MARGIN}\" y=\"{axis_y}\">0 s</text>");
    let _ = writeln!(svg, "<text x=\"{}\" y=\"{axis_y}\" text-anchor=\"end\">{t_max:.1} s</text>", WIDTH - MARGIN);
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use plcmine::ladder::c1;
    use plcmine::{run_closed_loop, PlantConfig};

    #[test]
    fn renders_well_formed_document() {
        let rec = run_closed_loop(&c1(), &PlantConfig::p1(0.1), 50.0).unwrap();
        let svg = render(&rec.trajectory, "test", 100.0);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 4);
    }

    #[test]
    fn empty_trajectory_still_renders() {
        let svg = render(&Trajectory::new(0.1), "empty", 100.0);
        assert_eq!(svg.matches("<polyline").count(), 4);
    }
}
