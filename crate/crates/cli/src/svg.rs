//! SVG rendering of maps, plans and executed traces. Path segments are
//! colored by the time since the last scan.

use std::fmt::Write;

use bliss_tamp::belief::{covariance_at, Vec4};
use bliss_tamp::encoder::{Plan, Settings};
use bliss_tamp::geometry::{Point, WorldMap};
use bliss_tamp::simharness::ExecutionTrace;

const PX_PER_M: f64 = 50.0;
const MARGIN: f64 = 20.0;

struct Canvas<'a> {
    map: &'a WorldMap,
    body: String,
}

impl<'a> Canvas<'a> {
    fn new(map: &'a WorldMap) -> Self {
        Canvas { map, body: String::new() }
    }

    fn x(&self, p: Point) -> f64 {
        MARGIN + (p[0] - self.map.bounds.xmin) * PX_PER_M
    }

    fn y(&self, p: Point) -> f64 {
        MARGIN + (self.map.bounds.ymax - p[1]) * PX_PER_M
    }

    fn polygon(&mut self, pts: &[Point], style: &str) {
        let coords: Vec<String> = pts.iter().map(|&p| format!("{:.2},{:.2}", self.x(p), self.y(p))).collect();
        let _ = writeln!(self.body, r#"<polygon points="{}" {style}/>"#, coords.join(" "));
    }

    fn line(&mut self, a: Point, b: Point, color: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="{width}"/>"#,
            self.x(a),
            self.y(a),
            self.x(b),
            self.y(b)
        );
    }

    fn circle(&mut self, c: Point, r_m: f64, style: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" {style}/>"#,
            self.x(c),
            self.y(c),
            r_m * PX_PER_M
        );
    }

    fn map_layer(&mut self, eps_g: f64) {
        let b = self.map.bounds;
        let frame = [[b.xmin, b.ymin], [b.xmax, b.ymin], [b.xmax, b.ymax], [b.xmin, b.ymax]];
        self.polygon(&frame, r##"fill="#ffffff" stroke="#000000" stroke-width="1""##);
        for o in &self.map.obstacles {
            self.polygon(o.vertices(), r##"fill="#808080" stroke="#404040" stroke-width="1""##);
        }
        let g = self.map.goal;
        let diamond = [[g[0] + eps_g, g[1]], [g[0], g[1] + eps_g], [g[0] - eps_g, g[1]], [g[0], g[1] - eps_g]];
        self.polygon(&diamond, r##"fill="#c8f0c8" stroke="#208020" stroke-width="1""##);
        self.circle(self.map.start, 0.12, r##"fill="#2040c0""##);
        self.circle(g, 0.12, r##"fill="#208020""##);
    }

    fn scan_marker(&mut self, p: Point) {
        let s = 7.0;
        let _ = writeln!(
            self.body,
            r##"<rect x="{:.2}" y="{:.2}" width="{s}" height="{s}" fill="none" stroke="#d00000" stroke-width="2"/>"##,
            self.x(p) - s / 2.0,
            self.y(p) - s / 2.0
        );
    }

    fn finish(self) -> String {
        let b = self.map.bounds;
        let w = 2.0 * MARGIN + b.width() * PX_PER_M;
        let h = 2.0 * MARGIN + b.height() * PX_PER_M;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n{}</svg>\n",
            self.body
        )
    }
}

/// Blue right after a scan, red at `t_max`.
pub fn color_for(t: f64, t_max: f64) -> String {
    let f = ((t - 1.0) / (t_max - 1.0).max(1e-9)).clamp(0.0, 1.0);
    let r = (255.0 * f).round() as u8;
    let b = (255.0 * (1.0 - f)).round() as u8;
    format!("#{r:02x}40{b:02x}")
}

/// Largest 3σ radius of the position covariance at time `t`.
fn three_sigma(t: f64, settings: &Settings) -> f64 {
    let c = covariance_at(t, &settings.sigma_w);
    let (a, b, d) = (c[0][0], c[0][1], c[1][1]);
    let lmax = (a + d) / 2.0 + (((a - d) / 2.0).powi(2) + b * b).sqrt();
    3.0 * lmax.max(0.0).sqrt()
}

fn t_scale(means: &[Vec4]) -> f64 {
    means.iter().map(|m| m[3]).fold(2.0, f64::max)
}

/// Obstacles, goal region, mean path colored by `t`, 3σ circles at each
/// state and scan markers.
pub fn render_plan(map: &WorldMap, plan: &Plan, settings: &Settings) -> String {
    let mut c = Canvas::new(map);
    c.map_layer(settings.eps_g);
    let means: Vec<Vec4> = plan.means().copied().collect();
    let t_max = t_scale(&means);
    for m in &means {
        let color = color_for(m[3], t_max);
        let style = format!(r#"fill="none" stroke="{color}" stroke-opacity="0.5" stroke-width="1""#);
        c.circle([m[0], m[1]], three_sigma(m[3], settings), &style);
    }
    for (w, st) in means.windows(2).zip(&plan.steps) {
        let color = color_for(w[1][3], t_max);
        c.line([w[0][0], w[0][1]], [w[1][0], w[1][1]], &color, 2.5);
        if matches!(st.action, bliss_tamp::belief::HybridAction::Scan) {
            c.scan_marker([w[1][0], w[1][1]]);
        }
    }
    c.finish()
}

/// Executed run: true path in black over the belief means colored by `t`.
pub fn render_trace(map: &WorldMap, trace: &ExecutionTrace, settings: &Settings) -> String {
    let mut c = Canvas::new(map);
    c.map_layer(settings.eps_g);
    let t_max = t_scale(&trace.belief_means);
    for (w, a) in trace.belief_means.windows(2).zip(&trace.actions) {
        c.line([w[0][0], w[0][1]], [w[1][0], w[1][1]], &color_for(w[1][3], t_max), 2.0);
        if matches!(a, bliss_tamp::belief::HybridAction::Scan) {
            c.scan_marker([w[1][0], w[1][1]]);
        }
    }
    for w in trace.true_positions.windows(2) {
        c.line(w[0], w[1], "#000000", 1.0);
    }
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colors_run_from_blue_to_red() {
        assert_eq!(color_for(1.0, 10.0), "#0040ff");
        assert_eq!(color_for(10.0, 10.0), "#ff4000");
        assert_eq!(color_for(50.0, 10.0), "#ff4000");
    }

    #[test]
    fn three_sigma_of_isotropic_noise() {
        let s = Settings::default();
        let r = three_sigma(2.0, &s);
        assert!((r - 3.0 * (s.sigma_w[0][0] * 4.0).sqrt()).abs() < 1e-12);
    }
}
