//! Plans on the bundled standard map and writes an SVG colored by time
//! since the last scan.

use bliss_cli::maps::{bundled, MapFamily};
use bliss_cli::svg::render_plan;
use bliss_milp::SolveLimits;
use bliss_tamp::encoder::{ProblemConfig, Settings};
use bliss_tamp::planners::plan_milp;

fn main() {
    let problem = ProblemConfig::new(bundled(MapFamily::Standard).unwrap(), Settings::default());
    let out = plan_milp(&problem, &SolveLimits::default()).unwrap();
    let path = std::env::temp_dir().join("standard_plan.svg");
    std::fs::write(&path, render_plan(&problem.map, &out.plan, &problem.settings)).unwrap();
    println!("{} scans, {} moves; wrote {}", out.plan.scan_count, out.plan.move_count, path.display());
}
