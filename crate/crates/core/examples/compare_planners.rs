//! The MILP planner against the grid-then-schedule baseline on a wall map.

use bliss_milp::SolveLimits;
use bliss_tamp::encoder::{ProblemConfig, Settings};
use bliss_tamp::geometry::{Bounds, ConvexObstacle, WorldMap};
use bliss_tamp::planners::{plan_with, PlannerKind};

fn main() {
    let map = WorldMap::new(
        Bounds { xmin: -1.0, ymin: -1.0, xmax: 11.0, ymax: 4.0 },
        [0.0, 0.5],
        [10.0, 0.5],
        vec![ConvexObstacle::rectangle(1.0, 1.0, 9.0, 1.5).unwrap()],
    )
    .unwrap();
    let problem = ProblemConfig::new(map, Settings { horizon: 30, ..Settings::default() });
    let limits = SolveLimits { time_limit: 60.0, ..SolveLimits::default() };
    for kind in [PlannerKind::Milp, PlannerKind::TwoStage] {
        let out = plan_with(kind, &problem, &limits).unwrap();
        let p = &out.plan;
        println!(
            "{:9} objective {:6.2}: {} scans, {} moves, {:.2} s",
            kind.name(),
            p.objective_value,
            p.scan_count,
            p.move_count,
            out.compute_time
        );
    }
}
