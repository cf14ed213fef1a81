//! Seeded rollouts of both planners with replanning after every scan.

use bliss_tamp::encoder::{ProblemConfig, Settings};
use bliss_tamp::geometry::{Bounds, ConvexObstacle, WorldMap};
use bliss_tamp::planners::PlannerKind;
use bliss_tamp::simharness::{monte_carlo, ExecutionSettings};

fn main() {
    let map = WorldMap::new(
        Bounds { xmin: -1.0, ymin: -1.0, xmax: 8.0, ymax: 8.0 },
        [0.0, 0.0],
        [7.0, 7.0],
        vec![ConvexObstacle::rectangle(2.0, 2.0, 4.5, 4.5).unwrap()],
    )
    .unwrap();
    let problem = ProblemConfig::new(map, Settings { horizon: 30, ..Settings::default() });
    let exec = ExecutionSettings { noise_scale: 4.0, ..ExecutionSettings::default() };
    for kind in [PlannerKind::Milp, PlannerKind::TwoStage] {
        let (m, traces) = monte_carlo(kind, &problem, 10, 0, &exec).unwrap();
        println!("{}: SR {}%, ET {:?} +- {:?}, collisions {}", kind.name(), m.sr, m.et_mean, m.et_sd, m.collisions);
        let t = &traces[0];
        println!("  seed {}: {:?} after {} scans and {} moves", t.seed, t.outcome, t.scan_count(), t.move_count());
    }
}
