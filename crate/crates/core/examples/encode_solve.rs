//! Encodes a short instance as a MILP, prints its size, solves it and
//! decodes the plan.

use bliss_milp::{solve, SolveLimits};
use bliss_tamp::encoder::{decode, encode, ProblemConfig, Settings};
use bliss_tamp::geometry::{Bounds, ConvexObstacle, WorldMap};

fn main() {
    let map = WorldMap::new(
        Bounds { xmin: -1.0, ymin: -1.0, xmax: 6.0, ymax: 6.0 },
        [0.0, 0.0],
        [4.0, 4.0],
        vec![ConvexObstacle::rectangle(1.5, 1.5, 3.0, 3.0).unwrap()],
    )
    .unwrap();
    let problem = ProblemConfig::new(map, Settings { horizon: 14, ..Settings::default() });
    let encoded = encode(&problem).unwrap();
    let m = &encoded.model;
    println!("{} variables ({} binary), {} rows", m.num_variables(), m.binary_ids().len(), m.num_constraints());

    let sol = solve(m, &SolveLimits::default()).unwrap();
    println!("{:?} in {} nodes, objective {:.2}", sol.status, sol.node_count, sol.objective_value);
    let plan = decode(&problem, &encoded, &sol).unwrap();
    for st in plan.executable() {
        let p = st.predicted_mean;
        println!("k={:2} {:?} -> ({:.2}, {:.2}) t={}", st.k, st.action, p[0], p[1], p[3]);
    }
}
