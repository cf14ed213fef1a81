//! Half-plane form of an obstacle, inflation, and segment collision checks.

use bliss_tamp::geometry::{Bounds, ConvexObstacle, WorldMap};

fn main() {
    let block = ConvexObstacle::new(&[[4.0, 4.0], [6.0, 4.5], [5.5, 6.0], [4.2, 5.8]]).unwrap();
    for h in block.halfplanes() {
        println!("h = [{:+.3}, {:+.3}], b = {:+.3}", h.normal[0], h.normal[1], h.offset);
    }
    let grown = block.inflate(0.25).unwrap();
    println!("area {:.3} -> {:.3} after inflating by 0.25", block.area(), grown.area());

    let map = WorldMap::new(Bounds { xmin: 0.0, ymin: 0.0, xmax: 10.0, ymax: 10.0 }, [1.0, 1.0], [9.0, 9.0], vec![block]).unwrap();
    for (a, b) in [([1.0, 1.0], [9.0, 9.0]), ([1.0, 1.0], [9.0, 2.0])] {
        println!("{a:?} -> {b:?}: first collision {:?}", map.first_collision(a, b));
    }
    println!("clearance of the goal: {:.3}", map.obstacles[0].clearance(map.goal));
}
