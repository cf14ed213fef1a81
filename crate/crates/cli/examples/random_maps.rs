//! Generates a seeded family of random maps and reports obstacle coverage.

use bliss_cli::maps::{random_maps, RandomMapParams};

fn main() {
    let params = RandomMapParams::default();
    for (i, map) in random_maps(7, 5, &params).unwrap().iter().enumerate() {
        let area: f64 = map.obstacles.iter().map(|o| o.area()).sum();
        let total = map.bounds.width() * map.bounds.height();
        println!("rnd_{i:03}: {} obstacles covering {:.1}%", map.obstacles.len(), 100.0 * area / total);
    }
}
