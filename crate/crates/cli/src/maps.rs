//! Bundled maps and the random quadrilateral generator.

use std::f64::consts::FRAC_PI_2;

use bliss_tamp::geometry::{Bounds, ConvexObstacle, Point, WorldMap};
use bliss_tamp::planners::{astar, GridMap, GRID_RESOLUTION};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

const STANDARD: &str = include_str!("../maps/standard.json");
const ENTRAPPED: &str = include_str!("../maps/entrapped.json");
const NARROW: &str = include_str!("../maps/narrow.json");

/// Candidate quadrilaterals rejected before generation gives up.
pub const MAX_REJECTIONS: usize = 10_000;
pub const RANDOM_OBSTACLES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapFamily {
    Standard,
    Entrapped,
    Narrow,
    Random,
}

impl MapFamily {
    pub fn name(self) -> &'static str {
        match self {
            MapFamily::Standard => "standard",
            MapFamily::Entrapped => "entrapped",
            MapFamily::Narrow => "narrow",
            MapFamily::Random => "random",
        }
    }
}

impl std::str::FromStr for MapFamily {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "standard" | "std" => Ok(MapFamily::Standard),
            "entrapped" | "ent" => Ok(MapFamily::Entrapped),
            "narrow" | "nar" => Ok(MapFamily::Narrow),
            "random" | "rnd" => Ok(MapFamily::Random),
            other => Err(format!("unknown map family `{other}`")),
        }
    }
}

/// The bundled map of a fixed family, `None` for Random.
pub fn bundled(family: MapFamily) -> Option<WorldMap> {
    let text = match family {
        MapFamily::Standard => STANDARD,
        MapFamily::Entrapped => ENTRAPPED,
        MapFamily::Narrow => NARROW,
        MapFamily::Random => return None,
    };
    Some(WorldMap::from_json(text).expect("bundled map is valid"))
}

/// Parameters of the random family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomMapParams {
    pub bounds: [f64; 4],
    pub start: Point,
    pub goal: Point,
    /// Minimum clearance of every obstacle from start and goal.
    pub clearance: f64,
    /// Maps without a grid route at this inflation radius are redrawn.
    pub passage: f64,
    /// Range of the nominal circumradius of a quadrilateral.
    pub radius: [f64; 2],
    /// Angular jitter of each vertex around its quadrant direction.
    pub angle_jitter: f64,
    /// Relative jitter of each vertex radius.
    pub radius_jitter: f64,
}

impl Default for RandomMapParams {
    fn default() -> Self {
        Self {
            bounds: [-1.0, -1.0, 11.0, 11.0],
            start: [0.0, 0.0],
            goal: [10.0, 10.0],
            clearance: 1.0,
            passage: 0.5,
            radius: [0.6, 1.3],
            angle_jitter: 0.35,
            radius_jitter: 0.3,
        }
    }
}

/// One convex quadrilateral: four vertices jittered around a random centre.
fn quadrilateral(rng: &mut ChaCha8Rng, p: &RandomMapParams) -> Option<ConvexObstacle> {
    let [xmin, ymin, xmax, ymax] = p.bounds;
    let c = [rng.gen_range(xmin..xmax), rng.gen_range(ymin..ymax)];
    let r = rng.gen_range(p.radius[0]..p.radius[1]);
    let rot = rng.gen_range(0.0..FRAC_PI_2);
    let verts: Vec<Point> = (0..4)
        .map(|i| {
            let a = rot + i as f64 * FRAC_PI_2 + rng.gen_range(-p.angle_jitter..=p.angle_jitter);
            let ri = r * (1.0 + rng.gen_range(-p.radius_jitter..=p.radius_jitter));
            [c[0] + ri * a.cos(), c[1] + ri * a.sin()]
        })
        .collect();
    let inside = verts.iter().all(|v| v[0] >= xmin && v[0] <= xmax && v[1] >= ymin && v[1] <= ymax);
    if !inside {
        return None;
    }
    let o = ConvexObstacle::new(&verts).ok()?;
    let clear = |q: Point| o.clearance(q) >= p.clearance;
    (clear(p.start) && clear(p.goal)).then_some(o)
}

fn navigable(map: &WorldMap, radius: f64) -> Result<bool> {
    let grid = GridMap::build(map, GRID_RESOLUTION, radius, map.start).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(astar(&grid, grid.cell_of(map.start), grid.cell_of(map.goal)).is_ok())
}

/// `count` maps of six random quadrilaterals each, reproducible from `seed`.
/// Each map may reject up to [`MAX_REJECTIONS`] candidates, counting whole
/// maps that leave no route at the passage radius.
pub fn random_maps(seed: u64, count: usize, params: &RandomMapParams) -> Result<Vec<WorldMap>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [xmin, ymin, xmax, ymax] = params.bounds;
    let bounds = Bounds { xmin, ymin, xmax, ymax };
    let mut maps = Vec::with_capacity(count);
    for _ in 0..count {
        let mut rejected = 0;
        let map = loop {
            let mut obstacles = Vec::with_capacity(RANDOM_OBSTACLES);
            while obstacles.len() < RANDOM_OBSTACLES {
                match quadrilateral(&mut rng, params) {
                    Some(o) => obstacles.push(o),
                    None => rejected += 1,
                }
                if rejected >= MAX_REJECTIONS {
                    return Err(CliError::GenerationFailure(rejected));
                }
            }
            let map = WorldMap::new(bounds, params.start, params.goal, obstacles)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            if navigable(&map, params.passage)? {
                break map;
            }
            rejected += 1;
        };
        maps.push(map);
    }
    Ok(maps)
}
