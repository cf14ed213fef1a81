//! Convex obstacles as vertex loops plus unit-normal half-planes, and the
//! workspace map that holds them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = [f64; 2];

/// Collinearity threshold on the normalized edge cross product.
const COLLINEAR_EPS: f64 = 1e-12;
const DUPLICATE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("polygon is not convex at vertex {0}")]
    NonConvex(usize),
    #[error("negative inflation radius {0}")]
    NegativeRadius(f64),
    #[error("non-finite coordinate")]
    NonFinite,
}

/// `{ p : normal·p < offset }` is the interior side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl HalfPlane {
    pub fn eval(&self, p: Point) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1]
    }

    /// Signed distance from the boundary line, positive outside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        self.eval(p) - self.offset
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Drops repeated and collinear vertices and orients the loop
/// counter-clockwise. Rejects anything that is not strictly convex.
fn clean_loop(vertices: &[Point]) -> Result<Vec<Point>, GeometryError> {
    if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let scale = vertices.iter().map(|v| v[0].abs().max(v[1].abs())).fold(1.0, f64::max);
    let mut pts: Vec<Point> = Vec::with_capacity(vertices.len());
    for &v in vertices {
        if pts.last().map_or(true, |&l| norm(sub(v, l)) > DUPLICATE_EPS * scale) {
            pts.push(v);
        }
    }
    while pts.len() > 1 && norm(sub(pts[0], pts[pts.len() - 1])) <= DUPLICATE_EPS * scale {
        pts.pop();
    }
    loop {
        if pts.len() < 3 {
            return Err(GeometryError::DegeneratePolygon(format!("{} distinct non-collinear vertices", pts.len())));
        }
        let n = pts.len();
        let drop = (0..n).find(|&i| {
            let a = sub(pts[i], pts[(i + n - 1) % n]);
            let b = sub(pts[(i + 1) % n], pts[i]);
            cross(a, b).abs() <= COLLINEAR_EPS * norm(a) * norm(b) && a[0] * b[0] + a[1] * b[1] > 0.0
        });
        match drop {
            Some(i) => {
                pts.remove(i);
            }
            None => break,
        }
    }
    let n = pts.len();
    let turns: Vec<f64> = (0..n)
        .map(|i| cross(sub(pts[i], pts[(i + n - 1) % n]), sub(pts[(i + 1) % n], pts[i])))
        .collect();
    let positive = turns[0] > 0.0;
    if let Some(bad) = turns.iter().position(|&c| (c > 0.0) != positive || c == 0.0) {
        return Err(GeometryError::NonConvex(bad));
    }
    // winding number must be one: a star polygon turns the same way at every vertex
    let area2: f64 = (0..n).map(|i| cross(pts[i], pts[(i + 1) % n])).sum();
    let mut total_angle = 0.0;
    for i in 0..n {
        let a = sub(pts[i], pts[(i + n - 1) % n]);
        let b = sub(pts[(i + 1) % n], pts[i]);
        total_angle += cross(a, b).atan2(a[0] * b[0] + a[1] * b[1]);
    }
    if (total_angle.abs() - std::f64::consts::TAU).abs() > 1e-6 || area2 == 0.0 {
        return Err(GeometryError::NonConvex(0));
    }
    if !positive {
        pts.reverse();
    }
    Ok(pts)
}

fn edge_halfplanes(pts: &[Point]) -> Vec<HalfPlane> {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let d = sub(pts[(i + 1) % n], pts[i]);
            let len = norm(d);
            let normal = [d[1] / len, -d[0] / len];
            HalfPlane { normal, offset: normal[0] * pts[i][0] + normal[1] * pts[i][1] }
        })
        .collect()
}

/// One outward unit-normal half-plane per edge of a convex loop. Either
/// orientation is accepted; the result always follows counter-clockwise
/// edge order.
pub fn halfplanes_from_polygon(vertices: &[Point]) -> Result<Vec<HalfPlane>, GeometryError> {
    Ok(edge_halfplanes(&clean_loop(vertices)?))
}

fn intersect_lines(a: &HalfPlane, b: &HalfPlane) -> Point {
    let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
    [
        (a.offset * b.normal[1] - a.normal[1] * b.offset) / det,
        (a.normal[0] * b.offset - a.offset * b.normal[0]) / det,
    ]
}

/// Vertex `i` is where edge `i - 1` meets edge `i`.
pub fn vertices_from_halfplanes(planes: &[HalfPlane]) -> Vec<Point> {
    let n = planes.len();
    (0..n).map(|i| intersect_lines(&planes[(i + n - 1) % n], &planes[i])).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexObstacle {
    vertices: Vec<Point>,
    halfplanes: Vec<HalfPlane>,
}

impl ConvexObstacle {
    pub fn new(vertices: &[Point]) -> Result<Self, GeometryError> {
        let vertices = clean_loop(vertices)?;
        let halfplanes = edge_halfplanes(&vertices);
        Ok(Self { vertices, halfplanes })
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Self::new(&[[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn halfplanes(&self) -> &[HalfPlane] {
        &self.halfplanes
    }

    pub fn num_edges(&self) -> usize {
        self.halfplanes.len()
    }

    /// Strict interior test; boundary contact is not a collision.
    pub fn contains(&self, p: Point) -> bool {
        self.halfplanes.iter().all(|h| h.eval(p) < h.offset)
    }

    /// Whether the closed segment `p0 → p1` meets the closed polygon.
    pub fn segment_intersects(&self, p0: Point, p1: Point) -> bool {
        let d = sub(p1, p0);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for h in &self.halfplanes {
            let start = h.eval(p0) - h.offset;
            let rate = h.normal[0] * d[0] + h.normal[1] * d[1];
            if rate == 0.0 {
                if start > 0.0 {
                    return false;
                }
                continue;
            }
            let s = -start / rate;
            if rate > 0.0 {
                hi = hi.min(s);
            } else {
                lo = lo.max(s);
            }
            if lo > hi {
                return false;
            }
        }
        true
    }

    /// Closed-polygon membership: interior or boundary.
    pub fn touches(&self, p: Point) -> bool {
        self.segment_intersects(p, p)
    }

    /// Outward offset by `r`: every half-plane slides `r` along its normal.
    pub fn inflate(&self, r: f64) -> Result<Self, GeometryError> {
        if r < 0.0 || r.is_nan() {
            return Err(GeometryError::NegativeRadius(r));
        }
        let halfplanes: Vec<HalfPlane> =
            self.halfplanes.iter().map(|h| HalfPlane { normal: h.normal, offset: h.offset + r }).collect();
        let vertices = vertices_from_halfplanes(&halfplanes);
        Ok(Self { vertices, halfplanes })
    }

    /// Largest signed face distance `max_i (H_i·p - b_i)`; positive outside.
    pub fn clearance(&self, p: Point) -> f64 {
        self.halfplanes.iter().map(|h| h.signed_distance(p)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n).map(|i| cross(self.vertices[i], self.vertices[(i + 1) % n])).sum::<f64>()
    }

    pub fn bounding_box(&self) -> [f64; 4] {
        let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for v in &self.vertices {
            bb[0] = bb[0].min(v[0]);
            bb[1] = bb[1].min(v[1]);
            bb[2] = bb[2].max(v[0]);
            bb[3] = bb[3].max(v[1]);
        }
        bb
    }
}

/// Axis-aligned workspace rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.xmin && p[0] <= self.xmax && p[1] >= self.ymin && p[1] <= self.ymax
    }

    pub fn diagonal(&self) -> f64 {
        (self.xmax - self.xmin).hypot(self.ymax - self.ymin)
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldMap {
    pub bounds: Bounds,
    pub start: Point,
    pub goal: Point,
    pub obstacles: Vec<ConvexObstacle>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: obstacle {index}: {source}")]
    Obstacle { line: usize, index: usize, source: GeometryError },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    bounds: [f64; 4],
    start: [f64; 2],
    goal: [f64; 2],
    obstacles: Vec<Vec<[f64; 2]>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Byte offset of the value stored under top-level `key`, found by a
/// string-aware scan at brace depth one.
fn key_offset(text: &str, key: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0i32;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'"' => {
                let start = i + 1;
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    if bytes[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
                if depth == 1 && &text[start..i.min(text.len())] == key {
                    return Some(start);
                }
            }
            b'{' | b'[' => depth += 1,
            b'}' | b']' => depth -= 1,
            _ => {}
        }
        i += 1;
    }
    None
}

/// Byte offsets of the elements of the array that follows `from`.
fn array_element_offsets(text: &str, from: usize) -> Vec<usize> {
    let bytes = text.as_bytes();
    let mut i = from;
    while i < bytes.len() && bytes[i] != b'[' {
        i += 1;
    }
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut expecting = true;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'[' | b'{' => {
                if depth == 1 && expecting {
                    out.push(i);
                    expecting = false;
                }
                depth += 1;
            }
            b']' | b'}' => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            b',' if depth == 1 => expecting = true,
            _ => {}
        }
        i += 1;
    }
    out
}

impl WorldMap {
    pub fn new(bounds: Bounds, start: Point, goal: Point, obstacles: Vec<ConvexObstacle>) -> Result<Self, MapError> {
        let map = Self { bounds, start, goal, obstacles };
        map.check().map_err(|message| MapError::Invalid { line: 1, message })?;
        Ok(map)
    }

    fn check(&self) -> Result<(), String> {
        let b = &self.bounds;
        if ![b.xmin, b.ymin, b.xmax, b.ymax, self.start[0], self.start[1], self.goal[0], self.goal[1]]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err("non-finite coordinate".into());
        }
        if b.xmin >= b.xmax || b.ymin >= b.ymax {
            return Err("bounds must satisfy xmin < xmax and ymin < ymax".into());
        }
        for (name, p) in [("start", self.start), ("goal", self.goal)] {
            if !b.contains(p) {
                return Err(format!("{name} lies outside the workspace bounds"));
            }
            if let Some(i) = self.obstacles.iter().position(|o| o.touches(p)) {
                return Err(format!("{name} is not strictly outside obstacle {i}"));
            }
        }
        Ok(())
    }

    /// Parses the JSON map format. Errors carry the 1-based source line.
    pub fn from_json(text: &str) -> Result<Self, MapError> {
        let file: MapFile = serde_json::from_str(text).map_err(|e| MapError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let obstacle_lines: Vec<usize> = key_offset(text, "obstacles")
            .map(|o| array_element_offsets(text, o).into_iter().map(|p| line_of(text, p)).collect())
            .unwrap_or_default();
        let mut obstacles = Vec::with_capacity(file.obstacles.len());
        for (index, loop_) in file.obstacles.iter().enumerate() {
            let line = obstacle_lines.get(index).copied().unwrap_or(1);
            obstacles.push(ConvexObstacle::new(loop_).map_err(|source| MapError::Obstacle { line, index, source })?);
        }
        let [xmin, ymin, xmax, ymax] = file.bounds;
        let map = Self { bounds: Bounds { xmin, ymin, xmax, ymax }, start: file.start, goal: file.goal, obstacles };
        if let Err(message) = map.check() {
            let key = if message.starts_with("start") {
                "start"
            } else if message.starts_with("goal") {
                "goal"
            } else {
                "bounds"
            };
            let line = key_offset(text, key).map_or(1, |o| line_of(text, o));
            return Err(MapError::Invalid { line, message });
        }
        Ok(map)
    }

    /// Canonical pretty JSON; `from_json(to_json(m)) == m`.
    pub fn to_json(&self) -> String {
        let file = MapFile {
            bounds: [self.bounds.xmin, self.bounds.ymin, self.bounds.xmax, self.bounds.ymax],
            start: self.start,
            goal: self.goal,
            obstacles: self.obstacles.iter().map(|o| o.vertices().to_vec()).collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("map serializes");
        s.push('\n');
        s
    }

    /// Copy with every obstacle inflated by `r`.
    pub fn inflated(&self, r: f64) -> Result<Vec<ConvexObstacle>, GeometryError> {
        self.obstacles.iter().map(|o| o.inflate(r)).collect()
    }

    /// First obstacle whose closed polygon the segment meets strictly inside,
    /// i.e. the segment passes through an interior point.
    pub fn first_collision(&self, p0: Point, p1: Point) -> Option<usize> {
        self.obstacles.iter().position(|o| segment_enters_interior(o, p0, p1))
    }
}

/// Whether the segment passes through the open interior (grazing an edge or
/// a vertex does not count).
pub fn segment_enters_interior(o: &ConvexObstacle, p0: Point, p1: Point) -> bool {
    let d = sub(p1, p0);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for h in o.halfplanes() {
        let start = h.eval(p0) - h.offset;
        let rate = h.normal[0] * d[0] + h.normal[1] * d[1];
        if rate == 0.0 {
            if start >= 0.0 {
                return false;
            }
            continue;
        }
        let s = -start / rate;
        if rate > 0.0 {
            hi = hi.min(s);
        } else {
            lo = lo.max(s);
        }
    }
    if lo > hi {
        return false;
    }
    let mid = (lo + hi) / 2.0;
    o.contains([p0[0] + mid * d[0], p0[1] + mid * d[1]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> ConvexObstacle {
        ConvexObstacle::new(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn square_halfplanes() {
        let h = halfplanes_from_polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let expected = [([0.0, -1.0], 0.0), ([1.0, 0.0], 1.0), ([0.0, 1.0], 1.0), ([-1.0, 0.0], 0.0)];
        assert_eq!(h.len(), 4);
        for (hp, (n, b)) in h.iter().zip(expected) {
            assert!(close(hp.normal[0], n[0]) && close(hp.normal[1], n[1]), "{hp:?}");
            assert!(close(hp.offset, b));
        }
    }

    #[test]
    fn triangle_hypotenuse() {
        let h = halfplanes_from_polygon(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]).unwrap();
        assert_eq!(h.len(), 3);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(h[1].normal[0], s) && close(h[1].normal[1], s));
        assert!(close(h[1].offset, 2f64.sqrt()));
    }

    #[test]
    fn rejects_degenerate_and_nonconvex() {
        assert!(matches!(
            halfplanes_from_polygon(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]),
            Err(GeometryError::DegeneratePolygon(_))
        ));
        assert!(matches!(
            halfplanes_from_polygon(&[[0.0, 0.0], [2.0, 0.0], [1.0, 0.5], [2.0, 2.0], [0.0, 2.0]]),
            Err(GeometryError::NonConvex(_))
        ));
        // pentagram: every turn has the same sign but it winds twice
        let star: Vec<Point> = (0..5)
            .map(|k| {
                let a = std::f64::consts::TAU * (2 * k) as f64 / 5.0;
                [a.cos(), a.sin()]
            })
            .collect();
        assert!(matches!(halfplanes_from_polygon(&star), Err(GeometryError::NonConvex(_))));
    }

    #[test]
    fn clockwise_and_redundant_vertices_are_normalized() {
        let o = ConvexObstacle::new(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.5], [1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(o.vertices().len(), 4);
        assert!(o.area() > 0.0);
    }

    #[test]
    fn containment_is_strict() {
        let sq = unit_square();
        assert!(sq.contains([0.5, 0.5]));
        assert!(!sq.contains([1.0, 0.5]));
        assert!(!sq.contains([2.0, 2.0]));
    }

    #[test]
    fn segment_cases() {
        let sq = unit_square();
        assert!(sq.segment_intersects([-1.0, 0.5], [2.0, 0.5]));
        assert!(!sq.segment_intersects([-1.0, -1.0], [-1.0, 2.0]));
        assert!(sq.segment_intersects([0.5, 0.5], [0.5, 0.5]));
        assert!(sq.segment_intersects([1.0, -1.0], [1.0, 2.0]));
        assert!(!segment_enters_interior(&sq, [1.0, -1.0], [1.0, 2.0]));
        assert!(segment_enters_interior(&sq, [-1.0, 0.5], [2.0, 0.5]));
    }

    #[test]
    fn inflation() {
        let sq = unit_square();
        assert_eq!(sq.inflate(0.0).unwrap().vertices(), sq.vertices());
        let big = sq.inflate(0.5).unwrap();
        let expect = [[-0.5, -0.5], [1.5, -0.5], [1.5, 1.5], [-0.5, 1.5]];
        for (v, e) in big.vertices().iter().zip(expect) {
            assert!(close(v[0], e[0]) && close(v[1], e[1]), "{v:?}");
        }
        assert!(matches!(sq.inflate(-0.1), Err(GeometryError::NegativeRadius(_))));
    }

    #[test]
    fn triangle_inflation_grows_area() {
        let tri = ConvexObstacle::new(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]).unwrap();
        let big = tri.inflate(1.0).unwrap();
        assert!(big.area() > tri.area());
        for &v in tri.vertices() {
            assert!(big.contains(v));
        }
    }

    const MAP: &str = r#"{
  "bounds": [-1, -1, 11, 11],
  "start": [0, 0],
  "goal": [10, 10],
  "obstacles": [
    [[2, 2], [4, 2], [4, 4], [2, 4]],
    [[6, 6], [8, 6], [7, 7], [8, 8], [6, 8]]
  ]
}"#;

    #[test]
    fn map_errors_carry_lines() {
        match WorldMap::from_json(MAP) {
            Err(MapError::Obstacle { line, index, .. }) => {
                assert_eq!((line, index), (7, 1));
            }
            other => panic!("{other:?}"),
        }
        let broken = "{\n  \"bounds\": [0, 0, 1, 1],\n  \"start\": [0, 0,\n}";
        assert!(matches!(WorldMap::from_json(broken), Err(MapError::Syntax { line: 4, .. })));
        let bad_goal = MAP.replace("[10, 10]", "[3, 3]").replace("[7, 7], ", "");
        assert!(matches!(WorldMap::from_json(&bad_goal), Err(MapError::Invalid { line: 4, .. })));
    }

    #[test]
    fn map_round_trip() {
        let text = MAP.replace("[7, 7], ", "");
        let m = WorldMap::from_json(&text).unwrap();
        assert_eq!(WorldMap::from_json(&m.to_json()).unwrap(), m);
    }
}
