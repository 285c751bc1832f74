//! Polygon representation and ear-clipping sub-triangulation.

use crate::error::{Result, VemError};
use crate::Point;

#[derive(Clone, Debug)]
pub struct Edge {
    pub start: Point,
    pub end: Point,
    pub length: f64,
    /// Unit tangent from `start` to `end`.
    pub tangent: [f64; 2],
    /// Outward unit normal (tangent rotated clockwise).
    pub normal: [f64; 2],
}

impl Edge {
    /// Point at parameter `s` in `[0, 1]` along the edge.
    pub fn point_at(&self, s: f64) -> Point {
        [
            self.start[0] + s * (self.end[0] - self.start[0]),
            self.start[1] + s * (self.end[1] - self.start[1]),
        ]
    }
}

/// Simple polygon with counterclockwise vertices and cached geometric data.
#[derive(Clone, Debug)]
pub struct Polygon2D {
    vertices: Vec<Point>,
    area: f64,
    centroid: Point,
    diameter: f64,
    edges: Vec<Edge>,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Polygon through `center + r (cos a, sin a)` for `(a, r)` rays, taken in
/// increasing angle order. Star-shaped around `center` when consecutive
/// angles are less than `pi` apart.
pub fn star_polygon(center: Point, mut rays: Vec<(f64, f64)>) -> Result<Polygon2D> {
    rays.sort_by(|a, b| a.0.total_cmp(&b.0));
    Polygon2D::new(
        rays.into_iter()
            .map(|(a, r)| [center[0] + r * a.cos(), center[1] + r * a.sin()])
            .collect(),
    )
}

/// Signed area by the shoelace formula (positive for CCW ordering).
pub fn signed_area(vertices: &[Point]) -> f64 {
    let o = vertices[0];
    let n = vertices.len();
    let mut twice = 0.0;
    for i in 1..n - 1 {
        twice += cross(o, vertices[i], vertices[i + 1]);
    }
    0.5 * twice
}

impl Polygon2D {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(VemError::InvalidPolygon(format!(
                "a polygon needs at least 3 vertices, got {n}"
            )));
        }
        if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(VemError::InvalidPolygon("non-finite vertex coordinate".into()));
        }
        let mut diameter: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                diameter = diameter.max(dist(vertices[i], vertices[j]));
            }
        }
        let mut edges = Vec::with_capacity(n);
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let length = dist(a, b);
            if length <= 1e-14 * diameter.max(f64::MIN_POSITIVE) {
                return Err(VemError::InvalidPolygon(format!(
                    "zero-length edge at vertex {i}"
                )));
            }
            let tangent = [(b[0] - a[0]) / length, (b[1] - a[1]) / length];
            edges.push(Edge {
                start: a,
                end: b,
                length,
                tangent,
                normal: [tangent[1], -tangent[0]],
            });
        }

        let area = signed_area(&vertices);
        if area.abs() <= 1e-14 * diameter * diameter {
            return Err(VemError::InvalidPolygon("degenerate polygon with zero area".into()));
        }
        if area < 0.0 {
            return Err(VemError::Orientation(area));
        }

        // Centroid relative to the first vertex for better conditioning.
        let o = vertices[0];
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 1..n - 1 {
            let a = vertices[i];
            let b = vertices[i + 1];
            let w = cross(o, a, b);
            cx += w * (a[0] - o[0] + b[0] - o[0]);
            cy += w * (a[1] - o[1] + b[1] - o[1]);
        }
        let centroid = [o[0] + cx / (6.0 * area), o[1] + cy / (6.0 * area)];

        Ok(Self {
            vertices,
            area,
            centroid,
            diameter,
            edges,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn centroid(&self) -> Point {
        self.centroid
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn perimeter(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn triangulate(&self) -> Result<Triangulation> {
        ear_clip(self)
    }
}

/// Triangles as CCW index triples into the polygon's vertex list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangulation {
    pub triangles: Vec<[usize; 3]>,
}

impl Triangulation {
    pub fn areas(&self, vertices: &[Point]) -> Vec<f64> {
        self.triangles
            .iter()
            .map(|t| 0.5 * cross(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
            .collect()
    }
}

fn point_in_triangle(p: Point, a: Point, b: Point, c: Point, tol: f64) -> bool {
    cross(a, b, p) >= -tol && cross(b, c, p) >= -tol && cross(c, a, p) >= -tol
}

/// Ear clipping for simple CCW polygons, convex or not.
///
/// Only strictly convex vertices (cross product above `1e-12 h^2`) are
/// clipped, so collinear hanging nodes never produce zero-area triangles;
/// they are removed as part of a neighbouring ear instead.
pub fn ear_clip(polygon: &Polygon2D) -> Result<Triangulation> {
    let verts = polygon.vertices();
    let h = polygon.diameter();
    let tol = 1e-12 * h * h;
    let mut remaining: Vec<usize> = (0..verts.len()).collect();
    let mut triangles = Vec::with_capacity(verts.len() - 2);

    while remaining.len() > 3 {
        let m = remaining.len();
        let mut clipped = None;
        for i in 0..m {
            let ip = remaining[(i + m - 1) % m];
            let ic = remaining[i];
            let inx = remaining[(i + 1) % m];
            let (a, b, c) = (verts[ip], verts[ic], verts[inx]);
            if cross(a, b, c) <= tol {
                continue;
            }
            let blocked = remaining.iter().any(|&j| {
                j != ip
                    && j != ic
                    && j != inx
                    && verts[j] != a
                    && verts[j] != b
                    && verts[j] != c
                    && point_in_triangle(verts[j], a, b, c, tol)
            });
            if !blocked {
                clipped = Some(i);
                break;
            }
        }
        let i = clipped.ok_or_else(|| {
            VemError::Triangulation(format!(
                "no ear found with {} vertices left; polygon may be self-intersecting",
                remaining.len()
            ))
        })?;
        let m = remaining.len();
        triangles.push([
            remaining[(i + m - 1) % m],
            remaining[i],
            remaining[(i + 1) % m],
        ]);
        remaining.remove(i);
    }
    let (a, b, c) = (remaining[0], remaining[1], remaining[2]);
    if cross(verts[a], verts[b], verts[c]) <= tol {
        return Err(VemError::Triangulation(
            "last triangle is degenerate; polygon has collinear-only remainder".into(),
        ));
    }
    triangles.push([a, b, c]);
    Ok(Triangulation { triangles })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polygon2D {
        Polygon2D::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    fn l_shape() -> Polygon2D {
        Polygon2D::new(vec![
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [0.0, 2.0],
        ])
        .unwrap()
    }

    #[test]
    fn unit_square_measures() {
        let p = square();
        assert!((p.area() - 1.0).abs() < 1e-15);
        assert!((p.centroid()[0] - 0.5).abs() < 1e-15);
        assert!((p.centroid()[1] - 0.5).abs() < 1e-15);
        assert!((p.diameter() - 2f64.sqrt()).abs() < 1e-15);
        let n = p.edges()[0].normal;
        assert!((n[0] - 0.0).abs() < 1e-15 && (n[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn l_shape_area_and_triangulation() {
        let p = l_shape();
        assert!((p.area() - 3.0).abs() < 1e-14);
        let t = ear_clip(&p).unwrap();
        assert_eq!(t.triangles.len(), 4);
        let areas = t.areas(p.vertices());
        assert!(areas.iter().all(|&a| a > 0.0));
        assert!((areas.iter().sum::<f64>() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_is_its_own_triangulation() {
        let p = Polygon2D::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let t = ear_clip(&p).unwrap();
        assert_eq!(t.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn convex_pentagon() {
        let verts: Vec<Point> = (0..5)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 5.0;
                [t.cos(), t.sin()]
            })
            .collect();
        let p = Polygon2D::new(verts).unwrap();
        let t = ear_clip(&p).unwrap();
        assert_eq!(t.triangles.len(), 3);
        let s: f64 = t.areas(p.vertices()).iter().sum();
        assert!((s - p.area()).abs() < 1e-12 * p.area());
    }

    #[test]
    fn hanging_node_has_no_zero_area_triangle() {
        let p = Polygon2D::new(vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 0.5],
            [1.0, 1.0],
            [0.0, 1.0],
        ])
        .unwrap();
        let t = ear_clip(&p).unwrap();
        assert_eq!(t.triangles.len(), 3);
        for a in t.areas(p.vertices()) {
            assert!(a > 1e-3);
        }
    }

    #[test]
    fn rejects_bad_polygons() {
        let cw = Polygon2D::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]);
        assert!(matches!(cw, Err(VemError::Orientation(_))));
        let rep = Polygon2D::new(vec![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(rep, Err(VemError::InvalidPolygon(_))));
        let line = Polygon2D::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        assert!(line.is_err());
    }

    #[test]
    fn normals_close_the_boundary() {
        let p = l_shape();
        let mut s = [0.0, 0.0];
        for e in p.edges() {
            let nn = (e.normal[0].powi(2) + e.normal[1].powi(2)).sqrt();
            assert!((nn - 1.0).abs() < 1e-14);
            s[0] += e.length * e.normal[0];
            s[1] += e.length * e.normal[1];
        }
        assert!(s[0].abs() < 1e-12 * p.perimeter() && s[1].abs() < 1e-12 * p.perimeter());
    }
}
