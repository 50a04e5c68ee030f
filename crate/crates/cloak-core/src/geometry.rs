//! Planar geometry primitives: points, closed polylines, the domain
//! specification, and point-in-polygon tests used for region tagging
//! and cell assignment.

use crate::{CloakError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(&self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// A simple closed polyline. Vertices are stored once; the closing
/// segment from the last vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedPolyline {
    pub vertices: Vec<Point>,
}

impl ClosedPolyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(CloakError::Geometry(format!(
                "closed polyline needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let poly = ClosedPolyline { vertices };
        if poly.self_intersects() {
            return Err(CloakError::Geometry(
                "polyline is self-intersecting".into(),
            ));
        }
        Ok(poly)
    }

    /// Regular polygon approximating a circle, counter-clockwise.
    pub fn circle(center: Point, radius: f64, segments: usize) -> Self {
        let n = segments.max(8);
        let vertices = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64 * std::f64::consts::TAU;
                Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
            })
            .collect();
        ClosedPolyline { vertices }
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Signed area (positive for counter-clockwise orientation).
    pub fn signed_area(&self) -> f64 {
        self.segments()
            .map(|(a, b)| (a.x * b.y - b.x * a.y) * 0.5)
            .sum()
    }

    pub fn centroid(&self) -> Point {
        let a = self.signed_area();
        let mut cx = 0.0;
        let mut cy = 0.0;
        for (p, q) in self.segments() {
            let cross = p.x * q.y - q.x * p.y;
            cx += (p.x + q.x) * cross;
            cy += (p.y + q.y) * cross;
        }
        Point::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    /// Even-odd point-in-polygon test. Points exactly on the boundary
    /// may land on either side; callers needing a deterministic rule
    /// must handle that case themselves.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.segments() {
            if (a.y > p.y) != (b.y > p.y) {
                let t = (p.y - a.y) / (b.y - a.y);
                let x_cross = a.x + t * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from `p` to the nearest boundary segment.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.segments()
            .map(|(a, b)| dist_point_segment(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius_from(&self, center: Point) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.dist(center))
            .fold(0.0, f64::max)
    }

    fn self_intersects(&self) -> bool {
        let segs: Vec<_> = self.segments().collect();
        let n = segs.len();
        for i in 0..n {
            for j in (i + 1)..n {
                // skip adjacent segments (shared endpoint)
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(segs[i].0, segs[i].1, segs[j].0, segs[j].1) {
                    return true;
                }
            }
        }
        false
    }
}

pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Closest point on segment [a, b] to `p`.
pub fn project_point_segment(p: Point, a: Point, b: Point) -> Point {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Computational domain: rigid obstacle boundary, cloak annulus outer
/// boundary, truncation circle of radius `outer_radius`, and the edge
/// length of the hexagonal control cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub obstacle_contour: ClosedPolyline,
    pub cloak_outer_boundary: ClosedPolyline,
    pub outer_radius: f64,
    pub cell_edge: f64,
}

impl DomainSpec {
    pub fn new(
        obstacle_contour: ClosedPolyline,
        cloak_outer_boundary: ClosedPolyline,
        outer_radius: f64,
        cell_edge: f64,
    ) -> Result<Self> {
        if cell_edge <= 0.0 {
            return Err(CloakError::Geometry(format!(
                "cell edge must be positive, got {cell_edge}"
            )));
        }
        // obstacle strictly inside the cloak boundary
        for v in &obstacle_contour.vertices {
            if !cloak_outer_boundary.contains(*v) {
                return Err(CloakError::Geometry(format!(
                    "obstacle vertex ({}, {}) lies outside the cloak boundary",
                    v.x, v.y
                )));
            }
        }
        // cloak boundary strictly inside the truncation circle
        let origin = Point::new(0.0, 0.0);
        let rmax = cloak_outer_boundary.max_radius_from(origin);
        if rmax >= outer_radius {
            return Err(CloakError::Geometry(format!(
                "cloak boundary reaches radius {rmax} but the truncation circle has radius {outer_radius}"
            )));
        }
        Ok(DomainSpec {
            obstacle_contour,
            cloak_outer_boundary,
            outer_radius,
            cell_edge,
        })
    }

    /// Circular obstacle of radius `r` with a concentric circular cloak,
    /// both centered at the origin.
    pub fn circular(
        obstacle_radius: f64,
        cloak_radius: f64,
        outer_radius: f64,
        cell_edge: f64,
        segments: usize,
    ) -> Result<Self> {
        let o = Point::new(0.0, 0.0);
        DomainSpec::new(
            ClosedPolyline::circle(o, obstacle_radius, segments),
            ClosedPolyline::circle(o, cloak_radius, segments),
            outer_radius,
            cell_edge,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circle_area_converges() {
        let c = ClosedPolyline::circle(Point::new(0.0, 0.0), 2.0, 512);
        assert_relative_eq!(
            c.signed_area(),
            std::f64::consts::PI * 4.0,
            max_relative = 1e-3
        );
    }

    #[test]
    fn point_in_polygon() {
        let c = ClosedPolyline::circle(Point::new(1.0, 0.0), 1.0, 64);
        assert!(c.contains(Point::new(1.0, 0.0)));
        assert!(c.contains(Point::new(1.8, 0.0)));
        assert!(!c.contains(Point::new(-0.5, 0.0)));
        assert!(!c.contains(Point::new(1.0, 1.5)));
    }

    #[test]
    fn self_intersection_rejected() {
        let bowtie = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        assert!(ClosedPolyline::new(bowtie).is_err());
    }

    #[test]
    fn domain_spec_rejects_obstacle_outside_cloak() {
        let o = Point::new(0.0, 0.0);
        let res = DomainSpec::new(
            ClosedPolyline::circle(o, 2.0, 32),
            ClosedPolyline::circle(o, 1.0, 32),
            10.0,
            0.1,
        );
        assert!(res.is_err());
    }

    #[test]
    fn centroid_of_offset_circle() {
        let c = ClosedPolyline::circle(Point::new(3.0, -1.0), 0.5, 128);
        let g = c.centroid();
        assert_relative_eq!(g.x, 3.0, epsilon = 1e-9);
        assert_relative_eq!(g.y, -1.0, epsilon = 1e-9);
    }
}
