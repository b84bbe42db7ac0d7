//! Collision and clearance queries: support-function based distance between
//! convex polytopes (over the Minkowski difference), the 15-axis separating
//! axis test for box pairs, and the sphere-set specialization.

mod gjk;

pub use gjk::{gjk_distance, gjk_query, DEFAULT_MAX_ITER, DEFAULT_TOL};

use std::collections::HashSet;

use crate::bounding::{Obb, Sphere, SphereSet};
use crate::error::{Error, Result};
use crate::math::Point3;

/// Convex object represented by its vertex set; the object is the convex
/// hull of the vertices. Interior (non-extreme) vertices are permitted.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolytope {
    pub vertices: Vec<Point3>,
}

impl ConvexPolytope {
    pub fn new(vertices: Vec<Point3>) -> ConvexPolytope {
        ConvexPolytope { vertices }
    }

    /// Vertex maximizing the inner product with `direction`; ties broken by
    /// lowest vertex index.
    pub fn support(&self, direction: Point3) -> Result<Point3> {
        Ok(self.vertices[self.support_index(direction)?])
    }

    pub(crate) fn support_index(&self, direction: Point3) -> Result<usize> {
        if self.vertices.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !direction.is_finite() || direction.norm_squared() == 0.0 {
            return Err(Error::InvalidDirection);
        }
        let mut best = 0;
        let mut best_dot = self.vertices[0].dot(direction);
        for (i, v) in self.vertices.iter().enumerate().skip(1) {
            let d = v.dot(direction);
            if d > best_dot {
                best = i;
                best_dot = d;
            }
        }
        Ok(best)
    }

    /// Indices of vertices that are not extreme points of the hull
    /// (interior, or redundant on a face or edge). Diagnostic only.
    pub fn non_extreme_vertices(&self) -> Vec<usize> {
        if self.vertices.len() < 2 {
            return Vec::new();
        }
        let mut flagged = Vec::new();
        for i in 0..self.vertices.len() {
            let rest: Vec<Point3> = self
                .vertices
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &p)| p)
                .collect();
            let single = ConvexPolytope::new(vec![self.vertices[i]]);
            let others = ConvexPolytope::new(rest);
            if let Ok(r) = gjk_distance(&single, &others) {
                if r.colliding || r.distance <= 1e-9 {
                    flagged.push(i);
                }
            }
        }
        flagged
    }
}

/// Result of a polytope distance query.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub colliding: bool,
    /// Minimum distance between the hulls; 0 when colliding.
    pub distance: f64,
    /// Closest points `(a, b)`, one per object; `None` when colliding.
    pub witnesses: Option<(Point3, Point3)>,
    pub iterations: usize,
}

/// Additive clearance required beyond geometric contact.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SafetyMargin {
    pub delta: f64,
}

impl SafetyMargin {
    pub fn new(delta: f64) -> Result<SafetyMargin> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::Config("safety margin must be >= 0".to_string()));
        }
        Ok(SafetyMargin { delta })
    }
}

/// Vertex set `{a - b}` over all vertex pairs, exact duplicates removed
/// (first occurrence kept, iterating `a`-major).
pub fn minkowski_difference(a: &ConvexPolytope, b: &ConvexPolytope) -> ConvexPolytope {
    let mut seen = HashSet::with_capacity(a.vertices.len() * b.vertices.len());
    let mut vertices = Vec::new();
    for &va in &a.vertices {
        for &vb in &b.vertices {
            let d = va - vb;
            let key = [
                (d.x + 0.0).to_bits(),
                (d.y + 0.0).to_bits(),
                (d.z + 0.0).to_bits(),
            ];
            if seen.insert(key) {
                vertices.push(d);
            }
        }
    }
    ConvexPolytope { vertices }
}

/// Separating-axis test for two oriented boxes: returns `true` when some
/// axis among the 3 + 3 face normals and 9 edge cross products separates
/// the projected intervals (the boxes are disjoint). Cross products with
/// norm below 1e-12 are skipped as near-parallel.
pub fn sat_boxes(a: &Obb, b: &Obb) -> bool {
    let t = b.center - a.center;
    let test = |axis: Point3| -> bool {
        let ra: f64 = (0..3)
            .map(|i| a.half_extents[i] * a.axis(i).dot(axis).abs())
            .sum();
        let rb: f64 = (0..3)
            .map(|j| b.half_extents[j] * b.axis(j).dot(axis).abs())
            .sum();
        t.dot(axis).abs() > ra + rb
    };
    for i in 0..3 {
        if test(a.axis(i)) {
            return true;
        }
    }
    for j in 0..3 {
        if test(b.axis(j)) {
            return true;
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            let c = a.axis(i).cross(b.axis(j));
            if c.norm() > 1e-12 && test(c) {
                return true;
            }
        }
    }
    false
}

/// Signed clearance between two spheres: `|c2 - c1| - r1 - r2 - delta`.
/// Non-negative means no collision under the margin.
pub fn sphere_clearance(s1: &Sphere, s2: &Sphere, margin: SafetyMargin) -> f64 {
    (s2.center - s1.center).norm() - s1.radius - s2.radius - margin.delta
}

/// Minimum pairwise sphere clearance over two sphere sets.
pub fn sphere_set_clearance(a: &SphereSet, b: &SphereSet, margin: SafetyMargin) -> f64 {
    assert!(
        !a.spheres.is_empty() && !b.spheres.is_empty(),
        "sphere sets must be nonempty"
    );
    let mut best = f64::INFINITY;
    for sa in &a.spheres {
        for sb in &b.spheres {
            best = best.min(sphere_clearance(sa, sb, margin));
        }
    }
    best
}

/// Number of constraints a planner evaluates per iteration:
/// `n_rob * n_env * n_checkpoints`.
pub fn constraint_count(n_rob: usize, n_env: usize, n_checkpoints: usize) -> usize {
    n_rob * n_env * n_checkpoints
}

/// Penetration depth after overlap is detected. Deliberately unimplemented:
/// the clearance comparison only needs distances outside contact.
pub fn epa_penetration(_a: &ConvexPolytope, _b: &ConvexPolytope) -> Result<f64> {
    Err(Error::NotImplemented("expanding-polytope penetration depth"))
}
