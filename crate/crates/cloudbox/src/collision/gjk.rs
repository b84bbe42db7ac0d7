//! Distance between convex polytopes via iterative support queries on
//! their Minkowski difference.
//!
//! The simplex distance sub-algorithm uses signed volumes (Cramer-style
//! barycentric tests) rather than Johnson's recursive determinants: the
//! containment decision for each sub-simplex reduces to sign comparisons
//! of signed areas/volumes, and when those are inconclusive the closest
//! point is taken as the minimum over boundary sub-simplices, which is
//! always valid. Lower-dimensional (coplanar or collinear) vertex sets are
//! handled by the same reduction.
//!
//! Termination: a repeated support vertex, the support-gap criterion
//! `||v||^2 - <v, w>| <= tol * max(1, ||v||^2)`, or origin containment.
//! Exceeding `max_iter` reports the best distance bound found.

use crate::error::{Error, Result};
use crate::math::Point3;

use super::{ConvexPolytope, DistanceResult};

/// Default relative termination tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration budget.
pub const DEFAULT_MAX_ITER: usize = 128;

#[derive(Debug, Clone, Copy)]
struct SupportVertex {
    /// Point of the Minkowski difference: `a - b`.
    w: Point3,
    a: Point3,
    b: Point3,
    ia: usize,
    ib: usize,
}

#[derive(Debug, Clone, Copy)]
struct Reduction {
    point: Point3,
    verts: [SupportVertex; 4],
    lambda: [f64; 4],
    len: usize,
    contains_origin: bool,
}

impl Reduction {
    fn single(v: SupportVertex) -> Reduction {
        Reduction {
            point: v.w,
            verts: [v; 4],
            lambda: [1.0, 0.0, 0.0, 0.0],
            len: 1,
            contains_origin: false,
        }
    }

    fn witnesses(&self) -> (Point3, Point3) {
        let mut a = Point3::ZERO;
        let mut b = Point3::ZERO;
        for i in 0..self.len {
            a += self.verts[i].a * self.lambda[i];
            b += self.verts[i].b * self.lambda[i];
        }
        (a, b)
    }

    fn has_pair(&self, ia: usize, ib: usize) -> bool {
        self.verts[..self.len]
            .iter()
            .any(|v| v.ia == ia && v.ib == ib)
    }
}

fn reduce_segment(a: SupportVertex, b: SupportVertex) -> Reduction {
    let ab = b.w - a.w;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return Reduction::single(a);
    }
    let t = -a.w.dot(ab) / len2;
    if t <= 0.0 {
        Reduction::single(a)
    } else if t >= 1.0 {
        Reduction::single(b)
    } else {
        Reduction {
            point: a.w + ab * t,
            verts: [a, b, a, a],
            lambda: [1.0 - t, t, 0.0, 0.0],
            len: 2,
            contains_origin: false,
        }
    }
}

fn reduce_triangle(a: SupportVertex, b: SupportVertex, c: SupportVertex) -> Reduction {
    let ab = b.w - a.w;
    let ac = c.w - a.w;
    let n = ab.cross(ac);
    let n2 = n.norm_squared();
    let scale2 = ab.norm_squared().max(ac.norm_squared()).max((c.w - b.w).norm_squared());

    if n2 > 1e-20 * scale2 * scale2 {
        // barycentric coordinates of the origin's projection onto the plane
        let la = b.w.cross(c.w).dot(n) / n2;
        let lb = c.w.cross(a.w).dot(n) / n2;
        let lc = a.w.cross(b.w).dot(n) / n2;
        if la >= 0.0 && lb >= 0.0 && lc >= 0.0 {
            return Reduction {
                point: a.w * la + b.w * lb + c.w * lc,
                verts: [a, b, c, a],
                lambda: [la, lb, lc, 0.0],
                len: 3,
                contains_origin: false,
            };
        }
    }

    // outside (or degenerate): the closest point lies on an edge
    let mut best = reduce_segment(a, b);
    for r in [reduce_segment(a, c), reduce_segment(b, c)] {
        if r.point.norm_squared() < best.point.norm_squared() {
            best = r;
        }
    }
    best
}

fn reduce_tetrahedron(
    a: SupportVertex,
    b: SupportVertex,
    c: SupportVertex,
    d: SupportVertex,
) -> Reduction {
    let vol = |p: Point3, q: Point3, r: Point3, s: Point3| -> f64 {
        (q - p).dot((r - p).cross(s - p))
    };
    let total = vol(a.w, b.w, c.w, d.w);
    let edge2 = [
        (b.w - a.w).norm_squared(),
        (c.w - a.w).norm_squared(),
        (d.w - a.w).norm_squared(),
        (c.w - b.w).norm_squared(),
        (d.w - b.w).norm_squared(),
        (d.w - c.w).norm_squared(),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);

    if total * total > 1e-20 * edge2 * edge2 * edge2 {
        let la = vol(Point3::ZERO, b.w, c.w, d.w) / total;
        let lb = vol(a.w, Point3::ZERO, c.w, d.w) / total;
        let lc = vol(a.w, b.w, Point3::ZERO, d.w) / total;
        let ld = vol(a.w, b.w, c.w, Point3::ZERO) / total;
        if la >= 0.0 && lb >= 0.0 && lc >= 0.0 && ld >= 0.0 {
            return Reduction {
                point: Point3::ZERO,
                verts: [a, b, c, d],
                lambda: [la, lb, lc, ld],
                len: 4,
                contains_origin: true,
            };
        }
    }

    // outside (or flat): the closest point lies on a face
    let mut best = reduce_triangle(a, b, c);
    for r in [
        reduce_triangle(a, b, d),
        reduce_triangle(a, c, d),
        reduce_triangle(b, c, d),
    ] {
        if r.point.norm_squared() < best.point.norm_squared() {
            best = r;
        }
    }
    best
}

fn reduce(verts: &[SupportVertex; 4], len: usize) -> Reduction {
    match len {
        1 => Reduction::single(verts[0]),
        2 => reduce_segment(verts[0], verts[1]),
        3 => reduce_triangle(verts[0], verts[1], verts[2]),
        _ => reduce_tetrahedron(verts[0], verts[1], verts[2], verts[3]),
    }
}

fn support_md(a: &ConvexPolytope, b: &ConvexPolytope, dir: Point3) -> Result<SupportVertex> {
    let ia = a.support_index(dir)?;
    let ib = b.support_index(-dir)?;
    let pa = a.vertices[ia];
    let pb = b.vertices[ib];
    Ok(SupportVertex { w: pa - pb, a: pa, b: pb, ia, ib })
}

/// Distance query with the default tolerance and iteration budget.
pub fn gjk_distance(a: &ConvexPolytope, b: &ConvexPolytope) -> Result<DistanceResult> {
    gjk_query(a, b, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Minimum distance / collision test between the convex hulls of two
/// vertex sets.
///
/// Reports collision exactly when the origin lies in the hull of the
/// Minkowski difference (within `tol`); otherwise the returned distance
/// and witness points come from the terminating simplex's barycentric
/// coordinates.
pub fn gjk_query(
    a: &ConvexPolytope,
    b: &ConvexPolytope,
    tol: f64,
    max_iter: usize,
) -> Result<DistanceResult> {
    if a.vertices.is_empty() || b.vertices.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(tol > 0.0) {
        return Err(Error::Config("gjk tol must be > 0".to_string()));
    }
    if max_iter < 1 {
        return Err(Error::Config("gjk max_iter must be >= 1".to_string()));
    }

    let init_dir = {
        let d = a.vertices[0] - b.vertices[0];
        if d.norm_squared() > 0.0 {
            d
        } else {
            Point3::new(1.0, 0.0, 0.0)
        }
    };
    let first = support_md(a, b, init_dir)?;
    let mut verts = [first; 4];
    let mut len = 1usize;

    let mut best: Option<Reduction> = None;
    for iteration in 1..=max_iter {
        let red = reduce(&verts, len);
        let v2 = red.point.norm_squared();

        if red.contains_origin || v2 <= tol * tol {
            return Ok(DistanceResult {
                colliding: true,
                distance: 0.0,
                witnesses: None,
                iterations: iteration,
            });
        }

        let improved = match &best {
            Some(prev) => v2 < prev.point.norm_squared(),
            None => true,
        };
        if improved {
            best = Some(red);
        }

        let s = support_md(a, b, -red.point)?;
        let duplicate = red.has_pair(s.ia, s.ib);
        let gap = (v2 - red.point.dot(s.w)).abs();
        if duplicate || gap <= tol * v2.max(1.0) || !improved {
            let settled = best.expect("at least one reduction recorded");
            let (wa, wb) = settled.witnesses();
            return Ok(DistanceResult {
                colliding: false,
                distance: settled.point.norm(),
                witnesses: Some((wa, wb)),
                iterations: iteration,
            });
        }

        verts = red.verts;
        len = red.len;
        verts[len] = s;
        len += 1;
    }

    Err(Error::NonConvergence {
        iterations: max_iter,
        best_bound: best.map(|r| r.point.norm()).unwrap_or(f64::INFINITY),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounding::obb_to_polytope;
    use crate::bounding::Obb;
    use crate::math::Mat3;

    fn cube(center: Point3, half: f64) -> ConvexPolytope {
        obb_to_polytope(&Obb {
            center,
            rotation: Mat3::IDENTITY,
            half_extents: [half, half, half],
        })
    }

    #[test]
    fn separated_cubes_distance_two() {
        let a = cube(Point3::ZERO, 0.5);
        let b = cube(Point3::new(3.0, 0.0, 0.0), 0.5);
        let r = gjk_distance(&a, &b).unwrap();
        assert!(!r.colliding);
        assert!((r.distance - 2.0).abs() < 1e-12, "distance {}", r.distance);
        let (wa, wb) = r.witnesses.unwrap();
        assert!((wa.x - 0.5).abs() < 1e-12);
        assert!((wb.x - 2.5).abs() < 1e-12);
        assert!(((wa - wb).norm() - r.distance).abs() < 1e-12);
        assert!(wa.y.abs() <= 0.5 + 1e-12 && wa.z.abs() <= 0.5 + 1e-12);
    }

    #[test]
    fn identical_cubes_collide() {
        let a = cube(Point3::new(1.0, 1.0, 1.0), 0.5);
        let r = gjk_distance(&a, &a).unwrap();
        assert!(r.colliding);
        assert_eq!(r.distance, 0.0);
        assert!(r.witnesses.is_none());
    }

    #[test]
    fn point_to_point_distance() {
        let a = ConvexPolytope::new(vec![Point3::ZERO]);
        let b = ConvexPolytope::new(vec![Point3::new(3.0, 4.0, 0.0)]);
        let r = gjk_distance(&a, &b).unwrap();
        assert!((r.distance - 5.0).abs() < 1e-12);
        let (wa, wb) = r.witnesses.unwrap();
        assert_eq!(wa, Point3::ZERO);
        assert_eq!(wb, Point3::new(3.0, 4.0, 0.0));
    }

    #[test]
    fn coplanar_polygons_in_a_plane() {
        // two squares in the z = 0 plane, 1 apart on x
        let sq = |cx: f64| {
            ConvexPolytope::new(vec![
                Point3::new(cx - 0.5, -0.5, 0.0),
                Point3::new(cx + 0.5, -0.5, 0.0),
                Point3::new(cx + 0.5, 0.5, 0.0),
                Point3::new(cx - 0.5, 0.5, 0.0),
            ])
        };
        let r = gjk_distance(&sq(0.0), &sq(2.0)).unwrap();
        assert!(!r.colliding);
        assert!((r.distance - 1.0).abs() < 1e-12);
        let overlapping = gjk_distance(&sq(0.0), &sq(0.5)).unwrap();
        assert!(overlapping.colliding);
    }

    #[test]
    fn touching_cubes_report_contact() {
        let a = cube(Point3::ZERO, 0.5);
        let b = cube(Point3::new(1.0, 0.0, 0.0), 0.5);
        let r = gjk_distance(&a, &b).unwrap();
        assert!(r.distance <= 1e-9);
    }

    #[test]
    fn max_iter_of_zero_is_rejected() {
        let a = cube(Point3::ZERO, 0.5);
        assert!(gjk_query(&a, &a, 1e-10, 0).is_err());
    }
}
