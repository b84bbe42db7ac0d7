//! Bounding volumes: axis-aligned boxes, covariance-aligned boxes, and
//! covering sphere sets for clearance checks that cannot consume boxes
//! directly.

use crate::error::{Error, Result};
use crate::math::{covariance, eigen_sym3, Mat3, Point3};

/// Axis-aligned bounding box in the reference frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn volume(&self) -> f64 {
        let d = self.max - self.min;
        d.x * d.y * d.z
    }

    pub fn contains(&self, p: Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }
}

/// Oriented bounding box: rotation columns are the box axes (right-handed),
/// half-extents are non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub center: Point3,
    pub rotation: Mat3,
    pub half_extents: [f64; 3],
}

impl Obb {
    pub fn axis(&self, i: usize) -> Point3 {
        self.rotation.column(i)
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents[0] * self.half_extents[1] * self.half_extents[2]
    }

    /// Axis-aligned box as a degenerate-rotation Obb.
    pub fn from_aabb(aabb: &Aabb) -> Obb {
        Obb {
            center: (aabb.min + aabb.max) * 0.5,
            rotation: Mat3::IDENTITY,
            half_extents: [
                (aabb.max.x - aabb.min.x) * 0.5,
                (aabb.max.y - aabb.min.y) * 0.5,
                (aabb.max.z - aabb.min.z) * 0.5,
            ],
        }
    }

    /// Signed local coordinates of a world point.
    pub fn to_local(&self, p: Point3) -> Point3 {
        let d = p - self.center;
        Point3::new(self.axis(0).dot(d), self.axis(1).dot(d), self.axis(2).dot(d))
    }

    pub fn contains(&self, p: Point3, slack: f64) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.half_extents[0] + slack
            && l.y.abs() <= self.half_extents[1] + slack
            && l.z.abs() <= self.half_extents[2] + slack
    }

    /// World-frame corners, ordered by sign bitmask (bit 0 = +x axis,
    /// bit 1 = +y, bit 2 = +z).
    pub fn corners(&self) -> [Point3; 8] {
        let mut out = [Point3::ZERO; 8];
        for (bits, corner) in out.iter_mut().enumerate() {
            let sx = if bits & 1 != 0 { 1.0 } else { -1.0 };
            let sy = if bits & 2 != 0 { 1.0 } else { -1.0 };
            let sz = if bits & 4 != 0 { 1.0 } else { -1.0 };
            *corner = self.center
                + self.axis(0) * (sx * self.half_extents[0])
                + self.axis(1) * (sy * self.half_extents[1])
                + self.axis(2) * (sz * self.half_extents[2]);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                if (r.column(i).dot(r.column(j)) - want).abs() > 1e-9 {
                    return Err(Error::Config("obb rotation is not orthonormal".to_string()));
                }
            }
        }
        if (r.det() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("obb rotation is not right-handed".to_string()));
        }
        if self.half_extents.iter().any(|&h| !(h >= 0.0) || !h.is_finite()) {
            return Err(Error::Config("obb half extents must be >= 0".to_string()));
        }
        if !self.center.is_finite() {
            return Err(Error::Config("obb center must be finite".to_string()));
        }
        Ok(())
    }
}

/// A sphere used as a conservative bounding volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: Point3,
    pub radius: f64,
}

/// A set of spheres jointly covering a box.
#[derive(Debug, Clone)]
pub struct SphereSet {
    pub spheres: Vec<Sphere>,
    /// Coverage certificate from [`cover_with_spheres`]: the largest
    /// corner-to-nearest-sphere slack over all slab corners. Non-positive
    /// means the source box is provably covered. `None` for sets that were
    /// not produced as box covers.
    pub coverage_slack: Option<f64>,
}

impl SphereSet {
    pub fn new(spheres: Vec<Sphere>) -> SphereSet {
        SphereSet { spheres, coverage_slack: None }
    }

    /// Corner certificate against a box: max over box corners of the
    /// distance to the nearest sphere center minus that sphere's radius.
    pub fn corner_slack(&self, obb: &Obb) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for corner in obb.corners() {
            let best = self
                .spheres
                .iter()
                .map(|s| corner.distance(s.center) - s.radius)
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        worst
    }
}

// The certificate is a diagnostic, not part of the value identity.
impl PartialEq for SphereSet {
    fn eq(&self, other: &Self) -> bool {
        self.spheres == other.spheres
    }
}

/// Componentwise min/max box of a point set; every face touches a point.
pub fn fit_aabb(points: &[Point3]) -> Result<Aabb> {
    let first = *points.first().ok_or(Error::EmptyInput)?;
    let mut min = first;
    let mut max = first;
    for &p in &points[1..] {
        min = min.min_components(p);
        max = max.max_components(p);
    }
    Ok(Aabb { min, max })
}

/// Box aligned with the principal axes of the point covariance.
///
/// The eigenvector of the largest eigenvalue becomes the local x axis, the
/// middle one y, the smallest z; the z axis is flipped if needed to keep
/// the rotation right-handed. Extents come from the projected min/max, so
/// every input point is inside the box (within 1e-9 slack).
pub fn fit_obb(points: &[Point3]) -> Result<Obb> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let basis = eigen_sym3(&covariance(points)?);
    let x = basis.eigenvectors[2];
    let y = basis.eigenvectors[1];
    let mut z = basis.eigenvectors[0];
    if Mat3::from_columns(x, y, z).det() < 0.0 {
        z = -z;
    }
    let rotation = Mat3::from_columns(x, y, z);

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &p in points {
        for a in 0..3 {
            let t = rotation.column(a).dot(p);
            lo[a] = lo[a].min(t);
            hi[a] = hi[a].max(t);
        }
    }
    let mut center = Point3::ZERO;
    let mut half_extents = [0.0; 3];
    for a in 0..3 {
        center += rotation.column(a) * ((lo[a] + hi[a]) * 0.5);
        half_extents[a] = (hi[a] - lo[a]) * 0.5;
    }
    Ok(Obb { center, rotation, half_extents })
}

/// Vertex-set polytope handed to the distance queries.
pub fn obb_to_polytope(obb: &Obb) -> crate::collision::ConvexPolytope {
    crate::collision::ConvexPolytope::new(obb.corners().to_vec())
}

/// Covers a box with `n` spheres by slicing its longest axis into `n`
/// equal slabs and circumscribing each slab.
///
/// Every slab corner lies inside its slab's sphere, which by convexity
/// certifies that the slab (and hence the whole box) is covered. The
/// certificate is evaluated in the box frame where it is exact.
pub fn cover_with_spheres(obb: &Obb, n: usize) -> SphereSet {
    assert!(n >= 1, "sphere count must be >= 1");
    let he = obb.half_extents;
    let mut long = 0;
    if he[1] > he[long] {
        long = 1;
    }
    if he[2] > he[long] {
        long = 2;
    }
    let slab_half = he[long] / n as f64;
    let mut cross = [0.0; 2];
    let mut ci = 0;
    for (a, &h) in he.iter().enumerate() {
        if a != long {
            cross[ci] = h;
            ci += 1;
        }
    }
    let radius = (slab_half * slab_half + cross[0] * cross[0] + cross[1] * cross[1]).sqrt();

    let axis = obb.axis(long);
    let mut spheres = Vec::with_capacity(n);
    let mut slack = f64::NEG_INFINITY;
    for i in 0..n {
        let offset = -he[long] + (2 * i + 1) as f64 * slab_half;
        spheres.push(Sphere { center: obb.center + axis * offset, radius });
        // slab corners in the box frame, relative to the slab center
        for &s_long in &[-slab_half, slab_half] {
            for &s_a in &[-cross[0], cross[0]] {
                for &s_b in &[-cross[1], cross[1]] {
                    let d = (s_long * s_long + s_a * s_a + s_b * s_b).sqrt();
                    slack = slack.max(d - radius);
                }
            }
        }
    }
    SphereSet { spheres, coverage_slack: Some(slack) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aabb_of_single_point_degenerates() {
        let p = Point3::new(1.0, -2.0, 3.0);
        let b = fit_aabb(&[p]).unwrap();
        assert_eq!(b.min, p);
        assert_eq!(b.max, p);
    }

    #[test]
    fn aabb_of_two_points() {
        let b = fit_aabb(&[Point3::ZERO, Point3::new(1.0, 2.0, 3.0)]).unwrap();
        assert_eq!(b.min, Point3::ZERO);
        assert_eq!(b.max, Point3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn aabb_empty_errors() {
        assert!(matches!(fit_aabb(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn obb_axis_aligned_box_recovers_extents() {
        // dense, per-axis-asymmetric sampling of the surface of
        // [0,2]x[0,1]x[0,1] keeps the covariance spectrum simple
        let pts = box_surface(Point3::new(1.0, 0.5, 0.5), [1.0, 0.5, 0.5], 21, 9, 13);
        let obb = fit_obb(&pts).unwrap();
        let mut he = obb.half_extents;
        he.sort_by(f64::total_cmp);
        assert!((he[0] - 0.5).abs() < 1e-9, "he = {he:?}");
        assert!((he[1] - 0.5).abs() < 1e-9);
        assert!((he[2] - 1.0).abs() < 1e-9);
        for &p in &pts {
            assert!(obb.contains(p, 1e-9));
        }
    }

    #[test]
    fn obb_single_point_is_degenerate_box() {
        let p = Point3::new(0.5, 0.5, 0.5);
        let obb = fit_obb(&[p]).unwrap();
        assert_eq!(obb.half_extents, [0.0, 0.0, 0.0]);
        assert!((obb.center - p).norm() < 1e-12);
        obb.validate().unwrap();
    }

    #[test]
    fn polytope_of_unit_cube() {
        let obb = Obb {
            center: Point3::ZERO,
            rotation: Mat3::IDENTITY,
            half_extents: [0.5, 0.5, 0.5],
        };
        let poly = obb_to_polytope(&obb);
        assert_eq!(poly.vertices.len(), 8);
        for v in &poly.vertices {
            assert_eq!(v.x.abs(), 0.5);
            assert_eq!(v.y.abs(), 0.5);
            assert_eq!(v.z.abs(), 0.5);
        }
    }

    #[test]
    fn polytope_of_flat_slab_keeps_coincident_pairs() {
        let obb = Obb {
            center: Point3::ZERO,
            rotation: Mat3::IDENTITY,
            half_extents: [1.0, 1.0, 0.0],
        };
        let poly = obb_to_polytope(&obb);
        assert_eq!(poly.vertices.len(), 8);
    }

    #[test]
    fn single_sphere_circumscribes_unit_cube() {
        let obb = Obb {
            center: Point3::ZERO,
            rotation: Mat3::IDENTITY,
            half_extents: [0.5, 0.5, 0.5],
        };
        let set = cover_with_spheres(&obb, 1);
        assert_eq!(set.spheres.len(), 1);
        assert!((set.spheres[0].center - Point3::ZERO).norm() < 1e-15);
        assert!((set.spheres[0].radius - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(set.coverage_slack.unwrap() <= 0.0);
    }

    #[test]
    fn two_slab_cover_of_elongated_box() {
        let obb = Obb {
            center: Point3::ZERO,
            rotation: Mat3::IDENTITY,
            half_extents: [1.0, 0.25, 0.25],
        };
        let set = cover_with_spheres(&obb, 2);
        assert_eq!(set.spheres.len(), 2);
        let want_r = 0.375f64.sqrt();
        for s in &set.spheres {
            assert!((s.radius - want_r).abs() < 1e-15);
        }
        assert!((set.spheres[0].center - Point3::new(-0.5, 0.0, 0.0)).norm() < 1e-15);
        assert!((set.spheres[1].center - Point3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        assert!(set.coverage_slack.unwrap() <= 0.0);
    }

    #[test]
    fn radii_shrink_as_spheres_are_added() {
        let obb = Obb {
            center: Point3::new(0.3, -0.2, 0.9),
            rotation: Mat3::IDENTITY,
            half_extents: [0.8, 0.3, 0.2],
        };
        let mut prev = f64::INFINITY;
        for n in 1..=16 {
            let set = cover_with_spheres(&obb, n);
            let r = set.spheres[0].radius;
            assert!(r <= prev + 1e-15);
            assert!(set.coverage_slack.unwrap() <= 0.0);
            prev = r;
        }
    }

    pub(super) fn box_surface(
        center: Point3,
        he: [f64; 3],
        nx: usize,
        ny: usize,
        nz: usize,
    ) -> Vec<Point3> {
        let lin = |h: f64, n: usize, i: usize| -h + 2.0 * h * i as f64 / (n - 1) as f64;
        let mut pts = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let on_face = i == 0 || i == nx - 1 || j == 0 || j == ny - 1 || k == 0 || k == nz - 1;
                    if on_face {
                        pts.push(
                            center
                                + Point3::new(
                                    lin(he[0], nx, i),
                                    lin(he[1], ny, j),
                                    lin(he[2], nz, k),
                                ),
                        );
                    }
                }
            }
        }
        pts
    }
}
