//! Vector and matrix primitives plus the symmetric 3x3 eigen-solver that
//! backs normal estimation and box fitting.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// A point (or free vector) in 3D space, coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ZERO: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn cross(self, other: Point3) -> Point3 {
        Point3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    #[inline]
    pub fn distance_squared(self, other: Point3) -> f64 {
        (self - other).norm_squared()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Point3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn component(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn from_array(a: [f64; 3]) -> Point3 {
        Point3::new(a[0], a[1], a[2])
    }

    pub fn min_components(self, other: Point3) -> Point3 {
        Point3::new(self.x.min(other.x), self.y.min(other.y), self.z.min(other.z))
    }

    pub fn max_components(self, other: Point3) -> Point3 {
        Point3::new(self.x.max(other.x), self.y.max(other.y), self.z.max(other.z))
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    fn add_assign(&mut self, o: Point3) {
        *self = *self + o;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// A 3x3 matrix, row-major storage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_columns(c0: Point3, c1: Point3, c2: Point3) -> Mat3 {
        Mat3 {
            m: [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]],
        }
    }

    #[inline]
    pub fn column(&self, i: usize) -> Point3 {
        Point3::new(self.m[0][i], self.m[1][i], self.m[2][i])
    }

    #[inline]
    pub fn row(&self, i: usize) -> Point3 {
        Point3::new(self.m[i][0], self.m[i][1], self.m[i][2])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.m;
        Mat3 {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn mul_vec(&self, v: Point3) -> Point3 {
        Point3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.m;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    pub fn from_row_major(a: [f64; 9]) -> Mat3 {
        Mat3 {
            m: [[a[0], a[1], a[2]], [a[3], a[4], a[5]], [a[6], a[7], a[8]]],
        }
    }
}

/// Symmetric 3x3 matrix stored as its six independent entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat3 {
    pub xx: f64,
    pub xy: f64,
    pub xz: f64,
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
}

impl SymMat3 {
    pub const ZERO: SymMat3 = SymMat3 { xx: 0.0, xy: 0.0, xz: 0.0, yy: 0.0, yz: 0.0, zz: 0.0 };

    pub fn diagonal(xx: f64, yy: f64, zz: f64) -> SymMat3 {
        SymMat3 { xx, yy, zz, ..SymMat3::ZERO }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn to_mat3(&self) -> Mat3 {
        Mat3 {
            m: [
                [self.xx, self.xy, self.xz],
                [self.xy, self.yy, self.yz],
                [self.xz, self.yz, self.zz],
            ],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite()
            && self.xy.is_finite()
            && self.xz.is_finite()
            && self.yy.is_finite()
            && self.yz.is_finite()
            && self.zz.is_finite()
    }

    pub fn mul_vec(&self, v: Point3) -> Point3 {
        Point3::new(
            self.xx * v.x + self.xy * v.y + self.xz * v.z,
            self.xy * v.x + self.yy * v.y + self.yz * v.z,
            self.xz * v.x + self.yz * v.y + self.zz * v.z,
        )
    }
}

/// Eigen-decomposition of a symmetric 3x3 matrix: eigenvalues sorted
/// ascending, eigenvectors unit length and pairwise orthogonal.
#[derive(Debug, Clone, Copy)]
pub struct EigenBasis {
    pub eigenvalues: [f64; 3],
    pub eigenvectors: [Point3; 3],
}

impl EigenBasis {
    /// Reconstructs `V diag(lambda) V^T`.
    pub fn reconstruct(&self) -> Mat3 {
        let mut m = [[0.0f64; 3]; 3];
        for k in 0..3 {
            let v = self.eigenvectors[k];
            let l = self.eigenvalues[k];
            let va = v.to_array();
            for (i, row) in m.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell += l * va[i] * va[j];
                }
            }
        }
        Mat3 { m }
    }
}

/// Covariance matrix of a point set: `C = (1/n) sum (p - mean)(p - mean)^T`.
pub fn covariance(points: &[Point3]) -> Result<SymMat3> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = points.len() as f64;
    let mut mean = Point3::ZERO;
    for p in points {
        mean += *p;
    }
    mean = mean / n;
    let mut c = SymMat3::ZERO;
    for p in points {
        let d = *p - mean;
        c.xx += d.x * d.x;
        c.xy += d.x * d.y;
        c.xz += d.x * d.z;
        c.yy += d.y * d.y;
        c.yz += d.y * d.z;
        c.zz += d.z * d.z;
    }
    c.xx /= n;
    c.xy /= n;
    c.xz /= n;
    c.yy /= n;
    c.yz /= n;
    c.zz /= n;
    Ok(c)
}

/// Flips `v` so its largest-magnitude component is positive. Magnitude ties
/// prefer the z component, then y, then x.
pub fn canonical_sign(v: Point3) -> Point3 {
    let a = [v.x.abs(), v.y.abs(), v.z.abs()];
    let mut best = 2usize;
    if a[1] > a[best] {
        best = 1;
    }
    if a[0] > a[best] {
        best = 0;
    }
    if v.component(best) < 0.0 {
        -v
    } else {
        v
    }
}

// Eigenvalues whose pairwise gaps fall under this relative threshold are
// re-solved with Jacobi rotations instead of the closed form.
const CLUSTER_REL_TOL: f64 = 1e-8;

/// Eigen-decomposition of a symmetric 3x3 matrix.
///
/// Closed-form characteristic-polynomial solve with cross-product
/// eigenvectors, re-orthogonalized into an exact orthonormal triple. When
/// eigenvalues cluster (or the matrix is essentially diagonal) the solve
/// falls back to cyclic Jacobi iterations, which stay well-conditioned at
/// degeneracies.
pub fn eigen_sym3(m: &SymMat3) -> EigenBasis {
    debug_assert!(m.is_finite(), "eigen_sym3 expects finite input");

    let q = m.trace() / 3.0;
    let p1 = m.xy * m.xy + m.xz * m.xz + m.yz * m.yz;
    if p1 == 0.0 {
        // Exactly diagonal: eigen-pairs are the diagonal entries and the
        // canonical axes, no rounding involved.
        return finalize(
            [m.xx, m.yy, m.zz],
            [
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
        );
    }
    let dx = m.xx - q;
    let dy = m.yy - q;
    let dz = m.zz - q;
    let p2 = dx * dx + dy * dy + dz * dz + 2.0 * p1;
    let scale = m
        .xx
        .abs()
        .max(m.yy.abs())
        .max(m.zz.abs())
        .max(m.xy.abs())
        .max(m.xz.abs())
        .max(m.yz.abs());

    if p2 <= (scale * 1e-14).powi(2) * 36.0 {
        // Nearly a multiple of the identity; the closed form loses all
        // precision here, Jacobi does not.
        return jacobi_eigen(m);
    }

    let p = (p2 / 6.0).sqrt();
    let inv_p = 1.0 / p;
    let b = SymMat3 {
        xx: dx * inv_p,
        xy: m.xy * inv_p,
        xz: m.xz * inv_p,
        yy: dy * inv_p,
        yz: m.yz * inv_p,
        zz: dz * inv_p,
    };
    let half_det = b.to_mat3().det() / 2.0;
    let phi = half_det.clamp(-1.0, 1.0).acos() / 3.0;

    let l_hi = q + 2.0 * p * phi.cos();
    let l_lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let l_mid = 3.0 * q - l_hi - l_lo;
    let lambdas = [l_lo, l_mid, l_hi];

    let gap_lo = l_mid - l_lo;
    let gap_hi = l_hi - l_mid;
    let mag = l_lo.abs().max(l_hi.abs()).max(1e-300);
    if gap_lo < CLUSTER_REL_TOL * mag || gap_hi < CLUSTER_REL_TOL * mag {
        return jacobi_eigen(m);
    }

    // Extremal eigenvectors from the null space of (A - lambda I), via the
    // largest cross product of its rows; the middle one completes the triple.
    let v_lo = match null_vector(m, l_lo) {
        Some(v) => v,
        None => return jacobi_eigen(m),
    };
    let v_hi = match null_vector(m, l_hi) {
        Some(v) => v,
        None => return jacobi_eigen(m),
    };
    let v_mid = match v_hi.cross(v_lo).normalized() {
        Some(v) => v,
        None => return jacobi_eigen(m),
    };
    let v_lo = v_mid.cross(v_hi); // exact orthonormal completion

    finalize(lambdas, [v_lo, v_mid, v_hi])
}

fn null_vector(m: &SymMat3, lambda: f64) -> Option<Point3> {
    let a = m.to_mat3();
    let r0 = Point3::new(a.m[0][0] - lambda, a.m[0][1], a.m[0][2]);
    let r1 = Point3::new(a.m[1][0], a.m[1][1] - lambda, a.m[1][2]);
    let r2 = Point3::new(a.m[2][0], a.m[2][1], a.m[2][2] - lambda);
    let c01 = r0.cross(r1);
    let c02 = r0.cross(r2);
    let c12 = r1.cross(r2);
    let mut best = c01;
    if c02.norm_squared() > best.norm_squared() {
        best = c02;
    }
    if c12.norm_squared() > best.norm_squared() {
        best = c12;
    }
    best.normalized()
}

/// Cyclic Jacobi diagonalization. Executes fixed sweeps until off-diagonal
/// mass is negligible; robust for clustered or repeated eigenvalues.
fn jacobi_eigen(m: &SymMat3) -> EigenBasis {
    let mut a = m.to_mat3().m;
    let mut v = Mat3::IDENTITY.m;

    for _sweep in 0..32 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= f64::EPSILON * f64::EPSILON * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = if theta >= 0.0 {
                1.0 / (theta + (1.0 + theta * theta).sqrt())
            } else {
                1.0 / (theta - (1.0 + theta * theta).sqrt())
            };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;

            let app = a[p][p];
            let aqq = a[q][q];
            a[p][p] = app - t * apq;
            a[q][q] = aqq + t * apq;
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            let r = 3 - p - q; // the remaining index
            let arp = a[r][p];
            let arq = a[r][q];
            a[r][p] = c * arp - s * arq;
            a[p][r] = a[r][p];
            a[r][q] = s * arp + c * arq;
            a[q][r] = a[r][q];

            for row in &mut v {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }

    let vm = Mat3 { m: v };
    finalize(
        [a[0][0], a[1][1], a[2][2]],
        [vm.column(0), vm.column(1), vm.column(2)],
    )
}

fn finalize(lambdas: [f64; 3], vectors: [Point3; 3]) -> EigenBasis {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| lambdas[i].total_cmp(&lambdas[j]).then(i.cmp(&j)));
    let eigenvalues = [lambdas[order[0]], lambdas[order[1]], lambdas[order[2]]];
    let eigenvectors = [
        canonical_sign(vectors[order[0]]),
        canonical_sign(vectors[order[1]]),
        canonical_sign(vectors[order[2]]),
    ];
    EigenBasis { eigenvalues, eigenvectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frob_diff(a: &Mat3, b: &Mat3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let d = a.m[i][j] - b.m[i][j];
                s += d * d;
            }
        }
        s.sqrt()
    }

    #[test]
    fn covariance_of_identical_points_is_zero() {
        let p = Point3::new(0.3, -1.2, 7.0);
        let c = covariance(&[p, p, p, p]).unwrap();
        assert_eq!(c, SymMat3::ZERO);
    }

    #[test]
    fn covariance_of_symmetric_pair() {
        let c = covariance(&[Point3::new(1.0, 0.0, 0.0), Point3::new(-1.0, 0.0, 0.0)]).unwrap();
        assert_eq!(c, SymMat3::diagonal(1.0, 0.0, 0.0));
    }

    #[test]
    fn covariance_empty_errors() {
        assert!(matches!(covariance(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn eigen_identity() {
        let e = eigen_sym3(&SymMat3::diagonal(1.0, 1.0, 1.0));
        assert_eq!(e.eigenvalues, [1.0, 1.0, 1.0]);
        for (i, v) in e.eigenvectors.iter().enumerate() {
            assert!((v.norm() - 1.0).abs() < 1e-12);
            for w in &e.eigenvectors[i + 1..] {
                assert!(v.dot(*w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_sorted_diagonal() {
        let e = eigen_sym3(&SymMat3::diagonal(3.0, 1.0, 2.0));
        assert_eq!(e.eigenvalues, [1.0, 2.0, 3.0]);
        assert_eq!(e.eigenvectors[0], Point3::new(0.0, 1.0, 0.0));
        assert_eq!(e.eigenvectors[1], Point3::new(0.0, 0.0, 1.0));
        assert_eq!(e.eigenvectors[2], Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn eigen_reconstructs_generic_matrix() {
        let m = SymMat3 { xx: 2.0, xy: 0.5, xz: -0.25, yy: 1.5, yz: 0.75, zz: 0.9 };
        let e = eigen_sym3(&m);
        assert!(frob_diff(&e.reconstruct(), &m.to_mat3()) < 1e-12);
        assert!(e.eigenvalues[0] <= e.eigenvalues[1] && e.eigenvalues[1] <= e.eigenvalues[2]);
    }

    #[test]
    fn eigen_handles_repeated_eigenvalues() {
        // rank-1 update of the identity: eigenvalues {1, 1, 4}
        let m = SymMat3 { xx: 2.0, xy: 1.0, xz: 1.0, yy: 2.0, yz: 1.0, zz: 2.0 };
        let e = eigen_sym3(&m);
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-10);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-10);
        assert!((e.eigenvalues[2] - 4.0).abs() < 1e-10);
        assert!(frob_diff(&e.reconstruct(), &m.to_mat3()) < 1e-9);
    }

    #[test]
    fn canonical_sign_prefers_z_then_y_then_x_on_ties() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = canonical_sign(Point3::new(-s, -s, 0.0));
        assert!(v.y > 0.0);
        let w = canonical_sign(Point3::new(0.0, -s, -s));
        assert!(w.z > 0.0);
    }

    #[test]
    fn mat3_roundtrip_row_major() {
        let m = Mat3::from_columns(
            Point3::new(1.0, 2.0, 3.0),
            Point3::new(4.0, 5.0, 6.0),
            Point3::new(7.0, 8.0, 9.0),
        );
        assert_eq!(Mat3::from_row_major(m.to_row_major()), m);
    }
}
