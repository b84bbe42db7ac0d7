//! Point clouds, the kd-tree spatial index, and per-neighborhood surface
//! statistics (normal and curvature estimates).
//!
//! The index is a plain median-split kd-tree over a snapshot of the cloud.
//! Queries are exact: they return the same results as a brute-force linear
//! scan, with distance ties broken by insertion order so that every query
//! has a single correct answer.

use std::collections::BinaryHeap;
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::math::{canonical_sign, covariance, eigen_sym3, EigenBasis, Point3};

/// An ordered collection of 3D points with a reference-frame label.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub frame: String,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> PointCloud {
        PointCloud { points, frame: "I".to_string() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points that exactly coincide with an earlier point.
    /// Duplicates are legal; this is a diagnostic for merged scans.
    pub fn duplicate_count(&self) -> usize {
        let mut seen = HashSet::with_capacity(self.points.len());
        let mut dups = 0;
        for p in &self.points {
            let key = [
                (p.x + 0.0).to_bits(),
                (p.y + 0.0).to_bits(),
                (p.z + 0.0).to_bits(),
            ];
            if !seen.insert(key) {
                dups += 1;
            }
        }
        dups
    }
}

#[derive(Debug, Clone)]
struct Node {
    /// Index into the snapshot of the point sitting on the split plane.
    point: u32,
    axis: u8,
    left: i32,
    right: i32,
}

/// Immutable kd-tree over a snapshot of a `PointCloud`.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point3>,
    nodes: Vec<Node>,
    root: i32,
}

/// Candidate ordering: ascending distance, ties by insertion index.
#[derive(PartialEq)]
struct Candidate {
    dist_sq: f64,
    index: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.index.cmp(&other.index))
    }
}

impl SpatialIndex {
    /// Builds the index over a snapshot of the cloud.
    pub fn build(cloud: &PointCloud) -> Result<SpatialIndex> {
        if cloud.is_empty() {
            return Err(Error::EmptyInput);
        }
        let points = cloud.points.clone();
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = build_recursive(&points, &mut order[..], 0, &mut nodes);
        Ok(SpatialIndex { points, nodes, root })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> Point3 {
        self.points[index]
    }

    /// The `k` nearest points to `query`, as `(snapshot index, distance)`,
    /// sorted by ascending distance with insertion-order tie-breaks.
    pub fn k_nearest_indices(&self, query: Point3, k: usize) -> Result<Vec<(usize, f64)>> {
        if k > self.points.len() {
            return Err(Error::InsufficientPoints { needed: k, available: self.points.len() });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        // max-heap of the k best seen so far; the top is the current worst
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.search(self.root, query, k, &mut heap);
        let mut out: Vec<(usize, f64)> = heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| (c.index, c.dist_sq.sqrt()))
            .collect();
        out.shrink_to_fit();
        Ok(out)
    }

    /// Same as [`k_nearest_indices`](Self::k_nearest_indices) but resolves
    /// indices to points.
    pub fn k_nearest(&self, query: Point3, k: usize) -> Result<Vec<(Point3, f64)>> {
        Ok(self
            .k_nearest_indices(query, k)?
            .into_iter()
            .map(|(i, d)| (self.points[i], d))
            .collect())
    }

    /// All points within `radius` (inclusive) of `query`, sorted by
    /// ascending distance with insertion-order tie-breaks.
    pub fn within_radius(&self, query: Point3, radius: f64) -> Vec<(usize, f64)> {
        let mut hits = Vec::new();
        self.radius_search(self.root, query, radius * radius, &mut hits);
        hits.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        hits.iter().map(|&(i, d2)| (i, d2.sqrt())).collect()
    }

    fn search(&self, node: i32, query: Point3, k: usize, heap: &mut BinaryHeap<Candidate>) {
        if node < 0 {
            return;
        }
        let n = &self.nodes[node as usize];
        let idx = n.point as usize;
        let d2 = self.points[idx].distance_squared(query);
        let cand = Candidate { dist_sq: d2, index: idx };
        if heap.len() < k {
            heap.push(cand);
        } else if let Some(worst) = heap.peek() {
            if cand < *worst {
                heap.pop();
                heap.push(cand);
            }
        }

        let axis = n.axis as usize;
        let delta = query.component(axis) - self.points[idx].component(axis);
        let (near, far) = if delta < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
        self.search(near, query, k, heap);
        // The far side may still hold an equally distant, lower-index point,
        // so ties must not be pruned.
        let prune = heap.len() == k
            && heap
                .peek()
                .map(|w| delta * delta > w.dist_sq)
                .unwrap_or(false);
        if !prune {
            self.search(far, query, k, heap);
        }
    }

    fn radius_search(&self, node: i32, query: Point3, r2: f64, hits: &mut Vec<(usize, f64)>) {
        if node < 0 {
            return;
        }
        let n = &self.nodes[node as usize];
        let idx = n.point as usize;
        let d2 = self.points[idx].distance_squared(query);
        if d2 <= r2 {
            hits.push((idx, d2));
        }
        let axis = n.axis as usize;
        let delta = query.component(axis) - self.points[idx].component(axis);
        let (near, far) = if delta < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
        self.radius_search(near, query, r2, hits);
        if delta * delta <= r2 {
            self.radius_search(far, query, r2, hits);
        }
    }
}

fn build_recursive(points: &[Point3], order: &mut [u32], depth: usize, nodes: &mut Vec<Node>) -> i32 {
    if order.is_empty() {
        return -1;
    }
    let axis = (depth % 3) as u8;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize]
            .component(axis as usize)
            .total_cmp(&points[b as usize].component(axis as usize))
            .then(a.cmp(&b))
    });
    let point = order[mid];
    let slot = nodes.len();
    nodes.push(Node { point, axis, left: -1, right: -1 });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build_recursive(points, lo, depth + 1, nodes);
    let right = build_recursive(points, &mut hi[1..], depth + 1, nodes);
    nodes[slot].left = left;
    nodes[slot].right = right;
    slot as i32
}

/// Convenience constructor mirroring [`SpatialIndex::build`].
pub fn build_index(cloud: &PointCloud) -> Result<SpatialIndex> {
    SpatialIndex::build(cloud)
}

/// Mean distance from `point` to its `k` nearest neighbors, excluding the
/// point itself when it is a member of the indexed cloud.
pub fn mean_neighbor_distance(index: &SpatialIndex, point: Point3, k: usize) -> Result<f64> {
    let want = (k + 1).min(index.len());
    let mut hits = index.k_nearest_indices(point, want)?;
    if let Some(pos) = hits
        .iter()
        .position(|&(i, d)| d == 0.0 && index.point(i) == point)
    {
        hits.remove(pos);
    }
    if hits.len() < k {
        return Err(Error::InsufficientPoints { needed: k, available: hits.len() });
    }
    hits.truncate(k);
    Ok(hits.iter().map(|&(_, d)| d).sum::<f64>() / k as f64)
}

/// Mean distance from cloud member `member` to its `k` nearest neighbors,
/// excluding the member itself (by index, which stays exact under
/// coordinate duplicates).
pub fn mean_neighbor_distance_of_member(index: &SpatialIndex, member: usize, k: usize) -> Result<f64> {
    let want = (k + 1).min(index.len());
    let query = index.point(member);
    let mut hits = index.k_nearest_indices(query, want)?;
    hits.retain(|&(i, _)| i != member);
    if hits.len() < k {
        return Err(Error::InsufficientPoints { needed: k, available: hits.len() });
    }
    hits.truncate(k);
    Ok(hits.iter().map(|&(_, d)| d).sum::<f64>() / k as f64)
}

// A neighborhood is degenerate when its middle eigenvalue vanishes
// relative to the largest: collinear sets have no surface normal.
const DEGENERACY_TOL: f64 = 1e-12;

/// Estimated surface normal of a neighborhood: the eigenvector of the
/// covariance with the smallest eigenvalue, sign-canonicalized.
pub fn surface_normal(neighborhood: &[Point3]) -> Result<Point3> {
    let basis = neighborhood_basis(neighborhood)?;
    normal_from_basis(&basis)
}

/// Normal extraction from an already-computed eigen basis.
pub fn normal_from_basis(basis: &EigenBasis) -> Result<Point3> {
    let [_, l2, l3] = basis.eigenvalues;
    if l2 < DEGENERACY_TOL * l3.max(1.0) {
        return Err(Error::DegenerateNeighborhood);
    }
    Ok(canonical_sign(basis.eigenvectors[0]))
}

/// Covariance eigen-analysis of a neighborhood.
pub fn neighborhood_basis(neighborhood: &[Point3]) -> Result<EigenBasis> {
    Ok(eigen_sym3(&covariance(neighborhood)?))
}

/// Surface curvature from covariance eigenvalues:
/// `kappa = l1 / (l1 + l2 + l3)`, clamped into [0, 1/3].
pub fn curvature(basis: &EigenBasis) -> Result<f64> {
    let [l1, l2, l3] = basis.eigenvalues;
    let trace = l1 + l2 + l3;
    if trace <= 0.0 {
        return Err(Error::DegenerateNeighborhood);
    }
    Ok((l1 / trace).clamp(0.0, 1.0 / 3.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(pts: &[(f64, f64, f64)]) -> PointCloud {
        PointCloud::new(pts.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect())
    }

    #[test]
    fn empty_cloud_rejected() {
        assert!(matches!(SpatialIndex::build(&cloud(&[])), Err(Error::EmptyInput)));
    }

    #[test]
    fn single_point_is_its_own_neighbor() {
        let c = cloud(&[(1.0, 2.0, 3.0)]);
        let idx = SpatialIndex::build(&c).unwrap();
        let hits = idx.k_nearest(Point3::new(1.0, 2.0, 3.0), 1).unwrap();
        assert_eq!(hits, vec![(Point3::new(1.0, 2.0, 3.0), 0.0)]);
    }

    #[test]
    fn nearest_two_on_a_line() {
        let c = cloud(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (3.0, 0.0, 0.0)]);
        let idx = SpatialIndex::build(&c).unwrap();
        let hits = idx.k_nearest(Point3::ZERO, 2).unwrap();
        assert_eq!(hits[0], (Point3::ZERO, 0.0));
        assert_eq!(hits[1], (Point3::new(1.0, 0.0, 0.0), 1.0));
    }

    #[test]
    fn k_larger_than_cloud_errors() {
        let c = cloud(&[(0.0, 0.0, 0.0)]);
        let idx = SpatialIndex::build(&c).unwrap();
        assert!(matches!(
            idx.k_nearest(Point3::ZERO, 2),
            Err(Error::InsufficientPoints { needed: 2, available: 1 })
        ));
    }

    #[test]
    fn equidistant_tie_prefers_earlier_insertion() {
        let c = cloud(&[(1.0, 0.0, 0.0), (-1.0, 0.0, 0.0)]);
        let idx = SpatialIndex::build(&c).unwrap();
        let hits = idx.k_nearest_indices(Point3::ZERO, 1).unwrap();
        assert_eq!(hits[0].0, 0);
    }

    #[test]
    fn grid_corner_neighbors() {
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                pts.push((i as f64, j as f64, 0.0));
            }
        }
        let c = cloud(&pts);
        let idx = SpatialIndex::build(&c).unwrap();
        let hits = idx.k_nearest(Point3::ZERO, 3).unwrap();
        let got: Vec<Point3> = hits.iter().map(|&(p, _)| p).collect();
        assert_eq!(got[0], Point3::ZERO);
        assert!(got.contains(&Point3::new(1.0, 0.0, 0.0)));
        assert!(got.contains(&Point3::new(0.0, 1.0, 0.0)));
    }

    #[test]
    fn radius_query_inclusive_boundary() {
        let c = cloud(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (2.5, 0.0, 0.0)]);
        let idx = SpatialIndex::build(&c).unwrap();
        let hits = idx.within_radius(Point3::ZERO, 1.0);
        assert_eq!(hits.iter().map(|h| h.0).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn mean_distance_excludes_self() {
        let c = cloud(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (3.0, 0.0, 0.0)]);
        let idx = SpatialIndex::build(&c).unwrap();
        let d = mean_neighbor_distance(&idx, Point3::ZERO, 2).unwrap();
        assert_eq!(d, 2.0);
    }

    #[test]
    fn mean_distance_single_neighbor() {
        let c = cloud(&[(0.0, 0.0, 0.0), (5.0, 0.0, 0.0)]);
        let idx = SpatialIndex::build(&c).unwrap();
        assert_eq!(mean_neighbor_distance(&idx, Point3::ZERO, 1).unwrap(), 5.0);
    }

    #[test]
    fn mean_distance_too_few_neighbors() {
        let c = cloud(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)]);
        let idx = SpatialIndex::build(&c).unwrap();
        assert!(matches!(
            mean_neighbor_distance(&idx, Point3::ZERO, 2),
            Err(Error::InsufficientPoints { .. })
        ));
    }

    #[test]
    fn normal_of_flat_plane_points_up() {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                pts.push(Point3::new(i as f64 * 0.1, j as f64 * 0.1, 0.0));
            }
        }
        let n = surface_normal(&pts).unwrap();
        assert!((n - Point3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn normal_of_diagonal_plane() {
        // plane x + y = 0, spanned by (1,-1,0)/sqrt2 and z
        let mut pts = Vec::new();
        for i in -3..=3 {
            for j in -3..=3 {
                let s = i as f64 * 0.1;
                let t = j as f64 * 0.1;
                pts.push(Point3::new(s, -s, t));
            }
        }
        let n = surface_normal(&pts).unwrap();
        let expect = Point3::new(1.0, 1.0, 0.0).normalized().unwrap();
        assert!((n - expect).norm() < 1e-12);
    }

    #[test]
    fn collinear_neighborhood_is_degenerate() {
        let pts: Vec<Point3> = (0..5).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(surface_normal(&pts), Err(Error::DegenerateNeighborhood)));
    }

    #[test]
    fn curvature_limits() {
        let planar = EigenBasis {
            eigenvalues: [0.0, 1.0, 2.0],
            eigenvectors: [
                Point3::new(0.0, 0.0, 1.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
            ],
        };
        assert_eq!(curvature(&planar).unwrap(), 0.0);
        let blob = EigenBasis { eigenvalues: [2.0, 2.0, 2.0], ..planar };
        assert_eq!(curvature(&blob).unwrap(), 1.0 / 3.0);
        let zero = EigenBasis { eigenvalues: [0.0, 0.0, 0.0], ..planar };
        assert!(matches!(curvature(&zero), Err(Error::DegenerateNeighborhood)));
    }

    #[test]
    fn duplicate_diagnostic_counts_repeats() {
        let c = cloud(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)]);
        assert_eq!(c.duplicate_count(), 2);
    }
}
