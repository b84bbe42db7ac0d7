//! Region-growing segmentation and supervoxel-style cluster splitting.
//!
//! Growth starts from the flattest unvisited point and floods the
//! k-neighborhood graph, admitting a candidate when
//!   * the connecting edge is shorter than `d_th`,
//!   * the candidate's curvature is at most `kappa_th`, and
//!   * the angle between the candidate's normal and the cluster seed's
//!     normal (orientation-independent, via the absolute inner product)
//!     is at most `alpha_th`.
//!
//! Points that can never be admitted anywhere, and clusters smaller than
//! `min_cluster_size`, land in the residue. The whole procedure is
//! sequential and deterministic: seeds are ordered by (curvature, index),
//! adjacency lists are sorted, and the neighborhood graph is symmetrized so
//! the grown partition matches connected components exactly when the
//! smoothness conditions are generous.

use std::collections::VecDeque;

use crate::cloud::{curvature, neighborhood_basis, normal_from_basis, PointCloud, SpatialIndex};
use crate::error::{Error, Result};
use crate::math::{canonical_sign, Point3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationParams {
    /// Neighborhood size for normals, curvature and graph edges.
    pub k: usize,
    /// Edges of the neighborhood graph longer than this are cut.
    pub d_th: f64,
    /// Maximum curvature for a point to join any cluster.
    pub kappa_th: f64,
    /// Maximum normal angle (radians) against the cluster seed.
    pub alpha_th: f64,
    /// Grown clusters smaller than this are routed to the residue.
    pub min_cluster_size: usize,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        SegmentationParams {
            k: 8,
            d_th: 0.1,
            kappa_th: 0.05,
            alpha_th: 10f64.to_radians(),
            min_cluster_size: 10,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_th > 0.0) {
            return Err(Error::Config("seg.d_th must be > 0".to_string()));
        }
        if !(self.kappa_th > 0.0 && self.kappa_th <= 1.0 / 3.0) {
            return Err(Error::Config("seg.kappa_th must be in (0, 1/3]".to_string()));
        }
        if !(self.alpha_th > 0.0 && self.alpha_th <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::Config("seg.alpha_th must be in (0, pi/2] radians".to_string()));
        }
        if self.min_cluster_size < 1 {
            return Err(Error::Config("seg.min_cluster_size must be >= 1".to_string()));
        }
        if self.k < 1 {
            return Err(Error::Config("seg.k must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// A subset of a source cloud with cached summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Sorted, unique indices into the source cloud.
    pub indices: Vec<usize>,
    pub centroid: Point3,
    /// Mean member normal (unit length, sign-canonicalized).
    pub normal: Point3,
    pub curvature: f64,
}

/// Output of region growing: smooth clusters plus the residue of points
/// that joined no cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub clusters: Vec<Cluster>,
    /// Sorted indices of unsegmented points.
    pub residue: Vec<usize>,
}

/// Parameters for splitting oversized clusters on a regular grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitParams {
    /// Target supervoxel diameter; grid cell size of the split.
    pub seed_resolution: f64,
    /// Occupancy cell size; must not exceed `seed_resolution`.
    pub voxel_resolution: f64,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams { seed_resolution: 0.25, voxel_resolution: 0.05 }
    }
}

impl SplitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_resolution > 0.0) {
            return Err(Error::Config("split.voxel_resolution must be > 0".to_string()));
        }
        if self.seed_resolution < self.voxel_resolution {
            return Err(Error::Config(
                "split.seed_resolution must be >= split.voxel_resolution".to_string(),
            ));
        }
        Ok(())
    }
}

struct PointFeatures {
    normal: Option<Point3>,
    curvature: f64,
}

/// Grows smooth-surface clusters over the preprocessed cloud.
pub fn region_growing(cloud: &PointCloud, params: &SegmentationParams) -> Result<Segmentation> {
    params.validate()?;
    let n = cloud.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let index = SpatialIndex::build(cloud)?;
    let k_eff = params.k.min(n - 1);

    // Per-point features from the point plus its k nearest neighbors.
    let mut features = Vec::with_capacity(n);
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..n {
        let hits = index.k_nearest_indices(cloud.points[i], k_eff + 1)?;
        let mut neighborhood = Vec::with_capacity(k_eff + 1);
        neighborhood.push(cloud.points[i]);
        for &(j, d) in &hits {
            if j == i {
                continue;
            }
            if neighborhood.len() <= k_eff {
                neighborhood.push(cloud.points[j]);
            }
            if d < params.d_th {
                adjacency[i].push(j as u32);
            }
        }
        let feat = match neighborhood_basis(&neighborhood) {
            Ok(basis) => match (normal_from_basis(&basis), curvature(&basis)) {
                (Ok(nrm), Ok(kap)) => PointFeatures { normal: Some(nrm), curvature: kap },
                _ => PointFeatures { normal: None, curvature: f64::INFINITY },
            },
            Err(_) => PointFeatures { normal: None, curvature: f64::INFINITY },
        };
        features.push(feat);
    }

    // Symmetrize so growth reaches a neighbor regardless of which side of
    // the kNN relation it sits on, then sort for determinism.
    for i in 0..n {
        for j_pos in 0..adjacency[i].len() {
            let j = adjacency[i][j_pos] as usize;
            if !adjacency[j].contains(&(i as u32)) {
                adjacency[j].push(i as u32);
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
        adj.dedup();
    }

    // Flattest seeds first; curvature ties fall back to index order.
    let mut seed_order: Vec<usize> = (0..n).collect();
    seed_order.sort_by(|&a, &b| {
        features[a]
            .curvature
            .total_cmp(&features[b].curvature)
            .then(a.cmp(&b))
    });

    let mut visited = vec![false; n];
    let mut clusters = Vec::new();
    let mut residue = Vec::new();

    for &seed in &seed_order {
        if visited[seed] {
            continue;
        }
        let seed_normal = match features[seed].normal {
            Some(nrm) if features[seed].curvature <= params.kappa_th => nrm,
            _ => {
                visited[seed] = true;
                residue.push(seed);
                continue;
            }
        };

        let mut members = vec![seed];
        let mut queue = VecDeque::from([seed]);
        visited[seed] = true;
        while let Some(p) = queue.pop_front() {
            for &q in &adjacency[p] {
                let q = q as usize;
                if visited[q] {
                    continue;
                }
                let nrm = match features[q].normal {
                    Some(nrm) => nrm,
                    None => continue,
                };
                if features[q].curvature > params.kappa_th {
                    continue;
                }
                let angle = seed_normal.dot(nrm).abs().clamp(0.0, 1.0).acos();
                if angle > params.alpha_th {
                    continue;
                }
                visited[q] = true;
                members.push(q);
                queue.push_back(q);
            }
        }

        if members.len() < params.min_cluster_size {
            residue.extend(members);
        } else {
            members.sort_unstable();
            clusters.push(summarize_cluster(cloud, members, seed_normal, &features));
        }
    }

    residue.sort_unstable();
    Ok(Segmentation { clusters, residue })
}

fn summarize_cluster(
    cloud: &PointCloud,
    indices: Vec<usize>,
    seed_normal: Point3,
    features: &[PointFeatures],
) -> Cluster {
    let mut centroid = Point3::ZERO;
    let mut normal_sum = Point3::ZERO;
    let mut curv_sum = 0.0;
    for &i in &indices {
        centroid += cloud.points[i];
        let nrm = features[i].normal.unwrap_or(seed_normal);
        // align to the seed hemisphere before averaging
        normal_sum += if nrm.dot(seed_normal) < 0.0 { -nrm } else { nrm };
        curv_sum += features[i].curvature;
    }
    let count = indices.len() as f64;
    let normal = canonical_sign(normal_sum.normalized().unwrap_or(seed_normal));
    Cluster {
        indices,
        centroid: centroid / count,
        normal,
        curvature: curv_sum / count,
    }
}

/// Minimum Euclidean distance over all cross pairs of two clusters.
pub fn cluster_separation(a: &Cluster, b: &Cluster, cloud: &PointCloud) -> f64 {
    let mut best = f64::INFINITY;
    for &i in &a.indices {
        for &j in &b.indices {
            let d = cloud.points[i].distance(cloud.points[j]);
            if d < best {
                best = d;
            }
        }
    }
    best
}

// Cells with fewer points than this try to merge into a populated
// neighbor cell before standing alone.
const MIN_CELL_POPULATION: usize = 3;

/// Splits a cluster into subclusters of bounded spatial extent.
///
/// A grid of cell size `seed_resolution` is anchored at the cluster's
/// bounding-box minimum corner. Sparse cells merge into the nearest viable
/// cell among their 26 neighbors when the merged point extent stays within
/// `2 * seed_resolution` per axis, so every subcluster obeys that bound.
pub fn split_cluster(
    cluster: &Cluster,
    cloud: &PointCloud,
    params: &SplitParams,
) -> Result<Vec<Cluster>> {
    params.validate()?;
    if cluster.indices.is_empty() {
        return Err(Error::EmptyInput);
    }
    let res = params.seed_resolution;
    let mut min = cloud.points[cluster.indices[0]];
    for &i in &cluster.indices[1..] {
        min = min.min_components(cloud.points[i]);
    }

    let cell_of = |p: Point3| -> [i64; 3] {
        [
            ((p.x - min.x) / res).floor() as i64,
            ((p.y - min.y) / res).floor() as i64,
            ((p.z - min.z) / res).floor() as i64,
        ]
    };

    let mut cells: Vec<([i64; 3], Vec<usize>)> = Vec::new();
    for &i in &cluster.indices {
        let key = cell_of(cloud.points[i]);
        match cells.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(i),
            None => cells.push((key, vec![i])),
        }
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0));

    if cells.len() == 1 {
        return Ok(vec![resummarize(cluster, cluster.indices.clone(), cloud)]);
    }

    let centroid_of = |members: &[usize]| -> Point3 {
        let mut c = Point3::ZERO;
        for &i in members {
            c += cloud.points[i];
        }
        c / members.len() as f64
    };

    let viable: Vec<bool> = cells
        .iter()
        .map(|(_, members)| members.len() >= MIN_CELL_POPULATION)
        .collect();

    // group id per cell: viable cells seed their own group
    let mut group_of: Vec<Option<usize>> = vec![None; cells.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new(); // member cloud indices
    let mut group_extent: Vec<(Point3, Point3)> = Vec::new();
    for (ci, (_, members)) in cells.iter().enumerate() {
        if viable[ci] {
            group_of[ci] = Some(groups.len());
            groups.push(members.clone());
            group_extent.push(point_extent(members, cloud));
        }
    }

    let have_viable = !groups.is_empty();
    for ci in 0..cells.len() {
        if group_of[ci].is_some() {
            continue;
        }
        let (key, members) = &cells[ci];
        let my_centroid = centroid_of(members);
        // viable 26-neighbors ordered by centroid distance, then cell order
        let mut candidates: Vec<(f64, usize)> = Vec::new();
        if have_viable {
            for (cj, (kj, mj)) in cells.iter().enumerate() {
                if !viable[cj] {
                    continue;
                }
                let adjacent = (0..3).all(|a| (kj[a] - key[a]).abs() <= 1);
                if adjacent {
                    candidates.push((my_centroid.distance(centroid_of(mj)), cj));
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut placed = false;
        for (_, cj) in candidates {
            let g = group_of[cj].unwrap();
            let (cmin, cmax) = point_extent(members, cloud);
            let new_min = group_extent[g].0.min_components(cmin);
            let new_max = group_extent[g].1.max_components(cmax);
            let fits = (0..3).all(|a| new_max.component(a) - new_min.component(a) <= 2.0 * res);
            if fits {
                groups[g].extend(members.iter().copied());
                group_extent[g] = (new_min, new_max);
                placed = true;
                break;
            }
        }
        if !placed {
            group_of[ci] = Some(groups.len());
            groups.push(members.clone());
            group_extent.push(point_extent(members, cloud));
        }
    }

    Ok(groups
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            resummarize(cluster, members, cloud)
        })
        .collect())
}

fn point_extent(members: &[usize], cloud: &PointCloud) -> (Point3, Point3) {
    let mut lo = cloud.points[members[0]];
    let mut hi = lo;
    for &i in &members[1..] {
        lo = lo.min_components(cloud.points[i]);
        hi = hi.max_components(cloud.points[i]);
    }
    (lo, hi)
}

fn resummarize(parent: &Cluster, indices: Vec<usize>, cloud: &PointCloud) -> Cluster {
    let mut centroid = Point3::ZERO;
    for &i in &indices {
        centroid += cloud.points[i];
    }
    centroid = centroid / indices.len() as f64;
    let points: Vec<Point3> = indices.iter().map(|&i| cloud.points[i]).collect();
    let (normal, curv) = match neighborhood_basis(&points) {
        Ok(basis) => (
            normal_from_basis(&basis).unwrap_or(parent.normal),
            curvature(&basis).unwrap_or(parent.curvature),
        ),
        Err(_) => (parent.normal, parent.curvature),
    };
    Cluster { indices, centroid, normal, curvature: curv }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_cloud(z: f64, n: usize, spacing: f64) -> Vec<Point3> {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push(Point3::new(i as f64 * spacing, j as f64 * spacing, z));
            }
        }
        pts
    }

    fn generous() -> SegmentationParams {
        SegmentationParams {
            k: 8,
            d_th: 0.5,
            kappa_th: 1.0 / 3.0,
            alpha_th: std::f64::consts::FRAC_PI_2,
            min_cluster_size: 5,
        }
    }

    #[test]
    fn single_plane_single_cluster() {
        let cloud = PointCloud::new(plane_cloud(0.0, 12, 0.05));
        let seg = region_growing(&cloud, &generous()).unwrap();
        assert_eq!(seg.clusters.len(), 1);
        assert!(seg.residue.is_empty());
        assert_eq!(seg.clusters[0].indices.len(), cloud.len());
        assert!((seg.clusters[0].normal - Point3::new(0.0, 0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn parallel_planes_split_by_distance() {
        let mut pts = plane_cloud(0.0, 10, 0.05);
        pts.extend(plane_cloud(1.0, 10, 0.05));
        let cloud = PointCloud::new(pts);
        let seg = region_growing(&cloud, &generous()).unwrap();
        assert_eq!(seg.clusters.len(), 2);
        assert!(seg.residue.is_empty());
    }

    #[test]
    fn coverage_and_disjointness() {
        let mut pts = plane_cloud(0.0, 8, 0.05);
        pts.extend(plane_cloud(0.3, 6, 0.05));
        pts.push(Point3::new(5.0, 5.0, 5.0)); // isolated -> residue
        let cloud = PointCloud::new(pts);
        let seg = region_growing(&cloud, &generous()).unwrap();
        let mut seen = vec![false; cloud.len()];
        for c in &seg.clusters {
            for &i in &c.indices {
                assert!(!seen[i], "index {i} appears twice");
                seen[i] = true;
            }
        }
        for &i in &seg.residue {
            assert!(!seen[i], "residue index {i} appears twice");
            seen[i] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn centroid_cache_matches_mean() {
        let cloud = PointCloud::new(plane_cloud(0.0, 6, 0.1));
        let seg = region_growing(&cloud, &generous()).unwrap();
        let c = &seg.clusters[0];
        let mut mean = Point3::ZERO;
        for &i in &c.indices {
            mean += cloud.points[i];
        }
        mean = mean / c.indices.len() as f64;
        assert!((mean - c.centroid).norm() < 1e-10);
    }

    #[test]
    fn separation_of_singletons() {
        let cloud = PointCloud::new(vec![Point3::ZERO, Point3::new(3.0, 4.0, 0.0)]);
        let a = Cluster {
            indices: vec![0],
            centroid: Point3::ZERO,
            normal: Point3::new(0.0, 0.0, 1.0),
            curvature: 0.0,
        };
        let b = Cluster { indices: vec![1], centroid: cloud.points[1], ..a.clone() };
        assert_eq!(cluster_separation(&a, &b, &cloud), 5.0);
        let shared = Cluster { indices: vec![0], ..a.clone() };
        assert_eq!(cluster_separation(&a, &shared, &cloud), 0.0);
    }

    #[test]
    fn split_small_cluster_is_identity() {
        let cloud = PointCloud::new(plane_cloud(0.0, 4, 0.02));
        let cluster = Cluster {
            indices: (0..cloud.len()).collect(),
            centroid: Point3::ZERO,
            normal: Point3::new(0.0, 0.0, 1.0),
            curvature: 0.0,
        };
        let parts = split_cluster(&cluster, &cloud, &SplitParams::default()).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].indices, cluster.indices);
    }

    #[test]
    fn split_long_wall_partitions_with_bounded_extent() {
        let mut pts = Vec::new();
        for i in 0..200 {
            for j in 0..5 {
                pts.push(Point3::new(i as f64 * 0.02, j as f64 * 0.02, 0.0));
            }
        }
        let cloud = PointCloud::new(pts); // 4 m long wall
        let cluster = Cluster {
            indices: (0..cloud.len()).collect(),
            centroid: Point3::ZERO,
            normal: Point3::new(0.0, 0.0, 1.0),
            curvature: 0.0,
        };
        let params = SplitParams { seed_resolution: 0.5, voxel_resolution: 0.1 };
        let parts = split_cluster(&cluster, &cloud, &params).unwrap();
        assert!(parts.len() >= 4, "got {} parts", parts.len());

        let mut all: Vec<usize> = parts.iter().flat_map(|p| p.indices.iter().copied()).collect();
        all.sort_unstable();
        assert_eq!(all, cluster.indices);

        for part in &parts {
            let mut lo = cloud.points[part.indices[0]];
            let mut hi = lo;
            for &i in &part.indices[1..] {
                lo = lo.min_components(cloud.points[i]);
                hi = hi.max_components(cloud.points[i]);
            }
            for a in 0..3 {
                assert!(hi.component(a) - lo.component(a) <= 2.0 * params.seed_resolution + 1e-12);
            }
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let p = SegmentationParams { d_th: 0.0, ..SegmentationParams::default() };
        assert!(p.validate().is_err());
        let s = SplitParams { seed_resolution: 0.01, voxel_resolution: 0.05 };
        assert!(s.validate().is_err());
    }
}
