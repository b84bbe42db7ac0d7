//! Workspace cropping and statistical outlier removal: reduces a raw scan
//! to the pruned, denoised cloud the segmentation stage consumes.

use crate::cloud::{mean_neighbor_distance_of_member, PointCloud, SpatialIndex};
use crate::error::{Error, Result};
use crate::math::Point3;

/// Axis-aligned stand-in for the robot's reachable space. Closed box:
/// boundary points are inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkspaceRegion {
    pub min: Point3,
    pub max: Point3,
}

impl WorkspaceRegion {
    pub fn new(min: Point3, max: Point3) -> Result<WorkspaceRegion> {
        if !(min.x <= max.x && min.y <= max.y && min.z <= max.z) {
            return Err(Error::Config(
                "workspace region requires min <= max componentwise".to_string(),
            ));
        }
        Ok(WorkspaceRegion { min, max })
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

/// Statistical-outlier-removal parameters: neighborhood size `k` and
/// denoising coefficient `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SorParams {
    pub k: usize,
    pub u: f64,
}

impl Default for SorParams {
    fn default() -> Self {
        SorParams { k: 8, u: 1.0 }
    }
}

impl SorParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("sor.k must be >= 1".to_string()));
        }
        if !(self.u > 0.0) {
            return Err(Error::Config("sor.u must be > 0".to_string()));
        }
        Ok(())
    }
}

/// Bookkeeping for one outlier-removal pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub kept: usize,
    pub removed: usize,
    /// Mean of all per-point mean-neighbor distances.
    pub mean_distance: f64,
    /// Population standard deviation of the same.
    pub std_dev: f64,
    pub removed_indices: Vec<usize>,
}

/// Keeps exactly the points inside or on the boundary of `region`,
/// preserving input order.
pub fn crop_to_workspace(cloud: &PointCloud, region: &WorkspaceRegion) -> PointCloud {
    PointCloud {
        points: cloud
            .points
            .iter()
            .copied()
            .filter(|&p| region.contains(p))
            .collect(),
        frame: cloud.frame.clone(),
    }
}

/// Removes every point whose mean neighbor distance falls outside the band
/// `mean +- u * sigma`, where mean and sigma are global statistics over the
/// whole cloud. Points on the band boundary are kept.
pub fn statistical_outlier_removal(
    cloud: &PointCloud,
    params: &SorParams,
) -> Result<(PointCloud, FilterReport)> {
    params.validate()?;
    let n = cloud.len();
    if n <= params.k {
        return Err(Error::InsufficientPoints { needed: params.k + 1, available: n });
    }
    let index = SpatialIndex::build(cloud)?;
    let mut dists = Vec::with_capacity(n);
    for i in 0..n {
        dists.push(mean_neighbor_distance_of_member(&index, i, params.k)?);
    }
    let mean = dists.iter().sum::<f64>() / n as f64;
    let var = dists.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
    let sigma = var.sqrt();
    let lo = mean - params.u * sigma;
    let hi = mean + params.u * sigma;

    let mut kept_points = Vec::with_capacity(n);
    let mut removed_indices = Vec::new();
    for (i, (&p, &d)) in cloud.points.iter().zip(dists.iter()).enumerate() {
        if d >= lo && d <= hi {
            kept_points.push(p);
        } else {
            removed_indices.push(i);
        }
    }
    let report = FilterReport {
        kept: kept_points.len(),
        removed: removed_indices.len(),
        mean_distance: mean,
        std_dev: sigma,
        removed_indices,
    };
    Ok((PointCloud { points: kept_points, frame: cloud.frame.clone() }, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(pts: &[(f64, f64, f64)]) -> PointCloud {
        PointCloud::new(pts.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect())
    }

    #[test]
    fn crop_keeps_inside_and_boundary() {
        let region =
            WorkspaceRegion::new(Point3::ZERO, Point3::new(1.0, 1.0, 1.0)).unwrap();
        let c = cloud(&[(0.5, 0.5, 0.5), (2.0, 0.0, 0.0), (1.0, 1.0, 1.0)]);
        let out = crop_to_workspace(&c, &region);
        assert_eq!(out.points.len(), 2);
        assert_eq!(out.points[0], Point3::new(0.5, 0.5, 0.5));
        assert_eq!(out.points[1], Point3::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn crop_of_all_inside_is_identity() {
        let region =
            WorkspaceRegion::new(Point3::new(-1.0, -1.0, -1.0), Point3::new(1.0, 1.0, 1.0))
                .unwrap();
        let c = cloud(&[(0.0, 0.0, 0.0), (0.5, -0.5, 0.25)]);
        assert_eq!(crop_to_workspace(&c, &region), c);
    }

    #[test]
    fn crop_is_idempotent() {
        let region =
            WorkspaceRegion::new(Point3::ZERO, Point3::new(1.0, 1.0, 1.0)).unwrap();
        let c = cloud(&[(0.5, 0.5, 0.5), (2.0, 0.0, 0.0), (-0.1, 0.2, 0.3)]);
        let once = crop_to_workspace(&c, &region);
        let twice = crop_to_workspace(&once, &region);
        assert_eq!(once, twice);
    }

    #[test]
    fn inverted_region_is_rejected() {
        assert!(WorkspaceRegion::new(Point3::new(1.0, 0.0, 0.0), Point3::ZERO).is_err());
    }

    #[test]
    fn sor_zero_spread_removes_nothing() {
        // square corners: each point's two nearest neighbors sit at the
        // same distance, so every mean distance is identical and sigma = 0
        let c = cloud(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (1.0, 1.0, 0.0), (0.0, 1.0, 0.0)]);
        let (kept, report) = statistical_outlier_removal(&c, &SorParams { k: 2, u: 1.0 }).unwrap();
        assert_eq!(report.std_dev, 0.0);
        assert_eq!(report.removed, 0);
        assert_eq!(kept.len(), 4);
    }

    #[test]
    fn sor_grid_with_far_point_removes_only_it() {
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                pts.push((i as f64 * 0.01, j as f64 * 0.01, 0.0));
            }
        }
        pts.push((0.1, 0.1, 1.0));
        let c = cloud(&pts);
        let (kept, report) =
            statistical_outlier_removal(&c, &SorParams { k: 8, u: 2.0 }).unwrap();
        assert_eq!(report.removed_indices, vec![400]);
        assert_eq!(kept.len(), 400);
        assert_eq!(report.kept + report.removed, c.len());
    }

    #[test]
    fn sor_needs_more_points_than_k() {
        let c = cloud(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)]);
        assert!(matches!(
            statistical_outlier_removal(&c, &SorParams { k: 2, u: 1.0 }),
            Err(Error::InsufficientPoints { .. })
        ));
    }
}
