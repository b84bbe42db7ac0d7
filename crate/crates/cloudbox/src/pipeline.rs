//! End-to-end driver: crop, denoise, segment, split, fit boxes, attach
//! sphere covers, and assemble the serializable collision scene.

use std::collections::BTreeMap;

use crate::bounding::{cover_with_spheres, fit_aabb, fit_obb, Obb};
use crate::cloud::PointCloud;
use crate::config::{BoxMode, PipelineConfig};
use crate::error::{Error, Result};
use crate::io::{load_cloud, CloudFormat};
use crate::math::Point3;
use crate::preprocess::{crop_to_workspace, statistical_outlier_removal};
use crate::scene::{quantize_obb, quantize_sphere_set, CollisionScene, SceneVolume};
use crate::segmentation::{region_growing, split_cluster, Segmentation};

/// Everything the pipeline produced, including intermediates that callers
/// may want to dump or audit.
pub struct PipelineOutput {
    pub scene: CollisionScene,
    /// Cloud after crop and outlier removal; segmentation indices refer to it.
    pub filtered: PointCloud,
    pub segmentation: Segmentation,
}

/// Runs the full pipeline from the configured input file.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    let path = config
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("input path is required".to_string()))?;
    let format = match config.format {
        Some(f) => f,
        None => CloudFormat::from_path(path).map_err(|e| e.at_stage("load"))?,
    };
    let cloud = load_cloud(path, format).map_err(|e| e.at_stage("load"))?;
    run_pipeline_on_cloud(config, &cloud, &path.display().to_string())
}

/// Runs the pipeline on an in-memory cloud. `source` labels the scene
/// metadata.
pub fn run_pipeline_on_cloud(
    config: &PipelineConfig,
    cloud: &PointCloud,
    source: &str,
) -> Result<PipelineOutput> {
    config.validate()?;
    let duplicates = cloud.duplicate_count();

    let cropped = crop_to_workspace(cloud, &config.workspace);
    if cropped.is_empty() {
        return Err(Error::EmptyInput.at_stage("crop"));
    }

    let (filtered, report) = statistical_outlier_removal(&cropped, &config.sor)
        .map_err(|e| e.at_stage("outlier_removal"))?;

    let segmentation =
        region_growing(&filtered, &config.seg).map_err(|e| e.at_stage("segmentation"))?;

    let mut environment = Vec::new();
    let mut subcluster_count = 0usize;
    for cluster in &segmentation.clusters {
        let parts = split_cluster(cluster, &filtered, &config.split)
            .map_err(|e| e.at_stage("split"))?;
        for part in parts {
            subcluster_count += 1;
            let points: Vec<Point3> = part.indices.iter().map(|&i| filtered.points[i]).collect();
            let obb = fit_box(&points, config.box_mode).map_err(|e| e.at_stage("bounding"))?;
            environment.push(make_volume(&obb, &config.sphere_counts));
        }
    }

    if config.residue_aabb && !segmentation.residue.is_empty() {
        let points: Vec<Point3> = segmentation
            .residue
            .iter()
            .map(|&i| filtered.points[i])
            .collect();
        let aabb = fit_aabb(&points).map_err(|e| e.at_stage("bounding"))?;
        environment.push(make_volume(&Obb::from_aabb(&aabb), &config.sphere_counts));
    }

    let mut metadata = config.echo();
    metadata.insert("source".to_string(), source.to_string());
    metadata.insert("created".to_string(), timestamp());
    metadata.insert("points.input".to_string(), cloud.len().to_string());
    metadata.insert("points.duplicates".to_string(), duplicates.to_string());
    metadata.insert("points.cropped".to_string(), cropped.len().to_string());
    metadata.insert("points.kept".to_string(), report.kept.to_string());
    metadata.insert("points.removed".to_string(), report.removed.to_string());
    metadata.insert("clusters".to_string(), segmentation.clusters.len().to_string());
    metadata.insert("subclusters".to_string(), subcluster_count.to_string());
    metadata.insert(
        "residue.points".to_string(),
        segmentation.residue.len().to_string(),
    );

    let name = std::path::Path::new(source)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("pipeline")
        .to_string();
    let scene = CollisionScene { name, metadata, environment, robot: Vec::new() };
    Ok(PipelineOutput { scene, filtered, segmentation })
}

fn fit_box(points: &[Point3], mode: BoxMode) -> Result<Obb> {
    match mode {
        BoxMode::Aabb => Ok(Obb::from_aabb(&fit_aabb(points)?)),
        BoxMode::Obb => fit_obb(points),
    }
}

fn make_volume(obb: &Obb, sphere_counts: &[usize]) -> SceneVolume {
    let obb = quantize_obb(obb);
    let mut spheres = BTreeMap::new();
    for &n in sphere_counts {
        spheres.insert(n, quantize_sphere_set(&cover_with_spheres(&obb, n)));
    }
    SceneVolume { obb, spheres }
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Builds the demonstration scene: a row of cubes along the y axis plus a
/// moving cube starting at the origin.
///
/// Defaults (n = 6, spacing 0.4 m, side 0.4 m) put the obstacle centers at
/// y in {-1.0, -0.6, ..., 1.0}, offset 0.5 m from the sweep line on x.
/// Sphere covers for N in {1, 2, 6} are attached to every box.
pub fn generate_example_scene(n_obstacles: usize, spacing: f64, cube_side: f64) -> CollisionScene {
    assert!(n_obstacles >= 1, "need at least one obstacle");
    assert!(spacing > 0.0 && cube_side > 0.0, "geometry must be positive");
    let half = cube_side / 2.0;
    let counts = [1usize, 2, 6];

    let mut environment = Vec::new();
    for i in 0..n_obstacles {
        let y = (i as f64 - (n_obstacles as f64 - 1.0) / 2.0) * spacing;
        let obb = Obb {
            center: Point3::new(0.5, y, 0.0),
            rotation: crate::math::Mat3::IDENTITY,
            half_extents: [half, half, half],
        };
        environment.push(make_volume(&obb, &counts));
    }

    let mover = Obb {
        center: Point3::ZERO,
        rotation: crate::math::Mat3::IDENTITY,
        half_extents: [half, half, half],
    };
    let robot = vec![make_volume(&mover, &counts)];

    let mut metadata = BTreeMap::new();
    metadata.insert("created".to_string(), timestamp());
    metadata.insert("params.n_obstacles".to_string(), n_obstacles.to_string());
    metadata.insert("params.spacing".to_string(), spacing.to_string());
    metadata.insert("params.cube_side".to_string(), cube_side.to_string());
    metadata.insert("query.margin".to_string(), "0".to_string());
    metadata.insert(
        "query.gjk_tol".to_string(),
        crate::collision::DEFAULT_TOL.to_string(),
    );
    metadata.insert(
        "query.gjk_max_iter".to_string(),
        crate::collision::DEFAULT_MAX_ITER.to_string(),
    );

    CollisionScene { name: "example".to_string(), metadata, environment, robot }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::constraint_count;

    #[test]
    fn example_scene_with_one_obstacle() {
        let scene = generate_example_scene(1, 0.4, 0.4);
        assert_eq!(scene.environment.len(), 1);
        assert_eq!(scene.robot.len(), 1);
    }

    #[test]
    fn default_example_matches_reported_counts() {
        let scene = generate_example_scene(6, 0.4, 0.4);
        assert_eq!(scene.environment.len(), 6);
        assert_eq!(constraint_count(scene.robot.len(), scene.environment.len(), 1), 6);
        let per_box_spheres = scene.environment[0].spheres.get(&6).unwrap().spheres.len();
        assert_eq!(per_box_spheres, 6);
        assert_eq!(constraint_count(6, scene.environment.len(), 1), 36);
        let ys: Vec<f64> = scene.environment.iter().map(|v| v.obb.center.y).collect();
        assert_eq!(ys, vec![-1.0, -0.6, -0.2, 0.2, 0.6, 1.0]);
    }

    #[test]
    fn example_scene_covers_are_certified() {
        let scene = generate_example_scene(3, 0.4, 0.4);
        for vol in scene.environment.iter().chain(scene.robot.iter()) {
            for set in vol.spheres.values() {
                assert!(set.coverage_slack.unwrap() <= 0.0);
            }
        }
    }
}
