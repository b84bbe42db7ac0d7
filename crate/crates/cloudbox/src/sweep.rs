//! The clearance comparison sweep: slide a box along an axis past the
//! environment and record, per position, the polytope distance and the
//! sphere-cover clearance for each configured cover size.

use crate::bounding::{cover_with_spheres, Obb};
use crate::collision::{gjk_query, sphere_set_clearance, SafetyMargin};
use crate::error::{Error, Result};
use crate::math::Point3;
use crate::scene::CollisionScene;

/// Sweep description: the moving box (pose at parameter 0), a unit sweep
/// axis, and the sampled parameter range.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub moving: Obb,
    pub axis: Point3,
    pub y_min: f64,
    pub y_max: f64,
    pub step: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.y_min < self.y_max) {
            return Err(Error::Config("sweep range requires y_min < y_max".to_string()));
        }
        if !(self.step > 0.0) {
            return Err(Error::Config("sweep step must be > 0".to_string()));
        }
        if self.axis.normalized().is_none() {
            return Err(Error::Config("sweep axis must be nonzero".to_string()));
        }
        self.moving.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub y: f64,
    pub dist_gjk: f64,
    /// One clearance per configured sphere count, in `sphere_counts` order.
    pub dist_spheres: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub sphere_counts: Vec<usize>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// CSV with header `y,dist_gjk,dist_sphere_N<n>...`, `\n` line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,dist_gjk");
        for n in &self.sphere_counts {
            out.push_str(&format!(",dist_sphere_N{n}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:.9},{:.9}", row.y, row.dist_gjk));
            for d in &row.dist_spheres {
                out.push_str(&format!(",{d:.9}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the sweep against every environment volume of the scene.
///
/// Per position: the minimum polytope distance over the environment (0 when
/// colliding) and, for each requested cover size, the minimum sphere-set
/// clearance with the scene's safety margin.
pub fn run_sweep(
    scene: &CollisionScene,
    spec: &SweepSpec,
    sphere_counts: &[usize],
) -> Result<SweepTable> {
    spec.validate()?;
    if scene.environment.is_empty() {
        return Err(Error::EmptyInput.at_stage("sweep"));
    }
    if sphere_counts.iter().any(|&n| n < 1) {
        return Err(Error::Config("sphere counts must be >= 1".to_string()));
    }
    let axis = spec.axis.normalized().expect("validated nonzero");
    let margin = SafetyMargin::new(scene.margin())?;
    let tol = scene.gjk_tol();
    let max_iter = scene.gjk_max_iter();

    let env_polys: Vec<_> = scene
        .environment
        .iter()
        .map(|v| crate::bounding::obb_to_polytope(&v.obb))
        .collect();
    let env_covers: Vec<Vec<_>> = sphere_counts
        .iter()
        .map(|&n| {
            scene
                .environment
                .iter()
                .map(|v| cover_with_spheres(&v.obb, n))
                .collect()
        })
        .collect();

    let row_count = ((spec.y_max - spec.y_min) / spec.step).floor() as usize + 1;
    let mut rows = Vec::with_capacity(row_count);
    for i in 0..row_count {
        let y = spec.y_min + i as f64 * spec.step;
        let moving = Obb { center: spec.moving.center + axis * y, ..spec.moving };
        let moving_poly = crate::bounding::obb_to_polytope(&moving);

        let mut dist_gjk = f64::INFINITY;
        for poly in &env_polys {
            let r = gjk_query(&moving_poly, poly, tol, max_iter)
                .map_err(|e| e.at_stage(format!("sweep at y={y}")))?;
            dist_gjk = dist_gjk.min(r.distance);
        }

        let mut dist_spheres = Vec::with_capacity(sphere_counts.len());
        for (ni, &n) in sphere_counts.iter().enumerate() {
            let mover_cover = cover_with_spheres(&moving, n);
            let mut best = f64::INFINITY;
            for cover in &env_covers[ni] {
                best = best.min(sphere_set_clearance(&mover_cover, cover, margin));
            }
            dist_spheres.push(best);
        }

        rows.push(SweepRow { y, dist_gjk, dist_spheres });
    }

    Ok(SweepTable { sphere_counts: sphere_counts.to_vec(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::generate_example_scene;

    fn default_spec(scene: &CollisionScene) -> SweepSpec {
        SweepSpec {
            moving: scene.robot[0].obb,
            axis: Point3::new(0.0, 1.0, 0.0),
            y_min: -1.0,
            y_max: 1.0,
            step: 0.0625,
        }
    }

    #[test]
    fn sweep_is_dense_and_ordered() {
        let scene = generate_example_scene(6, 0.4, 0.4);
        let spec = default_spec(&scene);
        let table = run_sweep(&scene, &spec, &[1, 2, 6]).unwrap();
        let want_rows = ((spec.y_max - spec.y_min) / spec.step).floor() as usize + 1;
        assert_eq!(table.rows.len(), want_rows);
        for pair in table.rows.windows(2) {
            assert!(pair[0].y < pair[1].y);
        }
    }

    #[test]
    fn csv_header_lists_counts() {
        let scene = generate_example_scene(2, 0.4, 0.4);
        let spec = SweepSpec { step: 0.5, ..default_spec(&scene) };
        let table = run_sweep(&scene, &spec, &[1, 2, 6]).unwrap();
        let csv = table.to_csv();
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "y,dist_gjk,dist_sphere_N1,dist_sphere_N2,dist_sphere_N6");
        assert_eq!(csv.lines().count(), table.rows.len() + 1);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn nonconvergence_reports_offending_position() {
        let mut scene = generate_example_scene(1, 0.4, 0.4);
        scene
            .metadata
            .insert("query.gjk_max_iter".to_string(), "1".to_string());
        let spec = default_spec(&scene);
        let err = run_sweep(&scene, &spec, &[1]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sweep at y="), "message was {msg}");
        assert!(err.is_numerical());
    }

    #[test]
    fn bad_spec_rejected() {
        let scene = generate_example_scene(1, 0.4, 0.4);
        let mut spec = default_spec(&scene);
        spec.step = 0.0;
        assert!(run_sweep(&scene, &spec, &[1]).is_err());
    }
}
