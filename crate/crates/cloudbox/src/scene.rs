//! Collision-scene serialization.
//!
//! Scene JSON schema:
//!
//! ```json
//! {
//!   "name": "...",
//!   "metadata": { "key": "value" },
//!   "environment": [
//!     {
//!       "obb": { "center": [3], "rotation": [9 row-major], "half_extents": [3] },
//!       "spheres": { "1": [ { "center": [3], "radius": r } ] }
//!     }
//!   ],
//!   "robot": [ ... same shape ... ]
//! }
//! ```
//!
//! Every number is written as decimal text with 12 significant digits, and
//! scene constructors quantize their inputs to the same precision, so
//! save -> load is field-exact and reruns are byte-stable.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::bounding::{Obb, Sphere, SphereSet};
use crate::collision::ConvexPolytope;
use crate::error::{Error, Result};
use crate::math::{Mat3, Point3};

/// One collision volume: a box plus optional sphere covers keyed by count.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneVolume {
    pub obb: Obb,
    pub spheres: BTreeMap<usize, SphereSet>,
}

/// Named collections of robot-side and environment-side volumes plus query
/// parameters (kept as metadata entries so the file schema stays flat).
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionScene {
    pub name: String,
    pub metadata: BTreeMap<String, String>,
    pub environment: Vec<SceneVolume>,
    pub robot: Vec<SceneVolume>,
}

impl CollisionScene {
    pub fn margin(&self) -> f64 {
        self.metadata
            .get("query.margin")
            .and_then(|v| v.parse().ok())
            .unwrap_or(0.0)
    }

    pub fn gjk_tol(&self) -> f64 {
        self.metadata
            .get("query.gjk_tol")
            .and_then(|v| v.parse().ok())
            .unwrap_or(crate::collision::DEFAULT_TOL)
    }

    pub fn gjk_max_iter(&self) -> usize {
        self.metadata
            .get("query.gjk_max_iter")
            .and_then(|v| v.parse().ok())
            .unwrap_or(crate::collision::DEFAULT_MAX_ITER)
    }

    pub fn to_json(&self) -> String {
        let mut out = String::with_capacity(4096);
        out.push_str("{\n");
        out.push_str(&format!("  \"name\": {},\n", json_str(&self.name)));
        out.push_str("  \"metadata\": {");
        let mut first = true;
        for (k, v) in &self.metadata {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format!("\n    {}: {}", json_str(k), json_str(v)));
        }
        out.push_str(if self.metadata.is_empty() { "},\n" } else { "\n  },\n" });
        write_volumes(&mut out, "environment", &self.environment);
        out.push_str(",\n");
        write_volumes(&mut out, "robot", &self.robot);
        out.push_str("\n}\n");
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CollisionScene> {
        let text = fs::read_to_string(path)?;
        CollisionScene::from_json(&text, &path.display().to_string())
    }

    pub fn from_json(text: &str, label: &str) -> Result<CollisionScene> {
        let doc: SceneDoc = serde_json::from_str(text)
            .map_err(|e| Error::Parse {
                path: label.to_string(),
                line: e.line(),
                message: e.to_string(),
            })?;
        let environment = doc
            .environment
            .into_iter()
            .map(|v| v.into_volume(label))
            .collect::<Result<Vec<_>>>()?;
        let robot = doc
            .robot
            .into_iter()
            .map(|v| v.into_volume(label))
            .collect::<Result<Vec<_>>>()?;
        Ok(CollisionScene { name: doc.name, metadata: doc.metadata, environment, robot })
    }
}

/// Rounds to 12 significant digits; scene constructors apply this so the
/// serialized text reproduces the in-memory value exactly.
pub fn quantize(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("quantized float reparses")
}

pub fn quantize_point(p: Point3) -> Point3 {
    Point3::new(quantize(p.x), quantize(p.y), quantize(p.z))
}

pub fn quantize_obb(obb: &Obb) -> Obb {
    let mut rot = obb.rotation.to_row_major();
    for v in &mut rot {
        *v = quantize(*v);
    }
    Obb {
        center: quantize_point(obb.center),
        rotation: Mat3::from_row_major(rot),
        half_extents: [
            quantize(obb.half_extents[0]),
            quantize(obb.half_extents[1]),
            quantize(obb.half_extents[2]),
        ],
    }
}

pub fn quantize_sphere_set(set: &SphereSet) -> SphereSet {
    SphereSet {
        spheres: set
            .spheres
            .iter()
            .map(|s| Sphere { center: quantize_point(s.center), radius: quantize(s.radius) })
            .collect(),
        coverage_slack: set.coverage_slack,
    }
}

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn write_vec3(out: &mut String, p: Point3) {
    out.push_str(&format!("[{}, {}, {}]", num(p.x), num(p.y), num(p.z)));
}

fn write_volumes(out: &mut String, key: &str, volumes: &[SceneVolume]) {
    out.push_str(&format!("  \"{key}\": ["));
    for (i, vol) in volumes.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("\n    {\n      \"obb\": {\n        \"center\": ");
        write_vec3(out, vol.obb.center);
        out.push_str(",\n        \"rotation\": [");
        let rot = vol.obb.rotation.to_row_major();
        for (j, v) in rot.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            out.push_str(&num(*v));
        }
        out.push_str("],\n        \"half_extents\": [");
        for (j, h) in vol.obb.half_extents.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            out.push_str(&num(*h));
        }
        out.push_str("]\n      },\n      \"spheres\": {");
        let mut first = true;
        for (n, set) in &vol.spheres {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format!("\n        \"{n}\": ["));
            for (j, s) in set.spheres.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str("\n          {\"center\": ");
                write_vec3(out, s.center);
                out.push_str(&format!(", \"radius\": {}}}", num(s.radius)));
            }
            out.push_str("\n        ]");
        }
        out.push_str(if vol.spheres.is_empty() { "}\n    }" } else { "\n      }\n    }" });
    }
    out.push_str(if volumes.is_empty() { "]" } else { "\n  ]" });
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    name: String,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
    environment: Vec<VolumeDoc>,
    robot: Vec<VolumeDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VolumeDoc {
    obb: ObbDoc,
    #[serde(default)]
    spheres: BTreeMap<String, Vec<SphereDoc>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObbDoc {
    center: [f64; 3],
    rotation: [f64; 9],
    half_extents: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SphereDoc {
    center: [f64; 3],
    radius: f64,
}

impl VolumeDoc {
    fn into_volume(self, label: &str) -> Result<SceneVolume> {
        let obb = Obb {
            center: Point3::from_array(self.obb.center),
            rotation: Mat3::from_row_major(self.obb.rotation),
            half_extents: self.obb.half_extents,
        };
        obb.validate()
            .map_err(|e| Error::Parse { path: label.to_string(), line: 0, message: e.to_string() })?;
        let mut spheres = BTreeMap::new();
        for (key, docs) in self.spheres {
            let n: usize = key.parse().map_err(|_| Error::Parse {
                path: label.to_string(),
                line: 0,
                message: format!("sphere count key {key:?} is not a positive integer"),
            })?;
            if n == 0 || docs.is_empty() {
                return Err(Error::Parse {
                    path: label.to_string(),
                    line: 0,
                    message: "sphere cover must have count >= 1".to_string(),
                });
            }
            let mut list = Vec::with_capacity(docs.len());
            for d in docs {
                let center = Point3::from_array(d.center);
                if !center.is_finite() || !d.radius.is_finite() || d.radius <= 0.0 {
                    return Err(Error::Parse {
                        path: label.to_string(),
                        line: 0,
                        message: "sphere must have finite center and radius > 0".to_string(),
                    });
                }
                list.push(Sphere { center, radius: d.radius });
            }
            let mut set = SphereSet::new(list);
            set.coverage_slack = Some(set.corner_slack(&obb));
            spheres.insert(n, set);
        }
        Ok(SceneVolume { obb, spheres })
    }
}

/// A standalone volume file for the `collide` command: exactly one of a
/// box, a sphere set, or a raw vertex polytope.
#[derive(Debug, Clone, PartialEq)]
pub enum VolumeFile {
    Box(Obb),
    Spheres(SphereSet),
    Polytope(ConvexPolytope),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VolumeFileDoc {
    #[serde(default)]
    obb: Option<ObbDoc>,
    #[serde(default)]
    spheres: Option<Vec<SphereDoc>>,
    #[serde(default)]
    polytope: Option<PolytopeDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolytopeDoc {
    vertices: Vec<[f64; 3]>,
}

impl VolumeFile {
    pub fn load(path: &Path) -> Result<VolumeFile> {
        let text = fs::read_to_string(path)?;
        VolumeFile::from_json(&text, &path.display().to_string())
    }

    pub fn from_json(text: &str, label: &str) -> Result<VolumeFile> {
        let doc: VolumeFileDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: label.to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let count = doc.obb.is_some() as usize
            + doc.spheres.is_some() as usize
            + doc.polytope.is_some() as usize;
        if count != 1 {
            return Err(Error::Parse {
                path: label.to_string(),
                line: 0,
                message: "volume file must contain exactly one of obb, spheres, polytope".to_string(),
            });
        }
        if let Some(o) = doc.obb {
            let obb = Obb {
                center: Point3::from_array(o.center),
                rotation: Mat3::from_row_major(o.rotation),
                half_extents: o.half_extents,
            };
            obb.validate().map_err(|e| Error::Parse {
                path: label.to_string(),
                line: 0,
                message: e.to_string(),
            })?;
            return Ok(VolumeFile::Box(obb));
        }
        if let Some(docs) = doc.spheres {
            if docs.is_empty() {
                return Err(Error::Parse {
                    path: label.to_string(),
                    line: 0,
                    message: "sphere set must be nonempty".to_string(),
                });
            }
            let mut list = Vec::with_capacity(docs.len());
            for d in docs {
                let center = Point3::from_array(d.center);
                if !center.is_finite() || !d.radius.is_finite() || d.radius <= 0.0 {
                    return Err(Error::Parse {
                        path: label.to_string(),
                        line: 0,
                        message: "sphere must have finite center and radius > 0".to_string(),
                    });
                }
                list.push(Sphere { center, radius: d.radius });
            }
            return Ok(VolumeFile::Spheres(SphereSet::new(list)));
        }
        let p = doc.polytope.expect("checked above");
        if p.vertices.is_empty() {
            return Err(Error::Parse {
                path: label.to_string(),
                line: 0,
                message: "polytope must have at least one vertex".to_string(),
            });
        }
        let vertices: Vec<Point3> = p.vertices.into_iter().map(Point3::from_array).collect();
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                path: label.to_string(),
                line: 0,
                message: "polytope vertices must be finite".to_string(),
            });
        }
        Ok(VolumeFile::Polytope(ConvexPolytope::new(vertices)))
    }

    pub fn to_json(&self) -> String {
        match self {
            VolumeFile::Box(obb) => {
                let rot = obb.rotation.to_row_major();
                let mut out = String::from("{\n  \"obb\": {\n    \"center\": ");
                write_vec3(&mut out, obb.center);
                out.push_str(",\n    \"rotation\": [");
                for (j, v) in rot.iter().enumerate() {
                    if j > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&num(*v));
                }
                out.push_str("],\n    \"half_extents\": [");
                for (j, h) in obb.half_extents.iter().enumerate() {
                    if j > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&num(*h));
                }
                out.push_str("]\n  }\n}\n");
                out
            }
            VolumeFile::Spheres(set) => {
                let mut out = String::from("{\n  \"spheres\": [");
                for (j, s) in set.spheres.iter().enumerate() {
                    if j > 0 {
                        out.push(',');
                    }
                    out.push_str("\n    {\"center\": ");
                    write_vec3(&mut out, s.center);
                    out.push_str(&format!(", \"radius\": {}}}", num(s.radius)));
                }
                out.push_str("\n  ]\n}\n");
                out
            }
            VolumeFile::Polytope(p) => {
                let mut out = String::from("{\n  \"polytope\": {\n    \"vertices\": [");
                for (j, v) in p.vertices.iter().enumerate() {
                    if j > 0 {
                        out.push_str(", ");
                    }
                    write_vec3(&mut out, *v);
                }
                out.push_str("]\n  }\n}\n");
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounding::cover_with_spheres;

    fn sample_scene() -> CollisionScene {
        let obb = quantize_obb(&Obb {
            center: Point3::new(0.5, -1.0, 0.25),
            rotation: Mat3::IDENTITY,
            half_extents: [0.2, 0.3, 0.4],
        });
        let mut spheres = BTreeMap::new();
        spheres.insert(2, quantize_sphere_set(&cover_with_spheres(&obb, 2)));
        let vol = SceneVolume { obb, spheres };
        let mut metadata = BTreeMap::new();
        metadata.insert("created".to_string(), "2020-01-01T00:00:00Z".to_string());
        metadata.insert("query.margin".to_string(), "0.1".to_string());
        CollisionScene {
            name: "sample".to_string(),
            metadata,
            environment: vec![vol.clone()],
            robot: vec![vol],
        }
    }

    #[test]
    fn json_roundtrip_is_field_exact() {
        let scene = sample_scene();
        let text = scene.to_json();
        let back = CollisionScene::from_json(&text, "t").unwrap();
        assert_eq!(scene, back);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn query_params_come_from_metadata() {
        let scene = sample_scene();
        assert_eq!(scene.margin(), 0.1);
        assert_eq!(scene.gjk_max_iter(), crate::collision::DEFAULT_MAX_ITER);
    }

    #[test]
    fn unknown_scene_fields_rejected() {
        let text = r#"{"name":"x","metadata":{},"environment":[],"robot":[],"extra":1}"#;
        assert!(CollisionScene::from_json(text, "t").is_err());
    }

    #[test]
    fn invalid_rotation_rejected() {
        let text = r#"{"name":"x","metadata":{},"environment":[{"obb":{"center":[0,0,0],"rotation":[2,0,0,0,1,0,0,0,1],"half_extents":[1,1,1]}}],"robot":[]}"#;
        assert!(CollisionScene::from_json(text, "t").is_err());
    }

    #[test]
    fn volume_file_variants_roundtrip() {
        let obb = quantize_obb(&Obb {
            center: Point3::new(1.0, 2.0, 3.0),
            rotation: Mat3::IDENTITY,
            half_extents: [0.5, 0.5, 0.5],
        });
        let vf = VolumeFile::Box(obb);
        assert_eq!(VolumeFile::from_json(&vf.to_json(), "t").unwrap(), vf);

        let spheres = VolumeFile::Spheres(SphereSet::new(vec![Sphere {
            center: Point3::new(0.5, 0.0, 0.0),
            radius: 0.25,
        }]));
        assert_eq!(VolumeFile::from_json(&spheres.to_json(), "t").unwrap(), spheres);

        let poly = VolumeFile::Polytope(ConvexPolytope::new(vec![
            Point3::ZERO,
            Point3::new(1.0, 0.0, 0.0),
        ]));
        assert_eq!(VolumeFile::from_json(&poly.to_json(), "t").unwrap(), poly);
    }

    #[test]
    fn volume_file_requires_exactly_one_kind() {
        assert!(VolumeFile::from_json("{}", "t").is_err());
    }
}
