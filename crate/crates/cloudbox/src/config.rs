//! Pipeline configuration: a flat `key = value` file with dotted key names.
//! Unknown keys are an error. Every key can also be supplied as a
//! command-line override of the same name.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::collision;
use crate::error::{Error, Result};
use crate::io::CloudFormat;
use crate::math::Point3;
use crate::preprocess::{SorParams, WorkspaceRegion};
use crate::segmentation::{SegmentationParams, SplitParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxMode {
    Aabb,
    Obb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    /// `None` means: infer from the input extension.
    pub format: Option<CloudFormat>,
    pub workspace: WorkspaceRegion,
    pub sor: SorParams,
    pub seg: SegmentationParams,
    pub split: SplitParams,
    pub box_mode: BoxMode,
    pub sphere_counts: Vec<usize>,
    pub margin: f64,
    pub gjk_tol: f64,
    pub gjk_max_iter: usize,
    /// Wrap residue points in a single fallback axis-aligned box.
    pub residue_aabb: bool,
    pub output_scene: PathBuf,
    pub output_clusters: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(workspace: WorkspaceRegion) -> PipelineConfig {
        PipelineConfig {
            input: None,
            format: None,
            workspace,
            sor: SorParams::default(),
            seg: SegmentationParams::default(),
            split: SplitParams::default(),
            box_mode: BoxMode::Obb,
            sphere_counts: vec![1, 2, 6],
            margin: 0.0,
            gjk_tol: collision::DEFAULT_TOL,
            gjk_max_iter: collision::DEFAULT_MAX_ITER,
            residue_aabb: false,
            output_scene: PathBuf::from("scene.json"),
            output_clusters: None,
        }
    }

    /// Loads a config file, then applies `key=value` overrides in order.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path)?;
        PipelineConfig::parse(&text, &path.display().to_string(), overrides)
    }

    pub fn parse(
        text: &str,
        label: &str,
        overrides: &[(String, String)],
    ) -> Result<PipelineConfig> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: label.to_string(),
                line: i + 1,
                message: "expected `key = value`".to_string(),
            })?;
            entries.push((key.trim().to_string(), value.trim().to_string()));
        }
        entries.extend(overrides.iter().cloned());
        PipelineConfig::from_entries(&entries)
    }

    pub fn from_entries(entries: &[(String, String)]) -> Result<PipelineConfig> {
        let mut workspace_min: Option<Point3> = None;
        let mut workspace_max: Option<Point3> = None;
        let huge = WorkspaceRegion::new(
            Point3::new(f64::MIN, f64::MIN, f64::MIN),
            Point3::new(f64::MAX, f64::MAX, f64::MAX),
        )
        .expect("valid placeholder region");
        let mut cfg = PipelineConfig::new(huge);

        for (key, value) in entries {
            match key.as_str() {
                "input" => cfg.input = Some(PathBuf::from(value)),
                "format" => cfg.format = Some(value.parse()?),
                "workspace.min" => workspace_min = Some(parse_point(key, value)?),
                "workspace.max" => workspace_max = Some(parse_point(key, value)?),
                "sor.k" => cfg.sor.k = parse_usize(key, value)?,
                "sor.u" => cfg.sor.u = parse_f64(key, value)?,
                "seg.k" => cfg.seg.k = parse_usize(key, value)?,
                "seg.d_th" => cfg.seg.d_th = parse_f64(key, value)?,
                "seg.kappa_th" => cfg.seg.kappa_th = parse_f64(key, value)?,
                "seg.alpha_th" => cfg.seg.alpha_th = parse_f64(key, value)?,
                "seg.min_cluster_size" => cfg.seg.min_cluster_size = parse_usize(key, value)?,
                "split.seed_resolution" => cfg.split.seed_resolution = parse_f64(key, value)?,
                "split.voxel_resolution" => cfg.split.voxel_resolution = parse_f64(key, value)?,
                "box_mode" => {
                    cfg.box_mode = match value.as_str() {
                        "aabb" => BoxMode::Aabb,
                        "obb" => BoxMode::Obb,
                        other => {
                            return Err(Error::Config(format!(
                                "box_mode must be aabb or obb, got {other:?}"
                            )))
                        }
                    }
                }
                "sphere_counts" => cfg.sphere_counts = parse_counts(key, value)?,
                "margin" => cfg.margin = parse_f64(key, value)?,
                "gjk.tol" => cfg.gjk_tol = parse_f64(key, value)?,
                "gjk.max_iter" => cfg.gjk_max_iter = parse_usize(key, value)?,
                "residue_aabb" => cfg.residue_aabb = parse_bool(key, value)?,
                "output.scene" => cfg.output_scene = PathBuf::from(value),
                "output.clusters" => cfg.output_clusters = Some(PathBuf::from(value)),
                other => return Err(Error::Config(format!("unknown config key: {other}"))),
            }
        }

        match (workspace_min, workspace_max) {
            (Some(min), Some(max)) => cfg.workspace = WorkspaceRegion::new(min, max)?,
            (None, None) => {
                return Err(Error::Config(
                    "workspace.min and workspace.max are required".to_string(),
                ))
            }
            _ => {
                return Err(Error::Config(
                    "workspace.min and workspace.max must both be given".to_string(),
                ))
            }
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.sor.validate()?;
        self.seg.validate()?;
        self.split.validate()?;
        if self.sphere_counts.is_empty() || self.sphere_counts.iter().any(|&n| n < 1) {
            return Err(Error::Config("sphere_counts must be >= 1".to_string()));
        }
        if !(self.margin >= 0.0) || !self.margin.is_finite() {
            return Err(Error::Config("margin must be >= 0".to_string()));
        }
        if !(self.gjk_tol > 0.0) {
            return Err(Error::Config("gjk.tol must be > 0".to_string()));
        }
        if self.gjk_max_iter < 1 {
            return Err(Error::Config("gjk.max_iter must be >= 1".to_string()));
        }
        Ok(())
    }

    /// Flat string echo of every field, used in scene metadata.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        if let Some(input) = &self.input {
            m.insert("params.input".to_string(), input.display().to_string());
        }
        if let Some(format) = self.format {
            m.insert("params.format".to_string(), format!("{format:?}").to_lowercase());
        }
        let w = &self.workspace;
        m.insert(
            "params.workspace.min".to_string(),
            format!("{} {} {}", w.min.x, w.min.y, w.min.z),
        );
        m.insert(
            "params.workspace.max".to_string(),
            format!("{} {} {}", w.max.x, w.max.y, w.max.z),
        );
        m.insert("params.sor.k".to_string(), self.sor.k.to_string());
        m.insert("params.sor.u".to_string(), self.sor.u.to_string());
        m.insert("params.seg.k".to_string(), self.seg.k.to_string());
        m.insert("params.seg.d_th".to_string(), self.seg.d_th.to_string());
        m.insert("params.seg.kappa_th".to_string(), self.seg.kappa_th.to_string());
        m.insert("params.seg.alpha_th".to_string(), self.seg.alpha_th.to_string());
        m.insert(
            "params.seg.min_cluster_size".to_string(),
            self.seg.min_cluster_size.to_string(),
        );
        m.insert(
            "params.split.seed_resolution".to_string(),
            self.split.seed_resolution.to_string(),
        );
        m.insert(
            "params.split.voxel_resolution".to_string(),
            self.split.voxel_resolution.to_string(),
        );
        m.insert(
            "params.box_mode".to_string(),
            match self.box_mode {
                BoxMode::Aabb => "aabb".to_string(),
                BoxMode::Obb => "obb".to_string(),
            },
        );
        m.insert(
            "params.sphere_counts".to_string(),
            self.sphere_counts
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        m.insert("params.residue_aabb".to_string(), self.residue_aabb.to_string());
        m.insert("query.margin".to_string(), self.margin.to_string());
        m.insert("query.gjk_tol".to_string(), self.gjk_tol.to_string());
        m.insert("query.gjk_max_iter".to_string(), self.gjk_max_iter.to_string());
        m
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: invalid number {value:?}")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("{key}: must be finite")));
    }
    Ok(v)
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: invalid count {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("{key}: invalid boolean {other:?}"))),
    }
}

/// Accepts `x y z` or `x,y,z`.
pub fn parse_point(key: &str, value: &str) -> Result<Point3> {
    let fields: Vec<&str> = value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|f| !f.is_empty())
        .collect();
    if fields.len() != 3 {
        return Err(Error::Config(format!("{key}: expected 3 components, got {value:?}")));
    }
    Ok(Point3::new(
        parse_f64(key, fields[0])?,
        parse_f64(key, fields[1])?,
        parse_f64(key, fields[2])?,
    ))
}

/// Accepts `1 2 6` or `1,2,6`.
pub fn parse_counts(key: &str, value: &str) -> Result<Vec<usize>> {
    let counts: Vec<usize> = value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|f| !f.is_empty())
        .map(|f| parse_usize(key, f))
        .collect::<Result<_>>()?;
    if counts.is_empty() {
        return Err(Error::Config(format!("{key}: must list at least one count")));
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# pipeline configuration
input = cloud.xyz
workspace.min = -1 -1 0
workspace.max = 1 1 2
sor.k = 12
sor.u = 2.0
seg.d_th = 0.08
sphere_counts = 1, 2, 6
box_mode = aabb
";

    #[test]
    fn parses_sample_config() {
        let cfg = PipelineConfig::parse(SAMPLE, "t", &[]).unwrap();
        assert_eq!(cfg.input.as_deref(), Some(Path::new("cloud.xyz")));
        assert_eq!(cfg.sor.k, 12);
        assert_eq!(cfg.sor.u, 2.0);
        assert_eq!(cfg.seg.d_th, 0.08);
        assert_eq!(cfg.box_mode, BoxMode::Aabb);
        assert_eq!(cfg.sphere_counts, vec![1, 2, 6]);
        assert_eq!(cfg.workspace.max, Point3::new(1.0, 1.0, 2.0));
    }

    #[test]
    fn unknown_key_is_fatal() {
        let text = format!("{SAMPLE}\nbogus_key = 1\n");
        let err = PipelineConfig::parse(&text, "t", &[]).unwrap_err();
        assert!(matches!(err, Error::Config(msg) if msg.contains("bogus_key")));
    }

    #[test]
    fn overrides_win() {
        let cfg = PipelineConfig::parse(
            SAMPLE,
            "t",
            &[("sor.k".to_string(), "4".to_string())],
        )
        .unwrap();
        assert_eq!(cfg.sor.k, 4);
    }

    #[test]
    fn workspace_is_required() {
        assert!(PipelineConfig::parse("input = a.xyz\n", "t", &[]).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let text = format!("{SAMPLE}\nseg.kappa_th = 0.9\n");
        assert!(PipelineConfig::parse(&text, "t", &[]).is_err());
        let text = format!("{SAMPLE}\nsor.u = -1\n");
        assert!(PipelineConfig::parse(&text, "t", &[]).is_err());
    }
}
