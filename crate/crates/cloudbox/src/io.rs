//! Point-cloud file formats: whitespace/comma separated coordinate lists
//! and a minimal ASCII PLY subset. Parsers reject non-finite coordinates
//! and report 1-based line numbers on malformed input.

use std::fs;
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::math::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    Csv,
    PlyAscii,
}

impl CloudFormat {
    pub fn from_name(name: &str) -> Result<CloudFormat> {
        match name.to_ascii_lowercase().as_str() {
            "xyz" => Ok(CloudFormat::Xyz),
            "csv" => Ok(CloudFormat::Csv),
            "ply" | "ply-ascii" => Ok(CloudFormat::PlyAscii),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }

    pub fn from_path(path: &Path) -> Result<CloudFormat> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .ok_or_else(|| Error::UnsupportedFormat(path.display().to_string()))?;
        CloudFormat::from_name(ext)
    }
}

impl std::str::FromStr for CloudFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<CloudFormat> {
        CloudFormat::from_name(s)
    }
}

/// Loads a point cloud from disk in the given format.
pub fn load_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud> {
    let text = fs::read_to_string(path)?;
    parse_cloud(&text, format, &path.display().to_string())
}

/// Parses point-cloud text. `label` is only used in error messages.
pub fn parse_cloud(text: &str, format: CloudFormat, label: &str) -> Result<PointCloud> {
    match format {
        CloudFormat::Xyz => parse_separated(text, label, false),
        CloudFormat::Csv => parse_separated(text, label, true),
        CloudFormat::PlyAscii => parse_ply(text, label),
    }
}

fn parse_err(label: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: label.to_string(), line, message: message.into() }
}

fn parse_coord(field: &str, label: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(label, line, format!("invalid number {field:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(label, line, format!("non-finite coordinate {field:?}")));
    }
    Ok(v)
}

fn parse_separated(text: &str, label: &str, comma: bool) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if comma {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        if fields.len() != 3 {
            return Err(parse_err(
                label,
                line_no,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        points.push(Point3::new(
            parse_coord(fields[0], label, line_no)?,
            parse_coord(fields[1], label, line_no)?,
            parse_coord(fields[2], label, line_no)?,
        ));
    }
    Ok(PointCloud::new(points))
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
}

fn parse_ply(text: &str, label: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate();
    let (_, magic) = lines
        .next()
        .ok_or_else(|| parse_err(label, 1, "empty file"))?;
    if magic.trim() != "ply" {
        return Err(parse_err(label, 1, "missing ply magic"));
    }

    let mut elements: Vec<PlyElement> = Vec::new();
    let mut format_seen = false;
    let mut header_end = 0usize;
    for (i, raw) in &mut lines {
        let line_no = i + 1;
        let line = raw.trim();
        let mut words = line.split_whitespace();
        match words.next() {
            Some("comment") | None => {}
            Some("format") => {
                let kind = words.next().unwrap_or("");
                if kind.starts_with("binary") {
                    return Err(Error::UnsupportedFormat(format!("binary PLY ({kind})")));
                }
                if kind != "ascii" {
                    return Err(parse_err(label, line_no, format!("unknown PLY format {kind:?}")));
                }
                format_seen = true;
            }
            Some("element") => {
                let name = words
                    .next()
                    .ok_or_else(|| parse_err(label, line_no, "element without name"))?;
                let count: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| parse_err(label, line_no, "element without count"))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(label, line_no, "property before element"))?;
                let kind = words
                    .next()
                    .ok_or_else(|| parse_err(label, line_no, "property without type"))?;
                if kind == "list" {
                    if element.name == "vertex" {
                        return Err(parse_err(
                            label,
                            line_no,
                            "list properties in the vertex element are not supported",
                        ));
                    }
                    element.properties.push("<list>".to_string());
                } else {
                    let name = words
                        .next()
                        .ok_or_else(|| parse_err(label, line_no, "property without name"))?;
                    element.properties.push(name.to_string());
                }
            }
            Some("end_header") => {
                header_end = line_no;
                break;
            }
            Some(other) => {
                return Err(parse_err(label, line_no, format!("unknown header keyword {other:?}")));
            }
        }
    }
    if header_end == 0 {
        return Err(parse_err(label, text.lines().count(), "missing end_header"));
    }
    if !format_seen {
        return Err(parse_err(label, 1, "missing format line"));
    }

    let vertex = elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| parse_err(label, header_end, "no vertex element"))?;
    let coord_cols: Vec<usize> = ["x", "y", "z"]
        .iter()
        .map(|want| {
            vertex
                .properties
                .iter()
                .position(|p| p == want)
                .ok_or_else(|| parse_err(label, header_end, format!("vertex element lacks property {want}")))
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(vertex.count);
    let mut line_no = header_end;
    for element in &elements {
        for _ in 0..element.count {
            let (i, raw) = lines
                .next()
                .ok_or_else(|| parse_err(label, line_no + 1, "unexpected end of file"))?;
            line_no = i + 1;
            if element.name != "vertex" {
                continue;
            }
            let fields: Vec<&str> = raw.split_whitespace().collect();
            if fields.len() != element.properties.len() {
                return Err(parse_err(
                    label,
                    line_no,
                    format!(
                        "expected {} fields, found {}",
                        element.properties.len(),
                        fields.len()
                    ),
                ));
            }
            points.push(Point3::new(
                parse_coord(fields[coord_cols[0]], label, line_no)?,
                parse_coord(fields[coord_cols[1]], label, line_no)?,
                parse_coord(fields[coord_cols[2]], label, line_no)?,
            ));
        }
    }
    Ok(PointCloud::new(points))
}

/// Serializes a cloud as one `x y z` line per point, 12 significant digits.
pub fn format_xyz(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 48);
    for p in &cloud.points {
        out.push_str(&format!("{:.11e} {:.11e} {:.11e}\n", p.x, p.y, p.z));
    }
    out
}

/// Writes a cloud to disk in xyz format.
pub fn save_cloud_xyz(cloud: &PointCloud, path: &Path) -> Result<()> {
    fs::write(path, format_xyz(cloud))?;
    Ok(())
}

/// Labeled dump: one `x y z cluster_id` line per point; residue points get
/// cluster id -1.
pub fn format_cluster_dump(
    cloud: &PointCloud,
    segmentation: &crate::segmentation::Segmentation,
) -> String {
    let mut labels = vec![-1i64; cloud.len()];
    for (id, cluster) in segmentation.clusters.iter().enumerate() {
        for &i in &cluster.indices {
            labels[i] = id as i64;
        }
    }
    let mut out = String::with_capacity(cloud.len() * 52);
    for (p, label) in cloud.points.iter().zip(labels.iter()) {
        out.push_str(&format!("{:.11e} {:.11e} {:.11e} {label}\n", p.x, p.y, p.z));
    }
    out
}
