//! Point-cloud files: headerless `x,y,z[,label]` CSV and ascii PLY with an
//! optional `uchar label` vertex property. Coordinates are written with six
//! decimals.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use skelreg_core::{Label, Point3, PointCloud};

use crate::artifacts::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Ply,
}

impl Format {
    /// Format implied by the file extension (`.csv`, `.xyz`, `.txt` or `.ply`).
    pub fn from_path(path: &Path) -> Option<Format> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "csv" | "xyz" | "txt" => Some(Format::Csv),
            "ply" => Some(Format::Ply),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("file contains no points")]
    EmptyFile,
    #[error("{}: unknown point-cloud format, expected .csv or .ply", .0.display())]
    UnknownFormat(PathBuf),
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

fn coordinate(token: &str, line: usize) -> Result<f64, IoError> {
    let v: f64 = token
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("`{}` is not a number", token.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("`{}` is not finite", token.trim())));
    }
    Ok(v)
}

fn label(token: &str, line: usize) -> Result<Label, IoError> {
    token
        .trim()
        .parse::<u8>()
        .ok()
        .and_then(Label::from_code)
        .ok_or_else(|| parse_err(line, format!("`{}` is not a label code (0 to 5)", token.trim())))
}

fn assemble(points: Vec<Point3>, labels: Option<Vec<Label>>) -> Result<PointCloud, IoError> {
    if points.is_empty() {
        return Err(IoError::EmptyFile);
    }
    Ok(match labels {
        Some(labels) => PointCloud::with_labels(points, labels).expect("one label per point"),
        None => PointCloud::new(points),
    })
}

/// Parses CSV text. Blank lines and lines starting with `#` are skipped;
/// either every record carries a label or none does.
pub fn parse_csv(text: &str) -> Result<PointCloud, IoError> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut labeled = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split(',').collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(parse_err(line, format!("expected 3 or 4 fields, found {}", fields.len())));
        }
        let has_label = fields.len() == 4;
        if *labeled.get_or_insert(has_label) != has_label {
            return Err(parse_err(line, "label column present on some records only"));
        }
        points.push(Point3::new(
            coordinate(fields[0], line)?,
            coordinate(fields[1], line)?,
            coordinate(fields[2], line)?,
        ));
        if has_label {
            labels.push(label(fields[3], line)?);
        }
    }
    assemble(points, labeled.unwrap_or(false).then_some(labels))
}

/// Parses ascii PLY 1.0 holding a single `vertex` element. Scalar properties
/// other than `x`, `y`, `z` and `label` are read past.
pub fn parse_ply(text: &str) -> Result<PointCloud, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_err(1, "missing `ply` magic")),
    }
    let mut count = None;
    let mut props: Vec<String> = Vec::new();
    let mut header_done = false;
    for (line, body) in lines.by_ref() {
        let words: Vec<&str> = body.split_whitespace().collect();
        match words.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", "ascii", "1.0"] => {}
            ["format", ..] => return Err(parse_err(line, "only `format ascii 1.0` is supported")),
            ["element", "vertex", n] => {
                if count.is_some() {
                    return Err(parse_err(line, "duplicate vertex element"));
                }
                count = Some(n.parse::<usize>().map_err(|_| parse_err(line, "bad vertex count"))?);
            }
            ["element", name, _] => return Err(parse_err(line, format!("unsupported element `{name}`"))),
            ["property", "list", ..] => return Err(parse_err(line, "list properties are not supported")),
            ["property", _, name] if count.is_some() => props.push((*name).to_string()),
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => return Err(parse_err(line, format!("unexpected header line `{body}`"))),
        }
    }
    if !header_done {
        return Err(parse_err(text.lines().count().max(1), "missing `end_header`"));
    }
    let count = count.ok_or_else(|| parse_err(1, "no vertex element"))?;
    let col = |name: &str| props.iter().position(|p| p == name);
    let (Some(ix), Some(iy), Some(iz)) = (col("x"), col("y"), col("z")) else {
        return Err(parse_err(1, "vertex element lacks x, y or z"));
    };
    let il = col("label");

    let mut points = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(if il.is_some() { count } else { 0 });
    let mut last_line = 1;
    for (line, body) in lines {
        last_line = line;
        if body.is_empty() {
            continue;
        }
        if points.len() == count {
            return Err(parse_err(line, "more vertex records than declared"));
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != props.len() {
            return Err(parse_err(line, format!("expected {} values, found {}", props.len(), fields.len())));
        }
        points.push(Point3::new(
            coordinate(fields[ix], line)?,
            coordinate(fields[iy], line)?,
            coordinate(fields[iz], line)?,
        ));
        if let Some(il) = il {
            labels.push(label(fields[il], line)?);
        }
    }
    if points.len() < count {
        return Err(parse_err(last_line, format!("declared {count} vertices, found {}", points.len())));
    }
    assemble(points, il.map(|_| labels))
}

pub fn to_csv(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 40);
    for (i, p) in cloud.points().iter().enumerate() {
        let _ = write!(out, "{:.6},{:.6},{:.6}", p.x, p.y, p.z);
        if cloud.labels().is_some() {
            let _ = write!(out, ",{}", cloud.label(i).code());
        }
        out.push('\n');
    }
    out
}

pub fn to_ply(cloud: &PointCloud) -> String {
    let labeled = cloud.labels().is_some();
    let mut out = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n",
        cloud.len()
    );
    if labeled {
        out.push_str("property uchar label\n");
    }
    out.push_str("end_header\n");
    for (i, p) in cloud.points().iter().enumerate() {
        let _ = write!(out, "{:.6} {:.6} {:.6}", p.x, p.y, p.z);
        if labeled {
            let _ = write!(out, " {}", cloud.label(i).code());
        }
        out.push('\n');
    }
    out
}

pub fn read_point_cloud(path: &Path, format: Format) -> Result<PointCloud, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        Format::Csv => parse_csv(&text),
        Format::Ply => parse_ply(&text),
    }
}

/// Reads a cloud whose format follows from its extension.
pub fn read_point_cloud_auto(path: &Path) -> Result<PointCloud, IoError> {
    let format = Format::from_path(path).ok_or_else(|| IoError::UnknownFormat(path.to_path_buf()))?;
    read_point_cloud(path, format)
}

pub fn write_point_cloud(cloud: &PointCloud, path: &Path, format: Format) -> Result<(), IoError> {
    let text = match format {
        Format::Csv => to_csv(cloud),
        Format::Ply => to_ply(cloud),
    };
    write_atomic(path, text.as_bytes()).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}
