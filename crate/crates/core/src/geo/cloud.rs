use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use super::coords::{to_local, GeoPoint, LocalPoint};
use super::GeoError;

/// Nominal resolution of the surveyed LIDAR data (sub-centimetre).
pub const DEFAULT_SOURCE_RESOLUTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    XyzAscii,
    PlyAscii,
}

impl CloudFormat {
    /// Guess from the file extension; `.ply` is PLY, anything else xyz.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("ply") => CloudFormat::PlyAscii,
            _ => CloudFormat::XyzAscii,
        }
    }
}

impl FromStr for CloudFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xyz" | "xyz-ascii" => Ok(CloudFormat::XyzAscii),
            "ply" | "ply-ascii" => Ok(CloudFormat::PlyAscii),
            other => Err(format!("unknown point cloud format '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<LocalPoint>,
    source_resolution: f64,
}

impl PointCloud {
    pub fn new(points: Vec<LocalPoint>, source_resolution: f64) -> Result<Self, GeoError> {
        if points.is_empty() {
            return Err(GeoError::EmptyInput("point cloud has no points".into()));
        }
        if !(source_resolution > 0.0) || !source_resolution.is_finite() {
            return Err(GeoError::InvalidParameter(format!(
                "source resolution must be positive, got {source_resolution}"
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(GeoError::InvalidInput(format!("point {i} is not finite")));
        }
        Ok(PointCloud { points, source_resolution })
    }

    pub fn points(&self) -> &[LocalPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn source_resolution(&self) -> f64 {
        self.source_resolution
    }

    pub fn with_source_resolution(mut self, resolution: f64) -> Result<Self, GeoError> {
        if !(resolution > 0.0) {
            return Err(GeoError::InvalidParameter(format!(
                "source resolution must be positive, got {resolution}"
            )));
        }
        self.source_resolution = resolution;
        Ok(self)
    }
}

/// Read a LIDAR export.
///
/// Files are taken to hold local east/north/up metres unless they declare
/// `crs: wgs84` in a header comment, in which case each record is
/// `lat lon alt` and is projected against `origin`.
pub fn load_point_cloud(path: &Path, format: CloudFormat, origin: &GeoPoint) -> Result<PointCloud, GeoError> {
    let file = File::open(path).map_err(|source| GeoError::Io { path: path.to_path_buf(), source })?;
    parse_point_cloud(BufReader::new(file), format, origin).map_err(|e| match e {
        GeoError::EmptyInput(_) => GeoError::EmptyInput(path.display().to_string()),
        other => other,
    })
}

pub fn parse_point_cloud<R: BufRead>(reader: R, format: CloudFormat, origin: &GeoPoint) -> Result<PointCloud, GeoError> {
    let parsed = match format {
        CloudFormat::XyzAscii => parse_xyz(reader)?,
        CloudFormat::PlyAscii => parse_ply(reader)?,
    };
    if parsed.records.is_empty() {
        return Err(GeoError::EmptyInput("no point records".into()));
    }
    let points = if parsed.geodetic {
        parsed
            .records
            .iter()
            .map(|&(line, [lat, lon, alt])| {
                let g = GeoPoint::new(lat, lon, alt)
                    .map_err(|e| GeoError::Parse { line, message: e.to_string() })?;
                to_local(&g, origin).map_err(|e| GeoError::Parse { line, message: e.to_string() })
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        parsed.records.iter().map(|&(_, c)| LocalPoint::from_array(c)).collect()
    };
    PointCloud::new(points, DEFAULT_SOURCE_RESOLUTION)
}

/// Write a cloud as local-frame xyz-ascii.
pub fn write_xyz<W: Write>(cloud: &PointCloud, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# x y z (local east/north/up metres)")?;
    for p in cloud.points() {
        writeln!(out, "{} {} {}", p.east, p.north, p.up)?;
    }
    Ok(())
}

struct Parsed {
    geodetic: bool,
    records: Vec<(usize, [f64; 3])>,
}

fn declares_wgs84(comment: &str) -> bool {
    let c = comment.trim().to_ascii_lowercase();
    c.strip_prefix("crs:").map(|v| v.trim() == "wgs84").unwrap_or(false)
}

fn parse_coord(token: &str, line: usize) -> Result<f64, GeoError> {
    let v: f64 = token
        .parse()
        .map_err(|_| GeoError::Parse { line, message: format!("non-numeric token '{token}'") })?;
    if !v.is_finite() {
        return Err(GeoError::Parse { line, message: format!("non-finite value '{token}'") });
    }
    Ok(v)
}

fn read_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), GeoError>> {
    reader.lines().enumerate().map(|(i, l)| {
        l.map(|s| (i + 1, s)).map_err(|e| GeoError::Parse { line: i + 1, message: e.to_string() })
    })
}

fn parse_xyz<R: BufRead>(reader: R) -> Result<Parsed, GeoError> {
    let mut geodetic = false;
    let mut records = Vec::new();
    for item in read_lines(reader) {
        let (line, text) = item?;
        let text = text.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if declares_wgs84(comment) {
                if !records.is_empty() {
                    return Err(GeoError::Parse { line, message: "crs declaration after data".into() });
                }
                geodetic = true;
            }
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(GeoError::Parse { line, message: format!("expected 3 coordinates, found {}", tokens.len()) });
        }
        let mut c = [0.0; 3];
        for (slot, tok) in c.iter_mut().zip(&tokens) {
            *slot = parse_coord(tok, line)?;
        }
        records.push((line, c));
    }
    Ok(Parsed { geodetic, records })
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
}

fn parse_ply<R: BufRead>(reader: R) -> Result<Parsed, GeoError> {
    let mut lines = read_lines(reader);
    let mut next = |what: &str| -> Result<(usize, String), GeoError> {
        lines.next().unwrap_or_else(|| Err(GeoError::Parse { line: 0, message: format!("unexpected end of file, expected {what}") }))
    };

    let (line, magic) = next("ply magic")?;
    if magic.trim() != "ply" {
        return Err(GeoError::Parse { line, message: "missing 'ply' magic".into() });
    }
    let mut geodetic = false;
    let mut elements: Vec<PlyElement> = Vec::new();
    loop {
        let (line, text) = next("end_header")?;
        let mut tok = text.split_whitespace();
        match tok.next() {
            Some("format") => {
                if tok.next() != Some("ascii") {
                    return Err(GeoError::Parse { line, message: "only ascii PLY is supported".into() });
                }
            }
            Some("comment") | Some("obj_info") => {
                let rest = text.trim_start().splitn(2, char::is_whitespace).nth(1).unwrap_or("");
                if declares_wgs84(rest) {
                    geodetic = true;
                }
            }
            Some("element") => {
                let name = tok.next().unwrap_or("").to_string();
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| GeoError::Parse { line, message: "bad element count".into() })?;
                elements.push(PlyElement { name, count, properties: Vec::new() });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| GeoError::Parse { line, message: "property before element".into() })?;
                let parts: Vec<&str> = tok.collect();
                if parts.first() == Some(&"list") {
                    if el.name == "vertex" {
                        return Err(GeoError::Parse { line, message: "list properties on vertices unsupported".into() });
                    }
                    el.properties.push(parts.last().unwrap_or(&"").to_string());
                } else if parts.len() == 2 {
                    el.properties.push(parts[1].to_string());
                } else {
                    return Err(GeoError::Parse { line, message: "malformed property".into() });
                }
            }
            Some("end_header") => break,
            None => {}
            Some(other) => {
                return Err(GeoError::Parse { line, message: format!("unknown header keyword '{other}'") })
            }
        }
    }

    let vertex_pos = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| GeoError::Parse { line: 0, message: "no vertex element".into() })?;
    let vertex = &elements[vertex_pos];
    let index_of = |axis: &str| {
        vertex
            .properties
            .iter()
            .position(|p| p == axis)
            .ok_or_else(|| GeoError::Parse { line: 0, message: format!("vertex element lacks property '{axis}'") })
    };
    let idx = [index_of("x")?, index_of("y")?, index_of("z")?];

    let skip: usize = elements[..vertex_pos].iter().map(|e| e.count).sum();
    for _ in 0..skip {
        next("element data")?;
    }
    let mut records = Vec::with_capacity(vertex.count);
    for _ in 0..vertex.count {
        let (line, text) = next("vertex record")?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != vertex.properties.len() {
            return Err(GeoError::Parse {
                line,
                message: format!("expected {} values, found {}", vertex.properties.len(), tokens.len()),
            });
        }
        let mut c = [0.0; 3];
        for (slot, &i) in c.iter_mut().zip(&idx) {
            *slot = parse_coord(tokens[i], line)?;
        }
        records.push((line, c));
    }
    Ok(Parsed { geodetic, records })
}
