//! Box-tunnel scenes with known geometry, their point clouds, and seeded
//! measurement campaigns over them.
//!
//! A scene is a straight main tunnel under a planar (flat or tilted)
//! terrain surface, with optional side corridors branching off at right
//! angles. The open spaces are axis-aligned boxes, so every feature has a
//! closed-form value (see [`oracle`]).

mod campaign;
pub mod oracle;

use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{CorridorOpening, Segment};
use crate::geo::{to_geo, Aabb, GeoError, GeoPoint, LocalPoint, PointCloud};

pub use campaign::{generate_campaign, Campaign, CampaignParams, Truth};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("reading layout {path}: {message}")]
    Layout { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub width: f64,
    pub height: f64,
}

/// Which side of the main axis a corridor leaves from, looking from the
/// axis start toward its end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideCorridor {
    /// Distance of the corridor centreline from the axis start.
    pub station: f64,
    pub width: f64,
    /// Length beyond the main tunnel wall.
    pub length: f64,
    #[serde(default)]
    pub side: Side,
}

fn default_margin() -> f64 {
    40.0
}

/// Scene description. Horizontal coordinates are local east/north metres
/// relative to `origin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelLayout {
    pub origin: GeoPoint,
    /// Plan-view centreline `[east, north]` start and end; must run along
    /// east or along north.
    pub main_axis: [[f64; 2]; 2],
    pub cross_section: CrossSection,
    /// Ground cover between the tunnel ceiling and the terrain surface at
    /// the start of the main axis.
    pub burial_depth: f64,
    #[serde(default)]
    pub side_corridors: Vec<SideCorridor>,
    /// Up coordinate of the terrain surface above the local origin.
    #[serde(default)]
    pub terrain_elevation: f64,
    /// Terrain rise per metre east and per metre north.
    #[serde(default)]
    pub terrain_slope: [f64; 2],
    /// Horizontal extent of the terrain beyond the tunnels.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Plan-view `[east, north]` of the eNB mast foot, used when no
    /// transmitter configuration is supplied.
    #[serde(default)]
    pub transmitter: Option<[f64; 2]>,
}

impl TunnelLayout {
    pub fn from_json_str(s: &str) -> Result<Self, SynthError> {
        let layout: TunnelLayout =
            serde_json::from_str(s).map_err(|e| SynthError::Layout { path: "<string>".into(), message: e.to_string() })?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SynthError::Layout { path: path.display().to_string(), message: e.to_string() })?;
        let layout: TunnelLayout = serde_json::from_str(&text)
            .map_err(|e| SynthError::Layout { path: path.display().to_string(), message: e.to_string() })?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidParameter(m));
        self.origin.validate()?;
        let [s, e] = self.main_axis;
        if s.iter().chain(&e).any(|v| !v.is_finite()) {
            return bad("main axis has non-finite coordinates".into());
        }
        let along_east = s[1] == e[1] && s[0] != e[0];
        let along_north = s[0] == e[0] && s[1] != e[1];
        if !along_east && !along_north {
            return bad("main axis must run along east or north and have non-zero length".into());
        }
        let cs = self.cross_section;
        for (name, v) in [("width", cs.width), ("height", cs.height), ("burial depth", self.burial_depth)] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.margin >= 0.0) || !self.terrain_elevation.is_finite() {
            return bad("margin must be non-negative and terrain elevation finite".into());
        }
        if self.terrain_slope.iter().any(|v| !v.is_finite() || v.abs() > 0.5) {
            return bad(format!("terrain slope {:?} must be finite and at most 0.5 in magnitude", self.terrain_slope));
        }
        let len = self.axis_length();
        for (i, c) in self.side_corridors.iter().enumerate() {
            if !(c.width > 0.0) || !(c.length > 0.0) {
                return bad(format!("corridor {i}: width and length must be positive"));
            }
            if c.station - c.width / 2.0 < 0.0 || c.station + c.width / 2.0 > len {
                return bad(format!("corridor {i}: station {} m does not fit on a {len} m axis", c.station));
            }
        }
        for b in self.boxes() {
            for (e, n) in [(b.min.east, b.min.north), (b.min.east, b.max.north), (b.max.east, b.min.north), (b.max.east, b.max.north)] {
                if self.terrain_height(e, n) <= b.max.up {
                    return bad(format!("terrain at ({e:.1}, {n:.1}) does not cover the tunnel ceiling"));
                }
            }
        }
        Ok(())
    }

    pub fn axis_length(&self) -> f64 {
        let [s, e] = self.main_axis;
        (e[0] - s[0]).hypot(e[1] - s[1])
    }

    fn heading(&self) -> LocalPoint {
        let [s, e] = self.main_axis;
        LocalPoint::new(e[0] - s[0], e[1] - s[1], 0.0) * (1.0 / self.axis_length())
    }

    fn left(&self) -> LocalPoint {
        let h = self.heading();
        LocalPoint::new(-h.north, h.east, 0.0)
    }

    /// Terrain surface elevation at plan position (`east`, `north`).
    pub fn terrain_height(&self, east: f64, north: f64) -> f64 {
        self.terrain_elevation + self.terrain_slope[0] * east + self.terrain_slope[1] * north
    }

    pub fn floor_elevation(&self) -> f64 {
        self.ceiling_elevation() - self.cross_section.height
    }

    pub fn ceiling_elevation(&self) -> f64 {
        let [s, _] = self.main_axis;
        self.terrain_height(s[0], s[1]) - self.burial_depth
    }

    /// Point on the main centreline `s` metres from the start, `lateral`
    /// metres to the left, at elevation `up`.
    pub fn axis_point(&self, s: f64, lateral: f64, up: f64) -> LocalPoint {
        let [st, _] = self.main_axis;
        LocalPoint::new(st[0], st[1], up) + self.heading() * s + self.left() * lateral
    }

    /// Main axis at mid-height, as used for corridor detection.
    pub fn detection_axis(&self) -> Segment {
        let up = self.floor_elevation() + self.cross_section.height / 2.0;
        Segment::new(self.axis_point(0.0, 0.0, up), self.axis_point(self.axis_length(), 0.0, up))
    }

    fn side_sign(side: Side) -> f64 {
        match side {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    fn box_from_corners(a: LocalPoint, b: LocalPoint) -> Aabb {
        Aabb {
            min: LocalPoint::new(a.east.min(b.east), a.north.min(b.north), a.up.min(b.up)),
            max: LocalPoint::new(a.east.max(b.east), a.north.max(b.north), a.up.max(b.up)),
        }
    }

    pub fn main_box(&self) -> Aabb {
        let w = self.cross_section.width / 2.0;
        Self::box_from_corners(
            self.axis_point(0.0, -w, self.floor_elevation()),
            self.axis_point(self.axis_length(), w, self.ceiling_elevation()),
        )
    }

    /// Corridor interior, starting at the main centreline so that it
    /// overlaps the main tunnel.
    pub fn corridor_box(&self, c: &SideCorridor) -> Aabb {
        let sign = Self::side_sign(c.side);
        let far = sign * (self.cross_section.width / 2.0 + c.length);
        Self::box_from_corners(
            self.axis_point(c.station - c.width / 2.0, 0.0, self.floor_elevation()),
            self.axis_point(c.station + c.width / 2.0, far, self.ceiling_elevation()),
        )
    }

    /// All open (free) boxes, main tunnel first.
    pub fn boxes(&self) -> Vec<Aabb> {
        std::iter::once(self.main_box()).chain(self.side_corridors.iter().map(|c| self.corridor_box(c))).collect()
    }

    /// Horizontal extent of the terrain surface.
    pub fn footprint(&self) -> Aabb {
        let boxes = self.boxes();
        let m = self.margin;
        let min = boxes.iter().fold(LocalPoint::new(f64::INFINITY, f64::INFINITY, 0.0), |a, b| {
            LocalPoint::new(a.east.min(b.min.east), a.north.min(b.min.north), 0.0)
        });
        let max = boxes.iter().fold(LocalPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0), |a, b| {
            LocalPoint::new(a.east.max(b.max.east), a.north.max(b.max.north), 0.0)
        });
        let (e0, e1, n0, n1) = (min.east - m, max.east + m, min.north - m, max.north + m);
        let top = [(e0, n0), (e0, n1), (e1, n0), (e1, n1)]
            .into_iter()
            .map(|(e, n)| self.terrain_height(e, n))
            .fold(f64::NEG_INFINITY, f64::max);
        Aabb { min: LocalPoint::new(e0, n0, self.floor_elevation()), max: LocalPoint::new(e1, n1, top) }
    }

    /// Where each side corridor meets the main tunnel: the two jambs at
    /// floor and ceiling height on the main wall line.
    pub fn ground_truth_openings(&self) -> Vec<CorridorOpening> {
        let w = self.cross_section.width / 2.0;
        let (floor, ceiling) = (self.floor_elevation(), self.ceiling_elevation());
        self.side_corridors
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let lat = Self::side_sign(c.side) * w;
                let (a, b) = (c.station - c.width / 2.0, c.station + c.width / 2.0);
                let samples = vec![
                    self.axis_point(a, lat, floor),
                    self.axis_point(a, lat, ceiling),
                    self.axis_point(b, lat, floor),
                    self.axis_point(b, lat, ceiling),
                ];
                CorridorOpening::new(format!("corridor-{i}"), samples).expect("four finite samples")
            })
            .collect()
    }

    /// Geodetic position of a local point.
    pub fn geo(&self, p: LocalPoint) -> Result<GeoPoint, SynthError> {
        Ok(to_geo(&p, &self.origin)?)
    }

    /// Mast foot for the layout's `transmitter` entry.
    pub fn transmitter_ground(&self) -> Option<Result<GeoPoint, SynthError>> {
        self.transmitter.map(|[e, n]| self.geo(LocalPoint::new(e, n, self.terrain_height(e, n))))
    }
}

/// Rectangle in 3D given by a corner and two orthogonal edge vectors.
struct Face {
    corner: LocalPoint,
    u: LocalPoint,
    v: LocalPoint,
}

fn box_faces(b: &Aabb) -> Vec<Face> {
    let d = b.max - b.min;
    let (ex, ny, uz) = (LocalPoint::new(d.east, 0.0, 0.0), LocalPoint::new(0.0, d.north, 0.0), LocalPoint::new(0.0, 0.0, d.up));
    vec![
        Face { corner: b.min, u: ex, v: ny },
        Face { corner: b.min + uz, u: ex, v: ny },
        Face { corner: b.min, u: ex, v: uz },
        Face { corner: b.min + ny, u: ex, v: uz },
        Face { corner: b.min, u: ny, v: uz },
        Face { corner: b.min + ex, u: ny, v: uz },
    ]
}

fn strictly_inside(b: &Aabb, p: LocalPoint) -> bool {
    p.east > b.min.east
        && p.east < b.max.east
        && p.north > b.min.north
        && p.north < b.max.north
        && p.up > b.min.up
        && p.up < b.max.up
}

fn sample_face(face: &Face, spacing: f64, rng: &mut ChaCha8Rng, out: &mut Vec<LocalPoint>) {
    let (lu, lv) = (face.u.norm(), face.v.norm());
    let (nu, nv) = ((lu / spacing).round().max(1.0) as usize, (lv / spacing).round().max(1.0) as usize);
    let (su, sv) = (lu / nu as f64, lv / nv as f64);
    let (du, dv) = (face.u * (1.0 / lu), face.v * (1.0 / lv));
    let jitter = spacing / 4.0 * 0.999;
    // Samples on the face border are not jittered across it, so edges and
    // corners where faces meet are always covered.
    let mut coord = |k: usize, n: usize, step: f64| {
        let j = rng.random_range(-jitter..jitter);
        if k == 0 || k == n {
            k as f64 * step
        } else {
            k as f64 * step + j
        }
    };
    for i in 0..=nu {
        for j in 0..=nv {
            let a = coord(i, nu, su);
            let b = coord(j, nv, sv);
            out.push(face.corner + du * a + dv * b);
        }
    }
}

/// Sample every solid surface of the scene: tunnel and corridor walls,
/// floors, ceilings, end faces, and the terrain surface over the
/// footprint. Samples sit on a vertex grid of pitch `sample_spacing`
/// with in-plane jitter below a quarter of the pitch; border samples stay
/// exactly on the border. Every voxel a surface passes through receives a
/// sample when the voxel size is at least 1.5 times the pitch.
pub fn generate_cloud(layout: &TunnelLayout, sample_spacing: f64, seed: u64) -> Result<PointCloud, SynthError> {
    if !(sample_spacing > 0.0) || !sample_spacing.is_finite() {
        return Err(SynthError::InvalidParameter(format!("sample spacing must be positive, got {sample_spacing}")));
    }
    layout.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boxes = layout.boxes();
    let mut points = Vec::new();
    for (i, b) in boxes.iter().enumerate() {
        let mut face_points = Vec::new();
        for face in box_faces(b) {
            sample_face(&face, sample_spacing, &mut rng, &mut face_points);
        }
        points.extend(
            face_points
                .into_iter()
                .filter(|p| !boxes.iter().enumerate().any(|(j, other)| j != i && strictly_inside(other, *p))),
        );
    }
    let fp = layout.footprint();
    let (de, dn) = (fp.max.east - fp.min.east, fp.max.north - fp.min.north);
    let [se, sn] = layout.terrain_slope;
    let top = Face {
        corner: LocalPoint::new(fp.min.east, fp.min.north, layout.terrain_height(fp.min.east, fp.min.north)),
        u: LocalPoint::new(de, 0.0, se * de),
        v: LocalPoint::new(0.0, dn, sn * dn),
    };
    sample_face(&top, sample_spacing, &mut rng, &mut points);
    Ok(PointCloud::new(points, sample_spacing.min(crate::geo::DEFAULT_SOURCE_RESOLUTION))?)
}
