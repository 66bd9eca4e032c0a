use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::GeoError;

/// WGS84 semi-major axis in metres.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;

/// Largest separation from the local origin accepted by [`to_local`].
pub const MAX_LOCAL_EXTENT_M: f64 = 50_000.0;

fn wgs84_e2() -> f64 {
    WGS84_F * (2.0 - WGS84_F)
}

/// Geodetic position on the WGS84 ellipsoid.
///
/// `altitude` is metres above whatever vertical datum the caller uses. All
/// points converted against one origin must share that datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
    pub altitude: f64,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64, altitude: f64) -> Result<Self, GeoError> {
        let p = GeoPoint { latitude, longitude, altitude };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !self.latitude.is_finite() || !(-90.0..=90.0).contains(&self.latitude) {
            return Err(GeoError::InvalidInput(format!("latitude {} outside [-90, 90]", self.latitude)));
        }
        if !self.longitude.is_finite() || !(-180.0..=180.0).contains(&self.longitude) {
            return Err(GeoError::InvalidInput(format!(
                "longitude {} outside [-180, 180]",
                self.longitude
            )));
        }
        if !self.altitude.is_finite() {
            return Err(GeoError::InvalidInput("altitude is not finite".into()));
        }
        Ok(())
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.7}, {:.7}, {:.3} m)", self.latitude, self.longitude, self.altitude)
    }
}

/// East/north/up metres in a local tangent frame. Also used as a plain 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalPoint {
    pub east: f64,
    pub north: f64,
    pub up: f64,
}

impl LocalPoint {
    pub const ORIGIN: LocalPoint = LocalPoint { east: 0.0, north: 0.0, up: 0.0 };

    pub const fn new(east: f64, north: f64, up: f64) -> Self {
        LocalPoint { east, north, up }
    }

    pub fn dot(self, other: LocalPoint) -> f64 {
        self.east * other.east + self.north * other.north + self.up * other.up
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Length of the east/north component.
    pub fn horizontal_norm(self) -> f64 {
        self.east.hypot(self.north)
    }

    pub fn distance(self, other: LocalPoint) -> f64 {
        (other - self).norm()
    }

    pub fn is_finite(self) -> bool {
        self.east.is_finite() && self.north.is_finite() && self.up.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.east, self.north, self.up]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        LocalPoint::new(a[0], a[1], a[2])
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<LocalPoint> {
        let n = self.norm();
        if n > f64::EPSILON && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }
}

impl Add for LocalPoint {
    type Output = LocalPoint;
    fn add(self, o: LocalPoint) -> LocalPoint {
        LocalPoint::new(self.east + o.east, self.north + o.north, self.up + o.up)
    }
}

impl Sub for LocalPoint {
    type Output = LocalPoint;
    fn sub(self, o: LocalPoint) -> LocalPoint {
        LocalPoint::new(self.east - o.east, self.north - o.north, self.up - o.up)
    }
}

impl Mul<f64> for LocalPoint {
    type Output = LocalPoint;
    fn mul(self, s: f64) -> LocalPoint {
        LocalPoint::new(self.east * s, self.north * s, self.up * s)
    }
}

impl Neg for LocalPoint {
    type Output = LocalPoint;
    fn neg(self) -> LocalPoint {
        LocalPoint::new(-self.east, -self.north, -self.up)
    }
}

/// Meridional and prime-vertical radii of curvature at `lat_rad`.
fn radii(lat_rad: f64) -> (f64, f64) {
    let e2 = wgs84_e2();
    let s = lat_rad.sin();
    let w = (1.0 - e2 * s * s).sqrt();
    let prime_vertical = WGS84_A / w;
    let meridional = WGS84_A * (1.0 - e2) / (w * w * w);
    (meridional, prime_vertical)
}

/// Local scale factors (metres per radian of latitude, metres per radian of
/// longitude) at the origin.
fn scales(origin: &GeoPoint) -> (f64, f64) {
    let lat = origin.latitude.to_radians();
    let (m, n) = radii(lat);
    ((m + origin.altitude), (n + origin.altitude) * lat.cos())
}

fn wrap_degrees(d: f64) -> f64 {
    if (-180.0..=180.0).contains(&d) {
        return d;
    }
    let mut x = (d + 180.0).rem_euclid(360.0) - 180.0;
    if x == -180.0 {
        x = 180.0;
    }
    x
}

/// Project `p` into the equirectangular tangent frame centred on `origin`.
///
/// East and north scale with the ellipsoid's radii of curvature at the
/// origin; up is the plain altitude difference.
pub fn to_local(p: &GeoPoint, origin: &GeoPoint) -> Result<LocalPoint, GeoError> {
    p.validate()?;
    origin.validate()?;
    if origin.latitude.abs() > 89.9 {
        return Err(GeoError::InvalidInput("local frame undefined near the poles".into()));
    }
    let (north_scale, east_scale) = scales(origin);
    let dlat = (p.latitude - origin.latitude).to_radians();
    let dlon = wrap_degrees(p.longitude - origin.longitude).to_radians();
    let local = LocalPoint::new(dlon * east_scale, dlat * north_scale, p.altitude - origin.altitude);
    if local.horizontal_norm() >= MAX_LOCAL_EXTENT_M {
        return Err(GeoError::InvalidInput(format!(
            "point {p} is {:.0} m from origin; local frame limited to {MAX_LOCAL_EXTENT_M} m",
            local.horizontal_norm()
        )));
    }
    Ok(local)
}

/// Inverse of [`to_local`].
pub fn to_geo(p: &LocalPoint, origin: &GeoPoint) -> Result<GeoPoint, GeoError> {
    origin.validate()?;
    if !p.is_finite() {
        return Err(GeoError::InvalidInput("local point is not finite".into()));
    }
    let (north_scale, east_scale) = scales(origin);
    let lat = origin.latitude + (p.north / north_scale).to_degrees();
    let lon = wrap_degrees(origin.longitude + (p.east / east_scale).to_degrees());
    GeoPoint::new(lat, lon, origin.altitude + p.up)
}
