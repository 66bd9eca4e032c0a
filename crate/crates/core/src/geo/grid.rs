use std::collections::HashSet;

use super::cloud::PointCloud;
use super::coords::LocalPoint;
use super::GeoError;

/// Default voxel edge length in metres.
pub const DEFAULT_VOXEL_SIZE: f64 = 0.25;

/// Integer voxel coordinates (east, north, up).
pub type VoxelKey = [i32; 3];

/// Axis-aligned box in the local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: LocalPoint,
    pub max: LocalPoint,
}

impl Aabb {
    pub fn contains(&self, p: LocalPoint) -> bool {
        self.contains_horizontal(p) && p.up >= self.min.up && p.up <= self.max.up
    }

    pub fn contains_horizontal(&self, p: LocalPoint) -> bool {
        p.east >= self.min.east && p.east <= self.max.east && p.north >= self.min.north && p.north <= self.max.north
    }

    /// Parameter interval `[t0, t1]` (t0 may be negative) over which
    /// `origin + t * dir` lies inside the box, if any.
    pub fn ray_interval(&self, origin: LocalPoint, dir: LocalPoint) -> Option<(f64, f64)> {
        let (o, d) = (origin.to_array(), dir.to_array());
        let (lo, hi) = (self.min.to_array(), self.max.to_array());
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for axis in 0..3 {
            if d[axis] == 0.0 {
                if o[axis] < lo[axis] || o[axis] > hi[axis] {
                    return None;
                }
                continue;
            }
            let a = (lo[axis] - o[axis]) / d[axis];
            let b = (hi[axis] - o[axis]) / d[axis];
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        (t0 <= t1).then_some((t0, t1))
    }
}

/// Voxelized occupancy of a point cloud.
///
/// Voxel `k` on an axis covers `[origin + k*size, origin + (k+1)*size)`, so a
/// point lying exactly on a face belongs to the voxel whose lower face it is.
/// The grid is immutable once built and can be shared between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    voxel_size: f64,
    origin: LocalPoint,
    occupied: HashSet<VoxelKey>,
    key_bounds: Option<(VoxelKey, VoxelKey)>,
}

impl OccupancyGrid {
    pub fn empty(voxel_size: f64) -> Result<Self, GeoError> {
        Self::from_voxels(voxel_size, LocalPoint::ORIGIN, std::iter::empty())
    }

    pub fn from_voxels(
        voxel_size: f64,
        origin: LocalPoint,
        voxels: impl IntoIterator<Item = VoxelKey>,
    ) -> Result<Self, GeoError> {
        check_voxel_size(voxel_size)?;
        let occupied: HashSet<VoxelKey> = voxels.into_iter().collect();
        let key_bounds = occupied.iter().fold(None, |acc: Option<(VoxelKey, VoxelKey)>, k| {
            Some(match acc {
                None => (*k, *k),
                Some((lo, hi)) => (
                    [lo[0].min(k[0]), lo[1].min(k[1]), lo[2].min(k[2])],
                    [hi[0].max(k[0]), hi[1].max(k[1]), hi[2].max(k[2])],
                ),
            })
        });
        Ok(OccupancyGrid { voxel_size, origin, occupied, key_bounds })
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn origin(&self) -> LocalPoint {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn key_of(&self, p: LocalPoint) -> VoxelKey {
        let rel = p - self.origin;
        let f = |v: f64| (v / self.voxel_size).floor() as i32;
        [f(rel.east), f(rel.north), f(rel.up)]
    }

    pub fn voxel_center(&self, key: VoxelKey) -> LocalPoint {
        let c = |k: i32| (k as f64 + 0.5) * self.voxel_size;
        self.origin + LocalPoint::new(c(key[0]), c(key[1]), c(key[2]))
    }

    pub fn contains_key(&self, key: &VoxelKey) -> bool {
        match self.key_bounds {
            Some((lo, hi)) if (0..3).all(|a| key[a] >= lo[a] && key[a] <= hi[a]) => self.occupied.contains(key),
            _ => false,
        }
    }

    pub fn is_occupied(&self, p: LocalPoint) -> bool {
        p.is_finite() && self.contains_key(&self.key_of(p))
    }

    /// Whether no occupied voxel lies above the one containing `p` in its
    /// vertical column.
    pub fn in_open_air(&self, p: LocalPoint) -> bool {
        let Some((_, hi)) = self.key_bounds else {
            return true;
        };
        let k = self.key_of(p);
        (k[2] + 1..=hi[2]).all(|z| !self.occupied.contains(&[k[0], k[1], z]))
    }

    /// Whether the voxel containing `p` is occupied and belongs to the
    /// top-most contiguous block of occupied voxels in its column.
    pub fn in_terrain_layer(&self, p: LocalPoint) -> bool {
        let Some((_, hi)) = self.key_bounds else {
            return false;
        };
        let k = self.key_of(p);
        if !self.contains_key(&k) {
            return false;
        }
        let mut z = k[2] + 1;
        while self.occupied.contains(&[k[0], k[1], z]) {
            z += 1;
        }
        (z + 1..=hi[2]).all(|z| !self.occupied.contains(&[k[0], k[1], z]))
    }

    /// Metric bounds of all occupied voxels; `None` for an empty grid.
    pub fn bounds(&self) -> Option<Aabb> {
        self.key_bounds.map(|(lo, hi)| {
            let corner = |k: VoxelKey| {
                self.origin
                    + LocalPoint::new(
                        k[0] as f64 * self.voxel_size,
                        k[1] as f64 * self.voxel_size,
                        k[2] as f64 * self.voxel_size,
                    )
            };
            Aabb { min: corner(lo), max: corner([hi[0] + 1, hi[1] + 1, hi[2] + 1]) }
        })
    }

    /// Occupied voxels in lexicographic order.
    pub fn sorted_voxels(&self) -> Vec<VoxelKey> {
        let mut v: Vec<VoxelKey> = self.occupied.iter().copied().collect();
        v.sort_unstable();
        v
    }
}

fn check_voxel_size(voxel_size: f64) -> Result<(), GeoError> {
    if !(voxel_size > 0.0) || !voxel_size.is_finite() {
        return Err(GeoError::InvalidParameter(format!("voxel size must be positive, got {voxel_size}")));
    }
    Ok(())
}

/// Voxelize `cloud` on a lattice anchored at the local origin.
pub fn build_occupancy(cloud: &PointCloud, voxel_size: f64) -> Result<OccupancyGrid, GeoError> {
    check_voxel_size(voxel_size)?;
    if voxel_size < cloud.source_resolution() {
        return Err(GeoError::InvalidParameter(format!(
            "voxel size {voxel_size} m is finer than the cloud resolution {} m",
            cloud.source_resolution()
        )));
    }
    let shell = OccupancyGrid::empty(voxel_size)?;
    OccupancyGrid::from_voxels(voxel_size, LocalPoint::ORIGIN, cloud.points().iter().map(|p| shell.key_of(*p)))
}
