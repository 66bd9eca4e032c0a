//! Fixed-step ray marching through the occupancy grid.
//!
//! The LIDAR cloud samples surfaces, so occupied voxels mark boundaries
//! rather than filled material. A ray starts in free space (the receiver is
//! in a corridor or outdoors) and every contiguous run of occupied samples is
//! one surface crossing that toggles the medium between free and solid. A
//! crossing is placed at the middle of its run. A receiver whose own voxel is
//! occupied is treated as touching a boundary at distance zero.
//!
//! The ground is handled apart from interior surfaces. In every column the
//! top-most contiguous block of occupied voxels is the terrain layer. A
//! voxelized sloped ground is a staircase that a shallow ray can leave and
//! re-clip several times, so all terrain-layer samples joined by free
//! samples lying against that layer form one crossing. It counts only when
//! the ray ends up on the other side: rising out of it always lands in free
//! air, and descending into it always lands in solid.

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::geo::{LocalPoint, OccupancyGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transition {
    SolidToFree,
    FreeToSolid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub distance: f64,
    pub transition: Transition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayTrace {
    pub origin: LocalPoint,
    pub direction: LocalPoint,
    /// Non-decreasing, alternating, starting with free->solid.
    pub crossings: Vec<Crossing>,
    /// Distance of the final solid->free crossing when the ray ends in free
    /// space; zero if it never met a surface, `None` if it ends in solid.
    pub terrain_exit: Option<f64>,
    /// Distance up to which the grid was sampled.
    pub traced: f64,
}

impl RayTrace {
    pub fn first_boundary(&self) -> Option<f64> {
        self.crossings.iter().find(|c| c.transition == Transition::FreeToSolid).map(|c| c.distance)
    }

    /// Total length inside solid between the origin and `until`.
    pub fn solid_length(&self, until: f64) -> f64 {
        let mut total = 0.0;
        let mut entered: Option<f64> = None;
        for c in &self.crossings {
            if c.distance > until {
                break;
            }
            match c.transition {
                Transition::FreeToSolid => entered = Some(c.distance),
                Transition::SolidToFree => {
                    if let Some(a) = entered.take() {
                        total += c.distance - a;
                    }
                }
            }
        }
        if let Some(a) = entered {
            total += until - a;
        }
        total
    }
}

/// Optional overrides of the marching step and range.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RayParams {
    /// Defaults to half the voxel size.
    pub step: Option<f64>,
    /// Defaults to twice the receiver-transmitter separation.
    pub max_range: Option<f64>,
}

impl RayParams {
    pub fn step_for(&self, grid: &OccupancyGrid) -> f64 {
        self.step.unwrap_or(grid.voxel_size() / 2.0)
    }
}

pub fn ray_march(
    grid: &OccupancyGrid,
    origin: LocalPoint,
    direction: LocalPoint,
    step: f64,
    max_range: f64,
) -> Result<RayTrace, FeatureError> {
    if !(step > 0.0) || step > grid.voxel_size() {
        return Err(FeatureError::InvalidParameter(format!(
            "step {step} m must be positive and no larger than the voxel size {} m",
            grid.voxel_size()
        )));
    }
    if !(max_range > 0.0) || !max_range.is_finite() {
        return Err(FeatureError::InvalidParameter(format!("max_range must be positive, got {max_range}")));
    }
    if !origin.is_finite() {
        return Err(FeatureError::InvalidParameter("ray origin is not finite".into()));
    }
    let dir = direction
        .normalized()
        .ok_or_else(|| FeatureError::DegenerateGeometry("zero ray direction".into()))?;

    // Only the horizontal footprint is checked: receivers may stand above
    // the highest surface (outdoors) or below the lowest one.
    let mut leaves_top = false;
    let end = match grid.bounds() {
        None => 0.0,
        Some(b) => {
            if !b.contains_horizontal(origin) {
                return Err(FeatureError::OutOfBounds(format!(
                    "ray origin ({:.2}, {:.2}) outside the grid footprint",
                    origin.east, origin.north
                )));
            }
            match b.ray_interval(origin, dir) {
                Some((_, t1)) if t1 > 0.0 => {
                    leaves_top = t1 < max_range && dir.up > 0.0 && ((b.max.up - origin.up) / dir.up - t1).abs() < 1e-9;
                    t1.min(max_range)
                }
                _ => 0.0,
            }
        }
    };

    let samples = (end / step).floor() as usize;
    let mut m = Marcher { grid, crossings: Vec::new(), solid: false, run: None, ground: None, before: Side::Below };
    for k in 0..=samples {
        let t = k as f64 * step;
        m.visit(t, origin + dir * t);
    }
    let in_ground = m.finish(leaves_top);
    let Marcher { crossings, solid, .. } = m;
    let terrain_exit = if solid || in_ground { None } else { Some(crossings.last().map_or(0.0, |c| c.distance)) };
    Ok(RayTrace { origin, direction: dir, crossings, terrain_exit, traced: end })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Side {
    /// Under the terrain layer of the column.
    Below,
    /// Above everything occupied in the column.
    Above,
}

struct GroundCrossing {
    first: f64,
    last: f64,
    from: Side,
}

struct Marcher<'a> {
    grid: &'a OccupancyGrid,
    crossings: Vec<Crossing>,
    solid: bool,
    /// First and last sample of the open run of interior occupied voxels.
    run: Option<(f64, f64)>,
    ground: Option<GroundCrossing>,
    /// Side of the most recent sample outside any ground crossing.
    before: Side,
}

impl Marcher<'_> {
    fn push(&mut self, distance: f64, transition: Transition) {
        self.crossings.push(Crossing { distance, transition });
        self.solid = transition == Transition::FreeToSolid;
    }

    fn toggle(&mut self, distance: f64) {
        let t = if self.solid { Transition::SolidToFree } else { Transition::FreeToSolid };
        self.push(distance, t);
    }

    fn close_run(&mut self) {
        if let Some((a, b)) = self.run.take() {
            self.toggle(0.5 * (a + b));
        }
    }

    fn close_ground(&mut self, to: Side) {
        let Some(g) = self.ground.take() else { return };
        let at = 0.5 * (g.first + g.last);
        match (g.from, to) {
            (Side::Below, Side::Above) => {
                // A bare roof with free space under it is a zero-length
                // crossing.
                if !self.solid {
                    self.push(at, Transition::FreeToSolid);
                }
                self.push(at, Transition::SolidToFree);
            }
            (Side::Above, Side::Below) if !self.solid => self.push(at, Transition::FreeToSolid),
            _ => {}
        }
        self.before = to;
    }

    fn touches_ground(&self, p: LocalPoint) -> bool {
        let v = self.grid.voxel_size();
        [(v, 0.0, 0.0), (-v, 0.0, 0.0), (0.0, v, 0.0), (0.0, -v, 0.0), (0.0, 0.0, v), (0.0, 0.0, -v)]
            .iter()
            .any(|&(e, n, u)| self.grid.in_terrain_layer(p + LocalPoint::new(e, n, u)))
    }

    fn side(&self, p: LocalPoint) -> Side {
        if self.grid.in_open_air(p) {
            Side::Above
        } else {
            Side::Below
        }
    }

    fn visit(&mut self, t: f64, p: LocalPoint) {
        let occupied = self.grid.is_occupied(p);
        let terrain = occupied && self.grid.in_terrain_layer(p);
        if let Some(g) = &mut self.ground {
            if terrain {
                g.last = t;
                return;
            }
            if !occupied && self.touches_ground(p) {
                return;
            }
            let to = if occupied { Side::Below } else { self.side(p) };
            self.close_ground(to);
        }
        if terrain {
            self.close_run();
            let from = if t == 0.0 { Side::Below } else { self.before };
            self.ground = Some(GroundCrossing { first: t, last: t, from });
        } else if occupied {
            self.run = Some(self.run.map_or((t, t), |(a, _)| (a, t)));
            self.before = Side::Below;
        } else {
            self.close_run();
            self.before = self.side(p);
        }
    }

    /// Above the grid everything is free air. Returns whether the trace
    /// ended inside the terrain layer.
    fn finish(&mut self, leaves_top: bool) -> bool {
        self.close_run();
        match &self.ground {
            Some(_) if leaves_top => {
                self.close_ground(Side::Above);
                false
            }
            Some(_) => true,
            None => false,
        }
    }
}

/// Whether a feature is measured along the full 3D ray or in the horizontal
/// plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayMode {
    /// Azimuth only; the ray is horizontal.
    Planar,
    /// Azimuth and elevation.
    Spatial,
}

fn default_range(rx: LocalPoint, tx: LocalPoint, params: &RayParams) -> f64 {
    params.max_range.unwrap_or(2.0 * rx.distance(tx))
}

/// Distance from `rx` to the first boundary toward `tx`.
///
/// In planar mode the ray is horizontal and the result is bounded by the
/// horizontal separation; otherwise by the 3D separation. A boundary beyond
/// the transmitter does not count.
pub fn indoor_distance(
    rx: LocalPoint,
    tx: LocalPoint,
    grid: &OccupancyGrid,
    mode: RayMode,
    params: &RayParams,
) -> Result<f64, FeatureError> {
    let delta = tx - rx;
    let (dir, target) = match mode {
        RayMode::Spatial => (delta, delta.norm()),
        RayMode::Planar => (LocalPoint::new(delta.east, delta.north, 0.0), delta.horizontal_norm()),
    };
    if !(target > 0.0) {
        return Err(FeatureError::DegenerateGeometry("receiver and transmitter coincide in this projection".into()));
    }
    let trace = ray_march(grid, rx, dir, params.step_for(grid), default_range(rx, tx, params))?;
    match trace.first_boundary() {
        Some(d) if d <= target => Ok(d),
        _ => Err(FeatureError::NoBoundary),
    }
}

/// Length of the receiver-to-transmitter ray that runs through solid
/// material before it leaves the terrain.
///
/// The ray is always traced in 3D. Planar mode reports the horizontal extent
/// of the same solid path, i.e. the 3D length scaled by the cosine of the
/// elevation angle.
pub fn penetration_distance(
    rx: LocalPoint,
    tx: LocalPoint,
    grid: &OccupancyGrid,
    mode: RayMode,
    params: &RayParams,
) -> Result<f64, FeatureError> {
    let delta = tx - rx;
    let d3d = delta.norm();
    if !(d3d > 0.0) {
        return Err(FeatureError::DegenerateGeometry("receiver and transmitter coincide".into()));
    }
    let trace = ray_march(grid, rx, delta, params.step_for(grid), default_range(rx, tx, params))?;
    let exit = trace.terrain_exit.ok_or(FeatureError::NoTerrainExit)?;
    let solid = trace.solid_length(exit);
    Ok(match mode {
        RayMode::Spatial => solid,
        RayMode::Planar => solid * delta.horizontal_norm() / d3d,
    })
}

/// Vertical distance from `rx` up to where a straight-up ray leaves the
/// terrain; zero at or above the surface.
pub fn indoor_depth(rx: LocalPoint, grid: &OccupancyGrid, params: &RayParams) -> Result<f64, FeatureError> {
    let range = match (params.max_range, grid.bounds()) {
        (Some(r), _) => r,
        (None, Some(b)) => (b.max.up - rx.up).max(0.0) + grid.voxel_size(),
        (None, None) => grid.voxel_size(),
    };
    let trace = ray_march(grid, rx, LocalPoint::new(0.0, 0.0, 1.0), params.step_for(grid), range)?;
    trace.terrain_exit.ok_or(FeatureError::NoTerrainExit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{build_occupancy, PointCloud, VoxelKey};

    const VS: f64 = 0.25;

    /// Horizontal plane of surface samples at height `z` over [x0,x1]x[y0,y1].
    fn plane(z: f64, x: (f64, f64), y: (f64, f64), out: &mut Vec<LocalPoint>) {
        let s = 0.1;
        let nx = ((x.1 - x.0) / s).round() as usize;
        let ny = ((y.1 - y.0) / s).round() as usize;
        for i in 0..nx {
            for j in 0..ny {
                out.push(LocalPoint::new(x.0 + (i as f64 + 0.5) * s, y.0 + (j as f64 + 0.5) * s, z));
            }
        }
    }

    fn wall_x(x: f64, y: (f64, f64), z: (f64, f64), out: &mut Vec<LocalPoint>) {
        let s = 0.1;
        for i in 0..((y.1 - y.0) / s).round() as usize {
            for j in 0..((z.1 - z.0) / s).round() as usize {
                out.push(LocalPoint::new(x, y.0 + (i as f64 + 0.5) * s, z.0 + (j as f64 + 0.5) * s));
            }
        }
    }

    fn grid(points: Vec<LocalPoint>) -> OccupancyGrid {
        build_occupancy(&PointCloud::new(points, 0.1).unwrap(), VS).unwrap()
    }

    /// Floor at 0, ceiling at 2.1, terrain at 5.1 over a 20x20 m patch.
    fn buried_room() -> OccupancyGrid {
        let mut pts = Vec::new();
        plane(0.0, (-3.0, 3.0), (-3.0, 3.0), &mut pts);
        plane(2.1, (-3.0, 3.0), (-3.0, 3.0), &mut pts);
        plane(5.1, (-10.0, 10.0), (-10.0, 10.0), &mut pts);
        grid(pts)
    }

    #[test]
    fn empty_grid_has_no_crossings() {
        let g = OccupancyGrid::empty(VS).unwrap();
        let t = ray_march(&g, LocalPoint::new(1.0, 2.0, 3.0), LocalPoint::new(0.0, 1.0, 1.0), 0.1, 50.0).unwrap();
        assert!(t.crossings.is_empty());
        assert_eq!(t.terrain_exit, Some(0.0));
    }

    #[test]
    fn vertical_ray_out_of_buried_room() {
        let g = buried_room();
        let t = ray_march(&g, LocalPoint::new(0.0, 0.0, 1.0), LocalPoint::new(0.0, 0.0, 1.0), VS / 2.0, 20.0).unwrap();
        assert_eq!(t.crossings.len(), 2);
        assert_eq!(t.crossings[0].transition, Transition::FreeToSolid);
        assert!((t.crossings[0].distance - 1.1).abs() <= 2.0 * VS);
        let exit = t.terrain_exit.unwrap();
        assert!((exit - (1.1 + 3.0)).abs() <= 2.0 * VS, "{exit}");
        assert!((t.solid_length(exit) - 3.0).abs() <= 2.0 * VS);
    }

    #[test]
    fn ray_inside_slab_never_exits() {
        let voxels: Vec<VoxelKey> = (-40..40).flat_map(|i| (-40..40).map(move |j| [i, j, 0])).collect();
        let g = OccupancyGrid::from_voxels(VS, LocalPoint::ORIGIN, voxels).unwrap();
        let t = ray_march(&g, LocalPoint::new(0.0, 0.0, 0.1), LocalPoint::new(1.0, 0.3, 0.0), VS / 2.0, 100.0).unwrap();
        assert!(t.crossings.iter().all(|c| c.transition == Transition::FreeToSolid));
        assert_eq!(t.terrain_exit, None);
    }

    #[test]
    fn origin_outside_footprint_is_an_error() {
        let g = buried_room();
        let r = ray_march(&g, LocalPoint::new(100.0, 0.0, 1.0), LocalPoint::new(0.0, 0.0, 1.0), 0.1, 10.0);
        assert!(matches!(r, Err(FeatureError::OutOfBounds(_))));
        assert!(matches!(
            ray_march(&g, LocalPoint::ORIGIN, LocalPoint::new(0.0, 0.0, 1.0), 0.5, 10.0),
            Err(FeatureError::InvalidParameter(_))
        ));
    }

    /// Tunnel along x: walls at y = -1 and y = 1, end wall at x = 10, floor 0,
    /// ceiling 2.5, terrain at 6.
    fn tunnel() -> OccupancyGrid {
        let mut pts = Vec::new();
        plane(0.0, (-20.0, 10.0), (-1.0, 1.0), &mut pts);
        plane(2.5, (-20.0, 10.0), (-1.0, 1.0), &mut pts);
        plane(6.0, (-40.0, 60.0), (-40.0, 40.0), &mut pts);
        wall_x(10.0, (-1.0, 1.0), (0.0, 2.5), &mut pts);
        for y in [-1.0, 1.0] {
            for i in 0..300 {
                for j in 0..25 {
                    pts.push(LocalPoint::new(-20.0 + (i as f64 + 0.5) * 0.1, y, (j as f64 + 0.5) * 0.1));
                }
            }
        }
        grid(pts)
    }

    #[test]
    fn indoor_distance_to_end_wall() {
        let g = tunnel();
        let rx = LocalPoint::new(6.0, 0.0, 1.2);
        let tx = LocalPoint::new(200.0, 0.0, 1.2);
        let d = indoor_distance(rx, tx, &g, RayMode::Spatial, &RayParams::default()).unwrap();
        assert!((d - 4.0).abs() <= 2.0 * VS, "{d}");
        let d2 = indoor_distance(rx, tx, &g, RayMode::Planar, &RayParams::default()).unwrap();
        assert!((d - d2).abs() <= 2.0 * VS);
    }

    #[test]
    fn touching_the_wall_is_near_zero() {
        let g = tunnel();
        let rx = LocalPoint::new(9.99, 0.0, 1.2);
        let d = indoor_distance(rx, LocalPoint::new(200.0, 0.0, 40.0), &g, RayMode::Spatial, &RayParams::default()).unwrap();
        assert!(d <= VS, "{d}");
    }

    #[test]
    fn planar_indoor_distance_dominates_projected_spatial() {
        let g = tunnel();
        let rx = LocalPoint::new(0.0, 0.0, 1.2);
        let tx = LocalPoint::new(30.0, 80.0, 36.0);
        let expect_2d = 1.0 / (80.0 / 30f64.hypot(80.0));
        let d2 = indoor_distance(rx, tx, &g, RayMode::Planar, &RayParams::default()).unwrap();
        let d3 = indoor_distance(rx, tx, &g, RayMode::Spatial, &RayParams::default()).unwrap();
        let delta = tx - rx;
        let cos_theta = delta.horizontal_norm() / delta.norm();
        assert!(d2 + 2.0 * VS >= d3 * cos_theta, "{d2} vs {d3}");
        assert!((d2 - expect_2d).abs() <= 2.0 * VS, "{d2} vs {expect_2d}");
    }

    #[test]
    fn no_boundary_toward_open_sky() {
        let g = tunnel();
        let rx = LocalPoint::new(0.0, 0.0, 8.0);
        let r = indoor_distance(rx, LocalPoint::new(100.0, 0.0, 40.0), &g, RayMode::Spatial, &RayParams::default());
        assert!(matches!(r, Err(FeatureError::NoBoundary)));
    }

    #[test]
    fn penetration_through_ceiling_slab() {
        // 1 m of cover: ceiling at 2.1, ground at 3.1.
        let mut pts = Vec::new();
        plane(0.0, (-3.0, 3.0), (-3.0, 3.0), &mut pts);
        plane(2.1, (-3.0, 3.0), (-3.0, 3.0), &mut pts);
        plane(3.1, (-10.0, 10.0), (-10.0, 10.0), &mut pts);
        let g = grid(pts);
        let rx = LocalPoint::new(0.0, 0.0, 1.0);
        let d = penetration_distance(rx, LocalPoint::new(0.0, 0.0, 40.0), &g, RayMode::Spatial, &RayParams::default()).unwrap();
        assert!((d - 1.0).abs() <= 2.0 * VS, "{d}");
    }

    #[test]
    fn thin_cover_keeps_both_surfaces() {
        // Ceiling voxel [2.0, 2.25), ground voxel [2.5, 2.75): the free voxel
        // between them touches both but lies under the ground.
        let mut pts = Vec::new();
        plane(0.0, (-3.0, 3.0), (-3.0, 3.0), &mut pts);
        plane(2.1, (-3.0, 3.0), (-3.0, 3.0), &mut pts);
        plane(2.6, (-10.0, 10.0), (-10.0, 10.0), &mut pts);
        let g = grid(pts);
        let rx = LocalPoint::new(0.0, 0.0, 1.0);
        let d = penetration_distance(rx, LocalPoint::new(0.0, 0.0, 40.0), &g, RayMode::Spatial, &RayParams::default()).unwrap();
        assert!((d - 0.5).abs() <= 2.0 * VS, "{d}");
    }

    #[test]
    fn tilted_ground_is_one_crossing() {
        // Ceiling at -1.55 under ground z = 0.05 x, which voxelizes into a
        // staircase. Shallow rays must still cross it exactly once.
        let s = 0.1;
        let mut pts = Vec::new();
        for i in 0..500 {
            for j in 0..60 {
                let x = -10.0 + i as f64 * s;
                let y = -3.0 + j as f64 * s;
                pts.push(LocalPoint::new(x, y, 0.05 * x));
                pts.push(LocalPoint::new(x, y, -1.55));
            }
        }
        let g = grid(pts);
        for rise in [0.12, 0.17, 0.25, 0.4] {
            let dir = LocalPoint::new(1.0, 0.03, rise);
            let d = dir.normalized().unwrap();
            for k in 0..200 {
                let x0 = -8.0 + k as f64 * 0.0237;
                let rx = LocalPoint::new(x0, 0.3, -2.0);
                let t = ray_march(&g, rx, dir, VS / 2.0, 60.0).unwrap();
                assert_eq!(t.crossings.len(), 2, "rise {rise}, origin {x0}: {:?}", t.crossings);
                let ground = (0.05 * x0 + 2.0) / (d.up - 0.05 * d.east);
                let exit = t.terrain_exit.unwrap();
                assert!((exit - ground).abs() <= 2.0 * VS / (d.up - 0.05 * d.east), "rise {rise}: {exit} vs {ground}");
            }
        }
    }

    #[test]
    fn penetration_of_inclined_ray() {
        let g = buried_room();
        let rx = LocalPoint::new(0.0, 0.0, 1.0);
        let theta = 50f64.to_radians();
        let tx = LocalPoint::new(100.0 * theta.cos(), 0.0, 1.0 + 100.0 * theta.sin());
        let d = penetration_distance(rx, tx, &g, RayMode::Spatial, &RayParams::default()).unwrap();
        assert!((d - 3.0 / theta.sin()).abs() <= 2.0 * VS, "{d}");
        let d2 = penetration_distance(rx, tx, &g, RayMode::Planar, &RayParams::default()).unwrap();
        assert!((d2 - d * theta.cos()).abs() < 1e-12);
    }

    #[test]
    fn outdoor_receiver_has_no_penetration_or_depth() {
        let g = buried_room();
        let rx = LocalPoint::new(5.0, 5.0, 6.6);
        let tx = LocalPoint::new(200.0, 5.0, 36.0);
        assert_eq!(penetration_distance(rx, tx, &g, RayMode::Spatial, &RayParams::default()).unwrap(), 0.0);
        assert_eq!(indoor_depth(rx, &g, &RayParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn depth_below_flat_terrain() {
        let g = buried_room();
        let a = indoor_depth(LocalPoint::new(0.0, 0.0, 1.0), &g, &RayParams::default()).unwrap();
        let b = indoor_depth(LocalPoint::new(2.0, -1.5, 1.0), &g, &RayParams::default()).unwrap();
        assert!((a - 4.1).abs() <= 2.0 * VS, "{a}");
        assert!((a - b).abs() <= 2.0 * VS);

        let mut pts = Vec::new();
        plane(6.0, (-5.0, 5.0), (-5.0, 5.0), &mut pts);
        let open = grid(pts);
        // A lone ground surface overhead is still the terrain.
        let d = indoor_depth(LocalPoint::new(0.0, 0.0, 0.0), &open, &RayParams::default()).unwrap();
        assert!((d - 6.0).abs() <= 2.0 * VS, "{d}");
    }

    #[test]
    fn halving_the_step_is_stable() {
        let g = buried_room();
        let rx = LocalPoint::new(0.3, -0.2, 0.9);
        for deg in [35.0f64, 55.0, 75.0, 90.0] {
            let th = deg.to_radians();
            let tx = rx + LocalPoint::new(80.0 * th.cos(), 20.0 * th.cos(), 80.0 * th.sin());
            let coarse = RayParams { step: Some(VS / 2.0), max_range: None };
            let fine = RayParams { step: Some(VS / 4.0), max_range: None };
            let a = penetration_distance(rx, tx, &g, RayMode::Spatial, &coarse).unwrap();
            let b = penetration_distance(rx, tx, &g, RayMode::Spatial, &fine).unwrap();
            assert!((a - b).abs() <= 2.0 * VS);
        }
    }
}
