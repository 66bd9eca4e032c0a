use tunnelprop_core::features::{
    detect_corridor_openings, extract_features, indoor_depth, indoor_distance, penetration_distance, DetectionParams,
    FeatureContext, RayMode, RayParams,
};
use tunnelprop_core::geo::{build_occupancy, GeoPoint, LocalPoint, OccupancyGrid};
use tunnelprop_core::pathloss::TransmitterConfig;
use tunnelprop_core::synth::oracle::analytic_features;
use tunnelprop_core::synth::{
    generate_campaign, generate_cloud, CampaignParams, CrossSection, Side, SideCorridor, Truth, TunnelLayout,
};

const VOXEL: f64 = 0.25;

// Voxel error on a boundary grows like 1/sin(incidence), so each mast sits
// diagonally to the tunnel axes and no ray meets a wall at a grazing angle.
// Walls are kept off the voxel lattice, where a surface would sit wholly on
// one side of a voxel face.
fn layouts() -> Vec<TunnelLayout> {
    let origin = GeoPoint::new(55.7858, 12.5213, 15.0).unwrap();
    let base = TunnelLayout {
        origin,
        main_axis: [[0.0, 0.0], [30.0, 0.0]],
        cross_section: CrossSection { width: 3.0, height: 2.5 },
        burial_depth: 3.0,
        side_corridors: vec![],
        terrain_elevation: 0.0,
        terrain_slope: [0.0, 0.0],
        margin: 40.0,
        transmitter: Some([15.0, 30.0]),
    };
    vec![
        base.clone(),
        TunnelLayout {
            main_axis: [[-3.3, 7.1], [-3.3, 47.1]],
            cross_section: CrossSection { width: 2.6, height: 2.2 },
            burial_depth: 4.7,
            terrain_elevation: 3.4,
            side_corridors: vec![SideCorridor { station: 18.0, width: 2.0, length: 9.0, side: Side::Left }],
            transmitter: Some([-35.0, 25.0]),
            ..base.clone()
        },
        TunnelLayout {
            main_axis: [[40.0, 2.2], [0.0, 2.2]],
            cross_section: CrossSection { width: 4.1, height: 3.1 },
            burial_depth: 2.2,
            side_corridors: vec![
                SideCorridor { station: 10.0, width: 2.0, length: 7.0, side: Side::Right },
                SideCorridor { station: 30.0, width: 2.4, length: 7.0, side: Side::Right },
            ],
            transmitter: Some([55.0, 35.0]),
            ..base.clone()
        },
        TunnelLayout {
            main_axis: [[5.0, 5.0], [5.0, -25.0]],
            cross_section: CrossSection { width: 3.4, height: 2.4 },
            burial_depth: 6.3,
            terrain_elevation: -1.15,
            terrain_slope: [0.03, -0.02],
            side_corridors: vec![SideCorridor { station: 12.0, width: 1.6, length: 6.0, side: Side::Right }],
            transmitter: Some([-20.0, -10.0]),
            ..base.clone()
        },
        TunnelLayout {
            main_axis: [[0.0, 0.0], [25.0, 0.0]],
            cross_section: CrossSection { width: 2.2, height: 2.1 },
            burial_depth: 1.4,
            side_corridors: vec![SideCorridor { station: 12.5, width: 2.0, length: 5.0, side: Side::Left }],
            transmitter: Some([40.0, -25.0]),
            ..base.clone()
        },
        TunnelLayout {
            main_axis: [[0.3, 0.1], [35.3, 0.1]],
            cross_section: CrossSection { width: 3.0, height: 2.6 },
            burial_depth: 2.0,
            terrain_slope: [0.06, 0.02],
            transmitter: Some([75.0, -45.0]),
            ..base
        },
    ]
}

fn tx_of(l: &TunnelLayout) -> TransmitterConfig {
    TransmitterConfig::campaign_defaults(l.transmitter_ground().unwrap().unwrap())
}

fn grid_of(l: &TunnelLayout) -> OccupancyGrid {
    build_occupancy(&generate_cloud(l, 0.1, 7).unwrap(), VOXEL).unwrap()
}

#[test]
fn voxel_features_match_analytic_values() {
    let params = RayParams::default();
    let tol = 2.0 * VOXEL;
    for (k, l) in layouts().iter().enumerate() {
        let grid = grid_of(l);
        let cfg = tx_of(l);
        let tx = cfg.antenna_local(&l.origin).unwrap();
        let campaign = generate_campaign(l, &cfg, Truth::distance_only(), 0.0, 1, &CampaignParams::default()).unwrap();
        let mut worst = [0.0f64; 5];
        for p in &campaign.points {
            let rx = p.position;
            let a = analytic_features(l, rx, tx);
            let got = [
                indoor_distance(rx, tx, &grid, RayMode::Planar, &params).ok(),
                indoor_distance(rx, tx, &grid, RayMode::Spatial, &params).ok(),
                penetration_distance(rx, tx, &grid, RayMode::Planar, &params).ok(),
                penetration_distance(rx, tx, &grid, RayMode::Spatial, &params).ok(),
                indoor_depth(rx, &grid, &params).ok(),
            ];
            let want = [a.d_in_2d, a.d_in_3d, a.d_pen_2d, a.d_pen_3d, a.depth];
            for (i, (g, w)) in got.iter().zip(want).enumerate() {
                let (g, w) = (g.unwrap_or_else(|| panic!("layout {k} feature {i} missing at {rx:?}")), w.unwrap());
                worst[i] = worst[i].max((g - w).abs());
                assert!((g - w).abs() <= tol, "layout {k} feature {i} at {rx:?}: {g} vs {w}");
            }
        }
        eprintln!("layout {k}: {} points, worst errors {worst:?}", campaign.points.len());
    }
}

#[test]
fn detection_finds_constructed_openings() {
    for (k, l) in layouts().iter().enumerate() {
        let grid = grid_of(l);
        let found = detect_corridor_openings(&grid, &l.detection_axis(), VOXEL, &DetectionParams::default()).unwrap();
        let truth = l.ground_truth_openings();
        assert_eq!(found.len(), truth.len(), "layout {k}: {found:?}");
        for t in &truth {
            let c = t.centroid();
            let m = found
                .iter()
                .min_by(|a, b| a.centroid().distance(c).total_cmp(&b.centroid().distance(c)))
                .unwrap();
            let horizontal = |p: LocalPoint| LocalPoint::new(p.east, p.north, 0.0);
            assert!(horizontal(m.centroid()).distance(horizontal(c)) <= 2.0 * VOXEL, "layout {k}: {m:?} vs {t:?}");
        }
    }
}

#[test]
fn single_corridor_gap_width() {
    let l = &layouts()[1];
    let grid = grid_of(l);
    let found = detect_corridor_openings(&grid, &l.detection_axis(), VOXEL / 2.0, &DetectionParams::default()).unwrap();
    assert_eq!(found.len(), 1);
    let s = &found[0].boundary_samples;
    let width = LocalPoint::new(s[0].east, s[0].north, 0.0).distance(LocalPoint::new(s[s.len() - 1].east, s[s.len() - 1].north, 0.0));
    assert!((width - 2.0).abs() <= 2.0 * VOXEL, "width {width}");
}

#[test]
fn two_corridors_twenty_metres_apart() {
    let l = &layouts()[2];
    let grid = grid_of(l);
    let found = detect_corridor_openings(&grid, &l.detection_axis(), VOXEL, &DetectionParams::default()).unwrap();
    assert_eq!(found.len(), 2);
    let gap = found[0].centroid().distance(found[1].centroid());
    assert!((gap - 20.0).abs() <= 2.0 * VOXEL, "gap {gap}");
}

#[test]
fn detection_rejects_axis_outside_grid() {
    let l = &layouts()[0];
    let grid = grid_of(l);
    let mut axis = l.detection_axis();
    axis.end = axis.end + LocalPoint::new(500.0, 0.0, 0.0);
    assert!(detect_corridor_openings(&grid, &axis, VOXEL, &DetectionParams::default()).is_err());
}

#[test]
fn extracted_features_are_deterministic_and_consistent() {
    let l = &layouts()[2];
    let grid = grid_of(l);
    let cfg = tx_of(l);
    let campaign = generate_campaign(l, &cfg, Truth::distance_only(), 2.0, 3, &CampaignParams::default()).unwrap();
    let ctx = FeatureContext::new(&cfg, &l.origin, &grid, &campaign.openings).unwrap();
    let rows = extract_features(&campaign.points, &ctx);
    assert_eq!(rows, extract_features(&campaign.points, &ctx));
    assert_eq!(rows.len(), campaign.points.len());
    for (row, truth) in rows.iter().zip(&campaign.truth_features) {
        let fv = row.features.as_ref().unwrap();
        assert!(fv.d3d >= fv.d2d);
        let du = (campaign.points[row.index].position.up - ctx.tx.up).abs();
        assert!(((fv.d2d.powi(2) + du * du).sqrt() - fv.d3d).abs() <= 1e-6 * fv.d3d);
        assert!(fv.d_in_3d.unwrap() <= fv.d3d);
        assert!((fv.d_cor_avg.unwrap() - truth.d_cor_avg.unwrap()).abs() < 1e-9);
    }
}

#[test]
fn halving_the_step_barely_moves_distances() {
    let l = &layouts()[3];
    let grid = grid_of(l);
    let cfg = tx_of(l);
    let tx = cfg.antenna_local(&l.origin).unwrap();
    let campaign = generate_campaign(l, &cfg, Truth::distance_only(), 0.0, 1, &CampaignParams::default()).unwrap();
    let coarse = RayParams { step: Some(VOXEL / 2.0), max_range: None };
    let fine = RayParams { step: Some(VOXEL / 4.0), max_range: None };
    for p in &campaign.points {
        for mode in [RayMode::Planar, RayMode::Spatial] {
            let a = penetration_distance(p.position, tx, &grid, mode, &coarse).unwrap();
            let b = penetration_distance(p.position, tx, &grid, mode, &fine).unwrap();
            assert!((a - b).abs() <= 2.0 * VOXEL);
            let a = indoor_distance(p.position, tx, &grid, mode, &coarse).unwrap();
            let b = indoor_distance(p.position, tx, &grid, mode, &fine).unwrap();
            assert!((a - b).abs() <= 2.0 * VOXEL);
        }
    }
}

#[test]
fn same_altitude_planar_equals_spatial() {
    let l = &layouts()[0];
    let grid = grid_of(l);
    let rx = l.axis_point(15.0, 0.0, l.floor_elevation() + 1.0);
    let tx = LocalPoint::new(rx.east + 20.0, rx.north + 35.0, rx.up);
    let p = RayParams::default();
    let a = indoor_distance(rx, tx, &grid, RayMode::Planar, &p).unwrap();
    let b = indoor_distance(rx, tx, &grid, RayMode::Spatial, &p).unwrap();
    assert!((a - b).abs() <= 2.0 * VOXEL);
}
