mod common;

use cerebellar_servo::harness::{self, ExperimentConfig};
use cerebellar_servo::metrics;

#[test]
fn straight_path_has_no_deviation() {
    let path: Vec<[f64; 2]> = (0..=10).map(|k| [0.01 * k as f64, 0.2]).collect();
    assert_eq!(metrics::max_deviation(&path, [0.0, 0.2], [0.1, 0.2]), 0.0);
    let path: Vec<[f64; 2]> = (0..=10)
        .map(|k| [0.01 * k as f64, 0.02 * k as f64])
        .collect();
    assert!(metrics::max_deviation(&path, [0.0, 0.0], [0.1, 0.2]) < 1e-15);
}

#[test]
fn bent_path_deviation() {
    let path = [[0.0, 0.0], [0.5, 0.1], [1.0, 0.0]];
    let got = metrics::max_deviation(&path, [0.0, 0.0], [1.0, 0.0]);
    let oracle = path
        .iter()
        .map(|&p| common::seg_dist(p, [0.0, 0.0], [1.0, 0.0]))
        .fold(0.0, f64::max);
    assert!((got - oracle).abs() < 1e-15);
    assert!((got - 0.1).abs() < 1e-15);
}

#[test]
fn segment_distance_matches_projection_oracle() {
    let cases = [
        ([0.3, 0.4], [0.0, 0.0], [1.0, 0.0]),
        ([-0.5, 0.2], [0.0, 0.0], [1.0, 1.0]),
        ([2.0, 2.0], [0.0, 0.0], [1.0, 1.0]),
        ([0.1, 0.1], [0.2, 0.2], [0.2, 0.2]),
    ];
    for (p, a, b) in cases {
        assert!(
            (metrics::point_segment_distance(p, a, b) - common::seg_dist(p, a, b)).abs() < 1e-15
        );
    }
}

#[test]
fn filter_rises_monotonically_to_a_constant() {
    let y = metrics::low_pass(&[0.004; 200], 0.1);
    assert!(y.windows(2).all(|w| w[1] >= w[0]));
    assert!(y.iter().all(|&v| v <= 0.004));
    assert!((y[199] - 0.004).abs() < 1e-10);
}

#[test]
fn metrics_need_records() {
    assert!(metrics::reach_metrics(&[], [0.0, 0.0], 80.0).is_err());
    assert!(metrics::contour_metrics(&[], &[[0.0, 0.0], [1.0, 0.0]], 0.1, 80.0, 0).is_err());
}

#[test]
fn contour_points_follow_the_figure_eight() {
    let r = 0.07;
    let pts = harness::contour_points([0.0, 0.0], r, 80);
    assert_eq!(pts.len(), 80);
    assert!(pts[0][0].abs() < 1e-15 && (pts[0][1] - 0.07).abs() < 1e-15);
    assert!(pts[20][0].abs() < 1e-15 && pts[20][1].abs() < 1e-15);
    assert!((pts[10][0] - 0.035).abs() < 1e-15);
    assert!((pts[10][1] - 0.07 * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    assert!((pts[10][1] - 0.0495).abs() < 5e-5);
}

#[test]
fn radial_targets_lie_on_the_circle() {
    let cfg = ExperimentConfig::default();
    let c = cfg.radial_center();
    for k in 0..8 {
        let angle = 45.0 * k as f64;
        let t = harness::radial_target(c, 0.1, angle);
        let d = [t[0] - c[0], t[1] - c[1]];
        assert!(((d[0] * d[0] + d[1] * d[1]).sqrt() - 0.1).abs() < 1e-12);
        assert!((d[1].atan2(d[0]).to_degrees().rem_euclid(360.0) - angle).abs() < 1e-9);
        assert!(cfg.arm.model.is_reachable(t), "target at {angle} deg");
    }
}

#[test]
fn zero_length_reach_has_zero_deviation() {
    let mut cfg = ExperimentConfig::default();
    cfg.task.babble_iterations = 100;
    cfg.arm.sensors.noise_pos = 0.0;
    cfg.arm.sensors.noise_vel = 0.0;
    let (dm, _) = harness::babble(&cfg).unwrap();
    let mut lp = harness::make_loop(&cfg, dm, None).unwrap();
    let p = cfg.radial_center();
    let reach = harness::reach_from(&mut lp, p, p, 5).unwrap();
    let m = metrics::reach_metrics(&reach.records, p, cfg.control.cycle_ms).unwrap();
    assert_eq!(m.max_deviation, 0.0);
    assert!(m.reached);
}

#[test]
fn metrics_recompute_from_csv() {
    let mut cfg = ExperimentConfig::default();
    cfg.task.babble_iterations = 1000;
    cfg.control.time_limit_s = 3.0;
    let (dm, _) = harness::babble(&cfg).unwrap();
    let mut lp = harness::make_loop(&cfg, dm, None).unwrap();
    let start = cfg.radial_center();
    let goal = harness::radial_target(start, 0.05, 90.0);
    let reach = harness::reach_from(&mut lp, start, goal, 9).unwrap();
    let direct = metrics::reach_metrics(&reach.records, start, 80.0).unwrap();
    let mut buf = Vec::new();
    cerebellar_servo::controller::write_cycle_csv(&reach.records, &mut buf).unwrap();
    let back = harness::read_cycle_csv(buf.as_slice()).unwrap();
    assert_eq!(metrics::reach_metrics(&back, start, 80.0).unwrap(), direct);
}

#[test]
fn paired_comparison_statistics() {
    let c = metrics::Comparison::new(vec![(10.0, 5.0), (4.0, 3.0)]).unwrap();
    assert!((c.mean_reduction - 0.375).abs() < 1e-15);
    assert!((c.mean_off - 7.0).abs() < 1e-15 && (c.mean_on - 4.0).abs() < 1e-15);
    assert!((c.ratio - 1.75).abs() < 1e-15);
    assert!((c.reduction_of_means - 3.0 / 7.0).abs() < 1e-15);
}

#[test]
fn trend_slope_matches_least_squares() {
    let ys = [5.0, 4.2, 4.4, 3.1, 2.9, 3.0, 1.5];
    assert!((metrics::trend_slope(&ys) - common::ols_slope(&ys)).abs() < 1e-12);
}

#[test]
fn config_file_overrides_defaults() {
    let text = "[task]\nseed = 42\nradial_repetitions = 3\n\n[control]\nk_c = 0.5\n";
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    assert_eq!(cfg.task.seed, 42);
    assert_eq!(cfg.task.radial_repetitions, 3);
    assert_eq!(cfg.control.k_c, 0.5);
    assert_eq!(cfg.control.v_ref, 0.03);
    assert!(ExperimentConfig::from_toml("[task]\ncontour_radius = -1.0\n").is_err());
    assert!(ExperimentConfig::from_toml("[task]\nbabble_iterations = 0\n").is_err());
}
