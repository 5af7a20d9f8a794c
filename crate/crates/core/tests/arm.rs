mod common;

use cerebellar_servo::arm::{self, ArmModel, DelayLine, SensorConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: [f64; 2], b: [f64; 2], tol: f64) -> bool {
    (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol
}

#[test]
fn forward_kinematics_examples() {
    let m = ArmModel::default();
    assert!(close(m.forward_kinematics([0.0, 0.0]), [0.45, 0.0], 1e-15));
    assert!(close(
        m.forward_kinematics([0.0, 90f64.to_radians()]),
        [0.24, 0.21],
        1e-15
    ));
    assert!(close(
        m.forward_kinematics([90f64.to_radians(), -90f64.to_radians()]),
        [0.21, 0.24],
        1e-15
    ));
}

#[test]
fn jacobian_at_full_extension() {
    let j = ArmModel::default().jacobian([0.0, 0.0]);
    assert!(close(j[0], [0.0, 0.0], 1e-15));
    assert!(close(j[1], [0.45, 0.21], 1e-15));
    assert_eq!(arm::det(&j), 0.0);
    assert!(arm::det(&ArmModel::default().jacobian([0.3, std::f64::consts::PI])).abs() < 1e-12);
}

#[test]
fn jacobian_matches_finite_differences() {
    let m = ArmModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let th = m.random_configuration(&mut rng);
        let j = m.jacobian(th);
        let fd = common::fd_jacobian(m.l1, m.l2, th, 1e-6);
        for r in 0..2 {
            for c in 0..2 {
                let scale = j[r][c].abs().max(1e-3);
                assert!(
                    (j[r][c] - fd[r][c]).abs() / scale < 1e-6,
                    "{th:?} {j:?} {fd:?}"
                );
            }
        }
    }
}

#[test]
fn inverse_kinematics_recovers_configurations() {
    let m = ArmModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..500 {
        let th = m.random_configuration(&mut rng);
        let x = m.forward_kinematics(th);
        let back = m
            .inverse_kinematics(x)
            .expect("in-limit point is reachable");
        assert!(close(m.forward_kinematics(back), x, 1e-12));
        assert!(m.within_limits(back));
    }
    assert!(!m.is_reachable([1.0, 0.0]));
}

#[test]
fn zero_command_only_advances_time() {
    let m = ArmModel::default();
    let s = m.state_at(m.home(), 0.0);
    let n = m.step(&s, [0.0, 0.0], 0.08);
    assert_eq!((n.theta, n.x, n.x_dot), (s.theta, s.x, s.x_dot));
    assert_eq!(n.t_ms, 80.0);
}

#[test]
fn constant_command_integrates_exactly() {
    let m = ArmModel::default();
    let mut s = m.state_at(m.home(), 0.0);
    let cmd = [0.1, -0.05];
    let mut expected = s.theta;
    for _ in 0..10 {
        s = m.step(&s, cmd, 0.08);
        expected = [expected[0] + 0.08 * cmd[0], expected[1] + 0.08 * cmd[1]];
    }
    assert_eq!(s.theta, expected);
}

#[test]
fn joint_limit_pins_the_joint() {
    let m = ArmModel::default();
    let hi = m.limits()[0].1;
    let mut s = m.state_at([hi - 0.01, m.home()[1]], 0.0);
    s = m.step(&s, [0.5, 0.0], 0.08);
    assert_eq!(s.theta[0], hi);
    assert_eq!(s.theta_dot[0], 0.0);
}

#[test]
fn states_stay_kinematically_consistent_and_in_limits() {
    let m = ArmModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut s = m.state_at(m.home(), 0.0);
    for _ in 0..2000 {
        let cmd = [
            rand::Rng::random_range(&mut rng, -1.0..1.0),
            rand::Rng::random_range(&mut rng, -1.0..1.0),
        ];
        s = m.step(&s, cmd, 0.08);
        assert!(m.within_limits(s.theta));
        let jx = arm::mat_vec(&m.jacobian(s.theta), s.theta_dot);
        assert!(arm::norm(arm::sub(jx, s.x_dot)) <= 1e-9);
    }
}

#[test]
fn delay_line_returns_the_past() {
    let m = ArmModel::default();
    for delay in 0..3 {
        let mut line =
            DelayLine::new(SensorConfig::noiseless(delay), ChaCha8Rng::seed_from_u64(1)).unwrap();
        let mut s = m.state_at(m.home(), 0.0);
        line.prime(s);
        let mut history = vec![s; delay + 1];
        for _ in 0..20 {
            s = m.step(&s, [0.2, -0.1], 0.08);
            line.push(s);
            history.push(s);
            let r = line.read().unwrap();
            let past = history[history.len() - 1 - delay];
            assert_eq!(
                (r.x, r.x_dot, r.theta, r.t_ms),
                (past.x, past.x_dot, past.theta, past.t_ms)
            );
        }
    }
}

#[test]
fn position_noise_has_the_configured_spread() {
    let m = ArmModel::default();
    let cfg = SensorConfig {
        delay_cycles: 0,
        noise_pos: 0.001,
        noise_vel: 0.0,
    };
    let mut line = DelayLine::new(cfg, ChaCha8Rng::seed_from_u64(5)).unwrap();
    let s = m.state_at(m.home(), 0.0);
    line.prime(s);
    let samples: Vec<f64> = (0..10_000)
        .map(|_| line.read().unwrap().x[0] - s.x[0])
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
    assert!(
        (var.sqrt() - 0.001).abs() <= 0.05 * 0.001,
        "std {}",
        var.sqrt()
    );
}
