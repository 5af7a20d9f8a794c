//! Planar two-link arm (shoulder + elbow) and its delayed sensor channel.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmModel {
    /// Upper-arm length (m).
    pub l1: f64,
    /// Forearm length (m).
    pub l2: f64,
    /// Shoulder limits (rad).
    pub shoulder_limits: (f64, f64),
    /// Elbow limits (rad).
    pub elbow_limits: (f64, f64),
    /// Symmetric joint-speed limit (rad/s).
    pub max_joint_speed: f64,
}

impl Default for ArmModel {
    fn default() -> Self {
        Self {
            l1: 0.24,
            l2: 0.21,
            shoulder_limits: ((-110.0f64).to_radians(), (-30.0f64).to_radians()),
            elbow_limits: (60.0f64.to_radians(), 150.0f64.to_radians()),
            max_joint_speed: 0.5,
        }
    }
}

impl ArmModel {
    pub fn validate(&self) -> crate::Result<()> {
        let ok_interval = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !(self.l1 > 0.0 && self.l2 > 0.0) {
            return Err(crate::Error::config("link lengths must be positive"));
        }
        if !ok_interval(self.shoulder_limits) || !ok_interval(self.elbow_limits) {
            return Err(crate::Error::config(
                "joint limit intervals must be non-empty",
            ));
        }
        if !(self.max_joint_speed > 0.0) {
            return Err(crate::Error::config("joint speed limit must be positive"));
        }
        Ok(())
    }

    pub fn limits(&self) -> [(f64, f64); 2] {
        [self.shoulder_limits, self.elbow_limits]
    }

    pub fn within_limits(&self, theta: Vec2) -> bool {
        self.limits()
            .iter()
            .zip(theta)
            .all(|(&(lo, hi), t)| t >= lo && t <= hi)
    }

    /// Joint midpoint configuration.
    pub fn home(&self) -> Vec2 {
        let [s, e] = self.limits();
        [(s.0 + s.1) / 2.0, (e.0 + e.1) / 2.0]
    }

    pub fn forward_kinematics(&self, theta: Vec2) -> Vec2 {
        let s = theta[0] + theta[1];
        [
            self.l1 * theta[0].cos() + self.l2 * s.cos(),
            self.l1 * theta[0].sin() + self.l2 * s.sin(),
        ]
    }

    /// `J[i][j] = dx_i / dtheta_j`.
    pub fn jacobian(&self, theta: Vec2) -> Mat2 {
        let s = theta[0] + theta[1];
        let (s1, c1) = theta[0].sin_cos();
        let (s12, c12) = s.sin_cos();
        [
            [-self.l1 * s1 - self.l2 * s12, -self.l2 * s12],
            [self.l1 * c1 + self.l2 * c12, self.l2 * c12],
        ]
    }

    /// Elbow-up inverse kinematics restricted to the joint limits.
    pub fn inverse_kinematics(&self, x: Vec2) -> Option<Vec2> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let c2 = (r2 - self.l1 * self.l1 - self.l2 * self.l2) / (2.0 * self.l1 * self.l2);
        if !(-1.0..=1.0).contains(&c2) {
            return None;
        }
        [1.0, -1.0].into_iter().find_map(|sign: f64| {
            let t2 = sign * c2.acos();
            let t1 = x[1].atan2(x[0]) - (self.l2 * t2.sin()).atan2(self.l1 + self.l2 * t2.cos());
            let t1 = wrap_angle(t1);
            let theta = [t1, t2];
            self.within_limits(theta).then_some(theta)
        })
    }

    pub fn is_reachable(&self, x: Vec2) -> bool {
        self.inverse_kinematics(x).is_some()
    }

    pub fn state_at(&self, theta: Vec2, t_ms: f64) -> ArmState {
        ArmState {
            theta,
            theta_dot: [0.0; 2],
            x: self.forward_kinematics(theta),
            x_dot: [0.0; 2],
            t_ms,
        }
    }

    pub fn random_configuration<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        let [s, e] = self.limits();
        [rng.random_range(s.0..=s.1), rng.random_range(e.0..=e.1)]
    }

    /// Advances the arm by `dt_s` seconds under a joint-velocity command.
    ///
    /// Speeds are clamped to the limit; a joint that would leave its range is
    /// pinned to the bound with zero velocity.
    pub fn step(&self, state: &ArmState, theta_dot_cmd: Vec2, dt_s: f64) -> ArmState {
        let mut theta = state.theta;
        let mut theta_dot = [0.0; 2];
        for (j, &(lo, hi)) in self.limits().iter().enumerate() {
            let cmd = if theta_dot_cmd[j].is_finite() {
                theta_dot_cmd[j]
            } else {
                0.0
            };
            let w = cmd.clamp(-self.max_joint_speed, self.max_joint_speed);
            let next = theta[j] + dt_s * w;
            if next > hi {
                theta[j] = hi;
            } else if next < lo {
                theta[j] = lo;
            } else {
                theta[j] = next;
                theta_dot[j] = w;
            }
        }
        let x = self.forward_kinematics(theta);
        let x_dot = mat_vec(&self.jacobian(theta), theta_dot);
        ArmState {
            theta,
            theta_dot,
            x,
            x_dot,
            t_ms: state.t_ms + dt_s * 1000.0,
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut a = a % two_pi;
    if a > std::f64::consts::PI {
        a -= two_pi;
    } else if a < -std::f64::consts::PI {
        a += two_pi;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub theta: Vec2,
    pub theta_dot: Vec2,
    pub x: Vec2,
    pub x_dot: Vec2,
    pub t_ms: f64,
}

/// What the controller sees: camera position/velocity plus joint encoders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub x: Vec2,
    pub x_dot: Vec2,
    pub theta: Vec2,
    pub theta_dot: Vec2,
    pub t_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    /// Dead time in control cycles.
    pub delay_cycles: usize,
    /// Position noise std (m).
    pub noise_pos: f64,
    /// Velocity noise std (m/s).
    pub noise_vel: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            delay_cycles: 1,
            noise_pos: 0.0005,
            noise_vel: 0.001,
        }
    }
}

impl SensorConfig {
    pub const MAX_DELAY: usize = 10;

    pub fn noiseless(delay_cycles: usize) -> Self {
        Self {
            delay_cycles,
            noise_pos: 0.0,
            noise_vel: 0.0,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.delay_cycles > Self::MAX_DELAY {
            return Err(crate::Error::config(format!(
                "sensor delay {} exceeds {} cycles",
                self.delay_cycles,
                Self::MAX_DELAY
            )));
        }
        if !(self.noise_pos >= 0.0 && self.noise_vel >= 0.0) {
            return Err(crate::Error::config("sensor noise must be >= 0"));
        }
        Ok(())
    }
}

/// FIFO of past arm states read back `delay_cycles` later with additive
/// Gaussian noise on the task-space channels.
#[derive(Debug, Clone)]
pub struct DelayLine {
    config: SensorConfig,
    queue: VecDeque<ArmState>,
    rng: ChaCha8Rng,
}

impl DelayLine {
    pub fn new(config: SensorConfig, rng: ChaCha8Rng) -> crate::Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            queue: VecDeque::with_capacity(config.delay_cycles + 1),
            rng,
        })
    }

    pub fn config(&self) -> &SensorConfig {
        &self.config
    }

    pub fn push(&mut self, state: ArmState) {
        self.queue.push_back(state);
        while self.queue.len() > self.config.delay_cycles + 1 {
            self.queue.pop_front();
        }
    }

    pub fn is_primed(&self) -> bool {
        self.queue.len() == self.config.delay_cycles + 1
    }

    /// Forgets history and fills the line with `state`, as for an arm that
    /// has been resting there.
    pub fn prime(&mut self, state: ArmState) {
        self.queue.clear();
        for _ in 0..=self.config.delay_cycles {
            self.queue.push_back(state);
        }
    }

    /// The true (noise-free) delayed snapshot.
    pub fn delayed_state(&self) -> Option<&ArmState> {
        self.queue.front()
    }

    /// Snapshot from `delay_cycles` ago (or the oldest one held) with sensor
    /// noise added to position and velocity.
    pub fn read(&mut self) -> Option<SensorReading> {
        let s = *self.queue.front()?;
        let mut x = s.x;
        let mut x_dot = s.x_dot;
        if self.config.noise_pos > 0.0 {
            let n = Normal::new(0.0, self.config.noise_pos).expect("validated std");
            x.iter_mut().for_each(|v| *v += n.sample(&mut self.rng));
        }
        if self.config.noise_vel > 0.0 {
            let n = Normal::new(0.0, self.config.noise_vel).expect("validated std");
            x_dot.iter_mut().for_each(|v| *v += n.sample(&mut self.rng));
        }
        Some(SensorReading {
            x,
            x_dot,
            theta: s.theta,
            theta_dot: s.theta_dot,
            t_ms: s.t_ms,
        })
    }
}

pub fn mat_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(a: Vec2, k: f64) -> Vec2 {
    [a[0] * k, a[1] * k]
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
