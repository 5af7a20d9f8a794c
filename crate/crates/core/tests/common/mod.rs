//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use cerebellar_servo::arm::{ArmModel, Mat2, Vec2};

/// Brute-force Izhikevich integration with forward Euler on both variables.
/// Returns the spike count over `duration_ms` from rest under a constant
/// current.
pub fn reference_spike_count(
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    current: f64,
    duration_ms: f64,
    h: f64,
) -> usize {
    let disc = (5.0 - b).powi(2) - 4.0 * 0.04 * 140.0;
    let mut v = (-(5.0 - b) - disc.sqrt()) / 0.08;
    let mut u = b * v;
    let mut spikes = 0;
    let steps = (duration_ms / h).round() as usize;
    for _ in 0..steps {
        let dv = 0.04 * v * v + 5.0 * v + 140.0 - u + current;
        let du = a * (b * v - u);
        v += h * dv;
        u += h * du;
        if v >= 30.0 {
            v = c;
            u += d;
            spikes += 1;
        }
    }
    spikes
}

/// Planar two-link forward kinematics written out independently.
pub fn fk(l1: f64, l2: f64, th: Vec2) -> Vec2 {
    [
        l1 * th[0].cos() + l2 * (th[0] + th[1]).cos(),
        l1 * th[0].sin() + l2 * (th[0] + th[1]).sin(),
    ]
}

/// Central finite-difference Jacobian of [`fk`].
pub fn fd_jacobian(l1: f64, l2: f64, th: Vec2, h: f64) -> Mat2 {
    let mut j = [[0.0; 2]; 2];
    for k in 0..2 {
        let mut p = th;
        let mut m = th;
        p[k] += h;
        m[k] -= h;
        let (xp, xm) = (fk(l1, l2, p), fk(l1, l2, m));
        for r in 0..2 {
            j[r][k] = (xp[r] - xm[r]) / (2.0 * h);
        }
    }
    j
}

pub fn model() -> ArmModel {
    ArmModel::default()
}

/// Distance from `p` to segment `a`-`b`, by projection.
pub fn seg_dist(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
}

/// Least-squares slope of `ys` against their index.
pub fn ols_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    sxy / sxx
}
