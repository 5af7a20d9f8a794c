//! Task metrics. Everything here is a pure function of recorded positions,
//! so results can be recomputed offline from the cycle CSVs.

use serde::{Deserialize, Serialize};

use crate::arm::{self, Vec2};
use crate::controller::ControlCycleRecord;

/// Distance from `p` to the closed segment `a`–`b`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = arm::sub(b, a);
    let len2 = arm::dot(ab, ab);
    if len2 == 0.0 {
        return arm::norm(arm::sub(p, a));
    }
    let ap = arm::sub(p, a);
    let t = arm::dot(ap, ab) / len2;
    if t <= 0.0 {
        arm::norm(ap)
    } else if t >= 1.0 {
        arm::norm(arm::sub(p, b))
    } else {
        (ab[0] * ap[1] - ab[1] * ap[0]).abs() / len2.sqrt()
    }
}

/// Largest distance of any path point from the straight `start`–`target`
/// segment.
pub fn max_deviation(path: &[Vec2], start: Vec2, target: Vec2) -> f64 {
    path.iter()
        .map(|&p| point_segment_distance(p, start, target))
        .fold(0.0, f64::max)
}

/// Distance from `p` to a polyline, closed back to its first vertex when
/// `closed` is set.
pub fn polyline_distance(p: Vec2, vertices: &[Vec2], closed: bool) -> f64 {
    match vertices {
        [] => f64::INFINITY,
        [only] => arm::norm(arm::sub(p, *only)),
        _ => {
            let open = vertices.windows(2).map(|w| (w[0], w[1]));
            let wrap = closed.then(|| (vertices[vertices.len() - 1], vertices[0]));
            open.chain(wrap)
                .map(|(a, b)| point_segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// First-order low-pass `y <- y + beta (e - y)` starting from zero.
pub fn low_pass(series: &[f64], beta: f64) -> Vec<f64> {
    let mut y = 0.0;
    series
        .iter()
        .map(|&e| {
            y += beta * (e - y);
            y
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachMetrics {
    /// Largest sensed distance from the straight path (m).
    pub max_deviation: f64,
    /// Time until the target was reached, or the whole attempt (s).
    pub reach_time: f64,
    pub reached: bool,
}

/// Metrics of one reach from its records. The straight path runs from
/// `start` to the target stored in the records.
pub fn reach_metrics(
    records: &[ControlCycleRecord],
    start: Vec2,
    cycle_ms: f64,
) -> crate::Result<ReachMetrics> {
    let first = records.first().ok_or(crate::Error::EmptyRecords)?;
    let path: Vec<Vec2> = records.iter().map(|r| r.x_s).collect();
    let done = records.iter().position(|r| r.reached);
    let cycles = done.unwrap_or(records.len());
    Ok(ReachMetrics {
        max_deviation: max_deviation(&path, start, first.x_d),
        reach_time: cycles as f64 * cycle_ms / 1000.0,
        reached: done.is_some(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourMetrics {
    /// Per-cycle distance of the sensed position from the contour (m).
    pub errors: Vec<f64>,
    pub filtered: Vec<f64>,
    pub max_error: f64,
    pub max_filtered: f64,
    pub mean_error: f64,
    pub completion_time: f64,
    pub skipped: usize,
}

pub fn contour_metrics(
    records: &[ControlCycleRecord],
    contour: &[Vec2],
    beta: f64,
    cycle_ms: f64,
    skipped: usize,
) -> crate::Result<ContourMetrics> {
    if records.is_empty() {
        return Err(crate::Error::EmptyRecords);
    }
    let errors: Vec<f64> = records
        .iter()
        .map(|r| polyline_distance(r.x_s, contour, true))
        .collect();
    let filtered = low_pass(&errors, beta);
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(ContourMetrics {
        max_error: max(&errors),
        max_filtered: max(&filtered),
        mean_error: errors.iter().sum::<f64>() / errors.len() as f64,
        completion_time: records.len() as f64 * cycle_ms / 1000.0,
        errors,
        filtered,
        skipped,
    })
}

/// A quantity measured with the cerebellum off and on over the same trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `(off, on)` per trial.
    pub pairs: Vec<(f64, f64)>,
    pub mean_off: f64,
    pub mean_on: f64,
    /// Mean of the per-trial relative reductions `(off - on) / off`.
    pub mean_reduction: f64,
    pub std_reduction: f64,
    /// `mean_off / mean_on`.
    pub ratio: f64,
    /// Reduction of the means, `1 - mean_on / mean_off`.
    pub reduction_of_means: f64,
}

impl Comparison {
    pub fn new(pairs: Vec<(f64, f64)>) -> crate::Result<Self> {
        if pairs.is_empty() {
            return Err(crate::Error::EmptyRecords);
        }
        let n = pairs.len() as f64;
        let reductions: Vec<f64> = pairs
            .iter()
            .map(|&(off, on)| if off > 0.0 { (off - on) / off } else { 0.0 })
            .collect();
        let mean_reduction = reductions.iter().sum::<f64>() / n;
        let var = reductions
            .iter()
            .map(|r| (r - mean_reduction).powi(2))
            .sum::<f64>()
            / n;
        let mean_off = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_on = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        Ok(Self {
            pairs,
            mean_off,
            mean_on,
            mean_reduction,
            std_reduction: var.sqrt(),
            ratio: if mean_on > 0.0 {
                mean_off / mean_on
            } else {
                f64::INFINITY
            },
            reduction_of_means: if mean_off > 0.0 {
                1.0 - mean_on / mean_off
            } else {
                0.0
            },
        })
    }
}

/// Least-squares slope of `ys` against their index.
pub fn trend_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_distance_cases() {
        assert_eq!(
            point_segment_distance([0.5, 0.1], [0.0, 0.0], [1.0, 0.0]),
            0.1
        );
        assert_eq!(
            point_segment_distance([2.0, 0.0], [0.0, 0.0], [1.0, 0.0]),
            1.0
        );
        assert_eq!(
            point_segment_distance([3.0, 4.0], [0.0, 0.0], [0.0, 0.0]),
            5.0
        );
    }

    #[test]
    fn deviation_of_bent_path() {
        let path = [[0.0, 0.0], [0.5, 0.1], [1.0, 0.0]];
        assert!((max_deviation(&path, [0.0, 0.0], [1.0, 0.0]) - 0.1).abs() < 1e-15);
        let straight = [[0.0, 0.0], [0.25, 0.0], [1.0, 0.0]];
        assert_eq!(max_deviation(&straight, [0.0, 0.0], [1.0, 0.0]), 0.0);
    }

    #[test]
    fn closed_polyline_includes_the_wrap() {
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!((polyline_distance([-0.2, 0.5], &square, true) - 0.2).abs() < 1e-15);
        assert!((polyline_distance([-0.2, 0.5], &square, false) - 0.2f64.hypot(0.5)).abs() < 1e-15);
    }

    #[test]
    fn filter_approaches_constant_monotonically() {
        let y = low_pass(&[0.004; 200], 0.1);
        assert!(y.windows(2).all(|w| w[1] >= w[0] && w[1] <= 0.004));
        assert!((y[199] - 0.004).abs() < 1e-10);
    }

    #[test]
    fn comparison_statistics() {
        let c = Comparison::new(vec![(2.0, 1.0), (4.0, 1.0)]).unwrap();
        assert!((c.mean_reduction - 0.625).abs() < 1e-15);
        assert!((c.ratio - 3.0).abs() < 1e-15);
        assert!((c.reduction_of_means - 2.0 / 3.0).abs() < 1e-15);
        assert!(Comparison::new(vec![]).is_err());
    }

    #[test]
    fn slope_of_line() {
        assert!((trend_slope(&[3.0, 2.0, 1.0, 0.0]) + 1.0).abs() < 1e-15);
        assert_eq!(trend_slope(&[1.0]), 0.0);
    }
}
