//! Experiment driver: motor babbling, cerebellar training and the reaching
//! and contour-following tasks, plus their file formats.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arm::{self, ArmModel, ArmState, SensorConfig, Vec2};
use crate::cerebellum::{CbConfig, Cerebellum};
use crate::controller::{ControlConfig, ControlCycleRecord, ControlLoop, Predictor, Reach};
use crate::diffmap::{DiffMap, DmConfig, DmSample};
use crate::metrics::{self, Comparison, ContourMetrics, ReachMetrics};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmSection {
    pub model: ArmModel,
    pub sensors: SensorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    pub seed: u64,
    /// Whether task runs use the cerebellum at all.
    pub cb: bool,
    pub babble_iterations: usize,
    /// Control cycles of random reaching with cerebellar learning on.
    pub cb_iterations: usize,
    pub eval_reaches: usize,
    /// Shortest random reach (m).
    pub min_reach_distance: f64,
    /// Start of the radial and repeated reaches; the arm's home position
    /// when unset.
    pub radial_center: Option<Vec2>,
    pub radial_radius: f64,
    pub radial_targets: usize,
    pub radial_repetitions: usize,
    /// Direction of the repeated single-target reach (degrees).
    pub repeat_angle_deg: f64,
    pub repeat_reaches: usize,
    /// Centre of the figure-eight; the arm's home position when unset.
    pub contour_center: Option<Vec2>,
    pub contour_radius: f64,
    pub contour_points: usize,
    pub contour_tolerance: f64,
    pub contour_time_limit_s: f64,
    /// Laps with cerebellar learning on before the measured lap.
    pub contour_training_laps: usize,
    /// First-order filter constant for the contour error.
    pub filter_beta: f64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            cb: true,
            babble_iterations: 3000,
            cb_iterations: 10000,
            eval_reaches: 20,
            min_reach_distance: 0.05,
            radial_center: None,
            radial_radius: 0.10,
            radial_targets: 8,
            radial_repetitions: 8,
            repeat_angle_deg: 45.0,
            repeat_reaches: 40,
            contour_center: None,
            contour_radius: 0.07,
            contour_points: 80,
            contour_tolerance: 0.001,
            contour_time_limit_s: 1.0,
            contour_training_laps: 2,
            filter_beta: 0.1,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let counts = [
            self.babble_iterations,
            self.eval_reaches,
            self.radial_targets,
            self.radial_repetitions,
            self.repeat_reaches,
            self.contour_points,
        ];
        if counts.contains(&0) {
            return Err(crate::Error::config("task counts must be > 0"));
        }
        let positive = [
            self.radial_radius,
            self.contour_radius,
            self.contour_tolerance,
            self.contour_time_limit_s,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || !(self.min_reach_distance >= 0.0) {
            return Err(crate::Error::config(
                "task radii, tolerance and time limit must be > 0",
            ));
        }
        if !(self.filter_beta > 0.0 && self.filter_beta <= 1.0) {
            return Err(crate::Error::config("filter constant must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Everything an experiment needs; mirrors the TOML file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub arm: ArmSection,
    pub dm: DmConfig,
    pub cb: CbConfig,
    pub control: ControlConfig,
    pub task: TaskConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> crate::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> crate::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> crate::Result<()> {
        self.arm.model.validate()?;
        self.arm.sensors.validate()?;
        self.dm.validate()?;
        self.cb.validate()?;
        self.control.validate()?;
        self.task.validate()
    }

    pub fn radial_center(&self) -> Vec2 {
        let m = &self.arm.model;
        self.task
            .radial_center
            .unwrap_or_else(|| m.forward_kinematics(m.home()))
    }

    pub fn contour_center(&self) -> Vec2 {
        let m = &self.arm.model;
        self.task
            .contour_center
            .unwrap_or_else(|| m.forward_kinematics(m.home()))
    }
}

/// Independent random stream `k` of a run seed.
pub fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Seed for a sub-component, derived from the run seed.
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    stream(seed, k).random()
}

const STREAM_BABBLE: u64 = 1;
const STREAM_DM: u64 = 2;
const STREAM_CB: u64 = 3;
const STREAM_TRAIN_TARGETS: u64 = 4;
const STREAM_EVAL_TARGETS: u64 = 5;
const STREAM_SENSORS: u64 = 6;
const STREAM_DM_PROBE: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BabbleRow {
    pub iteration: usize,
    pub theta: Vec2,
    pub x_dot: Vec2,
    pub theta_dot: Vec2,
}

/// Random joint-velocity command whose one-cycle move stays within the
/// joint limits. Falls back to rest after many rejected draws.
fn babble_command<R: Rng>(model: &ArmModel, theta: Vec2, dt_s: f64, rng: &mut R) -> Vec2 {
    let w = model.max_joint_speed;
    for _ in 0..1000 {
        let cmd = [rng.random_range(-w..=w), rng.random_range(-w..=w)];
        if model.within_limits([theta[0] + dt_s * cmd[0], theta[1] + dt_s * cmd[1]]) {
            return cmd;
        }
    }
    [0.0; 2]
}

/// Motor babbling: random commands from the home posture, each outcome fed
/// to a fresh differential map.
pub fn babble(cfg: &ExperimentConfig) -> crate::Result<(DiffMap, Vec<BabbleRow>)> {
    cfg.validate()?;
    let seed = cfg.task.seed;
    let model = &cfg.arm.model;
    let mut dm = DiffMap::build(cfg.dm.clone(), derive_seed(seed, STREAM_DM))?;
    let mut rng = stream(seed, STREAM_BABBLE);
    let dt_s = cfg.dm.window_ms / 1000.0;
    let mut state = model.state_at(model.home(), 0.0);
    let mut rows = Vec::with_capacity(cfg.task.babble_iterations);
    for iteration in 0..cfg.task.babble_iterations {
        let cmd = babble_command(model, state.theta, dt_s, &mut rng);
        state = model.step(&state, cmd, dt_s);
        dm.train_step(&DmSample {
            theta: state.theta.to_vec(),
            x_dot: state.x_dot.to_vec(),
            theta_dot: state.theta_dot.to_vec(),
        })?;
        rows.push(BabbleRow {
            iteration,
            theta: state.theta,
            x_dot: state.x_dot,
            theta_dot: state.theta_dot,
        });
    }
    Ok((dm, rows))
}

/// How well a differential map points the arm where it is asked to go.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmQuality {
    pub samples: usize,
    /// Fraction of samples whose realised velocity `J(theta) theta_dot` has
    /// a positive inner product with the requested one.
    pub fidelity: f64,
    pub mean_cosine: f64,
    /// Mean projection of the realised velocity on the requested one,
    /// relative to the requested speed.
    pub mean_gain: f64,
}

/// Probes `dm` at `n` random in-limit postures with random directions and
/// speeds in `[0.03, 0.06]` m/s, judged by the arm's analytic Jacobian.
pub fn dm_quality(
    dm: &mut DiffMap,
    model: &ArmModel,
    n: usize,
    seed: u64,
) -> crate::Result<DmQuality> {
    if n == 0 {
        return Err(crate::Error::EmptyRecords);
    }
    let mut rng = stream(seed, STREAM_DM_PROBE);
    let (mut hits, mut cos, mut gain) = (0, 0.0, 0.0);
    for _ in 0..n {
        let theta = model.random_configuration(&mut rng);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let speed = rng.random_range(0.03..0.06);
        let want = [speed * phi.cos(), speed * phi.sin()];
        let out = dm.infer(&theta, &want)?;
        let got = arm::mat_vec(&model.jacobian(theta), [out[0], out[1]]);
        let ip = arm::dot(got, want);
        if ip > 0.0 {
            hits += 1;
        }
        cos += ip / (arm::norm(got).max(1e-12) * speed);
        gain += ip / (speed * speed);
    }
    let n_f = n as f64;
    Ok(DmQuality {
        samples: n,
        fidelity: hits as f64 / n_f,
        mean_cosine: cos / n_f,
        mean_gain: gain / n_f,
    })
}

pub fn write_babble_csv<W: Write>(rows: &[BabbleRow], w: W) -> crate::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "iteration",
        "theta1",
        "theta2",
        "xdot",
        "ydot",
        "thetadot1",
        "thetadot2",
    ])?;
    for r in rows {
        let mut row = vec![r.iteration.to_string()];
        row.extend(
            r.theta
                .iter()
                .chain(&r.x_dot)
                .chain(&r.theta_dot)
                .map(|v| format!("{v:?}")),
        );
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(states: &[ArmState], w: W) -> crate::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["t_ms", "theta1", "theta2", "x", "y", "xdot", "ydot"])?;
    for s in states {
        let values = [s.t_ms]
            .into_iter()
            .chain(s.theta)
            .chain(s.x)
            .chain(s.x_dot);
        wtr.write_record(values.map(|v| format!("{v:?}")))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a cycle CSV back into records. Fields the CSV does not carry are
/// left at their defaults; `reached` is inferred from a zero reference.
pub fn read_cycle_csv<R: std::io::Read>(r: R) -> crate::Result<Vec<ControlCycleRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        if row.len() != crate::controller::CYCLE_CSV_HEADER.len() {
            return Err(crate::Error::Malformed(format!(
                "expected 20 columns, got {}",
                row.len()
            )));
        }
        let f = |k: usize| -> crate::Result<f64> {
            row[k]
                .trim()
                .parse()
                .map_err(|_| crate::Error::Malformed(format!("bad number `{}`", &row[k])))
        };
        let v = |k: usize| -> crate::Result<Vec2> { Ok([f(k)?, f(k + 1)?]) };
        let cycle = row[0]
            .trim()
            .parse()
            .map_err(|_| crate::Error::Malformed(format!("bad cycle `{}`", &row[0])))?;
        let x_dot_ref = v(6)?;
        out.push(ControlCycleRecord {
            cycle,
            t_ms: f(1)?,
            x_s: v(2)?,
            x_d: v(4)?,
            x_dot_ref,
            x_dot_cereb: v(8)?,
            e_pred: v(10)?,
            x_dot_pred: v(12)?,
            x_dot_dm_in: v(14)?,
            theta: v(16)?,
            theta_dot_cmd: v(18)?,
            x_dot_s: [0.0; 2],
            x_dot_cereb_prev: [0.0; 2],
            reached: x_dot_ref == [0.0, 0.0],
        });
    }
    Ok(out)
}

/// Axis-aligned box around the joint-limit image of the workspace.
pub fn workspace_bounds(model: &ArmModel) -> (Vec2, Vec2) {
    let [s, e] = model.limits();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let n = 64;
    for i in 0..=n {
        for j in 0..=n {
            let t = [
                s.0 + (s.1 - s.0) * i as f64 / n as f64,
                e.0 + (e.1 - e.0) * j as f64 / n as f64,
            ];
            let x = model.forward_kinematics(t);
            for k in 0..2 {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
    }
    (lo, hi)
}

/// Uniform point of the reachable workspace by rejection from its bounding
/// box.
pub fn sample_reachable<R: Rng>(model: &ArmModel, bounds: (Vec2, Vec2), rng: &mut R) -> Vec2 {
    let (lo, hi) = bounds;
    loop {
        let x = [
            rng.random_range(lo[0]..=hi[0]),
            rng.random_range(lo[1]..=hi[1]),
        ];
        if model.is_reachable(x) {
            return x;
        }
    }
}

/// Start and target at least `min_dist` apart.
pub fn sample_reach_pair<R: Rng>(
    model: &ArmModel,
    bounds: (Vec2, Vec2),
    min_dist: f64,
    rng: &mut R,
) -> (Vec2, Vec2) {
    loop {
        let a = sample_reachable(model, bounds, rng);
        let b = sample_reachable(model, bounds, rng);
        if arm::norm(arm::sub(a, b)) >= min_dist {
            return (a, b);
        }
    }
}

fn ik(model: &ArmModel, x: Vec2, what: &str) -> crate::Result<Vec2> {
    model
        .inverse_kinematics(x)
        .ok_or_else(|| crate::Error::Unreachable(format!("{what} at ({:.4}, {:.4})", x[0], x[1])))
}

/// Builds a loop around `dm`. With `cb` set the cerebellum sits in the
/// forward-model slot; otherwise the correction is off (`k_c = 0`).
pub fn make_loop(
    cfg: &ExperimentConfig,
    dm: DiffMap,
    cb: Option<Cerebellum>,
) -> crate::Result<ControlLoop> {
    let mut control = cfg.control;
    let predictor = match cb {
        Some(cb) => Predictor::Cerebellum(Box::new(cb)),
        None => {
            control.k_c = 0.0;
            Predictor::None
        }
    };
    let sensor_seed = derive_seed(cfg.task.seed, STREAM_SENSORS);
    ControlLoop::new(
        control,
        cfg.arm.model.clone(),
        cfg.arm.sensors,
        dm,
        predictor,
        sensor_seed,
    )
}

pub fn build_cerebellum(cfg: &ExperimentConfig) -> crate::Result<Cerebellum> {
    Cerebellum::build(cfg.cb.clone(), derive_seed(cfg.task.seed, STREAM_CB))
}

fn set_learning(lp: &mut ControlLoop, on: bool) {
    if let Some(cb) = lp.predictor_mut().cerebellum_mut() {
        cb.set_learning(on);
    }
}

/// Like [`reach_from`], also returning the DCN raster of every prediction
/// window as CSV rows on the loop clock.
pub fn reach_with_raster(
    lp: &mut ControlLoop,
    start: Vec2,
    target: Vec2,
    noise_seed: u64,
) -> crate::Result<(Reach, Vec<u8>)> {
    let theta = ik(lp.model(), start, "start")?;
    ik(lp.model(), target, "target")?;
    lp.reset(theta)?;
    lp.reseed_sensors(noise_seed)?;
    let mut reach = Reach {
        target,
        start: lp.state().x,
        records: Vec::new(),
        trajectory: vec![*lp.state()],
        reached: false,
    };
    let mut rows = csv::Writer::from_writer(Vec::new());
    rows.write_record(["population", "neuron", "t_ms"])?;
    for _ in 0..lp.config().max_cycles() {
        let rec = lp.run_cycle(target)?;
        if let (Some(spikes), Some(cb)) = (lp.last_cb_spikes(), lp.predictor().cerebellum()) {
            for d in cb.dcn() {
                for pop in [d.pos, d.neg] {
                    let label = &cb.network().population(pop).label;
                    for &(i, t) in spikes.spikes(pop) {
                        rows.write_record([
                            label.clone(),
                            i.to_string(),
                            format!("{:?}", rec.t_ms + t),
                        ])?;
                    }
                }
            }
        }
        reach.records.push(rec);
        reach.trajectory.push(*lp.state());
        if rec.reached {
            reach.reached = true;
            break;
        }
    }
    let bytes = rows
        .into_inner()
        .map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok((reach, bytes))
}

/// One reach from rest at `start` with its own sensor-noise stream.
pub fn reach_from(
    lp: &mut ControlLoop,
    start: Vec2,
    target: Vec2,
    noise_seed: u64,
) -> crate::Result<Reach> {
    let theta = ik(lp.model(), start, "start")?;
    ik(lp.model(), target, "target")?;
    lp.reset(theta)?;
    lp.reseed_sensors(noise_seed)?;
    lp.reach(target)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairedReach {
    pub start: Vec2,
    pub target: Vec2,
    pub off: ReachMetrics,
    pub on: ReachMetrics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomReachSummary {
    pub training_cycles: usize,
    pub training_reaches: usize,
    pub pairs: Vec<PairedReach>,
    pub deviation: Comparison,
    pub time: Comparison,
}

pub struct RandomReachRun {
    pub summary: RandomReachSummary,
    pub training: Vec<Reach>,
    pub eval_off: Vec<Reach>,
    pub eval_on: Vec<Reach>,
    pub cerebellum: Cerebellum,
}

/// Random reaches with cerebellar learning for `cb_iterations` cycles.
/// Returns the trained cerebellum and the training reaches.
pub fn train_cb_random(
    cfg: &ExperimentConfig,
    dm: &DiffMap,
) -> crate::Result<(Cerebellum, Vec<Reach>)> {
    let cb = build_cerebellum(cfg)?;
    let mut lp = make_loop(cfg, dm.clone(), Some(cb))?;
    set_learning(&mut lp, true);
    let bounds = workspace_bounds(&cfg.arm.model);
    let mut rng = stream(cfg.task.seed, STREAM_TRAIN_TARGETS);
    let mut reaches = Vec::new();
    let mut cycles = 0;
    while cycles < cfg.task.cb_iterations {
        let (start, target) = sample_reach_pair(
            &cfg.arm.model,
            bounds,
            cfg.task.min_reach_distance,
            &mut rng,
        );
        let r = reach_from(&mut lp, start, target, rng.random())?;
        cycles += r.records.len();
        reaches.push(r);
    }
    let (_, predictor) = lp.into_parts();
    match predictor {
        Predictor::Cerebellum(cb) => Ok((*cb, reaches)),
        _ => unreachable!("loop was built with a cerebellum"),
    }
}

/// Start, target and sensor-noise seed of every evaluation reach.
pub fn eval_trials(cfg: &ExperimentConfig) -> Vec<(Vec2, Vec2, u64)> {
    let bounds = workspace_bounds(&cfg.arm.model);
    let mut rng = stream(cfg.task.seed, STREAM_EVAL_TARGETS);
    (0..cfg.task.eval_reaches)
        .map(|_| {
            let (start, target) = sample_reach_pair(
                &cfg.arm.model,
                bounds,
                cfg.task.min_reach_distance,
                &mut rng,
            );
            (start, target, rng.random())
        })
        .collect()
}

/// Evaluates paired reaches with a frozen cerebellum against the
/// uncorrected loop over the same starts, targets and sensor noise.
pub fn evaluate_pairs(
    cfg: &ExperimentConfig,
    dm: &DiffMap,
    cb: &Cerebellum,
) -> crate::Result<(Vec<PairedReach>, Vec<Reach>, Vec<Reach>)> {
    let mut frozen = cb.clone();
    frozen.set_learning(false);
    let mut on_loop = make_loop(cfg, dm.clone(), Some(frozen))?;
    let mut off_loop = make_loop(cfg, dm.clone(), None)?;
    let cycle_ms = cfg.control.cycle_ms;
    let (mut pairs, mut offs, mut ons) = (Vec::new(), Vec::new(), Vec::new());
    for (start, target, noise) in eval_trials(cfg) {
        let off = reach_from(&mut off_loop, start, target, noise)?;
        let on = reach_from(&mut on_loop, start, target, noise)?;
        pairs.push(PairedReach {
            start,
            target,
            off: metrics::reach_metrics(&off.records, start, cycle_ms)?,
            on: metrics::reach_metrics(&on.records, start, cycle_ms)?,
        });
        offs.push(off);
        ons.push(on);
    }
    Ok((pairs, offs, ons))
}

pub fn run_random_reach(cfg: &ExperimentConfig, dm: &DiffMap) -> crate::Result<RandomReachRun> {
    let (cerebellum, training) = train_cb_random(cfg, dm)?;
    let (pairs, eval_off, eval_on) = evaluate_pairs(cfg, dm, &cerebellum)?;
    let deviation = Comparison::new(
        pairs
            .iter()
            .map(|p| (p.off.max_deviation, p.on.max_deviation))
            .collect(),
    )?;
    let time = Comparison::new(
        pairs
            .iter()
            .map(|p| (p.off.reach_time, p.on.reach_time))
            .collect(),
    )?;
    Ok(RandomReachRun {
        summary: RandomReachSummary {
            training_cycles: training.iter().map(|r| r.records.len()).sum(),
            training_reaches: training.len(),
            pairs,
            deviation,
            time,
        },
        training,
        eval_off,
        eval_on,
        cerebellum,
    })
}

/// Target `radius` from `center` in direction `angle_deg`.
pub fn radial_target(center: Vec2, radius: f64, angle_deg: f64) -> Vec2 {
    let a = angle_deg.to_radians();
    [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
}

/// Per-reach mean of `|e_pred|` (norm) and of each component's magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub norm: f64,
    pub x: f64,
    pub y: f64,
}

pub fn reach_error(reach: &Reach) -> ErrorSummary {
    let n = reach.records.len().max(1) as f64;
    let sum = |f: &dyn Fn(&ControlCycleRecord) -> f64| reach.records.iter().map(f).sum::<f64>() / n;
    ErrorSummary {
        norm: sum(&|r| arm::norm(r.e_pred)),
        x: sum(&|r| r.e_pred[0].abs()),
        y: sum(&|r| r.e_pred[1].abs()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepeatedReachSummary {
    pub start: Vec2,
    pub target: Vec2,
    pub errors: Vec<ErrorSummary>,
    /// Mean error norm over the first and last tenth of the reaches.
    pub first_tenth: f64,
    pub last_tenth: f64,
    pub slope_x: f64,
    pub slope_y: f64,
}

/// The same reach repeated with cerebellar learning on.
pub fn run_repeated_reach(
    cfg: &ExperimentConfig,
    dm: &DiffMap,
) -> crate::Result<(RepeatedReachSummary, Vec<Reach>, Cerebellum)> {
    let start = cfg.radial_center();
    let target = radial_target(start, cfg.task.radial_radius, cfg.task.repeat_angle_deg);
    let mut lp = make_loop(cfg, dm.clone(), Some(build_cerebellum(cfg)?))?;
    set_learning(&mut lp, true);
    let mut rng = stream(cfg.task.seed, STREAM_TRAIN_TARGETS);
    let mut reaches = Vec::with_capacity(cfg.task.repeat_reaches);
    for _ in 0..cfg.task.repeat_reaches {
        reaches.push(reach_from(&mut lp, start, target, rng.random())?);
    }
    let errors: Vec<ErrorSummary> = reaches.iter().map(reach_error).collect();
    let tenth = (errors.len() / 10).max(1);
    let mean = |s: &[ErrorSummary]| s.iter().map(|e| e.norm).sum::<f64>() / s.len() as f64;
    let xs: Vec<f64> = errors.iter().map(|e| e.x).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.y).collect();
    let summary = RepeatedReachSummary {
        start,
        target,
        first_tenth: mean(&errors[..tenth]),
        last_tenth: mean(&errors[errors.len() - tenth..]),
        slope_x: metrics::trend_slope(&xs),
        slope_y: metrics::trend_slope(&ys),
        errors,
    };
    let (_, predictor) = lp.into_parts();
    let cb = match predictor {
        Predictor::Cerebellum(cb) => *cb,
        _ => unreachable!("loop was built with a cerebellum"),
    };
    Ok((summary, reaches, cb))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialTarget {
    pub angle_deg: f64,
    pub target: Vec2,
    /// Metrics without the cerebellum, then after each checkpoint.
    pub checkpoints: Vec<(usize, ReachMetrics)>,
}

impl RadialTarget {
    pub fn deviations(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|c| c.1.max_deviation).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|c| c.1.reach_time).collect()
    }

    /// Deviation falls strictly from one checkpoint to the next.
    pub fn monotone(&self) -> bool {
        self.deviations().windows(2).all(|w| w[1] < w[0])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSummary {
    pub center: Vec2,
    pub targets: Vec<RadialTarget>,
    /// Final deviation against the uncorrected reach.
    pub deviation: Comparison,
    pub time: Comparison,
    pub monotone_targets: usize,
}

pub struct RadialRun {
    pub summary: RadialSummary,
    /// Measured reaches per target, in checkpoint order.
    pub reaches: Vec<Vec<Reach>>,
}

/// Eight-direction reaching. Each target starts from a fresh cerebellum;
/// the uncorrected reach is checkpoint 0, then frozen-weight reaches after
/// half and all of the repetitions.
pub fn run_radial(cfg: &ExperimentConfig, dm: &DiffMap) -> crate::Result<RadialRun> {
    let center = cfg.radial_center();
    let model = &cfg.arm.model;
    ik(model, center, "radial start")?;
    let n = cfg.task.radial_targets;
    let angles: Vec<f64> = (0..n).map(|k| 360.0 * k as f64 / n as f64).collect();
    for &a in &angles {
        let t = radial_target(center, cfg.task.radial_radius, a);
        if !model.is_reachable(t) {
            return Err(crate::Error::Unreachable(format!(
                "radial target at {a} degrees"
            )));
        }
    }
    let reps = cfg.task.radial_repetitions;
    let marks = [reps / 2, reps];
    let cycle_ms = cfg.control.cycle_ms;
    let fresh = build_cerebellum(cfg)?;
    let mut off_loop = make_loop(cfg, dm.clone(), None)?;
    let mut rng = stream(cfg.task.seed, STREAM_EVAL_TARGETS);
    let (mut targets, mut all) = (Vec::new(), Vec::new());
    for &angle in &angles {
        let target = radial_target(center, cfg.task.radial_radius, angle);
        let eval_noise: u64 = rng.random();
        let off = reach_from(&mut off_loop, center, target, eval_noise)?;
        let mut checkpoints = vec![(0, metrics::reach_metrics(&off.records, center, cycle_ms)?)];
        let mut reaches = vec![off];
        let mut lp = make_loop(cfg, dm.clone(), Some(fresh.clone()))?;
        for rep in 1..=reps {
            set_learning(&mut lp, true);
            reach_from(&mut lp, center, target, rng.random())?;
            if marks.contains(&rep) && checkpoints.last().map(|c| c.0) != Some(rep) {
                set_learning(&mut lp, false);
                let r = reach_from(&mut lp, center, target, eval_noise)?;
                checkpoints.push((rep, metrics::reach_metrics(&r.records, center, cycle_ms)?));
                reaches.push(r);
            }
        }
        targets.push(RadialTarget {
            angle_deg: angle,
            target,
            checkpoints,
        });
        all.push(reaches);
    }
    let last = |t: &RadialTarget, f: fn(&ReachMetrics) -> f64| {
        (f(&t.checkpoints[0].1), f(&t.checkpoints.last().unwrap().1))
    };
    let deviation = Comparison::new(
        targets
            .iter()
            .map(|t| last(t, |m| m.max_deviation))
            .collect(),
    )?;
    let time = Comparison::new(targets.iter().map(|t| last(t, |m| m.reach_time)).collect())?;
    let monotone_targets = targets.iter().filter(|t| t.monotone()).count();
    Ok(RadialRun {
        summary: RadialSummary {
            center,
            targets,
            deviation,
            time,
            monotone_targets,
        },
        reaches: all,
    })
}

/// Figure-eight `center + (R/2 sin 2g, R cos g)` at `n` equally spaced
/// values of `g` in `[0, 2 pi)`.
pub fn contour_points(center: Vec2, radius: f64, n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let g = std::f64::consts::TAU * k as f64 / n as f64;
            [
                center[0] + 0.5 * radius * (2.0 * g).sin(),
                center[1] + radius * g.cos(),
            ]
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Lap {
    pub records: Vec<ControlCycleRecord>,
    pub trajectory: Vec<ArmState>,
    pub skipped: usize,
}

/// One lap: every contour point in turn and back to the first, skipping a
/// point when its time limit runs out.
pub fn contour_lap(lp: &mut ControlLoop, points: &[Vec2], noise_seed: u64) -> crate::Result<Lap> {
    let theta = ik(lp.model(), points[0], "contour start")?;
    lp.reset(theta)?;
    lp.reseed_sensors(noise_seed)?;
    let mut lap = Lap {
        records: Vec::new(),
        trajectory: vec![*lp.state()],
        skipped: 0,
    };
    for &target in points.iter().skip(1).chain(points.first()) {
        let r = lp.reach(target)?;
        if !r.reached {
            lap.skipped += 1;
        }
        lap.records.extend(r.records);
        lap.trajectory.extend(r.trajectory.into_iter().skip(1));
    }
    Ok(lap)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContourSummary {
    pub center: Vec2,
    pub off: ContourMetrics,
    pub on: Option<ContourMetrics>,
}

pub struct ContourRun {
    pub summary: ContourSummary,
    pub points: Vec<Vec2>,
    pub off: Lap,
    pub on: Option<Lap>,
}

/// Contour following without and (if enabled) with the cerebellum. The
/// cerebellum learns during the training laps and is frozen for the
/// measured lap.
pub fn run_contour(cfg: &ExperimentConfig, dm: &DiffMap) -> crate::Result<ContourRun> {
    let center = cfg.contour_center();
    let points = contour_points(center, cfg.task.contour_radius, cfg.task.contour_points);
    for (k, &p) in points.iter().enumerate() {
        ik(&cfg.arm.model, p, &format!("contour point {k}"))?;
    }
    let mut point_cfg = cfg.clone();
    point_cfg.control.tolerance = cfg.task.contour_tolerance;
    point_cfg.control.time_limit_s = cfg.task.contour_time_limit_s;
    let mut rng = stream(cfg.task.seed, STREAM_EVAL_TARGETS);
    let noise: u64 = rng.random();
    let (beta, cycle_ms) = (cfg.task.filter_beta, cfg.control.cycle_ms);

    let mut off_loop = make_loop(&point_cfg, dm.clone(), None)?;
    let off = contour_lap(&mut off_loop, &points, noise)?;
    let off_metrics = metrics::contour_metrics(&off.records, &points, beta, cycle_ms, off.skipped)?;

    let (on, on_metrics) = if cfg.task.cb {
        let mut lp = make_loop(&point_cfg, dm.clone(), Some(build_cerebellum(cfg)?))?;
        set_learning(&mut lp, true);
        for _ in 0..cfg.task.contour_training_laps {
            contour_lap(&mut lp, &points, rng.random())?;
        }
        set_learning(&mut lp, false);
        let lap = contour_lap(&mut lp, &points, noise)?;
        let m = metrics::contour_metrics(&lap.records, &points, beta, cycle_ms, lap.skipped)?;
        (Some(lap), Some(m))
    } else {
        (None, None)
    };
    Ok(ContourRun {
        summary: ContourSummary {
            center,
            off: off_metrics,
            on: on_metrics,
        },
        points,
        off,
        on,
    })
}
