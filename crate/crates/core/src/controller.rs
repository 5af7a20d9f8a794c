//! Smith-predictor control loop.
//!
//! Each cycle reads the delayed sensors, forms the prediction error against
//! the previous forward-model output, lets the cerebellum learn from it,
//! predicts the velocity produced by the command in flight, corrects the
//! reference given to the differential map and moves the arm for one cycle.
//!
//! ```text
//! e_pred   = xdot_s - xdot_cereb(t-1)
//! xdot_pred = xdot_cereb(t) + e_pred
//! xdot_dm  = xdot_ref + k_c (xdot_ref - xdot_pred)
//! ```

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arm::{self, ArmModel, ArmState, DelayLine, SensorConfig, SensorReading, Vec2};
use crate::cerebellum::{CbContext, Cerebellum, TeachingSignal};
use crate::diffmap::DiffMap;
use crate::snn::SpikeRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlConfig {
    /// Control period (ms).
    pub cycle_ms: f64,
    /// Reference speed (m/s).
    pub v_ref: f64,
    /// Gain on the predicted velocity error.
    pub k_c: f64,
    /// Distance at which a target counts as reached (m).
    pub tolerance: f64,
    /// Time allowed per target (s).
    pub time_limit_s: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            cycle_ms: crate::snn::WINDOW_MS,
            v_ref: 0.03,
            k_c: 1.0,
            tolerance: 0.002,
            time_limit_s: 30.0,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.cycle_ms > 0.0
            && self.v_ref > 0.0
            && self.tolerance > 0.0
            && self.time_limit_s > 0.0
            && self.k_c.is_finite();
        if !ok {
            return Err(crate::Error::config(format!(
                "control needs positive cycle, v_ref, tolerance and time limit, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Cycles available to one target.
    pub fn max_cycles(&self) -> usize {
        (self.time_limit_s * 1000.0 / self.cycle_ms).ceil() as usize
    }
}

/// Reference velocity towards the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub x_dot_ref: Vec2,
    pub reached: bool,
}

/// `v_ref` times the unit vector from `x_s` to `x_d`, or zero with the
/// reached flag inside the tolerance.
pub fn target_direction(x_d: Vec2, x_s: Vec2, v_ref: f64, tolerance: f64) -> Direction {
    let d = arm::sub(x_d, x_s);
    let dist = arm::norm(d);
    if !(dist > tolerance) {
        return Direction {
            x_dot_ref: [0.0; 2],
            reached: true,
        };
    }
    Direction {
        x_dot_ref: arm::scale(d, v_ref / dist),
        reached: false,
    }
}

pub fn prediction_error(x_dot_s: Vec2, x_dot_cereb_prev: Vec2) -> Vec2 {
    arm::sub(x_dot_s, x_dot_cereb_prev)
}

/// Returns `(xdot_pred, xdot_dm_in)`; the second is clamped per component to
/// `range`.
pub fn corrected_reference(
    x_dot_ref: Vec2,
    x_dot_cereb: Vec2,
    e_pred: Vec2,
    k_c: f64,
    range: (f64, f64),
) -> (Vec2, Vec2) {
    let pred = arm::add(x_dot_cereb, e_pred);
    let raw = arm::add(x_dot_ref, arm::scale(arm::sub(x_dot_ref, pred), k_c));
    (pred, raw.map(|v| v.clamp(range.0, range.1)))
}

/// What stands in the forward-model slot of the loop.
#[derive(Debug, Clone)]
pub enum Predictor {
    /// Always predicts zero.
    None,
    /// Exact kinematics: `J(theta) theta_dot_cmd`.
    Oracle(ArmModel),
    Cerebellum(Box<Cerebellum>),
}

impl Predictor {
    pub fn cerebellum(&self) -> Option<&Cerebellum> {
        match self {
            Predictor::Cerebellum(cb) => Some(cb),
            _ => None,
        }
    }

    pub fn cerebellum_mut(&mut self) -> Option<&mut Cerebellum> {
        match self {
            Predictor::Cerebellum(cb) => Some(cb),
            _ => None,
        }
    }
}

/// Carries the forward-model output and error between cycles.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SmithState {
    pub x_dot_cereb: Vec2,
    pub e_pred: Vec2,
    /// Whether a prediction has been made since the last reset.
    pub primed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlCycleRecord {
    pub cycle: usize,
    pub t_ms: f64,
    pub x_s: Vec2,
    pub x_d: Vec2,
    pub x_dot_ref: Vec2,
    pub x_dot_cereb: Vec2,
    pub e_pred: Vec2,
    pub x_dot_pred: Vec2,
    pub x_dot_dm_in: Vec2,
    pub theta: Vec2,
    pub theta_dot_cmd: Vec2,
    /// Sensed velocity the error was formed from.
    pub x_dot_s: Vec2,
    /// Forward-model output of the previous cycle.
    pub x_dot_cereb_prev: Vec2,
    pub reached: bool,
}

pub const CYCLE_CSV_HEADER: [&str; 20] = [
    "cycle", "t_ms", "xs_x", "xs_y", "xd_x", "xd_y", "xref_x", "xref_y", "xcereb_x", "xcereb_y",
    "epred_x", "epred_y", "xpred_x", "xpred_y", "xdmin_x", "xdmin_y", "th1", "th2", "thd1", "thd2",
];

pub fn write_cycle_csv<W: Write>(records: &[ControlCycleRecord], w: W) -> crate::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CYCLE_CSV_HEADER)?;
    for r in records {
        let mut row = vec![r.cycle.to_string()];
        let values = [r.t_ms]
            .into_iter()
            .chain(r.x_s)
            .chain(r.x_d)
            .chain(r.x_dot_ref)
            .chain(r.x_dot_cereb)
            .chain(r.e_pred)
            .chain(r.x_dot_pred)
            .chain(r.x_dot_dm_in)
            .chain(r.theta)
            .chain(r.theta_dot_cmd);
        row.extend(values.map(|v| format!("{v:?}")));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Outcome of one reach.
#[derive(Debug, Clone)]
pub struct Reach {
    pub target: Vec2,
    pub start: Vec2,
    pub records: Vec<ControlCycleRecord>,
    /// True arm states, starting with the initial one.
    pub trajectory: Vec<ArmState>,
    pub reached: bool,
}

impl Reach {
    /// Cycles until the target was reached, or all cycles run.
    pub fn cycles(&self) -> usize {
        self.records
            .iter()
            .position(|r| r.reached)
            .unwrap_or(self.records.len())
    }
}

/// The closed loop: arm, delayed sensors, differential map and predictor.
#[derive(Debug, Clone)]
pub struct ControlLoop {
    config: ControlConfig,
    model: ArmModel,
    state: ArmState,
    sensors: DelayLine,
    smith: SmithState,
    dm: DiffMap,
    predictor: Predictor,
    last_cmd: Vec2,
    cycle: usize,
    /// Raster of the last cerebellar prediction window.
    last_spikes: Option<SpikeRecord>,
}

impl ControlLoop {
    pub fn new(
        config: ControlConfig,
        model: ArmModel,
        sensors: SensorConfig,
        dm: DiffMap,
        predictor: Predictor,
        seed: u64,
    ) -> crate::Result<Self> {
        config.validate()?;
        model.validate()?;
        let state = model.state_at(model.home(), 0.0);
        let mut sensors = DelayLine::new(sensors, ChaCha8Rng::seed_from_u64(seed))?;
        sensors.prime(state);
        Ok(Self {
            config,
            model,
            state,
            sensors,
            smith: SmithState::default(),
            dm,
            predictor,
            last_cmd: [0.0; 2],
            cycle: 0,
            last_spikes: None,
        })
    }

    pub fn config(&self) -> &ControlConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut ControlConfig {
        &mut self.config
    }

    pub fn model(&self) -> &ArmModel {
        &self.model
    }

    pub fn state(&self) -> &ArmState {
        &self.state
    }

    pub fn smith(&self) -> &SmithState {
        &self.smith
    }

    pub fn dm(&self) -> &DiffMap {
        &self.dm
    }

    pub fn predictor(&self) -> &Predictor {
        &self.predictor
    }

    pub fn predictor_mut(&mut self) -> &mut Predictor {
        &mut self.predictor
    }

    pub fn last_cb_spikes(&self) -> Option<&SpikeRecord> {
        self.last_spikes.as_ref()
    }

    pub fn into_parts(self) -> (DiffMap, Predictor) {
        (self.dm, self.predictor)
    }

    /// Places the arm at rest at `theta` and clears the loop memory. Learned
    /// weights are kept.
    pub fn reset(&mut self, theta: Vec2) -> crate::Result<()> {
        if !self.model.within_limits(theta) {
            return Err(crate::Error::config(format!(
                "start configuration {theta:?} is outside the limits"
            )));
        }
        self.state = self.model.state_at(theta, 0.0);
        self.sensors.prime(self.state);
        self.smith = SmithState::default();
        self.last_cmd = [0.0; 2];
        self.cycle = 0;
        self.last_spikes = None;
        if let Some(cb) = self.predictor.cerebellum_mut() {
            cb.reset_activity();
        }
        Ok(())
    }

    /// Restarts the sensor noise stream from `seed` and re-primes the line
    /// with the current state.
    pub fn reseed_sensors(&mut self, seed: u64) -> crate::Result<()> {
        let cfg = *self.sensors.config();
        self.sensors = DelayLine::new(cfg, ChaCha8Rng::seed_from_u64(seed))?;
        self.sensors.prime(self.state);
        Ok(())
    }

    fn clamp_to(v: f64, range: (f64, f64)) -> f64 {
        v.clamp(range.0, range.1)
    }

    fn cb_context(&self, reading: &SensorReading, cb: &Cerebellum) -> CbContext {
        let c = cb.config();
        CbContext {
            theta: reading
                .theta
                .iter()
                .zip(&c.theta_ranges)
                .map(|(&t, &r)| Self::clamp_to(t, r))
                .collect(),
            theta_dot_cmd: self
                .last_cmd
                .iter()
                .map(|&w| Self::clamp_to(w, c.thetadot_range))
                .collect(),
            x_dot_sensed: reading
                .x_dot
                .iter()
                .map(|&v| Self::clamp_to(v, c.xdot_range))
                .collect(),
        }
    }

    /// Forward-model output for the command in flight; teaches the
    /// cerebellum with `e_pred` first when it has a previous prediction.
    fn forward(&mut self, reading: &SensorReading, e_pred: Vec2) -> crate::Result<Vec2> {
        let primed = self.smith.primed;
        let ctx = self
            .predictor
            .cerebellum()
            .map(|cb| self.cb_context(reading, cb));
        match (&mut self.predictor, ctx) {
            (Predictor::Oracle(model), _) => {
                Ok(arm::mat_vec(&model.jacobian(reading.theta), self.last_cmd))
            }
            (Predictor::Cerebellum(cb), Some(ctx)) => {
                let out = if primed && cb.learning() {
                    cb.cycle(Some(&TeachingSignal::new(e_pred.to_vec())?), &ctx)?
                } else {
                    cb.predict(&ctx)?
                };
                let x_dot = [out.x_dot[0], out.x_dot[1]];
                self.last_spikes = Some(out.spikes);
                Ok(x_dot)
            }
            _ => Ok([0.0; 2]),
        }
    }

    /// One control cycle towards `target`.
    pub fn run_cycle(&mut self, target: Vec2) -> crate::Result<ControlCycleRecord> {
        self.sensors.push(self.state);
        let reading = self.sensors.read().expect("primed at construction");
        let x_dot_cereb_prev = self.smith.x_dot_cereb;
        let e_pred = prediction_error(reading.x_dot, x_dot_cereb_prev);
        let dir = target_direction(target, reading.x, self.config.v_ref, self.config.tolerance);
        let x_dot_cereb = self.forward(&reading, e_pred)?;
        let range = self.dm.config().xdot_range;
        let (x_dot_pred, x_dot_dm_in) =
            corrected_reference(dir.x_dot_ref, x_dot_cereb, e_pred, self.config.k_c, range);
        let cmd = if dir.reached {
            [0.0; 2]
        } else {
            let out = self.dm.infer(&reading.theta, &x_dot_dm_in)?;
            [out[0], out[1]]
        };
        if cmd.iter().any(|w| !w.is_finite()) {
            return Err(crate::Error::NonFiniteInput(String::from("joint command")));
        }
        let record = ControlCycleRecord {
            cycle: self.cycle,
            t_ms: self.state.t_ms,
            x_s: reading.x,
            x_d: target,
            x_dot_ref: dir.x_dot_ref,
            x_dot_cereb,
            e_pred,
            x_dot_pred,
            x_dot_dm_in,
            theta: reading.theta,
            theta_dot_cmd: cmd,
            x_dot_s: reading.x_dot,
            x_dot_cereb_prev,
            reached: dir.reached,
        };
        self.smith = SmithState {
            x_dot_cereb,
            e_pred,
            primed: true,
        };
        self.state = self
            .model
            .step(&self.state, cmd, self.config.cycle_ms / 1000.0);
        self.last_cmd = cmd;
        self.cycle += 1;
        Ok(record)
    }

    /// Runs cycles from the current state until `target` is reached or the
    /// time limit expires.
    pub fn reach(&mut self, target: Vec2) -> crate::Result<Reach> {
        let start = self.state.x;
        let mut trajectory = vec![self.state];
        let mut records = Vec::new();
        let mut reached = false;
        for _ in 0..self.config.max_cycles() {
            let r = self.run_cycle(target)?;
            records.push(r);
            trajectory.push(self.state);
            if r.reached {
                reached = true;
                break;
            }
        }
        Ok(Reach {
            target,
            start,
            records,
            trajectory,
            reached,
        })
    }
}
