//! Izhikevich point neuron.
//!
//! ```text
//! dv/dt = 0.04 v^2 + 5 v + 140 - u + I
//! du/dt = a (b v - u)
//! if v >= 30 mV: v <- c, u <- u + d
//! ```
//!
//! The membrane equation is stiff near threshold, so each step `dt` is split
//! into [`V_SUBSTEPS`] explicit Euler sub-steps for `v` while `u` advances once
//! per step from the potential reached (capped at the spike peak). A spike
//! detected at any sub-step ends the step with the reset. A step that starts
//! at or above the peak only applies the reset.

use serde::{Deserialize, Serialize};

/// Spike peak; reaching it triggers the reset.
pub const SPIKE_THRESHOLD_MV: f64 = 30.0;

/// Number of sub-steps the membrane update uses per simulation step.
pub const V_SUBSTEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronParams {
    /// Recovery time scale (1/ms).
    pub a: f64,
    /// Sensitivity of recovery to sub-threshold potential.
    pub b: f64,
    /// After-spike reset potential (mV).
    pub c: f64,
    /// After-spike recovery increment (mV).
    pub d: f64,
}

impl NeuronParams {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// Classic regular-spiking cortical cell.
    pub const REGULAR_SPIKING: NeuronParams = NeuronParams::new(0.02, 0.2, -65.0, 8.0);

    pub fn validate(&self) -> crate::Result<()> {
        let finite = [self.a, self.b, self.c, self.d]
            .iter()
            .all(|x| x.is_finite());
        if !finite || self.a <= 0.0 {
            return Err(crate::Error::config(format!(
                "neuron parameters need a > 0 and finite values, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Stable resting state `(v*, u*)` for zero input, if one exists.
    ///
    /// Solves `0.04 v^2 + (5 - b) v + 140 = 0` and takes the lower root.
    pub fn rest_state(&self) -> Option<(f64, f64)> {
        let p = 5.0 - self.b;
        let disc = p * p - 4.0 * 0.04 * 140.0;
        if disc < 0.0 {
            return None;
        }
        let v = (-p - disc.sqrt()) / (2.0 * 0.04);
        Some((v, self.b * v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    /// Membrane potential (mV).
    pub v: f64,
    /// Membrane recovery (mV).
    pub u: f64,
    /// Summed input current for the current step.
    pub i_ext: f64,
}

impl NeuronState {
    pub fn new(v: f64, u: f64) -> Self {
        Self { v, u, i_ext: 0.0 }
    }

    /// State at the neuron's resting point, or `v = c, u = b c` if it has none.
    pub fn at_rest(params: &NeuronParams) -> Self {
        let (v, u) = params
            .rest_state()
            .unwrap_or((params.c, params.b * params.c));
        Self::new(v, u)
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.u.is_finite()
    }
}

#[inline]
fn dv(v: f64, u: f64, i: f64) -> f64 {
    (0.04 * v + 5.0) * v + 140.0 - u + i
}

/// Advances one neuron in place by `dt` ms. Returns whether it spiked.
///
/// Callers must check finiteness afterwards; [`step_neuron`] does that.
#[inline]
pub fn advance(state: &mut NeuronState, params: &NeuronParams, dt: f64) -> bool {
    let h = dt / V_SUBSTEPS as f64;
    if state.v >= SPIKE_THRESHOLD_MV {
        state.v = params.c;
        state.u += params.d;
        return true;
    }
    let mut fired = false;
    let mut sub = 0;
    while !fired && sub < V_SUBSTEPS {
        state.v += h * dv(state.v, state.u, state.i_ext);
        fired = state.v >= SPIKE_THRESHOLD_MV;
        sub += 1;
    }
    if !state.v.is_finite() {
        // Leave the blow-up visible instead of hiding it behind a reset.
        return false;
    }
    state.u += dt * params.a * (params.b * state.v.min(SPIKE_THRESHOLD_MV) - state.u);
    if fired {
        state.v = params.c;
        state.u += params.d;
    }
    fired
}

/// One integration step for a single neuron.
pub fn step_neuron(
    state: &NeuronState,
    params: &NeuronParams,
    dt: f64,
) -> crate::Result<(NeuronState, bool)> {
    if !(dt > 0.0) {
        return Err(crate::Error::config(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let mut next = *state;
    let spiked = advance(&mut next, params, dt);
    if !next.is_finite() {
        return Err(crate::Error::NonFinite {
            population: String::from("<single>"),
            neuron: 0,
            t_ms: dt,
        });
    }
    Ok((next, spiked))
}

/// Spikes fired in `duration_ms` from rest under a constant current.
pub fn tonic_spike_count(params: &NeuronParams, current: f64, duration_ms: f64, dt: f64) -> usize {
    let mut s = NeuronState::at_rest(params);
    s.i_ext = current;
    let steps = (duration_ms / dt).round() as usize;
    (0..steps).filter(|_| advance(&mut s, params, dt)).count()
}

/// Smallest constant current (to 1e-3) that makes the neuron fire at least
/// `rate_hz` over one second, searched in `[0, 1000]`.
pub fn current_for_rate(params: &NeuronParams, rate_hz: f64, dt: f64) -> crate::Result<f64> {
    params.validate()?;
    if !(rate_hz > 0.0 && rate_hz.is_finite()) || !(dt > 0.0) {
        return Err(crate::Error::config(format!(
            "cannot calibrate for {rate_hz} Hz"
        )));
    }
    let target = rate_hz.round() as usize;
    let (mut lo, mut hi) = (0.0, 1000.0);
    if tonic_spike_count(params, hi, 1000.0, dt) < target {
        return Err(crate::Error::config(format!(
            "{rate_hz} Hz is beyond this neuron's range"
        )));
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if tonic_spike_count(params, mid, 1000.0, dt) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_is_left_alone() {
        let p = NeuronParams::new(0.02, 0.2, -65.0, 8.0);
        let s = NeuronState::new(-70.0, -14.0);
        let (next, spiked) = step_neuron(&s, &p, 1.0).unwrap();
        assert!(!spiked);
        assert_eq!(next.v, -70.0);
        assert_eq!(next.u, -14.0);
    }

    #[test]
    fn reset_applies_c_and_d() {
        let p = NeuronParams::new(0.02, 0.2, -65.0, 2.0);
        let s = NeuronState::new(31.0, 5.0);
        let (next, spiked) = step_neuron(&s, &p, 1.0).unwrap();
        assert!(spiked);
        assert_eq!(next.v, -65.0);
        assert_eq!(next.u, 7.0);
    }

    #[test]
    fn blow_up_is_a_fault() {
        let p = NeuronParams::new(0.02, 0.2, -65.0, 2.0);
        let mut s = NeuronState::new(-65.0, f64::NAN);
        s.i_ext = 0.0;
        assert!(matches!(
            step_neuron(&s, &p, 1.0),
            Err(crate::Error::NonFinite { .. })
        ));
    }

    #[test]
    fn zero_dt_rejected() {
        let p = NeuronParams::REGULAR_SPIKING;
        assert!(step_neuron(&NeuronState::at_rest(&p), &p, 0.0).is_err());
    }

    #[test]
    fn rest_state_roots() {
        let (v, u) = NeuronParams::REGULAR_SPIKING.rest_state().unwrap();
        assert!((v + 70.0).abs() < 1e-12);
        assert!((u + 14.0).abs() < 1e-12);
        // b = 1.5 has no resting point without inhibition.
        assert!(NeuronParams::new(1.0, 1.5, -60.0, 0.0)
            .rest_state()
            .is_none());
    }

    #[test]
    fn calibrated_current_hits_rate() {
        let p = NeuronParams::new(0.1, 0.2, -65.0, 2.0);
        let i = current_for_rate(&p, 50.0, 1.0).unwrap();
        assert!(tonic_spike_count(&p, i, 1000.0, 1.0) >= 50);
        assert!(tonic_spike_count(&p, i - 0.01, 1000.0, 1.0) < 50);
        assert!(current_for_rate(&p, 5000.0, 1.0).is_err());
    }

    #[test]
    fn recovery_tracks_the_spike_step() {
        // Fast-recovery cells must not lock into firing every step.
        let p = NeuronParams::new(1.0, 1.5, -60.0, 0.0);
        let mut s = NeuronState::new(-60.0, -90.0);
        s.i_ext = -60.0;
        let n = (0..1000).filter(|_| advance(&mut s, &p, 1.0)).count();
        assert!(n <= 500, "{n}");
        s = NeuronState::new(30.0, -90.0);
        s.i_ext = -70.0;
        let n = (0..1000).filter(|_| advance(&mut s, &p, 1.0)).count();
        assert!(n <= 2, "{n}");
    }

    #[test]
    fn invalid_params() {
        assert!(NeuronParams::new(0.0, 0.2, -65.0, 2.0).validate().is_err());
        assert!(NeuronParams::new(0.1, f64::NAN, -65.0, 2.0)
            .validate()
            .is_err());
        assert!(NeuronParams::REGULAR_SPIKING.validate().is_ok());
    }
}
