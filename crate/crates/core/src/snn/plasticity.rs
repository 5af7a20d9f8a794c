//! Spike-timing dependent plasticity kernels.
//!
//! `dt` is always `t_post - t_pre` in milliseconds.

use serde::{Deserialize, Serialize};

use super::PopId;

/// Shape of the STDP window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RuleKind {
    None,
    /// Coincidence rule: `S (1 - (dt/tau1)^2) exp(-|dt|/tau2)`.
    Symmetric {
        s: f64,
        tau1: f64,
        tau2: f64,
    },
    /// Depression of magnitude `s_a` for `dt <= 0`, potentiation `s_b` for `dt > 0`.
    AntiSymmetric {
        s_a: f64,
        s_b: f64,
        tau_a: f64,
        tau_b: f64,
    },
}

/// Which exponent sign to use.
///
/// `Decaying` is the physical form. `Printed` reproduces the literal
/// exponents `exp(+|dt|/tau2)` and `exp(-dt/tau_a)` (for `dt <= 0`), which grow
/// with `|dt|`; it exists only for side-by-side comparison.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelForm {
    #[default]
    Decaying,
    Printed,
}

/// Plasticity is applied only while `population` has spiked within the last
/// `window_ms`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub population: PopId,
    pub window_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlasticityRule {
    pub kind: RuleKind,
    /// Largest `|dt|` that still produces a weight change (ms).
    pub window_ms: f64,
    pub gate: Option<Gate>,
    pub form: KernelForm,
}

pub const DEFAULT_PAIRING_WINDOW_MS: f64 = 30.0;

impl PlasticityRule {
    pub const fn none() -> Self {
        Self {
            kind: RuleKind::None,
            window_ms: DEFAULT_PAIRING_WINDOW_MS,
            gate: None,
            form: KernelForm::Decaying,
        }
    }

    pub fn symmetric(s: f64, tau1: f64, tau2: f64) -> Self {
        Self {
            kind: RuleKind::Symmetric { s, tau1, tau2 },
            ..Self::none()
        }
    }

    pub fn anti_symmetric(s_a: f64, s_b: f64, tau_a: f64, tau_b: f64) -> Self {
        Self {
            kind: RuleKind::AntiSymmetric {
                s_a,
                s_b,
                tau_a,
                tau_b,
            },
            ..Self::none()
        }
    }

    pub fn with_window(mut self, window_ms: f64) -> Self {
        self.window_ms = window_ms;
        self
    }

    pub fn with_gate(mut self, population: PopId, window_ms: f64) -> Self {
        self.gate = Some(Gate {
            population,
            window_ms,
        });
        self
    }

    pub fn with_form(mut self, form: KernelForm) -> Self {
        self.form = form;
        self
    }

    pub fn is_plastic(&self) -> bool {
        !matches!(self.kind, RuleKind::None)
    }

    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::config(format!("plasticity rule: {m}")));
        if !(self.window_ms > 0.0) {
            return bad("window must be > 0");
        }
        if let Some(g) = self.gate {
            if !(g.window_ms > 0.0) {
                return bad("gate window must be > 0");
            }
        }
        match self.kind {
            RuleKind::None => Ok(()),
            RuleKind::Symmetric { s, tau1, tau2 } => {
                if !(tau1 > 0.0 && tau2 > 0.0) {
                    bad("time constants must be > 0")
                } else if !(s >= 0.0) {
                    bad("S must be >= 0")
                } else {
                    Ok(())
                }
            }
            RuleKind::AntiSymmetric {
                s_a,
                s_b,
                tau_a,
                tau_b,
            } => {
                if !(tau_a > 0.0 && tau_b > 0.0) {
                    bad("time constants must be > 0")
                } else if !(s_a >= 0.0 && s_b >= 0.0) {
                    bad("S_a and S_b must be >= 0")
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Weight change for one pre/post pairing.
    pub fn delta(&self, dt: f64) -> f64 {
        if dt.abs() > self.window_ms {
            return 0.0;
        }
        match self.kind {
            RuleKind::None => 0.0,
            RuleKind::Symmetric { s, tau1, tau2 } => symmetric_kernel(dt, s, tau1, tau2, self.form),
            RuleKind::AntiSymmetric {
                s_a,
                s_b,
                tau_a,
                tau_b,
            } => anti_symmetric_kernel(dt, s_a, s_b, tau_a, tau_b, self.form),
        }
    }
}

fn symmetric_kernel(dt: f64, s: f64, tau1: f64, tau2: f64, form: KernelForm) -> f64 {
    let r = dt / tau1;
    let decay = match form {
        KernelForm::Decaying => (-dt.abs() / tau2).exp(),
        KernelForm::Printed => (dt.abs() / tau2).exp(),
    };
    s * (1.0 - r * r) * decay
}

fn anti_symmetric_kernel(
    dt: f64,
    s_a: f64,
    s_b: f64,
    tau_a: f64,
    tau_b: f64,
    form: KernelForm,
) -> f64 {
    if dt <= 0.0 {
        let exponent = match form {
            KernelForm::Decaying => -dt.abs() / tau_a,
            KernelForm::Printed => -dt / tau_a,
        };
        -s_a * exponent.exp()
    } else {
        s_b * (-dt / tau_b).exp()
    }
}

/// Symmetric STDP delta; zero for any other rule kind.
pub fn stdp_delta_symmetric(dt: f64, rule: &PlasticityRule) -> f64 {
    match rule.kind {
        RuleKind::Symmetric { .. } => rule.delta(dt),
        _ => 0.0,
    }
}

/// Anti-symmetric STDP delta; zero for any other rule kind.
pub fn stdp_delta_antisymmetric(dt: f64, rule: &PlasticityRule) -> f64 {
    match rule.kind {
        RuleKind::AntiSymmetric { .. } => rule.delta(dt),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym() -> PlasticityRule {
        PlasticityRule::symmetric(0.05, 20.0, 18.0)
    }

    fn anti() -> PlasticityRule {
        PlasticityRule::anti_symmetric(0.3, 0.2, 10.0, 15.0)
    }

    #[test]
    fn symmetric_peak_zero_crossing_and_lobe() {
        let r = sym();
        assert_eq!(stdp_delta_symmetric(0.0, &r), 0.05);
        assert_eq!(stdp_delta_symmetric(20.0, &r), 0.0);
        assert_eq!(stdp_delta_symmetric(-20.0, &r), 0.0);
        // 2 tau1 lies outside the 30 ms pairing window.
        assert_eq!(stdp_delta_symmetric(40.0, &r), 0.0);
        let wide = r.with_window(50.0);
        let expected = 0.05 * -3.0 * (-40.0f64 / 18.0).exp();
        assert!((stdp_delta_symmetric(40.0, &wide) - expected).abs() < 1e-15);
        assert!((expected + 0.01626).abs() < 1e-5);
    }

    #[test]
    fn symmetric_is_even() {
        let r = sym();
        for dt in [1.0, 5.5, 17.0, 29.0] {
            assert_eq!(stdp_delta_symmetric(dt, &r), stdp_delta_symmetric(-dt, &r));
        }
    }

    #[test]
    fn anti_symmetric_branches() {
        let r = anti();
        assert_eq!(stdp_delta_antisymmetric(0.0, &r), -0.3);
        let e1 = (-1.0f64).exp();
        assert!((stdp_delta_antisymmetric(15.0, &r) - 0.2 * e1).abs() < 1e-15);
        assert!((stdp_delta_antisymmetric(-10.0, &r) + 0.3 * e1).abs() < 1e-15);
        assert_eq!(stdp_delta_antisymmetric(31.0, &r), 0.0);
        assert_eq!(stdp_delta_antisymmetric(-31.0, &r), 0.0);
    }

    #[test]
    fn wrong_kind_gives_zero() {
        assert_eq!(stdp_delta_symmetric(0.0, &anti()), 0.0);
        assert_eq!(stdp_delta_antisymmetric(0.0, &sym()), 0.0);
    }

    #[test]
    fn printed_form_grows() {
        let r = sym().with_form(KernelForm::Printed);
        // (1 - 0.25) e^{10/18}
        let expected = 0.05 * 0.75 * (10.0f64 / 18.0).exp();
        assert!((r.delta(10.0) - expected).abs() < 1e-15);
        let a = anti().with_form(KernelForm::Printed);
        assert!(a.delta(-10.0).abs() > a.delta(0.0).abs());
    }

    #[test]
    fn validation() {
        assert!(sym().validate().is_ok());
        assert!(PlasticityRule::symmetric(0.05, 0.0, 18.0)
            .validate()
            .is_err());
        assert!(PlasticityRule::anti_symmetric(-0.1, 0.1, 1.0, 1.0)
            .validate()
            .is_err());
        assert!(sym().with_window(0.0).validate().is_err());
    }
}
