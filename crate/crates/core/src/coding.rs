//! Gaussian receptive-field population codes.

use serde::{Deserialize, Serialize};

/// Default current injected into a neuron at full activation.
pub const DEFAULT_GAIN: f64 = 20.0;

/// Encodes a scalar onto `n` neurons with evenly spaced preferred values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codec {
    min: f64,
    max: f64,
    centers: Vec<f64>,
    sigma: f64,
    gain: f64,
}

impl Codec {
    /// Centres span `[min, max]` inclusive; width is `(max - min) / n`.
    pub fn new(min: f64, max: f64, n: usize) -> crate::Result<Self> {
        Self::with_sigma(min, max, n, (max - min) / n as f64)
    }

    pub fn with_sigma(min: f64, max: f64, n: usize, sigma: f64) -> crate::Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(crate::Error::config(format!(
                "codec range [{min}, {max}] is empty"
            )));
        }
        if n < 2 {
            return Err(crate::Error::config(format!(
                "codec needs at least 2 neurons, got {n}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(crate::Error::config(format!(
                "codec width must be positive, got {sigma}"
            )));
        }
        let step = (max - min) / (n - 1) as f64;
        let centers = (0..n).map(|i| min + step * i as f64).collect();
        Ok(Self {
            min,
            max,
            centers,
            sigma,
            gain: DEFAULT_GAIN,
        })
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.min, self.max)
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    /// Activation in `[0, 1]` of every neuron for `value`. Out-of-range
    /// values are encoded as-is.
    pub fn encode(&self, value: f64) -> Vec<f64> {
        let k = -0.5 / (self.sigma * self.sigma);
        self.centers
            .iter()
            .map(|c| {
                let d = value - c;
                (k * d * d).exp()
            })
            .collect()
    }

    /// Activations scaled into input currents.
    pub fn currents(&self, value: f64) -> Vec<f64> {
        let mut a = self.encode(value);
        a.iter_mut().for_each(|x| *x *= self.gain);
        a
    }

    /// Rate-weighted mean of the preferred values. `None` when the assembly
    /// is silent.
    pub fn decode(&self, rates: &[f64]) -> Option<f64> {
        debug_assert_eq!(rates.len(), self.centers.len());
        let (num, den) = rates
            .iter()
            .zip(&self.centers)
            .fold((0.0, 0.0), |(n, d), (&r, &c)| (n + r * c, d + r));
        if den > 0.0 {
            Some(num / den)
        } else {
            None
        }
    }
}

/// Decodes a signed value from a positive and a negative assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedPairDecode {
    pub n_per_assembly: usize,
    /// Saturation rate of one neuron (Hz).
    pub rate_max: f64,
    /// Output at full scale.
    pub full_scale: f64,
}

impl SignedPairDecode {
    pub fn new(n_per_assembly: usize, rate_max: f64, full_scale: f64) -> crate::Result<Self> {
        if n_per_assembly == 0 || !(rate_max > 0.0) || !(full_scale > 0.0) {
            return Err(crate::Error::config(
                "signed decoder parameters must be positive",
            ));
        }
        Ok(Self {
            n_per_assembly,
            rate_max,
            full_scale,
        })
    }

    /// `(sum pos - sum neg) / (rate_max * n) * full_scale`, clamped to ±full_scale.
    pub fn decode(&self, rates_pos: &[f64], rates_neg: &[f64]) -> f64 {
        let pos: f64 = rates_pos.iter().sum();
        let neg: f64 = rates_neg.iter().sum();
        let x = (pos - neg) / (self.rate_max * self.n_per_assembly as f64) * self.full_scale;
        x.clamp(-self.full_scale, self.full_scale)
    }
}
