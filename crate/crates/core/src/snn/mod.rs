//! Time-stepped spiking network engine.

mod network;
mod neuron;
mod plasticity;
mod record;

pub use network::{GroupSpec, Network, Population, SynapseGroup, Topology, WindowInputs};
pub use neuron::{
    advance, current_for_rate, step_neuron, tonic_spike_count, NeuronParams, NeuronState,
    SPIKE_THRESHOLD_MV, V_SUBSTEPS,
};
pub use plasticity::{
    stdp_delta_antisymmetric, stdp_delta_symmetric, Gate, KernelForm, PlasticityRule, RuleKind,
    DEFAULT_PAIRING_WINDOW_MS,
};
pub use record::{firing_rates, SpikeRecord};

pub type PopId = usize;
pub type GroupId = usize;

/// Global simulation step (ms).
pub const DEFAULT_DT_MS: f64 = 1.0;

/// Length of one encode/run/decode iteration (ms).
pub const WINDOW_MS: f64 = 80.0;
