//! Differential map: a two-layer spiking network that learns, by motor
//! babbling, to turn joint angles plus a task-space velocity into joint
//! velocities (an inverse-Jacobian-like transform).
//!
//! Input layer: one assembly per joint angle and one per task-space velocity
//! component. Output layer: one assembly per joint velocity, with fixed
//! lateral inhibition that grows with the distance between neurons. Every
//! input assembly projects all-to-all onto every output assembly through a
//! plastic excitatory and a plastic inhibitory group.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coding::Codec;
use crate::snn::{
    firing_rates, GroupId, GroupSpec, Network, NeuronParams, PlasticityRule, PopId, SpikeRecord,
    Topology, WindowInputs, DEFAULT_PAIRING_WINDOW_MS, WINDOW_MS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DmConfig {
    /// Task-space degrees of freedom.
    pub n_task: usize,
    /// Joint-space degrees of freedom.
    pub n_joint: usize,
    pub neurons_per_assembly: usize,
    pub input_neuron: NeuronParams,
    pub output_neuron: NeuronParams,
    /// Symmetric STDP magnitude.
    pub stdp_s: f64,
    pub stdp_tau1: f64,
    pub stdp_tau2: f64,
    pub stdp_window: f64,
    /// Upper clamp of the excitatory weights.
    pub c_e: f64,
    /// Lower clamp of the inhibitory weights.
    pub c_i: f64,
    /// Initial plastic weights are drawn from `[0, init_weight]` (excitatory)
    /// and `[-init_weight, 0]` (inhibitory).
    pub init_weight: f64,
    /// Lateral inhibition between output neurons `i, k` is
    /// `-gain * |i - k| / neurons_per_assembly`.
    pub lateral_inhibition: f64,
    /// Joint-angle ranges (rad), one per joint.
    pub theta_ranges: Vec<(f64, f64)>,
    /// Task-space velocity range (m/s), shared by all task dimensions.
    pub xdot_range: (f64, f64),
    /// Joint-velocity range (rad/s), shared by all joints.
    pub thetadot_range: (f64, f64),
    /// Current at full activation for the task-velocity assemblies.
    pub input_gain: f64,
    /// Current at full activation for the joint-angle assemblies.
    pub theta_gain: f64,
    /// Current at full activation for the output assemblies while training.
    pub teacher_gain: f64,
    pub window_ms: f64,
}

impl Default for DmConfig {
    fn default() -> Self {
        let arm = crate::arm::ArmModel::default();
        Self {
            n_task: 2,
            n_joint: 2,
            neurons_per_assembly: 68,
            input_neuron: NeuronParams::new(0.1, 0.2, -65.0, 2.0),
            output_neuron: NeuronParams::new(0.02, 0.15, -55.0, 6.0),
            stdp_s: 0.05,
            stdp_tau1: 20.0,
            stdp_tau2: 18.0,
            stdp_window: DEFAULT_PAIRING_WINDOW_MS,
            c_e: 4.0,
            c_i: -4.0,
            init_weight: 0.01,
            lateral_inhibition: 20.0,
            theta_ranges: vec![arm.shoulder_limits, arm.elbow_limits],
            xdot_range: (-0.33, 0.33),
            thetadot_range: (-arm.max_joint_speed, arm.max_joint_speed),
            input_gain: 24.0,
            theta_gain: 9.0,
            teacher_gain: 10.0,
            window_ms: WINDOW_MS,
        }
    }
}

impl DmConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.n_task == 0 || self.n_joint == 0 {
            return Err(crate::Error::config("differential map needs n, m >= 1"));
        }
        if !(self.c_e > 0.0 && self.c_i < 0.0) {
            return Err(crate::Error::config("need C_E > 0 > C_I"));
        }
        if self.theta_ranges.len() != self.n_joint {
            return Err(crate::Error::config(format!(
                "{} joint ranges given for {} joints",
                self.theta_ranges.len(),
                self.n_joint
            )));
        }
        if !(self.lateral_inhibition >= 0.0 && self.init_weight >= 0.0) {
            return Err(crate::Error::config(
                "lateral inhibition and initial weight must be >= 0",
            ));
        }
        self.input_neuron.validate()?;
        self.output_neuron.validate()?;
        self.rule().validate()
    }

    pub fn rule(&self) -> PlasticityRule {
        PlasticityRule::symmetric(self.stdp_s, self.stdp_tau1, self.stdp_tau2)
            .with_window(self.stdp_window)
    }
}

/// One babbling observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmSample {
    pub theta: Vec<f64>,
    pub x_dot: Vec<f64>,
    pub theta_dot: Vec<f64>,
}

/// Kinds of assembly, used to label weight snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Assembly {
    Theta(usize),
    XDot(usize),
    ThetaDot(usize),
}

impl Assembly {
    fn label(self) -> String {
        match self {
            Assembly::Theta(j) => format!("theta{}", j + 1),
            Assembly::XDot(i) => format!("xdot{}", i + 1),
            Assembly::ThetaDot(j) => format!("thetadot{}", j + 1),
        }
    }
}

/// Plastic group between one input and one output assembly.
#[derive(Debug, Clone, Copy)]
struct PlasticLink {
    input: usize,
    output: usize,
    group: GroupId,
}

#[derive(Debug, Clone)]
pub struct DiffMap {
    config: DmConfig,
    net: Network,
    /// Input assemblies: joint angles first, then task velocities.
    inputs: Vec<(Assembly, PopId, Codec)>,
    outputs: Vec<(PopId, Codec)>,
    excitatory: Vec<PlasticLink>,
    inhibitory: Vec<PlasticLink>,
    trained_samples: u64,
}

/// Result of one inference window.
#[derive(Debug, Clone)]
pub struct DmOutput {
    pub theta_dot: Vec<f64>,
    /// Per-assembly output rates (Hz).
    pub rates: Vec<Vec<f64>>,
    pub spikes: SpikeRecord,
}

impl DiffMap {
    pub fn build(config: DmConfig, seed: u64) -> crate::Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = config.neurons_per_assembly;
        let mut net = Network::new(crate::snn::DEFAULT_DT_MS)?;

        let mut inputs = Vec::new();
        for (j, &(lo, hi)) in config.theta_ranges.iter().enumerate() {
            let a = Assembly::Theta(j);
            let pop = net.add_population(a.label(), config.input_neuron, n, 0.0)?;
            inputs.push((a, pop, Codec::new(lo, hi, n)?.with_gain(config.theta_gain)));
        }
        for i in 0..config.n_task {
            let a = Assembly::XDot(i);
            let pop = net.add_population(a.label(), config.input_neuron, n, 0.0)?;
            let (lo, hi) = config.xdot_range;
            inputs.push((a, pop, Codec::new(lo, hi, n)?.with_gain(config.input_gain)));
        }
        let mut outputs = Vec::new();
        for j in 0..config.n_joint {
            let pop =
                net.add_population(Assembly::ThetaDot(j).label(), config.output_neuron, n, 0.0)?;
            let (lo, hi) = config.thetadot_range;
            outputs.push((pop, Codec::new(lo, hi, n)?.with_gain(config.teacher_gain)));
        }

        let rule = config.rule();
        let w0 = config.init_weight;
        let mut excitatory = Vec::new();
        let mut inhibitory = Vec::new();
        for (ii, (ia, ipop, _)) in inputs.iter().enumerate() {
            for (oi, (opop, _)) in outputs.iter().enumerate() {
                let label = format!("{}->{}", ia.label(), Assembly::ThetaDot(oi).label());
                let exc =
                    GroupSpec::fixed(format!("{label}:exc"), *ipop, *opop, Topology::AllToAll)
                        .plastic(rule, 0.0, config.c_e);
                let group = net.add_group(exc, &mut rng, |_, _, r| r.random::<f64>() * w0)?;
                excitatory.push(PlasticLink {
                    input: ii,
                    output: oi,
                    group,
                });
                let inh =
                    GroupSpec::fixed(format!("{label}:inh"), *ipop, *opop, Topology::AllToAll)
                        .plastic(rule, config.c_i, 0.0);
                let group = net.add_group(inh, &mut rng, |_, _, r| -r.random::<f64>() * w0)?;
                inhibitory.push(PlasticLink {
                    input: ii,
                    output: oi,
                    group,
                });
            }
        }
        let g = config.lateral_inhibition;
        for (oi, (opop, _)) in outputs.iter().enumerate() {
            let spec = GroupSpec::fixed(
                format!("{}:lateral", Assembly::ThetaDot(oi).label()),
                *opop,
                *opop,
                Topology::AllToAll,
            );
            net.add_group(spec, &mut rng, |i, k, _| {
                -g * (i.abs_diff(k) as f64) / n as f64
            })?;
        }

        Ok(Self {
            config,
            net,
            inputs,
            outputs,
            excitatory,
            inhibitory,
            trained_samples: 0,
        })
    }

    pub fn config(&self) -> &DmConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn trained_samples(&self) -> u64 {
        self.trained_samples
    }

    pub fn n_plastic_synapses(&self) -> usize {
        self.excitatory
            .iter()
            .chain(&self.inhibitory)
            .map(|l| self.net.group(l.group).len())
            .sum()
    }

    pub fn n_input_assemblies(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_output_assemblies(&self) -> usize {
        self.outputs.len()
    }

    pub fn output_codec(&self, joint: usize) -> &Codec {
        &self.outputs[joint].1
    }

    pub fn input_codec(&self, assembly: usize) -> &Codec {
        &self.inputs[assembly].2
    }

    /// Excitatory weight matrix from input assembly `input` to output
    /// assembly `output`, row-major `[pre][post]`.
    pub fn excitatory_weights(&self, input: usize, output: usize) -> Vec<Vec<f64>> {
        self.link_weights(&self.excitatory, input, output)
    }

    pub fn inhibitory_weights(&self, input: usize, output: usize) -> Vec<Vec<f64>> {
        self.link_weights(&self.inhibitory, input, output)
    }

    fn link_weights(&self, links: &[PlasticLink], input: usize, output: usize) -> Vec<Vec<f64>> {
        let n = self.config.neurons_per_assembly;
        let mut m = vec![vec![0.0; n]; n];
        if let Some(l) = links
            .iter()
            .find(|l| l.input == input && l.output == output)
        {
            for (i, j, w) in self.net.group(l.group).synapses() {
                m[i][j] = w;
            }
        }
        m
    }

    pub fn all_plastic_weights(&self) -> impl Iterator<Item = (bool, f64)> + '_ {
        self.excitatory
            .iter()
            .map(|l| (true, l.group))
            .chain(self.inhibitory.iter().map(|l| (false, l.group)))
            .flat_map(move |(exc, g)| self.net.group(g).weights().iter().map(move |&w| (exc, w)))
    }

    fn check_range(what: String, value: f64, codec: &Codec) -> crate::Result<()> {
        if !value.is_finite() || !codec.contains(value) {
            let (min, max) = codec.range();
            return Err(crate::Error::OutOfRange {
                what,
                value,
                min,
                max,
            });
        }
        Ok(())
    }

    fn encode_inputs(&self, theta: &[f64], x_dot: &[f64]) -> crate::Result<WindowInputs> {
        if theta.len() != self.config.n_joint || x_dot.len() != self.config.n_task {
            return Err(crate::Error::config(format!(
                "expected {} joint angles and {} task velocities",
                self.config.n_joint, self.config.n_task
            )));
        }
        let mut w = WindowInputs::new();
        for (k, (_, pop, codec)) in self.inputs.iter().enumerate() {
            let value = if k < self.config.n_joint {
                theta[k]
            } else {
                x_dot[k - self.config.n_joint]
            };
            if !value.is_finite() {
                return Err(crate::Error::NonFiniteInput(format!("input assembly {k}")));
            }
            w.set(*pop, codec.currents(value));
        }
        Ok(w)
    }

    /// One babbling iteration: clamp inputs and outputs to the sample and let
    /// STDP associate them over one window.
    pub fn train_step(&mut self, sample: &DmSample) -> crate::Result<()> {
        for (j, &t) in sample.theta.iter().enumerate() {
            if let Some((_, _, codec)) = self.inputs.get(j) {
                Self::check_range(format!("theta{}", j + 1), t, codec)?;
            }
        }
        for (i, &v) in sample.x_dot.iter().enumerate() {
            if let Some((_, _, codec)) = self.inputs.get(self.config.n_joint + i) {
                Self::check_range(format!("xdot{}", i + 1), v, codec)?;
            }
        }
        if sample.theta_dot.len() != self.config.n_joint {
            return Err(crate::Error::config(
                "sample joint velocity has wrong dimension",
            ));
        }
        for (j, &w) in sample.theta_dot.iter().enumerate() {
            Self::check_range(format!("thetadot{}", j + 1), w, &self.outputs[j].1)?;
        }
        let mut inputs = self.encode_inputs(&sample.theta, &sample.x_dot)?;
        for ((pop, codec), &w) in self.outputs.iter().zip(&sample.theta_dot) {
            inputs.set(*pop, codec.currents(w));
        }
        self.net.reset_activity();
        self.net.set_plasticity(true);
        self.net.run_window(&inputs, self.config.window_ms)?;
        self.trained_samples += 1;
        Ok(())
    }

    /// Joint velocities for the given joint angles and desired task velocity.
    /// Weights are left untouched. A silent output assembly yields 0.
    pub fn infer(&mut self, theta: &[f64], x_dot: &[f64]) -> crate::Result<Vec<f64>> {
        Ok(self.infer_detailed(theta, x_dot)?.theta_dot)
    }

    pub fn infer_detailed(&mut self, theta: &[f64], x_dot: &[f64]) -> crate::Result<DmOutput> {
        let inputs = self.encode_inputs(theta, x_dot)?;
        self.net.reset_activity();
        self.net.set_plasticity(false);
        let spikes = self.net.run_window(&inputs, self.config.window_ms)?;
        let n = self.config.neurons_per_assembly;
        let mut theta_dot = Vec::with_capacity(self.outputs.len());
        let mut rates = Vec::with_capacity(self.outputs.len());
        for (pop, codec) in &self.outputs {
            let r = firing_rates(&spikes, *pop, n, self.config.window_ms);
            theta_dot.push(codec.decode(&r).unwrap_or(0.0));
            rates.push(r);
        }
        Ok(DmOutput {
            theta_dot,
            rates,
            spikes,
        })
    }

    /// Writes every plastic weight as
    /// `pre_assembly,pre_idx,post_assembly,post_idx,weight`. Excitatory rows
    /// come first, then inhibitory rows with a `-` suffix on the post label.
    pub fn write_weights_csv<W: Write>(&self, w: W) -> crate::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "pre_assembly",
            "pre_idx",
            "post_assembly",
            "post_idx",
            "weight",
        ])?;
        for (links, suffix) in [(&self.excitatory, ""), (&self.inhibitory, "-")] {
            for l in links {
                let pre = self.inputs[l.input].0.label();
                let post = format!("{}{}", Assembly::ThetaDot(l.output).label(), suffix);
                for (i, j, weight) in self.net.group(l.group).synapses() {
                    wtr.write_record([
                        pre.clone(),
                        i.to_string(),
                        post.clone(),
                        j.to_string(),
                        format_weight(weight),
                    ])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Loads weights written by [`write_weights_csv`](Self::write_weights_csv).
    pub fn read_weights_csv<R: Read>(&mut self, r: R) -> crate::Result<()> {
        let mut rdr = csv::Reader::from_reader(r);
        for row in rdr.records() {
            let row = row?;
            let field = |k: usize| {
                row.get(k)
                    .ok_or_else(|| crate::Error::Malformed(format!("short row {row:?}")))
            };
            let pre = field(0)?;
            let post = field(2)?;
            let i: usize = parse(field(1)?)?;
            let j: usize = parse(field(3)?)?;
            let weight: f64 = parse(field(4)?)?;
            let (links, post_label) = match post.strip_suffix('-') {
                Some(p) => (&self.inhibitory, p),
                None => (&self.excitatory, post),
            };
            let link = links
                .iter()
                .find(|l| {
                    self.inputs[l.input].0.label() == pre
                        && Assembly::ThetaDot(l.output).label() == post_label
                })
                .copied()
                .ok_or_else(|| {
                    crate::Error::Malformed(format!("unknown projection {pre} -> {post}"))
                })?;
            if !self.net.group_mut(link.group).set_weight(i, j, weight) {
                return Err(crate::Error::Malformed(format!(
                    "no synapse {pre}[{i}] -> {post}[{j}]"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn format_weight(w: f64) -> String {
    // Shortest representation that round-trips exactly.
    format!("{w:?}")
}

fn parse<T: std::str::FromStr>(s: &str) -> crate::Result<T> {
    s.trim()
        .parse()
        .map_err(|_| crate::Error::Malformed(format!("cannot parse `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DmConfig {
        DmConfig {
            neurons_per_assembly: 20,
            ..DmConfig::default()
        }
    }

    #[test]
    fn structure_counts() {
        let dm = DiffMap::build(DmConfig::default(), 1).unwrap();
        assert_eq!(dm.n_input_assemblies(), 4);
        assert_eq!(dm.n_output_assemblies(), 2);
        assert_eq!(dm.n_plastic_synapses(), 2 * (4 * 68) * (2 * 68));
    }

    #[test]
    fn minimal_map() {
        let cfg = DmConfig {
            n_task: 1,
            n_joint: 1,
            theta_ranges: vec![(0.0, 1.0)],
            neurons_per_assembly: 10,
            ..DmConfig::default()
        };
        let dm = DiffMap::build(cfg, 0).unwrap();
        assert_eq!(dm.n_input_assemblies(), 2);
        assert_eq!(dm.n_output_assemblies(), 1);
    }

    #[test]
    fn same_seed_same_initial_weights() {
        let a = DiffMap::build(small(), 42).unwrap();
        let b = DiffMap::build(small(), 42).unwrap();
        let c = DiffMap::build(small(), 43).unwrap();
        let wa: Vec<_> = a.all_plastic_weights().collect();
        assert_eq!(wa, b.all_plastic_weights().collect::<Vec<_>>());
        assert_ne!(wa, c.all_plastic_weights().collect::<Vec<_>>());
        assert!(wa
            .iter()
            .all(|&(exc, w)| if exc { w >= 0.0 } else { w <= 0.0 }));
    }

    #[test]
    fn invalid_configs() {
        let mut c = small();
        c.c_i = 1.0;
        assert!(DiffMap::build(c, 0).is_err());
        let mut c = small();
        c.n_joint = 0;
        assert!(DiffMap::build(c, 0).is_err());
        let mut c = small();
        c.theta_ranges.pop();
        assert!(DiffMap::build(c, 0).is_err());
    }

    #[test]
    fn out_of_range_sample_rejected() {
        let mut dm = DiffMap::build(small(), 0).unwrap();
        let s = DmSample {
            theta: vec![-1.2, 1.8],
            x_dot: vec![0.9, 0.0],
            theta_dot: vec![0.0, 0.0],
        };
        assert!(matches!(
            dm.train_step(&s),
            Err(crate::Error::OutOfRange { .. })
        ));
        assert_eq!(dm.trained_samples(), 0);
    }

    #[test]
    fn lateral_inhibition_grows_with_distance() {
        let dm = DiffMap::build(small(), 0).unwrap();
        let net = dm.network();
        let g = net
            .groups()
            .iter()
            .find(|g| g.spec.label == "thetadot1:lateral")
            .unwrap();
        for d in 1..19 {
            let near = g.weight(0, d).unwrap();
            let far = g.weight(0, d + 1).unwrap();
            assert!(far < near && near < 0.0);
        }
    }

    #[test]
    fn untrained_map_is_nearly_silent() {
        let mut dm = DiffMap::build(DmConfig::default(), 3).unwrap();
        let out = dm.infer(&[-1.2, 1.8], &[0.02, -0.01]).unwrap();
        assert!(out.iter().all(|w| w.abs() < 0.05), "{out:?}");
    }

    #[test]
    fn weights_csv_round_trip() {
        let mut a = DiffMap::build(small(), 5).unwrap();
        a.train_step(&DmSample {
            theta: vec![-1.2, 1.8],
            x_dot: vec![0.05, -0.02],
            theta_dot: vec![0.1, -0.2],
        })
        .unwrap();
        let mut buf = Vec::new();
        a.write_weights_csv(&mut buf).unwrap();
        let mut b = DiffMap::build(small(), 6).unwrap();
        b.read_weights_csv(buf.as_slice()).unwrap();
        assert_eq!(
            a.all_plastic_weights().collect::<Vec<_>>(),
            b.all_plastic_weights().collect::<Vec<_>>()
        );
    }
}
