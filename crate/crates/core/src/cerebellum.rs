//! Cerebellar forward model.
//!
//! Mossy fibres (MF) encode the joint angles, the joint-velocity command and
//! the delayed task-space velocity. Granule cells (GC) draw one afferent from
//! each MF assembly. GC→PC synapses (parallel fibres) are the only plastic
//! site; they change under anti-symmetric STDP, gated by the inferior olive
//! (IO), whose climbing fibres force matched Purkinje cells (PC) to spike.
//! PCs inhibit the deep cerebellar nuclei (DCN), which also receive all MF
//! input. The predicted task-space velocity is read from the rate difference
//! of the positive and negative DCN assemblies of each task DOF.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coding::{Codec, SignedPairDecode};
use crate::snn::{
    current_for_rate, firing_rates, GroupId, GroupSpec, KernelForm, Network, NeuronParams,
    PlasticityRule, PopId, SpikeRecord, Topology, WindowInputs, DEFAULT_DT_MS,
    DEFAULT_PAIRING_WINDOW_MS, WINDOW_MS,
};

/// How teaching and prediction share control cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TeachMode {
    /// One window per cycle: the IO carries the last error while the MF
    /// carries the current context, and the DCN output is the prediction.
    /// Climbing-fibre spikes latch the error-side PCs during that window.
    Combined,
    /// A teaching window on the previous context, then a prediction window
    /// with plasticity off.
    #[default]
    Separate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CbConfig {
    /// Task-space degrees of freedom.
    pub n_ts: usize,
    pub mf_neuron: NeuronParams,
    pub gc_neuron: NeuronParams,
    pub pc_neuron: NeuronParams,
    pub io_neuron: NeuronParams,
    pub dcn_neuron: NeuronParams,
    pub mf_per_assembly: usize,
    /// Size of the whole granule pool.
    pub n_gc: usize,
    pub pc_per_assembly: usize,
    pub io_per_assembly: usize,
    pub dcn_per_assembly: usize,
    pub w_mf_gc: f64,
    pub w_mf_dcn: f64,
    pub p_gc_pc: f64,
    pub w_gc_pc_init: f64,
    pub w_gc_pc_max: f64,
    pub w_io_pc: f64,
    pub w_io_dcn: f64,
    pub w_pc_dcn: f64,
    /// Depression amplitude (post before pre).
    pub stdp_s_a: f64,
    /// Potentiation amplitude (pre before post).
    pub stdp_s_b: f64,
    pub stdp_tau_a: f64,
    pub stdp_tau_b: f64,
    pub stdp_window: f64,
    pub gate_window: f64,
    pub kernel_form: KernelForm,
    /// IO firing rate for a non-zero error (Hz).
    pub io_rate_max: f64,
    /// DCN rate that decodes to full scale (Hz).
    pub dcn_rate_max: f64,
    /// Full-scale predicted velocity per task DOF (m/s).
    pub xdot_max: f64,
    /// Joint-angle encoding ranges, one per joint.
    pub theta_ranges: Vec<(f64, f64)>,
    /// Joint-velocity command encoding range (rad/s).
    pub thetadot_range: (f64, f64),
    /// Sensed task-velocity encoding range (m/s).
    pub xdot_range: (f64, f64),
    /// Current at full MF activation.
    pub mf_gain: f64,
    /// Tonic current into every PC, standing in for basket and stellate
    /// inhibition.
    pub pc_bias: f64,
    /// Tonic current into every DCN.
    pub dcn_bias: f64,
    pub teach_mode: TeachMode,
    pub window_ms: f64,
}

impl Default for CbConfig {
    fn default() -> Self {
        let arm = crate::arm::ArmModel::default();
        Self {
            n_ts: 2,
            mf_neuron: NeuronParams::new(0.1, 0.2, -65.0, 2.0),
            gc_neuron: NeuronParams::new(0.02, 0.25, -65.0, 2.0),
            pc_neuron: NeuronParams::new(1.0, 1.5, -60.0, 0.0),
            io_neuron: NeuronParams::new(0.1, 0.2, -65.0, 2.0),
            dcn_neuron: NeuronParams::new(0.05, 0.1, -65.0, 2.0),
            mf_per_assembly: 20,
            n_gc: 1000,
            pc_per_assembly: 8,
            io_per_assembly: 8,
            dcn_per_assembly: 4,
            w_mf_gc: 1.6,
            w_mf_dcn: 1.0,
            p_gc_pc: 0.8,
            w_gc_pc_init: 0.2,
            w_gc_pc_max: 8.0,
            w_io_pc: 500.0,
            w_io_dcn: 1.7,
            w_pc_dcn: -5.0,
            stdp_s_a: 0.04,
            stdp_s_b: 0.004,
            stdp_tau_a: 20.0,
            stdp_tau_b: 20.0,
            stdp_window: DEFAULT_PAIRING_WINDOW_MS,
            gate_window: 50.0,
            kernel_form: KernelForm::Decaying,
            io_rate_max: 50.0,
            dcn_rate_max: 100.0,
            xdot_max: 0.1,
            theta_ranges: vec![arm.shoulder_limits, arm.elbow_limits],
            thetadot_range: (-arm.max_joint_speed, arm.max_joint_speed),
            xdot_range: (-0.1, 0.1),
            mf_gain: 15.0,
            pc_bias: -64.5,
            dcn_bias: 12.0,
            teach_mode: TeachMode::Separate,
            window_ms: WINDOW_MS,
        }
    }
}

impl CbConfig {
    pub fn n_joint(&self) -> usize {
        self.theta_ranges.len()
    }

    /// Total number of MF assemblies: angle and command per joint plus one
    /// sensed velocity per task DOF.
    pub fn n_mf_assemblies(&self) -> usize {
        2 * self.n_joint() + self.n_ts
    }

    pub fn validate(&self) -> crate::Result<()> {
        let sizes = [
            self.n_ts,
            self.mf_per_assembly,
            self.n_gc,
            self.pc_per_assembly,
            self.io_per_assembly,
            self.dcn_per_assembly,
            self.n_joint(),
        ];
        if sizes.contains(&0) {
            return Err(crate::Error::config("all cerebellar sizes must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.p_gc_pc) {
            return Err(crate::Error::config("GC->PC probability must be in [0, 1]"));
        }
        if !(self.w_gc_pc_max >= self.w_gc_pc_init && self.w_gc_pc_init >= 0.0) {
            return Err(crate::Error::config(
                "need 0 <= PF initial weight <= PF maximum",
            ));
        }
        if !(self.io_rate_max > 0.0 && self.dcn_rate_max > 0.0 && self.xdot_max > 0.0) {
            return Err(crate::Error::config(
                "rates and full-scale velocity must be positive",
            ));
        }
        for p in [
            self.mf_neuron,
            self.gc_neuron,
            self.pc_neuron,
            self.io_neuron,
            self.dcn_neuron,
        ] {
            p.validate()?;
        }
        self.rule(0).validate()
    }

    fn rule(&self, gate: PopId) -> PlasticityRule {
        PlasticityRule::anti_symmetric(
            self.stdp_s_a,
            self.stdp_s_b,
            self.stdp_tau_a,
            self.stdp_tau_b,
        )
        .with_window(self.stdp_window)
        .with_form(self.kernel_form)
        .with_gate(gate, self.gate_window)
    }
}

/// Signed task-space prediction error driving the IO.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeachingSignal {
    pub e_pred: Vec<f64>,
}

impl TeachingSignal {
    pub fn new(e_pred: Vec<f64>) -> crate::Result<Self> {
        if let Some(k) = e_pred.iter().position(|e| !e.is_finite()) {
            return Err(crate::Error::NonFiniteInput(format!("e_pred[{k}]")));
        }
        Ok(Self { e_pred })
    }
}

/// MF context for one cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbContext {
    pub theta: Vec<f64>,
    pub theta_dot_cmd: Vec<f64>,
    pub x_dot_sensed: Vec<f64>,
}

/// Positive and negative assemblies of one task DOF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedPops {
    pub pos: PopId,
    pub neg: PopId,
}

#[derive(Debug, Clone)]
pub struct CbOutput {
    pub x_dot: Vec<f64>,
    /// Per DOF `(positive, negative)` DCN rates (Hz).
    pub dcn_rates: Vec<(Vec<f64>, Vec<f64>)>,
    pub spikes: SpikeRecord,
}

#[derive(Debug, Clone)]
pub struct Cerebellum {
    config: CbConfig,
    net: Network,
    mf: Vec<(PopId, Codec)>,
    gc: PopId,
    pc: Vec<SignedPops>,
    io: Vec<SignedPops>,
    dcn: Vec<SignedPops>,
    /// GC→PC groups per DOF, `(positive, negative)`.
    pf: Vec<(GroupId, GroupId)>,
    io_current: f64,
    decoder: SignedPairDecode,
    learning: bool,
    pending: Option<CbContext>,
}

impl Cerebellum {
    pub fn build(config: CbConfig, seed: u64) -> crate::Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network::new(DEFAULT_DT_MS)?;
        let n_mf = config.mf_per_assembly;

        let mut mf = Vec::with_capacity(config.n_mf_assemblies());
        let codec =
            |lo: f64, hi: f64| Codec::new(lo, hi, n_mf).map(|c| c.with_gain(config.mf_gain));
        for (j, &(lo, hi)) in config.theta_ranges.iter().enumerate() {
            let pop =
                net.add_population(format!("mf_theta{}", j + 1), config.mf_neuron, n_mf, 0.0)?;
            mf.push((pop, codec(lo, hi)?));
        }
        for j in 0..config.n_joint() {
            let (lo, hi) = config.thetadot_range;
            let pop =
                net.add_population(format!("mf_thetadot{}", j + 1), config.mf_neuron, n_mf, 0.0)?;
            mf.push((pop, codec(lo, hi)?));
        }
        for i in 0..config.n_ts {
            let (lo, hi) = config.xdot_range;
            let pop =
                net.add_population(format!("mf_xdot{}", i + 1), config.mf_neuron, n_mf, 0.0)?;
            mf.push((pop, codec(lo, hi)?));
        }

        let gc = net.add_population("gc", config.gc_neuron, config.n_gc, 0.0)?;
        let signed = |net: &mut Network,
                      area: &str,
                      params,
                      size,
                      bias|
         -> crate::Result<Vec<SignedPops>> {
            (0..config.n_ts)
                .map(|i| {
                    Ok(SignedPops {
                        pos: net.add_population(format!("{area}{}+", i + 1), params, size, bias)?,
                        neg: net.add_population(format!("{area}{}-", i + 1), params, size, bias)?,
                    })
                })
                .collect()
        };
        let pc = signed(
            &mut net,
            "pc",
            config.pc_neuron,
            config.pc_per_assembly,
            config.pc_bias,
        )?;
        let io = signed(
            &mut net,
            "io",
            config.io_neuron,
            config.io_per_assembly,
            0.0,
        )?;
        let dcn = signed(
            &mut net,
            "dcn",
            config.dcn_neuron,
            config.dcn_per_assembly,
            config.dcn_bias,
        )?;

        for &(pop, _) in &mf {
            let label = format!("{}->gc", net.population(pop).label);
            let spec = GroupSpec::fixed(label, pop, gc, Topology::RandomFanIn(1));
            let w = config.w_mf_gc;
            net.add_group(spec, &mut rng, |_, _, _| w)?;
        }
        let pairs = |d: usize| {
            [
                (pc[d].pos, io[d].pos, dcn[d].pos),
                (pc[d].neg, io[d].neg, dcn[d].neg),
            ]
        };
        let mut pf = Vec::with_capacity(config.n_ts);
        for d in 0..config.n_ts {
            let mut ids = [0; 2];
            for (k, (p, o, n)) in pairs(d).into_iter().enumerate() {
                for &(m, _) in &mf {
                    let label = format!("{}->{}", net.population(m).label, net.population(n).label);
                    let spec = GroupSpec::fixed(label, m, n, Topology::AllToAll);
                    let w = config.w_mf_dcn;
                    net.add_group(spec, &mut rng, |_, _, _| w)?;
                }
                let label = format!("gc->{}", net.population(p).label);
                let spec = GroupSpec::fixed(label, gc, p, Topology::Probabilistic(config.p_gc_pc))
                    .plastic(config.rule(o), 0.0, config.w_gc_pc_max);
                let w0 = config.w_gc_pc_init;
                ids[k] = net.add_group(spec, &mut rng, |_, _, _| w0)?;
                for (pre, post, w) in [
                    (o, p, config.w_io_pc),
                    (o, n, config.w_io_dcn),
                    (p, n, config.w_pc_dcn),
                ] {
                    let label = format!(
                        "{}->{}",
                        net.population(pre).label,
                        net.population(post).label
                    );
                    let spec = GroupSpec::fixed(label, pre, post, Topology::OneToOne);
                    net.add_group(spec, &mut rng, |_, _, _| w)?;
                }
            }
            pf.push((ids[0], ids[1]));
        }

        let io_current = current_for_rate(&config.io_neuron, config.io_rate_max, DEFAULT_DT_MS)?;
        let decoder = SignedPairDecode::new(
            config.dcn_per_assembly,
            config.dcn_rate_max,
            config.xdot_max,
        )?;
        // Keep the RNG stream independent of later calls.
        let _ = rng.random::<u64>();
        Ok(Self {
            config,
            net,
            mf,
            gc,
            pc,
            io,
            dcn,
            pf,
            io_current,
            decoder,
            learning: true,
            pending: None,
        })
    }

    pub fn config(&self) -> &CbConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn gc(&self) -> PopId {
        self.gc
    }

    pub fn pc(&self) -> &[SignedPops] {
        &self.pc
    }

    pub fn io(&self) -> &[SignedPops] {
        &self.io
    }

    pub fn dcn(&self) -> &[SignedPops] {
        &self.dcn
    }

    pub fn mf(&self) -> impl Iterator<Item = PopId> + '_ {
        self.mf.iter().map(|(p, _)| *p)
    }

    /// Current that drives an IO neuron at the configured maximum rate.
    pub fn io_current(&self) -> f64 {
        self.io_current
    }

    pub fn set_learning(&mut self, on: bool) {
        self.learning = on;
    }

    pub fn learning(&self) -> bool {
        self.learning
    }

    /// GC→PC groups per DOF, `(positive, negative)`.
    pub fn pf_groups(&self) -> &[(GroupId, GroupId)] {
        &self.pf
    }

    pub fn pf_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.pf
            .iter()
            .flat_map(|&(p, n)| [p, n])
            .flat_map(move |g| self.net.group(g).weights().iter().copied())
    }

    /// Resets every PF weight to its initial value.
    pub fn reset_weights(&mut self) {
        let w0 = self.config.w_gc_pc_init;
        for &(p, n) in &self.pf.clone() {
            for g in [p, n] {
                let len = self.net.group(g).len();
                // Values are within bounds, so this cannot fail.
                let _ = self.net.group_mut(g).set_weights(&vec![w0; len]);
            }
        }
    }

    /// Returns every neuron to rest and forgets the stored context. Weights
    /// are kept.
    pub fn reset_activity(&mut self) {
        self.net.reset_activity();
        self.pending = None;
    }

    fn encode_mf(&self, ctx: &CbContext, inputs: &mut WindowInputs) -> crate::Result<()> {
        let nj = self.config.n_joint();
        if ctx.theta.len() != nj
            || ctx.theta_dot_cmd.len() != nj
            || ctx.x_dot_sensed.len() != self.config.n_ts
        {
            return Err(crate::Error::config(
                "cerebellar context has wrong dimensions",
            ));
        }
        let values = ctx
            .theta
            .iter()
            .chain(&ctx.theta_dot_cmd)
            .chain(&ctx.x_dot_sensed);
        for (k, ((pop, codec), &v)) in self.mf.iter().zip(values).enumerate() {
            if !v.is_finite() {
                return Err(crate::Error::NonFiniteInput(format!("MF assembly {k}")));
            }
            inputs.set(*pop, codec.currents(v));
        }
        Ok(())
    }

    fn encode_io(&self, signal: &TeachingSignal, inputs: &mut WindowInputs) -> crate::Result<()> {
        if signal.e_pred.len() != self.config.n_ts {
            return Err(crate::Error::config("teaching signal has wrong dimension"));
        }
        if let Some(k) = signal.e_pred.iter().position(|e| !e.is_finite()) {
            return Err(crate::Error::NonFiniteInput(format!("e_pred[{k}]")));
        }
        let n = self.config.io_per_assembly;
        for (io, &e) in self.io.iter().zip(&signal.e_pred) {
            let on = vec![self.io_current; n];
            let off = vec![0.0; n];
            let (pos, neg) = if e > 0.0 {
                (on, off)
            } else if e < 0.0 {
                (off, on)
            } else {
                (off.clone(), off)
            };
            inputs.set(io.pos, pos);
            inputs.set(io.neg, neg);
        }
        Ok(())
    }

    /// Runs one window from rest. PCs are bistable, so activity carried over
    /// would keep every latched PC on regardless of its input.
    fn run(&mut self, inputs: &WindowInputs, plastic: bool) -> crate::Result<CbOutput> {
        self.net.reset_activity();
        self.net.set_plasticity(plastic);
        let spikes = self.net.run_window(inputs, self.config.window_ms)?;
        self.net.set_plasticity(false);
        Ok(self.decode(spikes))
    }

    /// Decodes a raster of this network into per-DOF velocities.
    pub fn decode(&self, spikes: SpikeRecord) -> CbOutput {
        let n = self.config.dcn_per_assembly;
        let w = self.config.window_ms;
        let mut x_dot = Vec::with_capacity(self.dcn.len());
        let mut dcn_rates = Vec::with_capacity(self.dcn.len());
        for d in &self.dcn {
            let pos = firing_rates(&spikes, d.pos, n, w);
            let neg = firing_rates(&spikes, d.neg, n, w);
            x_dot.push(self.decoder.decode(&pos, &neg));
            dcn_rates.push((pos, neg));
        }
        CbOutput {
            x_dot,
            dcn_rates,
            spikes,
        }
    }

    /// Predicted task-space velocity for a context, plasticity off.
    pub fn predict(&mut self, ctx: &CbContext) -> crate::Result<CbOutput> {
        let mut inputs = WindowInputs::new();
        self.encode_mf(ctx, &mut inputs)?;
        let out = self.run(&inputs, false)?;
        self.pending = Some(ctx.clone());
        Ok(out)
    }

    /// One teaching window on the context of the last prediction. The IO
    /// assembly matching the sign of each error component fires at the
    /// maximum rate; its climbing fibres evoke PC spikes and open the gate on
    /// the matched PF synapses.
    pub fn teach(&mut self, signal: &TeachingSignal) -> crate::Result<CbOutput> {
        let mut inputs = WindowInputs::new();
        self.encode_io(signal, &mut inputs)?;
        if let Some(ctx) = self.pending.clone() {
            self.encode_mf(&ctx, &mut inputs)?;
        }
        self.run(&inputs, self.learning)
    }

    /// Teaching and prediction in a single window: the IO carries `signal`
    /// while the MF carry `ctx`. Plasticity follows the learning switch.
    pub fn teach_and_predict(
        &mut self,
        signal: &TeachingSignal,
        ctx: &CbContext,
    ) -> crate::Result<CbOutput> {
        let mut inputs = WindowInputs::new();
        self.encode_io(signal, &mut inputs)?;
        self.encode_mf(ctx, &mut inputs)?;
        let out = self.run(&inputs, self.learning)?;
        self.pending = Some(ctx.clone());
        Ok(out)
    }

    /// One control cycle according to the configured [`TeachMode`].
    pub fn cycle(
        &mut self,
        signal: Option<&TeachingSignal>,
        ctx: &CbContext,
    ) -> crate::Result<CbOutput> {
        match (signal, self.config.teach_mode) {
            (None, _) => self.predict(ctx),
            (Some(s), TeachMode::Combined) => self.teach_and_predict(s, ctx),
            (Some(s), TeachMode::Separate) => {
                if self.learning && self.pending.is_some() {
                    self.teach(s)?;
                }
                self.predict(ctx)
            }
        }
    }

    /// PF weights as `pre_assembly,pre_idx,post_assembly,post_idx,weight`.
    pub fn write_weights_csv<W: Write>(&self, w: W) -> crate::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "pre_assembly",
            "pre_idx",
            "post_assembly",
            "post_idx",
            "weight",
        ])?;
        for &(p, n) in &self.pf {
            for g in [p, n] {
                let group = self.net.group(g);
                let post = &self.net.population(group.spec.post).label;
                for (i, j, weight) in group.synapses() {
                    wtr.write_record([
                        "gc",
                        &i.to_string(),
                        post,
                        &j.to_string(),
                        &crate::diffmap::format_weight(weight),
                    ])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_weights_csv<R: Read>(&mut self, r: R) -> crate::Result<()> {
        let mut rdr = csv::Reader::from_reader(r);
        for row in rdr.records() {
            let row = row?;
            if row.len() < 5 {
                return Err(crate::Error::Malformed(format!("short row {row:?}")));
            }
            let num = |k: usize| -> crate::Result<usize> {
                row[k]
                    .trim()
                    .parse()
                    .map_err(|_| crate::Error::Malformed(format!("bad index `{}`", &row[k])))
            };
            let (i, j) = (num(1)?, num(3)?);
            let weight: f64 = row[4]
                .trim()
                .parse()
                .map_err(|_| crate::Error::Malformed(format!("bad weight `{}`", &row[4])))?;
            let post = &row[2];
            let g = self
                .pf
                .iter()
                .flat_map(|&(p, n)| [p, n])
                .find(|&g| self.net.population(self.net.group(g).spec.post).label == post)
                .ok_or_else(|| crate::Error::Malformed(format!("unknown PF target `{post}`")))?;
            if !self.net.group_mut(g).set_weight(i, j, weight) {
                return Err(crate::Error::Malformed(format!(
                    "no PF synapse gc[{i}] -> {post}[{j}]"
                )));
            }
        }
        Ok(())
    }
}

/// DCN raster as `population,neuron,t_ms`, DCN populations only.
pub fn write_dcn_raster<W: Write>(
    cb: &Cerebellum,
    spikes: &SpikeRecord,
    offset_ms: f64,
    w: W,
) -> crate::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["population", "neuron", "t_ms"])?;
    for d in cb.dcn() {
        for pop in [d.pos, d.neg] {
            let label = &cb.network().population(pop).label;
            for &(i, t) in spikes.spikes(pop) {
                wtr.write_record([label.as_str(), &i.to_string(), &(t + offset_ms).to_string()])?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> CbContext {
        CbContext {
            theta: vec![-1.2, 1.8],
            theta_dot_cmd: vec![0.1, -0.1],
            x_dot_sensed: vec![0.02, 0.0],
        }
    }

    #[test]
    fn structure() {
        let cb = Cerebellum::build(CbConfig::default(), 1).unwrap();
        assert_eq!(cb.pc().len(), 2);
        assert_eq!(cb.io().len(), 2);
        assert_eq!(cb.dcn().len(), 2);
        assert_eq!(cb.mf().count(), 6);
        let net = cb.network();
        let mut fan_in = vec![0usize; 1000];
        for g in net.groups().iter().filter(|g| g.spec.post == cb.gc()) {
            for (_, j, w) in g.synapses() {
                fan_in[j] += 1;
                assert_eq!(w, 1.6);
            }
        }
        assert!(fan_in.iter().all(|&k| k == 6));
    }

    #[test]
    fn same_seed_same_mask() {
        let a = Cerebellum::build(CbConfig::default(), 9).unwrap();
        let b = Cerebellum::build(CbConfig::default(), 9).unwrap();
        let c = Cerebellum::build(CbConfig::default(), 10).unwrap();
        let mask = |cb: &Cerebellum| -> Vec<(usize, usize)> {
            let (p, _) = cb.pf_groups()[0];
            cb.network()
                .group(p)
                .synapses()
                .map(|(i, j, _)| (i, j))
                .collect()
        };
        assert_eq!(mask(&a), mask(&b));
        assert_ne!(mask(&a), mask(&c));
    }

    #[test]
    fn io_current_calibrated() {
        let cb = Cerebellum::build(CbConfig::default(), 1).unwrap();
        assert!(cb.io_current() > 0.0);
    }

    #[test]
    fn non_finite_error_rejected() {
        assert!(TeachingSignal::new(vec![f64::NAN, 0.0]).is_err());
        let mut cb = Cerebellum::build(CbConfig::default(), 1).unwrap();
        let bad = TeachingSignal {
            e_pred: vec![0.0, f64::INFINITY],
        };
        assert!(matches!(
            cb.teach(&bad),
            Err(crate::Error::NonFiniteInput(_))
        ));
    }

    #[test]
    fn zero_error_changes_nothing() {
        let mut cb = Cerebellum::build(CbConfig::default(), 2).unwrap();
        let before: Vec<f64> = cb.pf_weights().collect();
        cb.predict(&ctx()).unwrap();
        cb.teach(&TeachingSignal::new(vec![0.0, 0.0]).unwrap())
            .unwrap();
        cb.teach_and_predict(&TeachingSignal::new(vec![0.0, 0.0]).unwrap(), &ctx())
            .unwrap();
        assert_eq!(before, cb.pf_weights().collect::<Vec<_>>());
    }

    #[test]
    fn pf_csv_round_trip() {
        let mut a = Cerebellum::build(CbConfig::default(), 3).unwrap();
        a.predict(&ctx()).unwrap();
        a.teach(&TeachingSignal::new(vec![0.05, -0.05]).unwrap())
            .unwrap();
        let mut buf = Vec::new();
        a.write_weights_csv(&mut buf).unwrap();
        let mut b = Cerebellum::build(CbConfig::default(), 3).unwrap();
        b.read_weights_csv(buf.as_slice()).unwrap();
        assert_eq!(
            a.pf_weights().collect::<Vec<_>>(),
            b.pf_weights().collect::<Vec<_>>()
        );
    }
}
