//! Clocked network of Izhikevich populations.
//!
//! Every simulation step each neuron integrates `bias + external input +
//! synaptic input`. A spike emitted at step `k` adds the synaptic weight to
//! the target's input current during step `k + 1` only.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::neuron::{advance, NeuronParams, NeuronState};
use super::plasticity::PlasticityRule;
use super::record::SpikeRecord;
use super::{GroupId, PopId};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Population {
    pub label: String,
    pub params: NeuronParams,
    pub states: Vec<NeuronState>,
    /// Tonic current added every step.
    pub bias: f64,
}

impl Population {
    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn reset_to_rest(&mut self) {
        let rest = NeuronState::at_rest(&self.params);
        self.states.iter_mut().for_each(|s| *s = rest);
    }
}

/// Connection pattern from a pre population onto a post population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "p", rename_all = "kebab-case")]
pub enum Topology {
    /// Pre neuron `i` projects to post neuron `i * n_post / n_pre`.
    OneToOne,
    AllToAll,
    /// Every post neuron receives exactly `k` distinct random pre neurons.
    RandomFanIn(usize),
    /// Every pre/post pair is connected independently with probability `p`.
    Probabilistic(f64),
}

impl Topology {
    fn pairs<R: Rng + ?Sized>(
        &self,
        n_pre: usize,
        n_post: usize,
        rng: &mut R,
    ) -> crate::Result<Vec<(u32, u32)>> {
        let mut out = Vec::new();
        match *self {
            Topology::OneToOne => {
                for i in 0..n_pre {
                    out.push((i as u32, (i * n_post / n_pre) as u32));
                }
            }
            Topology::AllToAll => {
                for i in 0..n_pre {
                    for j in 0..n_post {
                        out.push((i as u32, j as u32));
                    }
                }
            }
            Topology::RandomFanIn(k) => {
                if k > n_pre {
                    return Err(crate::Error::config(format!(
                        "fan-in {k} exceeds pre population size {n_pre}"
                    )));
                }
                for j in 0..n_post {
                    let mut chosen: Vec<usize> = sample(rng, n_pre, k).into_vec();
                    chosen.sort_unstable();
                    out.extend(chosen.into_iter().map(|i| (i as u32, j as u32)));
                }
            }
            Topology::Probabilistic(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(crate::Error::config(format!(
                        "connection probability {p} not in [0,1]"
                    )));
                }
                for i in 0..n_pre {
                    for j in 0..n_post {
                        if rng.random::<f64>() < p {
                            out.push((i as u32, j as u32));
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }
}

/// Description of a synapse group before wiring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub label: String,
    pub pre: PopId,
    pub post: PopId,
    pub topology: Topology,
    pub w_min: f64,
    pub w_max: f64,
    pub rule: PlasticityRule,
}

impl GroupSpec {
    pub fn fixed(label: impl Into<String>, pre: PopId, post: PopId, topology: Topology) -> Self {
        Self {
            label: label.into(),
            pre,
            post,
            topology,
            w_min: f64::NEG_INFINITY,
            w_max: f64::INFINITY,
            rule: PlasticityRule::none(),
        }
    }

    pub fn plastic(mut self, rule: PlasticityRule, w_min: f64, w_max: f64) -> Self {
        self.rule = rule;
        self.w_min = w_min;
        self.w_max = w_max;
        self
    }
}

/// Weighted connections between two populations. Synapses are stored sorted
/// by `(pre, post)`; `by_post` indexes them in post order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynapseGroup {
    pub spec: GroupSpec,
    pre_idx: Vec<u32>,
    post_idx: Vec<u32>,
    weights: Vec<f64>,
    out_start: Vec<usize>,
    in_start: Vec<usize>,
    by_post: Vec<u32>,
}

impl SynapseGroup {
    fn build(
        spec: GroupSpec,
        pairs: Vec<(u32, u32)>,
        n_pre: usize,
        n_post: usize,
        weights: Vec<f64>,
    ) -> Self {
        let mut out_start = vec![0usize; n_pre + 1];
        let mut in_count = vec![0usize; n_post + 1];
        for &(i, j) in &pairs {
            out_start[i as usize + 1] += 1;
            in_count[j as usize + 1] += 1;
        }
        for k in 0..n_pre {
            out_start[k + 1] += out_start[k];
        }
        let mut in_start = in_count;
        for k in 0..n_post {
            in_start[k + 1] += in_start[k];
        }
        let mut fill = in_start.clone();
        let mut by_post = vec![0u32; pairs.len()];
        for (s, &(_, j)) in pairs.iter().enumerate() {
            by_post[fill[j as usize]] = s as u32;
            fill[j as usize] += 1;
        }
        let (pre_idx, post_idx) = pairs.into_iter().unzip();
        Self {
            spec,
            pre_idx,
            post_idx,
            weights,
            out_start,
            in_start,
            by_post,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(pre, post, weight)` for every synapse.
    pub fn synapses(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.pre_idx
            .iter()
            .zip(&self.post_idx)
            .zip(&self.weights)
            .map(|((&i, &j), &w)| (i as usize, j as usize, w))
    }

    /// Post neurons targeted by `pre`.
    pub fn targets(&self, pre: usize) -> impl Iterator<Item = usize> + '_ {
        self.post_idx[self.out_start[pre]..self.out_start[pre + 1]]
            .iter()
            .map(|&j| j as usize)
    }

    /// Pre neurons converging on `post`.
    pub fn sources(&self, post: usize) -> impl Iterator<Item = usize> + '_ {
        self.by_post[self.in_start[post]..self.in_start[post + 1]]
            .iter()
            .map(|&s| self.pre_idx[s as usize] as usize)
    }

    pub fn weight(&self, pre: usize, post: usize) -> Option<f64> {
        let range = self.out_start[pre]..self.out_start[pre + 1];
        let slice = &self.post_idx[range.clone()];
        slice
            .binary_search(&(post as u32))
            .ok()
            .map(|k| self.weights[range.start + k])
    }

    /// Overwrites weights in storage order; values are clamped to the bounds.
    pub fn set_weights(&mut self, weights: &[f64]) -> crate::Result<()> {
        if weights.len() != self.weights.len() {
            return Err(crate::Error::Malformed(format!(
                "group `{}` has {} synapses, got {} weights",
                self.spec.label,
                self.weights.len(),
                weights.len()
            )));
        }
        for (w, &x) in self.weights.iter_mut().zip(weights) {
            *w = x.clamp(self.spec.w_min, self.spec.w_max);
        }
        Ok(())
    }

    /// Sets the weight of an existing connection. Returns false if absent.
    pub fn set_weight(&mut self, pre: usize, post: usize, w: f64) -> bool {
        let range = self.out_start[pre]..self.out_start[pre + 1];
        match self.post_idx[range.clone()].binary_search(&(post as u32)) {
            Ok(k) => {
                self.weights[range.start + k] = w.clamp(self.spec.w_min, self.spec.w_max);
                true
            }
            Err(_) => false,
        }
    }

    #[inline]
    fn bump(&mut self, s: usize, delta: f64) {
        let w = &mut self.weights[s];
        *w = (*w + delta).clamp(self.spec.w_min, self.spec.w_max);
    }
}

/// External per-neuron currents held constant over a window.
#[derive(Debug, Clone, Default)]
pub struct WindowInputs {
    currents: Vec<(PopId, Vec<f64>)>,
}

impl WindowInputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, pop: PopId, currents: Vec<f64>) -> &mut Self {
        match self.currents.iter_mut().find(|(p, _)| *p == pop) {
            Some(slot) => slot.1 = currents,
            None => self.currents.push((pop, currents)),
        }
        self
    }

    pub fn get(&self, pop: PopId) -> Option<&[f64]> {
        self.currents
            .iter()
            .find(|(p, _)| *p == pop)
            .map(|(_, c)| c.as_slice())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    dt: f64,
    steps_done: u64,
    plasticity_enabled: bool,
    populations: Vec<Population>,
    groups: Vec<SynapseGroup>,
    /// Synaptic current arriving during the next step, per population.
    syn_next: Vec<Vec<f64>>,
    last_spike: Vec<Vec<f64>>,
    prev_spike: Vec<Vec<f64>>,
    pop_last_spike: Vec<f64>,
    groups_by_pre: Vec<Vec<GroupId>>,
    groups_by_post: Vec<Vec<GroupId>>,
}

impl Network {
    pub fn new(dt: f64) -> crate::Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(crate::Error::config(format!(
                "dt must be positive, got {dt}"
            )));
        }
        Ok(Self {
            dt,
            steps_done: 0,
            plasticity_enabled: true,
            populations: Vec::new(),
            groups: Vec::new(),
            syn_next: Vec::new(),
            last_spike: Vec::new(),
            prev_spike: Vec::new(),
            pop_last_spike: Vec::new(),
            groups_by_pre: Vec::new(),
            groups_by_post: Vec::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Simulated time in ms.
    pub fn time_ms(&self) -> f64 {
        self.steps_done as f64 * self.dt
    }

    pub fn add_population(
        &mut self,
        label: impl Into<String>,
        params: NeuronParams,
        size: usize,
        bias: f64,
    ) -> crate::Result<PopId> {
        let label = label.into();
        params.validate()?;
        if size == 0 {
            return Err(crate::Error::config(format!(
                "population `{label}` must have at least one neuron"
            )));
        }
        let rest = NeuronState::at_rest(&params);
        self.populations.push(Population {
            label,
            params,
            states: vec![rest; size],
            bias,
        });
        self.syn_next.push(vec![0.0; size]);
        self.last_spike.push(vec![f64::NEG_INFINITY; size]);
        self.prev_spike.push(vec![f64::NEG_INFINITY; size]);
        self.pop_last_spike.push(f64::NEG_INFINITY);
        self.groups_by_pre.push(Vec::new());
        self.groups_by_post.push(Vec::new());
        Ok(self.populations.len() - 1)
    }

    /// Wires a group. `init(pre, post, rng)` supplies each initial weight.
    pub fn add_group<R, F>(
        &mut self,
        spec: GroupSpec,
        rng: &mut R,
        mut init: F,
    ) -> crate::Result<GroupId>
    where
        R: Rng + ?Sized,
        F: FnMut(usize, usize, &mut R) -> f64,
    {
        let n_pre = self.pop(spec.pre)?.size();
        let n_post = self.pop(spec.post)?.size();
        if let Some(g) = spec.rule.gate {
            self.pop(g.population)?;
        }
        spec.rule.validate()?;
        if !(spec.w_min <= spec.w_max) {
            return Err(crate::Error::config(format!(
                "group `{}`: w_min > w_max",
                spec.label
            )));
        }
        let pairs = spec.topology.pairs(n_pre, n_post, rng)?;
        let weights = pairs
            .iter()
            .map(|&(i, j)| init(i as usize, j as usize, rng).clamp(spec.w_min, spec.w_max))
            .collect();
        let (pre, post) = (spec.pre, spec.post);
        self.groups
            .push(SynapseGroup::build(spec, pairs, n_pre, n_post, weights));
        let id = self.groups.len() - 1;
        self.groups_by_pre[pre].push(id);
        self.groups_by_post[post].push(id);
        Ok(id)
    }

    fn pop(&self, id: PopId) -> crate::Result<&Population> {
        self.populations
            .get(id)
            .ok_or_else(|| crate::Error::config(format!("unknown population id {id}")))
    }

    pub fn population(&self, id: PopId) -> &Population {
        &self.populations[id]
    }

    pub fn population_mut(&mut self, id: PopId) -> &mut Population {
        &mut self.populations[id]
    }

    pub fn populations(&self) -> &[Population] {
        &self.populations
    }

    pub fn group(&self, id: GroupId) -> &SynapseGroup {
        &self.groups[id]
    }

    pub fn group_mut(&mut self, id: GroupId) -> &mut SynapseGroup {
        &mut self.groups[id]
    }

    pub fn groups(&self) -> &[SynapseGroup] {
        &self.groups
    }

    pub fn find_population(&self, label: &str) -> Option<PopId> {
        self.populations.iter().position(|p| p.label == label)
    }

    pub fn labels(&self) -> Vec<String> {
        self.populations.iter().map(|p| p.label.clone()).collect()
    }

    pub fn set_plasticity(&mut self, enabled: bool) {
        self.plasticity_enabled = enabled;
    }

    pub fn plasticity_enabled(&self) -> bool {
        self.plasticity_enabled
    }

    /// Puts every neuron at rest and forgets in-flight spikes and spike history.
    /// Weights and the clock are kept.
    pub fn reset_activity(&mut self) {
        for p in &mut self.populations {
            p.reset_to_rest();
        }
        self.syn_next
            .iter_mut()
            .for_each(|v| v.iter_mut().for_each(|x| *x = 0.0));
        self.last_spike
            .iter_mut()
            .chain(self.prev_spike.iter_mut())
            .for_each(|v| v.iter_mut().for_each(|x| *x = f64::NEG_INFINITY));
        self.pop_last_spike
            .iter_mut()
            .for_each(|x| *x = f64::NEG_INFINITY);
    }

    /// Simulates `duration_ms` with constant external inputs and returns every
    /// spike emitted. Plastic groups update while plasticity is enabled.
    pub fn run_window(
        &mut self,
        inputs: &WindowInputs,
        duration_ms: f64,
    ) -> crate::Result<SpikeRecord> {
        let steps = duration_ms / self.dt;
        let n_steps = steps.round();
        if !(duration_ms > 0.0) || (steps - n_steps).abs() > 1e-9 {
            return Err(crate::Error::config(format!(
                "window of {duration_ms} ms is not a positive multiple of dt = {}",
                self.dt
            )));
        }
        for (pop, currents) in &inputs.currents {
            let size = self.pop(*pop)?.size();
            if currents.len() != size {
                return Err(crate::Error::config(format!(
                    "input for `{}` has {} entries, population has {size}",
                    self.populations[*pop].label,
                    currents.len()
                )));
            }
            if let Some(k) = currents.iter().position(|c| !c.is_finite()) {
                return Err(crate::Error::NonFiniteInput(format!(
                    "current {k} of `{}`",
                    self.populations[*pop].label
                )));
            }
        }
        let mut record = SpikeRecord::new(self.labels());
        let mut fired: Vec<(PopId, usize)> = Vec::new();
        for _ in 0..n_steps as u64 {
            self.step(inputs, &mut fired, &mut record)?;
        }
        Ok(record)
    }

    fn step(
        &mut self,
        inputs: &WindowInputs,
        fired: &mut Vec<(PopId, usize)>,
        record: &mut SpikeRecord,
    ) -> crate::Result<()> {
        let t = self.time_ms();
        let dt = self.dt;
        fired.clear();
        for (p, pop) in self.populations.iter_mut().enumerate() {
            let ext = inputs.get(p);
            let syn = &mut self.syn_next[p];
            let params = pop.params;
            for (i, state) in pop.states.iter_mut().enumerate() {
                state.i_ext = pop.bias + syn[i] + ext.map_or(0.0, |e| e[i]);
                syn[i] = 0.0;
                if advance(state, &params, dt) {
                    fired.push((p, i));
                }
                if !state.is_finite() {
                    return Err(crate::Error::NonFinite {
                        population: pop.label.clone(),
                        neuron: i,
                        t_ms: t,
                    });
                }
            }
        }

        for &(p, i) in fired.iter() {
            record.push(p, i, t);
            self.prev_spike[p][i] = self.last_spike[p][i];
            self.last_spike[p][i] = t;
            self.pop_last_spike[p] = t;
        }

        // Delivery during the next step.
        for &(p, i) in fired.iter() {
            for &g in &self.groups_by_pre[p] {
                let group = &self.groups[g];
                let post = group.spec.post;
                let range = group.out_start[i]..group.out_start[i + 1];
                let buf = &mut self.syn_next[post];
                for s in range {
                    buf[group.post_idx[s] as usize] += group.weights[s];
                }
            }
        }

        if self.plasticity_enabled {
            self.apply_plasticity(fired, t);
        }
        self.steps_done += 1;
        Ok(())
    }

    fn gate_open(&self, rule: &PlasticityRule, t: f64) -> bool {
        match rule.gate {
            None => true,
            Some(g) => t - self.pop_last_spike[g.population] <= g.window_ms,
        }
    }

    /// Nearest-neighbour pairing: each post spike pairs with the latest pre
    /// spike of every afferent (`dt >= 0`) and with the first pre spike that
    /// follows it (`dt < 0`).
    fn apply_plasticity(&mut self, fired: &[(PopId, usize)], t: f64) {
        for &(p, i) in fired {
            for gi in 0..self.groups_by_post[p].len() {
                let g = self.groups_by_post[p][gi];
                let rule = self.groups[g].spec.rule;
                if !rule.is_plastic() || !self.gate_open(&rule, t) {
                    continue;
                }
                let pre_pop = self.groups[g].spec.pre;
                let group = &mut self.groups[g];
                let last_pre = &self.last_spike[pre_pop];
                for k in group.in_start[i]..group.in_start[i + 1] {
                    let s = group.by_post[k] as usize;
                    let t_pre = last_pre[group.pre_idx[s] as usize];
                    let lag = t - t_pre;
                    if lag <= rule.window_ms {
                        group.bump(s, rule.delta(lag));
                    }
                }
            }
            for gi in 0..self.groups_by_pre[p].len() {
                let g = self.groups_by_pre[p][gi];
                let rule = self.groups[g].spec.rule;
                if !rule.is_plastic() || !self.gate_open(&rule, t) {
                    continue;
                }
                let post_pop = self.groups[g].spec.post;
                let t_prev = self.prev_spike[p][i];
                let group = &mut self.groups[g];
                let last_post = &self.last_spike[post_pop];
                for s in group.out_start[i]..group.out_start[i + 1] {
                    let t_post = last_post[group.post_idx[s] as usize];
                    if t_post < t && t_post > t_prev && t - t_post <= rule.window_ms {
                        group.bump(s, rule.delta(t_post - t));
                    }
                }
            }
        }
    }
}
