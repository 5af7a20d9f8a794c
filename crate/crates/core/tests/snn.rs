mod common;

use cerebellar_servo::snn::{
    firing_rates, stdp_delta_antisymmetric, stdp_delta_symmetric, step_neuron, tonic_spike_count,
    GroupSpec, Network, NeuronParams, NeuronState, PlasticityRule, SpikeRecord, Topology,
    WindowInputs, SPIKE_THRESHOLD_MV,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RS: NeuronParams = NeuronParams::REGULAR_SPIKING;

#[test]
fn fixed_point_is_unchanged() {
    let s = NeuronState::new(-70.0, -14.0);
    let (next, spiked) = step_neuron(&s, &RS, 1.0).unwrap();
    assert!(!spiked);
    assert_eq!((next.v, next.u), (-70.0, -14.0));
}

#[test]
fn threshold_crossing_resets() {
    let p = NeuronParams::new(0.02, 0.2, -65.0, 2.0);
    let (next, spiked) = step_neuron(&NeuronState::new(31.0, 5.0), &p, 1.0).unwrap();
    assert!(spiked);
    assert_eq!((next.v, next.u), (-65.0, 7.0));
}

#[test]
fn tonic_rate_matches_fine_reference() {
    let ours = tonic_spike_count(&RS, 10.0, 1000.0, 1.0) as i64;
    let reference = common::reference_spike_count(0.02, 0.2, -65.0, 8.0, 10.0, 1000.0, 0.01) as i64;
    assert!(reference > 0);
    assert!(
        (ours - reference).abs() <= 1,
        "ours {ours}, reference {reference}"
    );
}

#[test]
fn rest_state_never_fires() {
    for p in [
        RS,
        NeuronParams::new(0.02, 0.25, -65.0, 2.0),
        NeuronParams::new(0.1, 0.2, -65.0, 2.0),
    ] {
        assert_eq!(tonic_spike_count(&p, 0.0, 10_000.0, 1.0), 0, "{p:?}");
    }
}

#[test]
fn no_state_above_threshold_at_step_boundaries() {
    let mut s = NeuronState::at_rest(&RS);
    s.i_ext = 40.0;
    for _ in 0..5000 {
        let (next, _) = step_neuron(&s, &RS, 1.0).unwrap();
        assert!(next.v < SPIKE_THRESHOLD_MV);
        s = next;
    }
}

#[test]
fn symmetric_kernel_examples() {
    let rule = PlasticityRule::symmetric(0.05, 20.0, 18.0).with_window(60.0);
    assert_eq!(stdp_delta_symmetric(0.0, &rule), 0.05);
    assert_eq!(stdp_delta_symmetric(20.0, &rule), 0.0);
    let expected = 0.05 * (1.0 - 4.0) * (-40.0_f64 / 18.0).exp();
    assert!((stdp_delta_symmetric(40.0, &rule) - expected).abs() < 1e-15);
    assert!((expected + 0.01626).abs() < 1e-5);
}

#[test]
fn anti_symmetric_kernel_examples() {
    let (s_a, s_b, tau_a, tau_b) = (0.04, 0.004, 20.0, 15.0);
    let rule = PlasticityRule::anti_symmetric(s_a, s_b, tau_a, tau_b);
    assert_eq!(stdp_delta_antisymmetric(0.0, &rule), -s_a);
    assert!((stdp_delta_antisymmetric(tau_b, &rule) - 0.367_879_441_171_442_3 * s_b).abs() < 1e-15);
    assert!((stdp_delta_antisymmetric(-tau_a, &rule) + s_a * (-1.0_f64).exp()).abs() < 1e-15);
}

#[test]
fn pairings_outside_the_window_do_nothing() {
    let sym = PlasticityRule::symmetric(0.05, 20.0, 18.0);
    let anti = PlasticityRule::anti_symmetric(0.04, 0.004, 20.0, 20.0);
    for dt in [-30.5, 31.0, 100.0] {
        assert_eq!(stdp_delta_symmetric(dt, &sym), 0.0);
        assert_eq!(stdp_delta_antisymmetric(dt, &anti), 0.0);
    }
}

fn two_neuron_net(w: f64) -> (Network, usize, usize) {
    let mut net = Network::new(1.0).unwrap();
    let pre = net.add_population("pre", RS, 1, 0.0).unwrap();
    let post = net.add_population("post", RS, 1, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    net.add_group(
        GroupSpec::fixed("pre-post", pre, post, Topology::OneToOne),
        &mut rng,
        |_, _, _| w,
    )
    .unwrap();
    (net, pre, post)
}

#[test]
fn silent_network_stays_silent() {
    let (mut net, _, _) = two_neuron_net(100.0);
    let rec = net.run_window(&WindowInputs::new(), 80.0).unwrap();
    assert!(rec.is_empty());
}

#[test]
fn strong_synapse_relays_a_spike() {
    let (mut net, pre, post) = two_neuron_net(200.0);
    let mut inputs = WindowInputs::new();
    inputs.set(pre, vec![20.0]);
    let rec = net.run_window(&inputs, 80.0).unwrap();
    let first_pre = rec.spikes(pre).first().expect("pre fires").1;
    let first_post = rec.spikes(post).first().expect("post fires").1;
    assert!(first_post > first_pre);
    assert!(
        first_post - first_pre <= 3.0,
        "post lags by {} ms",
        first_post - first_pre
    );
}

fn plastic_net(gated: bool) -> (Network, usize, usize, usize, usize) {
    let mut net = Network::new(1.0).unwrap();
    let pre = net.add_population("pre", RS, 5, 0.0).unwrap();
    let post = net.add_population("post", RS, 5, 0.0).unwrap();
    let gate = net.add_population("gate", RS, 1, 0.0).unwrap();
    let mut rule = PlasticityRule::anti_symmetric(0.5, 0.3, 20.0, 20.0);
    if gated {
        rule = rule.with_gate(gate, 50.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = net
        .add_group(
            GroupSpec::fixed("plastic", pre, post, Topology::AllToAll).plastic(rule, 0.0, 4.0),
            &mut rng,
            |_, _, r| r.random_range(0.0..4.0),
        )
        .unwrap();
    (net, pre, post, gate, g)
}

#[test]
fn silent_gate_blocks_plasticity() {
    let (mut net, pre, post, gate, g) = plastic_net(true);
    let before = net.group(g).weights().to_vec();
    let mut inputs = WindowInputs::new();
    inputs
        .set(pre, vec![15.0; 5])
        .set(post, vec![15.0; 5])
        .set(gate, vec![0.0]);
    let rec = net.run_window(&inputs, 80.0).unwrap();
    assert!(rec.count(pre) > 0 && rec.count(post) > 0 && rec.count(gate) == 0);
    assert_eq!(net.group(g).weights(), before.as_slice());
}

#[test]
fn active_gate_allows_plasticity() {
    let (mut net, pre, post, gate, g) = plastic_net(true);
    let before = net.group(g).weights().to_vec();
    let mut inputs = WindowInputs::new();
    inputs
        .set(pre, vec![15.0; 5])
        .set(post, vec![15.0; 5])
        .set(gate, vec![20.0]);
    net.run_window(&inputs, 80.0).unwrap();
    assert_ne!(net.group(g).weights(), before.as_slice());
}

#[test]
fn quiet_groups_keep_their_weights() {
    let (mut net, _, _, gate, g) = plastic_net(false);
    let before = net.group(g).weights().to_vec();
    let mut inputs = WindowInputs::new();
    inputs.set(gate, vec![20.0]);
    for _ in 0..5 {
        net.run_window(&inputs, 80.0).unwrap();
    }
    assert_eq!(net.group(g).weights(), before.as_slice());
}

#[test]
fn clamp_holds_under_random_driving() {
    let (mut net, pre, post, _, g) = plastic_net(false);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut pairings = 0usize;
    while pairings < 100_000 {
        let mut inputs = WindowInputs::new();
        inputs
            .set(pre, (0..5).map(|_| rng.random_range(0.0..30.0)).collect())
            .set(post, (0..5).map(|_| rng.random_range(0.0..30.0)).collect());
        let rec = net.run_window(&inputs, 80.0).unwrap();
        pairings += rec.count(post) * 5;
        assert!(net
            .group(g)
            .weights()
            .iter()
            .all(|w| (0.0..=4.0).contains(w)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn set_weight_clamps(w in -1e6f64..1e6, pre in 0usize..5, post in 0usize..5) {
        let (mut net, _, _, _, g) = plastic_net(false);
        prop_assert!(net.group_mut(g).set_weight(pre, post, w));
        let got = net.group(g).weight(pre, post).unwrap();
        prop_assert!((0.0..=4.0).contains(&got));
    }
}

#[test]
fn identical_runs_produce_identical_spikes() {
    let run = || {
        let (mut net, pre, post, gate, g) = plastic_net(true);
        let mut inputs = WindowInputs::new();
        inputs
            .set(pre, vec![12.0, 14.0, 16.0, 18.0, 20.0])
            .set(post, vec![15.0; 5])
            .set(gate, vec![8.0]);
        let mut all = Vec::new();
        for _ in 0..4 {
            let rec = net.run_window(&inputs, 80.0).unwrap();
            rec.write_csv(&mut all).unwrap();
        }
        (all, net.group(g).weights().to_vec())
    };
    assert_eq!(run(), run());
}

#[test]
fn firing_rates_count_over_the_window() {
    let mut csv = String::from("population,neuron,t_ms\n");
    for k in 0..8 {
        csv.push_str(&format!("a,1,{}\n", 10 * k));
    }
    csv.push_str("a,0,5\n");
    let rec = SpikeRecord::read_csv(csv.as_bytes()).unwrap();
    assert_eq!(firing_rates(&rec, 0, 3, 80.0), vec![12.5, 100.0, 0.0]);
    let empty = SpikeRecord::new(vec!["a".into()]);
    assert_eq!(firing_rates(&empty, 0, 3, 80.0), vec![0.0; 3]);
}

#[test]
fn spike_csv_round_trips() {
    let (mut net, pre, _) = two_neuron_net(200.0);
    let mut inputs = WindowInputs::new();
    inputs.set(pre, vec![20.0]);
    let rec = net.run_window(&inputs, 80.0).unwrap();
    let mut buf = Vec::new();
    rec.write_csv(&mut buf).unwrap();
    let back = SpikeRecord::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.spikes(0), rec.spikes(0));
    assert_eq!(back.spikes(1), rec.spikes(1));
}
