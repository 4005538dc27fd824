use std::sync::Arc;

use proptest::prelude::*;
use revsim_core::capacity::equal_power_rate;
use revsim_core::channel::ChannelTensor;
use revsim_core::rpn::{read_history_jsonl, CapacityCache, Move, RpnError, RpnNet, Topology};
use revsim_core::Complex64;

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;
const D: usize = 3;
const E: usize = 4;
const F: usize = 5;
const G: usize = 6;

/// Seven places A–G with two overlapping neighbourhoods: N1 = {A, B, G}
/// carries A–B and B–G, N2 = {A, C, D, E, F} carries A–C, A–D, A–E, E–F.
fn toy_topology() -> Arc<Topology> {
    let n1 = vec![A, B, G];
    let n2 = vec![A, C, D, E, F];
    let edges = [(A, B, &n1), (B, G, &n1), (A, C, &n2), (A, D, &n2), (A, E, &n2), (E, F, &n2)];
    let mut moves = vec![Vec::new(); 7];
    for (a, b, hood) in edges {
        moves[a].push(Move { to: b, neighborhood: hood.clone() });
        moves[b].push(Move { to: a, neighborhood: hood.clone() });
    }
    Arc::new(Topology::new(moves).unwrap())
}

/// Every row points along user 0 except G, which points along user 1.
fn toy_channel() -> ChannelTensor {
    ChannelTensor::from_fn(7, 2, 3, |t, r, s| {
        let phase = Complex64::from_polar(1.0, 0.3 * s as f64);
        let hot = if t == G { 1 } else { 0 };
        if r == hot { phase } else { Complex64::new(0.0, 0.0) }
    })
}

#[test]
fn toy_net_enabling_follows_xor() {
    let t = toy_topology();
    let only_b = RpnNet::with_tokens(Arc::clone(&t), &[B]).unwrap();
    assert!(only_b.enabled(B, G).unwrap());
    let a_and_b = RpnNet::with_tokens(Arc::clone(&t), &[A, B]).unwrap();
    assert!(!a_and_b.enabled(A, B).unwrap());
    assert!(!a_and_b.enabled(E, F).unwrap());
    assert!(matches!(a_and_b.enabled(B, C), Err(RpnError::NotAdjacent(B, C))));
}

#[test]
fn toy_net_fires_the_single_improving_move() {
    let t = toy_topology();
    let h = toy_channel();
    let mut cache = CapacityCache::new(&h, 1.0);
    let mut net = RpnNet::with_tokens(Arc::clone(&t), &[A, B]).unwrap();

    // Enumerate every enabled move and its gate directly.
    let c_ab = equal_power_rate(&h, &[A, B], 1.0).unwrap();
    let c_ag = equal_power_rate(&h, &[A, G], 1.0).unwrap();
    assert!(c_ab < c_ag);
    let mut positive = Vec::new();
    for from in [A, B] {
        for m in t.moves_from(from) {
            if let Some(d) = net.gate(&mut cache, from, m.to).unwrap() {
                positive.push((from, m.to, d));
            }
        }
    }
    assert_eq!(positive.len(), 1);
    assert_eq!((positive[0].0, positive[0].1), (B, G));
    assert!((positive[0].2 - (c_ag - c_ab)).abs() < 1e-12);

    assert_eq!(net.step_pass(&mut cache, 7).unwrap(), 1);
    assert_eq!(net.tokens(), vec![A, G]);
    assert_eq!(net.step_pass(&mut cache, 8).unwrap(), 0);
}

#[test]
fn small_torus_gate_matches_enumeration() {
    let t = Arc::new(Topology::torus(2, 2).unwrap());
    for seed in 0..30 {
        let h = ChannelTensor::rayleigh(4, 2, 3, seed);
        let mut cache = CapacityCache::new(&h, 0.8);
        let net = RpnNet::with_tokens(Arc::clone(&t), &[0, 3]).unwrap();
        for from in [0, 3] {
            for m in t.moves_from(from) {
                if net.marking()[m.to] {
                    continue;
                }
                let before: Vec<usize> = m.neighborhood.iter().copied().filter(|&p| net.marking()[p]).collect();
                let after: Vec<usize> = before.iter().map(|&p| if p == from { m.to } else { p }).collect();
                let delta = equal_power_rate(&h, &after, 0.8).unwrap() - equal_power_rate(&h, &before, 0.8).unwrap();
                let gate = net.gate(&mut cache, from, m.to).unwrap();
                assert_eq!(gate.is_some(), delta > 0.0);
                if let Some(g) = gate {
                    assert!((g - delta).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn forward_reverse_forward_is_deterministic() {
    let t = Arc::new(Topology::torus(4, 16).unwrap());
    let h = ChannelTensor::rayleigh(64, 4, 4, 12);
    let tokens: Vec<usize> = (0..16).map(|i| i * 4).collect();
    let mut cache = CapacityCache::new(&h, 0.3);
    let mut a = RpnNet::with_tokens(Arc::clone(&t), &tokens).unwrap();
    a.run_to_convergence(&mut cache, 5, 3).unwrap();
    let fired = a.history().len();
    assert!(fired > 0);
    let after_first = a.marking().to_vec();
    let reversed = a.reverse(fired).unwrap().to_vec();
    assert_eq!(reversed, a.initial_marking());

    let mut b = RpnNet::with_tokens(Arc::clone(&t), &tokens).unwrap();
    b.run_to_convergence(&mut cache, 5, 3).unwrap();
    assert_eq!(b.marking(), after_first.as_slice());
}

#[test]
fn already_stable_marking_uses_no_passes() {
    let t = Arc::new(Topology::torus(2, 3).unwrap());
    let h = ChannelTensor::from_fn(6, 2, 2, |_, r, _| Complex64::new(1.0 + r as f64, 0.0));
    let mut cache = CapacityCache::new(&h, 1.0);
    let mut net = RpnNet::with_tokens(t, &[0, 4]).unwrap();
    let conv = net.run_to_convergence(&mut cache, 1, 50).unwrap();
    assert!(conv.converged);
    assert_eq!((conv.passes_used, conv.transitions_fired), (0, 0));
}

#[test]
fn recorded_capacities_recompute_on_replay() {
    let t = Arc::new(Topology::torus(4, 16).unwrap());
    let h = ChannelTensor::rayleigh(64, 6, 3, 40);
    let tokens: Vec<usize> = (0..12).map(|i| i * 5).collect();
    let mut cache = CapacityCache::new(&h, 0.3);
    let mut net = RpnNet::with_tokens(Arc::clone(&t), &tokens).unwrap();
    net.run_to_convergence(&mut cache, 9, 50).unwrap();

    let mut marking = net.initial_marking().to_vec();
    for rec in net.history() {
        let hood = t.neighborhood(rec.from_place, rec.to_place).unwrap();
        let tokened = |m: &[bool]| {
            let mut v: Vec<usize> = hood.iter().copied().filter(|&p| m[p]).collect();
            v.sort_unstable();
            v
        };
        let before = tokened(&marking);
        marking[rec.from_place] = false;
        marking[rec.to_place] = true;
        let after = tokened(&marking);
        assert_eq!(equal_power_rate(&h, &before, 0.3).unwrap(), rec.capacity_before);
        assert_eq!(equal_power_rate(&h, &after, 0.3).unwrap(), rec.capacity_after);
        assert!(rec.capacity_after > rec.capacity_before);
    }
    assert_eq!(marking, net.marking());

    let mut buf = Vec::new();
    net.write_history_jsonl(&mut buf).unwrap();
    assert_eq!(read_history_jsonl(buf.as_slice()).unwrap(), net.history());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn net_invariants_hold(seed in any::<u64>(), n_tokens in 1usize..16, prefix in 0usize..40) {
        let t = Arc::new(Topology::torus(4, 4).unwrap());
        let h = ChannelTensor::rayleigh(16, 3, 2, seed);
        let mut rng = revsim_core::seed::rng(seed);
        let tokens = rand::seq::index::sample(&mut rng, 16, n_tokens).into_vec();
        let mut cache = CapacityCache::new(&h, 0.5);
        let mut net = RpnNet::with_tokens(Arc::clone(&t), &tokens).unwrap();
        net.run_to_convergence(&mut cache, seed, 50).unwrap();

        prop_assert_eq!(net.token_count(), n_tokens);
        prop_assert_eq!(net.replay_history().unwrap(), net.marking());
        prop_assert!(net.history().iter().all(|r| r.capacity_after > r.capacity_before));

        let len = net.history().len();
        let j = prefix.min(len);
        let mut partial = net.clone();
        partial.reverse(j).unwrap();
        prop_assert_eq!(partial.token_count(), n_tokens);
        prop_assert_eq!(partial.replay_history().unwrap(), partial.marking());

        net.reverse(len).unwrap();
        prop_assert_eq!(net.marking(), net.initial_marking());
    }
}
