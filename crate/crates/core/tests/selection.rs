use std::sync::Arc;

use revsim_core::capacity::equal_power_rate;
use revsim_core::channel::ChannelTensor;
use revsim_core::rpn::Topology;
use revsim_core::selection::{
    greedy_path, select_exhaustive, select_greedy, select_random, select_rpn_parallel, GreedyScaling,
};
use revsim_core::Complex64;

#[test]
fn greedy_skips_scaled_copies_like_exhaustive() {
    // Row 0 is the strongest; rows 2 and 5 are weaker copies of it.
    let dirs = [(1.0, 0.2), (0.2, 1.0), (1.0, 0.2), (0.7, -0.7), (-0.5, 0.9), (1.0, 0.2)];
    let scale = [3.0, 1.5, 2.7, 1.2, 1.1, 2.4];
    let h = ChannelTensor::from_fn(6, 2, 4, |t, r, s| {
        let v = if r == 0 { dirs[t].0 } else { dirs[t].1 };
        Complex64::from_polar(scale[t] * v, 0.2 * s as f64)
    });
    let greedy = select_greedy(&h, 1.0, 2).unwrap();
    let best = select_exhaustive(&h, 1.0, 2).unwrap();
    assert_eq!(greedy.selected, best.selected);
    assert!(best.selected.contains(&0));
    assert!(!best.selected.contains(&2) && !best.selected.contains(&5));
}

#[test]
fn greedy_objective_can_fall_when_forced_to_grow() {
    let hit = (0..2000u64).find_map(|s| {
        let h = ChannelTensor::rayleigh(6, 2, 1, s);
        let path = greedy_path(&h, 0.3, 4, GreedyScaling::CurrentSize).unwrap();
        path.windows(2).position(|w| w[1].1 < w[0].1).map(|i| (s, i))
    });
    let (s, i) = hit.expect("a decreasing greedy step within 2000 draws");
    let h = ChannelTensor::rayleigh(6, 2, 1, s);
    let path = greedy_path(&h, 0.3, 4, GreedyScaling::CurrentSize).unwrap();
    let set_k: Vec<usize> = path[..=i].iter().map(|p| p.0).collect();
    let set_k1: Vec<usize> = path[..=i + 1].iter().map(|p| p.0).collect();
    assert!(equal_power_rate(&h, &set_k1, 0.3).unwrap() < equal_power_rate(&h, &set_k, 0.3).unwrap());
}

#[test]
fn exhaustive_dominates_every_heuristic() {
    let topo = Arc::new(Topology::torus(2, 4).unwrap());
    for s in 0..100u64 {
        let h = ChannelTensor::rayleigh(8, 2, 2, s);
        let best = select_exhaustive(&h, 0.3, 3).unwrap();
        let greedy = select_greedy(&h, 0.3, 3).unwrap();
        let random = select_random(&h, 0.3, 3, s).unwrap();
        let rpn = select_rpn_parallel(&h, 0.3, 3, &topo, 5, s).unwrap();
        for v in [greedy.rate_equal_power, random.rate_equal_power, rpn.best.rate_equal_power] {
            assert!(v <= best.rate_equal_power + 1e-12);
        }
        assert!(rpn.best.rate_equal_power >= rpn.average_rate - 1e-12);
    }
}

#[test]
fn greedy_beats_random_on_average() {
    let n = 60;
    let (mut g, mut r) = (0.0, 0.0);
    for s in 0..n {
        let h = ChannelTensor::rayleigh(16, 4, 2, 1000 + s);
        g += select_greedy(&h, 0.3, 6).unwrap().rate_equal_power;
        r += select_random(&h, 0.3, 6, s).unwrap().rate_equal_power;
    }
    assert!(g / n as f64 > r / n as f64);
}
