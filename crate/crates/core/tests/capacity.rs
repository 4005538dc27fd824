use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::Rng;
use revsim_core::capacity::{
    self, equal_power_rate, mean_capacity_over_subcarriers, receive_capacity, sum_capacity, waterfill, CapacityParams,
    PowerAllocation,
};
use revsim_core::channel::ChannelTensor;
use revsim_core::linalg::CMatrix;
use revsim_core::{seed, Complex64};

fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// `Σ log2(1 + λ)` over eigenvalues of `scale · H diag(p) H^H`.
fn eigen_oracle(h: &CMatrix, p: &[f64], scale: f64) -> f64 {
    let (n, k) = (h.rows(), h.cols());
    let hm = DMatrix::from_fn(n, k, |r, c| h[(r, c)]);
    let pm = DMatrix::from_fn(k, k, |r, c| Complex64::new(if r == c { p[r] } else { 0.0 }, 0.0));
    let a = (&hm * pm * hm.adjoint()) * Complex64::new(scale, 0.0);
    let eig = SymmetricEigen::new(a);
    eig.eigenvalues.iter().map(|&l| (1.0 + l).log2()).sum()
}

#[test]
fn matches_eigenvalue_oracle() {
    let mut rng = seed::rng(11);
    for _ in 0..1000 {
        let n_ts = rng.random_range(1..=16);
        let n_r = rng.random_range(1..=8);
        let rho = 10f64.powf(rng.random_range(-1.0..1.0));
        let h = random_matrix(&mut rng, n_ts, n_r);
        let weights: Vec<f64> = (0..n_r).map(|_| rng.random_range(0.05..1.0)).collect();
        let params = CapacityParams::new(rho, n_r, n_ts).unwrap();
        let got = sum_capacity(&h, &PowerAllocation::new(weights.clone()).unwrap(), &params).unwrap();
        let want = eigen_oracle(&h, &weights, rho * n_r as f64 / n_ts as f64);
        assert!((got - want).abs() < 1e-9, "{n_ts}×{n_r}: {got} vs {want}");
    }
}

#[test]
fn mean_over_subcarriers_is_the_plain_loop() {
    let h = ChannelTensor::rayleigh(10, 3, 7, 4);
    let sel = [1, 4, 5, 9];
    let params = CapacityParams::new(0.6, 3, sel.len()).unwrap();
    let p = PowerAllocation::equal(3);
    let looped: f64 = (0..7)
        .map(|s| sum_capacity(&h.submatrix(s, &sel), &p, &params).unwrap())
        .sum::<f64>()
        / 7.0;
    let got = mean_capacity_over_subcarriers(&h, &sel, &p, &params).unwrap();
    assert!((got - looped).abs() < 1e-12);
    assert_eq!(equal_power_rate(&h, &sel, 0.6).unwrap(), got);
}

#[test]
fn waterfill_matches_grid_search() {
    let gains = [4.0, 1.0];
    let objective = |p0: f64| (1.0 + gains[0] * p0).log2() + (1.0 + gains[1] * (1.0 - p0)).log2();
    let (best_p, best_v) = (0..=10_000)
        .map(|i| i as f64 * 1e-4)
        .map(|p| (p, objective(p)))
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let wf = waterfill(&gains, 1.0).unwrap();
    assert!((wf.powers[0] - best_p).abs() < 1e-3);
    assert!((objective(wf.powers[0]) - best_v).abs() < 1e-3);
    assert!((wf.powers[0] - 0.875).abs() < 1e-12 && (wf.powers[1] - 0.125).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn waterfill_satisfies_kkt(gains in prop::collection::vec(0.01f64..20.0, 1..10), budget in 0.01f64..10.0) {
        let wf = waterfill(&gains, budget).unwrap();
        let total: f64 = wf.powers.iter().sum();
        prop_assert!((total - budget).abs() < 1e-9 * budget.max(1.0));
        for (g, p) in gains.iter().zip(&wf.powers) {
            prop_assert!(*p >= 0.0);
            if *p > 0.0 {
                prop_assert!((p + 1.0 / g - wf.level).abs() < 1e-9 * wf.level.max(1.0));
            } else {
                prop_assert!(1.0 / g >= wf.level - 1e-12);
            }
        }
    }

    #[test]
    fn permuting_selection_keeps_capacity(seed in any::<u64>(), n_ts in 1usize..7) {
        let h = ChannelTensor::rayleigh(8, 3, 3, seed);
        let mut rng = revsim_core::seed::rng(seed ^ 1);
        let mut sel: Vec<usize> = rand::seq::index::sample(&mut rng, 8, n_ts).into_vec();
        let a = equal_power_rate(&h, &sel, 0.5).unwrap();
        sel.reverse();
        let b = equal_power_rate(&h, &sel, 0.5).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * a.max(1.0));
    }

    #[test]
    fn capacity_grows_with_snr(seed in any::<u64>(), r1 in 0.01f64..5.0, r2 in 0.01f64..5.0) {
        let mut rng = revsim_core::seed::rng(seed);
        let h = random_matrix(&mut rng, 5, 3);
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        let p = PowerAllocation::equal(3);
        let c_lo = sum_capacity(&h, &p, &CapacityParams::new(lo, 3, 5).unwrap()).unwrap();
        let c_hi = sum_capacity(&h, &p, &CapacityParams::new(hi, 3, 5).unwrap()).unwrap();
        prop_assert!(c_lo <= c_hi + 1e-12);
    }

    #[test]
    fn receive_capacity_never_drops_when_adding_rows(seed in any::<u64>(), rows in 1usize..8) {
        let mut rng = revsim_core::seed::rng(seed);
        let h = random_matrix(&mut rng, rows + 1, 3);
        let p = PowerAllocation::equal(3);
        let sub = h.select_rows(&(0..rows).collect::<Vec<_>>());
        let small = receive_capacity(&sub, &p, 0.7).unwrap();
        let big = receive_capacity(&h, &p, 0.7).unwrap();
        prop_assert!(small <= big + 1e-12);
    }
}

/// Adding a transmit antenna can lower the objective because the power
/// budget is split over more antennas; the receive-side analogue cannot.
#[test]
fn transmit_objective_is_not_monotone() {
    let mut found = None;
    for s in 0..500u64 {
        let h = ChannelTensor::rayleigh(4, 2, 1, s);
        let small = equal_power_rate(&h, &[0, 1], 0.3).unwrap();
        let big = equal_power_rate(&h, &[0, 1, 2], 0.3).unwrap();
        if big < small {
            found = Some((s, small, big));
            break;
        }
    }
    let (s, small, big) = found.expect("a decreasing instance among 500 draws");
    let h = ChannelTensor::rayleigh(4, 2, 1, s);
    let p = PowerAllocation::equal(2);
    let rx_small = receive_capacity(&h.submatrix(0, &[0, 1]), &p, 0.3).unwrap();
    let rx_big = receive_capacity(&h.submatrix(0, &[0, 1, 2]), &p, 0.3).unwrap();
    assert!(big < small);
    assert!(rx_big >= rx_small);
}

#[test]
fn zero_forcing_gain_oracle() {
    // Inverse of the 2×2 Gram matrix by hand.
    let mut rng = seed::rng(5);
    for _ in 0..50 {
        let h = random_matrix(&mut rng, 4, 2);
        let g = h.conj_transpose().mul(&h);
        let det = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).re;
        let inv_diag = [g[(1, 1)].re / det, g[(0, 0)].re / det];
        let gains = capacity::zero_forcing_gains(&h).unwrap();
        for r in 0..2 {
            assert!((gains[r] - 1.0 / inv_diag[r]).abs() < 1e-9 * gains[r]);
        }
    }
}
