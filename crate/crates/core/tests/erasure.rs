use proptest::prelude::*;
use rand::Rng;
use revsim_core::erasure::{
    count_erasures, simulate_reversible_register, sweep_erasures, write_csv, ErasureError, PipelineSpec, Variant,
};
use revsim_core::seed;

fn erased(variant: Variant, m: u32, k: u64) -> u64 {
    count_erasures(&PipelineSpec::new(variant, m, k).unwrap()).unwrap().erased_bits
}

proptest! {
    #[test]
    fn orderings_and_monotonicity(m in 1u32..32, log_k in 0u32..16) {
        let k = 1u64 << log_k;
        prop_assert_eq!(erased(Variant::Reversible, m, k), 0);
        let time = erased(Variant::IrreversibleTime, m, k);
        let fft = erased(Variant::IrreversibleFft, m, k);
        prop_assert!(fft >= time);
        for v in [Variant::IrreversibleTime, Variant::IrreversibleFft] {
            prop_assert!(erased(v, m + 1, k) >= erased(v, m, k));
            prop_assert!(erased(v, m, 2 * k) >= erased(v, m, k));
        }
    }
}

#[test]
fn fft_needs_power_of_two() {
    assert!(matches!(
        PipelineSpec::new(Variant::IrreversibleFft, 8, 12),
        Err(ErasureError::NotPowerOfTwo(12))
    ));
    assert!(PipelineSpec::new(Variant::IrreversibleTime, 8, 12).is_ok());
}

#[test]
fn sweep_grid_has_three_variants_per_point() {
    let rows = sweep_erasures(&[1, 2, 4, 8], &[1, 4, 8]).unwrap();
    assert_eq!(rows.len(), 3 * 4 * 3);
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + rows.len());
}

#[test]
fn register_round_trip_is_an_involution() {
    let mut rng = seed::rng(8);
    let words: Vec<u64> = (0..1000).map(|_| rng.random_range(0..1u64 << 12)).collect();
    let (out, ledger) = simulate_reversible_register(&words, 12, 1000).unwrap();
    let mut back = out.clone();
    back.reverse();
    assert_eq!(back, words);
    assert_eq!(ledger.erased_bits, 0);
    assert_eq!(ledger.gate_count, count_erasures(&PipelineSpec::new(Variant::Reversible, 12, 1000).unwrap()).unwrap().gate_count);
}
