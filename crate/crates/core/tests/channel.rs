use std::f64::consts::PI;

use proptest::prelude::*;
use revsim_core::channel::{
    generate_scene, normalize, perturb_csi, subsample_subcarriers, synthesize_channel, synthesize_raw, ChannelTensor,
    Point, Rect, Scene, SceneConfig, SPEED_OF_LIGHT,
};
use revsim_core::Complex64;

fn two_ray_scene() -> Scene {
    Scene {
        antenna_positions: vec![Point::new(0.0, 0.0)],
        user_positions: vec![Point::new(60.0, 0.0)],
        scatterer_positions: vec![Point::new(30.0, 40.0)],
        obstacle: None,
        carrier_frequency: 2.6e9,
        bandwidth: 20e6,
        num_subcarriers: 8,
        rng_seed: 0,
    }
}

#[test]
fn two_ray_path_sum() {
    let scene = two_ray_scene();
    let h = synthesize_raw(&scene).unwrap();
    let (d0, d1) = (60.0, 50.0 + 50.0);
    for s in 0..8 {
        let f = 2.6e9 - 10e6 + (s as f64 + 0.5) * 20e6 / 8.0;
        let k = 2.0 * PI * f / SPEED_OF_LIGHT;
        let want = Complex64::from_polar(1.0 / d0, -k * d0) + Complex64::from_polar(1.0 / d1, -k * d1);
        assert!((h.get(0, 0, s) - want).norm() < 1e-12 * want.norm(), "subcarrier {s}");
    }
}

#[test]
fn obstacle_on_scatter_leg_drops_that_ray_only() {
    let mut scene = two_ray_scene();
    scene.obstacle = Some(Rect::new(14.0, 18.0, 16.0, 22.0));
    assert_eq!(scene.ray_lengths(0, 0), vec![60.0]);
    let h = synthesize_raw(&scene).unwrap();
    assert!((h.get(0, 0, 0).norm() - 1.0 / 60.0).abs() < 1e-15);
}

#[test]
fn removing_the_obstacle_only_adds_rays() {
    for seed in 0..20 {
        let cfg = SceneConfig {
            num_antennas: 6,
            num_users: 3,
            num_scatterers: 20,
            num_subcarriers: 4,
            ..SceneConfig::default()
        };
        let scene = generate_scene(&cfg, seed).unwrap();
        let open = scene.without_obstacle();
        for t in 0..6 {
            for r in 0..3 {
                let blocked = scene.ray_lengths(t, r);
                let free = open.ray_lengths(t, r);
                assert!(blocked.iter().all(|d| free.contains(d)));
                let power = |v: &[f64]| v.iter().map(|d| d.powi(-2)).sum::<f64>();
                assert!(power(&blocked) <= power(&free));
            }
        }
    }
}

#[test]
fn binary_container_layout_and_round_trip() {
    let h = ChannelTensor::rayleigh(3, 2, 5, 17);
    let mut buf = Vec::new();
    h.write_to(&mut buf).unwrap();
    assert_eq!(&buf[0..4], b"RVCT");
    assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
    assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 3);
    assert_eq!(u64::from_le_bytes(buf[16..24].try_into().unwrap()), 2);
    assert_eq!(u64::from_le_bytes(buf[24..32].try_into().unwrap()), 5);
    assert_eq!(buf.len(), 32 + 3 * 2 * 5 * 16);
    // Entry (t=1, r=0, s=2) sits at row-major offset (1·2 + 0)·5 + 2.
    let off = 32 + ((2 + 0) * 5 + 2) * 16;
    let re = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
    let im = f64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap());
    assert_eq!(Complex64::new(re, im), h.get(1, 0, 2));

    let back = ChannelTensor::read_from(buf.as_slice()).unwrap();
    assert_eq!(back, h);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.bin");
    h.save(&path).unwrap();
    let loaded = ChannelTensor::load(&path).unwrap();
    assert!(loaded.gains().iter().zip(h.gains()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
}

#[test]
fn corrupt_container_is_rejected() {
    let h = ChannelTensor::rayleigh(2, 2, 2, 1);
    let mut buf = Vec::new();
    h.write_to(&mut buf).unwrap();
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(ChannelTensor::read_from(bad.as_slice()).is_err());
    assert!(ChannelTensor::read_from(&buf[..buf.len() - 3]).is_err());
    let mut long = buf.clone();
    long.push(0);
    assert!(ChannelTensor::read_from(long.as_slice()).is_err());
}

#[test]
fn csi_noise_statistics() {
    let h = ChannelTensor::from_fn(40, 10, 50, |_, _, _| Complex64::new(0.0, 0.0));
    let noisy = perturb_csi(&h, 0.05, 3).unwrap();
    let n = noisy.gains().len() as f64;
    let mean: Complex64 = noisy.gains().iter().sum::<Complex64>() / n;
    let power = noisy.mean_power();
    let re_var = noisy.gains().iter().map(|z| z.re * z.re).sum::<f64>() / n;
    assert!(mean.norm() < 0.01);
    assert!((power - 0.05).abs() < 0.05 * 0.05);
    assert!((re_var - 0.025).abs() < 0.05 * 0.025);
    assert_eq!(perturb_csi(&h, 0.05, 3).unwrap(), noisy);
    assert_ne!(perturb_csi(&h, 0.05, 4).unwrap(), noisy);
}

#[test]
fn full_subsample_and_zero_noise_are_identities() {
    let cfg = SceneConfig {
        num_antennas: 8,
        num_users: 2,
        num_subcarriers: 12,
        ..SceneConfig::default()
    };
    let h = synthesize_channel(&generate_scene(&cfg, 2).unwrap()).unwrap();
    assert_eq!(subsample_subcarriers(&h, 12, 9).unwrap(), h);
    assert_eq!(perturb_csi(&h, 0.0, 9).unwrap(), h);
}

#[test]
fn scene_json_round_trip() {
    let scene = generate_scene(&SceneConfig::default(), 4).unwrap();
    let text = serde_json::to_string(&scene).unwrap();
    let back: Scene = serde_json::from_str(&text).unwrap();
    assert_eq!(back, scene);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn normalization_gives_unit_power(seed in any::<u64>(), scale in 1e-6f64..1e6) {
        let h = ChannelTensor::rayleigh(4, 3, 5, seed);
        let scaled = ChannelTensor::from_fn(4, 3, 5, |t, r, s| h.get(t, r, s) * scale);
        let n = normalize(&scaled).unwrap();
        prop_assert!((n.mean_power() - 1.0).abs() < 1e-12);
        let again = normalize(&n).unwrap();
        for (a, b) in again.gains().iter().zip(n.gains()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn subsampling_keeps_sorted_columns(seed in any::<u64>(), count in 1usize..=10) {
        let h = ChannelTensor::rayleigh(2, 2, 10, seed);
        let idx = revsim_core::channel::subsample_indices(10, count, seed).unwrap();
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        let sub = subsample_subcarriers(&h, count, seed).unwrap();
        for (i, &s) in idx.iter().enumerate() {
            prop_assert_eq!(sub.get(1, 1, i), h.get(1, 1, s));
        }
    }
}
