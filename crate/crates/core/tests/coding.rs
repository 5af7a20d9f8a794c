use cerebellar_servo::coding::{Codec, SignedPairDecode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn activation_values() {
    let c = Codec::new(0.0, 2.0, 20).unwrap();
    let i = 7;
    let center = c.centers()[i];
    assert_eq!(c.encode(center)[i], 1.0);
    let one_sigma = c.encode(center + c.sigma())[i];
    assert!((one_sigma - (-0.5_f64).exp()).abs() < 1e-15);
    assert!(c.encode(2.0)[0] < 1e-8);
    assert!(c.encode(0.0)[19] < 1e-8);
}

#[test]
fn width_follows_range_over_count() {
    let c = Codec::new(-0.5, 0.5, 20).unwrap();
    assert!((c.sigma() - 0.05).abs() < 1e-15);
    assert_eq!(c.len(), 20);
}

#[test]
fn decoding_simple_rate_patterns() {
    let c = Codec::new(0.0, 1.0, 11).unwrap();
    let mut rates = vec![0.0; 11];
    rates[3] = 40.0;
    assert!((c.decode(&rates).unwrap() - 0.3).abs() < 1e-12);
    rates[5] = 40.0;
    assert!((c.decode(&rates).unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(c.decode(&[0.0; 11]), None);
}

#[test]
fn round_trip_over_the_central_range() {
    let (lo, hi) = (-0.1, 0.1);
    let c = Codec::new(lo, hi, 20).unwrap();
    let span = hi - lo;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let v = rng.random_range(lo + 0.05 * span..hi - 0.05 * span);
        let rates: Vec<f64> = c.encode(v).iter().map(|a| 100.0 * a).collect();
        let back = c.decode(&rates).unwrap();
        assert!((back - v).abs() <= 0.05 * span, "v {v}, decoded {back}");
    }
}

#[test]
fn signed_pair_examples() {
    let d = SignedPairDecode::new(4, 100.0, 0.05).unwrap();
    assert_eq!(d.decode(&[100.0; 4], &[0.0; 4]), 0.05);
    assert_eq!(
        d.decode(&[30.0, 10.0, 0.0, 5.0], &[5.0, 0.0, 30.0, 10.0]),
        0.0
    );
    assert!((d.decode(&[50.0; 4], &[0.0; 4]) - 0.025).abs() < 1e-15);
    assert_eq!(d.decode(&[400.0; 4], &[0.0; 4]), 0.05);
}

proptest! {
    #[test]
    fn encoding_is_translation_consistent(v in -1.0f64..1.0, shift in -5.0f64..5.0) {
        let c = Codec::new(-1.0, 1.0, 15).unwrap();
        let moved = Codec::new(-1.0 + shift, 1.0 + shift, 15).unwrap();
        for (a, b) in c.encode(v).iter().zip(moved.encode(v + shift)) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn signed_decode_is_antisymmetric(
        pos in proptest::collection::vec(0.0f64..150.0, 8),
        neg in proptest::collection::vec(0.0f64..150.0, 8),
    ) {
        let d = SignedPairDecode::new(8, 100.0, 0.1).unwrap();
        prop_assert_eq!(d.decode(&pos, &neg), -d.decode(&neg, &pos));
    }
}
