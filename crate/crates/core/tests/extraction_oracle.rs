mod common;

use std::collections::BTreeSet;

use honeycure::extract::{extract_common_patterns, ExtractionConfig};
use honeycure::hash::{hash_pattern, HashParams};
use honeycure::model::Packet;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_force_patterns, contains};

fn extract(a: &[u8], b: &[u8], cfg: &ExtractionConfig) -> Vec<Vec<u8>> {
    let (pa, pb) = (
        Packet::new(a.to_vec()).unwrap(),
        Packet::new(b.to_vec()).unwrap(),
    );
    extract_common_patterns(&pa, &pb, cfg)
        .unwrap()
        .into_iter()
        .map(|p| p.bytes().to_vec())
        .collect()
}

fn random_bytes(rng: &mut ChaCha8Rng, alphabet: u16, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.gen_range(0..alphabet) as u8).collect()
}

fn periodic(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    let period = rng.gen_range(1..=6);
    let unit = random_bytes(rng, 4, period);
    let shift = rng.gen_range(0..period);
    let mut v: Vec<u8> = unit.iter().cycle().skip(shift).take(len).copied().collect();
    // Occasionally break the period.
    if len > 0 && rng.gen_bool(0.3) {
        let at = rng.gen_range(0..len);
        v[at] = v[at].wrapping_add(1);
    }
    v
}

#[test]
fn matches_brute_force_across_alphabets() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c0ffee);
    let mut cases = 0;
    for alphabet in [2u16, 4, 256] {
        for _ in 0..400 {
            let (la, lb) = (rng.gen_range(1..=200), rng.gen_range(1..=200));
            let a = random_bytes(&mut rng, alphabet, la);
            let mut b = random_bytes(&mut rng, alphabet, lb);
            if alphabet == 256 && la >= 3 && lb >= 3 && rng.gen_bool(0.5) {
                // Plant a shared block so large alphabets see real matches.
                let len = rng.gen_range(3..=40.min(la).min(lb));
                let at_a = rng.gen_range(0..=la - len);
                let at_b = rng.gen_range(0..=lb - len);
                b[at_b..at_b + len].copy_from_slice(&a[at_a..at_a + len]);
            }
            let k_min = rng.gen_range(1..=24);
            let k_max = rng
                .gen_bool(0.25)
                .then(|| rng.gen_range(k_min..=k_min + 10));
            let cfg = ExtractionConfig {
                max_len: k_max,
                ..ExtractionConfig::with_min_len(k_min)
            };
            let want = brute_force_patterns(&a, &b, k_min, k_max);
            let got = extract(&a, &b, &cfg);
            assert_eq!(
                got.iter().cloned().collect::<BTreeSet<_>>(),
                want,
                "alphabet {alphabet} k_min {k_min} k_max {k_max:?}"
            );
            assert_eq!(got.len(), want.len(), "duplicates in output");
            cases += 1;
        }
    }
    assert!(cases >= 1000);
}

#[test]
fn matches_brute_force_on_periodic_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..300 {
        let (la, lb) = (rng.gen_range(1..=200), rng.gen_range(1..=200));
        let a = periodic(&mut rng, la);
        let b = periodic(&mut rng, lb);
        let k_min = rng.gen_range(1..=30);
        let cfg = ExtractionConfig::with_min_len(k_min);
        let want = brute_force_patterns(&a, &b, k_min, None);
        assert_eq!(
            extract(&a, &b, &cfg).into_iter().collect::<BTreeSet<_>>(),
            want
        );
    }
}

#[test]
fn tiny_bloom_filters_do_not_change_results() {
    // A nearly saturated filter must only cost speed.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let a = random_bytes(&mut rng, 2, 150);
        let b = random_bytes(&mut rng, 2, 150);
        let mut cfg = ExtractionConfig::with_min_len(6);
        cfg.bloom.m = 16;
        cfg.bloom.k = 2;
        assert_eq!(
            extract(&a, &b, &cfg).into_iter().collect::<BTreeSet<_>>(),
            brute_force_patterns(&a, &b, 6, None)
        );
    }
}

#[test]
fn hashes_agree_with_hash_pattern() {
    let cfg = ExtractionConfig::with_min_len(3);
    let a = Packet::new(b"xxHELLO-WORLDyy".to_vec()).unwrap();
    let b = Packet::new(b"zHELLO-WORLDq".to_vec()).unwrap();
    let hp = HashParams::new(cfg.hash_base, cfg.bloom.m, 1).unwrap();
    for p in extract_common_patterns(&a, &b, &cfg).unwrap() {
        assert_eq!(p.hash(), hash_pattern(p.bytes(), &hp).unwrap());
    }
}

fn small_alphabet_pair() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, usize)> {
    (
        prop::collection::vec(0u8..3, 0..80),
        prop::collection::vec(0u8..3, 0..80),
        1usize..8,
    )
}

proptest! {
    #[test]
    fn extraction_is_symmetric((a, b, k) in small_alphabet_pair()) {
        prop_assume!(!a.is_empty() && !b.is_empty());
        let cfg = ExtractionConfig::with_min_len(k);
        prop_assert_eq!(extract(&a, &b, &cfg), extract(&b, &a, &cfg));
    }

    #[test]
    fn every_pattern_is_long_enough_and_common((a, b, k) in small_alphabet_pair()) {
        prop_assume!(!a.is_empty() && !b.is_empty());
        let cfg = ExtractionConfig::with_min_len(k);
        for p in extract(&a, &b, &cfg) {
            prop_assert!(p.len() >= k);
            prop_assert!(contains(&a, &p) && contains(&b, &p));
        }
    }

    #[test]
    fn self_extraction_returns_the_whole_packet(a in prop::collection::vec(any::<u8>(), 1..120), k in 1usize..10) {
        let cfg = ExtractionConfig::with_min_len(k);
        let got = extract(&a, &a, &cfg);
        if a.len() >= k {
            prop_assert!(got.contains(&a));
        } else {
            prop_assert!(got.is_empty());
        }
    }
}
