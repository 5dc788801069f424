//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use honeycure::model::Corpus;

/// Every maximal aligned match of length >= `k_min`, found by walking all
/// diagonals of the two inputs. Runs longer than `k_max` are cut into
/// consecutive `k_max` chunks; a tail shorter than `k_min` is dropped.
pub fn brute_force_patterns(
    a: &[u8],
    b: &[u8],
    k_min: usize,
    k_max: Option<usize>,
) -> BTreeSet<Vec<u8>> {
    let mut out = BTreeSet::new();
    for i in 0..a.len() {
        for j in 0..b.len() {
            if a[i] != b[j] || (i > 0 && j > 0 && a[i - 1] == b[j - 1]) {
                continue;
            }
            let mut len = 0;
            while i + len < a.len() && j + len < b.len() && a[i + len] == b[j + len] {
                len += 1;
            }
            if len < k_min {
                continue;
            }
            let run = &a[i..i + len];
            match k_max {
                None => {
                    out.insert(run.to_vec());
                }
                Some(max) => {
                    let mut at = 0;
                    while at < len {
                        let end = (at + max).min(len);
                        if end - at >= k_min {
                            out.insert(run[at..end].to_vec());
                        }
                        at = end;
                    }
                }
            }
        }
    }
    out
}

pub fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

pub fn contains(hay: &[u8], needle: &[u8]) -> bool {
    find(hay, needle).is_some()
}

/// Expected suspects `{bytes: f}` of a corpus whose only shared content is
/// one planted payload per packet, for adjacent-disjoint pairing and the
/// given filter parameters. Each pair carrying the payload on both sides
/// contributes the payload grown left and right while the packets agree.
pub fn predicted_suspects(
    corpus: &Corpus,
    payload: &[u8],
    tau: f64,
    c: f64,
    min_population: usize,
) -> BTreeMap<Vec<u8>, f64> {
    let mut best: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    for set in corpus.sets() {
        let packets = set.packets();
        let n = packets.len();
        let mut counts: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
        for pair in packets.chunks_exact(2) {
            let (a, b) = (pair[0].payload(), pair[1].payload());
            let (Some(pa), Some(pb)) = (find(a, payload), find(b, payload)) else {
                continue;
            };
            let mut left = 0;
            while pa > left && pb > left && a[pa - left - 1] == b[pb - left - 1] {
                left += 1;
            }
            let mut right = 0;
            let (ea, eb) = (pa + payload.len(), pb + payload.len());
            while ea + right < a.len() && eb + right < b.len() && a[ea + right] == b[eb + right] {
                right += 1;
            }
            *counts.entry(a[pa - left..ea + right].to_vec()).or_default() += 1;
        }
        let fractions: BTreeMap<Vec<u8>, f64> = counts
            .into_iter()
            .map(|(k, s)| (k, (s as f64 / n as f64).sqrt()))
            .collect();
        let mut cutoff = f64::NEG_INFINITY;
        if fractions.len() >= min_population {
            let mut v: Vec<f64> = fractions.values().copied().collect();
            v.sort_by(f64::total_cmp);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64;
            cutoff = mean + c * var.sqrt();
        }
        for (bytes, f) in fractions {
            if f >= tau && f > cutoff {
                let slot = best.entry(bytes).or_insert(f);
                *slot = slot.max(f);
            }
        }
    }
    best
}
