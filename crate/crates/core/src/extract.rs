//! Common-pattern extraction between packet pairs.
//!
//! For two payloads, a *pattern* is a maximal aligned match: a run
//! `p1[i..i+L] == p2[j..j+L]` that cannot be extended on either side
//! (`p1[i-1] != p2[j-1]` and `p1[i+L] != p2[j+L]`, or a payload edge), with
//! `L >= min_len`. The result is the set of distinct byte strings of such
//! runs, so a string can appear both on its own and inside a longer pattern
//! when the two come from different alignments.
//!
//! Candidate alignments are found through the `min_len`-grams of the first
//! payload: each gram goes into a fresh [`BloomFilter`] and into an exact
//! index; the second payload's grams probe the filter first and only filter
//! hits are looked up and compared byte-for-byte. The filter never drops a
//! true match, and every reported run is verified, so the output is exact.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bloom::{BloomFilter, BloomParams};
use crate::error::{Error, Result};
use crate::hash::{poly_hash, HashParams, RollingHash, DEFAULT_BASE, DEFAULT_MIN_LEN};
use crate::model::{Packet, PacketSet};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    bytes: Arc<[u8]>,
    hash: u64,
}

impl Pattern {
    pub fn new(bytes: &[u8], params: &HashParams) -> Result<Self> {
        if bytes.len() < params.min_len {
            return Err(Error::Argument(format!(
                "pattern of {} bytes is shorter than the minimum {}",
                bytes.len(),
                params.min_len
            )));
        }
        Ok(Pattern {
            hash: crate::hash::hash_pattern(bytes, params)?,
            bytes: bytes.into(),
        })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn hash(&self) -> u64 {
        self.hash
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pattern")
            .field("bytes", &String::from_utf8_lossy(&self.bytes))
            .field("hash", &self.hash)
            .finish()
    }
}

/// How the packets of a set are grouped into pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// `(0,1), (2,3), ...`; an odd trailing packet stays unpaired.
    #[default]
    AdjacentDisjoint,
    /// Every unordered pair, in lexicographic order.
    AllPairs,
}

impl Pairing {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pairing::AdjacentDisjoint => "adjacent-disjoint",
            Pairing::AllPairs => "all-pairs",
        }
    }
}

impl std::str::FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacent-disjoint" => Ok(Pairing::AdjacentDisjoint),
            "all-pairs" => Ok(Pairing::AllPairs),
            other => Err(Error::Config(format!("unknown pairing strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractionConfig {
    pub min_len: usize,
    /// Runs longer than this are cut into `max_len` windows.
    pub max_len: Option<usize>,
    pub pairing: Pairing,
    pub bloom: BloomParams,
    /// Polynomial base `q`; the modulus is `bloom.m`.
    pub hash_base: u64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            min_len: DEFAULT_MIN_LEN,
            max_len: None,
            pairing: Pairing::default(),
            bloom: BloomParams::default(),
            hash_base: DEFAULT_BASE,
        }
    }
}

impl ExtractionConfig {
    pub fn with_min_len(min_len: usize) -> Self {
        ExtractionConfig {
            min_len,
            ..Default::default()
        }
    }

    pub fn hash_params(&self) -> HashParams {
        HashParams {
            base: self.hash_base,
            modulus: self.bloom.m,
            min_len: self.min_len,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hash_params().validate()?;
        self.bloom.validate()?;
        if let Some(max) = self.max_len {
            if max < self.min_len {
                return Err(Error::Config(format!(
                    "max pattern length {max} is below the minimum {}",
                    self.min_len
                )));
            }
        }
        Ok(())
    }
}

pub fn pair_packets(set: &PacketSet, strategy: Pairing) -> Vec<(usize, usize)> {
    let n = set.len();
    match strategy {
        Pairing::AdjacentDisjoint => (0..n / 2).map(|p| (2 * p, 2 * p + 1)).collect(),
        Pairing::AllPairs => (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect(),
    }
}

/// Splits a maximal run according to the length cap.
pub(crate) fn split_run(run: &[u8], min_len: usize, max_len: Option<usize>) -> Vec<&[u8]> {
    match max_len {
        Some(max) if run.len() > max => run
            .chunks(max)
            .filter(|piece| piece.len() >= min_len)
            .collect(),
        _ => vec![run],
    }
}

/// Byte strings of all maximal aligned matches of length >= `min_len`,
/// sorted and deduplicated.
fn common_runs(a: &[u8], b: &[u8], config: &ExtractionConfig) -> Result<Vec<Vec<u8>>> {
    let k = config.min_len;
    if a.len() < k || b.len() < k {
        return Ok(Vec::new());
    }
    let hp = config.hash_params();
    let mut filter = BloomFilter::new(config.bloom, &hp)?;
    let (q1, q2, m) = (
        filter.hashers().first_base(),
        filter.hashers().second_base(),
        config.bloom.m,
    );

    let a1 = RollingHash::new(q1, m, k).windows(a);
    let a2 = RollingHash::new(q2, m, k).windows(a);
    let mut index: HashMap<(u64, u64), Vec<usize>> = HashMap::with_capacity(a1.len());
    for (i, (&h1, &h2)) in a1.iter().zip(&a2).enumerate() {
        filter.insert_hashed(h1, h2);
        index.entry((h1, h2)).or_default().push(i);
    }

    let b1 = RollingHash::new(q1, m, k).windows(b);
    let b2 = RollingHash::new(q2, m, k).windows(b);
    let mut runs = Vec::new();
    for (j, (&h1, &h2)) in b1.iter().zip(&b2).enumerate() {
        if !filter.contains_hashed(h1, h2) {
            continue;
        }
        let Some(starts) = index.get(&(h1, h2)) else {
            continue;
        };
        for &i in starts {
            // Only the leftmost gram of a run starts it; later grams on the
            // same diagonal were already covered.
            if i > 0 && j > 0 && a[i - 1] == b[j - 1] {
                continue;
            }
            if a[i..i + k] != b[j..j + k] {
                continue;
            }
            let mut len = k;
            while i + len < a.len() && j + len < b.len() && a[i + len] == b[j + len] {
                len += 1;
            }
            for piece in split_run(&a[i..i + len], k, config.max_len) {
                runs.push(piece.to_vec());
            }
        }
    }
    runs.sort_unstable();
    runs.dedup();
    Ok(runs)
}

/// All maximal common patterns of two packets, sorted by bytes.
pub fn extract_common_patterns(
    p1: &Packet,
    p2: &Packet,
    config: &ExtractionConfig,
) -> Result<Vec<Pattern>> {
    config.validate()?;
    let (q, m) = (config.hash_base, config.bloom.m);
    Ok(common_runs(p1.payload(), p2.payload(), config)?
        .into_iter()
        .map(|bytes| Pattern {
            hash: poly_hash(&bytes, q, m),
            bytes: bytes.into(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub pattern: Pattern,
    pub pair: (usize, usize),
}

/// Extraction over every pair of a set. Each distinct pattern contributes at
/// most one occurrence per pair; output is ordered by pair, then bytes.
pub fn extract_set_patterns(set: &PacketSet, config: &ExtractionConfig) -> Result<Vec<Occurrence>> {
    config.validate()?;
    let packets = set.packets();
    let per_pair: Vec<Vec<Occurrence>> = pair_packets(set, config.pairing)
        .into_par_iter()
        .map(|pair| {
            extract_common_patterns(&packets[pair.0], &packets[pair.1], config).map(|patterns| {
                patterns
                    .into_iter()
                    .map(|pattern| Occurrence { pattern, pair })
                    .collect()
            })
        })
        .collect::<Result<_>>()?;
    Ok(per_pair.into_iter().flatten().collect())
}
