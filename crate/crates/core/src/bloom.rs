//! Bloom filter over byte patterns.
//!
//! The `k` index functions come from extended double hashing of two
//! polynomial hashes: `h_i = (H1 + i*H2 + i^2) mod m`, where `H1` uses base
//! `q` and `H2` uses base `q + 2` and is forced odd.

use crate::error::{Error, Result};
use crate::hash::{poly_hash, HashParams, DEFAULT_MODULUS};

pub const DEFAULT_HASH_COUNT: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BloomParams {
    /// Number of bits.
    pub m: u64,
    /// Number of index functions.
    pub k: u32,
    /// Expected insertions; only used for sizing diagnostics.
    pub n_expected: u64,
}

impl Default for BloomParams {
    fn default() -> Self {
        BloomParams {
            m: DEFAULT_MODULUS,
            k: DEFAULT_HASH_COUNT,
            n_expected: 1500,
        }
    }
}

impl BloomParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 8 || self.m > u32::MAX as u64 {
            return Err(Error::Config(format!(
                "bloom bit count must be in [8, 2^32), got {}",
                self.m
            )));
        }
        if !(1..=32).contains(&self.k) {
            return Err(Error::Config(format!(
                "bloom hash count must be in [1, 32], got {}",
                self.k
            )));
        }
        Ok(())
    }

    /// Expected false-positive rate once `n_expected` patterns are inserted.
    pub fn expected_fp_rate(&self) -> f64 {
        crate::hash::collision_probability(self.m, self.k, self.n_expected)
    }
}

/// The `k` index functions of a filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HasherFamily {
    m: u64,
    k: u32,
    base: u64,
}

pub fn derive_hashers(params: &BloomParams, base_params: &HashParams) -> Result<HasherFamily> {
    params.validate()?;
    base_params.validate()?;
    Ok(HasherFamily {
        m: params.m,
        k: params.k,
        base: base_params.base,
    })
}

impl HasherFamily {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// The two underlying hashes `(H1, H2)` of a pattern, `H2` already odd.
    pub fn base_hashes(&self, pattern: &[u8]) -> (u64, u64) {
        (
            poly_hash(pattern, self.base, self.m),
            poly_hash(pattern, self.base + 2, self.m) | 1,
        )
    }

    pub fn second_base(&self) -> u64 {
        self.base + 2
    }

    pub fn first_base(&self) -> u64 {
        self.base
    }

    /// Bit positions for precomputed `(H1, H2)`; `h2` need not be odd yet.
    pub fn indices_from(&self, h1: u64, h2: u64) -> impl Iterator<Item = u64> {
        let (m, h2) = (self.m, (h2 | 1) % self.m);
        let h1 = h1 % m;
        (0..u64::from(self.k)).map(move |i| (h1 + i * h2 % m + i * i % m) % m)
    }

    pub fn indices(&self, pattern: &[u8]) -> impl Iterator<Item = u64> {
        let (h1, h2) = self.base_hashes(pattern);
        self.indices_from(h1, h2)
    }
}

#[derive(Debug, Clone)]
pub struct BloomFilter {
    words: Vec<u64>,
    params: BloomParams,
    hashers: HasherFamily,
    inserted: u64,
}

impl BloomFilter {
    pub fn new(params: BloomParams, base_params: &HashParams) -> Result<Self> {
        let hashers = derive_hashers(&params, base_params)?;
        Ok(BloomFilter {
            words: vec![0; params.m.div_ceil(64) as usize],
            params,
            hashers,
            inserted: 0,
        })
    }

    pub fn params(&self) -> &BloomParams {
        &self.params
    }

    pub fn hashers(&self) -> &HasherFamily {
        &self.hashers
    }

    /// Number of insert calls so far.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn popcount(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    fn set(&mut self, bit: u64) {
        self.words[(bit / 64) as usize] |= 1 << (bit % 64);
    }

    fn get(&self, bit: u64) -> bool {
        self.words[(bit / 64) as usize] & (1 << (bit % 64)) != 0
    }

    pub fn insert(&mut self, pattern: &[u8]) {
        let (h1, h2) = self.hashers.base_hashes(pattern);
        self.insert_hashed(h1, h2);
    }

    pub fn contains(&self, pattern: &[u8]) -> bool {
        let (h1, h2) = self.hashers.base_hashes(pattern);
        self.contains_hashed(h1, h2)
    }

    /// Insert by precomputed base hashes (e.g. from a rolling window).
    pub fn insert_hashed(&mut self, h1: u64, h2: u64) {
        let hashers = self.hashers;
        for bit in hashers.indices_from(h1, h2) {
            self.set(bit);
        }
        self.inserted += 1;
    }

    pub fn contains_hashed(&self, h1: u64, h2: u64) -> bool {
        self.hashers.indices_from(h1, h2).all(|bit| self.get(bit))
    }
}
