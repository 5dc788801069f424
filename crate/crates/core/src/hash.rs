//! Polynomial pattern hashing.
//!
//! A pattern `c1 c2 .. cL` hashes to `c1*q^(L-1) + c2*q^(L-2) + .. + cL (mod M)`,
//! evaluated by Horner's rule with a reduction after every step so that no
//! intermediate exceeds `M * q + 255`.

use crate::error::{Error, Result};

pub const DEFAULT_BASE: u64 = 257;
pub const DEFAULT_MODULUS: u64 = 10_000;
pub const DEFAULT_MIN_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashParams {
    /// Polynomial base `q`.
    pub base: u64,
    /// Modulus `M`; equal to the Bloom filter's bit count.
    pub modulus: u64,
    /// Minimum pattern length considered by extraction.
    pub min_len: usize,
}

impl Default for HashParams {
    fn default() -> Self {
        HashParams {
            base: DEFAULT_BASE,
            modulus: DEFAULT_MODULUS,
            min_len: DEFAULT_MIN_LEN,
        }
    }
}

impl HashParams {
    pub fn new(base: u64, modulus: u64, min_len: usize) -> Result<Self> {
        let params = HashParams {
            base,
            modulus,
            min_len,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.base < 2 {
            return Err(Error::Config(format!(
                "hash base must be >= 2, got {}",
                self.base
            )));
        }
        // Keeps `acc * base + byte` inside u64 for every reachable `acc`.
        if self.modulus < 2 || self.modulus > u32::MAX as u64 {
            return Err(Error::Config(format!(
                "hash modulus must be in [2, 2^32), got {}",
                self.modulus
            )));
        }
        if self.base > u32::MAX as u64 {
            return Err(Error::Config("hash base must be < 2^32".into()));
        }
        if self.min_len < 1 {
            return Err(Error::Config("minimum pattern length must be >= 1".into()));
        }
        Ok(())
    }
}

/// Horner evaluation without the non-empty check; `base` and `modulus` are
/// assumed to satisfy [`HashParams::validate`].
pub(crate) fn poly_hash(bytes: &[u8], base: u64, modulus: u64) -> u64 {
    bytes
        .iter()
        .fold(0u64, |acc, &c| (acc * base + u64::from(c)) % modulus)
}

pub fn hash_pattern(pattern: &[u8], params: &HashParams) -> Result<u64> {
    if pattern.is_empty() {
        return Err(Error::Argument("cannot hash an empty pattern".into()));
    }
    Ok(poly_hash(pattern, params.base, params.modulus))
}

/// Rabin-Karp window over a byte string, yielding the polynomial hash of
/// every `width`-byte window in order.
#[derive(Debug, Clone)]
pub struct RollingHash {
    base: u64,
    modulus: u64,
    width: usize,
    /// `base^(width-1) mod modulus`, the weight of the byte leaving the window.
    lead_weight: u64,
}

impl RollingHash {
    pub fn new(base: u64, modulus: u64, width: usize) -> Self {
        assert!(width >= 1, "window width must be >= 1");
        let lead_weight = (1..width).fold(1 % modulus, |w, _| w * base % modulus);
        RollingHash {
            base,
            modulus,
            width,
            lead_weight,
        }
    }

    /// Hashes of `data[i..i + width]` for every valid `i`.
    pub fn windows(&self, data: &[u8]) -> Vec<u64> {
        if data.len() < self.width {
            return Vec::new();
        }
        let m = self.modulus;
        let mut out = Vec::with_capacity(data.len() - self.width + 1);
        let mut h = poly_hash(&data[..self.width], self.base, m);
        out.push(h);
        for i in self.width..data.len() {
            let leaving = u64::from(data[i - self.width]) * self.lead_weight % m;
            h = ((h + m - leaving) % m * self.base + u64::from(data[i])) % m;
            out.push(h);
        }
        out
    }
}

/// Probability that a Bloom filter with `m` bits and `k` hash functions
/// reports a false positive after `n` insertions: `(1 - (1 - 1/m)^(kn))^k`.
pub fn collision_probability(m: u64, k: u32, n: u64) -> f64 {
    assert!(m >= 1 && k >= 1, "m and k must be positive");
    if n == 0 {
        return 0.0;
    }
    let kn = f64::from(k) * n as f64;
    // 1 - (1 - 1/m)^(kn), computed without cancellation.
    let fill = -(kn * (-1.0 / m as f64).ln_1p()).exp_m1();
    fill.powi(k as i32)
}

/// The exponential approximation `(1 - e^(-kn/m))^k`.
pub fn collision_probability_approx(m: u64, k: u32, n: u64) -> f64 {
    assert!(m >= 1 && k >= 1, "m and k must be positive");
    let kn = f64::from(k) * n as f64;
    (-(-kn / m as f64).exp_m1()).powi(k as i32)
}

/// Largest insertion count that keeps [`collision_probability`] at or below
/// `target`, or `None` if even a single insertion exceeds it.
pub fn max_insertions_for(m: u64, k: u32, target: f64) -> Option<u64> {
    if collision_probability(m, k, 1) > target {
        return None;
    }
    // Monotone in n, and saturated (probability 1) well before k*n = 64m.
    let (mut lo, mut hi) = (1u64, 64 * m);
    if collision_probability(m, k, hi) <= target {
        return Some(hi);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if collision_probability(m, k, mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}
