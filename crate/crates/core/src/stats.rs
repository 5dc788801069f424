//! Coincidence count tables and suspect flagging.
//!
//! Each packet set gets one table. A pattern's coincidence count `S` is the
//! number of analysed pairs in which it was found, and its fraction is
//! `f = sqrt(S / N)` for the set's packet count `N`.
//!
//! Flagging is two-stage: an absolute threshold on `f`, then (for tables with
//! enough distinct patterns) an outlier test keeping only candidates with
//! `f > mean + c * stddev` over the whole table.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::extract::Pattern;

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceEntry {
    pub pattern: Pattern,
    pub count: u64,
    pub fraction: f64,
}

pub fn coincidence_fraction(count: u64, packets: usize) -> Result<f64> {
    if packets == 0 {
        return Err(Error::Argument("coincidence fraction needs N >= 1".into()));
    }
    Ok((count as f64 / packets as f64).sqrt())
}

#[derive(Debug, Clone)]
pub struct CoincidenceTable {
    packets: usize,
    // Hash first for cheap lookup; the bytes inside `Pattern` are the real key.
    entries: HashMap<u64, Vec<CoincidenceEntry>>,
    len: usize,
}

impl CoincidenceTable {
    pub fn new(packets: usize) -> Result<Self> {
        if packets == 0 {
            return Err(Error::Argument("a coincidence table needs N >= 1".into()));
        }
        Ok(CoincidenceTable {
            packets,
            entries: HashMap::new(),
            len: 0,
        })
    }

    /// Packets in the owning set (`N`).
    pub fn packets(&self) -> usize {
        self.packets
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn record(&mut self, pattern: &Pattern) {
        let n = self.packets;
        let bucket = self.entries.entry(pattern.hash()).or_default();
        match bucket
            .iter_mut()
            .find(|e| e.pattern.bytes() == pattern.bytes())
        {
            Some(entry) => {
                entry.count += 1;
                entry.fraction = (entry.count as f64 / n as f64).sqrt();
            }
            None => {
                bucket.push(CoincidenceEntry {
                    pattern: pattern.clone(),
                    count: 1,
                    fraction: (1.0 / n as f64).sqrt(),
                });
                self.len += 1;
            }
        }
    }

    pub fn get(&self, bytes: &[u8]) -> Option<&CoincidenceEntry> {
        self.entries
            .values()
            .flatten()
            .find(|e| e.pattern.bytes() == bytes)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CoincidenceEntry> {
        self.entries.values().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterPolicy {
    /// Absolute threshold on `f`.
    pub tau: f64,
    /// Deviation multiplier.
    pub c: f64,
    /// Distinct entries needed before the deviation stage applies.
    pub min_population: usize,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            tau: 0.3,
            c: 3.0,
            min_population: 10,
        }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!(
                "tau must be in (0, 1], got {}",
                self.tau
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("c must be positive, got {}", self.c)));
        }
        if self.min_population < 2 {
            return Err(Error::Config("min_population must be >= 2".into()));
        }
        Ok(())
    }
}

/// `f` descending, then pattern bytes ascending.
fn suspect_order(a: &CoincidenceEntry, b: &CoincidenceEntry) -> Ordering {
    b.fraction
        .total_cmp(&a.fraction)
        .then_with(|| a.pattern.bytes().cmp(b.pattern.bytes()))
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `mean + c * stddev`; entries strictly above it are outliers.
pub fn outlier_cutoff(fractions: &[f64], c: f64) -> f64 {
    let (mean, std) = mean_std(fractions);
    mean + c * std
}

pub fn flag_suspects(table: &CoincidenceTable, policy: &FilterPolicy) -> Vec<CoincidenceEntry> {
    let mut candidates: Vec<CoincidenceEntry> = table
        .entries()
        .filter(|e| e.fraction >= policy.tau)
        .cloned()
        .collect();
    if table.len() >= policy.min_population {
        // Sorted so the float sums do not depend on map iteration order.
        let mut fractions: Vec<f64> = table.entries().map(|e| e.fraction).collect();
        fractions.sort_by(f64::total_cmp);
        let cutoff = outlier_cutoff(&fractions, policy.c);
        candidates.retain(|e| e.fraction > cutoff);
    }
    candidates.sort_by(suspect_order);
    candidates
}

/// Union of the per-table suspects, one entry per distinct pattern (the one
/// with the highest `f`).
pub fn aggregate_corpus_suspects(
    tables: &[CoincidenceTable],
    policy: &FilterPolicy,
) -> Result<Vec<CoincidenceEntry>> {
    if tables.is_empty() {
        return Err(Error::Argument("no coincidence tables to aggregate".into()));
    }
    let mut best: BTreeMap<Vec<u8>, CoincidenceEntry> = BTreeMap::new();
    for table in tables {
        for entry in flag_suspects(table, policy) {
            match best.get(entry.pattern.bytes()) {
                Some(prev) if prev.fraction >= entry.fraction => {}
                _ => {
                    best.insert(entry.pattern.bytes().to_vec(), entry);
                }
            }
        }
    }
    let mut out: Vec<CoincidenceEntry> = best.into_values().collect();
    out.sort_by(suspect_order);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::HashParams;

    fn pattern(bytes: &[u8]) -> Pattern {
        Pattern::new(
            bytes,
            &HashParams {
                min_len: 1,
                ..Default::default()
            },
        )
        .unwrap()
    }

    /// A table whose entries carry exactly the given counts.
    fn table_with_counts(n: usize, counts: &[u64]) -> CoincidenceTable {
        let mut t = CoincidenceTable::new(n).unwrap();
        for (i, &c) in counts.iter().enumerate() {
            let p = pattern(format!("pattern-{i:04}").as_bytes());
            for _ in 0..c {
                t.record(&p);
            }
        }
        t
    }

    #[test]
    fn fraction_values() {
        assert_eq!(coincidence_fraction(25, 100).unwrap(), 0.5);
        assert_eq!(coincidence_fraction(0, 100).unwrap(), 0.0);
        assert_eq!(coincidence_fraction(100, 100).unwrap(), 1.0);
        assert!((coincidence_fraction(50, 100).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(coincidence_fraction(1, 0).is_err());
    }

    #[test]
    fn recording_increments() {
        let mut t = CoincidenceTable::new(100).unwrap();
        let bcd = pattern(b"BCD");
        t.record(&bcd);
        t.record(&bcd);
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(b"BCD").unwrap().count, 2);
    }

    #[test]
    fn twenty_five_hits_in_hundred_is_half() {
        let t = table_with_counts(100, &[25]);
        assert_eq!(t.entries().next().unwrap().fraction, 0.5);
    }

    #[test]
    fn hash_collisions_stay_distinct() {
        let params = HashParams {
            modulus: 100,
            min_len: 1,
            ..Default::default()
        };
        let mut seen: HashMap<u64, Vec<u8>> = HashMap::new();
        let (a, b) = (0..=u16::MAX)
            .map(|v| v.to_be_bytes().to_vec())
            .find_map(|bytes| {
                let h = crate::hash::hash_pattern(&bytes, &params).unwrap();
                match seen.insert(h, bytes.clone()) {
                    Some(prev) if prev != bytes => Some((prev, bytes)),
                    _ => None,
                }
            })
            .unwrap();
        let (pa, pb) = (
            Pattern::new(&a, &params).unwrap(),
            Pattern::new(&b, &params).unwrap(),
        );
        assert_eq!(pa.hash(), pb.hash());
        let mut t = CoincidenceTable::new(10).unwrap();
        t.record(&pa);
        t.record(&pb);
        t.record(&pb);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get(&a).unwrap().count, 1);
        assert_eq!(t.get(&b).unwrap().count, 2);
    }

    #[test]
    fn empty_table_flags_nothing() {
        let t = CoincidenceTable::new(100).unwrap();
        assert!(flag_suspects(&t, &FilterPolicy::default()).is_empty());
    }

    #[test]
    fn lone_entry_skips_deviation_stage() {
        let t = table_with_counts(100, &[50]);
        let flagged = flag_suspects(&t, &FilterPolicy::default());
        assert_eq!(flagged.len(), 1);
        assert!((flagged[0].fraction - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn outlier_among_hundred() {
        // N = 400 makes both fractions exact: S = 1 gives 0.05, S = 324 gives 0.9.
        let mut counts = vec![1u64; 99];
        counts.insert(37, 324);
        let t = table_with_counts(400, &counts);
        let flagged = flag_suspects(&t, &FilterPolicy::default());
        assert_eq!(flagged.len(), 1);
        assert_eq!(flagged[0].count, 324);
        assert!((flagged[0].fraction - 0.9).abs() < 1e-12);

        let fractions: Vec<f64> = t.entries().map(|e| e.fraction).collect();
        let (mean, std) = mean_std(&fractions);
        assert!((mean - 0.0585).abs() < 1e-9);
        assert!((std - 0.084_574_523_4).abs() < 1e-6);
    }

    #[test]
    fn uniform_table_flags_nothing() {
        let t = table_with_counts(100, &[25; 100]);
        assert!(flag_suspects(&t, &FilterPolicy::default()).is_empty());
    }

    #[test]
    fn ordering_is_fraction_then_bytes() {
        let t = table_with_counts(100, &[16, 25, 25, 9]);
        let flagged: Vec<u64> = flag_suspects(&t, &FilterPolicy::default())
            .iter()
            .map(|e| e.count)
            .collect();
        assert_eq!(flagged, [25, 25, 16, 9]);
        let names: Vec<Vec<u8>> = flag_suspects(&t, &FilterPolicy::default())
            .iter()
            .map(|e| e.pattern.bytes().to_vec())
            .collect();
        assert!(names[0] < names[1]);
    }

    #[test]
    fn aggregation_keeps_highest_fraction() {
        let p = pattern(b"shared-pattern");
        let mut a = CoincidenceTable::new(100).unwrap();
        let mut b = CoincidenceTable::new(100).unwrap();
        for _ in 0..16 {
            a.record(&p);
        }
        for _ in 0..36 {
            b.record(&p);
        }
        let out = aggregate_corpus_suspects(&[a.clone(), b], &FilterPolicy::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].fraction - 0.6).abs() < 1e-12);
        assert_eq!(
            aggregate_corpus_suspects(&[a.clone()], &FilterPolicy::default()).unwrap(),
            flag_suspects(&a, &FilterPolicy::default())
        );
    }

    #[test]
    fn aggregation_of_quiet_tables_is_empty() {
        let tables: Vec<CoincidenceTable> =
            (0..10).map(|_| table_with_counts(100, &[1, 2])).collect();
        assert!(aggregate_corpus_suspects(&tables, &FilterPolicy::default())
            .unwrap()
            .is_empty());
        assert!(aggregate_corpus_suspects(&[], &FilterPolicy::default()).is_err());
    }

    #[test]
    fn policy_validation() {
        assert!(FilterPolicy::default().validate().is_ok());
        assert!(FilterPolicy {
            tau: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(FilterPolicy {
            tau: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(FilterPolicy {
            c: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(FilterPolicy {
            min_population: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    proptest::proptest! {
        #[test]
        fn recording_never_lowers_a_fraction(seq in proptest::collection::vec(0usize..8, 1..200)) {
            let pats: Vec<Pattern> = (0..8).map(|i| pattern(format!("p{i}").as_bytes())).collect();
            let mut t = CoincidenceTable::new(50).unwrap();
            let mut last = [0.0f64; 8];
            for &i in &seq {
                t.record(&pats[i]);
                for (j, p) in pats.iter().enumerate() {
                    let f = t.get(p.bytes()).map_or(0.0, |e| e.fraction);
                    proptest::prop_assert!(f >= last[j]);
                    last[j] = f;
                }
            }
        }

        #[test]
        fn outliers_are_shift_invariant(
            fractions in proptest::collection::vec(0.0f64..0.5, 10..60),
            spike in 0.5f64..1.0,
            shift in -0.4f64..0.4,
        ) {
            let mut values = fractions;
            values.push(spike);
            let outliers = |offset: f64| -> Option<Vec<usize>> {
                let shifted: Vec<f64> = values.iter().map(|f| f + offset).collect();
                let cut = outlier_cutoff(&shifted, 3.0);
                // Values within rounding of the cutoff could go either way.
                if shifted.iter().any(|v| (v - cut).abs() < 1e-9) {
                    return None;
                }
                Some((0..shifted.len()).filter(|&i| shifted[i] > cut).collect())
            };
            if let (Some(a), Some(b)) = (outliers(0.0), outliers(shift)) {
                proptest::prop_assert_eq!(a, b);
            }
        }
    }
}
