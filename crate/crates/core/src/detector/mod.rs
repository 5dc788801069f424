//! The honeypot side: corpus intake, detection, the suspects log and
//! signature generation.

use std::collections::HashSet;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use rayon::prelude::*;

use crate::error::Result;
use crate::extract::{extract_set_patterns, ExtractionConfig, Pattern};
use crate::model::{unix_now, Corpus, PacketSet};
use crate::stats::{aggregate_corpus_suspects, CoincidenceEntry, CoincidenceTable, FilterPolicy};

mod log;
mod service;
mod spool;
mod transfer;

pub use self::log::{append_suspects, format_suspect_line};
pub use service::{run_cycle, run_service, DetectionSink, ServiceConfig, DEFAULT_PERIOD};
pub use spool::{receive_corpus, spool_corpus, SpooledCorpus, PROCESSED_DIR, REJECTED_DIR};
pub use transfer::{push_corpus, PushReply, PushServer, CXFR_MAGIC, MAX_PUSH_LEN};

/// A distributable byte pattern.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    bytes: Arc<[u8]>,
    hash: u64,
    created_at: u64,
}

impl Signature {
    pub fn from_pattern(pattern: &Pattern, created_at: u64) -> Self {
        Signature {
            bytes: pattern.bytes().into(),
            hash: pattern.hash(),
            created_at,
        }
    }

    /// Rebuilds a signature received over the wire; the hash is taken as given.
    pub fn from_parts(bytes: &[u8], hash: u64, created_at: u64) -> Self {
        Signature {
            bytes: bytes.into(),
            hash,
            created_at,
        }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn hash(&self) -> u64 {
        self.hash
    }

    /// Unix seconds.
    pub fn created_at(&self) -> u64 {
        self.created_at
    }
}

#[derive(Debug, Clone)]
pub struct DetectionReport {
    pub corpus_id: String,
    pub suspects: Vec<CoincidenceEntry>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub extraction: ExtractionConfig,
    pub policy: FilterPolicy,
    pub sets_analyzed: usize,
}

/// Builds the coincidence table of one packet set.
pub fn build_table(set: &PacketSet, config: &ExtractionConfig) -> Result<CoincidenceTable> {
    let mut table = CoincidenceTable::new(set.len())?;
    for occurrence in extract_set_patterns(set, config)? {
        table.record(&occurrence.pattern);
    }
    Ok(table)
}

pub fn run_detection(
    corpus: &Corpus,
    config: &ExtractionConfig,
    policy: &FilterPolicy,
) -> Result<DetectionReport> {
    config.validate()?;
    policy.validate()?;
    let started_at = Utc::now();
    let tables: Vec<CoincidenceTable> = corpus
        .sets()
        .par_iter()
        .map(|set| build_table(set, config))
        .collect::<Result<_>>()?;
    let suspects = if tables.is_empty() {
        Vec::new()
    } else {
        aggregate_corpus_suspects(&tables, policy)?
    };
    Ok(DetectionReport {
        corpus_id: format!("corpus@{}", corpus.created_at()),
        suspects,
        started_at,
        finished_at: Utc::now().max(started_at),
        extraction: *config,
        policy: *policy,
        sets_analyzed: tables.len(),
    })
}

/// One signature per distinct suspect, in report order.
pub fn generate_signatures(report: &DetectionReport) -> Vec<Signature> {
    let now = unix_now();
    let mut seen = HashSet::new();
    report
        .suspects
        .iter()
        .filter(|entry| seen.insert(entry.pattern.bytes()))
        .map(|entry| Signature::from_pattern(&entry.pattern, now))
        .collect()
}
