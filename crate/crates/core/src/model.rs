//! Packets and their grouping into packet sets and corpora.
//!
//! A [`PacketSet`] is the unit of coincidence analysis: every statistic is
//! normalised by its packet count, so sets are always full (trailing partial
//! chunks are dropped rather than padded). A [`Corpus`] groups sets for
//! transfer to the detector.

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};

pub const MAX_PAYLOAD_LEN: usize = 65535;
pub const DEFAULT_PACKETS_PER_SET: usize = 100;
pub const DEFAULT_SETS_PER_CORPUS: usize = 10;

/// An application-layer payload captured off the wire.
///
/// The payload is reference counted and never mutated after construction, so
/// cloning a packet is cheap and packets can be shared across threads.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Packet {
    payload: Arc<[u8]>,
    source_id: Option<String>,
}

impl Packet {
    pub fn new(payload: impl Into<Vec<u8>>) -> Result<Self> {
        let payload = payload.into();
        if payload.len() > MAX_PAYLOAD_LEN {
            return Err(Error::Argument(format!(
                "payload of {} bytes exceeds {MAX_PAYLOAD_LEN}",
                payload.len()
            )));
        }
        Ok(Packet {
            payload: payload.into(),
            source_id: None,
        })
    }

    pub fn with_source(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = Some(source_id.into());
        self
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn source_id(&self) -> Option<&str> {
        self.source_id.as_deref()
    }

    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketSet {
    packets: Vec<Packet>,
}

impl PacketSet {
    pub fn new(packets: Vec<Packet>) -> Result<Self> {
        if packets.is_empty() {
            return Err(Error::Argument(
                "a packet set needs at least one packet".into(),
            ));
        }
        Ok(PacketSet { packets })
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    /// Number of packets in the set (`N` in the coincidence fraction).
    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    sets: Vec<PacketSet>,
    /// Unix seconds.
    created_at: u64,
}

impl Corpus {
    pub fn new(sets: Vec<PacketSet>, created_at: u64) -> Self {
        Corpus { sets, created_at }
    }

    pub fn sets(&self) -> &[PacketSet] {
        &self.sets
    }

    pub fn created_at(&self) -> u64 {
        self.created_at
    }

    pub fn packet_count(&self) -> usize {
        self.sets.iter().map(PacketSet::len).sum()
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Groups packets into consecutive sets of exactly `n`.
///
/// Packets with an empty payload are dropped first; a trailing chunk shorter
/// than `n` is discarded.
pub fn build_packet_sets(packets: &[Packet], n: usize) -> Result<Vec<PacketSet>> {
    if n < 2 {
        return Err(Error::Config(format!(
            "packets per set must be >= 2, got {n}"
        )));
    }
    let non_empty: Vec<&Packet> = packets.iter().filter(|p| !p.is_empty()).collect();
    Ok(non_empty
        .chunks_exact(n)
        .map(|chunk| PacketSet {
            packets: chunk.iter().map(|&p| p.clone()).collect(),
        })
        .collect())
}

/// Groups packet sets into consecutive corpora of `per_corpus` sets, stamped
/// with the current time.
pub fn build_corpus(sets: &[PacketSet], per_corpus: usize) -> Result<Vec<Corpus>> {
    if per_corpus < 1 {
        return Err(Error::Config("sets per corpus must be >= 1".into()));
    }
    let now = unix_now();
    Ok(sets
        .chunks_exact(per_corpus)
        .map(|chunk| Corpus::new(chunk.to_vec(), now))
        .collect())
}
