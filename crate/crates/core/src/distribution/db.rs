use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::packet::{decode_packet, encode_packet, AntiMalwarePacket};
use crate::detector::Signature;
use crate::error::Result;
use crate::model::unix_now;

/// The thin client's signature store, keyed by pattern bytes and persisted
/// as a single AMP1 packet.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignatureDb {
    entries: BTreeMap<Vec<u8>, Signature>,
    /// Unix seconds of the last change (or file mtime after a load).
    pub updated_at: u64,
}

impl SignatureDb {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads the database, or returns an empty one if the file is missing.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = match fs::read(path) {
            Ok(bytes) => bytes,
            Err(err) if err.kind() == io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(err) => return Err(err.into()),
        };
        let mut db = Self::new();
        db.merge(&decode_packet(&bytes)?);
        db.updated_at = fs::metadata(path)?
            .modified()
            .ok()
            .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
            .map_or(0, |d| d.as_secs());
        Ok(db)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn signatures(&self) -> impl Iterator<Item = &Signature> {
        self.entries.values()
    }

    pub fn contains(&self, bytes: &[u8]) -> bool {
        self.entries.contains_key(bytes)
    }

    /// Adds unseen signatures, returning how many were new.
    fn merge(&mut self, packet: &AntiMalwarePacket) -> usize {
        let before = self.entries.len();
        for sig in &packet.signatures {
            self.entries
                .entry(sig.bytes().to_vec())
                .or_insert_with(|| sig.clone());
        }
        self.entries.len() - before
    }

    pub fn to_packet(&self) -> AntiMalwarePacket {
        AntiMalwarePacket::new(self.entries.values().cloned().collect())
    }

    /// Atomically replaces the file at `path` with this database.
    pub fn persist(&self, path: &Path) -> Result<()> {
        let bytes = encode_packet(&self.to_packet())?;
        let tmp = path.with_extension("amp1.tmp");
        let mut file = fs::File::create(&tmp)?;
        file.write_all(&bytes)?;
        file.sync_all()?;
        drop(file);
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Merges a received packet and persists the result. On any error the
    /// in-memory database is left unchanged.
    pub fn apply(&mut self, packet: &AntiMalwarePacket, path: &Path) -> Result<usize> {
        let mut next = self.clone();
        let added = next.merge(packet);
        next.updated_at = unix_now();
        next.persist(path)?;
        *self = next;
        Ok(added)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(bytes: &[u8]) -> Signature {
        Signature::from_parts(bytes, bytes.len() as u64, 100)
    }

    #[test]
    fn update_counts_new_signatures() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.amp1");
        let mut db = SignatureDb::new();
        let packet = AntiMalwarePacket::new(vec![sig(b"first"), sig(b"second")]);
        assert_eq!(db.apply(&packet, &path).unwrap(), 2);
        assert_eq!(db.len(), 2);
        assert_eq!(db.apply(&packet, &path).unwrap(), 0);
        assert_eq!(
            SignatureDb::load(&path).unwrap().to_packet(),
            db.to_packet()
        );
    }

    #[test]
    fn internal_duplicates_are_merged() {
        let dir = tempfile::tempdir().unwrap();
        let mut db = SignatureDb::new();
        let packet = AntiMalwarePacket::new(vec![sig(b"dup"), sig(b"dup"), sig(b"other")]);
        assert_eq!(db.apply(&packet, &dir.path().join("db.amp1")).unwrap(), 2);
    }

    #[test]
    fn failed_persist_leaves_memory_untouched() {
        let dir = tempfile::tempdir().unwrap();
        let mut db = SignatureDb::new();
        let bad = dir.path().join("no-such-dir").join("db.amp1");
        assert!(db
            .apply(&AntiMalwarePacket::new(vec![sig(b"x")]), &bad)
            .is_err());
        assert!(db.is_empty());
    }

    #[test]
    fn missing_file_loads_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert!(SignatureDb::load(&dir.path().join("absent"))
            .unwrap()
            .is_empty());
    }
}
