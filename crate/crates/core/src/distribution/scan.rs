//! Multi-pattern file scanning.
//!
//! Files are streamed in fixed-size chunks through an Aho-Corasick automaton
//! over all signature patterns. The last `max_pattern_len - 1` bytes of each
//! chunk are carried into the next search window, so matches that straddle a
//! chunk boundary are still seen. Only the first offset of each signature in
//! each file is reported.

use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use aho_corasick::AhoCorasick;
use log::warn;
use walkdir::WalkDir;

use super::db::SignatureDb;
use crate::detector::Signature;
use crate::error::{Error, Result};

pub const DEFAULT_CHUNK_SIZE: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanMatch {
    pub file: PathBuf,
    pub signature: Signature,
    /// Offset of the first occurrence.
    pub offset: u64,
}

pub struct Scanner {
    signatures: Vec<Signature>,
    automaton: Option<AhoCorasick>,
    overlap: usize,
    chunk_size: usize,
    exclude: Vec<PathBuf>,
}

impl Scanner {
    pub fn new(signatures: Vec<Signature>) -> Result<Self> {
        let automaton = if signatures.is_empty() {
            None
        } else {
            Some(
                AhoCorasick::new(signatures.iter().map(Signature::bytes))
                    .map_err(|e| Error::Argument(format!("cannot build matcher: {e}")))?,
            )
        };
        let overlap = signatures
            .iter()
            .map(|s| s.bytes().len())
            .max()
            .unwrap_or(1)
            .saturating_sub(1);
        Ok(Scanner {
            signatures,
            automaton,
            overlap,
            chunk_size: DEFAULT_CHUNK_SIZE,
            exclude: Vec::new(),
        })
    }

    pub fn from_db(db: &SignatureDb) -> Result<Self> {
        Self::new(db.signatures().cloned().collect())
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        assert!(chunk_size > 0, "chunk size must be positive");
        self.chunk_size = chunk_size;
        self
    }

    /// Skips everything at or below these paths (e.g. the quarantine directory).
    pub fn with_exclusions(mut self, exclude: Vec<PathBuf>) -> Self {
        self.exclude = exclude
            .into_iter()
            .map(|p| p.canonicalize().unwrap_or(p))
            .collect();
        self
    }

    /// First-match offsets per signature, indexed like the signature list.
    pub fn scan_reader(&self, mut reader: impl Read) -> io::Result<Vec<Option<u64>>> {
        let mut first = vec![None; self.signatures.len()];
        let Some(ac) = &self.automaton else {
            return Ok(first);
        };
        let mut window: Vec<u8> = Vec::with_capacity(self.overlap + self.chunk_size);
        // File offset of window[0].
        let mut base = 0u64;
        let mut chunk = vec![0u8; self.chunk_size];
        loop {
            let n = match reader.read(&mut chunk) {
                Ok(0) => break,
                Ok(n) => n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e),
            };
            window.extend_from_slice(&chunk[..n]);
            for m in ac.find_overlapping_iter(&window) {
                let at = base + m.start() as u64;
                let slot = &mut first[m.pattern().as_usize()];
                if slot.is_none_or(|prev| at < prev) {
                    *slot = Some(at);
                }
            }
            let keep = self.overlap.min(window.len());
            let drop = window.len() - keep;
            window.drain(..drop);
            base += drop as u64;
        }
        Ok(first)
    }

    fn excluded(&self, path: &Path) -> bool {
        if self.exclude.is_empty() {
            return false;
        }
        let path = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
        self.exclude.iter().any(|ex| path.starts_with(ex))
    }

    /// Scans every regular file under `root`. Results are ordered by path,
    /// then signature bytes. Unreadable files are skipped with a warning.
    pub fn scan_path(&self, root: &Path) -> Result<Vec<ScanMatch>> {
        if !root.exists() {
            return Err(Error::Argument(format!(
                "scan root {} does not exist",
                root.display()
            )));
        }
        let mut matches = Vec::new();
        if self.automaton.is_none() {
            return Ok(matches);
        }
        let walker = WalkDir::new(root)
            .follow_links(false)
            .sort_by_file_name()
            .into_iter()
            .filter_entry(|e| !self.excluded(e.path()));
        for entry in walker {
            let entry = match entry {
                Ok(entry) => entry,
                Err(err) => {
                    warn!("skipping unreadable entry: {err}");
                    continue;
                }
            };
            if !entry.file_type().is_file() {
                continue;
            }
            let offsets = match File::open(entry.path()).and_then(|f| self.scan_reader(f)) {
                Ok(offsets) => offsets,
                Err(err) => {
                    warn!("skipping {}: {err}", entry.path().display());
                    continue;
                }
            };
            for (sig, offset) in self.signatures.iter().zip(offsets) {
                if let Some(offset) = offset {
                    matches.push(ScanMatch {
                        file: entry.path().to_path_buf(),
                        signature: sig.clone(),
                        offset,
                    });
                }
            }
        }
        matches.sort_by(|a, b| {
            a.file
                .cmp(&b.file)
                .then_with(|| a.signature.bytes().cmp(b.signature.bytes()))
        });
        Ok(matches)
    }
}

pub fn scan_path(db: &SignatureDb, root: &Path) -> Result<Vec<ScanMatch>> {
    Scanner::from_db(db)?.scan_path(root)
}
