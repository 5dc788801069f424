//! Spool directory intake. Producers write CORP files under a dot-prefixed
//! temporary name and rename them into place; the receiver only looks at
//! visible regular files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};

use crate::corpus_format::read_corpus;
use crate::error::Result;
use crate::model::Corpus;

pub const PROCESSED_DIR: &str = "processed";
pub const REJECTED_DIR: &str = "rejected";

#[derive(Debug, Clone)]
pub struct SpooledCorpus {
    /// File name in the spool, used as the corpus identifier.
    pub id: String,
    pub corpus: Corpus,
    /// Where the file now lives under `processed/`.
    pub path: PathBuf,
}

fn move_into(file: &Path, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let name = file.file_name().expect("spool entries have names");
    let mut target = dir.join(name);
    let mut n = 1;
    while target.exists() {
        target = dir.join(format!("{}.{n}", name.to_string_lossy()));
        n += 1;
    }
    fs::rename(file, &target)?;
    Ok(target)
}

/// Takes the oldest valid corpus out of the spool (by `created_at`, then file
/// name) and moves it to `processed/`. Malformed files found on the way are
/// moved to `rejected/`.
pub fn receive_corpus(spool: &Path) -> Result<Option<SpooledCorpus>> {
    let mut candidates: Vec<(u64, String, PathBuf, Corpus)> = Vec::new();
    for entry in fs::read_dir(spool)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') || !entry.file_type()?.is_file() {
            continue;
        }
        let path = entry.path();
        let parsed = fs::read(&path)
            .map_err(Into::into)
            .and_then(|b| read_corpus(&b));
        match parsed {
            Ok(corpus) => candidates.push((corpus.created_at(), name, path, corpus)),
            Err(err) => {
                warn!("rejecting spool file {name}: {err}");
                if let Err(move_err) = move_into(&path, &spool.join(REJECTED_DIR)) {
                    warn!("could not move {name} to {REJECTED_DIR}/: {move_err}");
                }
            }
        }
    }
    let Some((_, id, path, corpus)) = candidates
        .into_iter()
        .min_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)))
    else {
        return Ok(None);
    };
    let path = move_into(&path, &spool.join(PROCESSED_DIR))?;
    info!("received corpus {id} ({} sets)", corpus.sets().len());
    Ok(Some(SpooledCorpus { id, corpus, path }))
}

static SPOOL_SEQ: AtomicU64 = AtomicU64::new(0);

/// Writes CORP bytes into the spool atomically (temp file, fsync, rename)
/// and returns the final path.
pub fn spool_corpus(spool: &Path, created_at: u64, bytes: &[u8]) -> Result<PathBuf> {
    let seq = SPOOL_SEQ.fetch_add(1, Ordering::Relaxed);
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.subsec_nanos())
        .unwrap_or(0);
    let stem = format!(
        "corpus-{created_at}-{}-{nanos:09}-{seq}",
        std::process::id()
    );
    let tmp = spool.join(format!(".{stem}.tmp"));
    let target = spool.join(format!("{stem}.corp"));
    let mut file = fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, &target)?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_format::write_corpus;
    use crate::model::{Packet, PacketSet};

    fn corpus(created_at: u64) -> Vec<u8> {
        let set = PacketSet::new(vec![Packet::new(*b"AB").unwrap()]).unwrap();
        write_corpus(&Corpus::new(vec![set], created_at)).unwrap()
    }

    #[test]
    fn empty_spool_yields_nothing() {
        let dir = tempfile::tempdir().unwrap();
        assert!(receive_corpus(dir.path()).unwrap().is_none());
    }

    #[test]
    fn valid_file_moves_to_processed() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.corp"), corpus(5)).unwrap();
        let got = receive_corpus(dir.path()).unwrap().unwrap();
        assert_eq!(got.id, "a.corp");
        assert_eq!(got.corpus.created_at(), 5);
        assert!(!dir.path().join("a.corp").exists());
        assert!(dir.path().join(PROCESSED_DIR).join("a.corp").exists());
        assert!(receive_corpus(dir.path()).unwrap().is_none());
    }

    #[test]
    fn corrupt_file_is_rejected_and_valid_one_returned() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("bad.corp"), b"garbage").unwrap();
        fs::write(dir.path().join("good.corp"), corpus(1)).unwrap();
        let got = receive_corpus(dir.path()).unwrap().unwrap();
        assert_eq!(got.id, "good.corp");
        assert!(dir.path().join(REJECTED_DIR).join("bad.corp").exists());
    }

    #[test]
    fn oldest_first_then_by_name() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("z.corp"), corpus(10)).unwrap();
        fs::write(dir.path().join("b.corp"), corpus(20)).unwrap();
        fs::write(dir.path().join("a.corp"), corpus(20)).unwrap();
        let order: Vec<String> = std::iter::from_fn(|| receive_corpus(dir.path()).unwrap())
            .map(|c| c.id)
            .collect();
        assert_eq!(order, ["z.corp", "a.corp", "b.corp"]);
    }

    #[test]
    fn hidden_temp_files_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(".partial.tmp"), b"half a corp").unwrap();
        assert!(receive_corpus(dir.path()).unwrap().is_none());
        assert!(dir.path().join(".partial.tmp").exists());
    }

    #[test]
    fn spooled_files_are_received() {
        let dir = tempfile::tempdir().unwrap();
        let path = spool_corpus(dir.path(), 9, &corpus(9)).unwrap();
        assert!(path.exists());
        assert_eq!(
            receive_corpus(dir.path())
                .unwrap()
                .unwrap()
                .corpus
                .created_at(),
            9
        );
    }
}
