use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use log::{info, warn};

use super::scan::ScanMatch;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarantineRecord {
    pub original: PathBuf,
    pub quarantined: PathBuf,
    pub sidecar: PathBuf,
    pub signature_hash: u64,
    pub offset: u64,
}

/// Reserves `<name>.<n>.meta` with `create_new`, so the chosen quarantine
/// name cannot collide even across concurrent callers.
fn reserve_name(qdir: &Path, base: &str) -> Result<(PathBuf, PathBuf, fs::File)> {
    for n in 1u64.. {
        let target = qdir.join(format!("{base}.{n}"));
        let sidecar = qdir.join(format!("{base}.{n}.meta"));
        if target.exists() {
            continue;
        }
        match OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&sidecar)
        {
            Ok(file) => return Ok((target, sidecar, file)),
            Err(err) if err.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(err) => return Err(err.into()),
        }
    }
    unreachable!("u64 suffixes exhausted")
}

fn move_file(from: &Path, to: &Path) -> io::Result<()> {
    match fs::rename(from, to) {
        Ok(()) => Ok(()),
        // EXDEV: different file systems, fall back to copy + remove.
        Err(err) if err.raw_os_error() == Some(18) => {
            fs::copy(from, to)?;
            fs::File::open(to)?.sync_all()?;
            fs::remove_file(from)
        }
        Err(err) => Err(err),
    }
}

/// Moves the matched file into `qdir` and writes a `.meta` sidecar line:
/// `<ISO-8601 UTC>\t<original absolute path>\t<signature hash>\t<offset>\n`.
///
/// Returns `Ok(None)` if the file no longer exists.
pub fn quarantine(matched: &ScanMatch, qdir: &Path) -> Result<Option<QuarantineRecord>> {
    let original = match matched.file.canonicalize() {
        Ok(path) => path,
        Err(err) if err.kind() == io::ErrorKind::NotFound => {
            info!(
                "{} already gone, nothing to quarantine",
                matched.file.display()
            );
            return Ok(None);
        }
        Err(err) => return Err(err.into()),
    };
    let base = original
        .file_name()
        .map_or_else(|| "unnamed".into(), |n| n.to_string_lossy().into_owned());
    let (target, sidecar, mut meta) = reserve_name(qdir, &base)?;
    let line = format!(
        "{}\t{}\t{}\t{}\n",
        Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        original.display(),
        matched.signature.hash(),
        matched.offset
    );
    let written = meta
        .write_all(line.as_bytes())
        .and_then(|()| meta.sync_all());
    drop(meta);
    if let Err(err) = written.and_then(|()| move_file(&original, &target)) {
        let _ = fs::remove_file(&sidecar);
        if err.kind() == io::ErrorKind::NotFound && !original.exists() {
            info!("{} vanished before quarantine", original.display());
            return Ok(None);
        }
        warn!("could not quarantine {}: {err}", original.display());
        return Err(err.into());
    }
    info!("quarantined {} as {}", original.display(), target.display());
    Ok(Some(QuarantineRecord {
        original,
        quarantined: target,
        sidecar,
        signature_hash: matched.signature.hash(),
        offset: matched.offset,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::Signature;

    fn matched(file: PathBuf) -> ScanMatch {
        ScanMatch {
            file,
            signature: Signature::from_parts(b"sig", 6521, 0),
            offset: 12,
        }
    }

    #[test]
    fn file_moves_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let q = dir.path().join("q");
        fs::create_dir(&q).unwrap();
        let f = dir.path().join("infected.bin");
        fs::write(&f, b"payload bytes").unwrap();
        let rec = quarantine(&matched(f.clone()), &q).unwrap().unwrap();
        assert!(!f.exists());
        assert_eq!(fs::read(&rec.quarantined).unwrap(), b"payload bytes");
        let meta = fs::read_to_string(&rec.sidecar).unwrap();
        let fields: Vec<&str> = meta.trim_end_matches('\n').split('\t').collect();
        assert_eq!(fields.len(), 4);
        assert_eq!(
            fields[1],
            f.canonicalize()
                .unwrap_or(rec.original.clone())
                .to_string_lossy()
        );
        assert_eq!(fields[2], "6521");
        assert_eq!(fields[3], "12");
        assert!(rec.sidecar.to_string_lossy().ends_with(".meta"));
    }

    #[test]
    fn same_basename_gets_distinct_names() {
        let dir = tempfile::tempdir().unwrap();
        let q = dir.path().join("q");
        fs::create_dir(&q).unwrap();
        let mut names = Vec::new();
        for sub in ["a", "b"] {
            fs::create_dir(dir.path().join(sub)).unwrap();
            let f = dir.path().join(sub).join("same.exe");
            fs::write(&f, sub).unwrap();
            names.push(quarantine(&matched(f), &q).unwrap().unwrap().quarantined);
        }
        assert_ne!(names[0], names[1]);
        assert_eq!(fs::read(&names[0]).unwrap(), b"a");
        assert_eq!(fs::read(&names[1]).unwrap(), b"b");
    }

    #[test]
    fn vanished_file_is_a_noop() {
        let dir = tempfile::tempdir().unwrap();
        let rec = quarantine(&matched(dir.path().join("gone")), dir.path()).unwrap();
        assert!(rec.is_none());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn missing_qdir_leaves_file_in_place() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("infected.bin");
        fs::write(&f, b"x").unwrap();
        assert!(quarantine(&matched(f.clone()), &dir.path().join("nope")).is_err());
        assert!(f.exists());
    }
}
