//! Atomic file writes: stage outputs land under their final name only
//! once fully written, so interrupted runs never leave truncated files.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile_in(dir, path)?;
    tmp.1
        .write_all(bytes)
        .and_then(|_| tmp.1.sync_all())
        .map_err(|e| Error::io(tmp.0.display().to_string(), e))?;
    drop(tmp.1);
    fs::rename(&tmp.0, path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn tempfile_in(dir: &Path, target: &Path) -> Result<(std::path::PathBuf, fs::File)> {
    let stem = target
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    for attempt in 0..100u32 {
        let candidate = dir.join(format!(".{stem}.tmp{attempt}"));
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&candidate)
        {
            Ok(f) => return Ok((candidate, f)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(candidate.display().to_string(), e)),
        }
    }
    Err(Error::io(
        dir.display().to_string(),
        std::io::Error::other("could not create temporary file"),
    ))
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}
