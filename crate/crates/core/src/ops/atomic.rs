//! `.tmp → fsync → rename` writes.
//!
//! Readers of the target path see either the previous complete contents or
//! the new complete contents, never a mixture.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::OpsError;

/// Protocol boundaries at which a fault hook is invoked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WriteStage {
    BeforeTmpWrite,
    AfterTmpWrite,
    AfterFsync,
    AfterRename,
}

impl WriteStage {
    pub const ALL: [WriteStage; 4] = [
        WriteStage::BeforeTmpWrite,
        WriteStage::AfterTmpWrite,
        WriteStage::AfterFsync,
        WriteStage::AfterRename,
    ];
}

/// Returned by a fault hook to simulate the process dying at a boundary.
/// Nothing is cleaned up, exactly as after a real crash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InjectedCrash;

pub fn tmp_path_for(path: &Path) -> PathBuf {
    let mut name: OsString = path.file_name().map(OsString::from).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

fn sync_parent(path: &Path) {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    // Some filesystems reject fsync on directories; the rename is already done.
    if let Ok(dir) = File::open(parent) {
        let _ = dir.sync_all();
    }
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), OpsError> {
    atomic_write_with_hook(path, bytes, |_| Ok(()))
}

/// [`atomic_write`] with a fault hook called at each protocol boundary.
pub fn atomic_write_with_hook<F>(path: &Path, bytes: &[u8], mut hook: F) -> Result<(), OpsError>
where
    F: FnMut(WriteStage) -> Result<(), InjectedCrash>,
{
    let tmp = tmp_path_for(path);
    let crash = |stage| OpsError::InjectedCrash(stage);

    hook(WriteStage::BeforeTmpWrite).map_err(|_| crash(WriteStage::BeforeTmpWrite))?;
    let mut file = File::create(&tmp).map_err(|e| OpsError::io(&tmp, e))?;
    if let Err(e) = file.write_all(bytes) {
        drop(file);
        let _ = fs::remove_file(&tmp);
        return Err(OpsError::io(&tmp, e));
    }
    hook(WriteStage::AfterTmpWrite).map_err(|_| crash(WriteStage::AfterTmpWrite))?;
    if let Err(e) = file.sync_all() {
        drop(file);
        let _ = fs::remove_file(&tmp);
        return Err(OpsError::io(&tmp, e));
    }
    drop(file);
    hook(WriteStage::AfterFsync).map_err(|_| crash(WriteStage::AfterFsync))?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(OpsError::io(path, e));
    }
    hook(WriteStage::AfterRename).map_err(|_| crash(WriteStage::AfterRename))?;
    sync_parent(path);
    Ok(())
}

/// Streaming counterpart of [`atomic_write`]: bytes go to `<path>.tmp` and
/// only [`AtomicFile::commit`] makes them visible at `path`. Dropping an
/// uncommitted file removes the temporary.
pub struct AtomicFile {
    path: PathBuf,
    tmp: PathBuf,
    writer: Option<BufWriter<File>>,
}

impl AtomicFile {
    pub fn create(path: &Path) -> Result<Self, OpsError> {
        let tmp = tmp_path_for(path);
        let file = File::create(&tmp).map_err(|e| OpsError::io(&tmp, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            tmp,
            writer: Some(BufWriter::new(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn commit(mut self) -> Result<PathBuf, OpsError> {
        let writer = self.writer.take().expect("writer present until commit");
        let file = writer
            .into_inner()
            .map_err(|e| OpsError::io(&self.tmp, e.into_error()))?;
        file.sync_all().map_err(|e| OpsError::io(&self.tmp, e))?;
        drop(file);
        fs::rename(&self.tmp, &self.path).map_err(|e| OpsError::io(&self.path, e))?;
        sync_parent(&self.path);
        Ok(self.path.clone())
    }
}

impl Write for AtomicFile {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.writer.as_mut().expect("writer present until commit").write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.writer.as_mut().expect("writer present until commit").flush()
    }
}

impl Drop for AtomicFile {
    fn drop(&mut self) {
        if self.writer.take().is_some() {
            let _ = fs::remove_file(&self.tmp);
        }
    }
}
