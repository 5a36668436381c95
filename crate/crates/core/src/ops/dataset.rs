//! Episode dataset format: JSON lines, a header record followed by one
//! rollout record per line. The dataset digest is the SHA-256 of the file.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{sha256_file, AtomicFile, OpsError};
use crate::pipeline::RolloutRecord;

pub const DATASET_FORMAT: &str = "pcbf-episodes";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub v_max: f64,
    pub chunk_length: usize,
}

impl DatasetHeader {
    pub fn new(v_max: f64, chunk_length: usize) -> Self {
        Self {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            v_max,
            chunk_length,
        }
    }
}

/// Streams records into `<path>.tmp`; [`DatasetWriter::finish`] renames it
/// into place and returns the digest.
pub struct DatasetWriter {
    file: AtomicFile,
    episodes: usize,
}

impl DatasetWriter {
    pub fn create(path: &Path, header: &DatasetHeader) -> Result<Self, OpsError> {
        let mut file = AtomicFile::create(path)?;
        let mut line = serde_json::to_vec(header)?;
        line.push(b'\n');
        file.write_all(&line).map_err(|e| OpsError::io(path, e))?;
        Ok(Self { file, episodes: 0 })
    }

    pub fn append(&mut self, record: &RolloutRecord) -> Result<(), OpsError> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        let path = self.file.path().to_path_buf();
        self.file.write_all(&line).map_err(|e| OpsError::io(&path, e))?;
        self.episodes += 1;
        Ok(())
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    pub fn finish(self) -> Result<(PathBuf, String), OpsError> {
        let path = self.file.commit()?;
        let digest = sha256_file(&path)?;
        Ok((path, digest))
    }
}

pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Vec<RolloutRecord>), OpsError> {
    let file = std::fs::File::open(path).map_err(|e| OpsError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let malformed = |line: usize, detail: String| OpsError::MalformedDataset { line, detail };

    let header_line = match lines.next() {
        Some(l) => l.map_err(|e| OpsError::io(path, e))?,
        None => return Err(malformed(1, "missing header record".into())),
    };
    let header: DatasetHeader =
        serde_json::from_str(&header_line).map_err(|e| malformed(1, format!("bad header: {e}")))?;
    if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
        return Err(malformed(
            1,
            format!("unsupported format {} v{}", header.format, header.version),
        ));
    }

    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| OpsError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RolloutRecord = serde_json::from_str(&line).map_err(|e| malformed(line_no, e.to_string()))?;
        records.push(record);
    }
    Ok((header, records))
}
