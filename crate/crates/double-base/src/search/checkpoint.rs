//! Resumable census checkpoints.
//!
//! A checkpoint file is a header frame followed by one frame per completed
//! interval. Every frame is length-prefixed and carries a trailing SHA-256
//! of its payload, so corruption (including a torn final write) is detected
//! on resume at record granularity.
//!
//! ```text
//! magic "DBCENSUS" | version u32 | frame*       frame = len u32 | payload | sha256(payload)
//! ```
//!
//! The header payload pins the census parameters; a resume against a file
//! written for different parameters is rejected.

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 8] = b"DBCENSUS";
const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint corrupt at byte {offset}: {detail}")]
    Corrupt { offset: u64, detail: String },
    #[error("checkpoint parameter mismatch: {detail}")]
    Mismatch { detail: String },
}

/// The census parameters a checkpoint is bound to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub lo: i64,
    pub hi: i64,
    pub r: u32,
    pub max_abs_summand: u64,
    pub partial_cap: u64,
    pub chunk_size: u64,
}

impl CheckpointHeader {
    fn encode(&self) -> Vec<u8> {
        let mut p = Vec::with_capacity(44);
        p.extend_from_slice(&self.lo.to_le_bytes());
        p.extend_from_slice(&self.hi.to_le_bytes());
        p.extend_from_slice(&self.r.to_le_bytes());
        p.extend_from_slice(&self.max_abs_summand.to_le_bytes());
        p.extend_from_slice(&self.partial_cap.to_le_bytes());
        p.extend_from_slice(&self.chunk_size.to_le_bytes());
        p
    }

    fn decode(p: &[u8]) -> Option<Self> {
        if p.len() != 44 {
            return None;
        }
        Some(CheckpointHeader {
            lo: i64::from_le_bytes(p[0..8].try_into().ok()?),
            hi: i64::from_le_bytes(p[8..16].try_into().ok()?),
            r: u32::from_le_bytes(p[16..20].try_into().ok()?),
            max_abs_summand: u64::from_le_bytes(p[20..28].try_into().ok()?),
            partial_cap: u64::from_le_bytes(p[28..36].try_into().ok()?),
            chunk_size: u64::from_le_bytes(p[36..44].try_into().ok()?),
        })
    }
}

/// One completed interval with the misses found in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkRecord {
    pub lo: i64,
    pub hi: i64,
    pub misses: Vec<i64>,
}

impl ChunkRecord {
    fn encode(&self) -> Vec<u8> {
        let mut p = Vec::with_capacity(20 + 8 * self.misses.len());
        p.extend_from_slice(&self.lo.to_le_bytes());
        p.extend_from_slice(&self.hi.to_le_bytes());
        p.extend_from_slice(&(self.misses.len() as u32).to_le_bytes());
        for m in &self.misses {
            p.extend_from_slice(&m.to_le_bytes());
        }
        p
    }

    fn decode(p: &[u8]) -> Option<Self> {
        if p.len() < 20 {
            return None;
        }
        let lo = i64::from_le_bytes(p[0..8].try_into().ok()?);
        let hi = i64::from_le_bytes(p[8..16].try_into().ok()?);
        let count = u32::from_le_bytes(p[16..20].try_into().ok()?) as usize;
        if p.len() != 20 + 8 * count {
            return None;
        }
        let misses = p[20..]
            .chunks_exact(8)
            .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Some(ChunkRecord { lo, hi, misses })
    }
}

/// A checkpoint file open for appending completed chunks.
pub struct CheckpointFile {
    path: PathBuf,
    writer: BufWriter<File>,
    /// Chunks already recorded, keyed by their low endpoint.
    pub completed: BTreeMap<i64, ChunkRecord>,
}

fn write_frame(w: &mut impl Write, payload: &[u8]) -> std::io::Result<()> {
    w.write_all(&(payload.len() as u32).to_le_bytes())?;
    w.write_all(payload)?;
    let digest = Sha256::digest(payload);
    w.write_all(&digest)?;
    Ok(())
}

impl CheckpointFile {
    /// Open (resuming) or create a checkpoint for the given parameters.
    ///
    /// When `resume` is false any existing file is replaced. When it is
    /// true, the existing frames are validated and their chunks are loaded
    /// as already completed.
    pub fn open(
        path: &Path,
        header: CheckpointHeader,
        resume: bool,
    ) -> Result<Self, CheckpointError> {
        if resume && path.exists() {
            let (stored, completed) = Self::read(path)?;
            if stored != header {
                return Err(CheckpointError::Mismatch {
                    detail: format!("file has {stored:?}, run wants {header:?}"),
                });
            }
            let file = OpenOptions::new().append(true).open(path)?;
            return Ok(CheckpointFile {
                path: path.to_owned(),
                writer: BufWriter::new(file),
                completed,
            });
        }
        let file = File::create(path)?;
        let mut writer = BufWriter::new(file);
        writer.write_all(MAGIC)?;
        writer.write_all(&VERSION.to_le_bytes())?;
        write_frame(&mut writer, &header.encode())?;
        writer.flush()?;
        Ok(CheckpointFile {
            path: path.to_owned(),
            writer,
            completed: BTreeMap::new(),
        })
    }

    /// Parse and validate a checkpoint file.
    pub fn read(path: &Path) -> Result<(CheckpointHeader, BTreeMap<i64, ChunkRecord>), CheckpointError> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        let corrupt = |offset: usize, detail: &str| CheckpointError::Corrupt {
            offset: offset as u64,
            detail: detail.to_string(),
        };
        if bytes.len() < 12 || &bytes[0..8] != MAGIC {
            return Err(corrupt(0, "bad magic"));
        }
        if u32::from_le_bytes(bytes[8..12].try_into().unwrap()) != VERSION {
            return Err(corrupt(8, "unsupported version"));
        }
        let mut off = 12usize;
        let mut frames: Vec<(usize, Vec<u8>)> = Vec::new();
        while off < bytes.len() {
            if off + 4 > bytes.len() {
                return Err(corrupt(off, "truncated frame length"));
            }
            let len = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
            let start = off + 4;
            let end = start + len + 32;
            if end > bytes.len() {
                return Err(corrupt(off, "truncated frame"));
            }
            let payload = &bytes[start..start + len];
            let digest = Sha256::digest(payload);
            if digest.as_slice() != &bytes[start + len..end] {
                return Err(corrupt(off, "content hash mismatch"));
            }
            frames.push((off, payload.to_vec()));
            off = end;
        }
        let Some((hoff, hpayload)) = frames.first() else {
            return Err(corrupt(12, "missing header frame"));
        };
        let header = CheckpointHeader::decode(hpayload)
            .ok_or_else(|| corrupt(*hoff, "malformed header frame"))?;
        let mut completed = BTreeMap::new();
        for (foff, payload) in &frames[1..] {
            let rec = ChunkRecord::decode(payload)
                .ok_or_else(|| corrupt(*foff, "malformed chunk frame"))?;
            completed.insert(rec.lo, rec);
        }
        Ok((header, completed))
    }

    /// Append one completed chunk and flush it to disk.
    pub fn record(&mut self, rec: ChunkRecord) -> Result<(), CheckpointError> {
        write_frame(&mut self.writer, &rec.encode())?;
        self.writer.flush()?;
        self.completed.insert(rec.lo, rec);
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> CheckpointHeader {
        CheckpointHeader {
            lo: 1,
            hi: 1000,
            r: 3,
            max_abs_summand: 1 << 61,
            partial_cap: 2000,
            chunk_size: 100,
        }
    }

    #[test]
    fn roundtrip_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ckpt");
        let mut f = CheckpointFile::open(&path, header(), false).unwrap();
        f.record(ChunkRecord {
            lo: 1,
            hi: 100,
            misses: vec![],
        })
        .unwrap();
        f.record(ChunkRecord {
            lo: 101,
            hi: 200,
            misses: vec![103, 149],
        })
        .unwrap();
        drop(f);

        let g = CheckpointFile::open(&path, header(), true).unwrap();
        assert_eq!(g.completed.len(), 2);
        assert_eq!(g.completed[&101].misses, vec![103, 149]);
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ckpt");
        let mut f = CheckpointFile::open(&path, header(), false).unwrap();
        f.record(ChunkRecord {
            lo: 1,
            hi: 100,
            misses: vec![42],
        })
        .unwrap();
        drop(f);
        let mut bytes = std::fs::read(&path).unwrap();
        let n = bytes.len();
        bytes[n - 40] ^= 0xff; // flip a payload byte under the hash
        std::fs::write(&path, &bytes).unwrap();
        match CheckpointFile::read(&path) {
            Err(CheckpointError::Corrupt { .. }) => {}
            other => panic!("expected corruption error, got {other:?}"),
        }
    }

    #[test]
    fn parameter_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ckpt");
        CheckpointFile::open(&path, header(), false).unwrap();
        let mut other = header();
        other.r = 4;
        match CheckpointFile::open(&path, other, true) {
            Err(CheckpointError::Mismatch { .. }) => {}
            Err(other) => panic!("expected mismatch error, got {other:?}"),
            Ok(_) => panic!("expected mismatch error, got success"),
        }
    }
}
