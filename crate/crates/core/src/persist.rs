//! Durable batch log.
//!
//! A store holds an ordered sequence of committed batches. Each batch is
//! framed as `u32 BE length ‖ u32 BE crc32(payload) ‖ payload`. A commit is
//! durable once it returns `Ok`; a torn or corrupt tail left by a crash is
//! dropped on the next load.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use parking_lot::Mutex;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("storage: {0}")]
pub struct StorageError(pub String);

impl From<std::io::Error> for StorageError {
    fn from(e: std::io::Error) -> Self {
        StorageError(e.to_string())
    }
}

pub trait BatchStore: Send + Sync {
    /// Append one batch atomically.
    fn commit(&self, batch: &[u8]) -> Result<(), StorageError>;

    /// Every committed batch, oldest first.
    fn load(&self) -> Result<Vec<Vec<u8>>, StorageError>;
}

const HEADER: usize = 8;

pub fn encode_frame(payload: &[u8]) -> Vec<u8> {
    let len = u32::try_from(payload.len()).expect("batch under 4 GiB");
    let mut out = Vec::with_capacity(HEADER + payload.len());
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(&crc32fast::hash(payload).to_be_bytes());
    out.extend_from_slice(payload);
    out
}

/// Split a log into its intact frames. Returns the payloads and the byte
/// length of the intact prefix; anything after it is a torn tail.
pub fn decode_frames(log: &[u8]) -> (Vec<Vec<u8>>, usize) {
    let mut frames = Vec::new();
    let mut at = 0;
    while log.len() - at >= HEADER {
        let len = u32::from_be_bytes(log[at..at + 4].try_into().unwrap()) as usize;
        let crc = u32::from_be_bytes(log[at + 4..at + 8].try_into().unwrap());
        let Some(payload) = log.get(at + HEADER..at + HEADER + len) else {
            break;
        };
        if crc32fast::hash(payload) != crc {
            break;
        }
        frames.push(payload.to_vec());
        at += HEADER + len;
    }
    (frames, at)
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    log: Mutex<Vec<u8>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        MemoryStore { log: Mutex::new(bytes) }
    }

    /// The raw log, torn tail included.
    pub fn bytes(&self) -> Vec<u8> {
        self.log.lock().clone()
    }
}

impl BatchStore for MemoryStore {
    fn commit(&self, batch: &[u8]) -> Result<(), StorageError> {
        self.log.lock().extend_from_slice(&encode_frame(batch));
        Ok(())
    }

    fn load(&self) -> Result<Vec<Vec<u8>>, StorageError> {
        let mut log = self.log.lock();
        let (frames, intact) = decode_frames(&log);
        log.truncate(intact);
        Ok(frames)
    }
}

/// Append-only file, fsynced after every batch.
#[derive(Debug)]
pub struct WalStore {
    path: PathBuf,
    file: Mutex<File>,
}

impl WalStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StorageError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        Ok(WalStore {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl BatchStore for WalStore {
    fn commit(&self, batch: &[u8]) -> Result<(), StorageError> {
        let mut file = self.file.lock();
        file.write_all(&encode_frame(batch))?;
        file.sync_data()?;
        Ok(())
    }

    fn load(&self) -> Result<Vec<Vec<u8>>, StorageError> {
        let mut file = self.file.lock();
        let mut log = Vec::new();
        file.seek(SeekFrom::Start(0))?;
        file.read_to_end(&mut log)?;
        let (frames, intact) = decode_frames(&log);
        if intact < log.len() {
            file.set_len(intact as u64)?;
            file.sync_all()?;
        }
        Ok(frames)
    }
}

/// Test double that dies after a fixed number of commits. The commit that
/// hits the limit optionally leaves half a frame behind, like a write cut
/// off by power loss; every later commit fails.
#[derive(Debug)]
pub struct CrashingStore {
    inner: MemoryStore,
    remaining: AtomicUsize,
    torn_write: bool,
}

impl CrashingStore {
    pub fn new(commits_before_crash: usize, torn_write: bool) -> Self {
        CrashingStore {
            inner: MemoryStore::new(),
            remaining: AtomicUsize::new(commits_before_crash),
            torn_write,
        }
    }

    /// What a restarted process would find on disk.
    pub fn surviving_bytes(&self) -> Vec<u8> {
        self.inner.bytes()
    }
}

impl BatchStore for CrashingStore {
    fn commit(&self, batch: &[u8]) -> Result<(), StorageError> {
        let left = self.remaining.load(Ordering::SeqCst);
        if left == usize::MAX {
            return Err(StorageError("store is down".into()));
        }
        if left == 0 {
            self.remaining.store(usize::MAX, Ordering::SeqCst);
            if self.torn_write {
                let frame = encode_frame(batch);
                self.inner.log.lock().extend_from_slice(&frame[..frame.len() / 2]);
            }
            return Err(StorageError("simulated crash during commit".into()));
        }
        self.remaining.store(left - 1, Ordering::SeqCst);
        self.inner.commit(batch)
    }

    fn load(&self) -> Result<Vec<Vec<u8>>, StorageError> {
        self.inner.load()
    }
}
