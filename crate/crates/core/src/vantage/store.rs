//! Append-only observation log, event log and content-addressed page snapshots.
//!
//! Layout under the store directory:
//!
//! ```text
//! observations.jsonl      one schema-versioned observation per line
//! events.jsonl            checks, fetch failures, wave bookkeeping
//! snapshots/ab/<sha256>.html
//! ```
//!
//! An append is acknowledged once its lines are written and flushed. On open,
//! a trailing line without its newline (a torn write) is cut off.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{uri_domain, CheckRequest, PriceObservation, VantageError};

pub const SCHEMA_VERSION: u32 = 1;

const OBSERVATIONS: &str = "observations.jsonl";
const EVENTS: &str = "events.jsonl";

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    v: u32,
    #[serde(flatten)]
    body: T,
}

/// Bookkeeping records kept next to the observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum StoreEvent {
    CheckAccepted {
        check_id: String,
        request: CheckRequest,
    },
    FetchFailed {
        check_id: String,
        wave_id: String,
        repetition: u32,
        vantage: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<String>,
        reason: String,
    },
    WaveStarted {
        plan_id: String,
        wave: u32,
        at: DateTime<Utc>,
    },
    WaveCompleted {
        plan_id: String,
        wave: u32,
        at: DateTime<Utc>,
        observations: usize,
        failures: usize,
    },
    WaveSkipped {
        plan_id: String,
        wave: u32,
        reason: String,
    },
}

/// Filter for [`ObservationStore::replay`]; unset fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayQuery {
    pub domain: Option<String>,
    pub product: Option<String>,
    /// Inclusive UTC day range on `fetched_at`.
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub vantage: Option<String>,
}

impl ReplayQuery {
    pub fn domain(domain: &str) -> Self {
        ReplayQuery {
            domain: Some(domain.to_ascii_lowercase()),
            ..Default::default()
        }
    }

    fn matches(&self, k: &IndexEntry) -> bool {
        let day = k.fetched_at.date_naive();
        self.product.as_ref().is_none_or(|p| *p == k.product_uri)
            && self.vantage.as_ref().is_none_or(|v| *v == k.vantage)
            && self.from.is_none_or(|f| day >= f)
            && self.to.is_none_or(|t| day <= t)
            && self
                .domain
                .as_ref()
                .is_none_or(|d| uri_domain(&k.product_uri).is_some_and(|h| h == *d))
    }
}

/// The fields replay sorts and filters on; everything else is skipped while indexing.
#[derive(Deserialize)]
struct IndexEntry {
    check_id: String,
    #[serde(default)]
    repetition: u32,
    vantage: String,
    #[serde(default)]
    profile: Option<String>,
    product_uri: String,
    fetched_at: DateTime<Utc>,
}

/// Content-addressed page bodies.
#[derive(Debug, Clone)]
pub struct SnapshotStore {
    dir: PathBuf,
}

impl SnapshotStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, VantageError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(SnapshotStore { dir })
    }

    fn path(&self, id: &str) -> Option<PathBuf> {
        if id.len() != 64 || !id.bytes().all(|b| b.is_ascii_hexdigit()) {
            return None;
        }
        Some(self.dir.join(&id[..2]).join(format!("{id}.html")))
    }

    /// Stores `body` and returns its hex SHA-256. Identical bodies share one file.
    pub fn put(&self, body: &str) -> Result<String, VantageError> {
        let id = hex::encode(Sha256::digest(body.as_bytes()));
        let path = self.path(&id).expect("digest is a valid id");
        if path.exists() {
            return Ok(id);
        }
        let parent = path.parent().expect("sharded path");
        fs::create_dir_all(parent)?;
        let tmp = parent.join(format!(".{id}.{}.tmp", uuid::Uuid::new_v4().simple()));
        fs::write(&tmp, body)?;
        fs::rename(&tmp, &path)?;
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Result<Option<String>, VantageError> {
        let Some(path) = self.path(id) else {
            return Ok(None);
        };
        match fs::read_to_string(path) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.path(id).is_some_and(|p| p.exists())
    }
}

pub struct ObservationStore {
    dir: PathBuf,
    observations: Mutex<File>,
    events: Mutex<File>,
    snapshots: SnapshotStore,
    sync: bool,
}

impl ObservationStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, VantageError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let observations = open_log(&dir.join(OBSERVATIONS))?;
        let events = open_log(&dir.join(EVENTS))?;
        Ok(ObservationStore {
            snapshots: SnapshotStore::open(dir.join("snapshots"))?,
            dir,
            observations: Mutex::new(observations),
            events: Mutex::new(events),
            sync: false,
        })
    }

    /// Also fsync every append (slower; survives power loss, not only process death).
    pub fn with_fsync(mut self, on: bool) -> Self {
        self.sync = on;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn snapshots(&self) -> &SnapshotStore {
        &self.snapshots
    }

    /// Appends a batch as one write; the batch is acknowledged when this returns.
    pub fn append_observations(&self, batch: &[PriceObservation]) -> Result<(), VantageError> {
        let mut buf = Vec::new();
        for obs in batch {
            serde_json::to_writer(&mut buf, &Versioned { v: SCHEMA_VERSION, body: obs })
                .map_err(|e| VantageError::Store(e.to_string()))?;
            buf.push(b'\n');
        }
        append(&self.observations, &buf, self.sync)
    }

    pub fn append_event(&self, event: &StoreEvent) -> Result<(), VantageError> {
        let mut buf = serde_json::to_vec(&Versioned { v: SCHEMA_VERSION, body: event })
            .map_err(|e| VantageError::Store(e.to_string()))?;
        buf.push(b'\n');
        append(&self.events, &buf, self.sync)
    }

    pub fn events(&self) -> Result<Vec<StoreEvent>, VantageError> {
        let file = File::open(self.dir.join(EVENTS))?;
        let mut out = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let rec: Versioned<StoreEvent> =
                serde_json::from_str(&line).map_err(|e| VantageError::Store(format!("bad event record: {e}")))?;
            out.push(rec.body);
        }
        Ok(out)
    }

    /// Matching observations ordered by (check id, repetition, vantage, profile).
    ///
    /// The log is scanned once to build a compact sorted index of offsets;
    /// records are then read back one at a time, so memory stays proportional
    /// to the number of matches, not their size.
    pub fn replay(&self, query: &ReplayQuery) -> Result<Replay, VantageError> {
        let path = self.dir.join(OBSERVATIONS);
        let mut reader = BufReader::new(File::open(&path)?);
        let mut index = Vec::new();
        let mut offset = 0u64;
        let mut line = String::new();
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 || !line.ends_with('\n') {
                break;
            }
            let entry: IndexEntry =
                serde_json::from_str(&line).map_err(|e| VantageError::Store(format!("bad record at {offset}: {e}")))?;
            if query.matches(&entry) {
                index.push((entry.check_id, entry.repetition, entry.vantage, entry.profile, offset));
            }
            offset += n as u64;
        }
        index.sort();
        Ok(Replay {
            reader: BufReader::new(File::open(&path)?),
            offsets: index.into_iter().map(|k| k.4).collect::<Vec<_>>().into_iter(),
            line: String::new(),
        })
    }
}

/// Streaming result of [`ObservationStore::replay`].
pub struct Replay {
    reader: BufReader<File>,
    offsets: std::vec::IntoIter<u64>,
    line: String,
}

impl Replay {
    pub fn remaining(&self) -> usize {
        self.offsets.len()
    }
}

impl Iterator for Replay {
    type Item = Result<PriceObservation, VantageError>;

    fn next(&mut self) -> Option<Self::Item> {
        let offset = self.offsets.next()?;
        let mut read = || -> Result<PriceObservation, VantageError> {
            self.reader.seek(SeekFrom::Start(offset))?;
            self.line.clear();
            self.reader.read_line(&mut self.line)?;
            let rec: Versioned<PriceObservation> = serde_json::from_str(&self.line)
                .map_err(|e| VantageError::Store(format!("bad record at {offset}: {e}")))?;
            if rec.v > SCHEMA_VERSION {
                return Err(VantageError::Store(format!("record at {offset} has schema v{}", rec.v)));
            }
            Ok(rec.body)
        };
        Some(read())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.offsets.len(), Some(self.offsets.len()))
    }
}

fn append(file: &Mutex<File>, buf: &[u8], sync: bool) -> Result<(), VantageError> {
    let mut f = file.lock();
    f.write_all(buf)?;
    f.flush()?;
    if sync {
        f.sync_data()?;
    }
    Ok(())
}

/// Length up to and including the last newline, scanning backwards from the end.
fn complete_prefix_len(file: &mut File, len: u64) -> std::io::Result<u64> {
    const CHUNK: u64 = 64 * 1024;
    let mut end = len;
    let mut buf = vec![0u8; CHUNK as usize];
    while end > 0 {
        let start = end.saturating_sub(CHUNK);
        let chunk = &mut buf[..(end - start) as usize];
        file.seek(SeekFrom::Start(start))?;
        file.read_exact(chunk)?;
        if let Some(i) = chunk.iter().rposition(|&b| b == b'\n') {
            return Ok(start + i as u64 + 1);
        }
        end = start;
    }
    Ok(0)
}

/// Opens a log for appending after cutting any torn trailing line.
fn open_log(path: &Path) -> Result<File, VantageError> {
    let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
    let len = file.metadata()?.len();
    let keep = complete_prefix_len(&mut file, len)?;
    if keep < len {
        tracing::warn!(path = %path.display(), dropped = len - keep, "truncating torn record");
        file.set_len(keep)?;
    }
    Ok(file)
}
