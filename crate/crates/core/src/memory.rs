//! Fixed-capacity replay memory filled by reservoir sampling.
//!
//! Each entry keeps the input, its label, and the full (unmasked) logit vector
//! the network produced when the sample was inserted. Those logits are the
//! distillation targets for DER++ and are never updated afterwards.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BufferEntry {
    pub x: Vec<f64>,
    pub y: usize,
    /// Logits at insertion time.
    pub z: Vec<f64>,
    pub seen_task: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: Vec<BufferEntry>,
    n_seen: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity,
            entries: Vec::with_capacity(capacity.min(1 << 16)),
            n_seen: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of stream items offered so far.
    pub fn n_seen(&self) -> usize {
        self.n_seen
    }

    pub fn entries(&self) -> &[BufferEntry] {
        &self.entries
    }

    /// Algorithm R: keep the first `capacity` items, then replace a uniformly
    /// random slot with probability `capacity / (n_seen + 1)`.
    pub fn reservoir_add(&mut self, entry: BufferEntry, rng: &mut Rng) {
        if self.entries.len() < self.capacity {
            self.entries.push(entry);
        } else if self.capacity > 0 {
            let j = rng.uniform_int(self.n_seen + 1);
            if j < self.capacity {
                self.entries[j] = entry;
            }
        }
        self.n_seen += 1;
    }

    /// `n` entries drawn uniformly with replacement.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<Vec<&BufferEntry>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        if self.entries.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        Ok((0..n)
            .map(|_| &self.entries[rng.uniform_int(self.entries.len())])
            .collect())
    }

    /// Writes one JSON object per line: `{"x":[..],"y":..,"z":[..],"seen_task":..}`.
    pub fn dump_jsonl(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n").map_err(|err| Error::io(path, err))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Vec<BufferEntry>> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut out = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if !line.trim().is_empty() {
                out.push(serde_json::from_str(&line)?);
            }
        }
        Ok(out)
    }
}
