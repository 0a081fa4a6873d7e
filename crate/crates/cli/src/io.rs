//! Output files: CSV tables with a schema line and a compact binary format
//! for sparse book snapshots.
//!
//! Binary layout (version 1), all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "LOBBOOK\0"
//! version  u16
//! n        u32      scale index
//! count    varint   number of snapshots
//! per snapshot:
//!   t        f64
//!   bid, ask zigzag varint ticks
//!   per side (bid, then ask):
//!     cells  varint
//!     per cell, ascending ticks: zigzag varint tick delta (first is absolute), f64 value
//! ```
//!
//! Varints are unsigned LEB128. Only touched cells are stored; all others
//! hold the initial profile from the configuration.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use loblab_core::engine::Snapshot;
use loblab_core::model::Side;

pub const BOOK_MAGIC: &[u8; 8] = b"LOBBOOK\0";
pub const BOOK_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the directory holding the manifest, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Writes through a temporary file and a rename, so a file either exists
/// complete or not at all.
pub fn write_file(root: &Path, rel: &str, data: &[u8]) -> Result<FileEntry> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, data).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(FileEntry { path: rel.to_string(), sha256: hex::encode(Sha256::digest(data)), bytes: data.len() as u64 })
}

/// CSV with a leading `# schema: <name> v<version>` line.
pub fn csv_bytes(schema: &str, version: u32, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = format!("# schema: {schema} v{version}\n").into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    drop(w);
    Ok(out)
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

fn unzigzag(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

fn put_varint(out: &mut Vec<u8>, v: u64) {
    leb128::write::unsigned(out, v).expect("writing to a Vec cannot fail");
}

fn get_varint(r: &mut &[u8]) -> Result<u64> {
    leb128::read::unsigned(r).context("truncated varint")
}

fn get_f64(r: &mut &[u8]) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).context("truncated f64")?;
    Ok(f64::from_le_bytes(b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BookRecord {
    pub t: f64,
    pub bid: i64,
    pub ask: i64,
    /// Touched `(tick, value)` cells, bid then ask.
    pub cells: [Vec<(i64, f64)>; 2],
}

impl BookRecord {
    pub fn from_snapshot(s: &Snapshot) -> Self {
        let cells = |side| s.density(side).touched().collect();
        Self { t: s.t, bid: s.bid, ask: s.ask, cells: [cells(Side::Bid), cells(Side::Ask)] }
    }
}

pub fn encode_books(n: u32, records: &[BookRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(BOOK_MAGIC);
    out.extend_from_slice(&BOOK_VERSION.to_le_bytes());
    out.extend_from_slice(&n.to_le_bytes());
    put_varint(&mut out, records.len() as u64);
    for r in records {
        out.extend_from_slice(&r.t.to_le_bytes());
        put_varint(&mut out, zigzag(r.bid));
        put_varint(&mut out, zigzag(r.ask));
        for side in &r.cells {
            put_varint(&mut out, side.len() as u64);
            let mut prev = 0i64;
            for &(tick, v) in side {
                put_varint(&mut out, zigzag(tick - prev));
                out.extend_from_slice(&v.to_le_bytes());
                prev = tick;
            }
        }
    }
    out
}

pub fn decode_books(mut data: &[u8]) -> Result<(u32, Vec<BookRecord>)> {
    let r = &mut data;
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).context("file too short")?;
    if &magic != BOOK_MAGIC {
        bail!("not a book snapshot file");
    }
    let mut v = [0u8; 2];
    r.read_exact(&mut v)?;
    let version = u16::from_le_bytes(v);
    if version != BOOK_VERSION {
        bail!("unsupported book file version {version}");
    }
    let mut nb = [0u8; 4];
    r.read_exact(&mut nb)?;
    let n = u32::from_le_bytes(nb);
    let count = get_varint(r)?;
    let mut records = Vec::new();
    for _ in 0..count {
        let t = get_f64(r)?;
        let bid = unzigzag(get_varint(r)?);
        let ask = unzigzag(get_varint(r)?);
        let mut cells: [Vec<(i64, f64)>; 2] = [Vec::new(), Vec::new()];
        for side in &mut cells {
            let k = get_varint(r)?;
            let mut prev = 0i64;
            for _ in 0..k {
                prev += unzigzag(get_varint(r)?);
                side.push((prev, get_f64(r)?));
            }
        }
        records.push(BookRecord { t, bid, ask, cells });
    }
    if !r.is_empty() {
        bail!("{} trailing bytes after the last snapshot", r.len());
    }
    Ok((n, records))
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_json(root: &Path, rel: &str, value: &impl Serialize) -> Result<FileEntry> {
    let mut data = serde_json::to_vec_pretty(value)?;
    data.write_all(b"\n")?;
    write_file(root, rel, &data)
}
