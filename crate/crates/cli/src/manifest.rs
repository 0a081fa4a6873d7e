//! Run manifest, owned by a single writer thread. Workers send finished
//! task records over a channel; every message rewrites `manifest.json`.

use std::path::{Path, PathBuf};
use std::sync::mpsc::{channel, Sender};
use std::thread::JoinHandle;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use crate::io::{write_json, FileEntry};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA: &str = "loblab.manifest";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Incomplete,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: String,
    pub module: String,
    pub n: u32,
    pub rep: u64,
    /// 128-bit task hash, hex.
    pub seed_hash: String,
    pub seed: u64,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub schema_version: u32,
    pub tool_version: String,
    pub mode: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub status: Status,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub error: Option<String>,
    pub tasks: Vec<TaskRecord>,
    /// Files produced after all tasks, such as summaries and reports.
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(dir.join(MANIFEST_FILE))?)?)
    }

    /// Every file with its checksum, tasks first.
    pub fn inventory(&self) -> Vec<&FileEntry> {
        self.tasks.iter().flat_map(|t| &t.files).chain(&self.files).collect()
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

enum Msg {
    Task(TaskRecord),
    File(FileEntry),
    Finish { status: Status, error: Option<String> },
}

pub struct ManifestWriter {
    tx: Sender<Msg>,
    handle: JoinHandle<Result<RunManifest>>,
}

impl ManifestWriter {
    /// Writes the initial manifest, marked incomplete, before returning.
    pub fn start(root: PathBuf, mode: &str, config_hash: String, master_seed: u64) -> Result<Self> {
        let mut m = RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            schema_version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            mode: mode.into(),
            config_hash,
            master_seed,
            status: Status::Incomplete,
            started_at: now(),
            finished_at: None,
            error: None,
            tasks: Vec::new(),
            files: Vec::new(),
        };
        std::fs::create_dir_all(&root)?;
        write_json(&root, MANIFEST_FILE, &m)?;
        let (tx, rx) = channel::<Msg>();
        let handle = std::thread::spawn(move || {
            for msg in rx {
                match msg {
                    Msg::Task(t) => {
                        m.tasks.push(t);
                        m.tasks.sort_by(|a, b| a.id.cmp(&b.id));
                    }
                    Msg::File(f) => m.files.push(f),
                    Msg::Finish { status, error } => {
                        m.status = status;
                        m.error = error;
                        m.finished_at = Some(now());
                    }
                }
                write_json(&root, MANIFEST_FILE, &m)?;
            }
            Ok(m)
        });
        Ok(Self { tx, handle })
    }

    pub fn recorder(&self) -> Recorder {
        Recorder { tx: self.tx.clone() }
    }

    pub fn finish(self, status: Status, error: Option<String>) -> Result<RunManifest> {
        // the writer may already have died on an I/O error; join reports it
        let _ = self.tx.send(Msg::Finish { status, error });
        drop(self.tx);
        self.handle.join().map_err(|_| anyhow::anyhow!("manifest writer panicked"))?
    }
}

/// Cloneable handle that workers use to report results.
#[derive(Clone)]
pub struct Recorder {
    tx: Sender<Msg>,
}

impl Recorder {
    pub fn task(&self, t: TaskRecord) {
        let _ = self.tx.send(Msg::Task(t));
    }

    pub fn file(&self, f: FileEntry) {
        let _ = self.tx.send(Msg::File(f));
    }
}
