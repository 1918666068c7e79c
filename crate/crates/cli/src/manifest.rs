use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::Command;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

pub const SEED_SCHEME: &str =
    "child = splitmix64(splitmix64(command_seed ^ stream) ^ index); streams: restarts, universality targets, bench targets, compile target";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRecord {
    pub command_seed: u64,
    pub scheme: String,
    /// Child seeds actually drawn, by purpose.
    pub children: BTreeMap<String, Vec<u64>>,
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// Parsed arguments, with input paths made absolute.
    pub args: Command,
    pub out_dir: PathBuf,
    /// Effective settings after defaults were applied.
    pub config: Value,
    pub seeds: SeedRecord,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

pub fn now_unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub fn command_seed(command: &Command) -> u64 {
    match command {
        Command::FindUnity(a) => a.optimizer.seed,
        Command::CheckUniversal(a) => a.optimizer.seed,
        Command::Compile(a) => a.optimizer.seed,
        Command::Bench(a) => a.optimizer.seed,
        _ => 0,
    }
}
