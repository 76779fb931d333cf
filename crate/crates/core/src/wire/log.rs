//! Episode-log files.
//!
//! A log is one line of canonical JSON (sorted keys) followed by one binary
//! record per step: `B x N` action codes as `u8`, then the step digest as a
//! little-endian `u64`.
//!
//! ```text
//! {"batch":2,"config":{...},"final_metrics":[0,1],"master_seed":7,"steps":3,"version":1}\n
//! <actions u8 x B*N><digest u64 LE>   x steps
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::EnvConfig;
use crate::error::{Error, Result};
use crate::verify::EpisodeLog;

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    config: EnvConfig,
    master_seed: u64,
    batch: usize,
    #[serde(default)]
    steps: Option<usize>,
    #[serde(default)]
    final_metrics: Option<Vec<u32>>,
}

pub fn encode_log(log: &EpisodeLog) -> Vec<u8> {
    let header = Header {
        version: LOG_VERSION,
        config: log.config.clone(),
        master_seed: log.master_seed,
        batch: log.batch,
        steps: Some(log.actions.len()),
        final_metrics: Some(log.final_metrics.clone()),
    };
    let value = serde_json::to_value(&header).expect("header serialises");
    let mut out = serde_json::to_vec(&value).expect("value serialises");
    out.push(b'\n');
    for (actions, digest) in log.actions.iter().zip(&log.digests) {
        out.extend_from_slice(actions);
        out.extend_from_slice(&digest.to_le_bytes());
    }
    out
}

pub fn decode_log(bytes: &[u8]) -> Result<EpisodeLog> {
    let corrupt = |msg: String| Error::CorruptLog(msg);
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| corrupt("missing header line".into()))?;
    let header: Header = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| corrupt(format!("bad header: {e}")))?;
    if header.version != LOG_VERSION {
        return Err(corrupt(format!("unsupported log version {}", header.version)));
    }
    if header.batch == 0 || header.config.n_agents == 0 {
        return Err(corrupt("empty batch or team".into()));
    }
    let body = &bytes[newline + 1..];
    let per_step = header.batch * header.config.n_agents;
    let record = per_step + 8;
    if !body.len().is_multiple_of(record) {
        return Err(corrupt(format!("body of {} bytes is not a whole number of steps", body.len())));
    }
    let steps = body.len() / record;
    if let Some(declared) = header.steps {
        if declared != steps {
            return Err(corrupt(format!("header declares {declared} steps, body holds {steps}")));
        }
    }
    let final_metrics = match header.final_metrics {
        Some(m) => m,
        None if steps == 0 => vec![0; header.batch],
        None => return Err(corrupt("final metrics missing".into())),
    };
    let mut actions = Vec::with_capacity(steps);
    let mut digests = Vec::with_capacity(steps);
    for rec in body.chunks_exact(record) {
        actions.push(rec[..per_step].to_vec());
        digests.push(u64::from_le_bytes(rec[per_step..].try_into().unwrap()));
    }
    Ok(EpisodeLog {
        config: header.config,
        master_seed: header.master_seed,
        batch: header.batch,
        actions,
        digests,
        final_metrics,
    })
}

pub fn write_log(path: impl AsRef<Path>, log: &EpisodeLog) -> Result<()> {
    fs::write(path, encode_log(log))?;
    Ok(())
}

pub fn read_log(path: impl AsRef<Path>) -> Result<EpisodeLog> {
    decode_log(&fs::read(path)?)
}
