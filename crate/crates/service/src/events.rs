//! Append-only event log: one JSON object per line, written after each
//! successful mutation, replayed on start-up to restore sessions.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Event {
    Create { session: String },
    Set { session: String, symbol: String, args: Vec<String>, value: String },
    Retract { session: String, symbol: String, args: Vec<String> },
}

pub struct EventLog {
    file: File,
}

impl EventLog {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        Ok(EventLog { file: OpenOptions::new().create(true).append(true).open(path)? })
    }

    pub fn append(&mut self, e: &Event) -> std::io::Result<()> {
        let mut line = serde_json::to_string(e).map_err(std::io::Error::other)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()
    }
}

/// Events of an existing log, in order. A missing file is an empty log.
pub fn read_events(path: &Path) -> std::io::Result<Vec<Event>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line).map_err(|err| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}:{}: {err}", path.display(), i + 1))
        })?;
        out.push(e);
    }
    Ok(out)
}
