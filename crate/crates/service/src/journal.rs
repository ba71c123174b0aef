//! Append-only JSON-lines journal. Each event is flushed to disk before the
//! session state it describes changes, and replaying the file rebuilds every
//! session.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::api::CreateSession;

pub const JOURNAL_FORMAT: &str = "alloom-service-journal";
pub const JOURNAL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Header { format: String, version: u32 },
    Created { session_id: String, request: CreateSession },
    /// `(instance_id, class ordinal)` pairs of one accepted submission.
    Labels { session_id: String, labels: Vec<(usize, usize)> },
}

#[derive(Debug, thiserror::Error)]
pub enum JournalError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: line {line}: {msg}", path.display())]
    Corrupt { path: PathBuf, line: usize, msg: String },
}

pub struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    /// Opens or creates the journal and returns the events already in it.
    /// A torn final line, left by a crash mid-write, is dropped.
    pub fn open(path: &Path) -> Result<(Self, Vec<Event>), JournalError> {
        let io = |source| JournalError::Io { path: path.to_path_buf(), source };
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path).map_err(io)?;
        let mut events = Vec::new();
        let mut kept = 0u64;
        let mut lines = Vec::new();
        {
            let mut reader = BufReader::new(&file);
            loop {
                let mut line = String::new();
                let n = reader.read_line(&mut line).map_err(io)?;
                if n == 0 {
                    break;
                }
                lines.push(line);
            }
        }
        let count = lines.len();
        for (i, line) in lines.iter().enumerate() {
            let complete = line.ends_with('\n');
            match serde_json::from_str::<Event>(line.trim_end()) {
                Ok(ev) if complete => {
                    events.push(ev);
                    kept += line.len() as u64;
                }
                _ if i + 1 == count => break,
                Ok(_) => unreachable!("only the last line can lack a newline"),
                Err(e) => {
                    return Err(JournalError::Corrupt {
                        path: path.to_path_buf(),
                        line: i + 1,
                        msg: e.to_string(),
                    })
                }
            }
        }
        if kept != file.metadata().map_err(io)?.len() {
            file.set_len(kept).map_err(io)?;
            file.seek(SeekFrom::End(0)).map_err(io)?;
        }
        let mut journal = Journal { path: path.to_path_buf(), file };
        match events.first() {
            None => journal.append(&Event::Header {
                format: JOURNAL_FORMAT.into(),
                version: JOURNAL_VERSION,
            })?,
            Some(Event::Header { format, version }) if format == JOURNAL_FORMAT && *version == JOURNAL_VERSION => {
                events.remove(0);
            }
            Some(_) => {
                return Err(JournalError::Corrupt {
                    path: path.to_path_buf(),
                    line: 1,
                    msg: format!("expected a {JOURNAL_FORMAT} v{JOURNAL_VERSION} header"),
                })
            }
        }
        Ok((journal, events))
    }

    pub fn append(&mut self, ev: &Event) -> Result<(), JournalError> {
        let mut line = serde_json::to_string(ev).expect("events serialize");
        line.push('\n');
        let io = |source| JournalError::Io { path: self.path.clone(), source };
        self.file.write_all(line.as_bytes()).map_err(io)?;
        self.file.sync_data().map_err(io)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
