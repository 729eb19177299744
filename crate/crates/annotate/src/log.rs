//! Append-only JSONL event log of accepted ratings.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tracing::warn;
use trialsent_core::SentimentLabel;

use crate::error::{ApiError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingEvent {
    pub task_id: String,
    pub rater: String,
    pub pmid: String,
    pub label: SentimentLabel,
    pub submitted_at_ms: u64,
}

pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    /// Opens (creating if needed) and replays the log. A final line without
    /// its newline is a write cut short by a crash: it is dropped and the
    /// file truncated back to the last complete event.
    pub fn open(path: &Path) -> Result<(Self, Vec<RatingEvent>)> {
        let ctx = || path.display().to_string();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| ApiError::storage(parent.display(), e))?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(|e| ApiError::storage(ctx(), e))?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(|e| ApiError::storage(ctx(), e))?;

        let mut events = Vec::new();
        let mut good_len = 0usize;
        let mut offset = 0usize;
        for (n, chunk) in text.split_inclusive('\n').enumerate() {
            offset += chunk.len();
            let complete = chunk.ends_with('\n');
            let line = chunk.trim();
            if line.is_empty() {
                if complete {
                    good_len = offset;
                }
                continue;
            }
            if !complete {
                warn!(path = %ctx(), "dropping truncated final event");
                break;
            }
            let event: RatingEvent = serde_json::from_str(line)
                .map_err(|e| ApiError::Storage(format!("{} line {}: {e}", ctx(), n + 1)))?;
            events.push(event);
            good_len = offset;
        }
        if good_len < text.len() {
            file.set_len(good_len as u64).map_err(|e| ApiError::storage(ctx(), e))?;
            file.seek(SeekFrom::End(0)).map_err(|e| ApiError::storage(ctx(), e))?;
        }
        Ok((
            Self {
                path: path.to_path_buf(),
                file,
            },
            events,
        ))
    }

    /// Appends one event and flushes it to stable storage before returning.
    pub fn append(&mut self, event: &RatingEvent) -> Result<()> {
        let ctx = self.path.display().to_string();
        let mut line = serde_json::to_string(event).map_err(|e| ApiError::storage(&ctx, e))?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| ApiError::storage(&ctx, e))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(i: usize) -> RatingEvent {
        RatingEvent {
            task_id: format!("t{i}"),
            rater: "r1".into(),
            pmid: format!("{i}"),
            label: SentimentLabel::Neutral,
            submitted_at_ms: i as u64,
        }
    }

    #[test]
    fn replays_appended_events() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        {
            let (mut log, events) = EventLog::open(&path).unwrap();
            assert!(events.is_empty());
            log.append(&event(1)).unwrap();
            log.append(&event(2)).unwrap();
        }
        let (_, events) = EventLog::open(&path).unwrap();
        assert_eq!(events, vec![event(1), event(2)]);
    }

    #[test]
    fn truncated_tail_is_dropped_and_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let good = serde_json::to_string(&event(1)).unwrap();
        std::fs::write(&path, format!("{good}\n{{\"task_id\":\"t2\",\"ra")).unwrap();
        {
            let (mut log, events) = EventLog::open(&path).unwrap();
            assert_eq!(events, vec![event(1)]);
            log.append(&event(3)).unwrap();
        }
        let (_, events) = EventLog::open(&path).unwrap();
        assert_eq!(events, vec![event(1), event(3)]);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let good = serde_json::to_string(&event(1)).unwrap();
        std::fs::write(&path, format!("garbage\n{good}\n")).unwrap();
        assert!(matches!(EventLog::open(&path), Err(ApiError::Storage(_))));
    }
}
