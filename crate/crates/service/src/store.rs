//! On-disk session snapshots: one directory per session holding the
//! uploaded table, its hints and config, and the latest story export.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use iw_core::config::EngineConfig;
use iw_core::story::Story;
use iw_core::table::Schema;
use serde::{Deserialize, Serialize};

pub const SESSION_SCHEMA: &str = "iw-session/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionRecord {
    pub schema: String,
    pub id: String,
    pub hints: Option<Schema>,
    pub config: EngineConfig,
}

pub struct Persisted {
    pub record: SessionRecord,
    pub csv: String,
    pub story: String,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

/// Session ids are generated as lowercase hex plus `-n`; anything else is
/// never looked up on disk.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b) || b == b'-')
}

fn write_atomic(path: &Path, text: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(tmp, path)
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Store { root })
    }

    fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    pub fn exists(&self, id: &str) -> bool {
        valid_id(id) && self.dir(id).join("session.json").is_file()
    }

    pub fn ids(&self) -> Vec<String> {
        let Ok(entries) = fs::read_dir(&self.root) else {
            return Vec::new();
        };
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|id| self.exists(id))
            .collect();
        ids.sort();
        ids
    }

    pub fn create(&self, record: &SessionRecord, csv: &str, story: &Story) -> io::Result<()> {
        let dir = self.dir(&record.id);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("table.csv"), csv)?;
        self.save_story(&record.id, story)?;
        let text = serde_json::to_string_pretty(record).map_err(io::Error::other)?;
        write_atomic(&dir.join("session.json"), &text)
    }

    pub fn save_story(&self, id: &str, story: &Story) -> io::Result<()> {
        write_atomic(&self.dir(id).join("story.json"), &story.export())
    }

    pub fn load(&self, id: &str) -> io::Result<Option<Persisted>> {
        if !self.exists(id) {
            return Ok(None);
        }
        let dir = self.dir(id);
        let record: SessionRecord =
            serde_json::from_str(&fs::read_to_string(dir.join("session.json"))?).map_err(io::Error::other)?;
        if record.schema != SESSION_SCHEMA {
            return Err(io::Error::other(format!("unexpected session schema {:?}", record.schema)));
        }
        Ok(Some(Persisted {
            record,
            csv: fs::read_to_string(dir.join("table.csv"))?,
            story: fs::read_to_string(dir.join("story.json"))?,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_restricted() {
        assert!(valid_id("0a1b2c3d4e5f6071-1"));
        assert!(!valid_id("../etc"));
        assert!(!valid_id(""));
        assert!(!valid_id("ABC"));
    }
}
