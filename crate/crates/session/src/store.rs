//! One JSON document per session under a directory. Writes go to a temp
//! file in the same directory and are renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{Result, SessionError};
use crate::model::SessionState;

/// Environment variable naming the default store directory.
pub const STORE_ENV: &str = "FLBANDIT_STORE";

#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> Result<PathBuf> {
        if valid_id(id) {
            Ok(self.dir.join(format!("{id}.json")))
        } else {
            Err(SessionError::NotFound(id.to_owned()))
        }
    }

    pub fn exists(&self, id: &str) -> bool {
        self.path(id).map(|p| p.exists()).unwrap_or(false)
    }

    pub fn load(&self, id: &str) -> Result<SessionState> {
        let path = self.path(id)?;
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(SessionError::NotFound(id.to_owned()))
            }
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&bytes)
            .map_err(|e| SessionError::Storage(format!("corrupt session file {}: {e}", path.display())))
    }

    pub fn save(&self, state: &SessionState) -> Result<()> {
        let path = self.path(&state.session_id)?;
        let mut json = serde_json::to_vec_pretty(state).map_err(|e| SessionError::Storage(e.to_string()))?;
        json.push(b'\n');
        let mut tmp = NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&json)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| SessionError::Storage(e.to_string()))?;
        Ok(())
    }

    /// Every stored session, oldest first.
    pub fn load_all(&self) -> Result<Vec<SessionState>> {
        let mut sessions = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                if let Some(id) = path.file_stem().and_then(|s| s.to_str()) {
                    sessions.push(self.load(id)?);
                }
            }
        }
        sessions.sort_by(|a, b| (a.created_at, &a.session_id).cmp(&(b.created_at, &b.session_id)));
        Ok(sessions)
    }
}
