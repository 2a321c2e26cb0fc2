//! Session operations over a [`SessionStore`].
//!
//! Writes to one session are serialized by a per-session lock; reads go
//! straight to disk, where atomic renames guarantee a whole document.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use chrono::Utc;
use flbandit_core::arm::ensure_unique;
use flbandit_core::{ArmId, PolicyConfig};
use uuid::Uuid;

use crate::error::{Result, SessionError};
use crate::model::{Recommendation, RoundReport, SessionState, SessionSummary};
use crate::store::SessionStore;

#[derive(Debug)]
pub struct SessionService {
    store: SessionStore,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl SessionService {
    pub fn new(store: SessionStore) -> Self {
        Self { store, locks: Mutex::new(HashMap::new()) }
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    fn lock_for(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table poisoned");
        locks.entry(id.to_owned()).or_default().clone()
    }

    /// Applies `f` to the stored session and persists the result while
    /// holding the session's write lock.
    fn modify(&self, id: &str, f: impl FnOnce(&SessionState) -> Result<SessionState>) -> Result<SessionState> {
        let lock = self.lock_for(id);
        let _guard = lock.lock().expect("session lock poisoned");
        let current = self.store.load(id)?;
        let next = f(&current)?;
        if next != current {
            self.store.save(&next)?;
        }
        Ok(next)
    }

    pub fn create_session(&self, arms: Vec<ArmId>, policy: PolicyConfig) -> Result<SessionState> {
        if arms.len() < 2 {
            return Err(SessionError::Validation(format!("need at least 2 arms, got {}", arms.len())));
        }
        ensure_unique(&arms)?;
        let id = Uuid::new_v4().simple().to_string();
        let state = SessionState::new(id, arms, policy, Utc::now())?;
        self.store.save(&state)?;
        Ok(state)
    }

    pub fn get_session(&self, id: &str) -> Result<SessionState> {
        self.store.load(id)
    }

    pub fn list_sessions(&self) -> Result<Vec<SessionSummary>> {
        Ok(self.store.load_all()?.iter().map(SessionState::summary).collect())
    }

    pub fn recommend(&self, id: &str) -> Result<Recommendation> {
        self.store.load(id)?.recommend()
    }

    /// Records one round. Nothing is written unless the report is valid.
    pub fn report_round(&self, id: &str, report: &RoundReport) -> Result<SessionState> {
        self.modify(id, |s| s.with_report(report, Utc::now()))
    }

    /// Closes the session; closing a closed session returns it unchanged.
    pub fn close_session(&self, id: &str) -> Result<SessionState> {
        self.modify(id, |s| Ok(s.closed()))
    }
}
