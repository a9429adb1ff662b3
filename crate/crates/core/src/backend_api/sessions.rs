use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use crate::hook_vm::LedgerState;

/// Header carrying the session id on simulate requests.
pub const SESSION_HEADER: &str = "x-hookforge-session";

/// One simulator ledger. The mutex serializes mutations of a session.
pub struct Session {
    ledger: Mutex<LedgerState>,
}

impl Session {
    pub fn lock(&self) -> MutexGuard<'_, LedgerState> {
        // a panicked simulation leaves the previous ledger intact
        self.ledger.lock().unwrap_or_else(|p| p.into_inner())
    }
}

struct Entry {
    session: Arc<Session>,
    last_used: Instant,
}

pub struct SessionStore {
    idle: Duration,
    entries: Mutex<HashMap<String, Entry>>,
}

impl SessionStore {
    pub fn new(idle: Duration) -> Self {
        SessionStore { idle, entries: Mutex::new(HashMap::new()) }
    }

    fn entries(&self) -> MutexGuard<'_, HashMap<String, Entry>> {
        let mut entries = self.entries.lock().unwrap_or_else(|p| p.into_inner());
        let idle = self.idle;
        entries.retain(|_, e| e.last_used.elapsed() < idle);
        entries
    }

    pub fn create(&self) -> String {
        let id = format!("{:032x}", rand::random::<u128>());
        let session = Arc::new(Session { ledger: Mutex::new(LedgerState::default()) });
        self.entries().insert(id.clone(), Entry { session, last_used: Instant::now() });
        id
    }

    /// Live session `id`, refreshing its idle timer.
    pub fn get(&self, id: &str) -> Option<Arc<Session>> {
        let mut entries = self.entries();
        let entry = entries.get_mut(id)?;
        entry.last_used = Instant::now();
        Some(entry.session.clone())
    }

    pub fn remove(&self, id: &str) -> bool {
        self.entries().remove(id).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
