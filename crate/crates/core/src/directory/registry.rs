use std::collections::HashMap;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use super::DirectoryError;

/// A registered importer endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DirectoryEntry {
    pub query_id: String,
    pub worker_index: u32,
    pub hostname: String,
    pub port: u16,
}

struct Slot {
    entry: DirectoryEntry,
    claimed: bool,
}

/// Importers that must receive a stub stream because no exporter will connect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubPlan {
    pub query_id: String,
    pub stubs: Vec<DirectoryEntry>,
}

/// Synchronized map of registrations with blocking, claim-once lookups.
#[derive(Default)]
pub struct Registry {
    slots: Mutex<HashMap<(String, u32), Slot>>,
    changed: Condvar,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn register(&self, entry: DirectoryEntry) -> Result<(), DirectoryError> {
        let key = (entry.query_id.clone(), entry.worker_index);
        let mut slots = self.slots.lock().unwrap();
        if slots.contains_key(&key) {
            return Err(DirectoryError::Duplicate { query_id: key.0, worker_index: key.1 });
        }
        slots.insert(key, Slot { entry, claimed: false });
        drop(slots);
        self.changed.notify_all();
        Ok(())
    }

    /// Blocks until `(query_id, worker_index)` is registered, then claims it.
    /// An entry can be claimed once; later lookups fail with `AlreadyClaimed`.
    pub fn lookup(
        &self,
        query_id: &str,
        worker_index: u32,
        timeout: Duration,
    ) -> Result<DirectoryEntry, DirectoryError> {
        let deadline = Instant::now() + timeout;
        let key = (query_id.to_owned(), worker_index);
        let mut slots = self.slots.lock().unwrap();
        loop {
            if let Some(slot) = slots.get_mut(&key) {
                if slot.claimed {
                    return Err(DirectoryError::AlreadyClaimed { query_id: key.0, worker_index });
                }
                slot.claimed = true;
                return Ok(slot.entry.clone());
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(DirectoryError::Timeout { query_id: key.0, worker_index });
            }
            slots = self.changed.wait_timeout(slots, deadline - now).unwrap().0;
        }
    }

    /// Registered entries of one query, claimed or not, ordered by worker index.
    pub fn entries(&self, query_id: &str) -> Vec<DirectoryEntry> {
        let slots = self.slots.lock().unwrap();
        let mut out: Vec<_> =
            slots.values().filter(|s| s.entry.query_id == query_id).map(|s| s.entry.clone()).collect();
        out.sort_by_key(|e| e.worker_index);
        out
    }

    /// Claims the importers that have no matching exporter. Waits for each
    /// orphan to register, up to `timeout` per entry.
    pub fn reconcile(
        &self,
        query_id: &str,
        exporter_count: u32,
        importer_count: u32,
        timeout: Duration,
    ) -> Result<StubPlan, DirectoryError> {
        if exporter_count > importer_count {
            return Err(DirectoryError::Unsupported { exporters: exporter_count, importers: importer_count });
        }
        let stubs =
            (exporter_count..importer_count).map(|i| self.lookup(query_id, i, timeout)).collect::<Result<_, _>>()?;
        Ok(StubPlan { query_id: query_id.to_owned(), stubs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn entry(q: &str, i: u32, port: u16) -> DirectoryEntry {
        DirectoryEntry { query_id: q.into(), worker_index: i, hostname: "h".into(), port }
    }

    const T: Duration = Duration::from_secs(5);

    #[test]
    fn register_then_lookup() {
        let r = Registry::new();
        r.register(entry("Q1", 0, 9000)).unwrap();
        assert_eq!(r.lookup("Q1", 0, T).unwrap(), entry("Q1", 0, 9000));
    }

    #[test]
    fn duplicate_and_double_claim() {
        let r = Registry::new();
        r.register(entry("Q1", 0, 1)).unwrap();
        assert!(matches!(r.register(entry("Q1", 0, 2)), Err(DirectoryError::Duplicate { .. })));
        r.lookup("Q1", 0, T).unwrap();
        assert!(matches!(r.lookup("Q1", 0, T), Err(DirectoryError::AlreadyClaimed { .. })));
    }

    #[test]
    fn queries_are_isolated() {
        let r = Registry::new();
        r.register(entry("Q1", 0, 1)).unwrap();
        r.register(entry("Q2", 0, 2)).unwrap();
        assert_eq!(r.lookup("Q2", 0, T).unwrap().port, 2);
        assert_eq!(r.lookup("Q1", 0, T).unwrap().port, 1);
        assert!(matches!(r.lookup("Q3", 0, Duration::from_millis(20)), Err(DirectoryError::Timeout { .. })));
    }

    #[test]
    fn lookup_blocks_until_registration() {
        let r = Arc::new(Registry::new());
        let waiter = {
            let r = r.clone();
            std::thread::spawn(move || r.lookup("Q", 3, T))
        };
        std::thread::sleep(Duration::from_millis(50));
        assert!(!waiter.is_finished());
        r.register(entry("Q", 3, 77)).unwrap();
        assert_eq!(waiter.join().unwrap().unwrap().port, 77);
    }

    #[test]
    fn concurrent_matching_claims_each_entry_once() {
        let r = Arc::new(Registry::new());
        let n = 16u32;
        let lookups: Vec<_> = (0..n)
            .map(|i| {
                let r = r.clone();
                std::thread::spawn(move || r.lookup("Q", i, T).unwrap())
            })
            .collect();
        for i in (0..n).rev() {
            r.register(entry("Q", i, 1000 + i as u16)).unwrap();
        }
        let mut claimed: Vec<_> = lookups.into_iter().map(|h| h.join().unwrap()).collect();
        claimed.sort_by_key(|e| e.worker_index);
        assert_eq!(claimed, r.entries("Q"));
    }

    #[test]
    fn reconcile_plans() {
        let r = Registry::new();
        for i in 0..3 {
            r.register(entry("Q", i, i as u16)).unwrap();
        }
        let plan = r.reconcile("Q", 2, 3, T).unwrap();
        assert_eq!(plan.stubs, vec![entry("Q", 2, 2)]);
        assert!(r.reconcile("Q", 3, 3, T).unwrap().stubs.is_empty());
        assert!(matches!(r.reconcile("Q", 3, 2, T), Err(DirectoryError::Unsupported { exporters: 3, importers: 2 })));
    }
}
