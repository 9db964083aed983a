use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use faircompass_core::compass::{replay, CompassSession, CompassTree, TreeDocument};
use faircompass_core::AuditReport;
use serde::{Deserialize, Serialize};

pub struct SessionEntry {
    pub tree: Arc<CompassTree>,
    /// False when the session runs on the service's default tree.
    pub custom_tree: bool,
    pub session: CompassSession,
    pub context: String,
    last_used: Instant,
}

impl SessionEntry {
    pub fn new(
        tree: Arc<CompassTree>,
        custom_tree: bool,
        session: CompassSession,
        context: String,
    ) -> Self {
        Self {
            tree,
            custom_tree,
            session,
            context,
            last_used: Instant::now(),
        }
    }
}

struct AuditEntry {
    report: Arc<AuditReport>,
    last_used: Instant,
}

/// Sessions and audit results keyed by opaque ids. Entries idle for longer
/// than the timeout are dropped on the next access.
pub struct Store {
    default_tree: Arc<CompassTree>,
    sessions: HashMap<String, SessionEntry>,
    audits: HashMap<String, AuditEntry>,
    idle_timeout: Duration,
    snapshot: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    sessions: BTreeMap<String, SessionSnapshot>,
    audits: BTreeMap<String, AuditReport>,
}

#[derive(Serialize, Deserialize)]
struct SessionSnapshot {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tree: Option<TreeDocument>,
    session: CompassSession,
    context: String,
}

pub fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

impl Store {
    pub fn new(
        default_tree: Arc<CompassTree>,
        idle_timeout: Duration,
        snapshot: Option<PathBuf>,
    ) -> Self {
        Self {
            default_tree,
            sessions: HashMap::new(),
            audits: HashMap::new(),
            idle_timeout,
            snapshot,
        }
    }

    /// Restores a snapshot. Sessions whose trail no longer replays on their tree are dropped.
    pub fn load_snapshot(&mut self) -> Result<usize, String> {
        let Some(path) = &self.snapshot else {
            return Ok(0);
        };
        if !path.exists() {
            return Ok(0);
        }
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let snap: Snapshot = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let now = Instant::now();
        for (id, s) in snap.sessions {
            let (tree, custom) = match s.tree {
                Some(doc) => match CompassTree::try_from(doc) {
                    Ok(t) => (Arc::new(t), true),
                    Err(_) => continue,
                },
                None => (self.default_tree.clone(), false),
            };
            match replay(&tree, s.session.trail()) {
                Ok(replayed) if replayed == s.session => {}
                _ => continue,
            }
            self.sessions.insert(
                id,
                SessionEntry {
                    tree,
                    custom_tree: custom,
                    session: s.session,
                    context: s.context,
                    last_used: now,
                },
            );
        }
        for (id, report) in snap.audits {
            self.audits.insert(
                id,
                AuditEntry {
                    report: Arc::new(report),
                    last_used: now,
                },
            );
        }
        Ok(self.sessions.len())
    }

    fn purge(&mut self) {
        let timeout = self.idle_timeout;
        self.sessions.retain(|_, e| e.last_used.elapsed() <= timeout);
        self.audits.retain(|_, e| e.last_used.elapsed() <= timeout);
    }

    pub fn insert_session(&mut self, entry: SessionEntry) -> String {
        self.purge();
        let id = new_id();
        self.sessions.insert(id.clone(), entry);
        self.save();
        id
    }

    /// Runs `f` on a session and persists the result if `f` succeeds.
    pub fn with_session<T, E>(
        &mut self,
        id: &str,
        f: impl FnOnce(&mut SessionEntry) -> Result<T, E>,
    ) -> Option<Result<T, E>> {
        self.purge();
        let entry = self.sessions.get_mut(id)?;
        entry.last_used = Instant::now();
        let out = f(entry);
        if out.is_ok() {
            self.save();
        }
        Some(out)
    }

    pub fn insert_audit(&mut self, report: AuditReport) -> (String, Arc<AuditReport>) {
        self.purge();
        let id = new_id();
        let report = Arc::new(report);
        self.audits.insert(
            id.clone(),
            AuditEntry {
                report: report.clone(),
                last_used: Instant::now(),
            },
        );
        self.save();
        (id, report)
    }

    pub fn audit(&mut self, id: &str) -> Option<Arc<AuditReport>> {
        self.purge();
        let entry = self.audits.get_mut(id)?;
        entry.last_used = Instant::now();
        Some(entry.report.clone())
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    fn save(&self) {
        let Some(path) = &self.snapshot else { return };
        let snap = Snapshot {
            sessions: self
                .sessions
                .iter()
                .map(|(id, e)| {
                    (
                        id.clone(),
                        SessionSnapshot {
                            tree: e.custom_tree.then(|| e.tree.document().clone()),
                            session: e.session.clone(),
                            context: e.context.clone(),
                        },
                    )
                })
                .collect(),
            audits: self
                .audits
                .iter()
                .map(|(id, e)| (id.clone(), (*e.report).clone()))
                .collect(),
        };
        if let Err(e) = write_atomically(path, &serde_json::to_vec(&snap).expect("snapshot serializes")) {
            eprintln!("warning: could not write snapshot {}: {e}", path.display());
        }
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(tmp, path)
}
