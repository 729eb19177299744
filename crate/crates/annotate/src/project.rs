//! Rating queues, the PENDING to RATED transition and export.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::info;
use trialsent_core::corpus::RaterAnnotation;
use trialsent_core::ingest::AbstractRecord;
use trialsent_core::SentimentLabel;

use crate::config::{AnnotateConfig, LabelDefinition};
use crate::error::{ApiError, Result};
use crate::log::{EventLog, RatingEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskStatus {
    Pending,
    Rated,
}

/// What a rater sees: the abstract text and nothing else about its source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub abstract_text: String,
    pub assigned_rater: String,
    pub status: TaskStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub rater: String,
    pub rated: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextTask {
    pub task: Option<AnnotationTask>,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acknowledgement {
    pub task_id: String,
    pub label: SentimentLabel,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Principal {
    Rater(String),
    Admin,
}

struct Task {
    rater: String,
    pmid: String,
    abstract_index: usize,
    status: TaskStatus,
}

struct State {
    tasks: HashMap<String, Task>,
    log: EventLog,
    accepted: Vec<RatingEvent>,
}

/// The annotation project: abstracts, raters, queues and the event log.
pub struct Project {
    config: AnnotateConfig,
    abstracts: Vec<String>,
    tokens: HashMap<String, Principal>,
    queues: BTreeMap<String, Vec<String>>,
    state: Mutex<State>,
}

fn rater_seed(project_seed: u64, rater: &str) -> u64 {
    let digest = Sha256::digest(format!("queue:{project_seed}:{rater}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Opaque identifier; reveals neither the PMID nor the queue position.
pub fn task_id(project_seed: u64, rater: &str, pmid: &str) -> String {
    let digest = Sha256::digest(format!("task:{project_seed}:{rater}:{pmid}").as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl Project {
    /// Builds every rater's queue over `records` and replays the event log.
    pub fn open(config: AnnotateConfig, records: &[AbstractRecord], log_path: &Path) -> Result<Self> {
        config.validate()?;
        let mut seen = std::collections::HashSet::new();
        for r in records {
            if !seen.insert(r.pmid.as_str()) {
                return Err(ApiError::BadRequest(format!("abstract {} is listed twice", r.pmid)));
            }
            if r.abstract_text.trim().is_empty() {
                return Err(ApiError::BadRequest(format!("abstract {} has no text", r.pmid)));
            }
        }
        let abstracts: Vec<String> = records.iter().map(|r| r.abstract_text.clone()).collect();

        let mut tokens = HashMap::new();
        tokens.insert(config.admin_token.clone(), Principal::Admin);
        let mut queues = BTreeMap::new();
        let mut tasks = HashMap::new();
        for rater in &config.raters {
            tokens.insert(rater.token.clone(), Principal::Rater(rater.id.clone()));
            let seed = rater.seed.unwrap_or_else(|| rater_seed(config.seed, &rater.id));
            let mut order: Vec<usize> = (0..records.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut queue = Vec::with_capacity(order.len());
            for i in order {
                let id = task_id(config.seed, &rater.id, &records[i].pmid);
                tasks.insert(
                    id.clone(),
                    Task {
                        rater: rater.id.clone(),
                        pmid: records[i].pmid.clone(),
                        abstract_index: i,
                        status: TaskStatus::Pending,
                    },
                );
                queue.push(id);
            }
            queues.insert(rater.id.clone(), queue);
        }

        let (log, events) = EventLog::open(log_path)?;
        for e in &events {
            let task = tasks.get_mut(&e.task_id).ok_or_else(|| {
                ApiError::Storage(format!("event log names unknown task {} ({} / {})", e.task_id, e.rater, e.pmid))
            })?;
            if task.rater != e.rater || task.pmid != e.pmid {
                return Err(ApiError::Storage(format!("event for task {} does not match its owner", e.task_id)));
            }
            if task.status == TaskStatus::Rated {
                return Err(ApiError::Storage(format!("task {} is rated twice in the log", e.task_id)));
            }
            task.status = TaskStatus::Rated;
        }
        info!(
            raters = config.raters.len(),
            abstracts = records.len(),
            replayed = events.len(),
            "annotation project ready"
        );
        Ok(Self {
            config,
            abstracts,
            tokens,
            queues,
            state: Mutex::new(State {
                tasks,
                log,
                accepted: events,
            }),
        })
    }

    pub fn authenticate(&self, token: Option<&str>) -> Result<Principal> {
        let token = token.ok_or_else(|| ApiError::Unauthorized("missing bearer token".into()))?;
        self.tokens
            .get(token)
            .cloned()
            .ok_or_else(|| ApiError::Unauthorized("unknown token".into()))
    }

    pub fn rubric(&self) -> &[LabelDefinition] {
        &self.config.rubric
    }

    /// The rater a request acts for: raters only ever act for themselves.
    fn acting_rater(&self, principal: &Principal, requested: Option<&str>) -> Result<String> {
        match (principal, requested) {
            (Principal::Rater(me), None) => Ok(me.clone()),
            (Principal::Rater(me), Some(r)) if r == me => Ok(me.clone()),
            (Principal::Rater(_), Some(_)) => Err(ApiError::Forbidden("raters may only act for themselves".into())),
            (Principal::Admin, Some(r)) if self.queues.contains_key(r) => Ok(r.to_string()),
            (Principal::Admin, Some(r)) => Err(ApiError::NotFound(format!("no rater named {r}"))),
            (Principal::Admin, None) => Err(ApiError::BadRequest("name the rater".into())),
        }
    }

    fn progress_of(&self, state: &State, rater: &str) -> Progress {
        let queue = &self.queues[rater];
        let rated = queue
            .iter()
            .filter(|id| state.tasks[*id].status == TaskStatus::Rated)
            .count();
        Progress {
            rater: rater.to_string(),
            rated,
            total: queue.len(),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn next_task(&self, principal: &Principal, rater: Option<&str>) -> Result<NextTask> {
        if *principal == Principal::Admin {
            return Err(ApiError::Forbidden("the admin token cannot rate".into()));
        }
        let rater = self.acting_rater(principal, rater)?;
        let state = self.lock();
        let task = self.queues[&rater]
            .iter()
            .find(|id| state.tasks[*id].status == TaskStatus::Pending)
            .map(|id| {
                let t = &state.tasks[id];
                AnnotationTask {
                    task_id: id.clone(),
                    abstract_text: self.abstracts[t.abstract_index].clone(),
                    assigned_rater: rater.clone(),
                    status: t.status,
                }
            });
        Ok(NextTask {
            task,
            progress: self.progress_of(&state, &rater),
        })
    }

    pub fn submit(&self, principal: &Principal, task_id: &str, label: &str) -> Result<Acknowledgement> {
        let Principal::Rater(rater) = principal else {
            return Err(ApiError::Forbidden("the admin token cannot rate".into()));
        };
        let label: SentimentLabel = label
            .parse()
            .ok()
            .filter(|l: &SentimentLabel| l.is_real())
            .ok_or_else(|| ApiError::Validation(format!("label must be POSITIVE, NEGATIVE or NEUTRAL, got {label:?}")))?;
        let mut state = self.lock();
        let task = match state.tasks.get(task_id) {
            Some(t) if &t.rater == rater => t,
            // other raters' task ids are indistinguishable from unknown ones
            _ => return Err(ApiError::NotFound(format!("no task {task_id} in your queue"))),
        };
        if task.status == TaskStatus::Rated {
            return Err(ApiError::Conflict(format!("task {task_id} is already rated")));
        }
        let event = RatingEvent {
            task_id: task_id.to_string(),
            rater: rater.clone(),
            pmid: task.pmid.clone(),
            label,
            submitted_at_ms: now_ms(),
        };
        state.log.append(&event)?;
        state.tasks.get_mut(task_id).expect("checked above").status = TaskStatus::Rated;
        state.accepted.push(event);
        Ok(Acknowledgement {
            task_id: task_id.to_string(),
            label,
            progress: self.progress_of(&state, rater),
        })
    }

    /// A rater's own progress, or every rater's for the admin.
    pub fn progress(&self, principal: &Principal, rater: Option<&str>) -> Result<Vec<Progress>> {
        let state = self.lock();
        match (principal, rater) {
            (Principal::Admin, None) => Ok(self.queues.keys().map(|r| self.progress_of(&state, r)).collect()),
            _ => {
                let r = self.acting_rater(principal, rater)?;
                Ok(vec![self.progress_of(&state, &r)])
            }
        }
    }

    /// Accepted ratings in acceptance order, in the annotations-file format.
    pub fn export(&self, principal: &Principal) -> Result<Vec<RaterAnnotation>> {
        if *principal != Principal::Admin {
            return Err(ApiError::Forbidden("export requires the admin token".into()));
        }
        Ok(self
            .lock()
            .accepted
            .iter()
            .map(|e| RaterAnnotation {
                rater_id: e.rater.clone(),
                pmid: e.pmid.clone(),
                label: e.label,
            })
            .collect())
    }

    pub fn export_jsonl(&self, principal: &Principal) -> Result<String> {
        let mut out = String::new();
        for a in self.export(principal)? {
            out.push_str(&serde_json::to_string(&a).map_err(|e| ApiError::storage("export", e))?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn log_path(&self) -> std::path::PathBuf {
        self.lock().log.path().to_path_buf()
    }
}
