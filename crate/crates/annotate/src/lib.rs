//! Blinded rating service for expert annotation of abstracts.
//!
//! Each rater gets every abstract once, in a seeded per-rater order, with
//! only the abstract text exposed. Accepted ratings go to an append-only
//! event log that is replayed on start, and the admin export produces the
//! annotations file read by label aggregation.

mod api;
mod config;
mod error;
mod log;
mod project;

pub use api::{router, serve, RaterQuery, RatingRequest, Shared};
pub use config::{default_rubric, AnnotateConfig, LabelDefinition, RaterConfig};
pub use error::{ApiError, ErrorBody, Result};
pub use log::{EventLog, RatingEvent};
pub use project::{
    task_id, Acknowledgement, AnnotationTask, NextTask, Principal, Progress, Project, TaskStatus,
};
