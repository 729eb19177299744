//! Clinical-trial abstract sentiment pipeline: harvesting, conclusion
//! extraction, corpus assembly, semi-supervised adversarial fine-tuning of a
//! sequence encoder, and evaluation.

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod jsonl;
pub mod label;
pub mod nn;
pub mod preprocess;
pub mod ssgan;
pub mod synthetic;
pub mod trend;

pub use error::{Error, Result};
pub use label::{Provenance, SentimentLabel};
