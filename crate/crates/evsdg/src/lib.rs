//! File formats and the command-line tool for the `evsdg-core` session
//! generator: session CSV ingestion and output, canonical JSON model files,
//! and validation reports.

#![forbid(unsafe_code)]

pub mod cli;
pub mod ingest;
pub mod persist;
pub mod report;

pub use ingest::{parse_sessions, write_sessions, IngestError, ParsePolicy, RecordErrorReason, SessionRecordError};
pub use persist::{load_model, model_from_str, model_to_string, save_model, PersistError};
pub use report::report_to_string;
