//! Interchange files, the batch runner and report emission.

mod batch;
mod files;
mod report;

pub use batch::{
    compare_reports, evaluate_input, oracle_check, run_batch, target_records, BatchOutcome,
    Comparison, InputFailure, OracleCheck,
};
pub use files::{
    load_batch, load_model, parse_batch, parse_model, render_batch, render_model, save_batch,
    save_model, BatchFile, BatchInput, ModelFile, SCHEMA_VERSION,
};
pub use report::{
    parse_report, read_report, render_report, write_report, Method, ReportFormat, ResultRecord,
};
