//! Batch driver: load a verification spec, run the selected suites at sampled
//! points and emit a deterministic report.

pub mod report;
pub mod run;
pub mod spec;

pub use report::{write_report, Format, Report};
pub use run::{run_suite, RunError};
pub use spec::{load_spec, parse_spec, SpecError, Suite, VerificationSpec};
