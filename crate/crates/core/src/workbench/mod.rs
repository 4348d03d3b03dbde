//! Scenario files, seeded generators, the oracle runner and report output.

mod emit;
mod generate;
mod run;
mod scenario;
mod suite;

use thiserror::Error;

pub use emit::{canonical_json, emit_report, parse_report, ReportFormat};
pub use generate::{
    eigen_member, eigen_violator, gaussian, generate, random_blocks, random_invertible, random_operator,
    random_polynomial_in, random_unit_vector, random_vector, random_weights, GeneratorKind, GeneratorSpec,
    DEFAULT_MAX_DIM,
};
pub use run::{run_scenario, scenario_digest, Report, TestRecord, VERSION};
pub use scenario::{complex_pairs, matrix_pairs, parse_scenario, ArgValue, ComplexPair, Scenario, TestSpec};
pub use suite::{run_suite, suite_specs, SuiteConfig, SuiteEntry, SuiteReport};

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("test {index} ({kind}): {source}")]
    Test {
        index: usize,
        kind: String,
        #[source]
        source: crate::Error,
    },
}

impl WorkbenchError {
    /// Structural and validation errors exit with 1.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

pub type WorkbenchResult<T> = std::result::Result<T, WorkbenchError>;
