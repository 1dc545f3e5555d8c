//! Pipeline driver: potential-energy scans over fixture sets, minimum and
//! binding-energy fits, and variable-count and timing reports.

mod pes;
mod problem;

pub use pes::{
    fit, fit_minimum, points_from_csv, points_from_json, points_to_csv, points_to_json, qubit_report, scan, timing_report,
    write_rows_csv, FitResult, QubitRow, ScanFailure, ScanPoint, ScanReport, TimingRow,
};
pub use problem::{
    add_spin_penalty, default_penalty_weight, find_manifest_entry, label_from_path, run_method, variable_counts, ManifestEntry, Method,
    MethodOutcome, Phases, Problem, ProblemOptions, SamplerConfig, SamplerKind,
};

use thiserror::Error;

/// Environment variable holding the default remote sampler endpoint.
pub const ENDPOINT_ENV: &str = "ANNEALCHEM_ENDPOINT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("io: {0}")]
    Io(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("fit: {0}")]
    Fit(String),
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Molham(#[from] crate::molham::MolhamError),
    #[error(transparent)]
    Pauli(#[from] crate::pauli::PauliError),
    #[error(transparent)]
    Ising(#[from] crate::ising::IsingError),
    #[error(transparent)]
    Xbk(#[from] crate::xbk::XbkError),
    #[error(transparent)]
    Qcc(#[from] crate::qcc::QccError),
}
