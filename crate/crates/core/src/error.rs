use std::path::PathBuf;

use thiserror::Error;

use crate::network::Finding;
use crate::phasor::PhaseId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("phase {0} is not present in the spectrum")]
    UnknownPhase(PhaseId),
    #[error("harmonic order must be >= 1, got {0}")]
    InvalidOrder(i64),
    #[error("spectrum entry for order {order} has phases {found:?}, expected {expected:?}")]
    PhaseSetMismatch {
        order: u32,
        expected: Vec<PhaseId>,
        found: Vec<PhaseId>,
    },
    #[error("THD is undefined: fundamental of phase {0} is missing or zero")]
    UndefinedThd(PhaseId),
    #[error("PHI is undefined: phase {0} has no non-zero components")]
    UndefinedPhi(PhaseId),
    #[error("statistics of an empty series are undefined")]
    EmptySeries,

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed network file: {0}")]
    Parse(String),
    #[error("network failed validation:\n{}", format_findings(.0))]
    Validation(Vec<Finding>),
    #[error("network is not radial: {0}")]
    NotRadial(String),
    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("power flow did not converge in {iterations} iterations (last mismatch {mismatch:e} pu)")]
    NonConvergence { iterations: usize, mismatch: f64 },
    #[error("order {order}: {source}")]
    AtOrder {
        order: u32,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown measurement point `{0}`")]
    UnknownPoint(String),
    #[error("point `{point}` has no {kind} quantity")]
    KindMismatch { point: String, kind: &'static str },
    #[error("unknown harmonic source `{0}`")]
    UnknownSource(String),
    #[error("metric {metric} is undefined at `{point}` phase {phase}")]
    UndefinedMetric {
        metric: &'static str,
        point: String,
        phase: PhaseId,
    },
    #[error("cell (alpha={alpha} deg, beta={beta} deg): {source}")]
    AtCell {
        alpha: f64,
        beta: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of the file system rather than of the model or study.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::AtOrder { source, .. } | Error::AtCell { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

fn format_findings(findings: &[Finding]) -> String {
    findings.iter().map(|f| format!("  {f}")).collect::<Vec<_>>().join("\n")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
