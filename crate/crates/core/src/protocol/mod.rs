//! Training proofs, audit proofs and the transcript files that carry them.

mod audit;
mod backend;
mod transcript;

use std::fmt;

use thiserror::Error;

use crate::air::AirError;
use crate::commit::CommitError;
use crate::nn::NnError;

pub use audit::{
    zkaudit_i_prove, zkaudit_i_verify, AuditContext, AuditFunction, AuditOutput, AuditProof, AuditReport, AuditRun,
    AuditSpec, HashWeights,
};
pub use backend::{MockBackend, ProofBackend, PublicDigest, StepProof, Structure};
pub use transcript::{
    commit_dataset, step_structure, zkaudit_t_prove, zkaudit_t_verify, DatasetCommitment, DatasetSection, StepRecord, TrainingArtifacts, TrainingInput,
    TrainingTranscript, TranscriptHeader, FORMAT_VERSION, TRAVERSAL_RULE,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Air(#[from] AirError),
    #[error(transparent)]
    Commit(#[from] CommitError),
    #[error("step {step}: {source}")]
    Step { step: usize, source: Box<ProtocolError> },
    #[error("witness does not satisfy its constraints: {0}")]
    Unsatisfied(String),
    #[error("weights do not open the transcript's final commitment")]
    WeightCommitmentMismatch,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("malformed file: {0}")]
    Malformed(String),
}

/// First failing check of a verifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RejectReason {
    Malformed(String),
    Version,
    Header(String),
    Ordering,
    MerkleRoot,
    StepCount,
    Traversal { step: usize },
    InitialCommitment,
    Chain { step: usize },
    FinalCommitment,
    Structure,
    StepProofMismatch,
    AtStep { step: usize, reason: Box<RejectReason> },
    WitnessMismatch,
    Unsatisfied(String),
    TranscriptMismatch,
    WeightCommitmentMismatch,
    AuditOutput(String),
}

impl RejectReason {
    /// Stable kebab-case name.
    pub fn code(&self) -> &'static str {
        match self {
            RejectReason::Malformed(_) => "malformed",
            RejectReason::Version => "version",
            RejectReason::Header(_) => "header",
            RejectReason::Ordering => "ordering",
            RejectReason::MerkleRoot => "merkle-root",
            RejectReason::StepCount => "step-count",
            RejectReason::Traversal { .. } => "traversal",
            RejectReason::InitialCommitment => "initial-commitment",
            RejectReason::Chain { .. } => "chain",
            RejectReason::FinalCommitment => "final-commitment",
            RejectReason::Structure => "structure",
            RejectReason::StepProofMismatch => "step-proof-mismatch",
            RejectReason::AtStep { reason, .. } => reason.code(),
            RejectReason::WitnessMismatch => "witness-mismatch",
            RejectReason::Unsatisfied(_) => "unsatisfied",
            RejectReason::TranscriptMismatch => "transcript-mismatch",
            RejectReason::WeightCommitmentMismatch => "weight-commitment-mismatch",
            RejectReason::AuditOutput(_) => "audit-output",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Malformed(m) | RejectReason::Header(m) | RejectReason::Unsatisfied(m) => {
                write!(f, "{}: {m}", self.code())
            }
            RejectReason::AuditOutput(m) => write!(f, "{}: {m}", self.code()),
            RejectReason::Traversal { step } | RejectReason::Chain { step } => write!(f, "{} at step {step}", self.code()),
            RejectReason::AtStep { step, reason } => write!(f, "{reason} at step {step}"),
            _ => f.write_str(self.code()),
        }
    }
}

/// Effective security after a union bound over `D + 4T` commitments, hashes
/// and proofs: `λ − log2(D + 4T)`.
pub fn security_bits(lambda: f64, dataset: u64, steps: u64) -> f64 {
    let events = dataset as f64 + 4.0 * steps as f64;
    lambda - events.max(1.0).log2()
}
