use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backend::{ProofBackend, PublicDigest, StepProof};
use super::transcript::{TrainingTranscript, FORMAT_VERSION};
use super::{ProtocolError, RejectReason};
use crate::air::Circuit;
use crate::commit::{opens_weights, tag, Digest, SaltedCommitment};
use crate::nn::Weights;

const FORMAT: &str = "zkaudit-audit";

/// Public description of an audit function and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AuditSpec {
    HashWeights,
    Censorship {
        user: u32,
        item: u32,
        epsilon: f64,
        delta: f64,
        /// Candidate items; `None` means every item.
        population: Option<Vec<u32>>,
        /// Score every population member once instead of sampling.
        exhaustive: bool,
    },
    MeanItemScore {
        item: u32,
        users: usize,
    },
    Copyright {
        tau: f64,
        items: usize,
        dim: usize,
        claimant: Digest,
    },
    Demographic {
        categories: usize,
        items: usize,
        labels: Digest,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AuditOutput {
    WeightsDigest {
        digest: Digest,
    },
    Quantile {
        item_score: i64,
        at_or_below: u64,
        samples: u64,
        estimate: f64,
    },
    MeanScore {
        sum_raw: i64,
        count: u64,
        mean_raw: i64,
    },
    Copyright {
        tau_raw: i64,
        similarities_raw: Vec<i64>,
        flagged: Vec<bool>,
        pass: bool,
    },
    Demographic {
        counts: Vec<u64>,
        proportions_raw: Vec<i64>,
    },
}

/// Inputs available to an audit function on the prover side.
pub struct AuditContext<'a> {
    pub transcript: &'a TrainingTranscript,
    pub weights: &'a Weights,
}

pub struct AuditRun {
    pub output: AuditOutput,
    pub circuits: Vec<Circuit>,
}

pub trait AuditFunction: Sync {
    fn spec(&self) -> AuditSpec;
    fn run(&self, ctx: &AuditContext<'_>) -> Result<AuditRun, ProtocolError>;
}

/// Echoes the weight commitment; proves nothing beyond the opening.
pub struct HashWeights;

impl AuditFunction for HashWeights {
    fn spec(&self) -> AuditSpec {
        AuditSpec::HashWeights
    }

    fn run(&self, ctx: &AuditContext<'_>) -> Result<AuditRun, ProtocolError> {
        Ok(AuditRun {
            output: AuditOutput::WeightsDigest { digest: ctx.transcript.final_weights.digest },
            circuits: Vec::new(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditProof {
    pub index: usize,
    pub proof: StepProof,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditReport {
    pub format: String,
    pub version: u32,
    pub backend: String,
    /// Digest of the canonical training transcript this audit refers to.
    pub transcript: Digest,
    pub weights: SaltedCommitment,
    pub audit: AuditSpec,
    pub output: AuditOutput,
    pub proofs: Vec<AuditProof>,
}

impl AuditReport {
    pub fn to_canonical_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(e.to_string()))
    }
}

fn audit_public(
    t: &TrainingTranscript,
    transcript: &Digest,
    weights: &SaltedCommitment,
    spec: &AuditSpec,
    output: &AuditOutput,
    index: usize,
) -> PublicDigest {
    let spec_json = serde_json::to_vec(spec).expect("spec serializes");
    let out_json = serde_json::to_vec(output).expect("output serializes");
    t.header.hash.hash(
        tag::PUBLIC,
        &[b"audit", &transcript.0, &weights.digest.0, &weights.salt, &spec_json, &out_json, &(index as u64).to_le_bytes()],
    )
}

pub fn zkaudit_i_prove(
    f: &dyn AuditFunction,
    weights: &Weights,
    transcript: &TrainingTranscript,
    backend: &dyn ProofBackend,
) -> Result<AuditReport, ProtocolError> {
    if !opens_weights(transcript.header.hash, &transcript.final_weights, weights) {
        return Err(ProtocolError::WeightCommitmentMismatch);
    }
    let spec = f.spec();
    let run = f.run(&AuditContext { transcript, weights })?;
    let tdigest = transcript.digest();
    let proofs = run
        .circuits
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let public = audit_public(transcript, &tdigest, &transcript.final_weights, &spec, &run.output, i);
            backend
                .prove_step(c, &public)
                .map(|proof| AuditProof { index: i, proof })
                .map_err(|e| ProtocolError::Step { step: i, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AuditReport {
        format: FORMAT.into(),
        version: FORMAT_VERSION,
        backend: backend.name().into(),
        transcript: tdigest,
        weights: transcript.final_weights,
        audit: spec,
        output: run.output,
        proofs,
    })
}

pub fn zkaudit_i_verify(
    report: &AuditReport,
    transcript: &TrainingTranscript,
    backend: &dyn ProofBackend,
) -> Result<(), RejectReason> {
    if report.format != FORMAT {
        return Err(RejectReason::Header("unknown format".into()));
    }
    if report.version != FORMAT_VERSION {
        return Err(RejectReason::Version);
    }
    if report.backend != backend.name() {
        return Err(RejectReason::Header("backend mismatch".into()));
    }
    let tdigest = transcript.digest();
    if report.transcript != tdigest {
        return Err(RejectReason::TranscriptMismatch);
    }
    if report.weights != transcript.final_weights {
        return Err(RejectReason::WeightCommitmentMismatch);
    }
    crate::audits::check_output(&report.audit, &report.output, transcript).map_err(RejectReason::AuditOutput)?;
    let structures =
        crate::audits::expected_structures(&report.audit, transcript).map_err(|e| RejectReason::Header(e.to_string()))?;
    if structures.len() != report.proofs.len() {
        return Err(RejectReason::StepCount);
    }
    for (i, (p, s)) in report.proofs.iter().zip(&structures).enumerate() {
        if p.index != i {
            return Err(RejectReason::AtStep { step: i, reason: Box::new(RejectReason::Ordering) });
        }
        let public = audit_public(transcript, &tdigest, &report.weights, &report.audit, &report.output, i);
        backend
            .verify_step(&p.proof, s, &public)
            .map_err(|r| RejectReason::AtStep { step: i, reason: Box::new(r) })?;
    }
    Ok(())
}
