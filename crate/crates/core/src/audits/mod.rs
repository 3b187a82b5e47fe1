//! Concrete audit functions run against a trained, committed model.

mod censorship;
mod copyright;
mod counterfactual;
mod demographic;

use thiserror::Error;

use crate::protocol::{AuditOutput, AuditSpec, ProtocolError, Structure, TrainingTranscript};

pub use censorship::{quantile_estimate, sample_positions, CensorshipAudit, MeanItemScore, CHUNK};
pub use copyright::{claimant_digest, cosine_similarity, write_copyright_csv, CopyrightAudit};
pub use counterfactual::{counterfactual_audit, verify_counterfactual, ArmMetric, CounterfactualReport, CounterfactualRun};
pub use demographic::{labels_digest, DemographicAudit};

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("{0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("item {item} has a zero-norm feature vector")]
    ZeroNorm { item: usize },
    #[error("item {item} has label {label}, outside {categories} categories")]
    Label { item: usize, label: u32, categories: usize },
    #[error("arm {arm}: {source}")]
    Arm { arm: char, source: Box<ProtocolError> },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

impl From<AuditError> for ProtocolError {
    fn from(e: AuditError) -> Self {
        match e {
            AuditError::Protocol(p) => p,
            other => ProtocolError::Invalid(other.to_string()),
        }
    }
}

impl From<crate::nn::NnError> for AuditError {
    fn from(e: crate::nn::NnError) -> Self {
        AuditError::Protocol(e.into())
    }
}

/// Samples needed to estimate a Bernoulli parameter within `epsilon` with
/// probability at least `1 − delta`: `⌈ln(2/δ) / (2ε²)⌉`.
pub fn hoeffding_samples(epsilon: f64, delta: f64) -> Result<u64, AuditError> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(AuditError::Domain(format!("epsilon {epsilon} and delta {delta} must lie in (0, 1)")));
    }
    Ok(((2.0 / delta).ln() / (2.0 * epsilon * epsilon)).ceil() as u64)
}

/// Consistency of an audit's public output with its parameters.
pub fn check_output(spec: &AuditSpec, out: &AuditOutput, t: &TrainingTranscript) -> Result<(), String> {
    match (spec, out) {
        (AuditSpec::HashWeights, AuditOutput::WeightsDigest { digest }) => {
            if *digest != t.final_weights.digest {
                return Err("digest differs from the final weight commitment".into());
            }
            Ok(())
        }
        (AuditSpec::Censorship { .. }, AuditOutput::Quantile { .. }) => censorship::check(spec, out, t),
        (AuditSpec::MeanItemScore { .. }, AuditOutput::MeanScore { .. }) => censorship::check_mean(spec, out),
        (AuditSpec::Copyright { .. }, AuditOutput::Copyright { .. }) => copyright::check(spec, out, t),
        (AuditSpec::Demographic { .. }, AuditOutput::Demographic { .. }) => demographic::check(spec, out, t),
        _ => Err("output kind does not match the audit".into()),
    }
}

/// Grid structures the verifier expects, re-derived from public data.
pub fn expected_structures(spec: &AuditSpec, t: &TrainingTranscript) -> Result<Vec<Structure>, ProtocolError> {
    match spec {
        AuditSpec::HashWeights => Ok(Vec::new()),
        AuditSpec::Censorship { .. } | AuditSpec::MeanItemScore { .. } => censorship::structures(spec, t),
        AuditSpec::Copyright { .. } => copyright::structures(spec, t),
        AuditSpec::Demographic { .. } => demographic::structures(spec, t),
    }
}

/// Synthesizes one structure per distinct chunk length.
fn chunked_structures<F>(n: usize, chunk: usize, mut synth: F) -> Result<Vec<Structure>, ProtocolError>
where
    F: FnMut(usize) -> Result<Structure, ProtocolError>,
{
    let mut out = Vec::new();
    let mut cache: Vec<(usize, Structure)> = Vec::new();
    let mut left = n;
    while left > 0 {
        let len = left.min(chunk);
        let s = match cache.iter().find(|(l, _)| *l == len) {
            Some((_, s)) => *s,
            None => {
                let s = synth(len)?;
                cache.push((len, s));
                s
            }
        };
        out.push(s);
        left -= len;
    }
    Ok(out)
}

/// Overwrites the first grid cell holding `from` with `to`.
#[cfg(test)]
pub(crate) fn tamper_value(c: &mut crate::air::Circuit, from: i128, to: i128) -> bool {
    let f = c.grid.field().clone();
    let target = f.from_i128(from);
    for col in 0..c.grid.cols() {
        for row in 0..c.grid.rows() {
            if c.grid.get_at(col, row) == Some(target) {
                let v = f.from_i128(to);
                c.grid.assign(crate::air::Cell::new(col, row), v).expect("cell in range");
                return true;
            }
        }
    }
    false
}
