use serde::{Deserialize, Serialize};

use super::{AuditError, MeanItemScore};
use crate::commit::Digest;
use crate::protocol::{
    zkaudit_i_prove, zkaudit_i_verify, zkaudit_t_prove, zkaudit_t_verify, AuditOutput, AuditReport, AuditSpec,
    ProofBackend, ProtocolError, RejectReason, TrainingArtifacts, TrainingInput, TrainingTranscript, FORMAT_VERSION,
};

const FORMAT: &str = "zkaudit-counterfactual";

/// One arm's proven metric evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmMetric {
    pub transcript: Digest,
    pub metric_raw: i64,
    pub report: AuditReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterfactualReport {
    pub format: String,
    pub version: u32,
    pub metric: AuditSpec,
    pub arm_a: ArmMetric,
    pub arm_b: ArmMetric,
    /// `metric(B) − metric(A)` in raw fixed-point units.
    pub delta_raw: i64,
}

impl CounterfactualReport {
    pub fn to_canonical_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(e.to_string()))
    }
}

/// Both arms' training artifacts alongside the report.
pub struct CounterfactualRun {
    pub report: CounterfactualReport,
    pub arm_a: TrainingArtifacts,
    pub arm_b: TrainingArtifacts,
}

fn metric_of(report: &AuditReport) -> Result<i64, String> {
    match report.output {
        AuditOutput::MeanScore { mean_raw, .. } => Ok(mean_raw),
        _ => Err("arm report does not carry a mean score".into()),
    }
}

fn run_arm(
    input: &TrainingInput<'_>,
    metric: &MeanItemScore,
    backend: &dyn ProofBackend,
) -> Result<(TrainingArtifacts, ArmMetric), ProtocolError> {
    let art = zkaudit_t_prove(input, backend)?;
    let report = zkaudit_i_prove(metric, &art.final_weights, &art.transcript, backend)?;
    let metric_raw = metric_of(&report).map_err(ProtocolError::Invalid)?;
    let arm = ArmMetric { transcript: art.transcript.digest(), metric_raw, report };
    Ok((art, arm))
}

/// Trains and proves both configurations concurrently, then proves the
/// metric on each final model.
pub fn counterfactual_audit(
    a: &TrainingInput<'_>,
    b: &TrainingInput<'_>,
    metric: &MeanItemScore,
    backend: &dyn ProofBackend,
) -> Result<CounterfactualRun, AuditError> {
    let (ra, rb) = rayon::join(|| run_arm(a, metric, backend), || run_arm(b, metric, backend));
    let (art_a, arm_a) = ra.map_err(|e| AuditError::Arm { arm: 'A', source: Box::new(e) })?;
    let (art_b, arm_b) = rb.map_err(|e| AuditError::Arm { arm: 'B', source: Box::new(e) })?;
    let report = CounterfactualReport {
        format: FORMAT.into(),
        version: FORMAT_VERSION,
        metric: AuditSpec::MeanItemScore { item: metric.item, users: metric.users },
        delta_raw: arm_b.metric_raw - arm_a.metric_raw,
        arm_a,
        arm_b,
    };
    Ok(CounterfactualRun { report, arm_a: art_a, arm_b: art_b })
}

/// Verifies both training transcripts, both metric reports and the delta.
pub fn verify_counterfactual(
    report: &CounterfactualReport,
    t_a: &TrainingTranscript,
    t_b: &TrainingTranscript,
    backend: &dyn ProofBackend,
) -> Result<(), RejectReason> {
    if report.format != FORMAT {
        return Err(RejectReason::Header("unknown format".into()));
    }
    if report.version != FORMAT_VERSION {
        return Err(RejectReason::Version);
    }
    if !matches!(report.metric, AuditSpec::MeanItemScore { .. }) {
        return Err(RejectReason::AuditOutput("unsupported counterfactual metric".into()));
    }
    for (arm, t) in [(&report.arm_a, t_a), (&report.arm_b, t_b)] {
        if arm.transcript != t.digest() {
            return Err(RejectReason::TranscriptMismatch);
        }
        if arm.report.audit != report.metric {
            return Err(RejectReason::AuditOutput("arm audits a different metric".into()));
        }
        if metric_of(&arm.report).map_err(RejectReason::AuditOutput)? != arm.metric_raw {
            return Err(RejectReason::AuditOutput("arm metric differs from its report".into()));
        }
        zkaudit_t_verify(t, backend)?;
        zkaudit_i_verify(&arm.report, t, backend)?;
    }
    if report.arm_b.metric_raw.checked_sub(report.arm_a.metric_raw) != Some(report.delta_raw) {
        return Err(RejectReason::AuditOutput("delta is not metric(B) − metric(A)".into()));
    }
    Ok(())
}
