mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::Value;

use zkaudit::audits::{
    counterfactual_audit, verify_counterfactual, CensorshipAudit, CopyrightAudit, CounterfactualReport,
    DemographicAudit, MeanItemScore,
};
use zkaudit::commit::HashKind;
use zkaudit::nn::{forward_fxp, Example, VectorFile, Weights};
use zkaudit::protocol::{
    zkaudit_i_prove, zkaudit_i_verify, AuditFunction, AuditOutput, AuditReport, HashWeights, MockBackend,
    ProtocolError, TrainingArtifacts,
};

use common::Tiny;

fn backend() -> MockBackend {
    MockBackend::new(HashKind::Sha256)
}

fn trained() -> (Tiny, TrainingArtifacts) {
    let tiny = Tiny::new(40, 2);
    let art = tiny.prove();
    (tiny, art)
}

fn scores(tiny: &Tiny, w: &Weights, user: u32) -> Vec<i64> {
    let pairs: Vec<Example> = (0..20).map(|i| Example::rating(user, i, 0)).collect();
    forward_fxp(&tiny.model, w, &pairs).unwrap().1.iter().map(|p| p[0]).collect()
}

fn features(seed: u64) -> VectorFile {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let data = (0..20 * 6).map(|_| rng.random_range(-8192..=8192)).collect();
    VectorFile { shape: vec![20, 6], scale_factor: 8192, data }
}

fn all_audits() -> Vec<(&'static str, Box<dyn AuditFunction>)> {
    let feats = features(4);
    let claimant = feats.rows()[7].to_vec();
    vec![
        ("hash", Box::new(HashWeights)),
        ("censor", Box::new(CensorshipAudit::new(2, 5, 0.05, 0.1))),
        ("mean", Box::new(MeanItemScore { item: 3, users: 20 })),
        ("copyright", Box::new(CopyrightAudit { features: feats, claimant, tau: 0.9, hash: HashKind::Sha256 })),
        (
            "demographic",
            Box::new(DemographicAudit { labels: (0..20).map(|i| i % 3).collect(), categories: 3, hash: HashKind::Sha256 }),
        ),
    ]
}

#[test]
fn every_audit_proves_verifies_and_round_trips() {
    let (_, art) = trained();
    let be = backend();
    for (name, f) in all_audits() {
        let report = zkaudit_i_prove(f.as_ref(), &art.final_weights, &art.transcript, &be).unwrap();
        zkaudit_i_verify(&report, &art.transcript, &be).unwrap_or_else(|r| panic!("{name}: {r}"));
        let text = report.to_canonical_string();
        let back = AuditReport::parse(&text).unwrap();
        assert_eq!(back, report, "{name}");
        assert_eq!(back.to_canonical_string(), text, "{name}");
    }
}

fn leaves(v: &Value, path: String, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| leaves(x, format!("{path}/{k}"), out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| leaves(x, format!("{path}/{i}"), out)),
        _ => out.push(path),
    }
}

#[test]
fn mutated_output_fields_are_rejected() {
    let (_, art) = trained();
    let be = backend();
    for (name, f) in all_audits() {
        let report = zkaudit_i_prove(f.as_ref(), &art.final_weights, &art.transcript, &be).unwrap();
        let base = serde_json::to_value(&report).unwrap();
        let mut paths = Vec::new();
        leaves(&base["output"], "/output".into(), &mut paths);
        leaves(&base["audit"], "/audit".into(), &mut paths);
        for p in paths.iter().filter(|p| !p.ends_with("/kind")) {
            let mut v = base.clone();
            let leaf = v.pointer_mut(p).unwrap();
            *leaf = match leaf.take() {
                Value::Bool(b) => Value::Bool(!b),
                Value::Number(n) if n.is_i64() => Value::from(n.as_i64().unwrap() + 1),
                Value::Number(n) => Value::from(n.as_f64().unwrap() + 0.125),
                Value::String(s) => Value::String(s.replacen(|c: char| c.is_ascii_hexdigit(), "f", 1).replacen("ff", "0f", 1)),
                Value::Null => Value::Array(vec![Value::from(0)]),
                other => other,
            };
            let rejected = match serde_json::from_value::<AuditReport>(v) {
                Err(_) => true,
                Ok(r) => r == report || zkaudit_i_verify(&r, &art.transcript, &be).is_err(),
            };
            assert!(rejected, "{name}: mutation at {p} accepted");
        }
    }
}

#[test]
fn reports_are_bound_to_their_transcript_and_weights() {
    let (tiny, art) = trained();
    let be = backend();
    let other = Tiny::new(40, 1).prove();
    let audit = MeanItemScore { item: 1, users: 20 };
    let report = zkaudit_i_prove(&audit, &art.final_weights, &art.transcript, &be).unwrap();
    assert_eq!(zkaudit_i_verify(&report, &other.transcript, &be).unwrap_err().code(), "transcript-mismatch");

    let mut raw = art.final_weights.raw();
    raw[0][0][0] += 1;
    let w = Weights::from_raw(&tiny.model, tiny.spec, raw).unwrap();
    assert!(matches!(
        zkaudit_i_prove(&audit, &w, &art.transcript, &be),
        Err(ProtocolError::WeightCommitmentMismatch)
    ));
}

#[test]
fn exhaustive_censorship_matches_the_true_quantile() {
    let (tiny, art) = trained();
    let mut audit = CensorshipAudit::new(4, 9, 0.05, 0.1);
    audit.exhaustive = true;
    let be = backend();
    let report = zkaudit_i_prove(&audit, &art.final_weights, &art.transcript, &be).unwrap();
    zkaudit_i_verify(&report, &art.transcript, &be).unwrap();
    let s = scores(&tiny, &art.final_weights, 4);
    let below = s.iter().filter(|&&x| x <= s[9]).count();
    match report.output {
        AuditOutput::Quantile { item_score, at_or_below, samples, estimate } => {
            assert_eq!(item_score, s[9]);
            assert_eq!((at_or_below, samples), (below as u64, 20));
            assert_eq!(estimate, below as f64 / 20.0);
        }
        o => panic!("unexpected output {o:?}"),
    }
}

#[test]
fn mean_score_agrees_with_plain_forward() {
    let (tiny, art) = trained();
    let report = zkaudit_i_prove(&MeanItemScore { item: 6, users: 20 }, &art.final_weights, &art.transcript, &backend())
        .unwrap();
    let per_user: Vec<i64> = (0..20).map(|u| scores(&tiny, &art.final_weights, u)[6]).collect();
    let sum: i64 = per_user.iter().sum();
    match report.output {
        AuditOutput::MeanScore { sum_raw, count, mean_raw } => {
            assert_eq!((sum_raw, count), (sum, 20));
            // half away from zero
            let expect = (sum.abs() * 2 + 20) / 40 * sum.signum();
            assert_eq!(mean_raw, expect);
        }
        o => panic!("unexpected output {o:?}"),
    }
}

#[test]
fn copyright_flags_the_claimants_own_item() {
    let (_, art) = trained();
    let feats = features(4);
    let claimant = feats.rows()[7].to_vec();
    let audit = CopyrightAudit { features: feats, claimant, tau: 0.9, hash: HashKind::Sha256 };
    let report = zkaudit_i_prove(&audit, &art.final_weights, &art.transcript, &backend()).unwrap();
    match report.output {
        AuditOutput::Copyright { flagged, pass, similarities_raw, .. } => {
            assert!(flagged[7] && !pass);
            assert!((similarities_raw[7] - 8192).abs() <= 2);
        }
        o => panic!("unexpected output {o:?}"),
    }
}

#[test]
fn counterfactual_detects_a_changed_dataset() {
    let a = Tiny::new(40, 2);
    let mut b = Tiny::new(40, 2);
    // B never sees item 3
    b.data.retain(|e| e.ids[1] != 3);
    assert!(b.data.len() < a.data.len());
    let metric = MeanItemScore { item: 3, users: 20 };
    let be = backend();
    let run = counterfactual_audit(&a.input(), &b.input(), &metric, &be).unwrap();
    assert_ne!(run.report.delta_raw, 0);
    verify_counterfactual(&run.report, &run.arm_a.transcript, &run.arm_b.transcript, &be).unwrap();

    let text = run.report.to_canonical_string();
    assert_eq!(CounterfactualReport::parse(&text).unwrap(), run.report);

    let mut bad = run.report.clone();
    bad.delta_raw += 1;
    assert!(verify_counterfactual(&bad, &run.arm_a.transcript, &run.arm_b.transcript, &be).is_err());
    // swapped transcripts
    assert_eq!(
        verify_counterfactual(&run.report, &run.arm_b.transcript, &run.arm_a.transcript, &be).unwrap_err().code(),
        "transcript-mismatch"
    );
}
