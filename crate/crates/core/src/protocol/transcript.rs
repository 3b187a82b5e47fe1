use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backend::{MockBackend, ProofBackend, PublicDigest, StepProof, Structure};
use super::{ProtocolError, RejectReason};
use crate::commit::{
    commit_example, commit_weights, derive_salts, derive_traversal, opens_weights, sort_commitments, tag, Digest,
    HashKind, MerkleTree, SaltedCommitment,
};
use crate::fxp::FxpSpec;
use crate::nn::{
    batches_from_orderings, emit_step_witness, placeholder_batch, train_fxp, Example, ModelGraph, NnError, TrainConfig,
    Weights,
};

pub const FORMAT_VERSION: u32 = 1;
pub const TRAVERSAL_RULE: &str = "fisher-yates/hash-chain";
const FORMAT: &str = "zkaudit-training";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptHeader {
    pub format: String,
    pub version: u32,
    pub backend: String,
    pub hash: HashKind,
    pub spec: FxpSpec,
    pub model: ModelGraph,
    pub config: TrainConfig,
    pub eta_raw: i64,
    pub columns: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// Example commitment digests in ascending byte order.
    pub commitments: Vec<Digest>,
    pub merkle_root: Digest,
    pub traversal: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub index: usize,
    pub epoch: usize,
    /// Positions in the sorted commitment list.
    pub batch: Vec<usize>,
    pub pre: SaltedCommitment,
    pub post: SaltedCommitment,
    pub proof: StepProof,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingTranscript {
    pub header: TranscriptHeader,
    pub dataset: DatasetSection,
    pub steps: Vec<StepRecord>,
    pub final_weights: SaltedCommitment,
}

impl TrainingTranscript {
    /// Canonical bytes: pretty JSON in schema order with a trailing newline.
    pub fn to_canonical_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("transcript serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(e.to_string()))
    }

    pub fn digest(&self) -> Digest {
        self.header.hash.hash(tag::PUBLIC, &[b"transcript", self.to_canonical_string().as_bytes()])
    }
}

/// Everything the trainer feeds into a proof of training.
pub struct TrainingInput<'a> {
    pub dataset: &'a [Example],
    pub model: &'a ModelGraph,
    pub spec: FxpSpec,
    pub config: &'a TrainConfig,
    pub hash: HashKind,
    pub columns: usize,
    /// Secret seed from which example and weight salts are expanded.
    pub salt_seed: &'a [u8],
}

/// A transcript plus the private material the trainer keeps.
pub struct TrainingArtifacts {
    pub transcript: TrainingTranscript,
    pub final_weights: Weights,
    /// Dataset in committed (sorted) order.
    pub sorted_dataset: Vec<Example>,
    /// `sorted_order[k]` is the input index of committed position `k`.
    pub sorted_order: Vec<usize>,
}

fn salts(hash: HashKind, seed: &[u8], label: &[u8], n: usize) -> Vec<crate::commit::Salt> {
    let mut s = seed.to_vec();
    s.extend_from_slice(label);
    derive_salts(hash, &s, n)
}

/// Digest of the header; every step statement includes it so no header
/// field can change without invalidating the proofs.
fn header_digest(h: &TranscriptHeader) -> Digest {
    let json = serde_json::to_vec(h).expect("header serializes");
    h.hash.hash(tag::PUBLIC, &[b"header", &json])
}

fn step_public(
    hash: HashKind,
    header: &Digest,
    rec_index: usize,
    epoch: usize,
    leaves: &[Digest],
    pre: &SaltedCommitment,
    post: &SaltedCommitment,
) -> PublicDigest {
    let mut h = hash.hasher(tag::PUBLIC);
    h.update(b"step");
    h.update(&(rec_index as u64).to_le_bytes());
    h.update(&(epoch as u64).to_le_bytes());
    h.update(&header.0);
    h.update(&(leaves.len() as u64).to_le_bytes());
    for l in leaves {
        h.update(&l.0);
    }
    for c in [pre, post] {
        h.update(&c.digest.0);
        h.update(&c.salt);
    }
    h.finish()
}

/// Structure of an SGD-step grid for a batch of `batch` examples, derived
/// from public information only.
pub fn step_structure(header: &TranscriptHeader, batch: usize) -> Result<Structure, ProtocolError> {
    let zeros = Weights::zeros(&header.model, header.spec);
    let sw = emit_step_witness(&header.model, &zeros, &placeholder_batch(&header.model, batch), header.eta_raw, header.columns)?;
    Ok(MockBackend::new(header.hash).structure(&sw.circuit))
}

/// Public dataset commitments and the traversal they determine.
pub struct DatasetCommitment {
    pub section: DatasetSection,
    /// `sorted_order[k]` is the input index of committed position `k`.
    pub sorted_order: Vec<usize>,
    /// One permutation of committed positions per epoch.
    pub orderings: Vec<Vec<usize>>,
}

/// Salts and commits every example, sorts the commitments, builds the
/// Merkle tree and derives the per-epoch traversal from its root.
pub fn commit_dataset(
    dataset: &[Example],
    hash: HashKind,
    salt_seed: &[u8],
    epochs: usize,
) -> Result<DatasetCommitment, ProtocolError> {
    let example_salts = salts(hash, salt_seed, b"examples", dataset.len());
    let commits: Vec<SaltedCommitment> =
        dataset.par_iter().zip(&example_salts).map(|(ex, s)| commit_example(hash, ex, *s)).collect();
    let sorted_order = sort_commitments(&commits);
    let leaves: Vec<Digest> = sorted_order.iter().map(|&i| commits[i].digest).collect();
    let root = MerkleTree::build(hash, &leaves)?.root();
    let orderings = derive_traversal(hash, &root, dataset.len(), epochs);
    Ok(DatasetCommitment {
        section: DatasetSection { commitments: leaves, merkle_root: root, traversal: TRAVERSAL_RULE.into() },
        sorted_order,
        orderings,
    })
}

pub fn zkaudit_t_prove(input: &TrainingInput<'_>, backend: &dyn ProofBackend) -> Result<TrainingArtifacts, ProtocolError> {
    let TrainingInput { dataset, model, spec, config, hash, columns, salt_seed } = *input;
    if dataset.is_empty() {
        return Err(ProtocolError::Invalid("dataset is empty".into()));
    }
    if config.epochs == 0 {
        return Err(ProtocolError::Invalid("epochs must be at least 1".into()));
    }
    spec.validate().map_err(NnError::from)?;
    let eta_raw = config.eta_raw(&spec)?;

    let DatasetCommitment { section, sorted_order, orderings } = commit_dataset(dataset, hash, salt_seed, config.epochs)?;
    let leaves = &section.commitments;
    let sorted_dataset: Vec<Example> = sorted_order.iter().map(|&i| dataset[i].clone()).collect();

    let run = train_fxp(model, spec, &sorted_dataset, config, &orderings).map_err(|e| match e {
        NnError::Step { step, source } => ProtocolError::Step { step, source: Box::new(ProtocolError::Nn(*source)) },
        e => e.into(),
    })?;
    let steps_per_epoch = config.steps_per_epoch(dataset.len());
    let weight_salts = salts(hash, salt_seed, b"weights", run.batches.len() + 1);
    let mut weights = vec![&run.initial];
    weights.extend(run.trajectory.iter());
    let wcommits: Vec<SaltedCommitment> =
        weights.par_iter().zip(&weight_salts).map(|(w, s)| commit_weights(hash, w, *s)).collect();

    let header = TranscriptHeader {
        format: FORMAT.into(),
        version: FORMAT_VERSION,
        backend: backend.name().into(),
        hash,
        spec,
        model: model.clone(),
        config: config.clone(),
        eta_raw,
        columns,
    };
    let hd = header_digest(&header);
    let steps = run
        .batches
        .par_iter()
        .enumerate()
        .map(|(t, idx)| {
            let batch: Vec<Example> = idx.iter().map(|&i| sorted_dataset[i].clone()).collect();
            let prove = || -> Result<StepRecord, ProtocolError> {
                let sw = emit_step_witness(model, weights[t], &batch, eta_raw, columns)?;
                if sw.weights != *weights[t + 1] {
                    return Err(ProtocolError::Unsatisfied("witness disagrees with the integer trainer".into()));
                }
                let epoch = t / steps_per_epoch;
                let batch_leaves: Vec<Digest> = idx.iter().map(|&i| leaves[i]).collect();
                let public = step_public(hash, &hd, t, epoch, &batch_leaves, &wcommits[t], &wcommits[t + 1]);
                let proof = backend.prove_step(&sw.circuit, &public)?;
                Ok(StepRecord { index: t, epoch, batch: idx.clone(), pre: wcommits[t], post: wcommits[t + 1], proof })
            };
            prove().map_err(|e| ProtocolError::Step { step: t, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let transcript = TrainingTranscript {
        header,
        dataset: section,
        steps,
        final_weights: *wcommits.last().expect("at least the initial commitment"),
    };
    Ok(TrainingArtifacts { final_weights: run.final_weights().clone(), transcript, sorted_dataset, sorted_order })
}

fn check_header(h: &TranscriptHeader, backend: &dyn ProofBackend) -> Result<(), RejectReason> {
    let bad = |m: &str| Err(RejectReason::Header(m.to_string()));
    if h.format != FORMAT {
        return bad("unknown format");
    }
    if h.version != FORMAT_VERSION {
        return Err(RejectReason::Version);
    }
    if h.backend != backend.name() {
        return bad("backend mismatch");
    }
    if h.spec.validate().is_err() {
        return bad("invalid fixed-point spec");
    }
    if h.model.validate().is_err() {
        return bad("invalid model");
    }
    if h.config.epochs == 0 {
        return bad("zero epochs");
    }
    match h.config.eta_raw(&h.spec) {
        Ok(eta) if eta == h.eta_raw => {}
        _ => return bad("learning rate does not quantize to eta_raw"),
    }
    if h.columns < 4 {
        return bad("too few columns");
    }
    Ok(())
}

/// Accepts iff every check passes; otherwise names the first failure.
pub fn zkaudit_t_verify(t: &TrainingTranscript, backend: &dyn ProofBackend) -> Result<(), RejectReason> {
    let h = &t.header;
    check_header(h, backend)?;
    let hash = h.hash;
    let ds = &t.dataset;
    if ds.traversal != TRAVERSAL_RULE {
        return Err(RejectReason::Header("unknown traversal rule".into()));
    }
    let n = ds.commitments.len();
    if n == 0 {
        return Err(RejectReason::Malformed("no dataset commitments".into()));
    }
    if !ds.commitments.windows(2).all(|w| w[0] < w[1]) {
        return Err(RejectReason::Ordering);
    }
    let root = MerkleTree::build(hash, &ds.commitments).map_err(|e| RejectReason::Malformed(e.to_string()))?.root();
    if root != ds.merkle_root {
        return Err(RejectReason::MerkleRoot);
    }
    let orderings = derive_traversal(hash, &root, n, h.config.epochs);
    let batches = batches_from_orderings(&orderings, h.config.batch_size);
    if t.steps.len() != batches.len() {
        return Err(RejectReason::StepCount);
    }
    let per_epoch = h.config.steps_per_epoch(n);
    for (i, (s, b)) in t.steps.iter().zip(&batches).enumerate() {
        if s.index != i || s.epoch != i / per_epoch || s.batch != *b {
            return Err(RejectReason::Traversal { step: i });
        }
    }

    let initial = Weights::init(&h.model, h.spec, h.config.init_seed).map_err(|e| RejectReason::Header(e.to_string()))?;
    let first = t.steps.first().map(|s| &s.pre).unwrap_or(&t.final_weights);
    if !opens_weights(hash, first, &initial) {
        return Err(RejectReason::InitialCommitment);
    }
    for (i, w) in t.steps.windows(2).enumerate() {
        if w[0].post != w[1].pre {
            return Err(RejectReason::Chain { step: i + 1 });
        }
    }
    if let Some(last) = t.steps.last() {
        if last.post != t.final_weights {
            return Err(RejectReason::FinalCommitment);
        }
    }

    let mut sizes: Vec<usize> = batches.iter().map(Vec::len).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let structures: BTreeMap<usize, Structure> = sizes
        .into_iter()
        .map(|b| step_structure(h, b).map(|s| (b, s)))
        .collect::<Result<_, _>>()
        .map_err(|e| RejectReason::Header(e.to_string()))?;

    let hd = header_digest(h);
    let failures: Vec<(usize, RejectReason)> = t
        .steps
        .par_iter()
        .filter_map(|s| {
            let leaves: Vec<Digest> = s.batch.iter().map(|&i| ds.commitments[i]).collect();
            let public = step_public(hash, &hd, s.index, s.epoch, &leaves, &s.pre, &s.post);
            backend.verify_step(&s.proof, &structures[&s.batch.len()], &public).err().map(|r| (s.index, r))
        })
        .collect();
    if let Some((step, reason)) = failures.into_iter().min_by_key(|(i, _)| *i) {
        return Err(RejectReason::AtStep { step, reason: Box::new(reason) });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ratings_to_examples, synthetic_ratings};

    fn small() -> (Vec<Example>, ModelGraph, FxpSpec, TrainConfig) {
        let spec = FxpSpec::recommender();
        let data = ratings_to_examples(&synthetic_ratings(5, 5, 8, 1), &spec).unwrap();
        let model = ModelGraph::recommender(5, 5, 2, 3);
        let cfg = TrainConfig { learning_rate: 0.05, batch_size: 4, epochs: 2, init_seed: 9 };
        (data, model, spec, cfg)
    }

    fn prove(data: &[Example], model: &ModelGraph, spec: FxpSpec, cfg: &TrainConfig) -> TrainingArtifacts {
        let input = TrainingInput {
            dataset: data,
            model,
            spec,
            config: cfg,
            hash: HashKind::Sha256,
            columns: 18,
            salt_seed: b"seed",
        };
        zkaudit_t_prove(&input, &MockBackend::new(HashKind::Sha256)).unwrap()
    }

    #[test]
    fn round_trip_and_step_count() {
        let (data, model, spec, cfg) = small();
        let a = prove(&data, &model, spec, &cfg);
        assert_eq!(a.transcript.steps.len(), 4);
        let be = MockBackend::new(HashKind::Sha256);
        zkaudit_t_verify(&a.transcript, &be).unwrap();
        let text = a.transcript.to_canonical_string();
        let back = TrainingTranscript::parse(&text).unwrap();
        assert_eq!(back.to_canonical_string(), text);
        assert_eq!(prove(&data, &model, spec, &cfg).transcript.to_canonical_string(), text);
        assert!(opens_weights(HashKind::Sha256, &a.transcript.final_weights, &a.final_weights));
    }

    #[test]
    fn tampering_is_rejected() {
        let (data, model, spec, cfg) = small();
        let t = prove(&data, &model, spec, &cfg).transcript;
        let be = MockBackend::new(HashKind::Sha256);

        let mut bad = t.clone();
        bad.steps[1].proof.grid.0[3] ^= 1;
        let r = zkaudit_t_verify(&bad, &be).unwrap_err();
        assert_eq!(r.code(), "step-proof-mismatch");

        let mut bad = t.clone();
        bad.dataset.commitments.swap(0, 1);
        assert_eq!(zkaudit_t_verify(&bad, &be).unwrap_err(), RejectReason::Ordering);

        let mut bad = t.clone();
        bad.final_weights.salt[0] ^= 1;
        assert_eq!(zkaudit_t_verify(&bad, &be).unwrap_err(), RejectReason::FinalCommitment);

        let mut bad = t.clone();
        bad.header.config.learning_rate = 0.06;
        assert_eq!(zkaudit_t_verify(&bad, &be).unwrap_err().code(), "header");
    }

    #[test]
    fn batch_larger_than_dataset_is_one_step_per_epoch() {
        let (data, model, spec, mut cfg) = small();
        cfg.batch_size = 100;
        let t = prove(&data, &model, spec, &cfg).transcript;
        assert_eq!(t.steps.len(), 2);
        zkaudit_t_verify(&t, &MockBackend::new(HashKind::Sha256)).unwrap();
    }
}
