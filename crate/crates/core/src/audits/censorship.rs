use rayon::prelude::*;

use super::{chunked_structures, hoeffding_samples, AuditError};
use crate::air::{Circuit, DEFAULT_COLS};
use crate::commit::{Digest, HashKind, RandomStream};
use crate::nn::{forward_on, load_params, CircuitBackend, Example, FxpBackend, Layer, ModelGraph, PlainBackend, Target, Weights};
use crate::protocol::{
    AuditContext, AuditFunction, AuditOutput, AuditRun, AuditSpec, MockBackend, ProtocolError, Structure,
    TrainingTranscript,
};

/// Scorings per audit grid.
pub const CHUNK: usize = 64;

const SAMPLE_LABEL: &str = "censorship-sample";

/// Positions drawn uniformly with replacement from `[0, population)`, using
/// the stream labeled `label` under `root`.
pub fn sample_positions(hash: HashKind, root: &Digest, label: &str, population: usize, n: usize) -> Vec<usize> {
    let mut s = RandomStream::labeled(hash, root, label);
    (0..n).map(|_| s.below(population as u64) as usize).collect()
}

/// Fraction of sampled scores at or below `item_score`.
pub fn quantile_estimate(scores: &[i64], item_score: i64, positions: &[usize]) -> f64 {
    let hits = positions.iter().filter(|&&p| scores[p] <= item_score).count();
    hits as f64 / positions.len().max(1) as f64
}

fn vocab_of(model: &ModelGraph, input: usize) -> Result<usize, AuditError> {
    if model.output_dim() != 1 {
        return Err(AuditError::Domain("scoring audits need a single-output model".into()));
    }
    model
        .layers
        .iter()
        .find_map(|l| match l {
            Layer::Embedding { vocab, input: i, .. } if *i == input => Some(*vocab),
            _ => None,
        })
        .ok_or_else(|| AuditError::Domain(format!("model has no embedding for id input {input}")))
}

fn pair(user: u32, item: u32) -> Example {
    Example { ids: vec![user, item], features: Vec::new(), target: Target::Values(vec![0]) }
}

/// Scores `(user, item)` and each `(user, c)`, returning the item score and
/// the count of candidates scoring at or below it.
fn score_and_count<B: FxpBackend>(
    be: &mut B,
    model: &ModelGraph,
    weights: &Weights,
    user: u32,
    item: u32,
    cands: &[u32],
) -> Result<(B::V, B::V), AuditError> {
    let params = load_params(be, weights)?;
    let s_item = forward_on(be, model, &params, &pair(user, item))?[0];
    let mut bits = Vec::with_capacity(cands.len());
    for &c in cands {
        let s = forward_on(be, model, &params, &pair(user, c))?[0];
        bits.push(be.le(s, s_item)?);
    }
    let count = be.sum(&bits)?;
    Ok((s_item, count))
}

fn sum_scores<B: FxpBackend>(
    be: &mut B,
    model: &ModelGraph,
    weights: &Weights,
    item: u32,
    users: &[u32],
) -> Result<B::V, AuditError> {
    let params = load_params(be, weights)?;
    let mut scores = Vec::with_capacity(users.len());
    for &u in users {
        scores.push(forward_on(be, model, &params, &pair(u, item))?[0]);
    }
    Ok(be.sum(&scores)?)
}

fn circuit_with<F>(t: &TrainingTranscript, f: F) -> Result<Circuit, AuditError>
where
    F: FnOnce(&mut CircuitBackend) -> Result<(), AuditError>,
{
    let mut be = CircuitBackend::new(t.header.spec, DEFAULT_COLS)?;
    f(&mut be)?;
    Ok(be.builder.finish().map_err(crate::nn::NnError::from)?)
}

/// Quantile of one item's score among sampled (or all) candidate items for
/// a given user.
#[derive(Clone, Debug, PartialEq)]
pub struct CensorshipAudit {
    pub user: u32,
    pub item: u32,
    pub epsilon: f64,
    pub delta: f64,
    pub population: Option<Vec<u32>>,
    pub exhaustive: bool,
}

impl CensorshipAudit {
    pub fn new(user: u32, item: u32, epsilon: f64, delta: f64) -> Self {
        Self { user, item, epsilon, delta, population: None, exhaustive: false }
    }

    /// Candidate items in scoring order.
    pub fn candidates(&self, t: &TrainingTranscript) -> Result<Vec<u32>, AuditError> {
        candidates(&self.spec(), t)
    }
}

fn candidates(spec: &AuditSpec, t: &TrainingTranscript) -> Result<Vec<u32>, AuditError> {
    let AuditSpec::Censorship { user, item, epsilon, delta, population, exhaustive } = spec else {
        unreachable!("censorship spec")
    };
    let vocab = vocab_of(&t.header.model, 1)?;
    if *user as usize >= vocab_of(&t.header.model, 0)? || *item as usize >= vocab {
        return Err(AuditError::Domain("user or item id outside the model's vocabulary".into()));
    }
    let pop: Vec<u32> = population.clone().unwrap_or_else(|| (0..vocab as u32).collect());
    if pop.is_empty() || pop.iter().any(|&p| p as usize >= vocab) {
        return Err(AuditError::Domain("population must be non-empty item ids".into()));
    }
    if *exhaustive {
        return Ok(pop);
    }
    let n = hoeffding_samples(*epsilon, *delta)? as usize;
    let pos = sample_positions(t.header.hash, &t.dataset.merkle_root, SAMPLE_LABEL, pop.len(), n);
    Ok(pos.into_iter().map(|p| pop[p]).collect())
}

impl AuditFunction for CensorshipAudit {
    fn spec(&self) -> AuditSpec {
        AuditSpec::Censorship {
            user: self.user,
            item: self.item,
            epsilon: self.epsilon,
            delta: self.delta,
            population: self.population.clone(),
            exhaustive: self.exhaustive,
        }
    }

    fn run(&self, ctx: &AuditContext<'_>) -> Result<AuditRun, ProtocolError> {
        let t = ctx.transcript;
        let model = &t.header.model;
        let cands = self.candidates(t)?;
        let mut plain = PlainBackend::new(t.header.spec);
        let (s_item, count) = score_and_count(&mut plain, model, ctx.weights, self.user, self.item, &cands)?;
        let circuits = cands
            .par_chunks(CHUNK)
            .map(|chunk| {
                circuit_with(t, |be| {
                    score_and_count(be, model, ctx.weights, self.user, self.item, chunk).map(|_| ())
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let samples = cands.len() as u64;
        Ok(AuditRun {
            output: AuditOutput::Quantile {
                item_score: s_item as i64,
                at_or_below: count as u64,
                samples,
                estimate: count as f64 / samples as f64,
            },
            circuits,
        })
    }
}

/// Mean predicted score of one item over users `0..users`; the metric
/// compared by counterfactual audits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeanItemScore {
    pub item: u32,
    pub users: usize,
}

impl AuditFunction for MeanItemScore {
    fn spec(&self) -> AuditSpec {
        AuditSpec::MeanItemScore { item: self.item, users: self.users }
    }

    fn run(&self, ctx: &AuditContext<'_>) -> Result<AuditRun, ProtocolError> {
        let t = ctx.transcript;
        let model = &t.header.model;
        check_mean_params(&self.spec(), t)?;
        let users: Vec<u32> = (0..self.users as u32).collect();
        let mut plain = PlainBackend::new(t.header.spec);
        let sum = sum_scores(&mut plain, model, ctx.weights, self.item, &users)?;
        let circuits = users
            .par_chunks(CHUNK)
            .map(|chunk| circuit_with(t, |be| sum_scores(be, model, ctx.weights, self.item, chunk).map(|_| ())))
            .collect::<Result<Vec<_>, _>>()?;
        let mean = crate::fxp::round_div(sum, self.users as i128).map_err(crate::nn::NnError::from)?;
        Ok(AuditRun {
            output: AuditOutput::MeanScore { sum_raw: sum as i64, count: self.users as u64, mean_raw: mean as i64 },
            circuits,
        })
    }
}

fn check_mean_params(spec: &AuditSpec, t: &TrainingTranscript) -> Result<(), AuditError> {
    let AuditSpec::MeanItemScore { item, users } = spec else { unreachable!("mean spec") };
    if *users == 0 || *users > vocab_of(&t.header.model, 0)? || *item as usize >= vocab_of(&t.header.model, 1)? {
        return Err(AuditError::Domain("users or item outside the model's vocabulary".into()));
    }
    Ok(())
}

pub(super) fn structures(spec: &AuditSpec, t: &TrainingTranscript) -> Result<Vec<Structure>, ProtocolError> {
    let zeros = Weights::zeros(&t.header.model, t.header.spec);
    let model = &t.header.model;
    let mock = MockBackend::new(t.header.hash);
    match spec {
        AuditSpec::Censorship { .. } => {
            let n = candidates(spec, t)?.len();
            chunked_structures(n, CHUNK, |len| {
                let c = circuit_with(t, |be| score_and_count(be, model, &zeros, 0, 0, &vec![0; len]).map(|_| ()))?;
                Ok(mock.structure(&c))
            })
        }
        AuditSpec::MeanItemScore { users, .. } => {
            check_mean_params(spec, t)?;
            chunked_structures(*users, CHUNK, |len| {
                let c = circuit_with(t, |be| sum_scores(be, model, &zeros, 0, &vec![0; len]).map(|_| ()))?;
                Ok(mock.structure(&c))
            })
        }
        _ => unreachable!("scoring audits only"),
    }
}

pub(super) fn check(spec: &AuditSpec, out: &AuditOutput, t: &TrainingTranscript) -> Result<(), String> {
    let AuditOutput::Quantile { at_or_below, samples, estimate, .. } = out else { unreachable!() };
    let expected = candidates(spec, t).map_err(|e| e.to_string())?.len() as u64;
    if *samples != expected {
        return Err(format!("{samples} samples, expected {expected}"));
    }
    if at_or_below > samples || *estimate != *at_or_below as f64 / *samples as f64 {
        return Err("estimate inconsistent with counts".into());
    }
    Ok(())
}

pub(super) fn check_mean(spec: &AuditSpec, out: &AuditOutput) -> Result<(), String> {
    let (AuditSpec::MeanItemScore { users, .. }, AuditOutput::MeanScore { sum_raw, count, mean_raw }) = (spec, out) else {
        unreachable!()
    };
    if *count != *users as u64 {
        return Err("user count differs from the audit parameters".into());
    }
    match crate::fxp::round_div(*sum_raw as i128, *count as i128) {
        Ok(m) if m == *mean_raw as i128 => Ok(()),
        _ => Err("mean inconsistent with sum".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_of_the_top_score_is_one() {
        let scores = vec![3, 9, 1, 9, 4];
        let all: Vec<usize> = (0..5).collect();
        assert_eq!(quantile_estimate(&scores, 9, &all), 1.0);
        assert_eq!(quantile_estimate(&scores, 3, &all), 0.4);
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let root = HashKind::Sha256.hash(0, &[b"r"]);
        let a = sample_positions(HashKind::Sha256, &root, "x", 7, 600);
        assert_eq!(a, sample_positions(HashKind::Sha256, &root, "x", 7, 600));
        assert!(a.iter().all(|&p| p < 7));
        assert_ne!(a, sample_positions(HashKind::Sha256, &root, "y", 7, 600));
    }
}
