#![allow(dead_code)]

use zkaudit::commit::HashKind;
use zkaudit::fxp::FxpSpec;
use zkaudit::nn::{ratings_to_examples, synthetic_ratings, Example, ModelGraph, TrainConfig};
use zkaudit::protocol::{zkaudit_t_prove, MockBackend, TrainingArtifacts, TrainingInput};

pub const SALT_SEED: &[u8] = b"integration-test-salt-seed";

/// A small recommender and dataset that proves in well under a second.
pub struct Tiny {
    pub model: ModelGraph,
    pub spec: FxpSpec,
    pub config: TrainConfig,
    pub data: Vec<Example>,
}

impl Tiny {
    pub fn new(ratings: usize, epochs: usize) -> Self {
        let spec = FxpSpec::recommender();
        let data = ratings_to_examples(&synthetic_ratings(20, 20, ratings, 11), &spec).unwrap();
        Self {
            model: ModelGraph::recommender(20, 20, 4, 8),
            spec,
            config: TrainConfig { learning_rate: 0.01, batch_size: 4, epochs, init_seed: 5 },
            data,
        }
    }

    pub fn input(&self) -> TrainingInput<'_> {
        TrainingInput {
            dataset: &self.data,
            model: &self.model,
            spec: self.spec,
            config: &self.config,
            hash: HashKind::Sha256,
            columns: zkaudit::air::DEFAULT_COLS,
            salt_seed: SALT_SEED,
        }
    }

    pub fn prove(&self) -> TrainingArtifacts {
        zkaudit_t_prove(&self.input(), &MockBackend::new(HashKind::Sha256)).unwrap()
    }
}
