//! Trains twice, once without half of one item's ratings, proves both runs
//! and the change in that item's mean predicted score.
//!
//!     cargo run --release --example counterfactual_audit

use zkaudit::air::DEFAULT_COLS;
use zkaudit::audits::{counterfactual_audit, verify_counterfactual, MeanItemScore};
use zkaudit::cli::drop_ratings;
use zkaudit::commit::HashKind;
use zkaudit::fxp::FxpSpec;
use zkaudit::nn::{ratings_to_examples, synthetic_ratings, Example, ModelGraph, TrainConfig};
use zkaudit::protocol::{MockBackend, TrainingInput};

fn input<'a>(data: &'a [Example], model: &'a ModelGraph, config: &'a TrainConfig) -> TrainingInput<'a> {
    TrainingInput {
        dataset: data,
        model,
        spec: FxpSpec::recommender(),
        config,
        hash: HashKind::Sha256,
        columns: DEFAULT_COLS,
        salt_seed: b"example-salt-seed-0123",
    }
}

fn main() -> anyhow::Result<()> {
    let spec = FxpSpec::recommender();
    let ratings = synthetic_ratings(30, 30, 150, 9);
    // the most-rated item
    let item = (0..30u32).max_by_key(|&i| ratings.iter().filter(|r| r.item_id == i).count()).unwrap();
    let kept = drop_ratings(&ratings, item, 0.5)?;
    println!("item {item}: {} ratings in A, {} in B", ratings.len(), kept.len());

    let (a, b) = (ratings_to_examples(&ratings, &spec)?, ratings_to_examples(&kept, &spec)?);
    let model = ModelGraph::recommender(30, 30, 8, 16);
    let config = TrainConfig { learning_rate: 0.01, batch_size: 8, epochs: 3, init_seed: 1 };
    let be = MockBackend::new(HashKind::Sha256);
    let metric = MeanItemScore { item, users: 30 };

    let run = counterfactual_audit(&input(&a, &model, &config), &input(&b, &model, &config), &metric, &be)?;
    let r = &run.report;
    println!("mean score A {:.5}", spec.dequantize(r.arm_a.metric_raw));
    println!("mean score B {:.5}", spec.dequantize(r.arm_b.metric_raw));
    println!("delta        {:+.5} (raw {})", spec.dequantize(r.delta_raw), r.delta_raw);
    println!("verify: {:?}", verify_counterfactual(r, &run.arm_a.transcript, &run.arm_b.transcript, &be));
    Ok(())
}
