//! Estimates where one item ranks among all items for a user, sampling the
//! comparison set from the transcript's Merkle root, and proves the
//! scoring.
//!
//!     cargo run --release --example censorship_audit

use zkaudit::air::DEFAULT_COLS;
use zkaudit::audits::{hoeffding_samples, CensorshipAudit};
use zkaudit::commit::HashKind;
use zkaudit::fxp::FxpSpec;
use zkaudit::nn::{ratings_to_examples, synthetic_ratings, ModelGraph, TrainConfig};
use zkaudit::protocol::{zkaudit_i_prove, zkaudit_i_verify, zkaudit_t_prove, AuditOutput, MockBackend, TrainingInput};

fn main() -> anyhow::Result<()> {
    for (eps, delta) in [(0.05, 0.1), (0.01, 0.1)] {
        println!("epsilon {eps}, delta {delta}: {} samples", hoeffding_samples(eps, delta)?);
    }

    let spec = FxpSpec::recommender();
    let data = ratings_to_examples(&synthetic_ratings(40, 40, 160, 5), &spec)?;
    let model = ModelGraph::recommender(40, 40, 8, 16);
    let config = TrainConfig { learning_rate: 0.01, batch_size: 8, epochs: 2, init_seed: 1 };
    let be = MockBackend::new(HashKind::Sha256);
    let art = zkaudit_t_prove(
        &TrainingInput {
            dataset: &data,
            model: &model,
            spec,
            config: &config,
            hash: HashKind::Sha256,
            columns: DEFAULT_COLS,
            salt_seed: b"example-salt-seed-0123",
        },
        &be,
    )?;

    for exhaustive in [false, true] {
        let mut audit = CensorshipAudit::new(3, 17, 0.05, 0.1);
        audit.exhaustive = exhaustive;
        let report = zkaudit_i_prove(&audit, &art.final_weights, &art.transcript, &be)?;
        let AuditOutput::Quantile { item_score, at_or_below, samples, estimate } = report.output else {
            unreachable!()
        };
        println!(
            "\n{}: item 17 scores {:.4} for user 3",
            if exhaustive { "exhaustive" } else { "sampled" },
            spec.dequantize(item_score)
        );
        println!("  {at_or_below} of {samples} compared items score at or below it, quantile {estimate:.3}");
        println!("  {} proof grids, verify: {:?}", report.proofs.len(), zkaudit_i_verify(&report, &art.transcript, &be));
    }
    Ok(())
}
