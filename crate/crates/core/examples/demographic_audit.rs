//! Counts how the catalog splits across label categories, with every count
//! and proportion constrained in the circuit.
//!
//!     cargo run --release --example demographic_audit

use zkaudit::air::DEFAULT_COLS;
use zkaudit::audits::DemographicAudit;
use zkaudit::commit::HashKind;
use zkaudit::fxp::FxpSpec;
use zkaudit::nn::{ratings_to_examples, synthetic_ratings, ModelGraph, TrainConfig};
use zkaudit::protocol::{zkaudit_i_prove, zkaudit_i_verify, zkaudit_t_prove, AuditOutput, MockBackend, TrainingInput};

fn main() -> anyhow::Result<()> {
    let spec = FxpSpec::recommender();
    let data = ratings_to_examples(&synthetic_ratings(20, 30, 80, 4), &spec)?;
    let model = ModelGraph::recommender(20, 30, 4, 8);
    let config = TrainConfig { learning_rate: 0.01, batch_size: 8, epochs: 1, init_seed: 1 };
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

    // Creator region of each of the 30 items.
    let regions = ["north", "south", "east", "west"];
    let labels: Vec<u32> = (0..30).map(|i| [0, 0, 1, 2, 0, 3][i % 6]).collect();
    let audit = DemographicAudit { labels, categories: regions.len(), hash: HashKind::Sha256 };
    let report = zkaudit_i_prove(&audit, &art.final_weights, &art.transcript, &be)?;
    if let AuditOutput::Demographic { counts, proportions_raw } = &report.output {
        for (name, (c, p)) in regions.iter().zip(counts.iter().zip(proportions_raw)) {
            println!("{name:>6}: {c:>2} items, {:.4}", spec.dequantize(*p));
        }
    }
    println!("verify: {:?}", zkaudit_i_verify(&report, &art.transcript, &be));
    Ok(())
}
