//! Compares every item's feature vector to a claimant's by cosine
//! similarity inside the circuit and flags those at or above a threshold.
//!
//!     cargo run --release --example copyright_audit

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use zkaudit::air::DEFAULT_COLS;
use zkaudit::audits::{write_copyright_csv, CopyrightAudit};
use zkaudit::commit::HashKind;
use zkaudit::fxp::FxpSpec;
use zkaudit::nn::{ratings_to_examples, synthetic_ratings, ModelGraph, TrainConfig, VectorFile};
use zkaudit::protocol::{zkaudit_i_prove, zkaudit_i_verify, zkaudit_t_prove, AuditOutput, MockBackend, TrainingInput};

fn main() -> anyhow::Result<()> {
    let spec = FxpSpec::recommender();
    let (items, dim) = (24, 8);
    let data = ratings_to_examples(&synthetic_ratings(24, items, 96, 3), &spec)?;
    let model = ModelGraph::recommender(24, items, 4, 8);
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

    // Random item features; item 4 is a lightly perturbed copy of the
    // claimant's work.
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let claimant: Vec<i64> = (0..dim).map(|_| rng.random_range(-8192..8192)).collect();
    let mut features: Vec<i64> = (0..items * dim).map(|_| rng.random_range(-8192..8192)).collect();
    for d in 0..dim {
        features[4 * dim + d] = claimant[d] + rng.random_range(-400..400);
    }
    let audit = CopyrightAudit {
        features: VectorFile { shape: vec![items, dim], scale_factor: spec.scale_factor, data: features },
        claimant,
        tau: 0.9,
        hash: HashKind::Sha256,
    };
    let report = zkaudit_i_prove(&audit, &art.final_weights, &art.transcript, &be)?;
    if let AuditOutput::Copyright { similarities_raw, flagged, pass, .. } = &report.output {
        for (i, (s, f)) in similarities_raw.iter().zip(flagged).enumerate().filter(|(_, (_, f))| **f) {
            println!("item {i}: similarity {:.4}, flagged {f}", spec.dequantize(*s));
        }
        println!("{} of {items} items flagged, pass = {pass}", flagged.iter().filter(|f| **f).count());
    }
    println!("verify: {:?}", zkaudit_i_verify(&report, &art.transcript, &be));

    let csv = std::env::temp_dir().join("zkaudit-copyright.csv");
    write_copyright_csv(&csv, &report.output, &spec)?;
    println!("verdicts written to {}", csv.display());
    Ok(())
}
