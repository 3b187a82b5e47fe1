//! Trains a small recommender, proves every SGD step, writes the transcript,
//! verifies it, then shows the verifier catching edits.
//!
//!     cargo run --release --example prove_and_verify [out.zka.json]

use std::time::Instant;

use zkaudit::air::DEFAULT_COLS;
use zkaudit::commit::HashKind;
use zkaudit::fxp::FxpSpec;
use zkaudit::nn::{ratings_to_examples, synthetic_ratings, ModelGraph, TrainConfig};
use zkaudit::protocol::{zkaudit_t_prove, zkaudit_t_verify, MockBackend, TrainingInput, TrainingTranscript};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| {
        std::env::temp_dir().join("zkaudit-example.zka.json").display().to_string()
    });
    let spec = FxpSpec::recommender();
    let data = ratings_to_examples(&synthetic_ratings(50, 50, 200, 2), &spec)?;
    let model = ModelGraph::recommender(50, 50, 8, 16);
    let config = TrainConfig { learning_rate: 0.01, batch_size: 8, epochs: 2, init_seed: 1 };
    let backend = MockBackend::new(HashKind::Sha256);
    let input = TrainingInput {
        dataset: &data,
        model: &model,
        spec,
        config: &config,
        hash: HashKind::Sha256,
        columns: DEFAULT_COLS,
        salt_seed: b"example-salt-seed-0123",
    };

    let t = Instant::now();
    let art = zkaudit_t_prove(&input, &backend)?;
    println!("proved {} steps in {:.2?}", art.transcript.steps.len(), t.elapsed());
    let text = art.transcript.to_canonical_string();
    std::fs::write(&out, &text)?;
    println!("wrote {out} ({} bytes)", text.len());

    let t = Instant::now();
    let parsed = TrainingTranscript::parse(&std::fs::read_to_string(&out)?)?;
    match zkaudit_t_verify(&parsed, &backend) {
        Ok(()) => println!("verify: ACCEPT in {:.2?}", t.elapsed()),
        Err(r) => println!("verify: REJECT {r}"),
    }

    let mut bad = parsed.clone();
    bad.steps.swap(3, 4);
    println!("two steps swapped: {}", zkaudit_t_verify(&bad, &backend).unwrap_err());

    let mut bad = parsed.clone();
    bad.header.config.learning_rate = 0.02;
    println!("learning rate edited: {}", zkaudit_t_verify(&bad, &backend).unwrap_err());

    let mut bad = parsed;
    bad.final_weights.salt[0] ^= 1;
    println!("final commitment edited: {}", zkaudit_t_verify(&bad, &backend).unwrap_err());
    Ok(())
}
