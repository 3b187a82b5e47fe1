//! Trains the same recommender in fixed point at several scale factors and
//! in floating point, all from one shared traversal, and compares test MSE.
//!
//!     cargo run --release --example training_parity

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use zkaudit::fxp::FxpSpec;
use zkaudit::nn::float::mse_f64;
use zkaudit::nn::{mse_fxp, ratings_to_examples, synthetic_ratings, train_float, train_fxp, train_test_split, ModelGraph, TrainConfig};

fn main() -> anyhow::Result<()> {
    let ratings = synthetic_ratings(200, 200, 1000, 7);
    let (train, test) = train_test_split(&ratings, 0.2, 7);
    let model = ModelGraph::recommender(200, 200, 8, 16);
    let config = TrainConfig { learning_rate: 0.01, batch_size: 8, epochs: 5, init_seed: 3 };

    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let orderings: Vec<Vec<usize>> = (0..config.epochs)
        .map(|_| {
            let mut p: Vec<usize> = (0..train.len()).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();

    println!("{} train / {} test ratings, {} parameters", train.len(), test.len(), model.param_count());
    println!("  SF       fixed    float");
    for sf_log2 in [6u32, 8, 10, 13, 15] {
        let spec = FxpSpec::pow2(sf_log2, 20)?;
        let tr = ratings_to_examples(&train, &spec)?;
        let te = ratings_to_examples(&test, &spec)?;
        let run = train_fxp(&model, spec, &tr, &config, &orderings)?;
        let float = train_float(&model, spec, &tr, &config, &orderings)?;
        println!(
            "2^{sf_log2:<2}  {:>9.5} {:>8.5}",
            mse_fxp(&model, run.final_weights(), &te)?,
            mse_f64(&model, &float.params, &te, &spec)?
        );
    }
    Ok(())
}
