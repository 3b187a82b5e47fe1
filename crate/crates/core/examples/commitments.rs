//! Salted commitments, the Merkle tree over a dataset, inclusion proofs and
//! the traversal order derived from the root.
//!
//!     cargo run --example commitments

use zkaudit::commit::{commit_example, derive_salts, opens_example, verify_inclusion, HashKind, MerkleTree};
use zkaudit::fxp::FxpSpec;
use zkaudit::nn::{ratings_to_examples, synthetic_ratings};
use zkaudit::protocol::commit_dataset;

fn main() -> anyhow::Result<()> {
    let spec = FxpSpec::recommender();
    let data = ratings_to_examples(&synthetic_ratings(10, 10, 12, 1), &spec)?;
    let hash = HashKind::Sha256;
    let seed = b"example-salt-seed-0123";

    // One example: commit, open, fail to open with a different rating.
    let salt = derive_salts(hash, seed, 1)[0];
    let c = commit_example(hash, &data[0], salt);
    println!("commitment to example 0: {}", c.digest.to_hex());
    let mut other = data[0].clone();
    other.ids[1] += 1;
    println!("opens with the original: {}", opens_example(hash, &c, &data[0]));
    println!("opens with another item: {}", opens_example(hash, &c, &other));

    // The whole dataset.
    let committed = commit_dataset(&data, hash, seed, 2)?;
    let leaves = &committed.section.commitments;
    let tree = MerkleTree::build(hash, leaves)?;
    println!("\n{} leaves, root {}", leaves.len(), tree.root().to_hex());

    let proof = tree.proof(5)?;
    println!("leaf 5 has {} siblings; verifies: {}", proof.siblings.len(), verify_inclusion(hash, &tree.root(), &leaves[5], &proof));
    println!("same proof for leaf 6 verifies: {}", verify_inclusion(hash, &tree.root(), &leaves[6], &proof));

    for (e, order) in committed.orderings.iter().enumerate() {
        println!("epoch {e} traversal: {order:?}");
    }

    // BLAKE3 gives a different tree over the same data.
    let b3 = commit_dataset(&data, HashKind::Blake3, seed, 1)?;
    println!("\nblake3 root {}", b3.section.merkle_root.to_hex());
    Ok(())
}
