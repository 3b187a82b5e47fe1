//! Salted hash commitments, Merkle trees and the hash-driven randomness
//! stream used for traversal ordering and audit sampling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::nn::{Example, Weights};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommitError {
    #[error("merkle tree needs at least one leaf")]
    EmptyLeaves,
    #[error("bad hex digest: {0}")]
    BadHex(String),
    #[error("leaf index {index} out of range for {len} leaves")]
    LeafIndex { index: usize, len: usize },
}

/// One-byte domain-separation prefixes.
pub mod tag {
    pub const NODE: u8 = 0x01;
    pub const WEIGHTS: u8 = 0x02;
    pub const RANDOMNESS: u8 = 0x03;
    pub const EXAMPLE: u8 = 0x04;
    pub const GRID: u8 = 0x05;
    pub const CONSTRAINTS: u8 = 0x06;
    pub const PUBLIC: u8 = 0x07;
    pub const SALT: u8 = 0x08;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HashKind {
    #[default]
    Sha256,
    Blake3,
}

impl HashKind {
    pub fn name(self) -> &'static str {
        match self {
            HashKind::Sha256 => "sha256",
            HashKind::Blake3 => "blake3",
        }
    }

    pub fn hasher(self, tag: u8) -> Hasher {
        let mut h = match self {
            HashKind::Sha256 => Hasher::Sha256(Sha256::new()),
            HashKind::Blake3 => Hasher::Blake3(Box::new(blake3::Hasher::new())),
        };
        h.update(&[tag]);
        h
    }

    /// `H(tag ‖ parts[0] ‖ parts[1] ‖ …)`.
    pub fn hash(self, tag: u8, parts: &[&[u8]]) -> Digest {
        let mut h = self.hasher(tag);
        for p in parts {
            h.update(p);
        }
        h.finish()
    }
}

impl FromStr for HashKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sha256" => Ok(HashKind::Sha256),
            "blake3" => Ok(HashKind::Blake3),
            other => Err(format!("unknown hash {other:?}")),
        }
    }
}

/// Incremental hasher; also usable as an `io::Write` sink.
pub enum Hasher {
    Sha256(Sha256),
    Blake3(Box<blake3::Hasher>),
}

impl Hasher {
    pub fn update(&mut self, bytes: &[u8]) {
        match self {
            Hasher::Sha256(h) => h.update(bytes),
            Hasher::Blake3(h) => {
                h.update(bytes);
            }
        }
    }

    pub fn finish(self) -> Digest {
        match self {
            Hasher::Sha256(h) => Digest(h.finalize().into()),
            Hasher::Blake3(h) => Digest(*h.finalize().as_bytes()),
        }
    }
}

impl std::io::Write for Hasher {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.update(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, CommitError> {
        if s.len() != 64 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(CommitError::BadHex(s.to_string()));
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| CommitError::BadHex(s.to_string()))?;
        Ok(Digest(out))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

pub type Salt = [u8; 16];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SaltedCommitment {
    pub digest: Digest,
    pub salt: Salt,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommitmentRepr {
    digest: Digest,
    salt: String,
}

impl Serialize for SaltedCommitment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CommitmentRepr { digest: self.digest, salt: hex::encode(self.salt) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SaltedCommitment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = CommitmentRepr::deserialize(d)?;
        let mut salt = [0u8; 16];
        if r.salt.len() != 32 || r.salt.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(serde::de::Error::custom(format!("bad salt {:?}", r.salt)));
        }
        hex::decode_to_slice(&r.salt, &mut salt).map_err(serde::de::Error::custom)?;
        Ok(SaltedCommitment { digest: r.digest, salt })
    }
}

pub fn commit_example(kind: HashKind, ex: &Example, salt: Salt) -> SaltedCommitment {
    SaltedCommitment { digest: kind.hash(tag::EXAMPLE, &[&salt, &ex.canonical_bytes()]), salt }
}

pub fn commit_weights(kind: HashKind, weights: &Weights, salt: Salt) -> SaltedCommitment {
    SaltedCommitment { digest: kind.hash(tag::WEIGHTS, &[&salt, &weights.canonical_bytes()]), salt }
}

/// Recomputes `c` from the opened payload.
pub fn opens_example(kind: HashKind, c: &SaltedCommitment, ex: &Example) -> bool {
    commit_example(kind, ex, c.salt).digest == c.digest
}

pub fn opens_weights(kind: HashKind, c: &SaltedCommitment, w: &Weights) -> bool {
    commit_weights(kind, w, c.salt).digest == c.digest
}

/// Per-example salts expanded from one secret seed, so a run can be
/// replayed bit for bit.
pub fn derive_salts(kind: HashKind, seed: &[u8], n: usize) -> Vec<Salt> {
    (0..n as u64)
        .map(|i| {
            let d = kind.hash(tag::SALT, &[seed, &i.to_le_bytes()]);
            d.0[..16].try_into().expect("16 bytes")
        })
        .collect()
}

/// Binary Merkle tree over digests; odd levels pair the last node with
/// itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerkleTree {
    kind: HashKind,
    levels: Vec<Vec<Digest>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MerkleProof {
    pub index: usize,
    pub siblings: Vec<Digest>,
}

fn node(kind: HashKind, l: &Digest, r: &Digest) -> Digest {
    kind.hash(tag::NODE, &[&l.0, &r.0])
}

impl MerkleTree {
    pub fn build(kind: HashKind, leaves: &[Digest]) -> Result<Self, CommitError> {
        if leaves.is_empty() {
            return Err(CommitError::EmptyLeaves);
        }
        let mut levels = vec![leaves.to_vec()];
        loop {
            let cur = levels.last().expect("non-empty");
            // a single leaf still gets one hashing level
            if cur.len() == 1 && levels.len() > 1 {
                break;
            }
            let next = cur
                .chunks(2)
                .map(|pair| node(kind, &pair[0], pair.get(1).unwrap_or(&pair[0])))
                .collect();
            levels.push(next);
        }
        Ok(Self { kind, levels })
    }

    pub fn root(&self) -> Digest {
        self.levels.last().expect("non-empty")[0]
    }

    pub fn leaves(&self) -> &[Digest] {
        &self.levels[0]
    }

    pub fn proof(&self, index: usize) -> Result<MerkleProof, CommitError> {
        let len = self.levels[0].len();
        if index >= len {
            return Err(CommitError::LeafIndex { index, len });
        }
        let mut siblings = Vec::new();
        let mut i = index;
        for level in &self.levels[..self.levels.len() - 1] {
            let sib = i ^ 1;
            siblings.push(*level.get(sib).unwrap_or(&level[i]));
            i /= 2;
        }
        Ok(MerkleProof { index, siblings })
    }
}

pub fn verify_inclusion(kind: HashKind, root: &Digest, leaf: &Digest, proof: &MerkleProof) -> bool {
    let mut acc = *leaf;
    let mut i = proof.index;
    for sib in &proof.siblings {
        acc = if i % 2 == 0 { node(kind, &acc, sib) } else { node(kind, sib, &acc) };
        i /= 2;
    }
    i == 0 && acc == *root
}

/// `H(seed), H(H(seed)), …` read as a byte stream.
#[derive(Clone, Debug)]
pub struct RandomStream {
    kind: HashKind,
    block: Digest,
    pos: usize,
}

impl RandomStream {
    pub fn new(kind: HashKind, seed: &Digest) -> Self {
        Self { kind, block: kind.hash(tag::RANDOMNESS, &[&seed.0]), pos: 0 }
    }

    /// Independent stream for a named purpose.
    pub fn labeled(kind: HashKind, seed: &Digest, label: &str) -> Self {
        let sub = kind.hash(tag::RANDOMNESS, &[label.as_bytes(), &seed.0]);
        Self::new(kind, &sub)
    }

    pub fn next_u64(&mut self) -> u64 {
        if self.pos + 8 > 32 {
            self.block = self.kind.hash(tag::RANDOMNESS, &[&self.block.0]);
            self.pos = 0;
        }
        let v = u64::from_le_bytes(self.block.0[self.pos..self.pos + 8].try_into().expect("8 bytes"));
        self.pos += 8;
        v
    }

    /// Uniform in `[0, n)` by rejection sampling.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let zone = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    /// Fisher–Yates permutation of `[0, n)`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i as u64 + 1) as usize;
            p.swap(i, j);
        }
        p
    }

    /// `k` distinct indices from `[0, n)` (all of them when `k ≥ n`), in
    /// sampled order.
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        let k = k.min(n);
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            p.swap(i, j);
        }
        p.truncate(k);
        p
    }
}

/// One permutation of `[0, n)` per epoch, from the stream seeded by `root`.
pub fn derive_traversal(kind: HashKind, root: &Digest, n: usize, epochs: usize) -> Vec<Vec<usize>> {
    let mut s = RandomStream::new(kind, root);
    (0..epochs).map(|_| s.permutation(n)).collect()
}

/// Sorts commitments by digest bytes, returning the permutation applied
/// (`order[k]` = original index now at position `k`).
pub fn sort_commitments(cs: &[SaltedCommitment]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cs.len()).collect();
    order.sort_by(|&a, &b| cs[a].digest.cmp(&cs[b].digest).then(a.cmp(&b)));
    order
}
