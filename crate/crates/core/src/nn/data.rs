use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Zipf};
use serde::{Deserialize, Serialize};

use super::NnError;
use crate::fxp::FxpSpec;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Regression targets, raw at the model scale.
    Values(Vec<i64>),
    Class(u32),
}

/// One training example with integer ids for embedding heads, a raw feature
/// vector for a feature head, and its target.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Example {
    pub ids: Vec<u32>,
    pub features: Vec<i64>,
    pub target: Target,
}

impl Example {
    pub fn rating(user: u32, item: u32, raw: i64) -> Self {
        Self { ids: vec![user, item], features: Vec::new(), target: Target::Values(vec![raw]) }
    }

    /// Length-prefixed little-endian encoding used for commitments.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 4 * self.ids.len() + 8 * self.features.len());
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        for id in &self.ids {
            out.extend_from_slice(&id.to_le_bytes());
        }
        out.extend_from_slice(&(self.features.len() as u64).to_le_bytes());
        for f in &self.features {
            out.extend_from_slice(&f.to_le_bytes());
        }
        match &self.target {
            Target::Values(v) => {
                out.push(0);
                out.extend_from_slice(&(v.len() as u64).to_le_bytes());
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Target::Class(c) => {
                out.push(1);
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub user_id: u32,
    pub item_id: u32,
    pub rating: f64,
}

pub fn read_ratings_csv(path: &Path) -> Result<Vec<Rating>, NnError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let r: Rating = rec.map_err(|e| csv_error(path, e))?;
        if !r.rating.is_finite() {
            return Err(NnError::Data(format!("{}: non-finite rating", path.display())));
        }
        out.push(r);
    }
    if out.is_empty() {
        return Err(NnError::Data(format!("{}: no ratings", path.display())));
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> NnError {
    if let csv::ErrorKind::Io(io) = e.kind() {
        return NnError::Io(format!("{}: {io}", path.display()));
    }
    NnError::Data(format!("{}: {e}", path.display()))
}

pub fn write_ratings_csv(path: &Path, ratings: &[Rating]) -> Result<(), NnError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in ratings {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| NnError::Io(e.to_string()))?;
    Ok(())
}

pub fn ratings_to_examples(ratings: &[Rating], spec: &FxpSpec) -> Result<Vec<Example>, NnError> {
    ratings
        .iter()
        .map(|r| Ok(Example::rating(r.user_id, r.item_id, spec.quantize_raw(r.rating)?)))
        .collect()
}

const ZIPF_S: f64 = 1.0;
const UB_SCALE: f64 = 0.6;
const IB_SCALE: f64 = 0.8;
const LATENT: f64 = 0.8;

/// Ratings from a low-rank latent model with user/item offsets and noise,
/// on a 1–5 scale rounded to two decimals. Users and items are drawn with
/// Zipf-skewed popularity so that a small sample still repeats ids.
pub fn synthetic_ratings(users: usize, items: usize, count: usize, seed: u64) -> Vec<Rating> {
    let rank = 3;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let factors = |n: usize, rng: &mut ChaCha20Rng| -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..rank).map(|_| normal.sample(rng) / (rank as f64).sqrt()).collect()).collect()
    };
    let u = factors(users, &mut rng);
    let v = factors(items, &mut rng);
    let ub: Vec<f64> = (0..users).map(|_| UB_SCALE * normal.sample(&mut rng)).collect();
    let ib: Vec<f64> = (0..items).map(|_| IB_SCALE * normal.sample(&mut rng)).collect();
    let zu = Zipf::new(users as f64, ZIPF_S).expect("valid zipf");
    let zi = Zipf::new(items as f64, ZIPF_S).expect("valid zipf");
    (0..count)
        .map(|_| {
            let user = zu.sample(&mut rng) as usize - 1;
            let item = zi.sample(&mut rng) as usize - 1;
            let dot: f64 = u[user].iter().zip(&v[item]).map(|(a, b)| a * b).sum();
            let noise = 0.25 * normal.sample(&mut rng);
            let r = (3.0 + LATENT * dot + ub[user] + ib[item] + noise).clamp(1.0, 5.0);
            Rating { user_id: user as u32, item_id: item as u32, rating: (r * 100.0).round() / 100.0 }
        })
        .collect()
}

/// Deterministic train/test split: a seeded shuffle, the last
/// `test_fraction` going to test.
pub fn train_test_split<T: Clone>(items: &[T], test_fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let n_test = ((items.len() as f64) * test_fraction).round() as usize;
    let cut = items.len() - n_test.min(items.len());
    let train = idx[..cut].iter().map(|&i| items[i].clone()).collect();
    let test = idx[cut..].iter().map(|&i| items[i].clone()).collect();
    (train, test)
}

const VEC_MAGIC: &[u8; 8] = b"ZKAVEC01";

/// A fixed-point tensor file: magic `ZKAVEC01`, `u32` rank, `u64` dims,
/// `u64` scale factor, then row-major little-endian `i64` raw values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorFile {
    pub shape: Vec<usize>,
    pub scale_factor: u64,
    pub data: Vec<i64>,
}

impl VectorFile {
    pub fn rows(&self) -> Vec<&[i64]> {
        let width = self.shape.last().copied().unwrap_or(1).max(1);
        self.data.chunks(width).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * self.shape.len() + 8 * self.data.len());
        out.extend_from_slice(VEC_MAGIC);
        out.extend_from_slice(&(self.shape.len() as u32).to_le_bytes());
        for d in &self.shape {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.scale_factor.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NnError> {
        let bad = |m: &str| NnError::Data(format!("vector file: {m}"));
        let mut r = bytes;
        let mut take = |n: usize| -> Result<&[u8], NnError> {
            if r.len() < n {
                return Err(bad("truncated"));
            }
            let (h, t) = r.split_at(n);
            r = t;
            Ok(h)
        };
        if take(8)? != VEC_MAGIC {
            return Err(bad("bad magic"));
        }
        let rank = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes")) as usize;
        if rank > 8 {
            return Err(bad("rank too large"));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u64::from_le_bytes(take(8)?.try_into().expect("8 bytes")) as usize);
        }
        let scale_factor = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| bad("shape overflow"))?;
        let body = take(n.checked_mul(8).ok_or_else(|| bad("shape overflow"))?)?;
        let data = body.chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        if !r.is_empty() {
            return Err(bad("trailing bytes"));
        }
        Ok(Self { shape, scale_factor, data })
    }

    pub fn read(path: &Path) -> Result<Self, NnError> {
        let mut bytes = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| NnError::Io(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes).map_err(|e| NnError::Data(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<(), NnError> {
        fs::File::create(path)
            .and_then(|mut f| f.write_all(&self.to_bytes()))
            .map_err(|e| NnError::Io(format!("{}: {e}", path.display())))
    }
}

/// Reads a single vector file, or every regular file of a directory in
/// file-name order stacked row-wise (all must share width and scale).
pub fn read_vectors(path: &Path) -> Result<VectorFile, NnError> {
    let meta = fs::metadata(path).map_err(|e| NnError::Io(format!("{}: {e}", path.display())))?;
    if !meta.is_dir() {
        return VectorFile::read(path);
    }
    let mut entries: Vec<_> = fs::read_dir(path)
        .map_err(|e| NnError::Io(format!("{}: {e}", path.display())))?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .map(|e| e.path())
        .collect();
    entries.sort();
    let mut out: Option<VectorFile> = None;
    for p in entries {
        let v = VectorFile::read(&p)?;
        let width = v.shape.last().copied().unwrap_or(0);
        match &mut out {
            None => {
                let rows = v.data.len() / width.max(1);
                out = Some(VectorFile { shape: vec![rows, width], scale_factor: v.scale_factor, data: v.data });
            }
            Some(acc) => {
                if acc.shape[1] != width || acc.scale_factor != v.scale_factor {
                    return Err(NnError::Data(format!("{}: width or scale differs", p.display())));
                }
                acc.shape[0] += v.data.len() / width.max(1);
                acc.data.extend(v.data);
            }
        }
    }
    out.ok_or_else(|| NnError::Data(format!("{}: no vector files", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_file_round_trip_and_rejects_garbage() {
        let v = VectorFile { shape: vec![2, 3], scale_factor: 1 << 13, data: vec![1, -2, 3, 4, 5, -6] };
        let b = v.to_bytes();
        assert_eq!(VectorFile::from_bytes(&b).unwrap(), v);
        assert!(VectorFile::from_bytes(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(VectorFile::from_bytes(&bad).is_err());
        assert_eq!(v.rows()[1], &[4, 5, -6]);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let rs = synthetic_ratings(10, 10, 20, 1);
        write_ratings_csv(&p, &rs).unwrap();
        assert_eq!(read_ratings_csv(&p).unwrap(), rs);
        assert!(matches!(read_ratings_csv(&dir.path().join("missing.csv")), Err(NnError::Io(_))));
    }

    #[test]
    fn synthetic_is_seeded() {
        assert_eq!(synthetic_ratings(5, 5, 10, 3), synthetic_ratings(5, 5, 10, 3));
        assert!(synthetic_ratings(5, 5, 100, 3).iter().all(|r| (1.0..=5.0).contains(&r.rating)));
    }

    #[test]
    fn split_partitions() {
        let xs: Vec<u32> = (0..100).collect();
        let (a, b) = train_test_split(&xs, 0.2, 9);
        assert_eq!((a.len(), b.len()), (80, 20));
        let mut all: Vec<_> = a.into_iter().chain(b).collect();
        all.sort();
        assert_eq!(all, xs);
    }
}
