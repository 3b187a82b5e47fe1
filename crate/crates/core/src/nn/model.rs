use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::NnError;
use crate::fxp::{FxpSpec, FxpTensor};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Layer {
    /// Looks up row `ids[input]` of a `vocab x dim` table.
    Embedding { vocab: usize, dim: usize, input: usize },
    /// Passes the example's dense feature vector through.
    Features { dim: usize },
    /// Joins every head output, in order, into one vector.
    Concat,
    Dense { inputs: usize, outputs: usize, bias: bool },
    Relu6,
    Softmax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mse,
    CrossEntropy,
}

/// A feed-forward network: one or more heads (embeddings or raw features),
/// an optional concatenation, then a chain of dense/activation layers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelGraph {
    pub layers: Vec<Layer>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frozen: Vec<bool>,
    pub loss: Loss,
}

impl ModelGraph {
    pub fn new(layers: Vec<Layer>, loss: Loss) -> Result<Self, NnError> {
        let m = Self { layers, frozen: Vec::new(), loss };
        m.validate()?;
        Ok(m)
    }

    /// The desk recommender: user and item embeddings, concatenated, then
    /// `Dense(2·dim → hidden) → ReLU6 → Dense(hidden → 1)` under MSE.
    pub fn recommender(users: usize, items: usize, dim: usize, hidden: usize) -> Self {
        Self::new(
            vec![
                Layer::Embedding { vocab: users, dim, input: 0 },
                Layer::Embedding { vocab: items, dim, input: 1 },
                Layer::Concat,
                Layer::Dense { inputs: 2 * dim, outputs: hidden, bias: true },
                Layer::Relu6,
                Layer::Dense { inputs: hidden, outputs: 1, bias: true },
            ],
            Loss::Mse,
        )
        .expect("recommender topology is valid")
    }

    /// Plain MLP classifier `features → hidden → classes` with softmax.
    pub fn classifier(features: usize, hidden: usize, classes: usize) -> Self {
        Self::new(
            vec![
                Layer::Features { dim: features },
                Layer::Dense { inputs: features, outputs: hidden, bias: true },
                Layer::Relu6,
                Layer::Dense { inputs: hidden, outputs: classes, bias: true },
                Layer::Softmax,
            ],
            Loss::CrossEntropy,
        )
        .expect("classifier topology is valid")
    }

    pub fn with_frozen(mut self, frozen: Vec<bool>) -> Result<Self, NnError> {
        self.frozen = frozen;
        self.validate()?;
        Ok(self)
    }

    pub fn is_frozen(&self, layer: usize) -> bool {
        self.frozen.get(layer).copied().unwrap_or(false)
    }

    /// Index of the first non-head layer.
    pub fn body_start(&self) -> usize {
        self.layers
            .iter()
            .position(|l| !matches!(l, Layer::Embedding { .. } | Layer::Features { .. }))
            .unwrap_or(self.layers.len())
    }

    pub fn id_inputs(&self) -> usize {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::Embedding { input, .. } => Some(input + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn feature_dim(&self) -> usize {
        self.layers
            .iter()
            .find_map(|l| match l {
                Layer::Features { dim } => Some(*dim),
                _ => None,
            })
            .unwrap_or(0)
    }

    pub fn output_dim(&self) -> usize {
        self.validate().expect("validated on construction")
    }

    /// Checks that shapes compose; returns the output dimension.
    pub fn validate(&self) -> Result<usize, NnError> {
        let bad = |m: String| Err(NnError::Model(m));
        if !self.frozen.is_empty() && self.frozen.len() != self.layers.len() {
            return bad(format!("{} frozen flags for {} layers", self.frozen.len(), self.layers.len()));
        }
        let start = self.body_start();
        if start == 0 {
            return bad("model needs at least one embedding or feature head".into());
        }
        let mut dim = 0;
        let mut features = 0;
        for l in &self.layers[..start] {
            match l {
                Layer::Embedding { vocab, dim: d, .. } => {
                    if *vocab == 0 || *d == 0 {
                        return bad("embedding with zero size".into());
                    }
                    dim += d;
                }
                Layer::Features { dim: d } => {
                    features += 1;
                    dim += d;
                }
                _ => unreachable!(),
            }
        }
        if features > 1 {
            return bad("at most one feature head".into());
        }
        let mut body = &self.layers[start..];
        if start > 1 {
            if body.first() != Some(&Layer::Concat) {
                return bad("several heads must be followed by concat".into());
            }
            body = &body[1..];
        } else if body.first() == Some(&Layer::Concat) {
            body = &body[1..];
        }
        for (i, l) in body.iter().enumerate() {
            match l {
                Layer::Dense { inputs, outputs, .. } => {
                    if *inputs != dim {
                        return bad(format!("dense expects {inputs} inputs, got {dim}"));
                    }
                    if *outputs == 0 {
                        return bad("dense with zero outputs".into());
                    }
                    dim = *outputs;
                }
                Layer::Relu6 => {}
                Layer::Softmax => {
                    if i + 1 != body.len() {
                        return bad("softmax must be the last layer".into());
                    }
                }
                Layer::Concat | Layer::Embedding { .. } | Layer::Features { .. } => {
                    return bad("heads and concat must precede the body".into());
                }
            }
        }
        let ends_softmax = body.last() == Some(&Layer::Softmax);
        match self.loss {
            Loss::CrossEntropy if !ends_softmax => bad("cross-entropy needs a final softmax".into()),
            Loss::Mse if ends_softmax => bad("mse after softmax is not supported".into()),
            _ => Ok(dim),
        }
    }

    /// Parameter tensor shapes per layer.
    pub fn param_shapes(&self) -> Vec<Vec<Vec<usize>>> {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Embedding { vocab, dim, .. } => vec![vec![*vocab, *dim]],
                Layer::Dense { inputs, outputs, bias } => {
                    let mut v = vec![vec![*outputs, *inputs]];
                    if *bias {
                        v.push(vec![*outputs]);
                    }
                    v
                }
                _ => Vec::new(),
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes().iter().flatten().map(|s| s.iter().product::<usize>()).sum()
    }

    /// Fan-in used for initialization of each layer's parameters.
    fn fan_in(&self, layer: usize) -> usize {
        match &self.layers[layer] {
            Layer::Embedding { dim, .. } => *dim,
            Layer::Dense { inputs, .. } => *inputs,
            _ => 1,
        }
    }
}

/// Fixed-point parameters, one list of tensors per layer (empty for
/// parameter-free layers). Dense layers hold `[W (out x in), b (out)]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weights {
    pub spec: FxpSpec,
    pub layers: Vec<Vec<FxpTensor>>,
}

impl Weights {
    /// Uniform `[−1/√fan_in, 1/√fan_in]` draws from a seeded ChaCha stream,
    /// quantized at the spec's scale.
    pub fn init(model: &ModelGraph, spec: FxpSpec, seed: u64) -> Result<Self, NnError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for (i, shapes) in model.param_shapes().into_iter().enumerate() {
            let bound = 1.0 / (model.fan_in(i) as f64).sqrt();
            let mut tensors = Vec::new();
            for shape in shapes {
                let n: usize = shape.iter().product();
                let vals: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
                tensors.push(FxpTensor::from_f64(shape, &vals, spec)?);
            }
            layers.push(tensors);
        }
        Ok(Self { spec, layers })
    }

    pub fn from_raw(model: &ModelGraph, spec: FxpSpec, raw: Vec<Vec<Vec<i64>>>) -> Result<Self, NnError> {
        let shapes = model.param_shapes();
        if raw.len() != shapes.len() {
            return Err(NnError::Shape(format!("{} layers of weights for {} layers", raw.len(), shapes.len())));
        }
        let mut layers = Vec::new();
        for (data, shape) in raw.into_iter().zip(shapes) {
            if data.len() != shape.len() {
                return Err(NnError::Shape("parameter tensor count mismatch".into()));
            }
            let mut ts = Vec::new();
            for (d, s) in data.into_iter().zip(shape) {
                ts.push(FxpTensor::new(s, d, spec)?);
            }
            layers.push(ts);
        }
        Ok(Self { spec, layers })
    }

    pub fn zeros(model: &ModelGraph, spec: FxpSpec) -> Self {
        let layers = model
            .param_shapes()
            .into_iter()
            .map(|shapes| shapes.into_iter().map(|s| FxpTensor::zeros(s, spec)).collect())
            .collect();
        Self { spec, layers }
    }

    pub fn raw(&self) -> Vec<Vec<Vec<i64>>> {
        self.layers.iter().map(|ts| ts.iter().map(|t| t.data().to_vec()).collect()).collect()
    }

    pub fn to_f64(&self) -> Vec<Vec<Vec<f64>>> {
        self.layers.iter().map(|ts| ts.iter().map(|t| t.to_f64()).collect()).collect()
    }

    /// Canonical byte encoding: layer order, tensor order, row-major raw
    /// values as little-endian `i64`, each tensor prefixed by its shape.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.spec.scale_factor.to_le_bytes());
        out.extend_from_slice(&self.spec.range_bits.to_le_bytes());
        out.extend_from_slice(&self.spec.field_modulus.to_le_bytes(self.spec.field_modulus.neg(self.spec.field_modulus.one())));
        out.extend_from_slice(&(self.layers.len() as u64).to_le_bytes());
        for ts in &self.layers {
            out.extend_from_slice(&(ts.len() as u64).to_le_bytes());
            for t in ts {
                out.extend_from_slice(&(t.shape().len() as u64).to_le_bytes());
                for d in t.shape() {
                    out.extend_from_slice(&(*d as u64).to_le_bytes());
                }
                for v in t.data() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recommender_shapes() {
        let m = ModelGraph::recommender(200, 150, 8, 16);
        assert_eq!(m.output_dim(), 1);
        assert_eq!(m.param_count(), 200 * 8 + 150 * 8 + 16 * 16 + 16 + 16 + 1);
        assert_eq!(m.id_inputs(), 2);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ModelGraph::new(vec![Layer::Features { dim: 3 }, Layer::Dense { inputs: 4, outputs: 1, bias: false }], Loss::Mse).is_err());
        assert!(ModelGraph::new(vec![Layer::Features { dim: 3 }, Layer::Softmax], Loss::Mse).is_err());
        assert!(ModelGraph::new(vec![Layer::Features { dim: 3 }], Loss::CrossEntropy).is_err());
        assert!(ModelGraph::new(
            vec![
                Layer::Embedding { vocab: 4, dim: 2, input: 0 },
                Layer::Embedding { vocab: 4, dim: 2, input: 1 },
                Layer::Dense { inputs: 4, outputs: 1, bias: false }
            ],
            Loss::Mse
        )
        .is_err());
        assert!(ModelGraph::classifier(4, 8, 3).with_frozen(vec![true]).is_err());
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let m = ModelGraph::classifier(4, 8, 3);
        let s = FxpSpec::classifier();
        let a = Weights::init(&m, s, 7).unwrap();
        let b = Weights::init(&m, s, 7).unwrap();
        let c = Weights::init(&m, s, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let bound = (s.sf() as f64 / 2.0).ceil() as i64;
        assert!(a.layers[1][0].data().iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn model_json_round_trip() {
        let m = ModelGraph::recommender(10, 10, 4, 8);
        let s = serde_json::to_string(&m).unwrap();
        let back: ModelGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}
