//! `f64` reference trainer with the same topology, initialization and batch
//! order as the fixed-point path.

use super::data::{Example, Target};
use super::model::{Layer, Loss, ModelGraph, Weights};
use super::train::{batches_from_orderings, TrainConfig};
use super::NnError;
use crate::fxp::FxpSpec;

pub type Params = Vec<Vec<Vec<f64>>>;

#[derive(Clone, Debug)]
pub struct FloatRun {
    pub initial: Params,
    pub params: Params,
    /// Mean training loss of each step's batch, measured before the update.
    pub step_losses: Vec<f64>,
}

struct Trace {
    heads: Vec<Vec<f64>>,
    body_inputs: Vec<Vec<f64>>,
    output: Vec<f64>,
}

fn example_inputs(ex: &Example, spec: &FxpSpec) -> (Vec<f64>, Vec<f64>) {
    let sf = spec.sf() as f64;
    let feats = ex.features.iter().map(|&f| f as f64 / sf).collect();
    let target = match &ex.target {
        Target::Values(t) => t.iter().map(|&v| v as f64 / sf).collect(),
        Target::Class(_) => Vec::new(),
    };
    (feats, target)
}

fn forward_trace(model: &ModelGraph, p: &Params, ex: &Example, spec: &FxpSpec) -> Result<Trace, NnError> {
    let start = model.body_start();
    let (feats, _) = example_inputs(ex, spec);
    let mut heads = Vec::new();
    for (l, layer) in model.layers[..start].iter().enumerate() {
        match layer {
            Layer::Embedding { vocab, dim, input } => {
                let id = *ex.ids.get(*input).ok_or_else(|| NnError::Data(format!("example lacks id input {input}")))?
                    as usize;
                if id >= *vocab {
                    return Err(NnError::Data(format!("index {id} outside vocabulary of {vocab}")));
                }
                heads.push(p[l][0][id * dim..(id + 1) * dim].to_vec());
            }
            Layer::Features { .. } => heads.push(feats.clone()),
            _ => unreachable!(),
        }
    }
    let mut x: Vec<f64> = heads.iter().flatten().copied().collect();
    let mut body_inputs = Vec::new();
    for (l, layer) in model.layers.iter().enumerate().skip(start) {
        body_inputs.push(x.clone());
        x = match layer {
            Layer::Concat => x,
            Layer::Dense { inputs, outputs, bias } => (0..*outputs)
                .map(|o| {
                    let z: f64 = p[l][0][o * inputs..(o + 1) * inputs].iter().zip(&x).map(|(w, v)| w * v).sum();
                    if *bias {
                        z + p[l][1][o]
                    } else {
                        z
                    }
                })
                .collect(),
            Layer::Relu6 => x.iter().map(|v| v.clamp(0.0, 6.0)).collect(),
            Layer::Softmax => {
                let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
                let s: f64 = e.iter().sum();
                e.iter().map(|v| v / s).collect()
            }
            Layer::Embedding { .. } | Layer::Features { .. } => unreachable!(),
        };
    }
    Ok(Trace { heads, body_inputs, output: x })
}

/// Model output in real units.
pub fn forward_f64(model: &ModelGraph, p: &Params, ex: &Example, spec: &FxpSpec) -> Result<Vec<f64>, NnError> {
    Ok(forward_trace(model, p, ex, spec)?.output)
}

/// Mean batch loss: squared error summed over outputs, or cross-entropy.
pub fn loss_f64(model: &ModelGraph, p: &Params, batch: &[Example], spec: &FxpSpec) -> Result<f64, NnError> {
    let mut total = 0.0;
    for ex in batch {
        let out = forward_f64(model, p, ex, spec)?;
        total += example_loss(model, &out, ex, spec)?;
    }
    Ok(total / batch.len().max(1) as f64)
}

fn example_loss(model: &ModelGraph, out: &[f64], ex: &Example, spec: &FxpSpec) -> Result<f64, NnError> {
    match (model.loss, &ex.target) {
        (Loss::Mse, Target::Values(_)) => {
            let (_, t) = example_inputs(ex, spec);
            Ok(out.iter().zip(&t).map(|(y, t)| (y - t) * (y - t)).sum())
        }
        (Loss::CrossEntropy, Target::Class(c)) => {
            let pc = out.get(*c as usize).ok_or_else(|| NnError::Data(format!("class {c} out of range")))?;
            Ok(-pc.max(1e-300).ln())
        }
        _ => Err(NnError::Data("target kind does not match the loss".into())),
    }
}

/// `−∇L` of [`loss_f64`] for every parameter (zeros for frozen layers).
pub fn gradients_f64(model: &ModelGraph, p: &Params, batch: &[Example], spec: &FxpSpec) -> Result<Params, NnError> {
    let bsz = batch.len().max(1) as f64;
    let start = model.body_start();
    let mut g: Params = p.iter().map(|ts| ts.iter().map(|t| vec![0.0; t.len()]).collect()).collect();
    for ex in batch {
        let tr = forward_trace(model, p, ex, spec)?;
        let mut delta: Vec<f64> = match (model.loss, &ex.target) {
            (Loss::Mse, Target::Values(_)) => {
                let (_, t) = example_inputs(ex, spec);
                tr.output.iter().zip(&t).map(|(y, t)| 2.0 * (t - y) / bsz).collect()
            }
            (Loss::CrossEntropy, Target::Class(c)) => tr
                .output
                .iter()
                .enumerate()
                .map(|(i, y)| (f64::from(i == *c as usize) - y) / bsz)
                .collect(),
            _ => return Err(NnError::Data("target kind does not match the loss".into())),
        };
        for l in (start..model.layers.len()).rev() {
            let x_in = &tr.body_inputs[l - start];
            match &model.layers[l] {
                Layer::Softmax | Layer::Concat => {}
                Layer::Relu6 => {
                    delta = delta.iter().zip(x_in).map(|(d, x)| if *x > 0.0 && *x < 6.0 { *d } else { 0.0 }).collect();
                }
                Layer::Dense { inputs, outputs, bias } => {
                    for o in 0..*outputs {
                        for i in 0..*inputs {
                            g[l][0][o * inputs + i] += delta[o] * x_in[i];
                        }
                        if *bias {
                            g[l][1][o] += delta[o];
                        }
                    }
                    delta = (0..*inputs)
                        .map(|i| (0..*outputs).map(|o| p[l][0][o * inputs + i] * delta[o]).sum())
                        .collect();
                }
                Layer::Embedding { .. } | Layer::Features { .. } => unreachable!(),
            }
        }
        let mut off = 0;
        for (l, h) in tr.heads.iter().enumerate() {
            if let Layer::Embedding { dim, input, .. } = model.layers[l] {
                let id = ex.ids[input] as usize;
                for d in 0..dim {
                    g[l][0][id * dim + d] += delta[off + d];
                }
            }
            off += h.len();
        }
    }
    for (l, layer) in g.iter_mut().enumerate() {
        if model.is_frozen(l) {
            layer.iter_mut().for_each(|t| t.iter_mut().for_each(|v| *v = 0.0));
        }
    }
    Ok(g)
}

/// Float SGD from the same quantized initialization and batch order as
/// [`train_fxp`](super::train_fxp).
pub fn train_float(
    model: &ModelGraph,
    spec: FxpSpec,
    data: &[Example],
    config: &TrainConfig,
    orderings: &[Vec<usize>],
) -> Result<FloatRun, NnError> {
    if config.batch_size == 0 {
        return Err(NnError::Config("batch_size must be at least 1".into()));
    }
    let initial = Weights::init(model, spec, config.init_seed)?.to_f64();
    let mut p = initial.clone();
    let mut step_losses = Vec::new();
    for idx in batches_from_orderings(orderings, config.batch_size) {
        let batch: Vec<Example> = idx.iter().map(|&i| data[i].clone()).collect();
        step_losses.push(loss_f64(model, &p, &batch, &spec)?);
        let g = gradients_f64(model, &p, &batch, &spec)?;
        for (pl, gl) in p.iter_mut().zip(&g) {
            for (pt, gt) in pl.iter_mut().zip(gl) {
                for (w, d) in pt.iter_mut().zip(gt) {
                    *w += config.learning_rate * d;
                }
            }
        }
    }
    Ok(FloatRun { initial, params: p, step_losses })
}

/// Mean squared error over regression examples, averaged per output.
pub fn mse_f64(model: &ModelGraph, p: &Params, data: &[Example], spec: &FxpSpec) -> Result<f64, NnError> {
    let mut total = 0.0;
    let mut count = 0usize;
    for ex in data {
        let out = forward_f64(model, p, ex, spec)?;
        let (_, t) = example_inputs(ex, spec);
        for (y, t) in out.iter().zip(&t) {
            total += (y - t) * (y - t);
            count += 1;
        }
    }
    Ok(total / count.max(1) as f64)
}

pub fn accuracy_f64(model: &ModelGraph, p: &Params, data: &[Example], spec: &FxpSpec) -> Result<f64, NnError> {
    let mut hits = 0usize;
    for ex in data {
        let out = forward_f64(model, p, ex, spec)?;
        let Target::Class(c) = ex.target else {
            return Err(NnError::Data("accuracy needs class targets".into()));
        };
        let best = (0..out.len()).fold(0, |b, i| if out[i] > out[b] { i } else { b });
        hits += usize::from(best == c as usize);
    }
    Ok(hits as f64 / data.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::data::{ratings_to_examples, synthetic_ratings};
    use crate::nn::train::{backward_fxp, forward_fxp};

    fn dense_model() -> ModelGraph {
        ModelGraph::new(vec![Layer::Features { dim: 3 }, Layer::Dense { inputs: 3, outputs: 2, bias: true }], Loss::Mse)
            .unwrap()
    }

    fn dense_batch(spec: &FxpSpec) -> Vec<Example> {
        let q = |x: f64| spec.quantize_raw(x).unwrap();
        vec![
            Example { ids: vec![], features: vec![q(0.5), q(-1.25), q(2.0)], target: Target::Values(vec![q(1.0), q(-0.5)]) },
            Example { ids: vec![], features: vec![q(-0.75), q(0.3), q(1.1)], target: Target::Values(vec![q(0.2), q(0.9)]) },
        ]
    }

    fn finite_difference(model: &ModelGraph, p: &Params, batch: &[Example], spec: &FxpSpec) -> Params {
        let h = 1e-4;
        let mut out = p.clone();
        for l in 0..p.len() {
            for t in 0..p[l].len() {
                for i in 0..p[l][t].len() {
                    let mut plus = p.clone();
                    plus[l][t][i] += h;
                    let mut minus = p.clone();
                    minus[l][t][i] -= h;
                    let d = loss_f64(model, &plus, batch, spec).unwrap() - loss_f64(model, &minus, batch, spec).unwrap();
                    out[l][t][i] = -d / (2.0 * h);
                }
            }
        }
        out
    }

    fn max_rel_err(a: &Params, b: &Params) -> f64 {
        let mut worst: f64 = 0.0;
        for (x, y) in a.iter().flatten().flatten().zip(b.iter().flatten().flatten()) {
            worst = worst.max((x - y).abs() / x.abs().max(y.abs()).max(1e-3));
        }
        worst
    }

    #[test]
    fn dense_gradient_matches_finite_differences() {
        let spec = FxpSpec::recommender();
        let model = dense_model();
        let batch = dense_batch(&spec);
        let w = Weights::init(&model, spec, 11).unwrap();
        let p = w.to_f64();
        let analytic = gradients_f64(&model, &p, &batch, &spec).unwrap();
        let numeric = finite_difference(&model, &p, &batch, &spec);
        for (a, n) in analytic.iter().flatten().flatten().zip(numeric.iter().flatten().flatten()) {
            assert!((a - n).abs() <= 1e-4, "{a} vs {n}");
        }
        let fx = backward_fxp(&model, &w, &batch).unwrap();
        let sf = spec.sf() as f64;
        for (t, a) in fx.layers.iter().flatten().zip(analytic.iter().flatten()) {
            for (&raw, &v) in t.data().iter().zip(a) {
                assert!((raw as f64 / sf - v).abs() <= 64.0 / sf, "{raw} vs {v}");
            }
        }
    }

    #[test]
    fn every_layer_passes_finite_differences() {
        let spec = FxpSpec::recommender();
        let model = ModelGraph::recommender(4, 4, 3, 5);
        let data = ratings_to_examples(&synthetic_ratings(4, 4, 6, 9), &spec).unwrap();
        let p = Weights::init(&model, spec, 4).unwrap().to_f64();
        let analytic = gradients_f64(&model, &p, &data, &spec).unwrap();
        let numeric = finite_difference(&model, &p, &data, &spec);
        assert!(max_rel_err(&analytic, &numeric) <= 1e-3);

        let cls = ModelGraph::classifier(3, 4, 3);
        let p = Weights::init(&cls, spec, 4).unwrap().to_f64();
        let batch: Vec<Example> = (0..3)
            .map(|i| Example { ids: vec![], features: vec![i * 3000, -2000, 5000], target: Target::Class(i as u32) })
            .collect();
        let analytic = gradients_f64(&cls, &p, &batch, &spec).unwrap();
        let numeric = finite_difference(&cls, &p, &batch, &spec);
        assert!(max_rel_err(&analytic, &numeric) <= 1e-3);
    }

    #[test]
    fn mlp_forward_tracks_float_at_high_scale() {
        let spec = FxpSpec::pow2(15, 20).unwrap();
        let model = ModelGraph::new(
            vec![
                Layer::Features { dim: 3 },
                Layer::Dense { inputs: 3, outputs: 4, bias: true },
                Layer::Relu6,
                Layer::Dense { inputs: 4, outputs: 2, bias: true },
            ],
            Loss::Mse,
        )
        .unwrap();
        let w = Weights::init(&model, spec, 21).unwrap();
        let batch = dense_batch(&spec);
        let (_, preds) = forward_fxp(&model, &w, &batch).unwrap();
        let sf = spec.sf() as f64;
        for (ex, pred) in batch.iter().zip(&preds) {
            let f = forward_f64(&model, &w.to_f64(), ex, &spec).unwrap();
            for (&raw, v) in pred.iter().zip(&f) {
                assert!((raw as f64 / sf - v).abs() <= 32.0 / sf);
            }
        }
    }

    #[test]
    fn cross_entropy_gradient_matches_float() {
        let spec = FxpSpec::recommender();
        let model = ModelGraph::new(
            vec![Layer::Features { dim: 2 }, Layer::Dense { inputs: 2, outputs: 3, bias: true }, Layer::Softmax],
            Loss::CrossEntropy,
        )
        .unwrap();
        let w = Weights::init(&model, spec, 8).unwrap();
        let batch = vec![Example { ids: vec![], features: vec![4096, -8192], target: Target::Class(1) }];
        let fx = backward_fxp(&model, &w, &batch).unwrap();
        let fl = gradients_f64(&model, &w.to_f64(), &batch, &spec).unwrap();
        let sf = spec.sf() as f64;
        // bias gradient is (onehot − y) directly
        for (&raw, v) in fx.layers[1][1].data().iter().zip(&fl[1][1]) {
            assert!((raw as f64 / sf - v).abs() <= 8.0 / sf, "{raw} vs {v}");
        }
    }

    #[test]
    fn zero_rate_keeps_loss_and_runs_are_deterministic() {
        let spec = FxpSpec::recommender();
        let model = ModelGraph::recommender(5, 5, 2, 3);
        let data = ratings_to_examples(&synthetic_ratings(5, 5, 10, 2), &spec).unwrap();
        let order: Vec<Vec<usize>> = vec![(0..10).collect(), (0..10).collect()];
        let cfg = TrainConfig { learning_rate: 0.0, batch_size: 10, epochs: 2, init_seed: 1 };
        let run = train_float(&model, spec, &data, &cfg, &order).unwrap();
        assert_eq!(run.step_losses[0], run.step_losses[1]);
        let cfg = TrainConfig { learning_rate: 0.05, ..cfg };
        let a = train_float(&model, spec, &data, &cfg, &order).unwrap();
        let b = train_float(&model, spec, &data, &cfg, &order).unwrap();
        assert_eq!(a.params, b.params);
    }
}
