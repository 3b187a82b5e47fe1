use serde::{Deserialize, Serialize};

use super::backend::{CircuitBackend, FxpBackend, PlainBackend};
use super::data::{Example, Target};
use super::model::{Layer, Loss, ModelGraph, Weights};
use super::NnError;
use crate::air::{Cell, Circuit, NonLinearity};
use crate::fxp::{FxpSpec, FxpTensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub init_seed: u64,
}

impl TrainConfig {
    /// `η` quantized at the spec's scale. A nonzero rate that rounds to zero
    /// is rejected rather than silently freezing training.
    pub fn eta_raw(&self, spec: &FxpSpec) -> Result<i64, NnError> {
        if self.batch_size == 0 {
            return Err(NnError::Config("batch_size must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(NnError::Config(format!("learning rate {} must be finite and non-negative", self.learning_rate)));
        }
        let raw = spec.quantize_raw(self.learning_rate)?;
        if raw == 0 && self.learning_rate != 0.0 {
            return Err(NnError::Config(format!(
                "learning rate {} underflows to zero at scale factor {}",
                self.learning_rate, spec.scale_factor
            )));
        }
        Ok(raw)
    }

    pub fn steps_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size.max(1))
    }
}

/// Per-layer values produced by a forward pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Activations {
    /// Output of each head layer (embedding rows, features).
    pub heads: Vec<Vec<i64>>,
    /// Input of each body layer, in order.
    pub body_inputs: Vec<Vec<i64>>,
    pub output: Vec<i64>,
}

/// `Δw = −∇L` per layer, aligned with [`Weights`]; frozen layers hold zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradientSet {
    pub layers: Vec<Vec<FxpTensor>>,
}

struct Record<V> {
    onehots: Vec<Option<Vec<V>>>,
    heads: Vec<Vec<V>>,
    body_inputs: Vec<Vec<V>>,
    output: Vec<V>,
}

/// Values produced by one SGD step on a backend.
pub struct StepValues<V> {
    pub records_out: Vec<Vec<V>>,
    pub grads: Vec<Option<Vec<Vec<V>>>>,
    pub params: Vec<Vec<Vec<V>>>,
}

/// Every weight as a backend value, in [`Weights`] layout.
pub fn load_params<B: FxpBackend>(be: &mut B, weights: &Weights) -> Result<Vec<Vec<Vec<B::V>>>, NnError> {
    weights
        .layers
        .iter()
        .map(|ts| {
            ts.iter()
                .map(|t| t.data().iter().map(|&v| be.input(v as i128)).collect::<Result<Vec<_>, _>>())
                .collect()
        })
        .collect()
}

fn forward_one<B: FxpBackend>(
    be: &mut B,
    model: &ModelGraph,
    params: &[Vec<Vec<B::V>>],
    ex: &Example,
) -> Result<Record<B::V>, NnError> {
    let sf = be.spec().sf() as i128;
    let start = model.body_start();
    let mut onehots = Vec::with_capacity(start);
    let mut heads = Vec::with_capacity(start);
    for (l, layer) in model.layers[..start].iter().enumerate() {
        match layer {
            Layer::Embedding { vocab, dim, input } => {
                let id = *ex
                    .ids
                    .get(*input)
                    .ok_or_else(|| NnError::Data(format!("example lacks id input {input}")))?;
                let oh = be.onehot(id as usize, *vocab)?;
                let table = &params[l][0];
                let mut out = Vec::with_capacity(*dim);
                for d in 0..*dim {
                    let column: Vec<B::V> = (0..*vocab).map(|v| table[v * dim + d]).collect();
                    out.push(be.dot(&oh, &column, None)?);
                }
                onehots.push(Some(oh));
                heads.push(out);
            }
            Layer::Features { dim } => {
                if ex.features.len() != *dim {
                    return Err(NnError::Data(format!("expected {dim} features, got {}", ex.features.len())));
                }
                let xs = ex.features.iter().map(|&f| be.input(f as i128)).collect::<Result<Vec<_>, _>>()?;
                onehots.push(None);
                heads.push(xs);
            }
            _ => unreachable!("heads precede the body"),
        }
    }
    let mut x: Vec<B::V> = heads.iter().flatten().copied().collect();
    let mut body_inputs = Vec::new();
    for (l, layer) in model.layers.iter().enumerate().skip(start) {
        body_inputs.push(x.clone());
        x = match layer {
            Layer::Concat => x,
            Layer::Dense { inputs, outputs, bias } => {
                let w = &params[l][0];
                let mut y = Vec::with_capacity(*outputs);
                for o in 0..*outputs {
                    let acc = be.dot(&w[o * inputs..(o + 1) * inputs], &x, None)?;
                    let z = be.div_const(acc, sf)?;
                    y.push(if *bias { be.lincomb(&[(1, z), (1, params[l][1][o])], 0)? } else { z });
                }
                y
            }
            Layer::Relu6 => x.iter().map(|&v| be.nonlin(v, NonLinearity::Relu6)).collect::<Result<_, _>>()?,
            Layer::Softmax => be.softmax(&x)?,
            Layer::Embedding { .. } | Layer::Features { .. } => unreachable!("validated"),
        };
    }
    Ok(Record { onehots, heads, body_inputs, output: x })
}

/// Model output for one example on any backend.
pub fn forward_on<B: FxpBackend>(
    be: &mut B,
    model: &ModelGraph,
    params: &[Vec<Vec<B::V>>],
    ex: &Example,
) -> Result<Vec<B::V>, NnError> {
    Ok(forward_one(be, model, params, ex)?.output)
}

/// `−∂L/∂(output)` for one example; for softmax + cross-entropy this is
/// taken with respect to the logits.
fn loss_delta<B: FxpBackend>(
    be: &mut B,
    model: &ModelGraph,
    output: &[B::V],
    target: &Target,
    batch: i128,
) -> Result<Vec<B::V>, NnError> {
    let sf = be.spec().sf() as i128;
    match (model.loss, target) {
        (Loss::Mse, Target::Values(t)) => {
            if t.len() != output.len() {
                return Err(NnError::Data(format!("target has {} values, model outputs {}", t.len(), output.len())));
            }
            let mut out = Vec::with_capacity(t.len());
            for (&y, &tv) in output.iter().zip(t) {
                let tc = be.input(tv as i128)?;
                let diff = be.lincomb(&[(2, tc), (-2, y)], 0)?;
                out.push(be.div_const(diff, batch)?);
            }
            Ok(out)
        }
        (Loss::CrossEntropy, Target::Class(c)) => {
            let oh = be.onehot(*c as usize, output.len())?;
            let mut out = Vec::with_capacity(output.len());
            for (&y, &t) in output.iter().zip(&oh) {
                let diff = be.lincomb(&[(sf, t), (-1, y)], 0)?;
                out.push(be.div_const(diff, batch)?);
            }
            Ok(out)
        }
        _ => Err(NnError::Data("target kind does not match the loss".into())),
    }
}

fn has_trainable(model: &ModelGraph, upto: usize) -> bool {
    (0..upto).any(|j| !model.is_frozen(j) && matches!(model.layers[j], Layer::Embedding { .. } | Layer::Dense { .. }))
}

/// Forward, backward and (optionally) update for one batch, generic over
/// the execution backend.
pub fn step_on<B: FxpBackend>(
    be: &mut B,
    model: &ModelGraph,
    weights: &Weights,
    batch: &[Example],
    eta: Option<i128>,
) -> Result<StepValues<B::V>, NnError> {
    if batch.is_empty() {
        return Err(NnError::Data("empty batch".into()));
    }
    let sf = be.spec().sf() as i128;
    let params = load_params(be, weights)?;
    let start = model.body_start();
    let n_layers = model.layers.len();
    let bsz = batch.len() as i128;

    let mut records = Vec::with_capacity(batch.len());
    // delta at the output of each dense layer, per example
    let mut dense_deltas: Vec<Vec<Vec<B::V>>> = vec![Vec::new(); n_layers];
    let mut head_deltas: Vec<Vec<Vec<B::V>>> = vec![Vec::new(); start];
    for ex in batch {
        let rec = forward_one(be, model, &params, ex)?;
        let mut delta = loss_delta(be, model, &rec.output, &ex.target, bsz)?;
        for l in (start..n_layers).rev() {
            if !has_trainable(model, l + 1) {
                break;
            }
            let need_in = has_trainable(model, l);
            let x_in = &rec.body_inputs[l - start];
            match &model.layers[l] {
                Layer::Softmax | Layer::Concat => {}
                Layer::Relu6 => {
                    if need_in {
                        let mut next = Vec::with_capacity(delta.len());
                        for (&d, &x) in delta.iter().zip(x_in) {
                            let g = be.nonlin(x, NonLinearity::Relu6Grad)?;
                            next.push(be.mul(d, g)?);
                        }
                        delta = next;
                    }
                }
                Layer::Dense { inputs, outputs, .. } => {
                    dense_deltas[l].push(delta.clone());
                    if need_in {
                        let w = &params[l][0];
                        let mut next = Vec::with_capacity(*inputs);
                        for i in 0..*inputs {
                            let column: Vec<B::V> = (0..*outputs).map(|o| w[o * inputs + i]).collect();
                            let acc = be.dot(&column, &delta, None)?;
                            next.push(be.div_const(acc, sf)?);
                        }
                        delta = next;
                    }
                }
                Layer::Embedding { .. } | Layer::Features { .. } => unreachable!(),
            }
        }
        if has_trainable(model, start) {
            let mut off = 0;
            for (l, h) in rec.heads.iter().enumerate() {
                head_deltas[l].push(delta[off..off + h.len()].to_vec());
                off += h.len();
            }
        }
        records.push(rec);
    }

    let mut grads: Vec<Option<Vec<Vec<B::V>>>> = vec![None; n_layers];
    for (l, layer) in model.layers.iter().enumerate() {
        if model.is_frozen(l) {
            continue;
        }
        match layer {
            Layer::Dense { inputs, outputs, bias } => {
                let deltas = &dense_deltas[l];
                let mut gw = Vec::with_capacity(inputs * outputs);
                for o in 0..*outputs {
                    let ds: Vec<B::V> = deltas.iter().map(|d| d[o]).collect();
                    for i in 0..*inputs {
                        let xs: Vec<B::V> = records.iter().map(|r| r.body_inputs[l - start][i]).collect();
                        let acc = be.dot(&ds, &xs, None)?;
                        gw.push(be.div_const(acc, sf)?);
                    }
                }
                let mut g = vec![gw];
                if *bias {
                    let gb = (0..*outputs)
                        .map(|o| {
                            let ds: Vec<B::V> = deltas.iter().map(|d| d[o]).collect();
                            be.sum(&ds)
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    g.push(gb);
                }
                grads[l] = Some(g);
            }
            Layer::Embedding { vocab, dim, .. } => {
                let deltas = &head_deltas[l];
                let mut ge = Vec::with_capacity(vocab * dim);
                for v in 0..*vocab {
                    let ohs: Vec<B::V> =
                        records.iter().map(|r| r.onehots[l].as_ref().expect("embedding onehot")[v]).collect();
                    for d in 0..*dim {
                        let ds: Vec<B::V> = deltas.iter().map(|x| x[d]).collect();
                        ge.push(be.dot(&ohs, &ds, None)?);
                    }
                }
                grads[l] = Some(vec![ge]);
            }
            _ => {}
        }
    }

    let mut new_params = params.clone();
    if let Some(eta) = eta {
        for (l, g) in grads.iter().enumerate() {
            let Some(g) = g else { continue };
            for (t, gt) in g.iter().enumerate() {
                for (i, &gv) in gt.iter().enumerate() {
                    new_params[l][t][i] = be.sgd_update(params[l][t][i], gv, eta)?;
                }
            }
        }
    }
    Ok(StepValues { records_out: records.into_iter().map(|r| r.output).collect(), grads, params: new_params })
}

fn read_weights<B: FxpBackend>(be: &B, model: &ModelGraph, spec: FxpSpec, p: &[Vec<Vec<B::V>>]) -> Result<Weights, NnError> {
    let raw = p
        .iter()
        .map(|ts| ts.iter().map(|t| t.iter().map(|&v| be.value(v) as i64).collect()).collect())
        .collect();
    Weights::from_raw(model, spec, raw)
}

/// Fixed-point forward pass over a batch.
pub fn forward_fxp(
    model: &ModelGraph,
    weights: &Weights,
    batch: &[Example],
) -> Result<(Vec<Activations>, Vec<Vec<i64>>), NnError> {
    let mut be = PlainBackend::new(weights.spec);
    let params = load_params(&mut be, weights)?;
    let mut acts = Vec::with_capacity(batch.len());
    let mut preds = Vec::with_capacity(batch.len());
    let to64 = |v: &Vec<i128>| v.iter().map(|&x| x as i64).collect::<Vec<i64>>();
    for ex in batch {
        let r = forward_one(&mut be, model, &params, ex)?;
        preds.push(to64(&r.output));
        acts.push(Activations {
            heads: r.heads.iter().map(to64).collect(),
            body_inputs: r.body_inputs.iter().map(to64).collect(),
            output: to64(&r.output),
        });
    }
    Ok((acts, preds))
}

/// Quantized `−∇L` for a batch.
pub fn backward_fxp(model: &ModelGraph, weights: &Weights, batch: &[Example]) -> Result<GradientSet, NnError> {
    let mut be = PlainBackend::new(weights.spec);
    let sv = step_on(&mut be, model, weights, batch, None)?;
    let shapes = model.param_shapes();
    let mut layers = Vec::new();
    for (l, shape) in shapes.into_iter().enumerate() {
        let ts = match &sv.grads[l] {
            Some(g) => g
                .iter()
                .zip(shape)
                .map(|(d, s)| FxpTensor::new(s, d.iter().map(|&v| v as i64).collect(), weights.spec))
                .collect::<Result<Vec<_>, _>>()?,
            None => shape.into_iter().map(|s| FxpTensor::zeros(s, weights.spec)).collect(),
        };
        layers.push(ts);
    }
    Ok(GradientSet { layers })
}

/// `w' = w + round(η·Δw / SF)` for every trainable parameter.
pub fn sgd_step(model: &ModelGraph, weights: &Weights, grads: &GradientSet, eta_raw: i64) -> Result<Weights, NnError> {
    let spec = weights.spec;
    let mut out = weights.clone();
    for (l, (ts, gs)) in weights.layers.iter().zip(&grads.layers).enumerate() {
        if model.is_frozen(l) {
            continue;
        }
        if ts.len() != gs.len() {
            return Err(NnError::Shape(format!("layer {l}: gradient tensors do not match weights")));
        }
        for (t, (w, g)) in ts.iter().zip(gs).enumerate() {
            if w.shape() != g.shape() {
                return Err(NnError::Shape(format!("layer {l}: gradient shape mismatch")));
            }
            let data = w
                .data()
                .iter()
                .zip(g.data())
                .map(|(&wv, &gv)| {
                    crate::air::sgd_witness(wv as i128, gv as i128, eta_raw as i128, spec.sf() as i128, spec.range_bits)
                        .map(|x| x[6] as i64)
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.layers[l][t] = FxpTensor::new(w.shape().to_vec(), data, spec)?;
        }
    }
    Ok(out)
}

/// One fixed-point SGD step without a grid.
pub fn train_step(model: &ModelGraph, weights: &Weights, batch: &[Example], eta_raw: i64) -> Result<Weights, NnError> {
    let mut be = PlainBackend::new(weights.spec);
    let sv = step_on(&mut be, model, weights, batch, Some(eta_raw as i128))?;
    read_weights(&be, model, weights.spec, &sv.params)
}

/// The constraint grid of one SGD step together with the post-update
/// weights and the cells that hold them.
pub struct StepWitness {
    pub circuit: Circuit,
    pub weights: Weights,
    pub weight_cells: Vec<Vec<Vec<Cell>>>,
}

pub fn emit_step_witness(
    model: &ModelGraph,
    weights: &Weights,
    batch: &[Example],
    eta_raw: i64,
    cols: usize,
) -> Result<StepWitness, NnError> {
    let mut be = CircuitBackend::new(weights.spec, cols)?;
    let sv = step_on(&mut be, model, weights, batch, Some(eta_raw as i128))?;
    let new = read_weights(&be, model, weights.spec, &sv.params)?;
    let circuit = be.builder.finish()?;
    Ok(StepWitness { circuit, weights: new, weight_cells: sv.params })
}

/// Zero-valued stand-in batch with the same structure as a real one, used
/// to re-derive a step's circuit layout without seeing its data.
pub fn placeholder_batch(model: &ModelGraph, size: usize) -> Vec<Example> {
    let target = match model.loss {
        Loss::Mse => Target::Values(vec![0; model.output_dim()]),
        Loss::CrossEntropy => Target::Class(0),
    };
    let ex = Example { ids: vec![0; model.id_inputs()], features: vec![0; model.feature_dim()], target };
    vec![ex; size]
}

/// Per-step trace of a fixed-point training run.
#[derive(Clone, Debug)]
pub struct FxpRun {
    pub initial: Weights,
    /// Weights after each step, in order.
    pub trajectory: Vec<Weights>,
    /// Dataset positions of each step's batch.
    pub batches: Vec<Vec<usize>>,
}

impl FxpRun {
    pub fn final_weights(&self) -> &Weights {
        self.trajectory.last().unwrap_or(&self.initial)
    }
}

/// Splits per-epoch orderings into batches of dataset positions.
pub fn batches_from_orderings(orderings: &[Vec<usize>], batch_size: usize) -> Vec<Vec<usize>> {
    orderings.iter().flat_map(|perm| perm.chunks(batch_size.max(1)).map(|c| c.to_vec())).collect()
}

/// Fixed-point SGD over `data`, visiting examples in `orderings` (one
/// permutation per epoch).
pub fn train_fxp(
    model: &ModelGraph,
    spec: FxpSpec,
    data: &[Example],
    config: &TrainConfig,
    orderings: &[Vec<usize>],
) -> Result<FxpRun, NnError> {
    let eta = config.eta_raw(&spec)?;
    let initial = Weights::init(model, spec, config.init_seed)?;
    let batches = batches_from_orderings(orderings, config.batch_size);
    let mut w = initial.clone();
    let mut trajectory = Vec::with_capacity(batches.len());
    for (t, idx) in batches.iter().enumerate() {
        let batch: Vec<Example> = idx.iter().map(|&i| data[i].clone()).collect();
        w = train_step(model, &w, &batch, eta).map_err(|e| NnError::Step { step: t, source: Box::new(e) })?;
        trajectory.push(w.clone());
    }
    Ok(FxpRun { initial, trajectory, batches })
}

/// Mean squared error in real units over regression examples.
pub fn mse_fxp(model: &ModelGraph, weights: &Weights, data: &[Example]) -> Result<f64, NnError> {
    let (_, preds) = forward_fxp(model, weights, data)?;
    let sf = weights.spec.sf() as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for (p, ex) in preds.iter().zip(data) {
        let Target::Values(t) = &ex.target else {
            return Err(NnError::Data("mse needs regression targets".into()));
        };
        for (a, b) in p.iter().zip(t) {
            let d = (*a - *b) as f64 / sf;
            total += d * d;
            count += 1;
        }
    }
    Ok(total / count.max(1) as f64)
}

/// Classification accuracy.
pub fn accuracy_fxp(model: &ModelGraph, weights: &Weights, data: &[Example]) -> Result<f64, NnError> {
    let (_, preds) = forward_fxp(model, weights, data)?;
    let mut hits = 0usize;
    for (p, ex) in preds.iter().zip(data) {
        let Target::Class(c) = ex.target else {
            return Err(NnError::Data("accuracy needs class targets".into()));
        };
        let best = (0..p.len()).max_by_key(|&i| (p[i], std::cmp::Reverse(i))).unwrap_or(0);
        hits += usize::from(best == c as usize);
    }
    Ok(hits as f64 / data.len().max(1) as f64)
}
