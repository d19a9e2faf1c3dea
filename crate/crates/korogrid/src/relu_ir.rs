//! Explicit feedforward-network representation with an exact evaluator,
//! structural combinators, statistics, and serialization.
//!
//! Every unit computes an affine form of the previous layer followed by
//! either `relu` (`max(0, .)`) or `identity`. Per-unit activation flags allow
//! linear readouts and pass-through channels inside otherwise-relu layers
//! while keeping depth equal to the plain layer count.
//!
//! Weights are stored as sparse `(row, col, value)` triplets in row-major
//! order. The compiled grid networks are block-diagonal stacks of thousands
//! of small subnetworks, so dense `rows x cols` storage would be quadratic in
//! the subnetwork count; the triplet form keeps memory and evaluation
//! proportional to the nonzero count that `weight_count` reports.
//! Evaluation accumulates entries in their stored row-major order, which
//! makes results reproducible bit for bit.
//!
//! Networks are immutable after construction; evaluation is pure and safe to
//! run concurrently.

use crate::jsonfmt;
use crate::{Error, Result};
use serde::Deserialize;
use std::collections::BTreeMap;

/// Per-unit activation flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

/// One affine layer: sparse weights, biases, per-unit activations.
#[derive(Debug, Clone)]
pub struct Layer {
    rows: usize,
    cols: usize,
    /// Row-major sorted `(row, col, weight)`; explicit zeros are dropped.
    entries: Vec<(u32, u32, f64)>,
    bias: Vec<f64>,
    activation: Vec<Activation>,
}

impl Layer {
    pub fn new(
        rows: usize,
        cols: usize,
        mut entries: Vec<(u32, u32, f64)>,
        bias: Vec<f64>,
        activation: Vec<Activation>,
    ) -> Result<Layer> {
        if rows == 0 || cols == 0 {
            return Err(Error::NetworkShape(format!(
                "layer must have positive shape, got {rows} x {cols}"
            )));
        }
        if bias.len() != rows || activation.len() != rows {
            return Err(Error::NetworkShape(format!(
                "bias/activation length must equal row count {rows}, got {}/{}",
                bias.len(),
                activation.len()
            )));
        }
        entries.retain(|&(_, _, w)| w != 0.0);
        entries.sort_by_key(|&(r, c, _)| (r, c));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::NetworkShape(format!(
                    "duplicate weight entry at ({}, {})",
                    pair[0].0, pair[0].1
                )));
            }
        }
        for &(r, c, w) in &entries {
            if r as usize >= rows || c as usize >= cols {
                return Err(Error::NetworkShape(format!(
                    "weight entry ({r}, {c}) outside {rows} x {cols}"
                )));
            }
            if !w.is_finite() {
                return Err(Error::NetworkShape(format!("non-finite weight at ({r}, {c})")));
            }
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::NetworkShape("non-finite bias".into()));
        }
        Ok(Layer {
            rows,
            cols,
            entries,
            bias,
            activation,
        })
    }

    /// Build from a dense row-major matrix; zeros are not stored.
    pub fn from_dense(
        weights: &[Vec<f64>],
        bias: Vec<f64>,
        activation: Vec<Activation>,
    ) -> Result<Layer> {
        let rows = weights.len();
        let cols = weights.first().map_or(0, Vec::len);
        let mut entries = Vec::new();
        for (r, row) in weights.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::NetworkShape("ragged weight matrix".into()));
            }
            for (c, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    entries.push((r as u32, c as u32, w));
                }
            }
        }
        Layer::new(rows, cols, entries, bias, activation)
    }

    pub fn out_dim(&self) -> usize {
        self.rows
    }

    pub fn in_dim(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> &[Activation] {
        &self.activation
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for &(r, c, w) in &self.entries {
            out[r as usize] += w * x[c as usize];
        }
        for (v, a) in out.iter_mut().zip(&self.activation) {
            // the negated form clamps NaN as well as non-positive values
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if matches!(a, Activation::Relu) && !(*v > 0.0) {
                *v = 0.0;
            }
        }
    }
}

/// Structural statistics. `size` counts relu-activated units only (the
/// quantity the size bounds concern); `total_units` additionally counts
/// identity readout/pass-through units; `weight_count` counts stored
/// nonzero weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkStats {
    pub depth: usize,
    pub size: usize,
    pub total_units: usize,
    pub weight_count: usize,
}

/// An explicit feedforward network.
#[derive(Debug, Clone)]
pub struct ReluNetwork {
    input_dim: usize,
    layers: Vec<Layer>,
    metadata: BTreeMap<String, String>,
}

impl ReluNetwork {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<ReluNetwork> {
        if input_dim == 0 {
            return Err(Error::NetworkShape("input dimension must be positive".into()));
        }
        if layers.is_empty() {
            return Err(Error::NetworkShape("network has no layers".into()));
        }
        let mut width = input_dim;
        for (k, layer) in layers.iter().enumerate() {
            if layer.in_dim() != width {
                return Err(Error::NetworkShape(format!(
                    "layer {k} expects input width {}, previous width is {width}",
                    layer.in_dim()
                )));
            }
            width = layer.out_dim();
        }
        Ok(ReluNetwork {
            input_dim,
            layers,
            metadata: BTreeMap::new(),
        })
    }

    /// Single identity layer: passes `dim` channels through unchanged.
    pub fn identity(dim: usize) -> ReluNetwork {
        let entries = (0..dim as u32).map(|j| (j, j, 1.0)).collect();
        let layer = Layer::new(
            dim,
            dim,
            entries,
            vec![0.0; dim],
            vec![Activation::Identity; dim],
        )
        .expect("identity layer is well formed");
        ReluNetwork::new(dim, vec![layer]).expect("identity network is well formed")
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").out_dim()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, metadata: BTreeMap<String, String>) {
        self.metadata = metadata;
    }

    pub fn insert_metadata(&mut self, key: &str, value: String) {
        self.metadata.insert(key.to_string(), value);
    }

    /// Evaluate the network: affine-then-activation per layer;
    /// identity-flagged units skip the `max(0, .)`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Convenience for single-output networks.
    pub fn eval_scalar(&self, x: &[f64]) -> Result<f64> {
        let out = self.eval(x)?;
        if out.len() != 1 {
            return Err(Error::NetworkShape(format!(
                "expected scalar output, network has {} outputs",
                out.len()
            )));
        }
        Ok(out[0])
    }

    pub fn stats(&self) -> NetworkStats {
        let mut size = 0;
        let mut total_units = 0;
        let mut weight_count = 0;
        for layer in &self.layers {
            total_units += layer.rows;
            size += layer
                .activation
                .iter()
                .filter(|a| matches!(a, Activation::Relu))
                .count();
            weight_count += layer.entries.len();
        }
        NetworkStats {
            depth: self.layers.len(),
            size,
            total_units,
            weight_count,
        }
    }
}

/// Evaluate `net` at `x` (free-function form of [`ReluNetwork::eval`]).
pub fn eval_network(net: &ReluNetwork, x: &[f64]) -> Result<Vec<f64>> {
    net.eval(x)
}

/// Side-by-side composition of networks over a shared input.
///
/// All members must have the same input dimension and depth (pad first if
/// needed). The first layer stacks rows over the shared input columns; later
/// layers are block-diagonal. Evaluation equals the concatenation of the
/// member evaluations, and stats are additive.
pub fn stack_parallel(nets: &[ReluNetwork]) -> Result<ReluNetwork> {
    let first = nets
        .first()
        .ok_or_else(|| Error::NetworkShape("cannot stack zero networks".into()))?;
    let input_dim = first.input_dim;
    let depth = first.depth();
    for (k, net) in nets.iter().enumerate() {
        if net.input_dim != input_dim {
            return Err(Error::NetworkShape(format!(
                "network {k} input dim {} differs from {input_dim}",
                net.input_dim
            )));
        }
        if net.depth() != depth {
            return Err(Error::NetworkShape(format!(
                "network {k} depth {} differs from {depth}; pad first",
                net.depth()
            )));
        }
    }
    let mut layers = Vec::with_capacity(depth);
    for k in 0..depth {
        let mut entries = Vec::new();
        let mut bias = Vec::new();
        let mut activation = Vec::new();
        let mut row_off = 0u32;
        let mut col_off = 0u32;
        let mut cols = 0usize;
        for net in nets {
            let layer = &net.layers[k];
            let shared_input = k == 0;
            let off = if shared_input { 0 } else { col_off };
            for &(r, c, w) in &layer.entries {
                entries.push((row_off + r, off + c, w));
            }
            bias.extend_from_slice(&layer.bias);
            activation.extend_from_slice(&layer.activation);
            row_off += layer.rows as u32;
            if !shared_input {
                col_off += layer.cols as u32;
            }
            cols = if shared_input {
                input_dim
            } else {
                cols + layer.cols
            };
        }
        layers.push(Layer::new(
            row_off as usize,
            cols,
            entries,
            bias,
            activation,
        )?);
    }
    ReluNetwork::new(input_dim, layers)
}

/// Feed `first`'s output into `second`; depth adds.
pub fn compose(first: &ReluNetwork, second: &ReluNetwork) -> Result<ReluNetwork> {
    if first.output_dim() != second.input_dim {
        return Err(Error::NetworkShape(format!(
            "cannot compose: output dim {} vs input dim {}",
            first.output_dim(),
            second.input_dim
        )));
    }
    let mut layers = first.layers.clone();
    layers.extend(second.layers.iter().cloned());
    ReluNetwork::new(first.input_dim, layers)
}

/// Extend `net` to `target` depth with exact carry layers for nonnegative
/// signals: one relu unit per channel with weight 1 and bias 0.
///
/// Every signal carried by the grid constructions is a `sigma` output, hence
/// nonnegative, and the carry is exact. For signed signals use
/// [`pad_depth_signed`].
pub fn pad_depth(net: &ReluNetwork, target: usize) -> Result<ReluNetwork> {
    let depth = net.depth();
    if target < depth {
        return Err(Error::PadBelowDepth { target, depth });
    }
    let dim = net.output_dim();
    let mut layers = net.layers.clone();
    for _ in depth..target {
        let entries = (0..dim as u32).map(|j| (j, j, 1.0)).collect();
        layers.push(Layer::new(
            dim,
            dim,
            entries,
            vec![0.0; dim],
            vec![Activation::Relu; dim],
        )?);
    }
    let mut out = ReluNetwork::new(net.input_dim, layers)?;
    out.metadata = net.metadata.clone();
    Ok(out)
}

/// Depth padding that carries signals of either sign exactly.
///
/// Each channel `z` is split into the pair `(sigma(z), sigma(-z))`, carried
/// pairwise, and recombined by a final identity layer computing the exact
/// difference. The resulting network is flagged with `signed_carry = true`
/// in its metadata.
pub fn pad_depth_signed(net: &ReluNetwork, target: usize) -> Result<ReluNetwork> {
    let depth = net.depth();
    if target < depth {
        return Err(Error::PadBelowDepth { target, depth });
    }
    if target == depth {
        return Ok(net.clone());
    }
    let dim = net.output_dim();
    let extra = target - depth;
    let mut layers = net.layers.clone();
    if extra == 1 {
        layers.push(ReluNetwork::identity(dim).layers[0].clone());
    } else {
        // split: z_j -> (sigma(z_j), sigma(-z_j))
        let mut entries = Vec::with_capacity(2 * dim);
        for j in 0..dim as u32 {
            entries.push((2 * j, j, 1.0));
            entries.push((2 * j + 1, j, -1.0));
        }
        layers.push(Layer::new(
            2 * dim,
            dim,
            entries,
            vec![0.0; 2 * dim],
            vec![Activation::Relu; 2 * dim],
        )?);
        // carry the pairs: (a, b) -> (sigma(a - b), sigma(b - a))
        for _ in 0..extra - 2 {
            let mut entries = Vec::with_capacity(4 * dim);
            for j in 0..dim as u32 {
                entries.push((2 * j, 2 * j, 1.0));
                entries.push((2 * j, 2 * j + 1, -1.0));
                entries.push((2 * j + 1, 2 * j, -1.0));
                entries.push((2 * j + 1, 2 * j + 1, 1.0));
            }
            layers.push(Layer::new(
                2 * dim,
                2 * dim,
                entries,
                vec![0.0; 2 * dim],
                vec![Activation::Relu; 2 * dim],
            )?);
        }
        // recombine: z_j = a_j - b_j, exact for both signs
        let mut entries = Vec::with_capacity(2 * dim);
        for j in 0..dim as u32 {
            entries.push((j, 2 * j, 1.0));
            entries.push((j, 2 * j + 1, -1.0));
        }
        layers.push(Layer::new(
            dim,
            2 * dim,
            entries,
            vec![0.0; dim],
            vec![Activation::Identity; dim],
        )?);
    }
    let mut out = ReluNetwork::new(net.input_dim, layers)?;
    out.metadata = net.metadata.clone();
    out.metadata
        .insert("signed_carry".to_string(), "true".to_string());
    Ok(out)
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

pub const NETWORK_FORMAT_VERSION: u32 = 1;

impl ReluNetwork {
    /// Serialize to the network document format: sparse `(row, col, weight)`
    /// triplets per layer, 17-significant-digit numbers, deterministic bytes.
    pub fn to_json_string(&self) -> Result<String> {
        let mut s = String::new();
        s.push_str("{\"version\":");
        s.push_str(&NETWORK_FORMAT_VERSION.to_string());
        s.push_str(",\"input_dim\":");
        s.push_str(&self.input_dim.to_string());
        s.push_str(",\"layers\":[");
        for (k, layer) in self.layers.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            s.push_str("\n{\"rows\":");
            s.push_str(&layer.rows.to_string());
            s.push_str(",\"cols\":");
            s.push_str(&layer.cols.to_string());
            s.push_str(",\"weights\":[");
            for (e, &(r, c, w)) in layer.entries.iter().enumerate() {
                if e > 0 {
                    s.push(',');
                }
                s.push('[');
                s.push_str(&r.to_string());
                s.push(',');
                s.push_str(&c.to_string());
                s.push(',');
                jsonfmt::push_f64(&mut s, w)?;
                s.push(']');
            }
            s.push_str("],\"bias\":[");
            for (e, &b) in layer.bias.iter().enumerate() {
                if e > 0 {
                    s.push(',');
                }
                jsonfmt::push_f64(&mut s, b)?;
            }
            s.push_str("],\"activation\":[");
            for (e, a) in layer.activation.iter().enumerate() {
                if e > 0 {
                    s.push(',');
                }
                s.push('"');
                s.push_str(a.as_str());
                s.push('"');
            }
            s.push_str("]}");
        }
        s.push_str("\n],\"metadata\":{");
        for (k, (key, value)) in self.metadata.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            jsonfmt::push_str(&mut s, key);
            s.push(':');
            jsonfmt::push_str(&mut s, value);
        }
        s.push_str("}}\n");
        Ok(s)
    }

    /// Parse and validate a network document.
    pub fn from_json_str(doc: &str) -> Result<ReluNetwork> {
        #[derive(Deserialize)]
        struct LayerDoc {
            rows: usize,
            cols: usize,
            weights: Vec<(u32, u32, f64)>,
            bias: Vec<f64>,
            activation: Vec<String>,
        }
        #[derive(Deserialize)]
        struct NetDoc {
            version: u32,
            input_dim: usize,
            layers: Vec<LayerDoc>,
            #[serde(default)]
            metadata: BTreeMap<String, String>,
        }
        let doc: NetDoc = serde_json::from_str(doc)
            .map_err(|e| Error::Format(format!("network document: {e}")))?;
        if doc.version != NETWORK_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported network format version {} (expected {NETWORK_FORMAT_VERSION})",
                doc.version
            )));
        }
        let mut layers = Vec::with_capacity(doc.layers.len());
        for (k, l) in doc.layers.into_iter().enumerate() {
            let activation = l
                .activation
                .iter()
                .map(|a| match a.as_str() {
                    "relu" => Ok(Activation::Relu),
                    "identity" => Ok(Activation::Identity),
                    other => Err(Error::Format(format!(
                        "layer {k}: unknown activation `{other}`"
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            layers.push(
                Layer::new(l.rows, l.cols, l.weights, l.bias, activation)
                    .map_err(|e| Error::Format(format!("layer {k}: {e}")))?,
            );
        }
        let mut net = ReluNetwork::new(doc.input_dim, layers)
            .map_err(|e| Error::Format(format!("{e}")))?;
        net.metadata = doc.metadata;
        Ok(net)
    }
}
