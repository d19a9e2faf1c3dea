//! Constructive ReLU networks for hierarchical basis functions and sparse
//! grid interpolants.
//!
//! The building blocks, bottom to top:
//!
//! - **Hat nets.** `phi_{l,i}(x) = sigma(1 - sigma((x - x_{l,i})/h_l) -
//!   sigma((x_{l,i} - x)/h_l))`: depth 2, three relu units, exact for all
//!   `x` (the identity is algebraic, and the dyadic grid arithmetic makes it
//!   exact in floating point as well).
//! - **Squaring nets.** `f_s(x) = x - sum_{k=1}^s g_k(x)/4^k` with `g` the
//!   symmetric tent map and `g_k` its k-fold composition; `f_s` is the
//!   piecewise-linear interpolant of `x^2` on the level-`s` dyadic grid, so
//!   `|f_s(x) - x^2| <= 2^(-2s-2)` with `f_s(0) = 0` and `f_s(1) = 1` exact.
//! - **Multiplication nets.** `2M^2 (f_s(u) - f_s(v) - f_s(w))` with
//!   `u = |x+y|/(2M)`, `v = |x|/(2M)`, `w = |y|/(2M)`; absolute values are
//!   the pair `sigma(z) + sigma(-z)`, applied immediately so no signed value
//!   is ever depth-carried. If either input is zero, one squaring chain is
//!   identically zero and the remaining two receive bit-identical inputs, so
//!   their readouts cancel exactly: the net outputs exactly 0. The error
//!   constant is `(3/2) M^2 2^(-2s)`, which fixes the smallest admissible
//!   squaring depth for a target accuracy.
//! - **Product nets.** A balanced binary tree with exact hat nets at the
//!   leaves and multiplication nets at the internal nodes. A node with
//!   accuracy budget `beta` multiplies to accuracy `beta/2 - beta^2/16` with
//!   input bound `M = 1 + beta/4`, and its children are built to budget
//!   `beta/4`; telescoping gives total error `<= beta` and zero-in-zero-out
//!   propagates from the leaves to the root. Depth alignment between
//!   siblings is padded at the hat stage, where every carried signal is a
//!   `sigma` output and the relu carry is exact.
//! - **Compiled grid nets.** One product net per interpolant term at
//!   accuracy `delta = eps/2`, stacked over the shared input, plus a final
//!   identity readout whose weights are the hierarchical coefficients. Per
//!   level vector at most one product subnetwork is nonzero at any point
//!   (disjoint supports plus zero-in-zero-out), so the network deviates from
//!   the interpolant by at most `delta * |f|_{2,inf}`.

use crate::basis1d::LevelIndex1D;
use crate::relu_ir::{compose, pad_depth, stack_parallel, Activation, Layer, ReluNetwork};
use crate::sparse_grid::{count_points, Scheme, SparseGridInterpolant};
use crate::{Error, Result};

/// Parameters of one approximate multiplication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultParams {
    accuracy: f64,
    input_bound: f64,
}

impl MultParams {
    /// `accuracy` in (0, 1); inputs confined to `[-input_bound, input_bound]`
    /// with `input_bound >= 1`.
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must be rejected too
    pub fn new(accuracy: f64, input_bound: f64) -> Result<MultParams> {
        if !(accuracy > 0.0 && accuracy < 1.0) {
            return Err(Error::InvalidAccuracy(accuracy));
        }
        if !(input_bound >= 1.0) || !input_bound.is_finite() {
            return Err(Error::InvalidInputBound(input_bound));
        }
        Ok(MultParams {
            accuracy,
            input_bound,
        })
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn input_bound(&self) -> f64 {
        self.input_bound
    }

    /// Smallest `s >= 1` with `(3/2) M^2 2^(-2s) <= accuracy`, i.e.
    /// `ceil(log2(3 M^2 / (2 eps)) / 2)` clamped below at 1.
    pub fn squaring_depth(&self) -> u32 {
        let m2 = self.input_bound * self.input_bound;
        let mut s = 1u32;
        while 1.5 * m2 * 0.25f64.powi(s as i32) > self.accuracy {
            s += 1;
            debug_assert!(s < 600);
        }
        s
    }
}

/// Accuracy budgets of a product tree: the node `t` levels below the root
/// has budget `eps / 4^t`, multiplies to accuracy `beta/2 - beta^2/16`, and
/// bounds its inputs by `M = 1 + beta/4`.
#[derive(Debug, Clone)]
pub struct TreeSchedule {
    eps: f64,
    levels: Vec<MultParams>,
}

impl TreeSchedule {
    pub fn new(leaf_count: usize, eps: f64) -> Result<TreeSchedule> {
        if leaf_count == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidAccuracy(eps));
        }
        let depth = usize::BITS - (leaf_count - 1).leading_zeros(); // ceil(log2)
        let mut levels = Vec::with_capacity(depth as usize);
        for t in 0..depth {
            let budget = eps * 0.25f64.powi(t as i32);
            levels.push(MultParams::new(
                0.5 * budget - budget * budget / 16.0,
                1.0 + 0.25 * budget,
            )?);
        }
        Ok(TreeSchedule { eps, levels })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Multiplication parameters for nodes `t` levels below the root.
    pub fn level(&self, t: usize) -> MultParams {
        self.levels[t]
    }

    pub fn mult_levels(&self) -> usize {
        self.levels.len()
    }

    /// Human-readable summary recorded in network metadata.
    pub fn describe(&self) -> String {
        self.levels
            .iter()
            .enumerate()
            .map(|(t, p)| {
                format!(
                    "t={t}:budget={:.3e},mult_acc={:.3e},M={:.10},s={}",
                    self.eps * 0.25f64.powi(t as i32),
                    p.accuracy(),
                    p.input_bound(),
                    p.squaring_depth()
                )
            })
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Hat net over `input_dim` inputs reading coordinate `coord`.
fn hat_net_on_coord(li: LevelIndex1D, input_dim: usize, coord: usize) -> ReluNetwork {
    let scale = (1u64 << li.level()) as f64;
    let pos = li.position() as f64;
    let l1 = Layer::new(
        2,
        input_dim,
        vec![(0, coord as u32, scale), (1, coord as u32, -scale)],
        vec![-pos, pos],
        vec![Activation::Relu; 2],
    )
    .expect("hat layer 1 is well formed");
    let l2 = Layer::new(
        1,
        2,
        vec![(0, 0, -1.0), (0, 1, -1.0)],
        vec![1.0],
        vec![Activation::Relu],
    )
    .expect("hat layer 2 is well formed");
    ReluNetwork::new(input_dim, vec![l1, l2]).expect("hat net is well formed")
}

/// The exact two-layer hat net: depth 2, relu size 3, computes
/// `phi_{l,i}(x)` exactly for every real `x`.
pub fn build_hat_net(li: LevelIndex1D) -> ReluNetwork {
    let mut net = hat_net_on_coord(li, 1, 0);
    net.insert_metadata("kind", "hat".to_string());
    net.insert_metadata("level", li.level().to_string());
    net.insert_metadata("position", li.position().to_string());
    net
}

/// Append the three-unit squaring step `m` (1-based); consumes and produces
/// the chain state `(u, v, c)` laid out at column offset `3q` per chain.
///
/// State invariants on `[0, 1]` inputs: `t_m = 2u - 4v` is the m-fold tent
/// iterate, `c` carries the accumulated `f_{m-1}` value; all three are
/// nonnegative, so the relu carries are exact.
fn chain_layer(chains: usize, m: u32) -> Layer {
    debug_assert!(m >= 2);
    let inv = 0.25f64.powi(m as i32 - 1);
    let mut entries = Vec::with_capacity(7 * chains);
    let mut bias = vec![0.0; 3 * chains];
    for q in 0..chains as u32 {
        let (u, v, c) = (3 * q, 3 * q + 1, 3 * q + 2);
        entries.push((u, u, 2.0));
        entries.push((u, v, -4.0));
        entries.push((v, u, 2.0));
        entries.push((v, v, -4.0));
        entries.push((c, u, -2.0 * inv));
        entries.push((c, v, 4.0 * inv));
        entries.push((c, c, 1.0));
        bias[v as usize] = -0.5;
    }
    Layer::new(
        3 * chains,
        3 * chains,
        entries,
        bias,
        vec![Activation::Relu; 3 * chains],
    )
    .expect("chain layer is well formed")
}

/// Readout weights recovering `f_s = c - (2u - 4v)/4^s` from a chain state.
fn chain_readout(s: u32) -> (f64, f64, f64) {
    let inv = 0.25f64.powi(s as i32);
    (-2.0 * inv, 4.0 * inv, 1.0)
}

/// Sawtooth squaring net: on `x` in `[0, 1]` outputs
/// `f_s(x) = x - sum_{k=1}^s g_k(x)/4^k`, the piecewise-linear interpolant
/// of `x^2` on the level-`s` dyadic grid, so `|f_s(x) - x^2| <= 2^(-2s-2)`
/// and `f_s(0) = 0`, `f_s(1) = 1` exactly. Depth `s + 1`, relu size `3s`.
pub fn build_square_net(s: u32) -> Result<ReluNetwork> {
    if s < 1 {
        return Err(Error::NetworkShape("squaring depth must be >= 1".into()));
    }
    let mut layers = Vec::with_capacity(s as usize + 1);
    layers.push(Layer::new(
        3,
        1,
        vec![(0, 0, 1.0), (1, 0, 1.0), (2, 0, 1.0)],
        vec![0.0, -0.5, 0.0],
        vec![Activation::Relu; 3],
    )?);
    for m in 2..=s {
        layers.push(chain_layer(1, m));
    }
    let (wu, wv, wc) = chain_readout(s);
    layers.push(Layer::new(
        1,
        3,
        vec![(0, 0, wu), (0, 1, wv), (0, 2, wc)],
        vec![0.0],
        vec![Activation::Identity],
    )?);
    let mut net = ReluNetwork::new(1, layers)?;
    net.insert_metadata("kind", "square".to_string());
    net.insert_metadata("s", s.to_string());
    Ok(net)
}

fn mult_depth(s: u32) -> usize {
    s as usize + 4
}

fn mult_relu_size(s: u32) -> usize {
    6 + 9 * s as usize
}

/// Approximate multiplication on `[-M, M]^2`:
/// `2M^2 (f_s(|x+y|/2M) - f_s(|x|/2M) - f_s(|y|/2M))`.
///
/// Guarantees: `|out - xy| <= accuracy` on the domain; `out` is exactly `0`
/// whenever `x = 0` or `y = 0`; `out` is bitwise symmetric in `(x, y)`.
/// Depth `s + 4`, relu size `6 + 9s` with `s` the squaring depth.
pub fn build_mult_net(p: &MultParams) -> ReluNetwork {
    let s = p.squaring_depth();
    let m = p.input_bound;
    let k = 1.0 / (2.0 * m);
    let mut layers = Vec::with_capacity(mult_depth(s));
    // absolute values: sigma(+-(x+y)), sigma(+-x), sigma(+-y)
    layers.push(
        Layer::new(
            6,
            2,
            vec![
                (0, 0, 1.0),
                (0, 1, 1.0),
                (1, 0, -1.0),
                (1, 1, -1.0),
                (2, 0, 1.0),
                (3, 0, -1.0),
                (4, 1, 1.0),
                (5, 1, -1.0),
            ],
            vec![0.0; 6],
            vec![Activation::Relu; 6],
        )
        .expect("abs layer is well formed"),
    );
    // three squaring chains on u, v, w; the 1/(2M) scaling folds into the
    // first chain layer
    {
        let mut entries = Vec::with_capacity(18);
        let mut bias = vec![0.0; 9];
        for q in 0..3u32 {
            let (a, b) = (2 * q, 2 * q + 1);
            for row in [3 * q, 3 * q + 1, 3 * q + 2] {
                entries.push((row, a, k));
                entries.push((row, b, k));
            }
            bias[(3 * q + 1) as usize] = -0.5;
        }
        layers.push(
            Layer::new(9, 6, entries, bias, vec![Activation::Relu; 9])
                .expect("chain start layer is well formed"),
        );
    }
    for step in 2..=s {
        layers.push(chain_layer(3, step));
    }
    // gather f_s values per chain (identity readouts)
    {
        let (wu, wv, wc) = chain_readout(s);
        let mut entries = Vec::with_capacity(9);
        for q in 0..3u32 {
            entries.push((q, 3 * q, wu));
            entries.push((q, 3 * q + 1, wv));
            entries.push((q, 3 * q + 2, wc));
        }
        layers.push(
            Layer::new(3, 9, entries, vec![0.0; 3], vec![Activation::Identity; 3])
                .expect("gather layer is well formed"),
        );
    }
    // pair: carry f(u); add f(v) + f(w) as a single two-term sum so the
    // combine stage below is bitwise symmetric in (x, y)
    layers.push(
        Layer::new(
            2,
            3,
            vec![(0, 0, 1.0), (1, 1, 1.0), (1, 2, 1.0)],
            vec![0.0; 2],
            vec![Activation::Identity; 2],
        )
        .expect("pair layer is well formed"),
    );
    // combine: 2M^2 f(u) - 2M^2 (f(v) + f(w)); if one factor is zero the two
    // products round identically and cancel exactly
    let c = 2.0 * m * m;
    layers.push(
        Layer::new(
            1,
            2,
            vec![(0, 0, c), (0, 1, -c)],
            vec![0.0],
            vec![Activation::Identity],
        )
        .expect("combine layer is well formed"),
    );
    let mut net = ReluNetwork::new(2, layers).expect("mult net is well formed");
    net.insert_metadata("kind", "mult".to_string());
    net.insert_metadata("accuracy", format!("{:e}", p.accuracy));
    net.insert_metadata("input_bound", format!("{:e}", p.input_bound));
    net.insert_metadata("s", s.to_string());
    net
}

/// Depth of the subtree over `m` leaves whose root sits `level` mult-levels
/// below the tree root.
fn subtree_depth(m: usize, schedule: &TreeSchedule, level: usize) -> usize {
    if m == 1 {
        return 2;
    }
    let a = m.div_ceil(2);
    let b = m / 2;
    let child = subtree_depth(a, schedule, level + 1).max(subtree_depth(b, schedule, level + 1));
    child + mult_depth(schedule.level(level).squaring_depth())
}

/// Relu-unit count of the subtree, mirroring the builder's leaf-stage
/// padding assignment exactly.
fn subtree_relu(m: usize, schedule: &TreeSchedule, level: usize, pad: usize) -> usize {
    if m == 1 {
        return 3 + pad;
    }
    let a = m.div_ceil(2);
    let b = m / 2;
    let da = subtree_depth(a, schedule, level + 1);
    let db = subtree_depth(b, schedule, level + 1);
    let mx = da.max(db);
    subtree_relu(a, schedule, level + 1, pad + mx - da)
        + subtree_relu(b, schedule, level + 1, pad + mx - db)
        + mult_relu_size(schedule.level(level).squaring_depth())
}

fn build_subtree(
    lis: &[LevelIndex1D],
    first_coord: usize,
    input_dim: usize,
    schedule: &TreeSchedule,
    level: usize,
    pad: usize,
) -> Result<ReluNetwork> {
    if lis.len() == 1 {
        let hat = hat_net_on_coord(lis[0], input_dim, first_coord);
        // hat outputs are sigma values, so the relu carry is exact
        return pad_depth(&hat, 2 + pad);
    }
    let mid = lis.len().div_ceil(2);
    let da = subtree_depth(mid, schedule, level + 1);
    let db = subtree_depth(lis.len() - mid, schedule, level + 1);
    let mx = da.max(db);
    let left = build_subtree(
        &lis[..mid],
        first_coord,
        input_dim,
        schedule,
        level + 1,
        pad + mx - da,
    )?;
    let right = build_subtree(
        &lis[mid..],
        first_coord + mid,
        input_dim,
        schedule,
        level + 1,
        pad + mx - db,
    )?;
    let stacked = stack_parallel(&[left, right])?;
    compose(&stacked, &build_mult_net(&schedule.level(level)))
}

/// Binary-tree product net for `phi_{l,i}(x) = prod_j phi_{l_j,i_j}(x_j)`.
///
/// Leaves are exact hat nets; internal nodes are multiplication nets with
/// the quartered budget schedule. Guarantees: sup error at most `eps`,
/// exactly zero wherever any factor hat vanishes, and depth/size
/// `O(|log2 eps| log2 d)`. For `d = 1` this is the exact hat net.
///
/// Subtrees with a single leaf pass their hat through directly, so no
/// multiplication ever sees a constant operand; sibling depth differences
/// are absorbed by exact relu carries at the hat stage.
pub fn build_product_net(lis: &[LevelIndex1D], eps: f64) -> Result<ReluNetwork> {
    let d = lis.len();
    let schedule = TreeSchedule::new(d, eps)?;
    let mut net = build_subtree(lis, 0, d, &schedule, 0, 0)?;
    debug_assert_eq!(net.depth(), subtree_depth(d, &schedule, 0));
    debug_assert_eq!(net.stats().size, subtree_relu(d, &schedule, 0, 0));
    net.insert_metadata("kind", "product".to_string());
    net.insert_metadata("eps", format!("{eps:e}"));
    net.insert_metadata("d", d.to_string());
    net.insert_metadata("schedule", schedule.describe());
    Ok(net)
}

/// Compile an interpolant into a network: one product subnetwork per term at
/// accuracy `delta = eps/2`, stacked in parallel, with a final identity
/// readout weighted by the hierarchical coefficients.
///
/// For interpolants of functions with `|f|_{2,inf} <= 1` the network output
/// deviates from the interpolant by at most `delta` everywhere (per level
/// vector only one subnetwork is nonzero, and the coefficient decay sums the
/// per-term errors below `delta`). Evaluations at boundary points are
/// exactly zero.
pub fn compile_sparse_grid_net(
    interp: &SparseGridInterpolant,
    eps: f64,
) -> Result<ReluNetwork> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidAccuracy(eps));
    }
    let d = interp.dimension();
    let delta = 0.5 * eps;
    let schedule = TreeSchedule::new(d, delta)?;
    let mut subnets = Vec::with_capacity(interp.term_count());
    let mut coefficients = Vec::with_capacity(interp.term_count());
    for (mi, v) in interp.terms() {
        let lis: Vec<LevelIndex1D> = (0..d).map(|j| mi.component(j)).collect();
        subnets.push(build_subtree(&lis, 0, d, &schedule, 0, 0)?);
        coefficients.push(v);
    }
    let stacked = stack_parallel(&subnets)?;
    let readout = Layer::new(
        1,
        coefficients.len(),
        coefficients
            .iter()
            .enumerate()
            .map(|(t, &v)| (0, t as u32, v))
            .collect(),
        vec![0.0],
        vec![Activation::Identity],
    )?;
    let readout_net = ReluNetwork::new(coefficients.len(), vec![readout])?;
    let mut net = compose(&stacked, &readout_net)?;
    let (pd, ps) = plan_bounds(d, interp.term_count() as u128, delta)?;
    debug_assert_eq!(net.depth(), pd);
    debug_assert_eq!(net.stats().size, ps);
    net.insert_metadata("kind", "sparse-grid-net".to_string());
    net.insert_metadata("eps", format!("{eps:e}"));
    net.insert_metadata("delta", format!("{delta:e}"));
    net.insert_metadata("d", d.to_string());
    net.insert_metadata("n", interp.resolution().to_string());
    net.insert_metadata("scheme", interp.scheme().to_string());
    net.insert_metadata("term_count", interp.term_count().to_string());
    net.insert_metadata("schedule", schedule.describe());
    net.insert_metadata("predicted_depth", pd.to_string());
    net.insert_metadata("predicted_size", ps.to_string());
    Ok(net)
}

fn plan_bounds(d: usize, term_count: u128, delta: f64) -> Result<(usize, usize)> {
    let schedule = TreeSchedule::new(d, delta)?;
    let depth = subtree_depth(d, &schedule, 0) + 1; // + readout
    let per_term = subtree_relu(d, &schedule, 0, 0) as u128;
    let size = term_count
        .checked_mul(per_term)
        .filter(|&s| s <= usize::MAX as u128)
        .ok_or(Error::CountOverflow { d, n: 0 })?;
    Ok((depth, size as usize))
}

/// Exact depth and relu size the compiler will produce for a sparse-scheme
/// grid of resolution `n` in dimension `d` at total accuracy `eps`, computed
/// from the construction recipe itself (not the asymptotic formulas).
pub fn predicted_bounds(d: usize, n: u32, eps: f64) -> Result<(usize, usize)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidAccuracy(eps));
    }
    let terms = count_points(d, n, Scheme::Sparse)?;
    plan_bounds(d, terms, 0.5 * eps)
}
