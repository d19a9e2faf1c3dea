//! Multi-dimensional hierarchical basis, sparse/full index sets,
//! hierarchization, interpolant evaluation, and sup-norm error measurement.
//!
//! Index sets are truncations of the hierarchical expansion: the sparse set
//! keeps level vectors with `|l|_1 <= n + d - 1`, the full set keeps
//! `|l|_inf <= n`. Coefficients are hierarchical surpluses computed by the
//! incremental recursion (value at a node minus the coarser partial
//! interpolant there), which is exact for the truncated expansion and needs
//! only point evaluations; the integral formula for the coefficients is kept
//! as an independent quadrature oracle for cross-validation.
//!
//! Interpolants are immutable after construction and safe to share across
//! threads. Terms are ordered by `(|l|_1, l, i)` throughout, including in the
//! JSON document format, so serialized interpolants are byte-stable.

use crate::basis1d::{self, LevelIndex1D};
use crate::jsonfmt;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Deserialize;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// Index-set truncation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// `1 <= |l|_1 <= n + d - 1`
    Sparse,
    /// `1 <= |l|_inf <= n`
    Full,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Sparse => "sparse",
            Scheme::Full => "full",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(Scheme::Sparse),
            "full" => Ok(Scheme::Full),
            other => Err(Error::Format(format!("unknown scheme `{other}`"))),
        }
    }
}

/// A level vector `l` and position vector `i` identifying one hierarchical
/// basis function; positions are odd and in range per coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    levels: Vec<u32>,
    positions: Vec<u32>,
}

impl MultiIndex {
    pub fn new(levels: Vec<u32>, positions: Vec<u32>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if levels.len() != positions.len() {
            return Err(Error::DimensionMismatch {
                expected: levels.len(),
                got: positions.len(),
            });
        }
        for (&l, &i) in levels.iter().zip(&positions) {
            LevelIndex1D::hierarchical(l, i)?;
        }
        Ok(Self { levels, positions })
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    /// `|l|_1`
    pub fn level_sum(&self) -> u32 {
        self.levels.iter().sum()
    }

    /// `|l|_inf`
    pub fn level_max(&self) -> u32 {
        *self.levels.iter().max().expect("nonempty")
    }

    /// The grid node `x_{l,i}`, exact dyadic coordinates.
    pub fn point(&self) -> Vec<f64> {
        self.levels
            .iter()
            .zip(&self.positions)
            .map(|(&l, &i)| LevelIndex1D::raw(l, i).center())
            .collect()
    }

    pub fn component(&self, j: usize) -> LevelIndex1D {
        LevelIndex1D::raw(self.levels[j], self.positions[j])
    }
}

/// Ordered by `(|l|_1, l, i)`; this is the canonical term order.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level_sum()
            .cmp(&other.level_sum())
            .then_with(|| self.levels.cmp(&other.levels))
            .then_with(|| self.positions.cmp(&other.positions))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Tensor-product hat `phi_{l,i}(x) = prod_j phi_{l_j,i_j}(x_j)`.
pub fn tensor_hat(mi: &MultiIndex, x: &[f64]) -> Result<f64> {
    if x.len() != mi.dim() {
        return Err(Error::DimensionMismatch {
            expected: mi.dim(),
            got: x.len(),
        });
    }
    let mut w = 1.0;
    for (j, &xj) in x.iter().enumerate() {
        w *= basis1d::hat(mi.component(j), xj);
    }
    Ok(w)
}

fn validate_dn(d: usize, n: u32) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    if n == 0 {
        return Err(Error::InvalidResolution(n));
    }
    if n > basis1d::MAX_LEVEL {
        return Err(Error::InvalidResolution(n));
    }
    Ok(())
}

/// All admissible level vectors, ordered by `(|l|_1, l)`.
fn level_vectors(d: usize, n: u32, scheme: Scheme) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fn rec(
        j: usize,
        d: usize,
        n: u32,
        scheme: Scheme,
        budget: u32,
        cur: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if j == d {
            out.push(cur.clone());
            return;
        }
        let hi = match scheme {
            // leave at least 1 per remaining coordinate
            Scheme::Sparse => budget - (d - j - 1) as u32,
            Scheme::Full => n,
        };
        for l in 1..=hi {
            cur[j] = l;
            let rest = match scheme {
                Scheme::Sparse => budget - l,
                Scheme::Full => budget,
            };
            rec(j + 1, d, n, scheme, rest, cur, out);
        }
    }
    let budget = match scheme {
        Scheme::Sparse => n + d as u32 - 1,
        Scheme::Full => 0,
    };
    rec(0, d, n, scheme, budget, &mut cur, &mut out);
    out.sort_by_key(|l| l.iter().sum::<u32>()); // stable: keeps lex within a shell
    out
}

/// Iterate the odd-position tuples of a level vector in lexicographic order.
fn for_each_position<F: FnMut(&[u32])>(levels: &[u32], mut f: F) {
    let mut pos: Vec<u32> = vec![1; levels.len()];
    loop {
        f(&pos);
        // odometer over odd positions
        let mut j = levels.len();
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            let max = (1u64 << levels[j]) - 1;
            if (pos[j] as u64) + 2 <= max {
                pos[j] += 2;
                for p in pos.iter_mut().skip(j + 1) {
                    *p = 1;
                }
                break;
            }
        }
    }
}

/// The exact index set of the chosen scheme, in `(|l|_1, l, i)` order.
pub fn enumerate_indices(d: usize, n: u32, scheme: Scheme) -> Result<Vec<MultiIndex>> {
    validate_dn(d, n)?;
    let mut out = Vec::new();
    for levels in level_vectors(d, n, scheme) {
        for_each_position(&levels, |pos| {
            out.push(MultiIndex {
                levels: levels.clone(),
                positions: pos.to_vec(),
            });
        });
    }
    Ok(out)
}

fn binomial(a: u64, b: u64) -> Option<u128> {
    let b = b.min(a - b.min(a));
    let mut res: u128 = 1;
    for i in 1..=b {
        res = res.checked_mul((a - b + i) as u128)?;
        res /= i as u128;
    }
    Some(res)
}

/// Closed-form point counts.
///
/// Sparse: `sum_{k=0}^{n-1} 2^k C(d-1+k, d-1)`; full: `(2^n - 1)^d`.
/// Overflow is reported as an error, never wrapped.
pub fn count_points(d: usize, n: u32, scheme: Scheme) -> Result<u128> {
    validate_dn(d, n)?;
    let overflow = || Error::CountOverflow { d, n };
    match scheme {
        Scheme::Sparse => {
            let mut total: u128 = 0;
            for k in 0..n as u64 {
                let shell = binomial(d as u64 - 1 + k, d as u64 - 1).ok_or_else(overflow)?;
                let pts = 1u128 << k.min(127);
                if k >= 127 {
                    return Err(overflow());
                }
                total = total
                    .checked_add(pts.checked_mul(shell).ok_or_else(overflow)?)
                    .ok_or_else(overflow)?;
            }
            Ok(total)
        }
        Scheme::Full => {
            let per_axis = (1u128 << n) - 1;
            let mut total: u128 = 1;
            for _ in 0..d {
                total = total.checked_mul(per_axis).ok_or_else(overflow)?;
            }
            Ok(total)
        }
    }
}

/// All terms of one level vector: position tuple -> surplus coefficient.
#[derive(Debug, Clone)]
struct LevelGroup {
    levels: Vec<u32>,
    coeffs: BTreeMap<Vec<u32>, f64>,
}

/// For level `l`, the single odd position whose hat can be nonzero at `x`,
/// together with the hat value there. `None` when every hat of the level
/// vanishes at `x` (grid points of even index, the boundary, and outside
/// `[0, 1]`).
fn candidate(level: u32, x: f64) -> Option<(u32, f64)> {
    let scale = (1u64 << level) as f64;
    let t = x * scale; // exact power-of-two scaling
    if !(t > 0.0 && t < scale) {
        return None;
    }
    let fl = t.floor();
    let i = if t == fl {
        let i = fl as u64;
        if i % 2 == 1 {
            i
        } else {
            return None;
        }
    } else {
        let i0 = fl as u64;
        if i0 % 2 == 1 {
            i0
        } else {
            i0 + 1
        }
    };
    Some((i as u32, 1.0 - (t - i as f64).abs()))
}

fn eval_groups(groups: &[LevelGroup], x: &[f64], scratch: &mut Vec<u32>) -> f64 {
    let mut acc = 0.0;
    'group: for g in groups {
        scratch.clear();
        let mut w = 1.0;
        for (j, &lj) in g.levels.iter().enumerate() {
            match candidate(lj, x[j]) {
                None => continue 'group,
                Some((i, wj)) => {
                    scratch.push(i);
                    w *= wj;
                }
            }
        }
        if let Some(&v) = g.coeffs.get(scratch.as_slice()) {
            acc += v * w;
        }
    }
    acc
}

/// A finite hierarchical expansion: index set plus surplus coefficients.
#[derive(Debug, Clone)]
pub struct SparseGridInterpolant {
    dimension: usize,
    resolution: u32,
    scheme: Scheme,
    groups: Vec<LevelGroup>,
    meta: BTreeMap<String, String>,
}

impl SparseGridInterpolant {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn term_count(&self) -> usize {
        self.groups.iter().map(|g| g.coeffs.len()).sum()
    }

    /// Terms in canonical `(|l|_1, l, i)` order.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
        self.groups.iter().flat_map(|g| {
            g.coeffs.iter().map(|(pos, &v)| {
                (
                    MultiIndex {
                        levels: g.levels.clone(),
                        positions: pos.clone(),
                    },
                    v,
                )
            })
        })
    }

    pub fn coefficient(&self, mi: &MultiIndex) -> Option<f64> {
        self.groups
            .iter()
            .find(|g| g.levels == mi.levels)
            .and_then(|g| g.coeffs.get(&mi.positions).copied())
    }

    /// Grid nodes of every term, in term order.
    pub fn node_points(&self) -> Vec<Vec<f64>> {
        self.terms().map(|(mi, _)| mi.point()).collect()
    }

    /// Free-form annotations carried through serialization (CLI provenance).
    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn set_meta(&mut self, meta: BTreeMap<String, String>) {
        self.meta = meta;
    }

    /// Evaluate the expansion at `x`.
    ///
    /// Exploits that per level vector at most one basis function is nonzero
    /// at `x`, so the cost is one lookup per level vector. Summation order is
    /// the canonical term order, which keeps evaluation deterministic.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        let mut scratch = Vec::with_capacity(self.dimension);
        Ok(eval_groups(&self.groups, x, &mut scratch))
    }
}

/// Hierarchize `f` on the chosen index set.
///
/// Level vectors are processed in ascending `|l|_1`; the coefficient at a
/// node is the hierarchical surplus `f(x_{l,i})` minus the partial
/// interpolant built so far evaluated there. The result reproduces `f`
/// exactly at every included grid point. `f` must be defined on `[0,1]^d`
/// and zero on the boundary (not checked here; the harness verifies it for
/// registered functions).
pub fn hierarchize<F>(f: F, d: usize, n: u32, scheme: Scheme) -> Result<SparseGridInterpolant>
where
    F: Fn(&[f64]) -> f64,
{
    validate_dn(d, n)?;
    let mut groups: Vec<LevelGroup> = Vec::new();
    let mut scratch = Vec::with_capacity(d);
    let mut x = vec![0.0; d];
    for levels in level_vectors(d, n, scheme) {
        let spacings: Vec<f64> = levels
            .iter()
            .map(|&l| 1.0 / (1u64 << l) as f64)
            .collect();
        let mut coeffs = BTreeMap::new();
        let mut bad = false;
        for_each_position(&levels, |pos| {
            if bad {
                return;
            }
            for j in 0..d {
                x[j] = pos[j] as f64 * spacings[j];
            }
            let fx = f(&x);
            if !fx.is_finite() {
                bad = true;
                return;
            }
            // Terms of the same |l|_1 shell vanish at this node, so only
            // strictly coarser groups contribute to the partial value.
            let partial = eval_groups(&groups, &x, &mut scratch);
            coeffs.insert(pos.to_vec(), fx - partial);
        });
        if bad {
            return Err(Error::NonFinite("function evaluation"));
        }
        groups.push(LevelGroup { levels, coeffs });
    }
    Ok(SparseGridInterpolant {
        dimension: d,
        resolution: n,
        scheme,
        groups,
        meta: BTreeMap::new(),
    })
}

// 5-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Quadrature oracle for one hierarchical coefficient:
///
/// `v_{l,i} = integral over supp(phi_{l,i}) of
///            prod_j(-2^-(l_j+1) phi_{l_j,i_j}(x_j)) * d^{2d} f / dx_1^2..dx_d^2`
///
/// evaluated by composite tensor Gauss-Legendre quadrature with
/// `quadrature_cells` cells per half-axis, so the hat kinks fall on cell
/// boundaries. Used only to cross-validate `hierarchize`; requires the mixed
/// derivative in closed form.
pub fn coefficient_integral_oracle<F>(
    mixed_deriv: F,
    mi: &MultiIndex,
    quadrature_cells: usize,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if quadrature_cells < 1 {
        return Err(Error::InvalidQuadratureCells);
    }
    let d = mi.dim();
    let cells_per_axis = 2 * quadrature_cells;
    // Precompute per-axis sample abscissae and weighted basis factors.
    let mut axis_nodes: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut axis_factors: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let li = mi.component(j);
        let h = li.spacing();
        let c = li.center();
        let lo = c - h;
        let width = h / quadrature_cells as f64;
        let mut nodes = Vec::with_capacity(cells_per_axis * 5);
        let mut factors = Vec::with_capacity(cells_per_axis * 5);
        let scale = -(0.5 * h); // -2^-(l_j + 1)
        for m in 0..cells_per_axis {
            let a = lo + m as f64 * width;
            let mid = a + 0.5 * width;
            for q in 0..5 {
                let xq = mid + 0.5 * width * GL_NODES[q];
                let wq = 0.5 * width * GL_WEIGHTS[q];
                nodes.push(xq);
                factors.push(wq * scale * basis1d::hat(li, xq));
            }
        }
        axis_nodes.push(nodes);
        axis_factors.push(factors);
    }
    // Tensor sum over all sample tuples.
    let per_axis = cells_per_axis * 5;
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for j in 0..d {
            x[j] = axis_nodes[j][idx[j]];
            w *= axis_factors[j][idx[j]];
        }
        total += w * mixed_deriv(&x);
        let mut j = d;
        loop {
            if j == 0 {
                return Ok(total);
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// Where to sample when estimating sup-norm deviations.
///
/// `auto` follows the study convention: for `d <= 3` a dense uniform tensor
/// grid with `2^(n+2) + 1` points per axis; for `d >= 4` a Halton sequence of
/// `10^5` points plus all grid nodes of the interpolant under test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SamplingPlan {
    DenseGrid { points_per_axis: usize },
    Hybrid { samples: usize },
}

impl SamplingPlan {
    pub fn auto(d: usize, n: u32) -> SamplingPlan {
        if d <= 3 {
            SamplingPlan::DenseGrid {
                points_per_axis: (1usize << (n + 2)) + 1,
            }
        } else {
            SamplingPlan::Hybrid { samples: 100_000 }
        }
    }
}

const HALTON_PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Max of `|a(x) - b(x)|` over the plan's points plus `extra` points.
///
/// This samples, so it is a lower bound on the true sup-norm deviation.
pub fn max_abs_deviation<A, B>(
    plan: &SamplingPlan,
    d: usize,
    extra: &[Vec<f64>],
    a: A,
    b: B,
) -> f64
where
    A: Fn(&[f64]) -> f64 + Sync,
    B: Fn(&[f64]) -> f64 + Sync,
{
    let sampled = match *plan {
        SamplingPlan::DenseGrid { points_per_axis } => {
            let p = points_per_axis as u64;
            let total = p.pow(d as u32);
            let step = 1.0 / (p - 1) as f64;
            (0..total)
                .into_par_iter()
                .fold(
                    || (0.0_f64, vec![0.0; d]),
                    |(mut best, mut x), mut k| {
                        for xj in x.iter_mut() {
                            *xj = (k % p) as f64 * step;
                            k /= p;
                        }
                        best = best.max((a(&x) - b(&x)).abs());
                        (best, x)
                    },
                )
                .map(|(best, _)| best)
                .reduce(|| 0.0, f64::max)
        }
        SamplingPlan::Hybrid { samples } => (1..=samples as u64)
            .into_par_iter()
            .fold(
                || (0.0_f64, vec![0.0; d]),
                |(mut best, mut x), k| {
                    for (j, xj) in x.iter_mut().enumerate() {
                        *xj = halton(k, HALTON_PRIMES[j % HALTON_PRIMES.len()]);
                    }
                    best = best.max((a(&x) - b(&x)).abs());
                    (best, x)
                },
            )
            .map(|(best, _)| best)
            .reduce(|| 0.0, f64::max),
    };
    let mut best = sampled;
    for x in extra {
        best = best.max((a(x) - b(x)).abs());
    }
    best
}

/// Empirical sup-norm interpolation error `max |f(x) - interpolant(x)|` over
/// the sampling plan (a lower bound on the true sup norm).
pub fn sup_error<F>(f: F, interp: &SparseGridInterpolant, plan: &SamplingPlan) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = interp.dimension();
    let extra = match plan {
        SamplingPlan::Hybrid { .. } => interp.node_points(),
        SamplingPlan::DenseGrid { .. } => Vec::new(),
    };
    max_abs_deviation(plan, d, &extra, f, |x| {
        let mut scratch = Vec::with_capacity(d);
        eval_groups(&interp.groups, x, &mut scratch)
    })
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

pub const GRID_FORMAT_VERSION: u32 = 1;

impl SparseGridInterpolant {
    /// Serialize to the interpolant document format. Deterministic: canonical
    /// term order, 17-significant-digit numbers.
    pub fn to_json_string(&self) -> Result<String> {
        let mut s = String::new();
        s.push_str("{\"version\":");
        s.push_str(&GRID_FORMAT_VERSION.to_string());
        s.push_str(",\"d\":");
        s.push_str(&self.dimension.to_string());
        s.push_str(",\"n\":");
        s.push_str(&self.resolution.to_string());
        s.push_str(",\"scheme\":\"");
        s.push_str(self.scheme.as_str());
        s.push('"');
        if !self.meta.is_empty() {
            s.push_str(",\"meta\":{");
            for (k, (key, value)) in self.meta.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                jsonfmt::push_str(&mut s, key);
                s.push(':');
                jsonfmt::push_str(&mut s, value);
            }
            s.push('}');
        }
        s.push_str(",\"terms\":[");
        let mut first = true;
        for g in &self.groups {
            for (pos, &v) in &g.coeffs {
                if !first {
                    s.push(',');
                }
                first = false;
                s.push_str("\n{\"l\":[");
                for (j, l) in g.levels.iter().enumerate() {
                    if j > 0 {
                        s.push(',');
                    }
                    s.push_str(&l.to_string());
                }
                s.push_str("],\"i\":[");
                for (j, i) in pos.iter().enumerate() {
                    if j > 0 {
                        s.push(',');
                    }
                    s.push_str(&i.to_string());
                }
                s.push_str("],\"v\":");
                jsonfmt::push_f64(&mut s, v)?;
                s.push('}');
            }
        }
        s.push_str("\n]}\n");
        Ok(s)
    }

    /// Parse and validate an interpolant document.
    pub fn from_json_str(doc: &str) -> Result<SparseGridInterpolant> {
        #[derive(Deserialize)]
        struct TermDoc {
            l: Vec<u32>,
            i: Vec<u32>,
            v: f64,
        }
        #[derive(Deserialize)]
        struct GridDoc {
            version: u32,
            d: usize,
            n: u32,
            scheme: String,
            #[serde(default)]
            meta: BTreeMap<String, String>,
            terms: Vec<TermDoc>,
        }
        let doc: GridDoc =
            serde_json::from_str(doc).map_err(|e| Error::Format(format!("grid document: {e}")))?;
        if doc.version != GRID_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported grid format version {} (expected {GRID_FORMAT_VERSION})",
                doc.version
            )));
        }
        let scheme: Scheme = doc.scheme.parse()?;
        validate_dn(doc.d, doc.n)?;
        let expected = count_points(doc.d, doc.n, scheme)?;
        if doc.terms.len() as u128 != expected {
            return Err(Error::Format(format!(
                "term count {} does not match the {} scheme at d = {}, n = {} (expected {expected})",
                doc.terms.len(),
                scheme,
                doc.d,
                doc.n
            )));
        }
        let mut entries: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for t in doc.terms {
            if !t.v.is_finite() {
                return Err(Error::Format("non-finite coefficient".into()));
            }
            let mi = MultiIndex::new(t.l, t.i)
                .map_err(|e| Error::Format(format!("bad term index: {e}")))?;
            if mi.dim() != doc.d {
                return Err(Error::Format(format!(
                    "term dimension {} does not match d = {}",
                    mi.dim(),
                    doc.d
                )));
            }
            #[allow(clippy::int_plus_one)] // the |l|_1 <= n + d - 1 membership rule
            let member = match scheme {
                Scheme::Sparse => mi.level_sum() <= doc.n + doc.d as u32 - 1,
                Scheme::Full => mi.level_max() <= doc.n,
            };
            if !member {
                return Err(Error::Format(format!(
                    "term level vector {:?} outside the {} index set",
                    mi.levels(),
                    scheme
                )));
            }
            if entries.insert(mi, t.v).is_some() {
                return Err(Error::Format("duplicate term".into()));
            }
        }
        // Regroup in canonical order (BTreeMap iteration is already sorted).
        let mut groups: Vec<LevelGroup> = Vec::new();
        for (mi, v) in entries {
            match groups.last_mut() {
                Some(g) if g.levels == mi.levels => {
                    g.coeffs.insert(mi.positions, v);
                }
                _ => {
                    let mut coeffs = BTreeMap::new();
                    let levels = mi.levels.clone();
                    coeffs.insert(mi.positions, v);
                    groups.push(LevelGroup { levels, coeffs });
                }
            }
        }
        Ok(SparseGridInterpolant {
            dimension: doc.d,
            resolution: doc.n,
            scheme,
            groups,
            meta: doc.meta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parabola(x: &[f64]) -> f64 {
        x.iter().map(|&t| t * (1.0 - t)).product()
    }

    #[test]
    fn tensor_hat_values() {
        let mi = MultiIndex::new(vec![1, 1], vec![1, 1]).unwrap();
        assert_eq!(tensor_hat(&mi, &[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(tensor_hat(&mi, &[0.5, 0.0]).unwrap(), 0.0);
        let mi = MultiIndex::new(vec![2, 1], vec![1, 1]).unwrap();
        assert_eq!(tensor_hat(&mi, &[0.375, 0.25]).unwrap(), 0.25);
        assert!(tensor_hat(&mi, &[0.5]).is_err());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_indices(2, 3, Scheme::Sparse).unwrap().len(), 17);
        assert_eq!(enumerate_indices(2, 3, Scheme::Full).unwrap().len(), 49);
        assert_eq!(enumerate_indices(1, 3, Scheme::Sparse).unwrap().len(), 7);
        assert_eq!(enumerate_indices(3, 1, Scheme::Sparse).unwrap().len(), 1);
        assert!(enumerate_indices(0, 3, Scheme::Sparse).is_err());
        assert!(enumerate_indices(2, 0, Scheme::Sparse).is_err());
    }

    #[test]
    fn closed_form_counts() {
        assert_eq!(count_points(2, 3, Scheme::Sparse).unwrap(), 17);
        assert_eq!(count_points(2, 3, Scheme::Full).unwrap(), 49);
        assert_eq!(count_points(3, 1, Scheme::Sparse).unwrap(), 1);
        // 1 + 2*2 + 4*3 = 17
        for d in 1..=4 {
            for n in 1..=6 {
                let c = count_points(d, n, Scheme::Sparse).unwrap();
                let e = enumerate_indices(d, n, Scheme::Sparse).unwrap();
                assert_eq!(c, e.len() as u128, "sparse d={d} n={n}");
            }
        }
        for (d, n) in [(1, 6), (2, 5), (3, 3)] {
            let c = count_points(d, n, Scheme::Full).unwrap();
            let e = enumerate_indices(d, n, Scheme::Full).unwrap();
            assert_eq!(c, e.len() as u128, "full d={d} n={n}");
        }
    }

    #[test]
    fn enumeration_order_is_canonical() {
        let idx = enumerate_indices(2, 3, Scheme::Sparse).unwrap();
        let mut sorted = idx.clone();
        sorted.sort();
        assert_eq!(idx, sorted);
        assert_eq!(idx[0], MultiIndex::new(vec![1, 1], vec![1, 1]).unwrap());
    }

    #[test]
    fn surplus_values_1d() {
        let interp = hierarchize(parabola, 1, 1, Scheme::Sparse).unwrap();
        let mi = MultiIndex::new(vec![1], vec![1]).unwrap();
        assert_eq!(interp.coefficient(&mi), Some(0.25));

        let interp = hierarchize(parabola, 1, 2, Scheme::Sparse).unwrap();
        // independent surplus: f(0.25) - 0.5 * f(0.5) = 0.1875 - 0.125
        let oracle = parabola(&[0.25]) - 0.5 * parabola(&[0.5]);
        assert_eq!(oracle, 0.0625);
        let mi = MultiIndex::new(vec![2], vec![1]).unwrap();
        assert_eq!(interp.coefficient(&mi), Some(0.0625));
    }

    #[test]
    fn reproduces_basis_function() {
        let target = MultiIndex::new(vec![1, 1], vec![1, 1]).unwrap();
        let t = target.clone();
        let interp = hierarchize(
            move |x| tensor_hat(&t, x).unwrap(),
            2,
            3,
            Scheme::Sparse,
        )
        .unwrap();
        for (mi, v) in interp.terms() {
            if mi == target {
                assert_eq!(v, 1.0);
            } else {
                assert_eq!(v, 0.0, "coefficient at {mi:?}");
            }
        }
    }

    #[test]
    fn interpolation_property() {
        for scheme in [Scheme::Sparse, Scheme::Full] {
            let interp = hierarchize(parabola, 2, 4, scheme).unwrap();
            for (mi, _) in interp.terms() {
                let x = mi.point();
                let diff = (interp.evaluate(&x).unwrap() - parabola(&x)).abs();
                assert!(diff <= 1e-12, "node {x:?} diff {diff}");
            }
        }
    }

    #[test]
    fn evaluate_matches_examples() {
        let interp = hierarchize(parabola, 1, 2, Scheme::Sparse).unwrap();
        assert_eq!(interp.evaluate(&[0.25]).unwrap(), 0.1875);
        assert_eq!(interp.evaluate(&[0.0]).unwrap(), 0.0);
        assert_eq!(interp.evaluate(&[1.0]).unwrap(), 0.0);
        assert!(interp.evaluate(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn nestedness_bitwise() {
        for d in [1usize, 2, 3] {
            let coarse = hierarchize(parabola, d, 3, Scheme::Sparse).unwrap();
            let fine = hierarchize(parabola, d, 4, Scheme::Sparse).unwrap();
            for (mi, v) in coarse.terms() {
                let w = fine.coefficient(&mi).expect("nested index present");
                assert_eq!(v.to_bits(), w.to_bits(), "coefficient at {mi:?}");
            }
        }
    }

    #[test]
    fn coefficient_decay_parabola() {
        // |f|_{2,inf} = 2^d for the product parabola; the bound is attained.
        for d in [1usize, 2] {
            let seminorm = 2f64.powi(d as i32);
            let interp = hierarchize(parabola, d, 5, Scheme::Sparse).unwrap();
            for (mi, v) in interp.terms() {
                let bound = 2f64.powi(-(d as i32)) * 2f64.powi(-2 * mi.level_sum() as i32)
                    * seminorm;
                assert!(v.abs() <= bound + 1e-12, "decay at {mi:?}: {v} vs {bound}");
            }
        }
    }

    #[test]
    fn integral_oracle_1d() {
        // f = x(1-x), f'' = -2: v_{1,1} = 0.25, v_{2,1} = 0.0625.
        let mi = MultiIndex::new(vec![1], vec![1]).unwrap();
        let v = coefficient_integral_oracle(|_| -2.0, &mi, 4).unwrap();
        assert!((v - 0.25).abs() < 1e-12, "{v}");
        let mi = MultiIndex::new(vec![2], vec![1]).unwrap();
        let v = coefficient_integral_oracle(|_| -2.0, &mi, 4).unwrap();
        assert!((v - 0.0625).abs() < 1e-12, "{v}");
        // zero mixed derivative integrates to zero
        let v = coefficient_integral_oracle(|_| 0.0, &mi, 4).unwrap();
        assert_eq!(v, 0.0);
        assert!(coefficient_integral_oracle(|_| 0.0, &mi, 0).is_err());
    }

    #[test]
    fn integral_oracle_matches_hierarchize_2d() {
        let interp = hierarchize(parabola, 2, 4, Scheme::Sparse).unwrap();
        for (mi, v) in interp.terms() {
            if mi.level_sum() > 5 {
                continue;
            }
            let o = coefficient_integral_oracle(|_| 4.0, &mi, 4).unwrap();
            assert!((o - v).abs() < 1e-10, "{mi:?}: oracle {o} vs surplus {v}");
        }
    }

    #[test]
    fn sup_error_exact_reproduction() {
        let target = MultiIndex::new(vec![2], vec![3]).unwrap();
        let t = target.clone();
        let f = move |x: &[f64]| tensor_hat(&t, x).unwrap();
        let interp = hierarchize(&f, 1, 3, Scheme::Sparse).unwrap();
        let e = sup_error(&f, &interp, &SamplingPlan::auto(1, 3));
        assert!(e <= 1e-15, "{e}");
    }

    #[test]
    fn sup_error_parabola_rate() {
        // 1-D piecewise-linear interpolation of a parabola: error h^2/4.
        for n in 1..=6 {
            let interp = hierarchize(parabola, 1, n, Scheme::Sparse).unwrap();
            let e = sup_error(parabola, &interp, &SamplingPlan::auto(1, n));
            let exact = 2f64.powi(-(2 * n as i32) - 2);
            assert!((e - exact).abs() <= 1e-12, "n={n}: {e} vs {exact}");
        }
    }

    #[test]
    fn hybrid_plan_includes_grid_nodes() {
        let interp = hierarchize(parabola, 4, 2, Scheme::Sparse).unwrap();
        let e = sup_error(parabola, &interp, &SamplingPlan::Hybrid { samples: 1000 });
        assert!(e > 0.0 && e < 0.1, "{e}");
    }

    #[test]
    fn hierarchize_rejects_non_finite() {
        let r = hierarchize(|x| 1.0 / (x[0] - 0.5), 1, 2, Scheme::Sparse);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn document_round_trip_bitwise() {
        let interp = hierarchize(parabola, 2, 3, Scheme::Sparse).unwrap();
        let doc = interp.to_json_string().unwrap();
        let back = SparseGridInterpolant::from_json_str(&doc).unwrap();
        assert_eq!(back.term_count(), interp.term_count());
        for ((a, va), (b, vb)) in interp.terms().zip(back.terms()) {
            assert_eq!(a, b);
            assert_eq!(va.to_bits(), vb.to_bits());
        }
        // byte-stable re-serialization
        assert_eq!(doc, back.to_json_string().unwrap());
    }

    #[test]
    fn document_rejects_malformed() {
        let interp = hierarchize(parabola, 2, 2, Scheme::Sparse).unwrap();
        let doc = interp.to_json_string().unwrap();
        let wrong_version = doc.replace("\"version\":1", "\"version\":2");
        assert!(SparseGridInterpolant::from_json_str(&wrong_version).is_err());
        let wrong_count = doc.replace("\"n\":2", "\"n\":3");
        assert!(SparseGridInterpolant::from_json_str(&wrong_count).is_err());
        assert!(SparseGridInterpolant::from_json_str("{}").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn boundary_evaluations_vanish(n in 1u32..=4, face in 0usize..4, t in 0.0f64..=1.0) {
            let interp = hierarchize(parabola, 2, n, Scheme::Sparse).unwrap();
            let x = match face {
                0 => [0.0, t],
                1 => [1.0, t],
                2 => [t, 0.0],
                _ => [t, 1.0],
            };
            prop_assert_eq!(interp.evaluate(&x).unwrap(), 0.0);
        }

        #[test]
        fn grouped_eval_matches_direct_sum(n in 1u32..=4, x0 in 0.0f64..=1.0, x1 in 0.0f64..=1.0) {
            let interp = hierarchize(parabola, 2, n, Scheme::Sparse).unwrap();
            let x = [x0, x1];
            let direct: f64 = interp
                .terms()
                .map(|(mi, v)| v * tensor_hat(&mi, &x).unwrap())
                .sum();
            let fast = interp.evaluate(&x).unwrap();
            prop_assert!((fast - direct).abs() <= 1e-12);
        }
    }
}
