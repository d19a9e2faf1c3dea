//! Test-function registry with analytic smoothness data, convergence and
//! scaling studies, slope fitting, and the self-test driver behind the CLI's
//! `selftest` subcommand.
//!
//! Registered functions vanish on the boundary of `[0, 1]^d` (verified at
//! registration) and, where they are smooth products, carry their mixed
//! second derivative in closed form together with the analytic seminorm
//! `|f|_{2,inf}` of the unnormalized function. Normalization to unit
//! seminorm is applied explicitly where a study requires it.
//!
//! Study rows are independent and deterministically ordered by their control
//! value; the CSV output carries `{control, N, sup_error, depth, size,
//! wall_ms}` and a JSON sidecar records the full configuration and seed.
//! Wall-clock columns are the one intentionally nondeterministic output.

use crate::constructions::compile_sparse_grid_net;
use crate::sparse_grid::{
    hierarchize, max_abs_deviation, sup_error, tensor_hat, MultiIndex, SamplingPlan, Scheme,
    SparseGridInterpolant,
};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

pub mod selftest;

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A registered target function with analytic smoothness data.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    dimension: usize,
    eval: PointFn,
    mixed_deriv: Option<PointFn>,
    seminorm: Option<f64>,
    boundary_zero: bool,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("seminorm", &self.seminorm)
            .field("boundary_zero", &self.boundary_zero)
            .finish()
    }
}

impl TestFunction {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Closed-form `d^{2d} f / dx_1^2 .. dx_d^2`, present for the smooth
    /// product families.
    pub fn mixed_deriv(&self, x: &[f64]) -> Option<f64> {
        self.mixed_deriv.as_ref().map(|g| g(x))
    }

    pub fn has_mixed_deriv(&self) -> bool {
        self.mixed_deriv.is_some()
    }

    /// Analytic `|f|_{2,inf}` of the function as registered, where known.
    pub fn seminorm(&self) -> Option<f64> {
        self.seminorm
    }

    pub fn boundary_zero(&self) -> bool {
        self.boundary_zero
    }

    /// The function scaled to unit seminorm. Errors when no analytic
    /// seminorm is declared.
    pub fn normalized(&self) -> Result<TestFunction> {
        let s = self
            .seminorm
            .ok_or_else(|| Error::NoSeminorm(self.name.clone()))?;
        let eval = self.eval.clone();
        let mixed = self.mixed_deriv.clone();
        Ok(TestFunction {
            name: self.name.clone(),
            dimension: self.dimension,
            eval: Arc::new(move |x| eval(x) / s),
            mixed_deriv: mixed.map(|g| Arc::new(move |x: &[f64]| g(x) / s) as PointFn),
            seminorm: Some(1.0),
            boundary_zero: self.boundary_zero,
        })
    }
}

/// Check a claimed boundary-zero function at `samples` random boundary
/// points; rejects violations beyond `1e-12`.
fn verify_boundary_zero(tf: &TestFunction, samples: usize, seed: u64) -> Result<()> {
    let d = tf.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; d];
    for _ in 0..samples {
        for xj in x.iter_mut() {
            *xj = rng.gen_range(0.0..1.0);
        }
        let face = rng.gen_range(0..d);
        x[face] = if rng.gen_bool(0.5) { 0.0 } else { 1.0 };
        let v = tf.eval(&x);
        if v.abs() > 1e-12 {
            return Err(Error::BoundaryViolation {
                name: tf.name.clone(),
                value: v,
            });
        }
    }
    Ok(())
}

/// The registered test functions instantiated at dimension `d`:
///
/// - `poly2`: `prod_j x_j (1 - x_j)` with seminorm `2^d` and constant mixed
///   derivative `(-2)^d`,
/// - `sinprod`: `prod_j sin(pi x_j)` with seminorm `pi^{2d}`,
/// - `basis`: the tensor hat at `l = (1,..), i = (1,..)`, an
///   exact-reproduction control without analytic smoothness data.
///
/// Every entry is verified to vanish on the boundary before being returned.
pub fn registry(d: usize) -> Result<Vec<TestFunction>> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    let poly2 = TestFunction {
        name: "poly2".to_string(),
        dimension: d,
        eval: Arc::new(|x| x.iter().map(|&t| t * (1.0 - t)).product()),
        mixed_deriv: Some(Arc::new(move |x: &[f64]| (-2.0f64).powi(x.len() as i32))),
        seminorm: Some(2f64.powi(d as i32)),
        boundary_zero: true,
    };
    let sinprod = TestFunction {
        name: "sinprod".to_string(),
        dimension: d,
        eval: Arc::new(|x| x.iter().map(|&t| (PI * t).sin()).product()),
        mixed_deriv: Some(Arc::new(|x: &[f64]| {
            x.iter().map(|&t| -PI * PI * (PI * t).sin()).product()
        })),
        seminorm: Some(PI.powi(2 * d as i32)),
        boundary_zero: true,
    };
    let center = MultiIndex::new(vec![1; d], vec![1; d]).expect("center index is valid");
    let basis = TestFunction {
        name: "basis".to_string(),
        dimension: d,
        eval: Arc::new(move |x| tensor_hat(&center, x).expect("dimension matches")),
        mixed_deriv: None,
        seminorm: None,
        boundary_zero: true,
    };
    let functions = vec![poly2, sinprod, basis];
    for tf in &functions {
        verify_boundary_zero(tf, 1000, 7)?;
    }
    Ok(functions)
}

/// Look up a registry entry by name at dimension `d`.
pub fn lookup(name: &str, d: usize) -> Result<TestFunction> {
    registry(d)?
        .into_iter()
        .find(|tf| tf.name == name)
        .ok_or_else(|| Error::UnknownFunction(name.to_string()))
}

/// Outcome of re-checking a stored interpolant against its source function.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    /// Max `|interpolant - f|` over every grid node (tol 1e-12).
    pub max_node_deviation: f64,
    /// Max `|interpolant|` over sampled boundary points (tol 1e-12).
    pub max_boundary_value: f64,
    /// Max `|v| - bound` over all coefficients, when the function declares
    /// an analytic seminorm.
    pub max_decay_excess: Option<f64>,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Re-check the interpolation property, boundary behaviour, and (where
/// smoothness data exists) coefficient decay of a stored interpolant.
pub fn verify_interpolant(
    tf: &TestFunction,
    interp: &SparseGridInterpolant,
    samples: usize,
    seed: u64,
) -> Result<VerifyReport> {
    if tf.dimension() != interp.dimension() {
        return Err(Error::DimensionMismatch {
            expected: interp.dimension(),
            got: tf.dimension(),
        });
    }
    let d = interp.dimension();
    let mut failures = Vec::new();

    let mut max_node_deviation = 0.0f64;
    for (mi, _) in interp.terms() {
        let x = mi.point();
        max_node_deviation = max_node_deviation.max((interp.evaluate(&x)? - tf.eval(&x)).abs());
    }
    if max_node_deviation > 1e-12 {
        failures.push(format!(
            "interpolation property violated: max node deviation {max_node_deviation:e}"
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_boundary_value = 0.0f64;
    let mut x = vec![0.0; d];
    for _ in 0..samples {
        for xj in x.iter_mut() {
            *xj = rng.gen_range(0.0..1.0);
        }
        let face = rng.gen_range(0..d);
        x[face] = if rng.gen_bool(0.5) { 0.0 } else { 1.0 };
        max_boundary_value = max_boundary_value.max(interp.evaluate(&x)?.abs());
    }
    if max_boundary_value > 1e-12 {
        failures.push(format!(
            "boundary values not zero: max |value| {max_boundary_value:e}"
        ));
    }

    let max_decay_excess = tf.seminorm().map(|s| {
        interp
            .terms()
            .map(|(mi, v)| {
                v.abs()
                    - 2f64.powi(-(d as i32)) * 2f64.powi(-2 * mi.level_sum() as i32) * s
            })
            .fold(f64::NEG_INFINITY, f64::max)
    });
    if let Some(excess) = max_decay_excess {
        if excess > 1e-12 {
            failures.push(format!("coefficient decay violated: max excess {excess:e}"));
        }
    }

    Ok(VerifyReport {
        max_node_deviation,
        max_boundary_value,
        max_decay_excess,
        failures,
    })
}

/// One study measurement.
#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    /// Resolution `n` or accuracy `eps`, depending on the study.
    pub control: f64,
    /// Grid points (interpolant term count).
    #[serde(serialize_with = "ser_u128")]
    pub points: u128,
    pub sup_error: f64,
    pub depth: usize,
    pub size: usize,
    pub wall_ms: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn ser_u128<S: serde::Serializer>(v: &u128, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Full study configuration, recorded in the JSON sidecar.
#[derive(Debug, Clone, Serialize)]
pub struct StudyConfig {
    pub study: String,
    pub function: String,
    pub dimension: usize,
    pub scheme: String,
    pub controls: Vec<f64>,
    pub seed: u64,
    pub max_n: u32,
    pub tool_version: String,
}

/// Rows of a convergence or scaling study, sorted by control value.
#[derive(Debug, Clone, Serialize)]
pub struct StudyTable {
    pub config: StudyConfig,
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    /// CSV body with header `control,N,sup_error,depth,size,wall_ms`.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Format(format!("csv: {e}"));
        w.write_record(["control", "N", "sup_error", "depth", "size", "wall_ms"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                format!("{:.16e}", r.control),
                r.points.to_string(),
                format!("{:.16e}", r.sup_error),
                r.depth.to_string(),
                r.size.to_string(),
                r.wall_ms.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Format(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(format!("csv: {e}")))
    }

    /// JSON sidecar with the full configuration, seed, and annotated rows.
    pub fn sidecar_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(format!("sidecar: {e}")))
    }
}

/// Hierarchize `tf` at each resolution and record the measured sup error.
pub fn grid_convergence_study(
    tf: &TestFunction,
    n_range: &[u32],
    scheme: Scheme,
    seed: u64,
) -> Result<StudyTable> {
    if n_range.is_empty() || n_range.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DegenerateFit(
            "resolution range must be nonempty ascending",
        ));
    }
    let d = tf.dimension();
    let mut rows = Vec::with_capacity(n_range.len());
    for &n in n_range {
        let t0 = Instant::now();
        let interp = hierarchize(|x| tf.eval(x), d, n, scheme)?;
        let err = sup_error(|x| tf.eval(x), &interp, &SamplingPlan::auto(d, n));
        rows.push(StudyRow {
            control: n as f64,
            points: interp.term_count() as u128,
            sup_error: err,
            depth: 0,
            size: 0,
            wall_ms: t0.elapsed().as_millis(),
            note: None,
        });
    }
    Ok(StudyTable {
        config: StudyConfig {
            study: "grid-convergence".to_string(),
            function: tf.name().to_string(),
            dimension: d,
            scheme: scheme.to_string(),
            controls: n_range.iter().map(|&n| n as f64).collect(),
            seed,
            max_n: *n_range.last().expect("nonempty"),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        rows,
    })
}

/// Smallest resolution whose measured grid error meets `target`, together
/// with the interpolant and the measured error. Measuring instead of using
/// the rate bound realizes the half-accuracy split without the bound's
/// unquantified constants.
pub fn auto_resolution(
    tf: &TestFunction,
    target: f64,
    max_n: u32,
    scheme: Scheme,
) -> Result<(u32, SparseGridInterpolant, f64)> {
    let d = tf.dimension();
    for n in 1..=max_n {
        let interp = hierarchize(|x| tf.eval(x), d, n, scheme)?;
        let err = sup_error(|x| tf.eval(x), &interp, &SamplingPlan::auto(d, n));
        if err <= target {
            return Ok((n, interp, err));
        }
    }
    Err(Error::ResolutionCapReached { cap: max_n, target })
}

/// For each accuracy: auto-select the grid, compile the network at
/// `delta = eps/2`, and measure the end-to-end sup error against the
/// normalized function together with the network statistics.
///
/// A row whose resolution search hits the cap is reported with a note
/// instead of aborting the study; a row whose measured error exceeds its
/// accuracy is annotated likewise.
pub fn network_scaling_study(
    tf: &TestFunction,
    eps_list: &[f64],
    max_n: u32,
    seed: u64,
) -> Result<StudyTable> {
    if eps_list.is_empty()
        || eps_list.iter().any(|&e| !(e > 0.0 && e < 1.0))
        || eps_list.windows(2).any(|w| w[0] <= w[1])
    {
        return Err(Error::DegenerateFit(
            "accuracy list must be nonempty, descending, within (0, 1)",
        ));
    }
    let nf = tf.normalized()?;
    let d = nf.dimension();
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let t0 = Instant::now();
        match auto_resolution(&nf, 0.5 * eps, max_n, Scheme::Sparse) {
            Ok((n, interp, _grid_err)) => {
                let net = compile_sparse_grid_net(&interp, eps)?;
                let plan = SamplingPlan::auto(d, n);
                let total = max_abs_deviation(
                    &plan,
                    d,
                    &[],
                    |x| nf.eval(x),
                    |x| net.eval_scalar(x).expect("dimension matches"),
                );
                let stats = net.stats();
                rows.push(StudyRow {
                    control: eps,
                    points: interp.term_count() as u128,
                    sup_error: total,
                    depth: stats.depth,
                    size: stats.size,
                    wall_ms: t0.elapsed().as_millis(),
                    note: (total > eps)
                        .then(|| format!("error bound exceeded: {total:.3e} > {eps:.3e}")),
                });
            }
            Err(Error::ResolutionCapReached { cap, target }) => {
                rows.push(StudyRow {
                    control: eps,
                    points: 0,
                    sup_error: f64::NAN,
                    depth: 0,
                    size: 0,
                    wall_ms: t0.elapsed().as_millis(),
                    note: Some(format!(
                        "resolution cap {cap} reached before grid error {target:.3e}"
                    )),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(StudyTable {
        config: StudyConfig {
            study: "network-scaling".to_string(),
            function: tf.name().to_string(),
            dimension: d,
            scheme: Scheme::Sparse.to_string(),
            controls: eps_list.to_vec(),
            seed,
            max_n,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        rows,
    })
}

/// Least-squares slope of `log2 y` against `log2 x`.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the positivity check
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::DegenerateFit("need at least 3 matched points"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateFit(
            "log-log fit requires positive finite data",
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.log2()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log2()).collect();
    let (slope, _, _) = affine_ls(&lx, &ly)?;
    Ok(slope)
}

/// Least-squares affine fit `y ~ a x + b`; returns `(a, b, r_squared)`.
pub fn fit_affine(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::DegenerateFit("need at least 3 matched points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("fit requires finite data"));
    }
    affine_ls(xs, ys)
}

fn affine_ls(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("abscissae coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok((slope, intercept, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse_grid::count_points;

    #[test]
    fn registry_entries() {
        let fns = registry(2).unwrap();
        let names: Vec<&str> = fns.iter().map(|f| f.name()).collect();
        assert_eq!(names, ["poly2", "sinprod", "basis"]);
        for f in &fns {
            assert!(f.boundary_zero());
        }
        // pre-normalization seminorms
        let poly2 = lookup("poly2", 1).unwrap();
        assert_eq!(poly2.seminorm(), Some(2.0));
        let sinprod = lookup("sinprod", 2).unwrap();
        assert!((sinprod.seminorm().unwrap() - PI.powi(4)).abs() < 1e-12);
        assert!(lookup("nope", 2).is_err());
    }

    #[test]
    fn normalization_scales_to_unit_seminorm() {
        let poly2 = lookup("poly2", 2).unwrap();
        let nf = poly2.normalized().unwrap();
        assert_eq!(nf.seminorm(), Some(1.0));
        let x = [0.3, 0.7];
        assert!((nf.eval(&x) - poly2.eval(&x) / 4.0).abs() < 1e-15);
        assert!((nf.mixed_deriv(&x).unwrap() - 1.0).abs() < 1e-12);
        let basis = lookup("basis", 2).unwrap();
        assert!(basis.normalized().is_err());
    }

    #[test]
    fn boundary_violations_are_rejected() {
        let shifted = TestFunction {
            name: "shifted".to_string(),
            dimension: 1,
            eval: Arc::new(|x| x[0] + 0.5),
            mixed_deriv: None,
            seminorm: None,
            boundary_zero: true,
        };
        assert!(verify_boundary_zero(&shifted, 100, 1).is_err());
    }

    #[test]
    fn convergence_study_poly2_1d() {
        let tf = lookup("poly2", 1).unwrap();
        let ns: Vec<u32> = (1..=6).collect();
        let table = grid_convergence_study(&tf, &ns, Scheme::Sparse, 0).unwrap();
        for (row, &n) in table.rows.iter().zip(&ns) {
            let exact = 2f64.powi(-2 * n as i32 - 2);
            assert!(
                (row.sup_error - exact).abs() <= 1e-12,
                "n={n}: {}",
                row.sup_error
            );
            assert_eq!(row.points, count_points(1, n, Scheme::Sparse).unwrap());
        }
        // strictly decreasing for the smooth family
        for w in table.rows.windows(2) {
            assert!(w[1].sup_error < w[0].sup_error);
        }
    }

    #[test]
    fn convergence_study_basis_target_is_exact() {
        let tf = lookup("basis", 2).unwrap();
        let table = grid_convergence_study(&tf, &[1, 2, 3], Scheme::Sparse, 0).unwrap();
        for row in &table.rows {
            assert!(row.sup_error <= 1e-15, "{}", row.sup_error);
        }
    }

    #[test]
    fn sparse_vs_full_comparison() {
        // equal n: sparse error within 10x of full error on far fewer points
        let tf = lookup("poly2", 2).unwrap();
        for n in 2..=5 {
            let sparse = grid_convergence_study(&tf, &[n], Scheme::Sparse, 0).unwrap();
            let full = grid_convergence_study(&tf, &[n], Scheme::Full, 0).unwrap();
            let (se, fe) = (sparse.rows[0].sup_error, full.rows[0].sup_error);
            assert!(se <= 10.0 * fe, "n={n}: sparse {se} vs full {fe}");
            assert!(sparse.rows[0].points < full.rows[0].points);
        }
    }

    #[test]
    fn fit_exponent_basics() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((fit_exponent(&xs, &ys).unwrap() - 2.0).abs() < 1e-9);
        let flat = [3.0, 3.0, 3.0, 3.0];
        assert_eq!(fit_exponent(&xs, &flat).unwrap(), 0.0);
        assert!(fit_exponent(&xs[..2], &ys[..2]).is_err());
        assert!(fit_exponent(&[1.0, -1.0, 2.0], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn fit_affine_r2() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let (a, b, r2) = fit_affine(&xs, &ys).unwrap();
        assert!((a - 2.0).abs() < 1e-12);
        assert!((b - 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
        assert!(fit_affine(&[1.0, 1.0, 1.0], &ys[..3]).is_err());
    }

    #[test]
    fn scaling_study_row_shape() {
        let tf = lookup("poly2", 2).unwrap();
        let table = network_scaling_study(&tf, &[2f64.powi(-4)], 10, 0).unwrap();
        assert_eq!(table.rows.len(), 1);
        let row = &table.rows[0];
        assert!(row.sup_error <= 2f64.powi(-4), "{}", row.sup_error);
        assert!(row.depth > 0 && row.size > 0);
        assert!(row.note.is_none());
        // rejects a non-descending list
        assert!(network_scaling_study(&tf, &[0.1, 0.1], 10, 0).is_err());
        // cap produces an annotated row, not an error
        let capped = network_scaling_study(&tf, &[1e-9], 1, 0).unwrap();
        assert!(capped.rows[0].note.is_some());
    }

    #[test]
    fn csv_and_sidecar_shape() {
        let tf = lookup("poly2", 1).unwrap();
        let table = grid_convergence_study(&tf, &[1, 2, 3], Scheme::Sparse, 42).unwrap();
        let csv = table.to_csv_string().unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "control,N,sup_error,depth,size,wall_ms"
        );
        assert_eq!(csv.lines().count(), 4);
        let sidecar = table.sidecar_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&sidecar).unwrap();
        assert_eq!(v["config"]["seed"], 42);
        assert_eq!(v["config"]["function"], "poly2");
        assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    }
}
