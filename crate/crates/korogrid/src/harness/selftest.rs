//! Self-test driver: one check per acceptance criterion, shared by the
//! `acceptance` integration suite and the CLI `selftest` subcommand.
//!
//! Every tolerance is pinned here. Checks report pass/fail with a measured
//! detail string instead of panicking, so the CLI can print one line per
//! criterion and exit nonzero if any fails.

use crate::basis1d::{self, LevelIndex1D};
use crate::constructions::{
    build_hat_net, build_mult_net, build_product_net, build_square_net, compile_sparse_grid_net,
    MultParams,
};
use crate::harness::{
    fit_affine, fit_exponent, grid_convergence_study, lookup, network_scaling_study,
};
use crate::relu_ir::ReluNetwork;
use crate::sparse_grid::{
    coefficient_integral_oracle, count_points, enumerate_indices, hierarchize, Scheme,
    SparseGridInterpolant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::time::Instant;

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:02} {:<24} {} | {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

fn report(id: u32, name: &'static str, passed: bool, detail: String) -> CriterionReport {
    CriterionReport {
        id,
        name,
        passed,
        detail,
    }
}

/// 1. Hat networks agree with the basis evaluation to 1e-14 (they are in
///    fact bit-exact) for 50 random indices with level <= 6.
pub fn hat_net_exactness() -> CriterionReport {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let l = rng.gen_range(1..=6u32);
        let i = rng.gen_range(1..(1u32 << l));
        let li = LevelIndex1D::new(l, i).expect("sampled index is valid");
        let net = build_hat_net(li);
        for k in 0..1000 {
            let x = k as f64 / 999.0;
            worst = worst.max((net.eval_scalar(&[x]).unwrap() - basis1d::hat(li, x)).abs());
        }
    }
    report(
        1,
        "hat-net-exactness",
        worst <= 1e-14,
        format!(
            "max |net - hat| = {worst:.3e} over 50 indices x 1000 points (tol 1e-14), {} ms",
            t0.elapsed().as_millis()
        ),
    )
}

/// 2. Multiplication nets: dense-grid accuracy at three tolerances and two
///    input bounds, and exact zero output when either factor is zero.
pub fn multiplication_contract() -> CriterionReport {
    let t0 = Instant::now();
    let mut worst_rel = 0.0f64; // worst error / eps over all configurations
    let mut worst_zero = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for eps in [2f64.powi(-4), 2f64.powi(-6), 2f64.powi(-8)] {
        for m in [1.0, 1.25] {
            let net = build_mult_net(&MultParams::new(eps, m).expect("valid params"));
            let mut worst = 0.0f64;
            for a in 0..=200 {
                for b in 0..=200 {
                    let x = -m + 2.0 * m * a as f64 / 200.0;
                    let y = -m + 2.0 * m * b as f64 / 200.0;
                    worst = worst.max((net.eval_scalar(&[x, y]).unwrap() - x * y).abs());
                }
            }
            worst_rel = worst_rel.max(worst / eps);
            for _ in 0..100 {
                let v = rng.gen_range(-m..m);
                worst_zero = worst_zero.max(net.eval_scalar(&[0.0, v]).unwrap().abs());
                worst_zero = worst_zero.max(net.eval_scalar(&[v, 0.0]).unwrap().abs());
            }
        }
    }
    report(
        2,
        "multiplication-contract",
        worst_rel <= 1.0 && worst_zero <= 1e-12,
        format!(
            "max error/eps = {worst_rel:.3} on 201x201 grids, max |zero-input output| = \
             {worst_zero:.1e} (tol 1e-12), {} ms",
            t0.elapsed().as_millis()
        ),
    )
}

/// 3. Product nets for d in {2, 3, 4} at eps = 2^-6: sampled error within
///    eps and exact zero outside any leaf support.
pub fn product_net_contract() -> CriterionReport {
    let t0 = Instant::now();
    let eps = 2f64.powi(-6);
    let levels = [2u32, 1, 3, 2];
    let positions = [1u32, 1, 5, 3];
    let mut worst_rel = 0.0f64;
    let mut zero_ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for d in [2usize, 3, 4] {
        let lis: Vec<LevelIndex1D> = (0..d)
            .map(|j| LevelIndex1D::new(levels[j], positions[j]).expect("valid"))
            .collect();
        let net = build_product_net(&lis, eps).expect("product net builds");
        let exact = |x: &[f64]| -> f64 {
            lis.iter()
                .zip(x)
                .map(|(&li, &xj)| basis1d::hat(li, xj))
                .product()
        };
        let mut worst = 0.0f64;
        let mut x = vec![0.0; d];
        for _ in 0..10_000 {
            for xj in x.iter_mut() {
                *xj = rng.gen_range(0.0..1.0);
            }
            worst = worst.max((net.eval_scalar(&x).unwrap() - exact(&x)).abs());
        }
        worst_rel = worst_rel.max(worst / eps);
        // leave one coordinate outside its leaf support
        for (j, &li) in lis.iter().enumerate() {
            let (lo, hi) = (
                (li.position() - 1) as f64 * li.spacing(),
                (li.position() + 1) as f64 * li.spacing(),
            );
            for _ in 0..25 {
                for (k, xk) in x.iter_mut().enumerate() {
                    *xk = if k == j {
                        // sample the complement of the open support
                        if rng.gen_bool(0.5) && lo > 0.0 {
                            rng.gen_range(0.0..=lo)
                        } else {
                            rng.gen_range(hi.min(1.0)..=1.0)
                        }
                    } else {
                        rng.gen_range(0.0..1.0)
                    };
                }
                if net.eval_scalar(&x).unwrap() != 0.0 {
                    zero_ok = false;
                }
            }
        }
    }
    report(
        3,
        "product-net-contract",
        worst_rel <= 1.0 && zero_ok,
        format!(
            "max error/eps = {worst_rel:.3} over 10^4 samples for d in {{2,3,4}}, \
             zero-outside-support exact: {zero_ok}, {} ms",
            t0.elapsed().as_millis()
        ),
    )
}

/// 4. Coefficient decay `|v| <= 2^-d 2^(-2|l|_1) |f|_{2,inf} + 1e-12` for
///    poly2 and sinprod up to d = 3, n = 6; equality at every level for the
///    1-D parabola.
pub fn coefficient_decay() -> CriterionReport {
    let t0 = Instant::now();
    let mut all_bounded = true;
    let mut max_excess = f64::NEG_INFINITY;
    let mut equality_gap = 0.0f64;
    for name in ["poly2", "sinprod"] {
        for d in 1..=3usize {
            let tf = lookup(name, d).expect("registered");
            let seminorm = tf.seminorm().expect("analytic seminorm");
            let interp =
                hierarchize(|x| tf.eval(x), d, 6, Scheme::Sparse).expect("hierarchize");
            for (mi, v) in interp.terms() {
                let bound =
                    2f64.powi(-(d as i32)) * 2f64.powi(-2 * mi.level_sum() as i32) * seminorm;
                let excess = v.abs() - bound;
                max_excess = max_excess.max(excess);
                if excess > 1e-12 {
                    all_bounded = false;
                }
                if name == "poly2" && d == 1 {
                    equality_gap = equality_gap.max(excess.abs());
                }
            }
        }
    }
    report(
        4,
        "coefficient-decay",
        all_bounded && equality_gap <= 1e-12,
        format!(
            "max (|v| - bound) = {max_excess:.2e} (tol 1e-12); 1-D parabola equality gap = \
             {equality_gap:.2e}, {} ms",
            t0.elapsed().as_millis()
        ),
    )
}

/// 5. Point counts: enumeration matches the closed forms. Sparse sets are
///    enumerated for every d <= 5, n <= 8; full sets wherever the closed form
///    stays below 3*10^5 indices (the full count at d = 5, n = 8 exceeds
///    10^12, so literal enumeration is checked on the feasible range).
pub fn point_counts() -> CriterionReport {
    let t0 = Instant::now();
    let mut ok = true;
    let mut checked_full = 0usize;
    for d in 1..=5usize {
        for n in 1..=8u32 {
            let c = count_points(d, n, Scheme::Sparse).expect("count");
            let e = enumerate_indices(d, n, Scheme::Sparse).expect("enumerate");
            if c != e.len() as u128 {
                ok = false;
            }
            let fc = count_points(d, n, Scheme::Full).expect("count");
            if fc <= 300_000 {
                let fe = enumerate_indices(d, n, Scheme::Full).expect("enumerate");
                if fc != fe.len() as u128 {
                    ok = false;
                }
                checked_full += 1;
            }
        }
    }
    let anchor = count_points(2, 3, Scheme::Sparse).unwrap() == 17
        && count_points(2, 3, Scheme::Full).unwrap() == 49;
    report(
        5,
        "point-counts",
        ok && anchor,
        format!(
            "sparse verified for all d<=5, n<=8; full verified on {checked_full} feasible \
             pairs; anchors (d=2,n=3): sparse 17, full 49: {anchor}, {} ms",
            t0.elapsed().as_millis()
        ),
    )
}

/// 6. Grid convergence: the 1-D parabola error equals `2^(-2n-2)` exactly
///    and its log-log rate against `1/h_n` is -2.0 +- 0.05; in 2-D the fitted
///    rate lies in [-2.6, -1.7] over n = 3..9.
pub fn grid_convergence_rate() -> CriterionReport {
    let t0 = Instant::now();
    let tf1 = lookup("poly2", 1).expect("registered");
    let ns1: Vec<u32> = (1..=8).collect();
    let t1 = grid_convergence_study(&tf1, &ns1, Scheme::Sparse, 0).expect("study");
    let mut exact_gap = 0.0f64;
    for (row, &n) in t1.rows.iter().zip(&ns1) {
        exact_gap = exact_gap.max((row.sup_error - 2f64.powi(-2 * n as i32 - 2)).abs());
    }
    let inv_h1: Vec<f64> = ns1.iter().map(|&n| 2f64.powi(n as i32)).collect();
    let e1: Vec<f64> = t1.rows.iter().map(|r| r.sup_error).collect();
    let slope1 = fit_exponent(&inv_h1, &e1).expect("fit");

    let tf2 = lookup("poly2", 2).expect("registered");
    let ns2: Vec<u32> = (3..=9).collect();
    let t2 = grid_convergence_study(&tf2, &ns2, Scheme::Sparse, 0).expect("study");
    let inv_h2: Vec<f64> = ns2.iter().map(|&n| 2f64.powi(n as i32)).collect();
    let e2: Vec<f64> = t2.rows.iter().map(|r| r.sup_error).collect();
    let slope2 = fit_exponent(&inv_h2, &e2).expect("fit");

    let pass = exact_gap <= 1e-12
        && (slope1 + 2.0).abs() <= 0.05
        && (-2.6..=-1.7).contains(&slope2);
    report(
        6,
        "grid-convergence-rate",
        pass,
        format!(
            "1-D exact-value gap = {exact_gap:.2e} (tol 1e-12), rate vs 1/h = {slope1:.4} \
             (target -2 +- 0.05); 2-D rate = {slope2:.3} (target [-2.6, -1.7]), {} ms",
            t0.elapsed().as_millis()
        ),
    )
}

/// 7. End-to-end: normalized 2-D parabola through grid auto-selection and
///    network compilation stays within eps for eps in {2^-4, 2^-5, 2^-6}.
pub fn end_to_end_accuracy() -> CriterionReport {
    let t0 = Instant::now();
    let tf = lookup("poly2", 2).expect("registered");
    let table = network_scaling_study(
        &tf,
        &[2f64.powi(-4), 2f64.powi(-5), 2f64.powi(-6)],
        14,
        0,
    )
    .expect("study");
    let mut pass = true;
    let mut details = Vec::new();
    for row in &table.rows {
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN rows must fail
        if !(row.sup_error <= row.control) || row.note.is_some() {
            pass = false;
        }
        details.push(format!(
            "eps=2^{:.0}: err={:.3e} terms={}",
            row.control.log2(),
            row.sup_error,
            row.points
        ));
    }
    report(
        7,
        "end-to-end-accuracy",
        pass,
        format!("{}, {} ms", details.join("; "), t0.elapsed().as_millis()),
    )
}

/// 8. Scaling shape over eps = 2^-4 .. 2^-9 in 2-D: depth regressed on
///    |log2 eps| with R^2 >= 0.95, and the log-log slope of size against 1/eps
///    at most 1.0.
///
///    The depth of the construction is `constant + s(eps)` where the squaring
///    depth `s` is the ceiling of a half-slope affine function of |log2 eps|,
///    so depth is a two-step staircase over these six points; its best affine
///    fit has R^2 ~= 0.91, below the 0.95 demanded here. The check is
///    implemented exactly as stated and reports the measured staircase.
pub fn scaling_shape() -> CriterionReport {
    let t0 = Instant::now();
    let tf = lookup("poly2", 2).expect("registered");
    let eps_list: Vec<f64> = (4..=9).map(|k| 2f64.powi(-k)).collect();
    let table = network_scaling_study(&tf, &eps_list, 14, 0).expect("study");
    let xs: Vec<f64> = eps_list.iter().map(|e| e.log2().abs()).collect();
    let depths: Vec<f64> = table.rows.iter().map(|r| r.depth as f64).collect();
    let (_, _, r2) = fit_affine(&xs, &depths).expect("fit");
    let inv_eps: Vec<f64> = eps_list.iter().map(|e| 1.0 / e).collect();
    let sizes: Vec<f64> = table.rows.iter().map(|r| r.size as f64).collect();
    let size_slope = fit_exponent(&inv_eps, &sizes).expect("fit");
    let pass = r2 >= 0.95 && size_slope <= 1.0;
    report(
        8,
        "scaling-shape",
        pass,
        format!(
            "depth vs |log2 eps|: {:?}, affine R^2 = {r2:.4} (threshold 0.95); log2(size) vs \
             log2(1/eps) slope = {size_slope:.3} (threshold 1.0), {} ms",
            table.rows.iter().map(|r| r.depth).collect::<Vec<_>>(),
            t0.elapsed().as_millis()
        ),
    )
}

/// 9. The surplus recursion agrees with the coefficient integral oracle to
///    1e-6 on every index with |l|_1 <= 5 for the parabola in d <= 2.
pub fn oracle_equivalence() -> CriterionReport {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for d in 1..=2usize {
        let tf = lookup("poly2", d).expect("registered");
        let n = if d == 1 { 5 } else { 4 }; // covers |l|_1 <= 5
        let interp = hierarchize(|x| tf.eval(x), d, n, Scheme::Sparse).expect("hierarchize");
        for (mi, v) in interp.terms() {
            if mi.level_sum() > 5 {
                continue;
            }
            let oracle = coefficient_integral_oracle(
                |x| tf.mixed_deriv(x).expect("closed form"),
                &mi,
                6,
            )
            .expect("quadrature");
            worst = worst.max((oracle - v).abs());
        }
    }
    report(
        9,
        "oracle-equivalence",
        worst <= 1e-6,
        format!(
            "max |integral - surplus| = {worst:.2e} over all |l|_1 <= 5, d <= 2 (tol 1e-6), {} ms",
            t0.elapsed().as_millis()
        ),
    )
}

fn eval_round_trip(net: &ReluNetwork, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> bool {
    let doc = net.to_json_string().expect("serialize");
    let back = match ReluNetwork::from_json_str(&doc) {
        Ok(b) => b,
        Err(_) => return false,
    };
    if back.to_json_string().expect("serialize") != doc {
        return false;
    }
    let d = net.input_dim();
    for _ in 0..100 {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(lo..hi)).collect();
        let a = net.eval(&x).expect("eval");
        let b = back.eval(&x).expect("eval");
        if a.len() != b.len() || a.iter().zip(&b).any(|(u, v)| u.to_bits() != v.to_bits()) {
            return false;
        }
    }
    true
}

/// 10. Serialization: every compiled artifact kind round-trips with bitwise
///     identical evaluations at 100 random points and byte-identical
///     re-serialization.
pub fn serialization_round_trip() -> CriterionReport {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut ok = true;

    let hat = build_hat_net(LevelIndex1D::new(3, 5).expect("valid"));
    ok &= eval_round_trip(&hat, -0.5, 1.5, &mut rng);
    let square = build_square_net(3).expect("builds");
    ok &= eval_round_trip(&square, 0.0, 1.0, &mut rng);
    let mult = build_mult_net(&MultParams::new(2f64.powi(-6), 1.25).expect("valid"));
    ok &= eval_round_trip(&mult, -1.25, 1.25, &mut rng);
    let product = build_product_net(
        &[
            LevelIndex1D::new(1, 1).expect("valid"),
            LevelIndex1D::new(2, 3).expect("valid"),
            LevelIndex1D::new(3, 1).expect("valid"),
        ],
        2f64.powi(-5),
    )
    .expect("builds");
    ok &= eval_round_trip(&product, 0.0, 1.0, &mut rng);

    let tf = lookup("poly2", 2).expect("registered");
    let interp = hierarchize(|x| tf.eval(x), 2, 3, Scheme::Sparse).expect("hierarchize");
    let compiled = compile_sparse_grid_net(&interp, 2f64.powi(-4)).expect("compiles");
    ok &= eval_round_trip(&compiled, 0.0, 1.0, &mut rng);

    // interpolant document round-trip, bitwise on coefficients and evals
    let doc = interp.to_json_string().expect("serialize");
    match SparseGridInterpolant::from_json_str(&doc) {
        Ok(back) => {
            ok &= back.to_json_string().expect("serialize") == doc;
            for _ in 0..100 {
                let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
                let a = interp.evaluate(&x).expect("eval");
                let b = back.evaluate(&x).expect("eval");
                if a.to_bits() != b.to_bits() {
                    ok = false;
                }
            }
        }
        Err(_) => ok = false,
    }

    report(
        10,
        "serialization-round-trip",
        ok,
        format!(
            "hat/square/mult/product/compiled networks and grid document round-tripped \
             bitwise at 100 random points each, {} ms",
            t0.elapsed().as_millis()
        ),
    )
}

/// Run every criterion in order.
pub fn run_all() -> Vec<CriterionReport> {
    vec![
        hat_net_exactness(),
        multiplication_contract(),
        product_net_contract(),
        coefficient_decay(),
        point_counts(),
        grid_convergence_rate(),
        end_to_end_accuracy(),
        scaling_shape(),
        oracle_equivalence(),
        serialization_round_trip(),
    ]
}

/// Run one criterion by id.
pub fn run_one(id: u32) -> Option<CriterionReport> {
    match id {
        1 => Some(hat_net_exactness()),
        2 => Some(multiplication_contract()),
        3 => Some(product_net_contract()),
        4 => Some(coefficient_decay()),
        5 => Some(point_counts()),
        6 => Some(grid_convergence_rate()),
        7 => Some(end_to_end_accuracy()),
        8 => Some(scaling_shape()),
        9 => Some(oracle_equivalence()),
        10 => Some(serialization_round_trip()),
        _ => None,
    }
}
