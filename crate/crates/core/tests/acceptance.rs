//! Acceptance suite: one pass/fail line per criterion.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use invzero::extensions::{self, Augmentation, SquaringPlan};
use invzero::izform::{self, InvariantZeroForm};
use invzero::linalg::{self, CMatrix, Complex64, RMatrix, RankTolerance};
use invzero::model::{self, match_multisets, matrix, multisets_match, MatchTolerance, StateSpace};
use invzero::rosenbrock;
use invzero::{gazero, ZeroOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn max_abs_diff(a: &RMatrix, b: &RMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    (a - b).amax()
}

fn within(values: &[Complex64], expected: &[Complex64], tol: f64) -> Check {
    let m = match_multisets(values, expected, MatchTolerance::new(tol, 0.0));
    ensure(values.len() == expected.len() && m.is_perfect(), || {
        format!("{values:?} vs expected {expected:?} at {tol:e}")
    })
}

/// Componentwise agreement with values printed to a fixed number of
/// decimals: real and imaginary parts each within `tol`.
fn within_printed(values: &[Complex64], printed: &[Complex64], tol: f64) -> Check {
    let key = |z: &Complex64| (z.re, z.im);
    let mut a = values.to_vec();
    let mut b = printed.to_vec();
    a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    let ok = a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| (x.re - y.re).abs() <= tol && (x.im - y.im).abs() <= tol);
    ensure(ok, || format!("{a:?} vs printed {b:?} at {tol:e} per component"))
}

fn default_match() -> MatchTolerance {
    MatchTolerance::default()
}

fn opts() -> ZeroOptions {
    ZeroOptions::default()
}

fn forced_form(sys: &StateSpace, bz: &RMatrix) -> Result<InvariantZeroForm, String> {
    let tol = RankTolerance::default();
    let profile = model::relative_degree(sys, tol).map_err(|e| e.to_string())?;
    let bundle = izform::build_transformation_with_bz(sys, &profile, bz, tol).map_err(|e| e.to_string())?;
    izform::decompose(sys, &bundle, tol).map_err(|e| e.to_string())
}

fn structure_ok(form: &InvariantZeroForm, label: &str) -> Check {
    let r = &form.residuals;
    ensure(r.max_structural() <= r.bound, || {
        format!("{label}: sparsity residual {:e} > {:e}", r.max_structural(), r.bound)
    })?;
    if let Some(ann) = r.annihilation {
        ensure(ann <= r.bound, || format!("{label}: annihilation residual {ann:e} > {:e}", r.bound))?;
    }
    Ok(())
}

fn criterion_1() -> Check {
    let sys = siso();
    let out = izform::invariant_zeros_izform(&sys, &opts()).map_err(|e| e.to_string())?;
    ensure(out.form.l_eta() == 1, || format!("l_eta = {}", out.form.l_eta()))?;
    within(&out.zeros.values(), &[c(-1.0, 0.0)], 1e-8)?;
    ensure(out.zeros.all_verified(), || "zero not verified".into())?;
    // automatic B_z: sparsity of the displayed block form
    let f = &out.form;
    ensure(f.b_full.rows(0, 2).amax() < 1e-8, || "B rows 0..2 not zero".into())?;
    ensure(max_abs_diff(&f.c_full, &matrix(1, 3, &[0.0, 1.0, 0.0])) < 1e-8, || "C pattern".into())?;
    ensure(max_abs_diff(&f.a_full.view((1, 0), (1, 3)).into_owned(), &matrix(1, 3, &[0.0, 0.0, 1.0])) < 1e-8, || {
        "shift row of A".into()
    })?;
    // printed matrices with the displayed B_z
    let forced = forced_form(&sys, &matrix(1, 3, &[0.0, 1.0, 0.0]))?;
    let a = matrix(3, 3, &[-1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 3.0, -24.0, -8.0]);
    ensure(max_abs_diff(&forced.a_full, &a) < 1e-8, || format!("A = {}", forced.a_full))?;
    ensure(max_abs_diff(&forced.b_full, &matrix(3, 1, &[0.0, 0.0, 1.0])) < 1e-8, || "B".into())?;
    ensure(max_abs_diff(&forced.c_full, &matrix(1, 3, &[0.0, 1.0, 0.0])) < 1e-8, || "C".into())
}

fn product_matches(got: &CMatrix, expected: &RMatrix) -> Check {
    let diff = (got - linalg::to_complex(expected)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    ensure(diff < 1e-8, || format!("product differs by {diff:e}: {got}"))
}

fn criterion_2() -> Check {
    let sys = example1();
    let expected = [c(-1.0, 0.0), c(0.0, 0.0)];
    let iz = izform::invariant_zeros_izform(&sys, &opts()).map_err(|e| e.to_string())?;
    within(&iz.zeros.values(), &expected, 1e-8).map_err(|e| format!("izform: {e}"))?;
    ensure(iz.zeros.all_verified(), || "izform zeros not verified".into())?;
    let gz = gazero::gazero_zeros(&sys, &opts()).map_err(|e| e.to_string())?;
    within(&gz.values(), &expected, 1e-8).map_err(|e| format!("gazero: {e}"))?;
    let di = rosenbrock::zeros_by_det_interpolation(&sys, &opts()).map_err(|e| e.to_string())?;
    within(&di.zeros.values(), &expected, 1e-8).map_err(|e| format!("det interpolation: {e}"))?;

    let form = forced_form(&sys, &example1_bz())?;
    ensure(form.a_eta == matrix(2, 2, &[0.0, 4.0, 0.0, -1.0]), || format!("A_eta = {}", form.a_eta))?;

    let tol = RankTolerance::default();
    let at8 = rosenbrock::proof_diagnostics(&form, c(8.0, 0.0), tol).map_err(|e| e.to_string())?;
    let mut p8 = RMatrix::zeros(6, 4);
    p8[(2, 1)] = -1.0;
    p8[(4, 3)] = -1.0;
    product_matches(&at8.product, &p8)?;
    ensure(at8.product_rank == 2, || format!("rank at s = 8 is {}", at8.product_rank))?;

    let at1 = rosenbrock::proof_diagnostics(&form, c(-1.0, 0.0), tol).map_err(|e| e.to_string())?;
    let mut p1 = RMatrix::zeros(6, 4);
    p1[(1, 1)] = 0.25;
    p1[(2, 1)] = -1.0;
    p1[(1, 3)] = -0.25;
    p1[(4, 3)] = -1.0;
    product_matches(&at1.product, &p1)?;
    ensure(at1.product_rank == 2, || format!("rank at s = -1 is {}", at1.product_rank))
}

fn criterion_3() -> Check {
    let sys = example2();
    let o = ZeroOptions {
        alpha: Some(16.0),
        ..opts()
    };
    let out = extensions::invariant_zeros_general(&sys, &o).map_err(|e| e.to_string())?;
    let values = out.zeros.values();
    within_printed(&values, &example2_printed_zeros(), 5e-3).map_err(|e| format!("printed: {e}"))?;
    let oracle = rosenbrock::zeros_by_det_interpolation(&sys, &o).map_err(|e| e.to_string())?;
    within(&values, &oracle.zeros.values(), 1e-8).map_err(|e| format!("oracle: {e}"))?;
    ensure(out.zeros.count() == 4 && out.zeros.all_verified(), || {
        format!("verification: {:?}", out.zeros.zeros)
    })
}

fn criterion_4() -> Check {
    let sys = example3();
    let plan = SquaringPlan::explicit(
        &sys,
        vec![Augmentation::OutputRows(example3_row1()), Augmentation::OutputRows(example3_row2())],
    )
    .map_err(|e| e.to_string())?;
    let out = extensions::invariant_zeros_with_plan(&sys, &plan, &opts()).map_err(|e| e.to_string())?;
    ensure(out.round_spectra.len() == 2, || "both rounds must succeed".into())?;
    within(&out.round_spectra[0], &[c(0.5, 0.0), c(1.0, 0.0), c(1.0, 0.0)], 5e-3).map_err(|e| format!("round 1: {e}"))?;
    within_printed(&out.round_spectra[1], &[c(0.14, 0.0), c(1.0, 0.0), c(1.0, 0.0)], 5e-3).map_err(|e| format!("round 2: {e}"))?;
    let one = [c(1.0, 0.0), c(1.0, 0.0)];
    within(&out.zeros.values(), &one, 1e-6).map_err(|e| format!("common: {e}"))?;
    ensure(out.zeros.all_verified(), || "common zeros not verified".into())?;

    let auto = extensions::invariant_zeros_general(&sys, &opts()).map_err(|e| e.to_string())?;
    within(&auto.zeros.values(), &one, 1e-6).map_err(|e| format!("random squaring: {e}"))?;
    ensure(auto.zeros.all_verified(), || "random squaring zeros not verified".into())
}

const SUITE: u64 = 200;

fn criterion_5() -> Check {
    let mut failures = Vec::new();
    for i in 0..SUITE {
        let (sys, planted) = suite_system(i);
        let res = (|| -> Check {
            let iz = izform::invariant_zeros_izform(&sys, &opts()).map_err(|e| e.to_string())?;
            let values = iz.zeros.values();
            let expected_count = sys.states().saturating_sub(iz.form.rho());
            ensure(values.len() == expected_count, || format!("{} zeros, expected {expected_count}", values.len()))?;
            ensure(iz.zeros.all_verified(), || format!("unverified zeros {:?}", iz.zeros.zeros))?;
            let oracle = rosenbrock::zeros_by_det_interpolation(&sys, &opts()).map_err(|e| e.to_string())?;
            ensure(multisets_match(&values, &oracle.zeros.values(), default_match()), || {
                format!("oracle mismatch: {values:?} vs {:?}", oracle.zeros.values())
            })?;
            if let Some(p) = planted {
                ensure(multisets_match(&values, &p, default_match()), || format!("planted mismatch: {values:?} vs {p:?}"))?;
            }
            Ok(())
        })();
        if let Err(e) = res {
            failures.push(format!("system {i} ({}): {e}", sys));
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))
}

const FEEDTHROUGH_SUITE: u64 = 100;

fn criterion_6() -> Check {
    let mut failures = Vec::new();
    for i in 0..FEEDTHROUGH_SUITE {
        let sys = feedthrough_system(i);
        let res = (|| -> Check {
            let out = extensions::invariant_zeros_general(&sys, &opts()).map_err(|e| e.to_string())?;
            let oracle = rosenbrock::zeros_by_det_interpolation(&sys, &opts()).map_err(|e| e.to_string())?;
            ensure(multisets_match(&out.zeros.values(), &oracle.zeros.values(), default_match()), || {
                format!("{:?} vs oracle {:?}", out.zeros.values(), oracle.zeros.values())
            })
        })();
        if let Err(e) = res {
            failures.push(format!("system {i} ({sys}): {e}"));
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))
}

fn criterion_7() -> Check {
    let mut checked = 0;
    let mut failures = Vec::new();
    for i in 0..SUITE {
        let (sys, _) = suite_system(i);
        match izform::invariant_zero_form(&sys, RankTolerance::default()) {
            Ok(form) => {
                checked += 1;
                if let Err(e) = structure_ok(&form, &format!("suite system {i}")) {
                    failures.push(e);
                }
            }
            Err(e) => failures.push(format!("suite system {i}: {e}")),
        }
    }
    for i in 0..FEEDTHROUGH_SUITE {
        let sys = feedthrough_system(i);
        match extensions::invariant_zeros_general(&sys, &opts()) {
            Ok(out) => {
                checked += 1;
                let form = out.form.expect("square path keeps the form");
                if let Err(e) = structure_ok(&form, &format!("feedthrough system {i}")) {
                    failures.push(e);
                }
            }
            Err(e) => failures.push(format!("feedthrough system {i}: {e}")),
        }
    }
    ensure(failures.is_empty() && checked == SUITE + FEEDTHROUGH_SUITE, || failures.join("; "))
}

/// Product of Gaussian factors with rank drawn from `min_rank..=min(rows, cols)`.
fn random_rank_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, min_rank: usize) -> RMatrix {
    let rank = rng.random_range(min_rank..=rows.min(cols));
    let l = model::random_matrix(rows, rank, rng.random());
    let r = model::random_matrix(rank, cols, rng.random());
    l * r
}

fn rank(m: &RMatrix) -> usize {
    if m.is_empty() {
        return 0;
    }
    linalg::numerical_rank(m, RankTolerance::relative(1e-10).unwrap()).unwrap()
}

/// Rank of a matrix derived from inputs of size `scale`.
fn rank_scaled(m: &RMatrix, scale: f64) -> usize {
    linalg::rank_with_scale(m, RankTolerance::relative(1e-10).unwrap(), scale)
}

fn pinv(m: &RMatrix) -> RMatrix {
    linalg::pseudoinverse(m, RankTolerance::relative(1e-10).unwrap()).unwrap()
}

fn delta(n: usize, s: Complex64) -> CMatrix {
    let mut d = CMatrix::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = c(-1.0, 0.0);
        if i > 0 {
            d[(i, i - 1)] = s;
        }
    }
    d
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
    for k in 0..100 {
        let (m, n) = (rng.random_range(2..7usize), rng.random_range(2..7usize));
        let (kk, l) = (rng.random_range(1..5usize), rng.random_range(1..5usize));
        let a = random_rank_matrix(&mut rng, m, n, 0);
        let b = random_rank_matrix(&mut rng, m, kk, 0);
        let cm = random_rank_matrix(&mut rng, l, n, 0);
        let mut block = RMatrix::zeros(m + l, n + kk);
        block.view_mut((0, 0), (m, n)).copy_from(&a);
        block.view_mut((0, n), (m, kk)).copy_from(&b);
        block.view_mut((m, 0), (l, n)).copy_from(&cm);
        let proj = (RMatrix::identity(m, m) - &b * pinv(&b)) * &a * (RMatrix::identity(n, n) - pinv(&cm) * &cm);
        let lhs = rank(&block);
        let scale = linalg::spectral_norm(&block);
        ensure(lhs == rank(&b) + rank(&cm) + rank_scaled(&proj, scale), || format!("block rank identity, instance {k}"))?;

        let stacked = linalg::vstack(&[&a, &cm]);
        let rs = rank(&stacked);
        let scale = linalg::spectral_norm(&stacked);
        let r1 = rank(&a) + rank_scaled(&(&cm - &cm * pinv(&a) * &a), scale);
        let r2 = rank(&cm) + rank_scaled(&(&a - &a * pinv(&cm) * &cm), scale);
        let shared = gazero::subspace_intersection(
            &linalg::range_basis(&a.transpose(), RankTolerance::relative(1e-10).unwrap()),
            &linalg::range_basis(&cm.transpose(), RankTolerance::relative(1e-10).unwrap()),
            RankTolerance::relative(1e-10).unwrap(),
        )
        .ncols();
        let r3 = rank(&a) + rank(&cm) - shared;
        ensure(rs == r1 && rs == r2 && rs == r3 && rs >= rank(&a).max(rank(&cm)), || {
            format!("stacked rank identities, instance {k}: {rs} {r1} {r2} {r3}")
        })?;
    }
    for k in 0..100 {
        let n = rng.random_range(1..12usize);
        // det = ±1 for every s; the numerical rank test is only meaningful
        // while σ_min ~ |s|^-(n-1) stays well above rounding
        let s = c(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let det = delta(n, s).determinant();
        ensure((det.norm() - 1.0).abs() < 1e-9, || format!("det Delta_{n}({s}) = {det}, instance {k}"))?;
        let s = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let d = delta(n, s);
        ensure(linalg::numerical_rank(&d, RankTolerance::default()).unwrap() == n, || {
            format!("Delta_{n}({s}) rank-deficient, instance {k}")
        })?;
        let det = d.determinant();
        ensure((det.norm() - 1.0).abs() < 1e-9, || format!("det Delta = {det}"))?;
    }
    for k in 0..100 {
        let (rows, cols) = (rng.random_range(2..8usize), rng.random_range(2..8usize));
        let mut a = random_rank_matrix(&mut rng, rows, cols, 1);
        let i = rng.random_range(0..rows);
        a.row_mut(i).fill(0.0);
        let p = &a * pinv(&a);
        ensure(p.row(i).amax() < 1e-12 && p.column(i).amax() < 1e-12, || {
            format!("zero row {i} not reflected in A A+, instance {k}")
        })?;
        let j = rng.random_range(0..cols);
        let mut b = random_rank_matrix(&mut rng, rows, cols, 1);
        b.column_mut(j).fill(0.0);
        let q = pinv(&b) * &b;
        ensure(q.row(j).amax() < 1e-12 && q.column(j).amax() < 1e-12, || {
            format!("zero column {j} not reflected in A+ A, instance {k}")
        })?;
    }
    Ok(())
}

fn criterion_9() -> Check {
    let mut failures = Vec::new();
    for i in 0..SUITE {
        let (sys, _) = suite_system(i);
        let res = (|| -> Check {
            let iz = izform::invariant_zeros_izform(&sys, &opts()).map_err(|e| e.to_string())?;
            let gz = gazero::gazero_zeros(&sys, &opts()).map_err(|e| e.to_string())?;
            ensure(multisets_match(&iz.zeros.values(), &gz.values(), default_match()), || {
                format!("{:?} vs gazero {:?}", iz.zeros.values(), gz.values())
            })
        })();
        if let Err(e) = res {
            failures.push(format!("system {i} ({sys}): {e}"));
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))
}

fn criterion_10() -> Check {
    let mut failures = Vec::new();
    for i in (0..SUITE).step_by((SUITE / 20) as usize) {
        let (sys, _) = suite_system(i);
        let base = izform::invariant_zeros_izform(&sys, &opts()).map_err(|e| e.to_string())?.zeros.values();
        for k in 0..20 {
            let p = model::random_similarity(sys.states(), 1000 * i + k);
            let moved = model::similarity_transform(&sys, &p).map_err(|e| e.to_string())?;
            match izform::invariant_zeros_izform(&moved, &opts()) {
                Ok(out) if multisets_match(&out.zeros.values(), &base, default_match()) => {}
                Ok(out) => failures.push(format!("system {i}, transform {k}: {:?} vs {base:?}", out.zeros.values())),
                Err(e) => failures.push(format!("system {i}, transform {k}: {e}")),
            }
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("golden SISO example", criterion_1),
        ("golden example 1 (izform, gazero, det interpolation, diagnostics)", criterion_2),
        ("golden example 2 (feedthrough via extension)", criterion_3),
        ("golden example 3 (squaring)", criterion_4),
        ("random square suite: eig(A_eta) = verified zeros = oracle", criterion_5),
        ("random feedthrough suite: extension = oracle", criterion_6),
        ("structure residuals on every decomposition", criterion_7),
        ("rank lemmas and pseudoinverse patterns", criterion_8),
        ("gazero = izform on the random square suite", criterion_9),
        ("similarity invariance", criterion_10),
    ];
    let mut failed = 0;
    let start = Instant::now();
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(()) => println!("[PASS] {:>2} {name}", k + 1),
            Err(e) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {e}", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1?}",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
