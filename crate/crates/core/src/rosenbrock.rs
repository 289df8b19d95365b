//! Rosenbrock system matrix `χ(s) = [[sI − A, B], [C, −D]]`.
//!
//! A point `z` is an invariant zero when `rank χ(z)` falls below the normal
//! rank of the pencil. This module evaluates that test, estimates the normal
//! rank by sampling, recovers the zeros of square regular pencils from
//! interpolated determinant values, and computes the `Φ(s) Ψ(s) Ξ` rank
//! diagnostics on an invariant zero form.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::izform::InvariantZeroForm;
use crate::linalg::{self, CMatrix, Complex64, RMatrix, RankTolerance};
use crate::model::{Method, StateSpace, ZeroSet};
use crate::options::ZeroOptions;

/// Rank report of `χ(s)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PencilEvaluation {
    pub point: Complex64,
    pub chi_rank: usize,
    pub normal_rank: usize,
    pub drops: bool,
    /// `σ_r / σ_max` with `r` the normal rank; how close the point is to
    /// dropping.
    pub drop_measure: f64,
}

/// Assembles `χ(s)`.
pub fn pencil(sys: &StateSpace, s: Complex64) -> CMatrix {
    let n = sys.states();
    let (m, p) = (sys.inputs(), sys.outputs());
    let mut chi = CMatrix::zeros(n + p, n + m);
    for i in 0..n {
        for j in 0..n {
            chi[(i, j)] = Complex64::new(-sys.a()[(i, j)], 0.0);
        }
        chi[(i, i)] += s;
        for j in 0..m {
            chi[(i, n + j)] = Complex64::new(sys.b()[(i, j)], 0.0);
        }
    }
    for i in 0..p {
        for j in 0..n {
            chi[(n + i, j)] = Complex64::new(sys.c()[(i, j)], 0.0);
        }
        for j in 0..m {
            chi[(n + i, n + j)] = Complex64::new(-sys.d()[(i, j)], 0.0);
        }
    }
    chi
}

pub fn evaluate_pencil(sys: &StateSpace, s: Complex64, normal_rank: usize, tol: RankTolerance) -> PencilEvaluation {
    let chi = pencil(sys, s);
    let sv = linalg::singular_values(&chi);
    let cutoff = tol.threshold_for(chi.nrows(), chi.ncols()) * sv[0];
    let chi_rank = sv.iter().filter(|&&x| x > cutoff).count();
    let drop_measure = match normal_rank {
        0 => 0.0,
        r if sv[0] > 0.0 => sv.get(r - 1).copied().unwrap_or(0.0) / sv[0],
        _ => 0.0,
    };
    PencilEvaluation {
        point: s,
        chi_rank,
        normal_rank,
        drops: chi_rank < normal_rank,
        drop_measure,
    }
}

/// Radius of the normal-rank sampling circle: `2 (1 + ρ(A))`.
pub fn sampling_radius(sys: &StateSpace) -> f64 {
    2.0 * (1.0 + linalg::spectral_radius_estimate(sys.a()))
}

/// Maximum pencil rank over `samples` random points on a circle around the
/// spectrum of `A`. Deterministic for a given seed.
pub fn estimate_normal_rank(sys: &StateSpace, tol: RankTolerance, samples: usize, seed: u64) -> Result<usize> {
    if samples < 3 {
        return Err(Error::InvalidInput(format!("normal rank needs at least 3 samples, got {samples}")));
    }
    let radius = sampling_radius(sys);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0;
    for _ in 0..samples {
        let angle = rng.random_range(0.0..2.0 * PI);
        let s = Complex64::from_polar(radius, angle);
        let rank = linalg::numerical_rank(&pencil(sys, s), tol)?;
        best = best.max(rank);
    }
    Ok(best)
}

/// Checks every candidate location for a pencil rank drop. Multiplicities
/// are carried over untouched.
pub fn verify_zeros(sys: &StateSpace, candidates: &ZeroSet, opts: &ZeroOptions) -> ZeroSet {
    let mut out = candidates.clone();
    let normal_rank = estimate_normal_rank(sys, opts.rank_tol, opts.normal_rank_samples.max(3), opts.seed)
        .expect("validated system and sample count");
    for zero in &mut out.zeros {
        let eval = evaluate_pencil(sys, zero.value, normal_rank, opts.verify_tol);
        zero.verified = eval.drops;
        zero.pencil_rank = Some(eval.chi_rank);
    }
    out.normal_rank = Some(normal_rank);
    out
}

/// Zeros recovered from interpolated values of `det χ(s)`.
#[derive(Debug, Clone)]
pub struct DetInterpolation {
    pub zeros: ZeroSet,
    /// Degree of `det χ(s)` after dropping negligible leading coefficients.
    pub degree: usize,
    /// Radius of the outermost interpolation circle used.
    pub radius: f64,
    /// Coefficients of `det χ(r t)` in `t`, lowest order first, untruncated.
    pub scaled_coefficients: Vec<f64>,
}

const COEFF_CUTOFF: f64 = 1e-8;

/// Roots of `Σ cⱼ tʲ` (lowest order first, leading coefficient nonzero).
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let d = coeffs.len().saturating_sub(1);
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[d];
    if lead == 0.0 {
        return Err(Error::InvalidInput("leading coefficient is zero".into()));
    }
    let mut companion = RMatrix::zeros(d, d);
    for j in 0..d {
        companion[(0, j)] = -coeffs[d - 1 - j] / lead;
    }
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    linalg::eigenvalues(&companion)
}

fn interpolate_on_circle(sys: &StateSpace, radius: f64) -> Result<(Vec<f64>, usize, Vec<Complex64>)> {
    let nodes = sys.states() + 1;
    let values: Vec<Complex64> = (0..nodes)
        .map(|k| {
            let s = Complex64::from_polar(radius, 2.0 * PI * k as f64 / nodes as f64);
            pencil(sys, s).determinant()
        })
        .collect();
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NumericalFailure("determinant overflowed on the interpolation circle".into()));
    }
    // a_j = (1/N) Σ_k p(s_k) ω^(-jk) are the coefficients of p(r t); they
    // are real because the nodes are closed under conjugation.
    let coeffs: Vec<f64> = (0..nodes)
        .map(|j| {
            let sum: Complex64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / nodes as f64))
                .sum();
            sum.re / nodes as f64
        })
        .collect();
    let max = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if max == 0.0 {
        return Err(Error::OracleNotApplicable("det χ(s) vanishes identically".into()));
    }
    let degree = coeffs
        .iter()
        .rposition(|c| c.abs() > COEFF_CUTOFF * max)
        .expect("max coefficient is above the cutoff");
    let roots = polynomial_roots(&coeffs[..=degree])?
        .into_iter()
        .map(|t| t * radius)
        .collect();
    Ok((coeffs, degree, roots))
}

/// Zeros of a square regular pencil as the roots of `det χ(s)`.
///
/// `det χ(s)` has degree at most `l_x`; it is sampled at `l_x + 1` roots of
/// unity scaled to radius `1 + ρ(A)` and its coefficients recovered by an
/// inverse discrete Fourier transform. When roots land far outside the
/// circle the interpolation is repeated once on a circle through the
/// largest root, which then supplies the large roots.
pub fn zeros_by_det_interpolation(sys: &StateSpace, opts: &ZeroOptions) -> Result<DetInterpolation> {
    if !sys.is_square() {
        return Err(Error::OracleNotApplicable(format!(
            "determinant needs a square pencil ({} inputs, {} outputs)",
            sys.inputs(),
            sys.outputs()
        )));
    }
    let full = sys.states() + sys.inputs();
    let normal_rank = estimate_normal_rank(sys, opts.rank_tol, opts.normal_rank_samples.max(3), opts.seed)?;
    if normal_rank < full {
        return Err(Error::OracleNotApplicable(format!(
            "pencil is not regular (normal rank {normal_rank} < {full})"
        )));
    }
    let mut radius = 1.0 + linalg::spectral_radius_estimate(sys.a());
    let (mut coeffs, mut degree, mut roots) = interpolate_on_circle(sys, radius)?;
    let far = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if far > 2.0 * radius {
        // Small roots are resolved on the small circle, large ones on a
        // circle through the largest root; split at the geometric mean.
        let (outer_coeffs, outer_degree, outer_roots) = interpolate_on_circle(sys, far)?;
        let split = (radius * far).sqrt();
        let mut merged: Vec<Complex64> = roots.iter().copied().filter(|z| z.norm() <= split).collect();
        merged.extend(outer_roots.iter().copied().filter(|z| z.norm() > split));
        roots = if merged.len() == outer_degree { merged } else { outer_roots };
        radius = far;
        coeffs = outer_coeffs;
        degree = outer_degree;
    }
    let candidates = ZeroSet::from_values(&roots, Method::DetInterpolation, opts.cluster);
    let zeros = verify_zeros(sys, &candidates, opts);
    Ok(DetInterpolation {
        zeros,
        degree,
        radius,
        scaled_coefficients: coeffs,
    })
}

/// `Φ(s)`, `Ψ(s)`, `Ξ` and the rank of their product.
#[derive(Debug, Clone)]
pub struct ProofDiagnostics {
    pub point: Complex64,
    /// `I − M(s) M(s)⁺` with `M(s) = [[sI − A_η, 0], [−A_ξη, B_ξ]]`.
    pub phi: CMatrix,
    /// `[−A_ηξ; sI − A_ξ]`.
    pub psi: CMatrix,
    /// `I − C_ξ⁺ C_ξ`.
    pub xi: RMatrix,
    pub product: CMatrix,
    pub product_rank: usize,
}

pub fn proof_diagnostics(form: &InvariantZeroForm, s: Complex64, tol: RankTolerance) -> Result<ProofDiagnostics> {
    let l_eta = form.l_eta();
    let rho = form.rho();
    let l_u = form.b_xi.ncols();
    let n = l_eta + rho;
    let to_c = |x: f64| Complex64::new(x, 0.0);

    let mut m = CMatrix::zeros(n, l_eta + l_u);
    for i in 0..l_eta {
        for j in 0..l_eta {
            m[(i, j)] = to_c(-form.a_eta[(i, j)]);
        }
        m[(i, i)] += s;
    }
    for i in 0..rho {
        for j in 0..l_eta {
            m[(l_eta + i, j)] = to_c(-form.a_xi_eta[(i, j)]);
        }
        for j in 0..l_u {
            m[(l_eta + i, l_eta + j)] = to_c(form.b_xi[(i, j)]);
        }
    }
    let phi = CMatrix::identity(n, n) - &m * linalg::pseudoinverse(&m, tol)?;

    let mut psi = CMatrix::zeros(n, rho);
    for i in 0..l_eta {
        for j in 0..rho {
            psi[(i, j)] = to_c(-form.a_eta_xi[(i, j)]);
        }
    }
    for i in 0..rho {
        for j in 0..rho {
            psi[(l_eta + i, j)] = to_c(-form.a_xi[(i, j)]);
        }
        psi[(l_eta + i, i)] += s;
    }

    let xi = RMatrix::identity(rho, rho) - linalg::pseudoinverse(&form.c_xi, tol)? * &form.c_xi;
    let product = &phi * &psi * linalg::to_complex(&xi);
    let scale = linalg::spectral_norm(&psi).max(f64::MIN_POSITIVE);
    let product_rank = linalg::rank_with_scale(&product, tol, scale);
    Ok(ProofDiagnostics {
        point: s,
        phi,
        psi,
        xi,
        product,
        product_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::matrix;

    fn siso() -> StateSpace {
        StateSpace::strictly_proper(
            matrix(3, 3, &[-9.0, -6.5, -3.0, 4.0, 0.0, 0.0, 0.0, 2.0, 0.0]),
            matrix(3, 1, &[0.5, 0.0, 0.0]),
            matrix(1, 3, &[0.0, 0.5, 0.25]),
        )
        .unwrap()
    }

    #[test]
    fn pencil_layout() {
        let sys = siso();
        let s = Complex64::new(2.0, 1.0);
        let chi = pencil(&sys, s);
        assert_eq!(chi.shape(), (4, 4));
        assert_eq!(chi[(0, 0)], s + 9.0);
        assert_eq!(chi[(0, 3)], Complex64::new(0.5, 0.0));
        assert_eq!(chi[(3, 2)], Complex64::new(0.25, 0.0));
    }

    #[test]
    fn normal_rank_needs_three_samples() {
        assert!(estimate_normal_rank(&siso(), RankTolerance::default(), 2, 0).is_err());
    }

    #[test]
    fn zero_output_pencil_has_state_rank() {
        let sys = StateSpace::strictly_proper(
            matrix(2, 2, &[1.0, 2.0, 0.0, -1.0]),
            RMatrix::zeros(2, 1),
            RMatrix::zeros(1, 2),
        )
        .unwrap();
        assert_eq!(estimate_normal_rank(&sys, RankTolerance::default(), 7, 3).unwrap(), 2);
    }

    #[test]
    fn siso_det_polynomial_is_linear() {
        // det χ(s) = −(CB-scaled numerator) = −(s + 1) up to scale
        let out = zeros_by_det_interpolation(&siso(), &ZeroOptions::default()).unwrap();
        assert_eq!(out.degree, 1);
        let vals = out.zeros.values();
        assert_eq!(vals.len(), 1);
        assert!((vals[0] + 1.0).norm() < 1e-10);
        assert!(out.zeros.all_verified());
    }

    #[test]
    fn polynomial_roots_match_known_factors() {
        // (t − 1)(t + 2)(t − 3) = t³ − 2t² − 5t + 6
        let mut r = polynomial_roots(&[6.0, -5.0, -2.0, 1.0]).unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (z, e) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((z - Complex64::new(e, 0.0)).norm() < 1e-12);
        }
        assert!(polynomial_roots(&[3.0]).unwrap().is_empty());
    }

    #[test]
    fn nonsquare_det_is_not_applicable() {
        let sys = StateSpace::strictly_proper(RMatrix::identity(2, 2), RMatrix::identity(2, 2), RMatrix::identity(1, 2)).unwrap();
        assert!(matches!(
            zeros_by_det_interpolation(&sys, &ZeroOptions::default()),
            Err(Error::OracleNotApplicable(_))
        ));
    }

    #[test]
    fn singular_pencil_is_not_applicable() {
        // output never sees the input: χ(s) loses rank everywhere
        let sys = StateSpace::strictly_proper(
            RMatrix::from_diagonal(&nalgebra::dvector![-1.0, -2.0]),
            matrix(2, 1, &[1.0, 0.0]),
            matrix(1, 2, &[0.0, 1.0]),
        )
        .unwrap();
        assert!(matches!(
            zeros_by_det_interpolation(&sys, &ZeroOptions::default()),
            Err(Error::OracleNotApplicable(_))
        ));
    }

    #[test]
    fn empty_candidates_verify_to_empty() {
        let out = verify_zeros(&siso(), &ZeroSet::empty(Method::Candidates), &ZeroOptions::default());
        assert!(out.is_empty());
        assert_eq!(out.normal_rank, Some(4));
    }
}
