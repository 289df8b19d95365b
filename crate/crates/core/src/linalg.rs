//! Dense matrix kernels with tolerance-controlled rank semantics.
//!
//! Rank, nullspaces, ranges and the pseudoinverse are all read off one
//! singular value decomposition, so the rank decisions made by different
//! callers agree with each other. The decomposition itself comes from
//! `faer`; nalgebra's bidiagonal SVD returns wrong factors for some exactly
//! rank-deficient inputs, which is precisely the case nullspaces care about. Every rank decision compares singular
//! values against `threshold · scale`, where `scale` is normally the largest
//! singular value of the matrix itself.

use nalgebra::{ComplexField, DMatrix, Schur};

use crate::error::{Error, Result};

pub use nalgebra::Complex;

pub type Complex64 = Complex<f64>;
pub type RMatrix = DMatrix<f64>;
pub type CMatrix = DMatrix<Complex64>;

/// Full SVD `M = U diag(s) Vᴴ` with `s` in descending order.
#[derive(Debug, Clone)]
pub struct FullSvd<T: Scalar> {
    /// `rows × rows`.
    pub u: DMatrix<T>,
    /// `min(rows, cols)` values.
    pub s: Vec<f64>,
    /// `cols × cols`.
    pub v: DMatrix<T>,
}

mod sealed {
    pub trait Sealed {}
    impl Sealed for f64 {}
    impl Sealed for super::Complex64 {}
}

/// Scalar types the kernels accept: `f64` and `Complex<f64>`.
pub trait Scalar: ComplexField<RealField = f64> + Copy + sealed::Sealed {
    /// Full SVD of a nonempty matrix.
    fn full_svd(m: &DMatrix<Self>) -> FullSvd<Self>;
}

macro_rules! faer_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn full_svd(m: &DMatrix<Self>) -> FullSvd<Self> {
                let f = faer::Mat::<$t>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
                match f.svd() {
                    Ok(svd) => {
                        let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
                        FullSvd {
                            u: DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
                            s: (0..s.nrows()).map(|k| ComplexField::real(s[k])).collect(),
                            v: DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
                        }
                    }
                    Err(_) => nalgebra_full_svd(m),
                }
            }
        }
    };
}

faer_scalar!(f64);
faer_scalar!(Complex64);

/// Full SVD; `s` is empty for an empty matrix.
pub fn svd<T: Scalar>(m: &DMatrix<T>) -> FullSvd<T> {
    if m.is_empty() {
        return FullSvd {
            u: DMatrix::identity(m.nrows(), m.nrows()),
            s: Vec::new(),
            v: DMatrix::identity(m.ncols(), m.ncols()),
        };
    }
    T::full_svd(m)
}

/// Fallback when the faer iteration does not converge.
fn nalgebra_full_svd<T: Scalar>(m: &DMatrix<T>) -> FullSvd<T> {
    let (rows, cols) = m.shape();
    let n = rows.max(cols);
    let mut padded = DMatrix::<T>::zeros(n, n);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = padded.svd(true, true);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v_t requested").adjoint();
    // with zero padding the leading rows×rows / cols×cols blocks are not
    // orthonormal in general; re-orthonormalize them
    let u = DMatrix::from_fn(rows, n, |i, j| u[(i, order[j])]).qr().q().columns(0, rows).into_owned();
    let v = DMatrix::from_fn(cols, n, |i, j| v[(i, order[j])]).qr().q().columns(0, cols).into_owned();
    let s = order.iter().take(rows.min(cols)).map(|&k| svd.singular_values[k]).collect();
    FullSvd { u, s, v }
}

const DEFAULT_FACTOR: f64 = 64.0;
const SCHUR_MAX_ITER: usize = 10_000;

/// Relative singular-value threshold used for every rank decision.
///
/// The default is shape dependent: `max(rows, cols) · ε · 64`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RankTolerance {
    relative: Option<f64>,
}

impl RankTolerance {
    pub fn relative(threshold: f64) -> Result<Self> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(Error::InvalidInput(format!(
                "rank tolerance must be positive and finite, got {threshold}"
            )));
        }
        Ok(Self {
            relative: Some(threshold),
        })
    }

    /// Threshold applied to a matrix of the given shape.
    pub fn threshold_for(&self, rows: usize, cols: usize) -> f64 {
        self.relative
            .unwrap_or_else(|| rows.max(cols).max(1) as f64 * f64::EPSILON * DEFAULT_FACTOR)
    }

    pub fn is_default(&self) -> bool {
        self.relative.is_none()
    }

    pub fn description(&self) -> String {
        match self.relative {
            Some(t) => format!("relative threshold {t:e}"),
            None => "max(rows, cols) * eps * 64".to_string(),
        }
    }
}

pub fn ensure_finite<T: Scalar>(m: &DMatrix<T>, name: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} contains non-finite entries")))
    }
}

fn ensure_nonempty<T: Scalar>(m: &DMatrix<T>, name: &str) -> Result<()> {
    if m.is_empty() {
        Err(Error::InvalidInput(format!("{name} is empty ({}x{})", m.nrows(), m.ncols())))
    } else {
        Ok(())
    }
}

/// Singular values in descending order. Empty for an empty matrix.
pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    T::full_svd(m).s
}

pub fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// 2-norm condition number; infinite for singular or non-square input.
pub fn condition_number<T: Scalar>(m: &DMatrix<T>) -> f64 {
    if !m.is_square() || m.is_empty() {
        return f64::INFINITY;
    }
    let sv = singular_values(m);
    let (max, min) = (sv[0], sv[sv.len() - 1]);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn count_above(sv: &[f64], cutoff: f64) -> usize {
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Number of singular values above `tol · σ_max(m)`.
pub fn numerical_rank<T: Scalar>(m: &DMatrix<T>, tol: RankTolerance) -> Result<usize> {
    ensure_nonempty(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    let sv = singular_values(m);
    let cutoff = tol.threshold_for(m.nrows(), m.ncols()) * sv[0];
    Ok(count_above(&sv, cutoff))
}

/// Rank measured against an external scale instead of `σ_max(m)`.
///
/// Needed when `m` is a product or projection whose own largest singular
/// value may be pure rounding noise.
pub fn rank_with_scale<T: Scalar>(m: &DMatrix<T>, tol: RankTolerance, scale: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let cutoff = tol.threshold_for(m.nrows(), m.ncols()) * scale;
    count_above(&singular_values(m), cutoff)
}

/// Full left singular basis with the singular values padded to its width.
fn full_left_svd<T: Scalar>(m: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>) {
    let FullSvd { u, mut s, .. } = T::full_svd(m);
    s.resize(m.nrows(), 0.0);
    (u, s)
}

fn left_null_with_cutoff<T: Scalar>(m: &DMatrix<T>, cutoff: impl Fn(f64) -> f64) -> DMatrix<T> {
    let rows = m.nrows();
    if rows == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.ncols() == 0 {
        return DMatrix::identity(rows, rows);
    }
    let (u, sv) = full_left_svd(m);
    let rank = count_above(&sv, cutoff(sv[0])).min(rows);
    u.columns(rank, rows - rank).adjoint()
}

/// Orthonormal rows spanning the left nullspace: `N·M ≈ 0`, `N·Nᴴ = I`.
///
/// The result has `rows(M) − rank(M)` rows; a square invertible input
/// yields a `0 × rows` matrix.
pub fn nullspace_rows<T: Scalar>(m: &DMatrix<T>, tol: RankTolerance) -> Result<DMatrix<T>> {
    if m.ncols() == 0 {
        return Err(Error::InvalidInput("nullspace_rows needs at least one column".into()));
    }
    ensure_finite(m, "matrix")?;
    let t = tol.threshold_for(m.nrows(), m.ncols());
    Ok(left_null_with_cutoff(m, |smax| t * smax))
}

/// Orthonormal column basis of the right nullspace of `m`, decided against
/// `tol · scale`.
pub fn kernel_basis_scaled<T: Scalar>(m: &DMatrix<T>, tol: RankTolerance, scale: f64) -> DMatrix<T> {
    let t = tol.threshold_for(m.nrows(), m.ncols());
    let adj = m.adjoint();
    if adj.ncols() == 0 {
        return DMatrix::identity(m.ncols(), m.ncols());
    }
    left_null_with_cutoff(&adj, |_| t * scale).adjoint()
}

/// Orthonormal column basis of the right nullspace of `m`.
pub fn kernel_basis<T: Scalar>(m: &DMatrix<T>, tol: RankTolerance) -> DMatrix<T> {
    let scale = spectral_norm(m);
    kernel_basis_scaled(m, tol, scale)
}

/// Orthonormal column basis of the range of `m` (possibly zero columns).
pub fn range_basis<T: Scalar>(m: &DMatrix<T>, tol: RankTolerance) -> DMatrix<T> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let (u, sv) = full_left_svd(m);
    let cutoff = tol.threshold_for(m.nrows(), m.ncols()) * sv[0];
    let rank = count_above(&sv, cutoff);
    u.columns(0, rank).into_owned()
}

/// Moore–Penrose pseudoinverse with singular values below `tol · σ_max`
/// treated as zero.
pub fn pseudoinverse<T: Scalar>(m: &DMatrix<T>, tol: RankTolerance) -> Result<DMatrix<T>> {
    ensure_finite(m, "matrix")?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(DMatrix::zeros(cols, rows));
    }
    let FullSvd { u, s: sv, v } = T::full_svd(m);
    let cutoff = tol.threshold_for(rows, cols) * sv[0];
    let mut pinv = DMatrix::<T>::zeros(cols, rows);
    for (k, &s) in sv.iter().enumerate() {
        if s > cutoff {
            pinv += (v.column(k) * u.column(k).adjoint()).unscale(s);
        }
    }
    Ok(pinv)
}

/// Result of a checked inversion.
#[derive(Debug, Clone)]
pub struct Inverse {
    pub inverse: RMatrix,
    pub condition: f64,
}

/// Inverts a square matrix, refusing when it is numerically singular.
pub fn solve_or_invert(m: &RMatrix) -> Result<Inverse> {
    if !m.is_square() || m.is_empty() {
        return Err(Error::InvalidInput(format!(
            "inversion needs a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m, "matrix")?;
    let condition = condition_number(m);
    let limit = 1.0 / RankTolerance::default().threshold_for(m.nrows(), m.ncols());
    if !(condition < limit) {
        return Err(Error::Singular { condition });
    }
    let inverse = m
        .clone()
        .try_inverse()
        .ok_or(Error::Singular { condition })?;
    Ok(Inverse { inverse, condition })
}

/// Diagonal similarity scaling (powers of two) that equalizes row and
/// column norms before the eigenvalue iteration.
fn balance<T: Scalar>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    let radix = 2.0_f64;
    let radix_sq = radix * radix;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].norm1();
                    r += m[(i, j)].norm1();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix_sq;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix_sq;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    m[(i, j)] = m[(i, j)].unscale(f);
                    m[(j, i)] = m[(j, i)].scale(f);
                }
            }
        }
    }
}

fn eigen_input<T: Scalar>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m, "matrix")?;
    let mut work = m.clone();
    balance(&mut work);
    Ok(work)
}

/// Eigenvalues of a real matrix, with multiplicity. Nonreal values come in
/// exact conjugate pairs.
pub fn eigenvalues(m: &RMatrix) -> Result<Vec<Complex64>> {
    let work = eigen_input(m)?;
    if work.is_empty() {
        return Ok(Vec::new());
    }
    let n = work.nrows();
    let schur = Schur::try_new(work, f64::EPSILON, SCHUR_MAX_ITER).ok_or_else(|| {
        Error::NumericalFailure(format!("real Schur iteration did not converge ({n}x{n} matrix)"))
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues of a complex matrix, with multiplicity.
pub fn eigenvalues_complex(m: &CMatrix) -> Result<Vec<Complex64>> {
    let work = eigen_input(m)?;
    if work.is_empty() {
        return Ok(Vec::new());
    }
    let n = work.nrows();
    let schur = Schur::try_new(work, f64::EPSILON, SCHUR_MAX_ITER).ok_or_else(|| {
        Error::NumericalFailure(format!("complex Schur iteration did not converge ({n}x{n} matrix)"))
    })?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

/// Largest eigenvalue modulus, falling back to the Frobenius norm when the
/// eigenvalue iteration fails.
pub fn spectral_radius_estimate(a: &RMatrix) -> f64 {
    match eigenvalues(a) {
        Ok(ev) => ev.iter().map(|z| z.norm()).fold(0.0, f64::max),
        Err(_) => a.norm(),
    }
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Row-stacks blocks that share a column count.
pub fn vstack<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((r, 0), b.shape()).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Column-stacks blocks that share a row count.
pub fn hstack<T: Scalar>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, c), b.shape()).copy_from(*b);
        c += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn tol() -> RankTolerance {
        RankTolerance::default()
    }

    #[test]
    fn rank_of_identity_and_zero() {
        assert_eq!(numerical_rank(&RMatrix::identity(3, 3), tol()).unwrap(), 3);
        assert_eq!(numerical_rank(&RMatrix::zeros(2, 5), tol()).unwrap(), 0);
    }

    #[test]
    fn rank_rejects_nan_and_empty() {
        let mut m = RMatrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(numerical_rank(&m, tol()), Err(Error::InvalidInput(_))));
        assert!(numerical_rank(&RMatrix::zeros(0, 3), tol()).is_err());
    }

    #[test]
    fn tolerance_must_be_positive() {
        assert!(RankTolerance::relative(0.0).is_err());
        assert!(RankTolerance::relative(-1.0).is_err());
        assert!(RankTolerance::relative(f64::NAN).is_err());
        let t = RankTolerance::relative(1e-6).unwrap();
        assert_eq!(t.threshold_for(100, 3), 1e-6);
        assert_eq!(tol().threshold_for(3, 5), 5.0 * f64::EPSILON * 64.0);
    }

    #[test]
    fn nullspace_of_invertible_is_empty() {
        let m = dmatrix![2.0, 1.0; 1.0, 3.0];
        let n = nullspace_rows(&m, tol()).unwrap();
        assert_eq!(n.shape(), (0, 2));
    }

    #[test]
    fn nullspace_of_tall_matrix() {
        let m = dmatrix![1.0, 2.0; 3.0, 4.0; 5.0, 6.0; 7.0, 8.0; 9.0, 1.0];
        let n = nullspace_rows(&m, tol()).unwrap();
        assert_eq!(n.shape(), (3, 5));
        assert!((&n * &m).norm() < 1e-12);
        assert!((&n * n.transpose() - RMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn nullspace_of_wide_rank_deficient() {
        // second row is twice the first
        let m = dmatrix![1.0, 2.0, 3.0; 2.0, 4.0, 6.0];
        let n = nullspace_rows(&m, tol()).unwrap();
        assert_eq!(n.nrows(), 1);
        assert!((&n * &m).norm() < 1e-12);
    }

    #[test]
    fn kernel_and_range_are_complementary() {
        let m = dmatrix![1.0, 0.0, 1.0; 0.0, 1.0, 1.0; 1.0, 1.0, 2.0];
        let k = kernel_basis(&m, tol());
        let r = range_basis(&m, tol());
        assert_eq!(k.ncols(), 1);
        assert_eq!(r.ncols(), 2);
        assert!((&m * &k).norm() < 1e-12);
    }

    #[test]
    fn pseudoinverse_of_identity() {
        let p = pseudoinverse(&RMatrix::identity(4, 4), tol()).unwrap();
        assert!((p - RMatrix::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn pseudoinverse_zero_row_pattern() {
        let m = dmatrix![1.0, 2.0; 0.0, 0.0; 3.0, -1.0];
        let p = pseudoinverse(&m, tol()).unwrap();
        let mmp = &m * &p;
        for k in 0..3 {
            assert!(mmp[(1, k)].abs() < 1e-14 && mmp[(k, 1)].abs() < 1e-14);
        }
    }

    #[test]
    fn pseudoinverse_zero_column_pattern() {
        let m = dmatrix![1.0, 0.0, 2.0; 4.0, 0.0, -1.0];
        let p = pseudoinverse(&m, tol()).unwrap();
        let pm = &p * &m;
        for k in 0..3 {
            assert!(pm[(1, k)].abs() < 1e-14 && pm[(k, 1)].abs() < 1e-14);
        }
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let mut ev = eigenvalues(&RMatrix::from_diagonal(&nalgebra::dvector![-2.0, -3.0, -4.0])).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        let expected = [-4.0, -3.0, -2.0];
        for (z, e) in ev.iter().zip(expected) {
            assert!((z - Complex64::new(e, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn eigenvalues_of_companion_of_s2_plus_1() {
        let m = dmatrix![0.0, -1.0; 1.0, 0.0];
        let ev = eigenvalues(&m).unwrap();
        assert_eq!(ev.len(), 2);
        assert!(ev.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14 && z.re.abs() < 1e-14));
        assert_eq!(ev[0], ev[1].conj());
    }

    #[test]
    fn complex_eigenvalues_of_triangular() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let m = CMatrix::from_row_slice(2, 2, &[i, one, Complex64::new(0.0, 0.0), -one]);
        let mut ev = eigenvalues_complex(&m).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] + one).norm() < 1e-14);
        assert!((ev[1] - i).norm() < 1e-14);
    }

    #[test]
    fn eigenvalues_need_square() {
        assert!(eigenvalues(&RMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn inversion() {
        let inv = solve_or_invert(&RMatrix::identity(3, 3)).unwrap();
        assert!((inv.inverse - RMatrix::identity(3, 3)).norm() < 1e-15);
        assert!((inv.condition - 1.0).abs() < 1e-12);
        let singular = dmatrix![1.0, 2.0; 2.0, 4.0];
        assert!(matches!(solve_or_invert(&singular), Err(Error::Singular { .. })));
    }

    #[test]
    fn stacking() {
        let a = dmatrix![1.0, 2.0];
        let b = dmatrix![3.0, 4.0; 5.0, 6.0];
        assert_eq!(vstack(&[&a, &b]), dmatrix![1.0, 2.0; 3.0, 4.0; 5.0, 6.0]);
        assert_eq!(hstack(&[&b, &b.columns(0, 1).into_owned()]).ncols(), 3);
    }
}
