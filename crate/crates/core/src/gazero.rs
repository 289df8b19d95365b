//! Geometric-approach zeros.
//!
//! `V*` is the largest `(A, B)`-controlled invariant subspace inside
//! `ker C`, `S*` the smallest `(A, C)`-conditioned invariant subspace
//! containing `im B`, and `R* = V* ∩ S*`. The zeros are the eigenvalues of
//! the map induced on `V* / R*`.

use crate::error::{Error, Result};
use crate::linalg::{self, RMatrix, RankTolerance};
use crate::model::{Method, StateSpace, ZeroSet};
use crate::options::ZeroOptions;
use crate::rosenbrock;

/// A fixed-point iteration's final basis and the dimension at every step.
#[derive(Debug, Clone)]
pub struct SubspaceIteration {
    pub basis: RMatrix,
    pub dimensions: Vec<usize>,
}

fn empty(n: usize) -> RMatrix {
    RMatrix::zeros(n, 0)
}

/// Orthonormal basis of `range(U) + range(W)`.
pub fn subspace_sum(u: &RMatrix, w: &RMatrix, tol: RankTolerance) -> RMatrix {
    linalg::range_basis(&linalg::hstack(&[u, w]), tol)
}

/// Orthonormal basis of `range(U) ∩ range(W)` for orthonormal `U`, `W`.
///
/// Solves `U a = W b` through the kernel of `[U, −W]` and maps the
/// coefficients back with `U`.
pub fn subspace_intersection(u: &RMatrix, w: &RMatrix, tol: RankTolerance) -> RMatrix {
    let n = u.nrows();
    if u.ncols() == 0 || w.ncols() == 0 {
        return empty(n);
    }
    let stacked = linalg::hstack(&[u, &(-w)]);
    let kernel = linalg::kernel_basis_scaled(&stacked, tol, 1.0);
    if kernel.ncols() == 0 {
        return empty(n);
    }
    let coeffs = kernel.rows(0, u.ncols()).into_owned();
    linalg::range_basis(&(u * coeffs), tol)
}

/// `{x : A x ∈ range(W)}` for orthonormal `W`.
fn preimage(a: &RMatrix, w: &RMatrix, tol: RankTolerance) -> RMatrix {
    let n = a.nrows();
    let projector = RMatrix::identity(n, n) - w * w.transpose();
    let scale = linalg::spectral_norm(a);
    linalg::kernel_basis_scaled(&(projector * a), tol, scale)
}

/// Descending recursion `V₀ = ker C`, `V_{k+1} = ker C ∩ A⁻¹(V_k + im B)`.
pub fn mainco_trace(a: &RMatrix, im_b: &RMatrix, ker_c: &RMatrix, tol: RankTolerance) -> SubspaceIteration {
    let mut v = ker_c.clone();
    let mut dimensions = vec![v.ncols()];
    while v.ncols() > 0 {
        let target = subspace_sum(&v, im_b, tol);
        let next = subspace_intersection(ker_c, &preimage(a, &target, tol), tol);
        if next.ncols() >= v.ncols() {
            break;
        }
        dimensions.push(next.ncols());
        v = next;
    }
    SubspaceIteration { basis: v, dimensions }
}

/// Ascending recursion `S₀ = im B`, `S_{k+1} = im B + A (S_k ∩ ker C)`.
pub fn miinco_trace(a: &RMatrix, ker_c: &RMatrix, im_b: &RMatrix, tol: RankTolerance) -> SubspaceIteration {
    let n = a.nrows();
    let mut s = im_b.clone();
    let mut dimensions = vec![s.ncols()];
    let scale = linalg::spectral_norm(a);
    while s.ncols() > 0 && s.ncols() < n {
        let inside = subspace_intersection(&s, ker_c, tol);
        let image = if scale > 0.0 { (a * inside) / scale } else { empty(n) };
        let next = subspace_sum(im_b, &image, tol);
        if next.ncols() <= s.ncols() {
            break;
        }
        dimensions.push(next.ncols());
        s = next;
    }
    SubspaceIteration { basis: s, dimensions }
}

/// Basis of `V*`.
pub fn mainco(a: &RMatrix, im_b: &RMatrix, ker_c: &RMatrix, tol: RankTolerance) -> RMatrix {
    mainco_trace(a, im_b, ker_c, tol).basis
}

/// Basis of `S*`.
pub fn miinco(a: &RMatrix, ker_c: &RMatrix, im_b: &RMatrix, tol: RankTolerance) -> RMatrix {
    miinco_trace(a, ker_c, im_b, tol).basis
}

/// `‖(I − P) A V‖` with `P` the projector onto `range(V) + im B`.
pub fn controlled_invariance_residual(a: &RMatrix, v: &RMatrix, im_b: &RMatrix, tol: RankTolerance) -> f64 {
    if v.ncols() == 0 {
        return 0.0;
    }
    let w = subspace_sum(v, im_b, tol);
    let n = a.nrows();
    let projector = RMatrix::identity(n, n) - &w * w.transpose();
    linalg::spectral_norm(&(projector * a * v))
}

#[derive(Debug, Clone)]
pub struct GeometricSubspaces {
    pub ker_c: RMatrix,
    pub im_b: RMatrix,
    pub v_star: RMatrix,
    pub s_star: RMatrix,
    pub r_star: RMatrix,
    /// `[R*, complement of R* in V*]`, orthonormal, `R*` columns first.
    pub v1: RMatrix,
    pub x22: RMatrix,
    pub v_trace: Vec<usize>,
    pub s_trace: Vec<usize>,
}

/// Relative threshold used by the subspace recursions when the caller
/// keeps the default tolerance. Each step of the recursions compounds the
/// rounding error of the previous one (roughly threefold per step on
/// random systems), so the shape default of `≈1e-13` misjudges dimensions
/// after a handful of steps.
pub const GEOMETRIC_DEFAULT_TOL: f64 = 1e-9;

/// `tol` itself when set explicitly, otherwise [`GEOMETRIC_DEFAULT_TOL`].
pub fn geometric_tolerance(tol: RankTolerance) -> RankTolerance {
    if tol.is_default() {
        RankTolerance::relative(GEOMETRIC_DEFAULT_TOL).expect("positive")
    } else {
        tol
    }
}

pub fn geometric_subspaces(sys: &StateSpace, tol: RankTolerance) -> Result<GeometricSubspaces> {
    let tol = geometric_tolerance(tol);
    if !sys.has_zero_feedthrough() {
        return Err(Error::InvalidInput(
            "geometric zeros need D = 0; apply the dynamic extension first".into(),
        ));
    }
    let n = sys.states();
    let a = sys.a();
    let ker_c = if sys.c().norm() == 0.0 {
        RMatrix::identity(n, n)
    } else {
        linalg::kernel_basis(sys.c(), tol)
    };
    let im_b = linalg::range_basis(sys.b(), tol);
    let v = mainco_trace(a, &im_b, &ker_c, tol);
    let s = miinco_trace(a, &ker_c, &im_b, tol);
    let r_star = subspace_intersection(&v.basis, &s.basis, tol);

    let n_v = v.basis.ncols();
    let n_r = r_star.ncols().min(n_v);
    let v1 = if n_r == 0 {
        v.basis.clone()
    } else {
        let projected = (RMatrix::identity(n, n) - &r_star * r_star.transpose()) * &v.basis;
        let complement = linalg::range_basis(&projected, tol);
        let keep = complement.ncols().min(n_v - n_r);
        linalg::hstack(&[&r_star, &complement.columns(0, keep).into_owned()])
    };

    let x22 = if n_v == 0 {
        RMatrix::zeros(0, 0)
    } else {
        let basis = linalg::hstack(&[&v1, sys.b()]);
        let x = linalg::pseudoinverse(&basis, tol)? * a * &v1;
        let k = v1.ncols() - n_r;
        x.view((n_r, n_r), (k, k)).into_owned()
    };

    Ok(GeometricSubspaces {
        ker_c,
        im_b,
        v_star: v.basis,
        s_star: s.basis,
        r_star,
        v1,
        x22,
        v_trace: v.dimensions,
        s_trace: s.dimensions,
    })
}

/// Zeros as `eig(X₂₂)`, each checked for a pencil rank drop.
pub fn gazero_zeros(sys: &StateSpace, opts: &ZeroOptions) -> Result<ZeroSet> {
    let g = geometric_subspaces(sys, opts.rank_tol)?;
    if g.x22.nrows() == 0 {
        return Ok(rosenbrock::verify_zeros(sys, &ZeroSet::empty(Method::Gazero), opts));
    }
    let values = linalg::eigenvalues(&g.x22)?;
    let candidates = ZeroSet::from_values(&values, Method::Gazero, opts.cluster);
    Ok(rosenbrock::verify_zeros(sys, &candidates, opts))
}
