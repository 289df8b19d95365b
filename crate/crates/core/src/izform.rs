//! Invariant zero form.
//!
//! The state transformation `T = [B_z; C̄]` stacks `l_η = l_x − ρ` rows
//! `B_z` taken from the left annihilator of `B` on top of the output
//! derivative rows `C̄ᵢ = [Cᵢ; CᵢA; …; CᵢA^(ρᵢ−1)]`. In the coordinates
//! `(η, ξ) = T x` the input only enters the `ξ` block, the output only reads
//! the first coordinate of each output block of `ξ`, and for square systems
//! the invariant zeros are the eigenvalues of the `η` block `A_η`.

use crate::error::{Error, Result};
use crate::linalg::{self, RMatrix, RankTolerance};
use crate::model::{self, Method, RelativeDegree, StateSpace, ZeroSet};
use crate::options::ZeroOptions;
use crate::rosenbrock;

/// Ranks entering the rank formula for `T̄ = [B̄; C̄]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankDiagnostics {
    pub states: usize,
    pub rank_b: usize,
    /// Rank of `Ĉ`, the stack of `Cᵢ A^(ρᵢ−1)`.
    pub rank_c_hat: usize,
    /// `dim(R(B̄ᵀ) ∩ R(Ĉᵀ))`.
    pub shared_dimension: usize,
    /// `l_x − rank B + rank Ĉ − shared_dimension`.
    pub rank_t_bar: usize,
    pub rank_c_bar: usize,
    pub total_relative_degree: usize,
}

impl std::fmt::Display for RankDiagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "l_x={}, rank B={}, rank C_hat={}, shared dim={}, rank T_bar={}, rank C_bar={}, rho={}",
            self.states,
            self.rank_b,
            self.rank_c_hat,
            self.shared_dimension,
            self.rank_t_bar,
            self.rank_c_bar,
            self.total_relative_degree
        )
    }
}

/// Transformation data: `T = [B_z; C̄]` and `S = T⁻¹`.
#[derive(Debug, Clone)]
pub struct TransformationBundle {
    /// Orthonormal rows with `B̄ B = 0`.
    pub b_bar: RMatrix,
    pub c_bar: RMatrix,
    pub b_z: RMatrix,
    pub t: RMatrix,
    pub s: RMatrix,
    pub condition_t: f64,
    pub profile: RelativeDegree,
}

impl TransformationBundle {
    pub fn l_eta(&self) -> usize {
        self.b_z.nrows()
    }
}

/// Residuals of the sparsity patterns the invariant zero form must show.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureResiduals {
    /// `‖T S − I‖`.
    pub inverse: f64,
    /// Top `l_η` rows of `T B`.
    pub b_top: f64,
    /// First `l_η` columns of `C S`.
    pub c_left: f64,
    /// Rows of `B_ξ` that must vanish (all but the last row per block).
    pub b_xi_pattern: f64,
    /// Deviation of `C_ξ` from `[E₁ … E_ly]`.
    pub c_xi_pattern: f64,
    /// Shift rows of `A_ξ` against the shifted identity.
    pub a_xi_shift: f64,
    /// Shift rows of `A_ξη`, which must vanish.
    pub a_xi_eta_shift: f64,
    /// `‖(I − B_ξ B_ξ⁺) A_ξη‖` when `l_u ≥ l_y` and `B_ξ` has full column rank.
    pub annihilation: Option<f64>,
    /// `1e-8 · (1 + ‖A‖ · cond(T))`.
    pub bound: f64,
}

impl StructureResiduals {
    /// Largest sparsity residual (the annihilation residual excluded).
    pub fn max_structural(&self) -> f64 {
        [
            self.b_top,
            self.c_left,
            self.b_xi_pattern,
            self.c_xi_pattern,
            self.a_xi_shift,
            self.a_xi_eta_shift,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn worst(&self) -> (&'static str, f64) {
        [
            ("top rows of TB", self.b_top),
            ("leading columns of CS", self.c_left),
            ("B_xi zero rows", self.b_xi_pattern),
            ("C_xi unit pattern", self.c_xi_pattern),
            ("A_xi shift rows", self.a_xi_shift),
            ("A_xi_eta shift rows", self.a_xi_eta_shift),
        ]
        .into_iter()
        .fold(("none", 0.0), |acc, x| if x.1 > acc.1 { x } else { acc })
    }
}

/// Transformed realization `(T A S, T B, C S)` split into its partitions.
#[derive(Debug, Clone)]
pub struct InvariantZeroForm {
    pub a_eta: RMatrix,
    pub a_eta_xi: RMatrix,
    pub a_xi_eta: RMatrix,
    pub a_xi: RMatrix,
    pub b_xi: RMatrix,
    pub c_xi: RMatrix,
    /// Full transformed matrices.
    pub a_full: RMatrix,
    pub b_full: RMatrix,
    pub c_full: RMatrix,
    pub bundle: TransformationBundle,
    pub residuals: StructureResiduals,
    /// Square system with full-column-rank `B_ξ`: the hypotheses under which
    /// `eig(A_η)` are exactly the invariant zeros.
    pub hypotheses_hold: bool,
}

impl InvariantZeroForm {
    pub fn l_eta(&self) -> usize {
        self.a_eta.nrows()
    }
    pub fn rho(&self) -> usize {
        self.a_xi.nrows()
    }
    pub fn profile(&self) -> &RelativeDegree {
        &self.bundle.profile
    }
}

/// Stacks `Cᵢ, CᵢA, …, CᵢA^(ρᵢ−1)` for every output.
pub fn output_derivative_rows(sys: &StateSpace, profile: &RelativeDegree) -> RMatrix {
    let mut rows = Vec::with_capacity(profile.total());
    for (i, &deg) in profile.per_output().iter().enumerate() {
        let mut row = sys.c().row(i).into_owned();
        for _ in 0..deg {
            rows.push(row.clone());
            row = &row * sys.a();
        }
    }
    if rows.is_empty() {
        RMatrix::zeros(0, sys.states())
    } else {
        RMatrix::from_rows(&rows)
    }
}

fn c_hat(sys: &StateSpace, profile: &RelativeDegree) -> RMatrix {
    let rows: Vec<_> = profile
        .per_output()
        .iter()
        .enumerate()
        .map(|(i, &deg)| {
            let mut row = sys.c().row(i).into_owned();
            for _ in 1..deg {
                row = &row * sys.a();
            }
            row
        })
        .collect();
    RMatrix::from_rows(&rows)
}

fn rank_or_zero(m: &RMatrix, tol: RankTolerance) -> usize {
    if m.is_empty() {
        0
    } else {
        linalg::numerical_rank(m, tol).unwrap_or(0)
    }
}

/// Ranks behind the invertibility of `T̄ = [B̄; C̄]`.
pub fn rank_diagnostics(sys: &StateSpace, profile: &RelativeDegree, tol: RankTolerance) -> Result<RankDiagnostics> {
    let b_bar = linalg::nullspace_rows(sys.b(), tol)?;
    let c_bar = output_derivative_rows(sys, profile);
    let c_hat = c_hat(sys, profile);
    let rank_b = rank_or_zero(sys.b(), tol);
    let rank_c_hat = rank_or_zero(&c_hat, tol);
    let rank_b_bar = b_bar.nrows();
    let stacked_hat = linalg::vstack(&[&b_bar, &c_hat]);
    let shared_dimension = (rank_b_bar + rank_c_hat).saturating_sub(rank_or_zero(&stacked_hat, tol));
    let rank_t_bar = rank_or_zero(&linalg::vstack(&[&b_bar, &c_bar]), tol);
    Ok(RankDiagnostics {
        states: sys.states(),
        rank_b,
        rank_c_hat,
        shared_dimension,
        rank_t_bar,
        rank_c_bar: rank_or_zero(&c_bar, tol),
        total_relative_degree: profile.total(),
    })
}

fn check_preconditions(sys: &StateSpace, profile: &RelativeDegree) -> Result<()> {
    if !sys.has_zero_feedthrough() || !profile.all_positive() {
        return Err(Error::DecompositionNotApplicable {
            reason: "the decomposition needs D = 0 (apply the dynamic extension first)".into(),
        });
    }
    if profile.per_output().len() != sys.outputs() {
        return Err(Error::InvalidInput(format!(
            "relative degree profile has {} entries for {} outputs",
            profile.per_output().len(),
            sys.outputs()
        )));
    }
    if profile.total() > sys.states() {
        return Err(Error::DecompositionNotApplicable {
            reason: format!(
                "total relative degree {} exceeds the state dimension {}",
                profile.total(),
                sys.states()
            ),
        });
    }
    Ok(())
}

fn finish_bundle(b_bar: RMatrix, c_bar: RMatrix, b_z: RMatrix, profile: &RelativeDegree) -> Result<TransformationBundle> {
    let t = linalg::vstack(&[&b_z, &c_bar]);
    let inv = linalg::solve_or_invert(&t)?;
    Ok(TransformationBundle {
        b_bar,
        c_bar,
        b_z,
        t,
        s: inv.inverse,
        condition_t: inv.condition,
        profile: profile.clone(),
    })
}

/// Builds `T = [B_z; C̄]`, choosing `B_z` inside the row space of `B̄` to
/// make `T` as well conditioned as possible.
///
/// The rows of `B̄` are projected onto the orthogonal complement of the row
/// space of `C̄`; the leading `l_η` left singular directions of that
/// projection give the combinations of `B̄` rows with the largest component
/// outside `C̄`. If fewer than `l_η` such directions exist, no choice of
/// `B_z` makes `T` invertible.
pub fn build_transformation(sys: &StateSpace, profile: &RelativeDegree, tol: RankTolerance) -> Result<TransformationBundle> {
    check_preconditions(sys, profile)?;
    let not_applicable = |why: &str| -> Error {
        let diag = rank_diagnostics(sys, profile, tol)
            .map(|d| d.to_string())
            .unwrap_or_else(|e| e.to_string());
        Error::DecompositionNotApplicable {
            reason: format!("{why} [{diag}]"),
        }
    };
    let b_bar = linalg::nullspace_rows(sys.b(), tol)?;
    let c_bar = output_derivative_rows(sys, profile);
    let l_eta = sys.states() - profile.total();
    if !c_bar.is_empty() && linalg::numerical_rank(&c_bar, tol)? < c_bar.nrows() {
        return Err(not_applicable("C_bar is not full row rank"));
    }
    if b_bar.nrows() < l_eta {
        return Err(not_applicable(&format!(
            "B_bar has {} rows but l_eta = {l_eta} independent rows are needed",
            b_bar.nrows()
        )));
    }
    let b_z = if l_eta == 0 {
        RMatrix::zeros(0, sys.states())
    } else {
        let projector = if c_bar.is_empty() {
            RMatrix::zeros(sys.states(), sys.states())
        } else {
            let pinv = linalg::pseudoinverse(&c_bar, tol)?;
            pinv * &c_bar
        };
        let complement = RMatrix::identity(sys.states(), sys.states()) - projector;
        let projected = &b_bar * complement;
        let svd = linalg::svd(&projected);
        // B_bar rows are orthonormal, so singular values lie in [0, 1].
        let cutoff = tol.threshold_for(b_bar.nrows(), sys.states());
        if svd.s.len() < l_eta || svd.s[l_eta - 1] <= cutoff {
            return Err(not_applicable(&format!(
                "no {l_eta} rows of B_bar are independent of C_bar"
            )));
        }
        let w = svd.u.columns(0, l_eta).transpose();
        w * &b_bar
    };
    finish_bundle(b_bar, c_bar, b_z, profile)
}

/// Builds `T` from a caller-supplied `B_z`.
pub fn build_transformation_with_bz(
    sys: &StateSpace,
    profile: &RelativeDegree,
    b_z: &RMatrix,
    tol: RankTolerance,
) -> Result<TransformationBundle> {
    check_preconditions(sys, profile)?;
    let l_eta = sys.states() - profile.total();
    if b_z.shape() != (l_eta, sys.states()) {
        return Err(Error::DimensionMismatch {
            matrix: "B_z",
            expected: format!("{l_eta}x{}", sys.states()),
            found: format!("{}x{}", b_z.nrows(), b_z.ncols()),
        });
    }
    let b_bar = linalg::nullspace_rows(sys.b(), tol)?;
    let c_bar = output_derivative_rows(sys, profile);
    finish_bundle(b_bar, c_bar, b_z.clone(), profile)
}

/// Structural tolerance `1e-8 · (1 + ‖A‖ · cond(T))`.
pub fn structure_bound(sys: &StateSpace, condition_t: f64) -> f64 {
    1e-8 * (1.0 + linalg::spectral_norm(sys.a()) * condition_t)
}

/// Transforms the system and checks the sparse structure of every block.
pub fn decompose(sys: &StateSpace, bundle: &TransformationBundle, tol: RankTolerance) -> Result<InvariantZeroForm> {
    let n = sys.states();
    let l_eta = bundle.l_eta();
    let rho = bundle.c_bar.nrows();
    if bundle.t.shape() != (n, n) || l_eta + rho != n {
        return Err(Error::InvalidInput("transformation does not match the system".into()));
    }
    let profile = &bundle.profile;
    let a_full = &bundle.t * sys.a() * &bundle.s;
    let b_full = &bundle.t * sys.b();
    let c_full = sys.c() * &bundle.s;

    let a_eta = a_full.view((0, 0), (l_eta, l_eta)).into_owned();
    let a_eta_xi = a_full.view((0, l_eta), (l_eta, rho)).into_owned();
    let a_xi_eta = a_full.view((l_eta, 0), (rho, l_eta)).into_owned();
    let a_xi = a_full.view((l_eta, l_eta), (rho, rho)).into_owned();
    let b_xi = b_full.rows(l_eta, rho).into_owned();
    let c_xi = c_full.columns(l_eta, rho).into_owned();

    let mut b_xi_pattern: f64 = 0.0;
    let mut c_xi_expected = RMatrix::zeros(sys.outputs(), rho);
    let mut shift_expected = RMatrix::zeros(rho, rho);
    let mut shift_rows = Vec::new();
    let mut offset = 0;
    for (i, &deg) in profile.per_output().iter().enumerate() {
        c_xi_expected[(i, offset)] = 1.0;
        for r in 0..deg - 1 {
            shift_expected[(offset + r, offset + r + 1)] = 1.0;
            shift_rows.push(offset + r);
            b_xi_pattern = b_xi_pattern.max(b_xi.row(offset + r).norm());
        }
        offset += deg;
    }
    let mut a_xi_shift: f64 = 0.0;
    let mut a_xi_eta_shift: f64 = 0.0;
    for &r in &shift_rows {
        a_xi_shift = a_xi_shift.max((a_xi.row(r) - shift_expected.row(r)).norm());
        a_xi_eta_shift = a_xi_eta_shift.max(a_xi_eta.row(r).norm());
    }

    let square = sys.inputs() == sys.outputs();
    let full_column_rank_b_xi = !b_xi.is_empty() && linalg::numerical_rank(&b_xi, tol)? == sys.inputs();
    let annihilation = if sys.inputs() >= sys.outputs() && full_column_rank_b_xi {
        let proj = RMatrix::identity(rho, rho) - &b_xi * linalg::pseudoinverse(&b_xi, tol)?;
        Some((proj * &a_xi_eta).norm())
    } else {
        None
    };

    let residuals = StructureResiduals {
        inverse: (&bundle.t * &bundle.s - RMatrix::identity(n, n)).norm(),
        b_top: b_full.rows(0, l_eta).norm(),
        c_left: c_full.columns(0, l_eta).norm(),
        b_xi_pattern,
        c_xi_pattern: (&c_xi - c_xi_expected).norm(),
        a_xi_shift,
        a_xi_eta_shift,
        annihilation,
        bound: structure_bound(sys, bundle.condition_t),
    };
    let (block, worst) = residuals.worst();
    if worst > residuals.bound {
        return Err(Error::StructureViolation {
            block,
            residual: worst,
            bound: residuals.bound,
        });
    }
    Ok(InvariantZeroForm {
        a_eta,
        a_eta_xi,
        a_xi_eta,
        a_xi,
        b_xi,
        c_xi,
        a_full,
        b_full,
        c_full,
        bundle: bundle.clone(),
        residuals,
        hypotheses_hold: square && full_column_rank_b_xi,
    })
}

/// Relative degree, transformation and decomposition in one step.
pub fn invariant_zero_form(sys: &StateSpace, tol: RankTolerance) -> Result<InvariantZeroForm> {
    let profile = model::relative_degree(sys, tol)?;
    let bundle = build_transformation(sys, &profile, tol)?;
    decompose(sys, &bundle, tol)
}

/// Zeros together with the form they were read from.
#[derive(Debug, Clone)]
pub struct IzformZeros {
    pub zeros: ZeroSet,
    pub form: InvariantZeroForm,
}

/// Eigenvalues of `A_η` from an existing form, each checked for a pencil
/// rank drop on `sys`.
pub fn zeros_from_form(sys: &StateSpace, form: &InvariantZeroForm, opts: &ZeroOptions) -> Result<ZeroSet> {
    let values = linalg::eigenvalues(&form.a_eta)?;
    let candidates = ZeroSet::from_values(&values, Method::InvariantZeroForm, opts.cluster);
    Ok(rosenbrock::verify_zeros(sys, &candidates, opts))
}

/// Invariant zeros of a square strictly proper system as `eig(A_η)`.
///
/// Non-square systems and systems with feedthrough are rejected; the
/// extensions module reduces those to this case.
pub fn invariant_zeros_izform(sys: &StateSpace, opts: &ZeroOptions) -> Result<IzformZeros> {
    if !sys.is_square() {
        return Err(Error::DecompositionNotApplicable {
            reason: format!(
                "system is not square ({} inputs, {} outputs); use the squaring reduction",
                sys.inputs(),
                sys.outputs()
            ),
        });
    }
    if !sys.has_zero_feedthrough() {
        return Err(Error::DecompositionNotApplicable {
            reason: "system has feedthrough; use the dynamic extension".into(),
        });
    }
    let form = invariant_zero_form(sys, opts.rank_tol)?;
    let zeros = zeros_from_form(sys, &form, opts)?;
    Ok(IzformZeros { zeros, form })
}
