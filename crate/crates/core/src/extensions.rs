//! Reductions to the square strictly proper case.
//!
//! Feedthrough is removed by a dynamic extension `v̇ = −α v + u`, which
//! keeps the invariant zeros and adds the pole `−α`. Nonsquare systems are
//! squared by appending random output rows (or input columns) several
//! times; zeros common to every squared system are candidates for the
//! original one and are kept only if its pencil drops rank there.

use crate::error::{Error, Result};
use crate::izform::{self, InvariantZeroForm};
use crate::linalg::{self, Complex64, RMatrix};
use crate::model::{intersect_multisets, random_matrix, Method, Shape, StateSpace, ZeroSet};
use crate::options::ZeroOptions;
use crate::rosenbrock;

#[derive(Debug, Clone)]
pub struct ExtendedRealization {
    pub base: StateSpace,
    pub alpha: f64,
    /// `([[A, B], [0, −αI]], [0; I], [C, D], 0)`.
    pub extended: StateSpace,
}

pub fn dynamic_extension(sys: &StateSpace, alpha: f64) -> Result<ExtendedRealization> {
    if !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("extension pole must be finite, got {alpha}")));
    }
    let (n, m) = (sys.states(), sys.inputs());
    let mut a = RMatrix::zeros(n + m, n + m);
    a.view_mut((0, 0), (n, n)).copy_from(sys.a());
    a.view_mut((0, n), (n, m)).copy_from(sys.b());
    for i in 0..m {
        a[(n + i, n + i)] = -alpha;
    }
    let mut b = RMatrix::zeros(n + m, m);
    b.view_mut((n, 0), (m, m)).fill_with_identity();
    let c = linalg::hstack(&[sys.c(), sys.d()]);
    let extended = StateSpace::strictly_proper(a, b, c)?;
    Ok(ExtendedRealization {
        base: sys.clone(),
        alpha,
        extended,
    })
}

/// `1 + ρ(A)`: keeps the added pole clear of the spectrum of `A`.
pub fn default_alpha(sys: &StateSpace) -> f64 {
    1.0 + linalg::spectral_radius_estimate(sys.a())
}

/// Extra rows for `C` (wide systems) or extra columns for `B` (tall ones).
#[derive(Debug, Clone, PartialEq)]
pub enum Augmentation {
    OutputRows(RMatrix),
    InputColumns(RMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquaringPlan {
    pub augmentations: Vec<Augmentation>,
    /// `None` for hand-picked augmentations.
    pub seed: Option<u64>,
}

fn round_seed(seed: u64, round: usize) -> u64 {
    seed ^ (round as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn require_nonsquare(sys: &StateSpace) -> Result<()> {
    if sys.is_square() {
        return Err(Error::InvalidInput("system is already square".into()));
    }
    Ok(())
}

impl SquaringPlan {
    /// `rounds` augmentations with standard normal entries scaled by `‖C‖`
    /// (or `‖B‖`).
    pub fn random(sys: &StateSpace, rounds: usize, seed: u64) -> Result<Self> {
        require_nonsquare(sys)?;
        if rounds < 2 {
            return Err(Error::InvalidInput(format!("squaring needs at least 2 rounds, got {rounds}")));
        }
        let (n, m, p) = (sys.states(), sys.inputs(), sys.outputs());
        let augmentations = (0..rounds)
            .map(|k| {
                let s = round_seed(seed, k);
                if m > p {
                    let scale = nonzero_or_one(linalg::spectral_norm(sys.c()));
                    Augmentation::OutputRows(random_matrix(m - p, n, s) * scale)
                } else {
                    let scale = nonzero_or_one(linalg::spectral_norm(sys.b()));
                    Augmentation::InputColumns(random_matrix(n, p - m, s) * scale)
                }
            })
            .collect();
        Ok(Self {
            augmentations,
            seed: Some(seed),
        })
    }

    /// Hand-picked augmentations; each must square the system.
    pub fn explicit(sys: &StateSpace, augmentations: Vec<Augmentation>) -> Result<Self> {
        require_nonsquare(sys)?;
        if augmentations.len() < 2 {
            return Err(Error::InvalidInput("squaring needs at least 2 augmentations".into()));
        }
        for aug in &augmentations {
            augment(sys, aug)?;
        }
        Ok(Self {
            augmentations,
            seed: None,
        })
    }

    pub fn rounds(&self) -> usize {
        self.augmentations.len()
    }
}

fn nonzero_or_one(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        1.0
    }
}

fn augment(sys: &StateSpace, aug: &Augmentation) -> Result<StateSpace> {
    let (n, m, p) = (sys.states(), sys.inputs(), sys.outputs());
    match (sys.shape(), aug) {
        (Shape::Wide, Augmentation::OutputRows(rows)) if rows.shape() == (m - p, n) => {
            let c = linalg::vstack(&[sys.c(), rows]);
            let d = linalg::vstack(&[sys.d(), &RMatrix::zeros(m - p, m)]);
            StateSpace::new(sys.a().clone(), sys.b().clone(), c, d)
        }
        (Shape::Tall, Augmentation::InputColumns(cols)) if cols.shape() == (n, p - m) => {
            let b = linalg::hstack(&[sys.b(), cols]);
            let d = linalg::hstack(&[sys.d(), &RMatrix::zeros(p, p - m)]);
            StateSpace::new(sys.a().clone(), b, sys.c().clone(), d)
        }
        _ => Err(Error::DimensionMismatch {
            matrix: "augmentation",
            expected: if m > p {
                format!("{}x{} output rows", m - p, n)
            } else {
                format!("{}x{} input columns", n, p.saturating_sub(m))
            },
            found: match aug {
                Augmentation::OutputRows(r) => format!("{}x{} output rows", r.nrows(), r.ncols()),
                Augmentation::InputColumns(c) => format!("{}x{} input columns", c.nrows(), c.ncols()),
            },
        }),
    }
}

/// One squared system per augmentation in the plan.
pub fn square_system(sys: &StateSpace, plan: &SquaringPlan) -> Result<Vec<StateSpace>> {
    require_nonsquare(sys)?;
    plan.augmentations.iter().map(|aug| augment(sys, aug)).collect()
}

/// Outcome of the square-system path.
#[derive(Debug, Clone)]
pub struct SquareZeros {
    pub zeros: ZeroSet,
    pub form: InvariantZeroForm,
    /// Set when the dynamic extension was used.
    pub alpha: Option<f64>,
    /// Candidates at `−α` that did not verify and were dropped.
    pub discarded: Vec<Complex64>,
}

fn square_zeros(sys: &StateSpace, opts: &ZeroOptions) -> Result<SquareZeros> {
    if sys.has_zero_feedthrough() {
        let out = izform::invariant_zeros_izform(sys, opts)?;
        return Ok(SquareZeros {
            zeros: out.zeros,
            form: out.form,
            alpha: None,
            discarded: Vec::new(),
        });
    }
    let alpha = opts.alpha.unwrap_or_else(|| default_alpha(sys));
    let ext = dynamic_extension(sys, alpha)?;
    let form = izform::invariant_zero_form(&ext.extended, opts.rank_tol)?;
    let values = linalg::eigenvalues(&form.a_eta)?;
    let candidates = ZeroSet::from_values(&values, Method::DynamicExtension, opts.cluster);
    let mut zeros = rosenbrock::verify_zeros(sys, &candidates, opts);
    let pole = Complex64::new(-alpha, 0.0);
    let mut discarded = Vec::new();
    zeros.zeros.retain(|z| {
        let spurious = !z.verified && opts.cluster.accepts(z.value, pole);
        if spurious {
            discarded.extend(std::iter::repeat_n(z.value, z.multiplicity));
        }
        !spurious
    });
    Ok(SquareZeros {
        zeros,
        form,
        alpha: Some(alpha),
        discarded,
    })
}

/// Result of [`invariant_zeros_general`].
#[derive(Debug, Clone)]
pub struct GeneralZeros {
    pub zeros: ZeroSet,
    /// Form of the square path (the extended system when `alpha` is set).
    pub form: Option<InvariantZeroForm>,
    pub alpha: Option<f64>,
    pub discarded: Vec<Complex64>,
    /// Spectra of the squared systems, one per round that succeeded.
    pub round_spectra: Vec<Vec<Complex64>>,
}

fn verification_failure(zeros: &ZeroSet) -> Error {
    let detail: Vec<String> = zeros
        .zeros
        .iter()
        .map(|z| {
            format!(
                "{:.6}{:+.6}i (pencil rank {})",
                z.value.re,
                z.value.im,
                z.pencil_rank.map_or("?".to_string(), |r| r.to_string())
            )
        })
        .collect();
    Error::VerificationFailure(format!(
        "no candidate drops the pencil rank (normal rank {}): {}",
        zeros.normal_rank.map_or("?".to_string(), |r| r.to_string()),
        detail.join(", ")
    ))
}

fn method_failure(err: Error) -> Error {
    match err {
        Error::DecompositionNotApplicable { reason } => Error::MethodFailure(format!(
            "invariant zero form not applicable: {reason}; try det-interpolation or gazero"
        )),
        Error::UndefinedRelativeDegree { output, states } => Error::MethodFailure(format!(
            "output {output} has no relative degree within {states} derivatives; try det-interpolation or gazero"
        )),
        other => other,
    }
}

/// Zeros of any realization.
///
/// Square systems go through the invariant zero form, after a dynamic
/// extension when `D ≠ 0`. Nonsquare systems are squared `opts.rounds`
/// times with random augmentations.
pub fn invariant_zeros_general(sys: &StateSpace, opts: &ZeroOptions) -> Result<GeneralZeros> {
    if sys.is_square() {
        let out = square_zeros(sys, opts).map_err(method_failure)?;
        if !out.zeros.is_empty() && !out.zeros.any_verified() {
            return Err(verification_failure(&out.zeros));
        }
        return Ok(GeneralZeros {
            zeros: out.zeros,
            form: Some(out.form),
            alpha: out.alpha,
            discarded: out.discarded,
            round_spectra: Vec::new(),
        });
    }
    let plan = SquaringPlan::random(sys, opts.rounds, opts.seed)?;
    invariant_zeros_with_plan(sys, &plan, opts)
}

/// Nonsquare path with a given squaring plan.
pub fn invariant_zeros_with_plan(sys: &StateSpace, plan: &SquaringPlan, opts: &ZeroOptions) -> Result<GeneralZeros> {
    let squared = square_system(sys, plan)?;
    let mut round_spectra = Vec::new();
    let mut last_error = None;
    for sq in &squared {
        match square_zeros(sq, opts) {
            Ok(out) => round_spectra.push(out.zeros.values()),
            Err(e) => last_error = Some(e),
        }
    }
    if round_spectra.is_empty() {
        return Err(method_failure(last_error.expect("at least two rounds")));
    }
    let common = round_spectra
        .iter()
        .skip(1)
        .fold(round_spectra[0].clone(), |acc, next| intersect_multisets(&acc, next, opts.common));
    let candidates = ZeroSet::from_values(&common, Method::Squaring, opts.cluster);
    let mut zeros = rosenbrock::verify_zeros(sys, &candidates, opts);
    if !zeros.is_empty() && !zeros.any_verified() {
        return Err(verification_failure(&zeros));
    }
    zeros.zeros.retain(|z| z.verified);
    Ok(GeneralZeros {
        zeros,
        form: None,
        alpha: None,
        discarded: Vec::new(),
        round_spectra,
    })
}
