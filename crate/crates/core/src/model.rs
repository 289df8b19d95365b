//! State-space realizations, relative degree, zero multisets and random
//! test-system generation.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, Complex64, RMatrix, RankTolerance};

/// Input/output shape of a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Square,
    /// More outputs than inputs.
    Tall,
    /// More inputs than outputs.
    Wide,
}

/// A validated quadruple `(A, B, C, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: RMatrix,
    b: RMatrix,
    c: RMatrix,
    d: RMatrix,
}

impl StateSpace {
    /// Validates dimensions and finiteness. This is the only constructor.
    pub fn new(a: RMatrix, b: RMatrix, c: RMatrix, d: RMatrix) -> Result<Self> {
        let states = a.nrows();
        if states == 0 || !a.is_square() {
            return Err(Error::DimensionMismatch {
                matrix: "A",
                expected: "nonempty square matrix".into(),
                found: format!("{}x{}", a.nrows(), a.ncols()),
            });
        }
        if b.nrows() != states || b.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                matrix: "B",
                expected: format!("{states}xm with m >= 1"),
                found: format!("{}x{}", b.nrows(), b.ncols()),
            });
        }
        if c.ncols() != states || c.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                matrix: "C",
                expected: format!("px{states} with p >= 1"),
                found: format!("{}x{}", c.nrows(), c.ncols()),
            });
        }
        if d.shape() != (c.nrows(), b.ncols()) {
            return Err(Error::DimensionMismatch {
                matrix: "D",
                expected: format!("{}x{}", c.nrows(), b.ncols()),
                found: format!("{}x{}", d.nrows(), d.ncols()),
            });
        }
        for (m, name) in [(&a, "A"), (&b, "B"), (&c, "C"), (&d, "D")] {
            linalg::ensure_finite(m, name)?;
        }
        Ok(Self { a, b, c, d })
    }

    /// Strictly proper realization (`D = 0`).
    pub fn strictly_proper(a: RMatrix, b: RMatrix, c: RMatrix) -> Result<Self> {
        let d = RMatrix::zeros(c.nrows(), b.ncols());
        Self::new(a, b, c, d)
    }

    pub fn a(&self) -> &RMatrix {
        &self.a
    }
    pub fn b(&self) -> &RMatrix {
        &self.b
    }
    pub fn c(&self) -> &RMatrix {
        &self.c
    }
    pub fn d(&self) -> &RMatrix {
        &self.d
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn has_zero_feedthrough(&self) -> bool {
        self.d.iter().all(|&x| x == 0.0)
    }

    pub fn shape(&self) -> Shape {
        use std::cmp::Ordering::*;
        match self.outputs().cmp(&self.inputs()) {
            Equal => Shape::Square,
            Greater => Shape::Tall,
            Less => Shape::Wide,
        }
    }

    pub fn is_square(&self) -> bool {
        self.shape() == Shape::Square
    }
}

/// Relative degree of each output; `0` marks an output with a nonzero
/// feedthrough row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelativeDegree {
    per_output: Vec<usize>,
    total: usize,
}

impl RelativeDegree {
    pub fn new(per_output: Vec<usize>) -> Self {
        let total = per_output.iter().sum();
        Self { per_output, total }
    }
    pub fn per_output(&self) -> &[usize] {
        &self.per_output
    }
    pub fn total(&self) -> usize {
        self.total
    }
    /// True when every output needs at least one differentiation (`D = 0`).
    pub fn all_positive(&self) -> bool {
        self.per_output.iter().all(|&r| r > 0)
    }
}

impl fmt::Display for RelativeDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} (total {})", self.per_output, self.total)
    }
}

/// Per-output relative degree.
///
/// Output `i` with a zero feedthrough row has `ρᵢ = k` for the smallest
/// `k ≥ 1` such that `Cᵢ A^(k−1) B` exceeds `tol · ‖Cᵢ‖ ‖A‖^(k−1) ‖B‖`.
pub fn relative_degree(sys: &StateSpace, tol: RankTolerance) -> Result<RelativeDegree> {
    let n = sys.states();
    let threshold = tol.threshold_for(n.max(sys.outputs()), n.max(sys.inputs()));
    let norm_a = linalg::spectral_norm(sys.a());
    let norm_b = linalg::spectral_norm(sys.b());
    let mut per_output = Vec::with_capacity(sys.outputs());
    for i in 0..sys.outputs() {
        if sys.d().row(i).iter().any(|&x| x != 0.0) {
            per_output.push(0);
            continue;
        }
        let mut row = sys.c().row(i).into_owned();
        let mut scale = row.norm() * norm_b;
        let mut found = None;
        for k in 1..=n {
            let reach = &row * sys.b();
            if reach.norm() > threshold * scale {
                found = Some(k);
                break;
            }
            row = &row * sys.a();
            scale *= norm_a;
        }
        match found {
            Some(k) => per_output.push(k),
            None => return Err(Error::UndefinedRelativeDegree { output: i, states: n }),
        }
    }
    Ok(RelativeDegree::new(per_output))
}

/// Returns `(P A P⁻¹, P B, C P⁻¹, D)`.
pub fn similarity_transform(sys: &StateSpace, p: &RMatrix) -> Result<StateSpace> {
    if p.shape() != (sys.states(), sys.states()) {
        return Err(Error::DimensionMismatch {
            matrix: "P",
            expected: format!("{0}x{0}", sys.states()),
            found: format!("{}x{}", p.nrows(), p.ncols()),
        });
    }
    let p_inv = linalg::solve_or_invert(p)?.inverse;
    StateSpace::new(
        p * sys.a() * &p_inv,
        p * sys.b(),
        sys.c() * &p_inv,
        sys.d().clone(),
    )
}

/// Which computation produced a zero set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    InvariantZeroForm,
    Gazero,
    DetInterpolation,
    DynamicExtension,
    Squaring,
    Candidates,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::InvariantZeroForm => "izform",
            Method::Gazero => "gazero",
            Method::DetInterpolation => "detinterp",
            Method::DynamicExtension => "extension+izform",
            Method::Squaring => "squaring+izform",
            Method::Candidates => "candidates",
        }
    }
}

/// One distinct zero location.
#[derive(Debug, Clone, PartialEq)]
pub struct Zero {
    pub value: Complex64,
    pub multiplicity: usize,
    /// Set by the pencil rank-drop check.
    pub verified: bool,
    /// Rank of the Rosenbrock matrix at `value`, when it was evaluated.
    pub pencil_rank: Option<usize>,
}

/// Invariant zeros with multiplicity, plus verification status.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSet {
    pub zeros: Vec<Zero>,
    pub method: Method,
    /// Normal rank of the pencil the zeros were verified against.
    pub normal_rank: Option<usize>,
}

impl ZeroSet {
    pub fn empty(method: Method) -> Self {
        Self {
            zeros: Vec::new(),
            method,
            normal_rank: None,
        }
    }

    /// Groups raw values into distinct zeros (clustered with `cluster`),
    /// all initially unverified.
    pub fn from_values(values: &[Complex64], method: Method, cluster: MatchTolerance) -> Self {
        let zeros = group_values(values, cluster)
            .into_iter()
            .map(|(value, multiplicity)| Zero {
                value,
                multiplicity,
                verified: false,
                pencil_rank: None,
            })
            .collect();
        Self {
            zeros,
            method,
            normal_rank: None,
        }
    }

    /// Total count including multiplicity.
    pub fn count(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// Each zero repeated by its multiplicity.
    pub fn values(&self) -> Vec<Complex64> {
        self.zeros
            .iter()
            .flat_map(|z| std::iter::repeat_n(z.value, z.multiplicity))
            .collect()
    }

    pub fn all_verified(&self) -> bool {
        self.zeros.iter().all(|z| z.verified)
    }

    pub fn any_verified(&self) -> bool {
        self.zeros.iter().any(|z| z.verified)
    }
}

/// Distance threshold `absolute + relative · |z|` for pairing zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchTolerance {
    pub absolute: f64,
    pub relative: f64,
}

impl Default for MatchTolerance {
    fn default() -> Self {
        Self {
            absolute: 1e-6,
            relative: 1e-6,
        }
    }
}

impl MatchTolerance {
    pub fn new(absolute: f64, relative: f64) -> Self {
        Self { absolute, relative }
    }

    pub fn accepts(&self, x: Complex64, y: Complex64) -> bool {
        (x - y).norm() <= self.absolute + self.relative * x.norm().max(y.norm())
    }
}

/// Result of pairing two multisets.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// Index pairs `(left, right)` that were matched.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_left: Vec<usize>,
    pub unmatched_right: Vec<usize>,
    /// Largest distance among matched pairs.
    pub max_distance: f64,
}

impl Matching {
    pub fn is_perfect(&self) -> bool {
        self.unmatched_left.is_empty() && self.unmatched_right.is_empty()
    }
}

/// Greedy nearest-pair matching: all candidate pairs within tolerance are
/// taken in order of increasing distance.
pub fn match_multisets(left: &[Complex64], right: &[Complex64], tol: MatchTolerance) -> Matching {
    let mut candidates = Vec::new();
    for (i, &x) in left.iter().enumerate() {
        for (j, &y) in right.iter().enumerate() {
            if tol.accepts(x, y) {
                candidates.push(((x - y).norm(), i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut used_left = vec![false; left.len()];
    let mut used_right = vec![false; right.len()];
    let mut pairs = Vec::new();
    let mut max_distance: f64 = 0.0;
    for (dist, i, j) in candidates {
        if !used_left[i] && !used_right[j] {
            used_left[i] = true;
            used_right[j] = true;
            pairs.push((i, j));
            max_distance = max_distance.max(dist);
        }
    }
    Matching {
        pairs,
        unmatched_left: (0..left.len()).filter(|&i| !used_left[i]).collect(),
        unmatched_right: (0..right.len()).filter(|&j| !used_right[j]).collect(),
        max_distance,
    }
}

pub fn multisets_match(left: &[Complex64], right: &[Complex64], tol: MatchTolerance) -> bool {
    left.len() == right.len() && match_multisets(left, right, tol).is_perfect()
}

/// Elements of `left` that have a partner in `right`.
pub fn intersect_multisets(left: &[Complex64], right: &[Complex64], tol: MatchTolerance) -> Vec<Complex64> {
    let m = match_multisets(left, right, tol);
    let mut idx: Vec<usize> = m.pairs.iter().map(|&(i, _)| i).collect();
    idx.sort_unstable();
    idx.into_iter().map(|i| left[i]).collect()
}

/// Clusters values lying within `tol` of a cluster's first member and
/// returns each cluster's mean with its size.
pub fn group_values(values: &[Complex64], tol: MatchTolerance) -> Vec<(Complex64, usize)> {
    let mut clusters: Vec<(Complex64, Vec<Complex64>)> = Vec::new();
    for &v in values {
        match clusters.iter_mut().find(|(seed, _)| tol.accepts(*seed, v)) {
            Some((_, members)) => members.push(v),
            None => clusters.push((v, vec![v])),
        }
    }
    let mut out: Vec<(Complex64, usize)> = clusters
        .into_iter()
        .map(|(_, members)| {
            let n = members.len();
            let mean = members.iter().sum::<Complex64>() / n as f64;
            (mean, n)
        })
        .collect();
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    out
}

/// Dimensions and seed for [`random_system`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSystemSpec {
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    /// Per-output relative degrees for the structured generator. Requires a
    /// square system.
    pub relative_degrees: Option<Vec<usize>>,
    pub seed: u64,
}

impl RandomSystemSpec {
    pub fn new(states: usize, inputs: usize, outputs: usize, seed: u64) -> Self {
        Self {
            states,
            inputs,
            outputs,
            relative_degrees: None,
            seed,
        }
    }

    pub fn with_relative_degrees(mut self, degrees: Vec<usize>) -> Self {
        self.relative_degrees = Some(degrees);
        self
    }
}

/// A generated system together with its invariant zeros when they are known
/// by construction.
#[derive(Debug, Clone)]
pub struct RandomSystem {
    pub system: StateSpace,
    pub zeros: Option<Vec<Complex64>>,
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> RMatrix {
    RMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random orthogonal matrix times a diagonal scaling in [0.5, 2], so the
/// condition number stays below 4.
fn well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> RMatrix {
    let q1 = gaussian(rng, n, n).qr().q();
    let q2 = gaussian(rng, n, n).qr().q();
    let scale = nalgebra::DVector::from_fn(n, |_, _| 2f64.powf(rng.random_range(-1.0..1.0)));
    q1 * RMatrix::from_diagonal(&scale) * q2
}

/// Real block-diagonal matrix with the given eigenvalues; conjugate pairs
/// become 2×2 rotation-scaling blocks.
fn real_matrix_with_spectrum(values: &[Complex64]) -> Result<RMatrix> {
    let n = values.len();
    let mut m = RMatrix::zeros(n, n);
    let mut remaining: Vec<Complex64> = values.to_vec();
    let mut k = 0;
    while let Some(z) = remaining.pop() {
        if z.im == 0.0 {
            m[(k, k)] = z.re;
            k += 1;
            continue;
        }
        let partner = remaining
            .iter()
            .position(|w| (w - z.conj()).norm() <= 1e-12 * (1.0 + z.norm()))
            .ok_or_else(|| {
                Error::InvalidInput(format!("planted zero {z} has no conjugate partner"))
            })?;
        remaining.swap_remove(partner);
        m[(k, k)] = z.re;
        m[(k + 1, k + 1)] = z.re;
        m[(k, k + 1)] = z.im;
        m[(k + 1, k)] = -z.im;
        k += 2;
    }
    Ok(m)
}

/// Draws real values in [-3, 3] at least 0.2 away from each other and from
/// `existing`.
fn separated_reals(rng: &mut ChaCha8Rng, count: usize, existing: &[Complex64]) -> Vec<Complex64> {
    let mut taken: Vec<Complex64> = existing.to_vec();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = Complex64::new(rng.random_range(-3.0..3.0), 0.0);
        if taken.iter().all(|w| (w - v).norm() >= 0.2) {
            taken.push(v);
            out.push(v);
        }
    }
    out
}

/// Generates a random system, optionally with planted invariant zeros.
///
/// Without planted zeros or requested relative degrees the matrices are
/// dense Gaussian and the zeros are unknown. Otherwise the system is built
/// directly in invariant zero form (`A_η` with the planted spectrum, sparse
/// `B_ξ`/`C_ξ` and shift-structured `A_ξ`) and hidden by a random similarity,
/// so its zeros are the planted values plus random real fill-ins for any
/// remaining zero-dynamics dimensions.
pub fn random_system(spec: &RandomSystemSpec, planted: &[Complex64]) -> Result<RandomSystem> {
    let RandomSystemSpec {
        states: n,
        inputs: m,
        outputs: p,
        seed,
        ..
    } = *spec;
    if n == 0 || m == 0 || p == 0 {
        return Err(Error::InvalidInput("random system dimensions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if planted.is_empty() && spec.relative_degrees.is_none() {
        let scale = 1.0 / (n as f64).sqrt();
        let a = gaussian(&mut rng, n, n) * scale;
        let b = gaussian(&mut rng, n, m);
        let c = gaussian(&mut rng, p, n);
        return Ok(RandomSystem {
            system: StateSpace::strictly_proper(a, b, c)?,
            zeros: None,
        });
    }
    if m != p {
        return Err(Error::InvalidInput(format!(
            "planting zeros needs a square system, got {m} inputs and {p} outputs"
        )));
    }
    let degrees = match &spec.relative_degrees {
        Some(d) => d.clone(),
        None => {
            // spread l_x - k over the outputs, each at least 1
            let rho = n.checked_sub(planted.len()).filter(|&r| r >= p).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "cannot plant {} zeros in {n} states with {p} outputs",
                    planted.len()
                ))
            })?;
            (0..p).map(|i| rho / p + usize::from(i < rho % p)).collect()
        }
    };
    if degrees.len() != p || degrees.iter().any(|&d| d == 0) {
        return Err(Error::InvalidInput(format!(
            "relative degrees {degrees:?} must be positive, one per output"
        )));
    }
    let rho: usize = degrees.iter().sum();
    let l_eta = n.checked_sub(rho).ok_or_else(|| {
        Error::InvalidInput(format!("total relative degree {rho} exceeds {n} states"))
    })?;
    if planted.len() > l_eta {
        return Err(Error::InvalidInput(format!(
            "{} planted zeros exceed l_x - rho = {l_eta}",
            planted.len()
        )));
    }
    if planted.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidInput("planted zeros must be finite".into()));
    }

    let mut zeros = planted.to_vec();
    zeros.extend(separated_reals(&mut rng, l_eta - planted.len(), planted));
    let mut full = RMatrix::zeros(n, n);
    if l_eta > 0 {
        let q = well_conditioned(&mut rng, l_eta);
        let q_inv = linalg::solve_or_invert(&q)?.inverse;
        let a_eta = &q * real_matrix_with_spectrum(&zeros)? * q_inv;
        full.view_mut((0, 0), (l_eta, l_eta)).copy_from(&a_eta);
        let a_eta_xi = gaussian(&mut rng, l_eta, rho);
        full.view_mut((0, l_eta), (l_eta, rho)).copy_from(&a_eta_xi);
    }
    let mut b_form = RMatrix::zeros(n, m);
    let mut c_form = RMatrix::zeros(p, n);
    let decoupling = well_conditioned(&mut rng, m);
    let mut offset = l_eta;
    for (i, &deg) in degrees.iter().enumerate() {
        for r in 0..deg - 1 {
            full[(offset + r, offset + r + 1)] = 1.0;
        }
        let last = offset + deg - 1;
        for j in 0..n {
            full[(last, j)] = rng.sample::<f64, _>(StandardNormal) / (n as f64).sqrt();
        }
        b_form.row_mut(last).copy_from(&decoupling.row(i));
        c_form[(i, offset)] = 1.0;
        offset += deg;
    }
    let p_mat = well_conditioned(&mut rng, n);
    let p_inv = linalg::solve_or_invert(&p_mat)?.inverse;
    // form = P A P⁻¹  ⇒  A = P⁻¹ form P
    let system = StateSpace::strictly_proper(
        &p_inv * full * &p_mat,
        &p_inv * b_form,
        c_form * &p_mat,
    )?;
    Ok(RandomSystem {
        system,
        zeros: Some(zeros),
    })
}

/// Random well-conditioned similarity for invariance tests.
pub fn random_similarity(n: usize, seed: u64) -> RMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    well_conditioned(&mut rng, n)
}

/// Random dense matrix with standard normal entries.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> RMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gaussian(&mut rng, rows, cols)
}

impl fmt::Display for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "StateSpace(l_x={}, l_u={}, l_y={})",
            self.states(),
            self.inputs(),
            self.outputs()
        )
    }
}

/// Convenience for building matrices from row slices in tests and fixtures.
pub fn matrix(rows: usize, cols: usize, row_major: &[f64]) -> RMatrix {
    DMatrix::from_row_slice(rows, cols, row_major)
}
