//! Subcommand implementations. Each returns a report; exit-code policy
//! lives in `main`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use invzero::extensions;
use invzero::izform;
use invzero::linalg::{Complex64, RankTolerance};
use invzero::model::{self, match_multisets, multisets_match, MatchTolerance, Method, StateSpace, ZeroSet};
use invzero::{gazero, rosenbrock, Error, ZeroOptions};
use rayon::prelude::*;

use crate::document::SystemDocument;
use crate::error::CliError;
use crate::report::{
    entries, Agreement, CandidateCheck, CompareReport, DecomposeReport, MethodResult, Status, VerifyReport, ZeroReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodChoice {
    Izform,
    Gazero,
    Detinterp,
    Auto,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Settings {
    pub opts: ZeroOptions,
    /// `Some(None)`: extend with the default pole.
    pub extend: Option<Option<f64>>,
    pub timing: bool,
    /// Matching threshold for `expected_zeros`.
    pub expected_tol: f64,
}

impl Settings {
    pub fn new(
        tol: Option<f64>,
        verify_tol: Option<f64>,
        seed: u64,
        rounds: usize,
        extend: Option<Option<f64>>,
    ) -> Result<Self, CliError> {
        let mut opts = ZeroOptions {
            seed,
            rounds,
            alpha: extend.flatten(),
            ..ZeroOptions::default()
        };
        if let Some(t) = tol {
            opts.rank_tol = RankTolerance::relative(t).map_err(|e| CliError::Parse(format!("--tol: {e}")))?;
        }
        if let Some(t) = verify_tol {
            opts.verify_tol = RankTolerance::relative(t).map_err(|e| CliError::Parse(format!("--verify-tol: {e}")))?;
        }
        Ok(Self {
            opts,
            extend,
            timing: false,
            expected_tol: 1e-2,
        })
    }

    fn elapsed(&self, start: Instant) -> Option<f64> {
        self.timing.then(|| start.elapsed().as_secs_f64() * 1e3)
    }
}

fn method_error(e: Error) -> CliError {
    match e {
        Error::VerificationFailure(_) => CliError::Verification(e.to_string()),
        _ => CliError::Method(e.to_string()),
    }
}

pub fn cmd_zeros(doc: &SystemDocument, method: MethodChoice, settings: &Settings) -> Result<ZeroReport, CliError> {
    let sys = doc.to_state_space()?;
    let opts = &settings.opts;
    let start = Instant::now();
    let mut report = ZeroReport {
        name: doc.name.clone(),
        method: String::new(),
        zeros: Vec::new(),
        relative_degree: None,
        l_eta: None,
        condition_t: None,
        normal_rank: None,
        alpha: None,
        discarded: Vec::new(),
        expected_match: None,
        timing_ms: None,
    };
    let zeros = match method {
        MethodChoice::Izform => {
            let out = izform::invariant_zeros_izform(&sys, opts).map_err(method_error)?;
            report.relative_degree = Some(out.form.profile().per_output().to_vec());
            report.l_eta = Some(out.form.l_eta());
            report.condition_t = Some(out.form.bundle.condition_t);
            out.zeros
        }
        MethodChoice::Gazero => gazero::gazero_zeros(&sys, opts).map_err(method_error)?,
        MethodChoice::Detinterp => rosenbrock::zeros_by_det_interpolation(&sys, opts).map_err(method_error)?.zeros,
        MethodChoice::Auto => {
            let out = extensions::invariant_zeros_general(&sys, opts).map_err(method_error)?;
            if let Some(form) = &out.form {
                report.relative_degree = Some(form.profile().per_output().to_vec());
                report.l_eta = Some(form.l_eta());
                report.condition_t = Some(form.bundle.condition_t);
            }
            report.alpha = out.alpha;
            report.discarded = out.discarded.iter().map(|&z| z.into()).collect();
            out.zeros
        }
    };
    report.method = zeros.method.label().to_string();
    report.normal_rank = zeros.normal_rank;
    report.expected_match = doc
        .expected()
        .map(|e| multisets_match(&zeros.values(), &e, MatchTolerance::new(settings.expected_tol, 0.0)));
    report.zeros = entries(&zeros);
    report.timing_ms = settings.elapsed(start);
    Ok(report)
}

/// Appends the rank diagnostics of `T̄` to a decomposition failure.
fn with_diagnostics(sys: &StateSpace, err: Error, tol: RankTolerance) -> CliError {
    let text = err.to_string();
    if text.contains("rank T_bar") {
        return CliError::Method(text);
    }
    let detail = model::relative_degree(sys, tol)
        .and_then(|profile| izform::rank_diagnostics(sys, &profile, tol).map(|d| (profile, d)))
        .map(|(profile, d)| format!("\nrelative degrees: {profile}\nrank diagnostics: {d}"))
        .unwrap_or_default();
    CliError::Method(format!("{text}{detail}"))
}

pub fn cmd_decompose(doc: &SystemDocument, settings: &Settings) -> Result<DecomposeReport, CliError> {
    let sys = doc.to_state_space()?;
    let tol = settings.opts.rank_tol;
    let start = Instant::now();
    if !sys.is_square() {
        return Err(CliError::Method(format!(
            "decompose needs a square system ({} inputs, {} outputs); `zeros --method auto` squares it first",
            sys.inputs(),
            sys.outputs()
        )));
    }
    let (target, alpha) = match settings.extend {
        Some(alpha) => {
            let alpha = alpha.unwrap_or_else(|| extensions::default_alpha(&sys));
            (extensions::dynamic_extension(&sys, alpha)?.extended, Some(alpha))
        }
        None if !sys.has_zero_feedthrough() => {
            return Err(CliError::Method(
                "decompose needs D = 0; pass --extend [alpha] to apply the dynamic extension".into(),
            ))
        }
        None => (sys, None),
    };
    let form = izform::invariant_zero_form(&target, tol).map_err(|e| with_diagnostics(&target, e, tol))?;
    let mut report = DecomposeReport::new(&form, doc.name.clone(), alpha);
    report.timing_ms = settings.elapsed(start);
    Ok(report)
}

pub fn cmd_verify(doc: &SystemDocument, candidates: &[Complex64], settings: &Settings) -> Result<VerifyReport, CliError> {
    let sys = doc.to_state_space()?;
    let opts = &settings.opts;
    let start = Instant::now();
    let normal_rank =
        rosenbrock::estimate_normal_rank(&sys, opts.rank_tol, opts.normal_rank_samples.max(3), opts.seed)?;
    let candidates = candidates
        .iter()
        .map(|&s| {
            let e = rosenbrock::evaluate_pencil(&sys, s, normal_rank, opts.verify_tol);
            CandidateCheck {
                re: s.re,
                im: s.im,
                pencil_rank: e.chi_rank,
                drops: e.drops,
                drop_measure: e.drop_measure,
            }
        })
        .collect();
    Ok(VerifyReport {
        name: doc.name.clone(),
        normal_rank,
        candidates,
        timing_ms: settings.elapsed(start),
    })
}

fn max_drop_measure(sys: &StateSpace, zeros: &ZeroSet, opts: &ZeroOptions) -> f64 {
    let normal_rank = zeros.normal_rank.unwrap_or(sys.states() + sys.inputs().min(sys.outputs()));
    zeros
        .zeros
        .iter()
        .map(|z| rosenbrock::evaluate_pencil(sys, z.value, normal_rank, opts.verify_tol).drop_measure)
        .fold(0.0, f64::max)
}

fn run_method(sys: &StateSpace, method: MethodChoice, opts: &ZeroOptions) -> MethodResult {
    let label = match method {
        MethodChoice::Izform => Method::InvariantZeroForm.label(),
        MethodChoice::Gazero => Method::Gazero.label(),
        MethodChoice::Detinterp => Method::DetInterpolation.label(),
        MethodChoice::Auto => "auto",
    };
    let not_applicable = |why: &str| MethodResult {
        method: label.to_string(),
        status: Status::NotApplicable,
        message: Some(why.to_string()),
        zeros: None,
        max_drop_measure: None,
    };
    let square = sys.is_square();
    let strict = sys.has_zero_feedthrough();
    let result = match method {
        MethodChoice::Izform if !square => return not_applicable("nonsquare system"),
        MethodChoice::Izform if !strict => return not_applicable("D != 0"),
        MethodChoice::Gazero if !square => return not_applicable("nonsquare system"),
        MethodChoice::Gazero if !strict => return not_applicable("D != 0"),
        MethodChoice::Detinterp if !square => return not_applicable("nonsquare system"),
        MethodChoice::Izform => izform::invariant_zeros_izform(sys, opts).map(|o| o.zeros),
        MethodChoice::Gazero => gazero::gazero_zeros(sys, opts),
        MethodChoice::Detinterp => rosenbrock::zeros_by_det_interpolation(sys, opts).map(|o| o.zeros),
        MethodChoice::Auto => extensions::invariant_zeros_general(sys, opts).map(|o| o.zeros),
    };
    match result {
        Ok(zeros) => MethodResult {
            method: label.to_string(),
            status: Status::Ok,
            message: None,
            max_drop_measure: Some(max_drop_measure(sys, &zeros, opts)),
            zeros: Some(entries(&zeros)),
        },
        Err(Error::OracleNotApplicable(why)) => not_applicable(&why),
        Err(e) => MethodResult {
            method: label.to_string(),
            status: Status::Failed,
            message: Some(e.to_string()),
            zeros: None,
            max_drop_measure: None,
        },
    }
}

fn values(m: &MethodResult) -> Vec<Complex64> {
    m.zeros
        .iter()
        .flatten()
        .flat_map(|z| std::iter::repeat_n(Complex64::new(z.re, z.im), z.multiplicity))
        .collect()
}

pub fn compare_document(source: String, doc: &SystemDocument, settings: &Settings) -> CompareReport {
    let start = Instant::now();
    let mut report = CompareReport {
        source,
        name: doc.name.clone(),
        error: None,
        methods: Vec::new(),
        agreement: Vec::new(),
        timing_ms: None,
    };
    let sys = match doc.to_state_space() {
        Ok(sys) => sys,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    let methods = [MethodChoice::Izform, MethodChoice::Gazero, MethodChoice::Detinterp, MethodChoice::Auto];
    report.methods = methods.iter().map(|&m| run_method(&sys, m, &settings.opts)).collect();
    let ok: Vec<&MethodResult> = report.methods.iter().filter(|m| m.status == Status::Ok).collect();
    let tol = settings.opts.cluster;
    for (i, left) in ok.iter().enumerate() {
        for right in &ok[i + 1..] {
            let (l, r) = (values(left), values(right));
            let m = match_multisets(&l, &r, tol);
            report.agreement.push(Agreement {
                left: left.method.clone(),
                right: right.method.clone(),
                agree: l.len() == r.len() && m.is_perfect(),
                max_distance: m.max_distance,
            });
        }
    }
    report.timing_ms = settings.elapsed(start);
    report
}

/// Documents to compare: the file itself, or every `*.json` file of a
/// directory in name order.
pub fn compare_inputs(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Compares every input in parallel; results keep the input order.
/// Unreadable documents get a report carrying the error.
pub fn cmd_compare(paths: &[PathBuf], settings: &Settings) -> Vec<CompareReport> {
    paths
        .par_iter()
        .map(|path| {
            let source = path.display().to_string();
            match SystemDocument::read(path) {
                Ok(doc) => compare_document(source, &doc, settings),
                Err(e) => CompareReport {
                    source,
                    name: None,
                    error: Some(e.to_string()),
                    methods: Vec::new(),
                    agreement: Vec::new(),
                    timing_ms: None,
                },
            }
        })
        .collect()
}
