//! Serializable reports and their plain-text rendering.

use std::fmt::{self, Write as _};

use invzero::izform::{InvariantZeroForm, StructureResiduals};
use invzero::linalg::RMatrix;
use invzero::model::{Zero, ZeroSet};
use serde::{Deserialize, Serialize};

use crate::document::ComplexValue;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroEntry {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    pub verified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pencil_rank: Option<usize>,
}

impl From<&Zero> for ZeroEntry {
    fn from(z: &Zero) -> Self {
        Self {
            re: z.value.re,
            im: z.value.im,
            multiplicity: z.multiplicity,
            verified: z.verified,
            pencil_rank: z.pencil_rank,
        }
    }
}

pub fn entries(set: &ZeroSet) -> Vec<ZeroEntry> {
    set.zeros.iter().map(ZeroEntry::from).collect()
}

/// Output of `invzero zeros`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub method: String,
    pub zeros: Vec<ZeroEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_degree: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_eta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_rank: Option<usize>,
    /// Pole of the dynamic extension, when one was used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Unverified candidates at the extension pole that were dropped.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub discarded: Vec<ComplexValue>,
    /// Agreement with the document's `expected_zeros`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_match: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl ZeroReport {
    pub fn unverified(&self) -> usize {
        self.zeros.iter().filter(|z| !z.verified).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub inverse: f64,
    pub b_top: f64,
    pub c_left: f64,
    pub b_xi_pattern: f64,
    pub c_xi_pattern: f64,
    pub a_xi_shift: f64,
    pub a_xi_eta_shift: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annihilation: Option<f64>,
    pub bound: f64,
}

impl From<&StructureResiduals> for Residuals {
    fn from(r: &StructureResiduals) -> Self {
        Self {
            inverse: r.inverse,
            b_top: r.b_top,
            c_left: r.c_left,
            b_xi_pattern: r.b_xi_pattern,
            c_xi_pattern: r.c_xi_pattern,
            a_xi_shift: r.a_xi_shift,
            a_xi_eta_shift: r.a_xi_eta_shift,
            annihilation: r.annihilation,
            bound: r.bound,
        }
    }
}

pub type Rows = Vec<Vec<f64>>;

fn rows(m: &RMatrix) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Output of `invzero decompose`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub relative_degree: Vec<usize>,
    pub l_eta: usize,
    pub rho: usize,
    pub condition_t: f64,
    pub hypotheses_hold: bool,
    pub t: Rows,
    pub s: Rows,
    pub a_eta: Rows,
    pub a_eta_xi: Rows,
    pub a_xi_eta: Rows,
    pub a_xi: Rows,
    pub b_xi: Rows,
    pub c_xi: Rows,
    pub a_full: Rows,
    pub b_full: Rows,
    pub c_full: Rows,
    pub residuals: Residuals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl DecomposeReport {
    pub fn new(form: &InvariantZeroForm, name: Option<String>, alpha: Option<f64>) -> Self {
        Self {
            name,
            alpha,
            relative_degree: form.profile().per_output().to_vec(),
            l_eta: form.l_eta(),
            rho: form.rho(),
            condition_t: form.bundle.condition_t,
            hypotheses_hold: form.hypotheses_hold,
            t: rows(&form.bundle.t),
            s: rows(&form.bundle.s),
            a_eta: rows(&form.a_eta),
            a_eta_xi: rows(&form.a_eta_xi),
            a_xi_eta: rows(&form.a_xi_eta),
            a_xi: rows(&form.a_xi),
            b_xi: rows(&form.b_xi),
            c_xi: rows(&form.c_xi),
            a_full: rows(&form.a_full),
            b_full: rows(&form.b_full),
            c_full: rows(&form.c_full),
            residuals: (&form.residuals).into(),
            timing_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateCheck {
    pub re: f64,
    pub im: f64,
    pub pencil_rank: usize,
    pub drops: bool,
    /// `σ_r / σ_max` at the candidate, `r` the normal rank.
    pub drop_measure: f64,
}

/// Output of `invzero verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub normal_rank: usize,
    pub candidates: Vec<CandidateCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    NotApplicable,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeros: Option<Vec<ZeroEntry>>,
    /// Largest `σ_r / σ_max` of the pencil over the method's zeros.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_drop_measure: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub left: String,
    pub right: String,
    pub agree: bool,
    /// Largest distance between matched zeros.
    pub max_distance: f64,
}

/// Output of `invzero compare` for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Set when the document could not be read.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub methods: Vec<MethodResult>,
    pub agreement: Vec<Agreement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl CompareReport {
    pub fn all_agree(&self) -> bool {
        self.agreement.iter().all(|a| a.agree)
    }
}

fn complex(re: f64, im: f64) -> String {
    if im == 0.0 {
        format!("{re:.6}")
    } else {
        format!("{re:.6} {} {:.6}i", if im < 0.0 { '-' } else { '+' }, im.abs())
    }
}

fn write_zeros(f: &mut String, zeros: &[ZeroEntry]) {
    if zeros.is_empty() {
        let _ = writeln!(f, "  (none)");
    }
    for z in zeros {
        let rank = z.pencil_rank.map_or("?".to_string(), |r| r.to_string());
        let _ = writeln!(
            f,
            "  {:<28} x{}  {}  pencil rank {rank}",
            complex(z.re, z.im),
            z.multiplicity,
            if z.verified { "verified" } else { "NOT verified" }
        );
    }
}

fn write_matrix(f: &mut String, label: &str, m: &Rows) {
    let cols = m.first().map_or(0, Vec::len);
    let _ = writeln!(f, "{label} ({}x{cols}):", m.len());
    for row in m {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>12.6}")).collect();
        let _ = writeln!(f, "  {}", cells.join(" "));
    }
}

fn write_timing(f: &mut String, t: Option<f64>) {
    if let Some(ms) = t {
        let _ = writeln!(f, "time: {ms:.3} ms");
    }
}

impl fmt::Display for ZeroReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut f = String::new();
        if let Some(n) = &self.name {
            let _ = writeln!(f, "system: {n}");
        }
        let _ = writeln!(f, "method: {}", self.method);
        if let Some(a) = self.alpha {
            let _ = writeln!(f, "extension pole: -{a}");
        }
        if let Some(rd) = &self.relative_degree {
            let _ = writeln!(f, "relative degrees: {rd:?}");
        }
        if let Some(l) = self.l_eta {
            let _ = writeln!(f, "l_eta: {l}");
        }
        if let Some(c) = self.condition_t {
            let _ = writeln!(f, "cond(T): {c:.3e}");
        }
        if let Some(r) = self.normal_rank {
            let _ = writeln!(f, "normal rank: {r}");
        }
        let count: usize = self.zeros.iter().map(|z| z.multiplicity).sum();
        let _ = writeln!(f, "zeros ({count}):");
        write_zeros(&mut f, &self.zeros);
        if !self.discarded.is_empty() {
            let d: Vec<String> = self.discarded.iter().map(|z| complex(z.re, z.im)).collect();
            let _ = writeln!(f, "discarded at the extension pole: {}", d.join(", "));
        }
        if let Some(m) = self.expected_match {
            let _ = writeln!(f, "expected zeros: {}", if m { "match" } else { "MISMATCH" });
        }
        write_timing(&mut f, self.timing_ms);
        out.write_str(&f)
    }
}

impl fmt::Display for DecomposeReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut f = String::new();
        if let Some(n) = &self.name {
            let _ = writeln!(f, "system: {n}");
        }
        if let Some(a) = self.alpha {
            let _ = writeln!(f, "dynamic extension with pole -{a}");
        }
        let _ = writeln!(f, "relative degrees: {:?}, rho = {}, l_eta = {}", self.relative_degree, self.rho, self.l_eta);
        let _ = writeln!(f, "cond(T): {:.3e}", self.condition_t);
        let _ = writeln!(f, "zeros equal eig(A_eta): {}", if self.hypotheses_hold { "yes" } else { "no (B_xi rank deficient or nonsquare)" });
        for (label, m) in [
            ("T", &self.t),
            ("S", &self.s),
            ("A_eta", &self.a_eta),
            ("A_eta_xi", &self.a_eta_xi),
            ("A_xi_eta", &self.a_xi_eta),
            ("A_xi", &self.a_xi),
            ("B_xi", &self.b_xi),
            ("C_xi", &self.c_xi),
            ("TAS", &self.a_full),
            ("TB", &self.b_full),
            ("CS", &self.c_full),
        ] {
            write_matrix(&mut f, label, m);
        }
        let r = &self.residuals;
        let _ = writeln!(f, "residuals (bound {:.3e}):", r.bound);
        for (label, v) in [
            ("TS - I", r.inverse),
            ("top rows of TB", r.b_top),
            ("leading columns of CS", r.c_left),
            ("B_xi zero rows", r.b_xi_pattern),
            ("C_xi pattern", r.c_xi_pattern),
            ("A_xi shift rows", r.a_xi_shift),
            ("A_xi_eta shift rows", r.a_xi_eta_shift),
        ] {
            let _ = writeln!(f, "  {label:<24} {v:.3e}");
        }
        if let Some(a) = r.annihilation {
            let _ = writeln!(f, "  {:<24} {a:.3e}", "annihilation");
        }
        write_timing(&mut f, self.timing_ms);
        out.write_str(&f)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut f = String::new();
        if let Some(n) = &self.name {
            let _ = writeln!(f, "system: {n}");
        }
        let _ = writeln!(f, "normal rank: {}", self.normal_rank);
        for c in &self.candidates {
            let _ = writeln!(
                f,
                "  {:<28} pencil rank {}  {}  (sigma ratio {:.3e})",
                complex(c.re, c.im),
                c.pencil_rank,
                if c.drops { "drop" } else { "no drop" },
                c.drop_measure
            );
        }
        write_timing(&mut f, self.timing_ms);
        out.write_str(&f)
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut f = String::new();
        let _ = writeln!(f, "== {}{}", self.source, self.name.as_ref().map_or(String::new(), |n| format!(" ({n})")));
        if let Some(e) = &self.error {
            let _ = writeln!(f, "error: {e}");
        }
        for m in &self.methods {
            match m.status {
                Status::Ok => {
                    let _ = writeln!(f, "{}: max sigma ratio {:.3e}", m.method, m.max_drop_measure.unwrap_or(0.0));
                    write_zeros(&mut f, m.zeros.as_deref().unwrap_or(&[]));
                }
                Status::NotApplicable => {
                    let _ = writeln!(f, "{}: not applicable ({})", m.method, m.message.as_deref().unwrap_or(""));
                }
                Status::Failed => {
                    let _ = writeln!(f, "{}: failed ({})", m.method, m.message.as_deref().unwrap_or(""));
                }
            }
        }
        for a in &self.agreement {
            let _ = writeln!(
                f,
                "{} vs {}: {} (max distance {:.3e})",
                a.left,
                a.right,
                if a.agree { "agree" } else { "DISAGREE" },
                a.max_distance
            );
        }
        write_timing(&mut f, self.timing_ms);
        out.write_str(&f)
    }
}
