//! Input documents and complex-number text.

use std::path::Path;

use invzero::linalg::{Complex64, RMatrix};
use invzero::StateSpace;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `{"re": x, "im": y}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexValue> for Complex64 {
    fn from(z: ComplexValue) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// A system as written on disk: row-major matrices under `A`, `B`, `C`
/// and optionally `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_zeros: Option<Vec<ComplexValue>>,
}

fn to_matrix(rows: &[Vec<f64>], key: &str, cols_hint: Option<usize>) -> Result<RMatrix, CliError> {
    let cols = rows.first().map(Vec::len).or(cols_hint).unwrap_or(0);
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(CliError::Parse(format!(
            "{key}: row {i} has {} entries, expected {cols}",
            row.len()
        )));
    }
    Ok(RMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn from_matrix(m: &RMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl SystemDocument {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("invalid system document: {e}")))
    }

    /// Reads a file, or standard input for `-`.
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = if path.as_os_str() == "-" {
            std::io::read_to_string(std::io::stdin())
        } else {
            std::fs::read_to_string(path)
        }
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_state_space(&self) -> Result<StateSpace, CliError> {
        let a = to_matrix(&self.a, "A", None)?;
        // empty B or C still need the state dimension
        let b = to_matrix(&self.b, "B", None)?;
        let c = to_matrix(&self.c, "C", Some(a.ncols()))?;
        let d = match &self.d {
            Some(d) => to_matrix(d, "D", Some(b.ncols()))?,
            None => RMatrix::zeros(c.nrows(), b.ncols()),
        };
        Ok(StateSpace::new(a, b, c, d)?)
    }

    /// Canonical document for a realization (`D` written only when nonzero).
    pub fn from_state_space(sys: &StateSpace, name: Option<String>) -> Self {
        Self {
            name,
            a: from_matrix(sys.a()),
            b: from_matrix(sys.b()),
            c: from_matrix(sys.c()),
            d: (!sys.has_zero_feedthrough()).then(|| from_matrix(sys.d())),
            expected_zeros: None,
        }
    }

    pub fn expected(&self) -> Option<Vec<Complex64>> {
        self.expected_zeros
            .as_ref()
            .map(|v| v.iter().map(|&z| z.into()).collect())
    }
}

/// Parses one complex number such as `-1`, `2.5e-3`, `-0.77+1.38i`, `3i`
/// or `-i`.
pub fn parse_complex(text: &str) -> Result<Complex64, CliError> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().replace('−', "-");
    let bad = || CliError::Parse(format!("cannot parse complex number {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return s.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // split before the sign of the imaginary part, skipping exponent signs
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

/// Comma-separated list of complex numbers; blank input gives an empty list.
pub fn parse_complex_list(text: &str) -> Result<Vec<Complex64>, CliError> {
    text.split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_complex)
        .collect()
}
