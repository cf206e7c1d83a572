//! Problem definition files (TOML).
//!
//! ```toml
//! format = 1
//! h1 = "-1/3"            # number or constant expression
//! h2 = "1/3"
//!
//! [boundary]
//! alpha = [0, -1]
//! beta = [1, 0]
//!
//! [transmission]         # optional, defaults to all ones
//! gamma = [1, 1, 1, 1]
//! delta = [1, 1, 1, 1]
//!
//! [coefficients]         # one expression in x per piece
//! r = ["1", "1", "1"]
//! p = ["1", "1", "1"]
//! q = ["0", "0", "0"]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::problem::{validate_problem, ProblemSpec, ValidatedProblem};

/// Version written to and required in problem files.
pub const FORMAT_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    fn resolve(&self, field: &str) -> Result<f64> {
        match self {
            Scalar::Number(v) => Ok(*v),
            Scalar::Text(s) => {
                let e = Expr::parse(s).map_err(|e| Error::Config(format!("{field}: {e}")))?;
                e.as_constant()
                    .ok_or_else(|| Error::Config(format!("{field}: `{s}` is not a constant")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub alpha: [Scalar; 2],
    pub beta: [Scalar; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionSection {
    pub gamma: [Scalar; 4],
    pub delta: [Scalar; 4],
}

impl Default for TransmissionSection {
    fn default() -> Self {
        let ones = || std::array::from_fn(|_| Scalar::Number(1.0));
        TransmissionSection {
            gamma: ones(),
            delta: ones(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSection {
    pub r: [String; 3],
    pub p: [String; 3],
    pub q: [String; 3],
}

/// The file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub format: i64,
    pub h1: Scalar,
    pub h2: Scalar,
    pub boundary: BoundarySection,
    #[serde(default)]
    pub transmission: TransmissionSection,
    pub coefficients: CoefficientSection,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile> {
        let file: ProblemFile =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        if file.format != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported format {}, expected {FORMAT_VERSION}",
                file.format
            )));
        }
        Ok(file)
    }

    pub fn to_spec(&self) -> Result<ProblemSpec> {
        let exprs = |name: &str, list: &[String; 3]| -> Result<[Expr; 3]> {
            let mut out: [Expr; 3] = std::array::from_fn(|_| Expr::Num(0.0));
            for (i, s) in list.iter().enumerate() {
                out[i] = Expr::parse(s)
                    .map_err(|e| Error::Config(format!("coefficients.{name}[{}]: {e}", i + 1)))?;
            }
            Ok(out)
        };
        let scalars = |name: &str, list: &[Scalar]| -> Result<Vec<f64>> {
            list.iter()
                .enumerate()
                .map(|(i, s)| s.resolve(&format!("{name}[{}]", i + 1)))
                .collect()
        };
        let alpha = scalars("boundary.alpha", &self.boundary.alpha)?;
        let beta = scalars("boundary.beta", &self.boundary.beta)?;
        let gamma = scalars("transmission.gamma", &self.transmission.gamma)?;
        let delta = scalars("transmission.delta", &self.transmission.delta)?;
        Ok(ProblemSpec {
            h1: self.h1.resolve("h1")?,
            h2: self.h2.resolve("h2")?,
            r: exprs("r", &self.coefficients.r)?,
            p: exprs("p", &self.coefficients.p)?,
            q: exprs("q", &self.coefficients.q)?,
            alpha: [alpha[0], alpha[1]],
            beta: [beta[0], beta[1]],
            gamma: [gamma[0], gamma[1], gamma[2], gamma[3]],
            delta: [delta[0], delta[1], delta[2], delta[3]],
        })
    }

    pub fn from_spec(spec: &ProblemSpec) -> ProblemFile {
        let nums = |v: &[f64]| -> Vec<Scalar> { v.iter().map(|&x| Scalar::Number(x)).collect() };
        let strs = |v: &[Expr; 3]| -> [String; 3] { std::array::from_fn(|i| v[i].to_string()) };
        ProblemFile {
            format: FORMAT_VERSION,
            h1: Scalar::Number(spec.h1),
            h2: Scalar::Number(spec.h2),
            boundary: BoundarySection {
                alpha: nums(&spec.alpha).try_into().unwrap(),
                beta: nums(&spec.beta).try_into().unwrap(),
            },
            transmission: TransmissionSection {
                gamma: nums(&spec.gamma).try_into().unwrap(),
                delta: nums(&spec.delta).try_into().unwrap(),
            },
            coefficients: CoefficientSection {
                r: strs(&spec.r),
                p: strs(&spec.p),
                q: strs(&spec.q),
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem file serializes")
    }
}

/// Parse and validate problem text.
pub fn parse_problem(text: &str) -> Result<ValidatedProblem> {
    validate_problem(ProblemFile::parse(text)?.to_spec()?)
}

/// Read, parse, and validate a problem file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<ValidatedProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text)
}
