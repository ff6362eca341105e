//! On-disk instance format: a single JSON document carrying the two
//! quadratics, the certified scalars, and optional ground truth.
//!
//! Matrices are stored as sorted upper-triangle `[row, col, value]` triplets
//! (lexicographic by row then column); floats are written in shortest
//! round-trip form, which preserves every bit of a double. The `version`
//! field gates future format changes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::instance::{GtrsInstance, InstanceError};
use super::quadratic::Quadratic;
use super::sparse::{SparseError, SparseSymMatrix};
use crate::dual_oracle::GroundTruth;

/// Current instance file format version.
pub const FORMAT_VERSION: u32 = 1;

/// Errors raised while reading or writing instance files.
#[derive(Debug, Error)]
pub enum FormatError {
    /// Filesystem failure.
    #[error("io error")]
    Io(#[from] std::io::Error),
    /// Malformed JSON.
    #[error("json error")]
    Json(#[from] serde_json::Error),
    /// The file declares an unknown format version.
    #[error("unsupported format version {found}; this build reads version {FORMAT_VERSION}")]
    UnsupportedVersion { found: u32 },
    /// Invalid sparse matrix data.
    #[error("invalid matrix data")]
    Sparse(#[from] SparseError),
    /// The assembled data violates instance invariants.
    #[error("invalid instance data")]
    Instance(#[from] InstanceError),
    /// Structurally inconsistent fields (e.g. mismatched vector lengths).
    #[error("inconsistent file contents: {0}")]
    Inconsistent(String),
}

/// Ground-truth block as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileGroundTruth {
    /// Maximizer of the dual function.
    pub gamma_star: f64,
    /// Implicit regularity at the maximizer.
    pub mu_star: f64,
    /// Optimal value.
    pub opt: f64,
    /// Primal optimizer.
    pub x_star: Vec<f64>,
}

/// The JSON document structure of an instance file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    /// Format version; must equal [`FORMAT_VERSION`].
    pub version: u32,
    /// Ambient dimension.
    pub n: usize,
    /// Certified definiteness margin at the reference weight.
    pub xi: f64,
    /// Scale bound.
    pub zeta: f64,
    /// Reference weight.
    pub gamma_hat: f64,
    /// Objective constant term.
    pub c0: f64,
    /// Constraint constant term.
    pub c1: f64,
    /// Objective linear term.
    pub b0: Vec<f64>,
    /// Constraint linear term.
    pub b1: Vec<f64>,
    /// Objective matrix, sorted upper-triangle triplets.
    #[serde(rename = "A0")]
    pub a0: Vec<(usize, usize, f64)>,
    /// Constraint matrix, sorted upper-triangle triplets.
    #[serde(rename = "A1")]
    pub a1: Vec<(usize, usize, f64)>,
    /// Optional exact optimizer data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<FileGroundTruth>,
}

impl InstanceFile {
    /// Captures an in-memory instance (and optional ground truth) as a file
    /// document.
    pub fn from_instance(inst: &GtrsInstance, truth: Option<&GroundTruth>) -> Self {
        Self {
            version: FORMAT_VERSION,
            n: inst.n(),
            xi: inst.xi,
            zeta: inst.zeta,
            gamma_hat: inst.gamma_hat,
            c0: inst.q0.c,
            c1: inst.q1.c,
            b0: inst.q0.b.clone(),
            b1: inst.q1.b.clone(),
            a0: inst.q0.a.triplets().to_vec(),
            a1: inst.q1.a.triplets().to_vec(),
            ground_truth: truth.map(|t| FileGroundTruth {
                gamma_star: t.gamma_star,
                mu_star: t.mu_star,
                opt: t.opt,
                x_star: t.x_star.clone(),
            }),
        }
    }

    /// Validates the document and assembles the in-memory instance.
    pub fn into_instance(self) -> Result<(GtrsInstance, Option<GroundTruth>), FormatError> {
        if self.version != FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion { found: self.version });
        }
        if self.b0.len() != self.n || self.b1.len() != self.n {
            return Err(FormatError::Inconsistent(format!(
                "linear terms have lengths {} and {} but n = {}",
                self.b0.len(),
                self.b1.len(),
                self.n
            )));
        }
        let a0 = SparseSymMatrix::from_triplets(self.n, self.a0)?;
        let a1 = SparseSymMatrix::from_triplets(self.n, self.a1)?;
        let q0 = Quadratic::new(a0, self.b0, self.c0);
        let q1 = Quadratic::new(a1, self.b1, self.c1);
        let inst = GtrsInstance::new(q0, q1, self.xi, self.zeta, self.gamma_hat)?;
        let truth = match self.ground_truth {
            Some(t) => {
                if t.x_star.len() != self.n {
                    return Err(FormatError::Inconsistent(format!(
                        "ground truth optimizer has length {} but n = {}",
                        t.x_star.len(),
                        self.n
                    )));
                }
                Some(GroundTruth {
                    gamma_star: t.gamma_star,
                    mu_star: t.mu_star,
                    opt: t.opt,
                    x_star: t.x_star,
                    gamma_minus: None,
                    gamma_plus: None,
                })
            }
            None => None,
        };
        Ok((inst, truth))
    }
}

/// Serializes an instance (with optional ground truth) to a JSON string.
pub fn instance_to_json(
    inst: &GtrsInstance,
    truth: Option<&GroundTruth>,
) -> Result<String, FormatError> {
    let doc = InstanceFile::from_instance(inst, truth);
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Parses an instance JSON string.
pub fn instance_from_json(
    json: &str,
) -> Result<(GtrsInstance, Option<GroundTruth>), FormatError> {
    let doc: InstanceFile = serde_json::from_str(json)?;
    doc.into_instance()
}

/// Writes an instance file.
pub fn write_instance(
    path: &Path,
    inst: &GtrsInstance,
    truth: Option<&GroundTruth>,
) -> Result<(), FormatError> {
    let mut json = instance_to_json(inst, truth)?;
    json.push('\n');
    fs::write(path, json)?;
    Ok(())
}

/// Reads an instance file.
pub fn read_instance(path: &Path) -> Result<(GtrsInstance, Option<GroundTruth>), FormatError> {
    let json = fs::read_to_string(path)?;
    instance_from_json(&json)
}
