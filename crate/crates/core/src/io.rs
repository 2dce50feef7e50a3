//! JSON formats: problems, run reports and certificates.
//!
//! Floats go through `serde_json`'s shortest round-trip printing, so every
//! number written is read back bit for bit and a certificate re-verifies
//! from its file exactly as it did in memory.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::conitope::{Conitope, Vertex};
use crate::engine::{Certificate, CertificateKind, IterationRecord, SmpCandidate, SplitCertificate, UpperSource};
use crate::error::{JsrError, Result};
use crate::lift::{smat, svec, ConeKind, LiftedOperator};
use crate::matrix::{CMat, MatrixSet, ProductWord, ScalarKind};
use crate::tol::Tolerances;

pub const CERTIFICATE_FORMAT: &str = "jsr-certificate/1";

fn field_err(path: &str, msg: impl std::fmt::Display) -> JsrError {
    JsrError::Input(format!("{path}: {msg}"))
}

fn parse_number(v: &Value, path: &str) -> Result<f64> {
    match v {
        Value::Number(x) => x.as_f64().ok_or_else(|| field_err(path, "number out of range")),
        Value::Null => Err(field_err(path, "null entry (NaN or infinity are not allowed)")),
        other => Err(field_err(path, format!("expected a number, found {other}"))),
    }
}

fn parse_entry(v: &Value, kind: ScalarKind, path: &str) -> Result<Complex64> {
    match (kind, v) {
        (ScalarKind::Real, Value::Array(_)) => Err(field_err(
            path,
            "complex entry [re, im] in a problem declared \"real\"",
        )),
        (ScalarKind::Real, _) => Ok(Complex64::new(parse_number(v, path)?, 0.0)),
        (ScalarKind::Complex, Value::Array(p)) => {
            if p.len() != 2 {
                return Err(field_err(path, format!("complex entry needs [re, im], found {} numbers", p.len())));
            }
            Ok(Complex64::new(
                parse_number(&p[0], &format!("{path}[0]"))?,
                parse_number(&p[1], &format!("{path}[1]"))?,
            ))
        }
        (ScalarKind::Complex, _) => Ok(Complex64::new(parse_number(v, path)?, 0.0)),
    }
}

fn parse_matrix(v: &Value, kind: ScalarKind, path: &str) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| field_err(path, "expected an array of rows"))?;
    let nrows = rows.len();
    let mut data = Vec::new();
    let mut ncols = None;
    for (r, row) in rows.iter().enumerate() {
        let rp = format!("{path}[{r}]");
        let row = row.as_array().ok_or_else(|| field_err(&rp, "expected a row array"))?;
        match ncols {
            None => ncols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(field_err(&rp, format!("row has {} entries, previous rows have {c}", row.len())))
            }
            _ => {}
        }
        for (c, e) in row.iter().enumerate() {
            data.push(parse_entry(e, kind, &format!("{rp}[{c}]"))?);
        }
    }
    let ncols = ncols.unwrap_or(0);
    if nrows != ncols {
        return Err(field_err(path, format!("matrix is not square ({nrows}x{ncols})")));
    }
    Ok(CMat::from_row_slice(nrows, ncols, &data))
}

/// Parses a problem document.
pub fn parse_problem_str(text: &str) -> Result<MatrixSet> {
    let doc: Value = serde_json::from_str(text).map_err(|e| JsrError::Input(format!("malformed JSON: {e}")))?;
    let obj = doc.as_object().ok_or_else(|| field_err("$", "expected a JSON object"))?;
    let kind = match obj.get("scalar").and_then(Value::as_str) {
        Some("real") => ScalarKind::Real,
        Some("complex") => ScalarKind::Complex,
        Some(other) => return Err(field_err("scalar", format!("expected \"real\" or \"complex\", found {other:?}"))),
        None => return Err(field_err("scalar", "missing (\"real\" or \"complex\")")),
    };
    let mats = obj
        .get("matrices")
        .and_then(Value::as_array)
        .ok_or_else(|| field_err("matrices", "missing or not an array"))?;
    let matrices = mats
        .iter()
        .enumerate()
        .map(|(i, m)| parse_matrix(m, kind, &format!("matrices[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let labels = match obj.get("labels") {
        None | Some(Value::Null) => None,
        Some(Value::Array(l)) => Some(
            l.iter()
                .enumerate()
                .map(|(i, s)| {
                    s.as_str()
                        .map(str::to_owned)
                        .ok_or_else(|| field_err(&format!("labels[{i}]"), "expected a string"))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        Some(_) => return Err(field_err("labels", "expected an array of strings")),
    };
    let set = MatrixSet::new(kind, matrices, labels)?;
    if let Some(n) = obj.get("n") {
        let n = n.as_u64().ok_or_else(|| field_err("n", "expected a positive integer"))?;
        if n as usize != set.dim() {
            return Err(field_err("n", format!("declared n = {n} but the matrices are {0}x{0}", set.dim())));
        }
    }
    Ok(set)
}

pub fn parse_problem(path: impl AsRef<Path>) -> Result<MatrixSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| JsrError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_problem_str(&text).map_err(|e| match e {
        JsrError::Input(m) => JsrError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn matrix_value(m: &CMat, complex: bool) -> Value {
    let rows = (0..m.nrows())
        .map(|r| {
            Value::Array(
                (0..m.ncols())
                    .map(|c| {
                        let z = m[(r, c)];
                        if complex {
                            serde_json::json!([z.re, z.im])
                        } else {
                            serde_json::json!(z.re)
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

pub fn emit_problem(set: &MatrixSet) -> Result<String> {
    let complex = set.kind() == ScalarKind::Complex;
    let mut obj = serde_json::Map::new();
    obj.insert("scalar".into(), Value::String(if complex { "complex" } else { "real" }.into()));
    obj.insert("n".into(), set.dim().into());
    obj.insert(
        "matrices".into(),
        Value::Array(set.matrices().iter().map(|m| matrix_value(m, complex)).collect()),
    );
    if let Some(l) = set.labels() {
        obj.insert("labels".into(), serde_json::to_value(l)?);
    }
    Ok(serde_json::to_string_pretty(&Value::Object(obj))?)
}

/// A complex matrix as rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexMatrixFile(pub Vec<Vec<[f64; 2]>>);

impl ComplexMatrixFile {
    pub fn from_matrix(m: &CMat) -> Self {
        ComplexMatrixFile((0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect())
    }

    pub fn to_matrix(&self, path: &str) -> Result<CMat> {
        let nrows = self.0.len();
        let ncols = self.0.first().map_or(0, Vec::len);
        if self.0.iter().any(|r| r.len() != ncols) {
            return Err(field_err(path, "ragged matrix"));
        }
        let data: Vec<Complex64> = self.0.iter().flatten().map(|p| Complex64::new(p[0], p[1])).collect();
        Ok(CMat::from_row_slice(nrows, ncols, &data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexFile {
    /// `svec` coordinates.
    pub svec: Vec<f64>,
    pub word: ProductWord,
    pub scale_log: f64,
    #[serde(default)]
    pub seed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub basis_s: ComplexMatrixFile,
    pub basis_perp: ComplexMatrixFile,
    pub restricted: CertificateFile,
    pub compressed: CertificateFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub format: String,
    pub kind: CertificateKind,
    pub cone: ConeKind,
    pub n: usize,
    pub smp_word: ProductWord,
    pub smp_value: f64,
    /// Lifted operators are divided by `scale^2`.
    pub scale: f64,
    pub lower: f64,
    pub upper: f64,
    pub upper_source: UpperSource,
    pub seeds: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<VertexFile>>,
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Box<SplitFile>>,
}

impl CertificateFile {
    pub fn from_certificate(c: &Certificate) -> Self {
        CertificateFile {
            format: CERTIFICATE_FORMAT.into(),
            kind: c.kind,
            cone: c.cone,
            n: c.n,
            smp_word: c.smp.word.clone(),
            smp_value: c.smp.value,
            scale: c.scale,
            lower: c.lower,
            upper: c.upper,
            upper_source: c.upper_source,
            seeds: c.seeds.iter().map(|s| svec(s).iter().copied().collect()).collect(),
            vertices: c.conitope.as_ref().map(|u| {
                u.vertices()
                    .iter()
                    .map(|v| VertexFile {
                        svec: svec(&v.point).iter().copied().collect(),
                        word: v.word.clone(),
                        scale_log: v.scale_log,
                        seed: v.seed,
                    })
                    .collect()
            }),
            tolerances: c.tolerances,
            split: c.split.as_ref().map(|s| {
                Box::new(SplitFile {
                    basis_s: ComplexMatrixFile::from_matrix(&s.basis_s),
                    basis_perp: ComplexMatrixFile::from_matrix(&s.basis_perp),
                    restricted: CertificateFile::from_certificate(&s.restricted),
                    compressed: CertificateFile::from_certificate(&s.compressed),
                })
            }),
        }
    }

    /// Rebuilds the in-memory certificate. Only shapes are checked here;
    /// numerical soundness is the verifier's job.
    pub fn to_certificate(&self) -> Result<Certificate> {
        if self.format != CERTIFICATE_FORMAT {
            return Err(field_err("format", format!("expected {CERTIFICATE_FORMAT:?}, found {:?}", self.format)));
        }
        if self.n == 0 {
            return Err(field_err("n", "must be positive"));
        }
        let point = |v: &[f64], path: &str| {
            smat(&nalgebra::DVector::from_row_slice(v), self.cone, self.n).map_err(|e| field_err(path, e))
        };
        let seeds = self
            .seeds
            .iter()
            .enumerate()
            .map(|(i, s)| point(s, &format!("seeds[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let conitope = match &self.vertices {
            None => None,
            Some(vs) => {
                let vertices = vs
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        Ok(Vertex {
                            point: point(&v.svec, &format!("vertices[{i}].svec"))?,
                            word: v.word.clone(),
                            scale_log: v.scale_log,
                            seed: v.seed,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(Conitope::new_unchecked(vertices)?)
            }
        };
        let split = match &self.split {
            None => None,
            Some(s) => Some(Box::new(SplitCertificate {
                basis_s: s.basis_s.to_matrix("split.basis_s")?,
                basis_perp: s.basis_perp.to_matrix("split.basis_perp")?,
                restricted: s.restricted.to_certificate()?,
                compressed: s.compressed.to_certificate()?,
            })),
        };
        Ok(Certificate {
            kind: self.kind,
            cone: self.cone,
            n: self.n,
            smp: SmpCandidate { word: self.smp_word.clone(), value: self.smp_value },
            scale: self.scale,
            seeds,
            conitope,
            upper_source: self.upper_source,
            lower: self.lower,
            upper: self.upper,
            tolerances: self.tolerances,
            split,
        })
    }
}

pub fn read_certificate(path: impl AsRef<Path>) -> Result<CertificateFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| JsrError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| JsrError::Input(format!("{}: malformed certificate: {e}", path.display())))
}

/// Certificate either embedded in the report or written next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CertificateRef {
    Path(String),
    Embedded(Box<CertificateFile>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub algorithm: String,
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
    pub smp_word: ProductWord,
    pub smp_value: f64,
    /// Main-loop steps of the final run.
    pub steps: usize,
    pub restarts: usize,
    /// Essential vertices of the final conitope.
    pub vertices: usize,
    pub iterations: Vec<IterationRecord>,
    pub certificate: CertificateRef,
    pub tolerances: Tolerances,
    pub runtime_ms: f64,
}

/// Oracle output of `jsr bounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    pub lower_word: ProductWord,
    pub depth: usize,
    pub requested_depth: usize,
    pub complete: bool,
}

/// Output of `jsr lift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftFile {
    pub cone: ConeKind,
    pub n: usize,
    pub d: usize,
    /// Row-major `d x d` matrices acting on `svec` coordinates.
    pub operators: Vec<Vec<Vec<f64>>>,
}

impl LiftFile {
    pub fn from_operators(ops: &[LiftedOperator]) -> Result<Self> {
        let first = ops.first().ok_or_else(|| JsrError::input("no operators"))?;
        let d = first.d();
        Ok(LiftFile {
            cone: first.kind(),
            n: first.n(),
            d,
            operators: ops
                .iter()
                .map(|op| (0..d).map(|r| (0..d).map(|c| op.rep()[(r, c)]).collect()).collect())
                .collect(),
        })
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = to_json_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
