//! JSON forms of systems, covariances, rational functions and families.
//! Complex numbers are written as `[re, im]`; plain numbers are accepted on
//! input as real values.

use std::path::Path;

use serde_json::{json, Value};

use crate::core_algebra::DoubledUp;
use crate::error::{QlsError, Result};
use crate::linalg::{c, zeros, CMatrix, C64};
use crate::realization::RationalMatrixFunction;
use crate::stationary::InputCovariance;
use crate::system::{AffineFamily, AffineTerm, Block, FamilyTarget, QLSystem, StateSpace};

fn perr(msg: impl Into<String>) -> QlsError {
    QlsError::Parse(msg.into())
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| perr(format!("{}: {}", path.display(), e)))?;
    serde_json::from_str(&text).map_err(|e| perr(format!("{}: {}", path.display(), e)))
}

pub fn complex_to_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn complex_from_json(v: &Value) -> Result<C64> {
    match v {
        Value::Number(x) => Ok(c(x.as_f64().ok_or_else(|| perr("bad number"))?, 0.0)),
        Value::Array(a) if a.len() == 2 => {
            let re = a[0].as_f64().ok_or_else(|| perr("complex entry must be [re, im]"))?;
            let im = a[1].as_f64().ok_or_else(|| perr("complex entry must be [re, im]"))?;
            Ok(c(re, im))
        }
        _ => Err(perr(format!("expected a number or [re, im], got {}", v))),
    }
}

pub fn complex_list_to_json(zs: &[C64]) -> Value {
    Value::Array(zs.iter().map(|&z| complex_to_json(z)).collect())
}

pub fn complex_list_from_json(v: &Value) -> Result<Vec<C64>> {
    v.as_array().ok_or_else(|| perr("expected an array"))?.iter().map(complex_from_json).collect()
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect())).collect())
}

/// Matrix from a list of rows. `shape` fixes the size of empty matrices and
/// is checked against non-empty ones.
pub fn matrix_from_json(v: &Value, shape: Option<(usize, usize)>) -> Result<CMatrix> {
    let rows = v.as_array().ok_or_else(|| perr("matrix must be a list of rows"))?;
    let parsed: Vec<Vec<C64>> = rows
        .iter()
        .map(complex_list_from_json)
        .collect::<Result<_>>()?;
    let nr = parsed.len();
    let nc = parsed.first().map(|r| r.len()).unwrap_or(0);
    if parsed.iter().any(|r| r.len() != nc) {
        return Err(perr("matrix rows have different lengths"));
    }
    if let Some((er, ec)) = shape {
        // an empty matrix may be written as [] or as er empty rows
        if nc == 0 && er * ec == 0 && (nr == 0 || nr == er) {
            return Ok(zeros(er, ec));
        }
        if (nr, nc) != (er, ec) {
            return Err(QlsError::Dimension(format!("expected a {}x{} matrix, got {}x{}", er, ec, nr, nc)));
        }
    }
    let mut m = zeros(nr, nc);
    for (i, r) in parsed.iter().enumerate() {
        for (j, &z) in r.iter().enumerate() {
            m[(i, j)] = z;
        }
    }
    Ok(m)
}

pub fn doubled_to_json(d: &DoubledUp) -> Value {
    json!({"minus": matrix_to_json(d.minus()), "plus": matrix_to_json(d.plus())})
}

pub fn doubled_from_json(v: &Value, shape: Option<(usize, usize)>) -> Result<DoubledUp> {
    let minus = matrix_from_json(field(v, "minus")?, shape)?;
    let plus = match v.get("plus") {
        Some(p) => matrix_from_json(p, Some(minus.shape()))?,
        None => zeros(minus.nrows(), minus.ncols()),
    };
    DoubledUp::new(minus, plus)
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| perr(format!("missing field \"{}\"", key)))
}

fn usize_field(v: &Value, key: &str) -> Result<usize> {
    field(v, key)?.as_u64().map(|x| x as usize).ok_or_else(|| perr(format!("\"{}\" must be a non-negative integer", key)))
}

pub fn system_to_json(sys: &QLSystem) -> Value {
    json!({
        "n": sys.n(),
        "m": sys.m(),
        "S": doubled_to_json(sys.s()),
        "C": doubled_to_json(sys.c()),
        "Omega": doubled_to_json(sys.omega()),
    })
}

/// System from `{"n", "m", "S", "C", "Omega"}`; `S` defaults to the
/// identity. A `"A"` field in place of `"Omega"` gives the drift instead.
pub fn system_from_json(v: &Value) -> Result<QLSystem> {
    let n = usize_field(v, "n")?;
    let m = usize_field(v, "m")?;
    let s = match v.get("S") {
        Some(s) => doubled_from_json(s, Some((m, m)))?,
        None => DoubledUp::identity(m),
    };
    let cc = doubled_from_json(field(v, "C")?, Some((m, n)))?;
    match (v.get("Omega"), v.get("A")) {
        (Some(o), _) => QLSystem::new(s, cc, doubled_from_json(o, Some((n, n)))?),
        (None, Some(a)) => QLSystem::from_drift(s, cc, &doubled_from_json(a, Some((n, n)))?, 1e-8),
        (None, None) => Err(perr("system needs \"Omega\" or \"A\"")),
    }
}

pub fn covariance_to_json(v: &InputCovariance) -> Value {
    json!({"N": matrix_to_json(v.n()), "M": matrix_to_json(v.m())})
}

/// `{"N", "M"}`, or `{"vacuum": m}`.
pub fn covariance_from_json(v: &Value) -> Result<InputCovariance> {
    if let Some(k) = v.get("vacuum") {
        let k = k.as_u64().ok_or_else(|| perr("\"vacuum\" must be a channel count"))?;
        return Ok(InputCovariance::vacuum(k as usize));
    }
    let n = matrix_from_json(field(v, "N")?, None)?;
    let m = match v.get("M") {
        Some(mm) => matrix_from_json(mm, Some(n.shape()))?,
        None => zeros(n.nrows(), n.ncols()),
    };
    InputCovariance::new(n, m)
}

pub fn rmf_to_json(f: &RationalMatrixFunction) -> Value {
    json!({
        "constant": matrix_to_json(&f.constant),
        "poles": complex_list_to_json(&f.poles),
        "residues": Value::Array(f.residues.iter().map(matrix_to_json).collect()),
    })
}

/// Partial fractions `{"constant", "poles", "residues"}`, or a scalar
/// `{"numerator", "denominator"}` with coefficients highest degree first.
pub fn rmf_from_json(v: &Value) -> Result<RationalMatrixFunction> {
    if let (Some(num), Some(den)) = (v.get("numerator"), v.get("denominator")) {
        return RationalMatrixFunction::from_polynomials(&complex_list_from_json(num)?, &complex_list_from_json(den)?);
    }
    let k = field(v, "constant")?;
    let constant = if k.is_number() || is_complex_pair(k) { CMatrix::from_element(1, 1, complex_from_json(k)?) } else { matrix_from_json(k, None)? };
    let poles = complex_list_from_json(field(v, "poles")?)?;
    let rs = field(v, "residues")?.as_array().ok_or_else(|| perr("\"residues\" must be an array"))?;
    let residues = rs
        .iter()
        .map(|r| if r.is_array() && !is_complex_pair(r) { matrix_from_json(r, Some(constant.shape())) } else { Ok(CMatrix::from_element(1, 1, complex_from_json(r)?)) })
        .collect::<Result<Vec<_>>>()?;
    RationalMatrixFunction::new(constant, poles, residues)
}

fn is_complex_pair(v: &Value) -> bool {
    matches!(v, Value::Array(a) if a.len() == 2 && a.iter().all(|x| x.is_number()))
}

pub fn state_space_to_json(ss: &StateSpace) -> Value {
    json!({"A": matrix_to_json(&ss.a), "B": matrix_to_json(&ss.b), "C": matrix_to_json(&ss.c), "D": matrix_to_json(&ss.d)})
}

pub fn state_space_from_json(v: &Value) -> Result<StateSpace> {
    let d = matrix_from_json(field(v, "D")?, None)?;
    let a = matrix_from_json(field(v, "A")?, None)?;
    let n = a.nrows();
    let b = matrix_from_json(field(v, "B")?, Some((n, d.ncols())))?;
    let cm = matrix_from_json(field(v, "C")?, Some((d.nrows(), n)))?;
    StateSpace::new(a, b, cm, d)
}

pub fn family_to_json(f: &AffineFamily) -> Value {
    let terms: Vec<Value> = f
        .terms
        .iter()
        .map(|t| {
            json!({
                "target": match t.target { FamilyTarget::C => "C", FamilyTarget::Omega => "Omega" },
                "block": match t.block { Block::Minus => "minus", Block::Plus => "plus" },
                "row": t.row,
                "col": t.col,
                "coeff": complex_to_json(t.coeff),
            })
        })
        .collect();
    json!({"base": system_to_json(&f.base), "terms": terms})
}

/// `{"base": system, "terms": [{"target": "C"|"Omega", "block":
/// "minus"|"plus", "row", "col", "coeff"}]}`: the family is
/// `base + theta * sum(terms)`.
pub fn family_from_json(v: &Value) -> Result<AffineFamily> {
    let base = system_from_json(field(v, "base")?)?;
    let ts = field(v, "terms")?.as_array().ok_or_else(|| perr("\"terms\" must be an array"))?;
    let mut terms = Vec::with_capacity(ts.len());
    for t in ts {
        let target = match field(t, "target")?.as_str() {
            Some("C") => FamilyTarget::C,
            Some("Omega") => FamilyTarget::Omega,
            _ => return Err(perr("term target must be \"C\" or \"Omega\"")),
        };
        let block = match t.get("block").and_then(|b| b.as_str()).unwrap_or("minus") {
            "minus" => Block::Minus,
            "plus" => Block::Plus,
            _ => return Err(perr("term block must be \"minus\" or \"plus\"")),
        };
        let coeff = match t.get("coeff") {
            Some(x) => complex_from_json(x)?,
            None => c(1.0, 0.0),
        };
        terms.push(AffineTerm { target, block, row: usize_field(t, "row")?, col: usize_field(t, "col")?, coeff });
    }
    AffineFamily::new(base, terms)
}
