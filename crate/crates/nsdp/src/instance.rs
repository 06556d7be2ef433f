//! JSON instance documents.
//!
//! ```json
//! { "name": "...", "n": 1, "p": 0, "m": 1,
//!   "objective": { "c0": 0, "g": [1], "Hf": [0] },
//!   "equalities": [ { "c": 0, "a": [..], "Q": [..] } ],
//!   "cone": { "A0": [..], "A": [[..]], "B": [ { "i": 1, "j": 1, "mat": [..] } ] } }
//! ```
//!
//! Symmetric matrices are packed lower-triangular row-major; a square nested
//! array is also accepted on input. `B` indices are 1-based.

use nsdp_core::{ConeMap, ConeQuadTerm, ProblemInstance, Quadratic, SymMatrix};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::FormatError;

fn schema<T>(path: &str, msg: impl std::fmt::Display) -> Result<T, FormatError> {
    Err(FormatError::Schema {
        path: path.to_string(),
        message: msg.to_string(),
    })
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, FormatError> {
    match obj.get(key) {
        Some(v) => Ok(v),
        None => schema(&join(path, key), "missing key"),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, FormatError> {
    v.as_object().map_or_else(|| schema(path, "expected an object"), Ok)
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, FormatError> {
    v.as_array().map_or_else(|| schema(path, "expected an array"), Ok)
}

fn number(v: &Value, path: &str) -> Result<f64, FormatError> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => schema(path, "expected a finite number"),
    }
}

fn count(v: &Value, path: &str) -> Result<usize, FormatError> {
    match v.as_u64() {
        Some(k) => usize::try_from(k).map_or_else(|_| schema(path, "integer out of range"), Ok),
        None => schema(path, "expected a nonnegative integer"),
    }
}

fn vector(v: &Value, path: &str, len: usize, sym: &str) -> Result<Vec<f64>, FormatError> {
    let items = array(v, path)?;
    if items.len() != len {
        return schema(path, format!("expected {sym} = {len} entries, got {}", items.len()));
    }
    items
        .iter()
        .enumerate()
        .map(|(k, x)| number(x, &format!("{path}[{k}]")))
        .collect()
}

/// Packed or square nested symmetric matrix of the given order.
fn sym_matrix(v: &Value, path: &str, order: usize, sym: &str) -> Result<SymMatrix, FormatError> {
    let items = array(v, path)?;
    if !items.is_empty() && items.iter().all(Value::is_array) {
        if items.len() != order {
            return schema(path, format!("expected {sym} = {order} rows, got {}", items.len()));
        }
        let rows = items
            .iter()
            .enumerate()
            .map(|(r, row)| vector(row, &format!("{path}[{r}]"), order, sym))
            .collect::<Result<Vec<_>, _>>()?;
        for i in 0..order {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return schema(path, format!("matrix is not symmetric at ({}, {})", i + 1, j + 1));
                }
            }
        }
        return Ok(SymMatrix::from_lower_fn(order, |i, j| rows[i][j]));
    }
    let len = order * (order + 1) / 2;
    if items.len() != len {
        return schema(
            path,
            format!("expected {sym}({sym}+1)/2 = {len} entries, got {}", items.len()),
        );
    }
    let packed = vector(v, path, len, &format!("{sym}({sym}+1)/2"))?;
    SymMatrix::from_packed(order, packed).map_or_else(|e| schema(path, e), Ok)
}

fn quadratic(v: &Value, path: &str, keys: [&str; 3], n: usize) -> Result<Quadratic, FormatError> {
    let obj = object(v, path)?;
    let [kc, kl, kh] = keys;
    Ok(Quadratic {
        constant: number(field(obj, kc, path)?, &join(path, kc))?,
        linear: vector(field(obj, kl, path)?, &join(path, kl), n, "n")?,
        hessian: sym_matrix(field(obj, kh, path)?, &join(path, kh), n, "n")?,
    })
}

/// Parses an instance document. Errors name the offending key path.
pub fn parse_instance(text: &str) -> Result<ProblemInstance, FormatError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| FormatError::Syntax(e.to_string()))?;
    let top = object(&doc, "$")?;
    let name = match field(top, "name", "")? {
        Value::String(s) => s.clone(),
        _ => return schema("name", "expected a string"),
    };
    let n = count(field(top, "n", "")?, "n")?;
    let p = count(field(top, "p", "")?, "p")?;
    let m = count(field(top, "m", "")?, "m")?;
    let objective = quadratic(field(top, "objective", "")?, "objective", ["c0", "g", "Hf"], n)?;

    let eqs = array(field(top, "equalities", "")?, "equalities")?;
    if eqs.len() != p {
        return schema("equalities", format!("expected p = {p} records, got {}", eqs.len()));
    }
    let equalities = eqs
        .iter()
        .enumerate()
        .map(|(k, e)| quadratic(e, &format!("equalities[{k}]"), ["c", "a", "Q"], n))
        .collect::<Result<Vec<_>, _>>()?;

    let cone = object(field(top, "cone", "")?, "cone")?;
    let constant = sym_matrix(field(cone, "A0", "cone")?, "cone.A0", m, "m")?;
    let lin = array(field(cone, "A", "cone")?, "cone.A")?;
    if lin.len() != n {
        return schema("cone.A", format!("expected n = {n} matrices, got {}", lin.len()));
    }
    let linear = lin
        .iter()
        .enumerate()
        .map(|(k, a)| sym_matrix(a, &format!("cone.A[{k}]"), m, "m"))
        .collect::<Result<Vec<_>, _>>()?;
    let terms = match cone.get("B") {
        None => Vec::new(),
        Some(b) => array(b, "cone.B")?.clone(),
    };
    let mut quadratic_terms = Vec::with_capacity(terms.len());
    for (k, t) in terms.iter().enumerate() {
        let path = format!("cone.B[{k}]");
        let obj = object(t, &path)?;
        let i = count(field(obj, "i", &path)?, &join(&path, "i"))?;
        let j = count(field(obj, "j", &path)?, &join(&path, "j"))?;
        if i == 0 || j == 0 || i > n || j > n {
            return schema(&path, format!("indices ({i}, {j}) must lie in 1..={n}"));
        }
        if i > j {
            return schema(&path, format!("indices ({i}, {j}) must satisfy i <= j"));
        }
        quadratic_terms.push(ConeQuadTerm {
            i: i - 1,
            j: j - 1,
            mat: sym_matrix(field(obj, "mat", &path)?, &join(&path, "mat"), m, "m")?,
        });
    }

    let inst = ProblemInstance {
        name,
        n,
        p,
        m,
        objective,
        equalities,
        cone: ConeMap {
            constant,
            linear,
            quadratic: quadratic_terms,
        },
    };
    inst.validate()?;
    Ok(inst)
}

#[derive(Serialize)]
struct ObjectiveDoc<'a> {
    c0: f64,
    g: &'a [f64],
    #[serde(rename = "Hf")]
    hf: &'a [f64],
}

#[derive(Serialize)]
struct EqualityDoc<'a> {
    c: f64,
    a: &'a [f64],
    #[serde(rename = "Q")]
    q: &'a [f64],
}

#[derive(Serialize)]
struct TermDoc<'a> {
    i: usize,
    j: usize,
    mat: &'a [f64],
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ConeDoc<'a> {
    A0: &'a [f64],
    A: Vec<&'a [f64]>,
    B: Vec<TermDoc<'a>>,
}

#[derive(Serialize)]
struct InstanceDoc<'a> {
    name: &'a str,
    n: usize,
    p: usize,
    m: usize,
    objective: ObjectiveDoc<'a>,
    equalities: Vec<EqualityDoc<'a>>,
    cone: ConeDoc<'a>,
}

/// Canonical document: fixed key order, packed matrices, shortest
/// round-tripping decimal for every number, trailing newline.
pub fn serialize_instance(inst: &ProblemInstance) -> String {
    let doc = InstanceDoc {
        name: &inst.name,
        n: inst.n,
        p: inst.p,
        m: inst.m,
        objective: ObjectiveDoc {
            c0: inst.objective.constant,
            g: &inst.objective.linear,
            hf: inst.objective.hessian.packed(),
        },
        equalities: inst
            .equalities
            .iter()
            .map(|q| EqualityDoc {
                c: q.constant,
                a: &q.linear,
                q: q.hessian.packed(),
            })
            .collect(),
        cone: ConeDoc {
            A0: inst.cone.constant.packed(),
            A: inst.cone.linear.iter().map(SymMatrix::packed).collect(),
            B: inst
                .cone
                .quadratic
                .iter()
                .map(|t| TermDoc {
                    i: t.i + 1,
                    j: t.j + 1,
                    mat: t.mat.packed(),
                })
                .collect(),
        },
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("instance documents always serialize");
    s.push('\n');
    s
}
