//! JSON documents and `builtin:` names.
//!
//! Matrices are `{"rows", "cols", "data"}` with `data` a list of rows, each a
//! list of `[re, im]` pairs. Documents are walked by hand so every validation
//! error carries the JSON pointer of the offending value.

use std::fs;

use chronomap_core::chronomap::state_to_channel;
use chronomap_core::states::{max_entangled, paulis, singlet, werner};
use chronomap_core::{BipartiteState, CMatrix, Complex64, DensityMatrix, Error, KrausChannel, Observable};
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "chronomap/1";
const BUILTIN: &str = "builtin:";

#[derive(Debug)]
pub enum CliError {
    /// Malformed or invalid input; `pointer` locates it inside a document.
    Input { source: String, pointer: Option<String>, message: String },
    /// Error raised by the library while computing.
    Core(Error),
}

impl CliError {
    pub fn input(source: &str, pointer: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Input { source: source.to_string(), pointer: Some(pointer.into()), message: message.into() }
    }

    fn located(source: &str, pointer: impl Into<String>, e: Error) -> Self {
        if e.is_numerical_domain() {
            CliError::Core(e)
        } else {
            CliError::input(source, pointer, e.to_string())
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input { .. } => 2,
            CliError::Core(e) if e.is_numerical_domain() => 3,
            CliError::Core(_) => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        let body = match self {
            CliError::Input { source, pointer, message } => json!({
                "kind": "invalid-input",
                "source": source,
                "pointer": pointer,
                "message": message,
            }),
            CliError::Core(e) => json!({
                "kind": if e.is_numerical_domain() { "numerical-domain" } else { "invalid-input" },
                "message": e.to_string(),
            }),
        };
        json!({ "schema": SCHEMA, "error": body })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn read_document(source: &str) -> CliResult<Value> {
    let text = fs::read_to_string(source)
        .map_err(|e| CliError::Input { source: source.into(), pointer: None, message: e.to_string() })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input { source: source.into(), pointer: None, message: format!("invalid JSON: {e}") })
}

fn field<'a>(src: &str, obj: &'a Value, ptr: &str, key: &str) -> CliResult<&'a Value> {
    let map = obj.as_object().ok_or_else(|| CliError::input(src, ptr, "expected an object"))?;
    map.get(key).ok_or_else(|| CliError::input(src, format!("{ptr}/{key}"), "missing field"))
}

fn as_index(src: &str, v: &Value, ptr: &str) -> CliResult<usize> {
    v.as_u64()
        .filter(|&n| n > 0)
        .map(|n| n as usize)
        .ok_or_else(|| CliError::input(src, ptr, "expected a positive integer"))
}

fn as_real(src: &str, v: &Value, ptr: &str) -> CliResult<f64> {
    v.as_f64().ok_or_else(|| CliError::input(src, ptr, "expected a number"))
}

fn as_array<'a>(src: &str, v: &'a Value, ptr: &str) -> CliResult<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| CliError::input(src, ptr, "expected an array"))
}

pub fn parse_matrix(src: &str, v: &Value, ptr: &str) -> CliResult<CMatrix> {
    let rows = as_index(src, field(src, v, ptr, "rows")?, &format!("{ptr}/rows"))?;
    let cols = as_index(src, field(src, v, ptr, "cols")?, &format!("{ptr}/cols"))?;
    let data_ptr = format!("{ptr}/data");
    let data = as_array(src, field(src, v, ptr, "data")?, &data_ptr)?;
    if data.len() != rows {
        return Err(CliError::input(src, &data_ptr, format!("expected {rows} rows, got {}", data.len())));
    }
    let mut out = Vec::with_capacity(rows * cols);
    for (r, row) in data.iter().enumerate() {
        let row_ptr = format!("{data_ptr}/{r}");
        let row = as_array(src, row, &row_ptr)?;
        if row.len() != cols {
            return Err(CliError::input(src, &row_ptr, format!("expected {cols} entries, got {}", row.len())));
        }
        for (c, z) in row.iter().enumerate() {
            let z_ptr = format!("{row_ptr}/{c}");
            match z.as_array().map(Vec::as_slice) {
                Some([re, im]) => out.push(Complex64::new(
                    as_real(src, re, &format!("{z_ptr}/0"))?,
                    as_real(src, im, &format!("{z_ptr}/1"))?,
                )),
                _ => return Err(CliError::input(src, &z_ptr, "expected a [re, im] pair")),
            }
        }
    }
    CMatrix::new(rows, cols, out).map_err(|e| CliError::located(src, ptr, e))
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    let data: Vec<Value> = (0..m.rows())
        .map(|r| Value::Array((0..m.cols()).map(|c| json!([m[(r, c)].re, m[(r, c)].im])).collect()))
        .collect();
    json!({ "rows": m.rows(), "cols": m.cols(), "data": data })
}

fn builtin_args(name: &str) -> (&str, Option<&str>) {
    match name.split_once(':') {
        Some((head, rest)) => (head, Some(rest)),
        None => (name, None),
    }
}

fn builtin_number<T: std::str::FromStr>(src: &str, arg: Option<&str>) -> CliResult<T> {
    arg.and_then(|a| a.parse().ok())
        .ok_or_else(|| CliError::Input { source: src.into(), pointer: None, message: "builtin needs a numeric argument".into() })
}

fn unknown_builtin(src: &str, kinds: &str) -> CliError {
    CliError::Input { source: src.into(), pointer: None, message: format!("unknown builtin; expected one of {kinds}") }
}

fn builtin_state(src: &str, name: &str) -> CliResult<BipartiteState> {
    let (head, arg) = builtin_args(name);
    Ok(match head {
        "singlet" => singlet().to_bipartite(),
        "phi+" => max_entangled(2, None)?.to_bipartite(),
        "werner" => werner(builtin_number(src, arg)?).map_err(|e| CliError::Input {
            source: src.into(),
            pointer: None,
            message: e.to_string(),
        })?,
        "max-entangled" => max_entangled(builtin_number(src, arg)?, None)?.to_bipartite(),
        _ => return Err(unknown_builtin(src, "singlet, phi+, werner:w, max-entangled:d")),
    })
}

/// Bipartite state from a file `{"dims", "matrix"}` or a builtin name.
pub fn load_state(src: &str) -> CliResult<BipartiteState> {
    if let Some(name) = src.strip_prefix(BUILTIN) {
        return builtin_state(src, name);
    }
    state_from_json(src, &read_document(src)?)
}

pub fn state_from_json(src: &str, doc: &Value) -> CliResult<BipartiteState> {
    let dims_v = field(src, doc, "", "dims")?;
    let dims = match dims_v.as_array().map(Vec::as_slice) {
        Some([a, b]) => (as_index(src, a, "/dims/0")?, as_index(src, b, "/dims/1")?),
        _ => return Err(CliError::input(src, "/dims", "expected [d_A, d_B]")),
    };
    let m = parse_matrix(src, field(src, doc, "", "matrix")?, "/matrix")?;
    if m.shape() != (dims.0 * dims.1, dims.0 * dims.1) {
        return Err(CliError::input(
            src,
            "/dims",
            format!("dims {dims:?} do not match a {}x{} matrix", m.rows(), m.cols()),
        ));
    }
    let rho = DensityMatrix::new(m).map_err(|e| CliError::located(src, "/matrix", e))?;
    BipartiteState::new(rho, dims).map_err(|e| CliError::located(src, "/dims", e))
}

pub fn state_to_json(s: &BipartiteState) -> Value {
    json!({ "schema": SCHEMA, "dims": [s.dims().0, s.dims().1], "matrix": matrix_to_json(s.matrix()) })
}

/// Channel from a file `{"d_in", "d_out", "kraus": [{"p", "M"}]}` or a builtin:
/// `identity:d`, or any state builtin mapped to its evolution.
pub fn load_channel(src: &str) -> CliResult<KrausChannel> {
    if let Some(name) = src.strip_prefix(BUILTIN) {
        let (head, arg) = builtin_args(name);
        if head == "identity" {
            return Ok(KrausChannel::identity(builtin_number(src, arg)?));
        }
        return Ok(state_to_channel(&builtin_state(src, name)?));
    }
    channel_from_json(src, &read_document(src)?)
}

pub fn channel_from_json(src: &str, doc: &Value) -> CliResult<KrausChannel> {
    let d_in = as_index(src, field(src, doc, "", "d_in")?, "/d_in")?;
    let d_out = as_index(src, field(src, doc, "", "d_out")?, "/d_out")?;
    let kraus = as_array(src, field(src, doc, "", "kraus")?, "/kraus")?;
    if kraus.is_empty() {
        return Err(CliError::input(src, "/kraus", "at least one Kraus element is required"));
    }
    let mut elements = Vec::with_capacity(kraus.len());
    for (k, el) in kraus.iter().enumerate() {
        let ptr = format!("/kraus/{k}");
        let p = as_real(src, field(src, el, &ptr, "p")?, &format!("{ptr}/p"))?;
        if p < 0.0 {
            return Err(CliError::input(src, format!("{ptr}/p"), "weights must be nonnegative"));
        }
        let m = parse_matrix(src, field(src, el, &ptr, "M")?, &format!("{ptr}/M"))?;
        if m.shape() != (d_out, d_in) {
            return Err(CliError::input(
                src,
                format!("{ptr}/M"),
                format!("expected a {d_out}x{d_in} matrix, got {}x{}", m.rows(), m.cols()),
            ));
        }
        elements.push((p, m));
    }
    KrausChannel::new(elements).map_err(|e| CliError::located(src, "/kraus", e))
}

pub fn channel_to_json(ch: &KrausChannel) -> Value {
    let kraus: Vec<Value> = ch.elements().iter().map(|(p, m)| json!({ "p": p, "M": matrix_to_json(m) })).collect();
    json!({ "schema": SCHEMA, "d_in": ch.d_in(), "d_out": ch.d_out(), "kraus": kraus })
}

/// Observable from `{"matrix"}` or `builtin:sigma-x|sigma-y|sigma-z|identity:d`.
pub fn load_observable(src: &str) -> CliResult<Observable> {
    if let Some(name) = src.strip_prefix(BUILTIN) {
        let (head, arg) = builtin_args(name);
        return Ok(match head {
            "sigma-x" => paulis::x(),
            "sigma-y" => paulis::y(),
            "sigma-z" => paulis::z(),
            "identity" => Observable::identity(builtin_number(src, arg)?),
            _ => return Err(unknown_builtin(src, "sigma-x, sigma-y, sigma-z, identity:d")),
        });
    }
    let doc = read_document(src)?;
    let m = parse_matrix(src, field(src, &doc, "", "matrix")?, "/matrix")?;
    Observable::new(m).map_err(|e| CliError::located(src, "/matrix", e))
}

/// Arbitrary matrix from `{"matrix"}` or `builtin:identity:d`.
pub fn load_matrix(src: &str) -> CliResult<CMatrix> {
    if let Some(name) = src.strip_prefix(BUILTIN) {
        return match builtin_args(name) {
            ("identity", arg) => Ok(CMatrix::identity(builtin_number(src, arg)?)),
            _ => Err(unknown_builtin(src, "identity:d")),
        };
    }
    let doc = read_document(src)?;
    parse_matrix(src, field(src, &doc, "", "matrix")?, "/matrix")
}

/// Single-system density matrix from `{"matrix"}` or
/// `builtin:mixed:d` (`I/d`) / `builtin:basis:d:k` (`|k⟩⟨k|`).
pub fn load_density(src: &str) -> CliResult<DensityMatrix> {
    if let Some(name) = src.strip_prefix(BUILTIN) {
        let (head, arg) = builtin_args(name);
        return match head {
            "mixed" => Ok(DensityMatrix::maximally_mixed(builtin_number(src, arg)?)),
            "basis" => {
                let (d, k) = arg.and_then(|a| a.split_once(':')).ok_or_else(|| unknown_builtin(src, "basis:d:k"))?;
                let d: usize = builtin_number(src, Some(d))?;
                let k: usize = builtin_number(src, Some(k))?;
                if k >= d {
                    return Err(unknown_builtin(src, "basis:d:k with k < d"));
                }
                Ok(DensityMatrix::basis(d, k))
            }
            _ => Err(unknown_builtin(src, "mixed:d, basis:d:k")),
        };
    }
    let doc = read_document(src)?;
    let m = parse_matrix(src, field(src, &doc, "", "matrix")?, "/matrix")?;
    DensityMatrix::new(m).map_err(|e| CliError::located(src, "/matrix", e))
}

/// Adds the schema tag to a report object.
pub fn tagged(mut v: Value) -> Value {
    if let Value::Object(map) = &mut v {
        let mut out = Map::new();
        out.insert("schema".into(), Value::String(SCHEMA.into()));
        out.extend(std::mem::take(map));
        return Value::Object(out);
    }
    json!({ "schema": SCHEMA, "result": v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let m = CMatrix::new(
            2,
            2,
            vec![
                Complex64::new(0.1, -1e-300),
                Complex64::new(std::f64::consts::PI, 2.0f64.sqrt()),
                Complex64::new(-0.0, 1.0 / 3.0),
                Complex64::new(6.02e23, -7.0),
            ],
        )
        .unwrap();
        let text = serde_json::to_string(&matrix_to_json(&m)).unwrap();
        let back = parse_matrix("t", &serde_json::from_str(&text).unwrap(), "").unwrap();
        for (a, b) in m.data().iter().zip(back.data()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn errors_carry_pointers() {
        let doc = json!({ "rows": 1, "cols": 2, "data": [[[1.0, 0.0], [1.0]]] });
        match parse_matrix("t", &doc, "/matrix") {
            Err(CliError::Input { pointer, .. }) => assert_eq!(pointer.as_deref(), Some("/matrix/data/0/1")),
            other => panic!("{other:?}"),
        }
        let doc = json!({ "d_in": 2, "d_out": 2, "kraus": [{ "p": -0.5, "M": matrix_to_json(&CMatrix::identity(2)) }] });
        match channel_from_json("t", &doc) {
            Err(CliError::Input { pointer, .. }) => assert_eq!(pointer.as_deref(), Some("/kraus/0/p")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn documents_round_trip() {
        let s = builtin_state("t", "werner:0.3").unwrap();
        let back = state_from_json("t", &state_to_json(&s)).unwrap();
        assert_eq!(back.matrix(), s.matrix());
        let ch = load_channel("builtin:singlet").unwrap();
        let back = channel_from_json("t", &channel_to_json(&ch)).unwrap();
        assert_eq!(back.elements(), ch.elements());
    }
}
