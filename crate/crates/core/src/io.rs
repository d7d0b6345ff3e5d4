//! Reading and writing tensors and reports as canonical JSON.
//!
//! The tensor file format is
//!
//! ```json
//! {
//!   "field": {"kind": "Fp", "p": 5},
//!   "axes": {"I": ["1:i1"], "J": ["j1"], "K": ["k1"]},
//!   "entries": [["1:i1", "j1", "k1", "3"], ...]
//! }
//! ```
//!
//! with `{"kind": "Q"}` for the rationals.  Coordinates not listed are
//! zero; scalars are residue or reduced-fraction strings; entries are
//! sorted lexicographically by their label triple and duplicate triples
//! are rejected.  Writing always produces this canonical form, so equal
//! tensors serialize to identical bytes.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::label::{IndexSet, Label};
use crate::tensor::Tensor3;

pub fn field_to_value(field: FieldSpec) -> Value {
    match field {
        FieldSpec::Fp(p) => json!({"kind": "Fp", "p": p}),
        FieldSpec::Q => json!({"kind": "Q"}),
    }
}

pub fn field_from_value(v: &Value) -> Result<FieldSpec> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::ShapeMismatch("\"field\" must be an object".into()))?;
    match obj.get("kind").and_then(Value::as_str) {
        Some("Fp") => {
            let p = obj.get("p").and_then(Value::as_u64).ok_or_else(|| {
                Error::ShapeMismatch("field of kind \"Fp\" needs a numeric \"p\"".into())
            })?;
            FieldSpec::fp(p)
        }
        Some("Q") => Ok(FieldSpec::Q),
        _ => Err(Error::ShapeMismatch(
            "field \"kind\" must be \"Fp\" or \"Q\"".into(),
        )),
    }
}

fn axis_to_value(set: &IndexSet) -> Value {
    Value::Array(set.iter().map(|l| Value::String(l.to_string())).collect())
}

fn axis_from_value(v: &Value, name: &str) -> Result<IndexSet> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::ShapeMismatch(format!("axis \"{name}\" must be an array")))?;
    let mut labels = Vec::with_capacity(arr.len());
    for item in arr {
        let text = item.as_str().ok_or_else(|| {
            Error::ShapeMismatch(format!("axis \"{name}\" entries must be label strings"))
        })?;
        labels.push(Label::parse(text)?);
    }
    IndexSet::new(labels)
}

/// Canonical JSON value for a scalar tensor.
pub fn tensor_to_value(t: &Tensor3<Scalar>) -> Value {
    let mut entries: Vec<(String, String, String, String)> = t
        .nonzero_entries()
        .into_iter()
        .map(|(i, j, k, e)| {
            (
                t.axis(1).label(i).to_string(),
                t.axis(2).label(j).to_string(),
                t.axis(3).label(k).to_string(),
                e.to_canonical_string(),
            )
        })
        .collect();
    entries.sort();
    let entries: Vec<Value> = entries
        .into_iter()
        .map(|(i, j, k, s)| {
            Value::Array(vec![
                Value::String(i),
                Value::String(j),
                Value::String(k),
                Value::String(s),
            ])
        })
        .collect();
    let mut axes = Map::new();
    axes.insert("I".into(), axis_to_value(t.axis(1)));
    axes.insert("J".into(), axis_to_value(t.axis(2)));
    axes.insert("K".into(), axis_to_value(t.axis(3)));
    json!({
        "field": field_to_value(t.field()),
        "axes": Value::Object(axes),
        "entries": entries,
    })
}

pub fn tensor_from_value(v: &Value) -> Result<Tensor3<Scalar>> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::ShapeMismatch("tensor file must be a JSON object".into()))?;
    let field = field_from_value(
        obj.get("field")
            .ok_or_else(|| Error::ShapeMismatch("tensor file needs a \"field\" key".into()))?,
    )?;
    let axes_obj = obj
        .get("axes")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::ShapeMismatch("tensor file needs an \"axes\" object".into()))?;
    let get_axis = |name: &str| -> Result<IndexSet> {
        axis_from_value(
            axes_obj
                .get(name)
                .ok_or_else(|| Error::ShapeMismatch(format!("axes must contain \"{name}\"")))?,
            name,
        )
    };
    let axes = [get_axis("I")?, get_axis("J")?, get_axis("K")?];
    let mut t = Tensor3::zeros(axes, field.zero());
    let entries = obj
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::ShapeMismatch("tensor file needs an \"entries\" array".into()))?;
    let mut seen = std::collections::HashSet::new();
    for entry in entries {
        let quad = entry
            .as_array()
            .filter(|a| a.len() == 4)
            .ok_or_else(|| Error::ShapeMismatch("each entry must be [i, j, k, scalar]".into()))?;
        let mut labels = Vec::with_capacity(3);
        for part in &quad[..3] {
            let text = part.as_str().ok_or_else(|| {
                Error::ShapeMismatch("entry coordinates must be label strings".into())
            })?;
            labels.push(Label::parse(text)?);
        }
        let scalar_text = quad[3]
            .as_str()
            .ok_or_else(|| Error::ShapeMismatch("entry values must be scalar strings".into()))?;
        let value = field.parse_scalar(scalar_text)?;
        let pos: Vec<usize> = labels
            .iter()
            .enumerate()
            .map(|(axis, l)| {
                t.axis(axis + 1)
                    .position(l)
                    .ok_or_else(|| Error::UnknownLabel {
                        axis: axis + 1,
                        label: l.to_string(),
                    })
            })
            .collect::<Result<_>>()?;
        if !seen.insert((pos[0], pos[1], pos[2])) {
            return Err(Error::DuplicateEntry(
                labels[0].to_string(),
                labels[1].to_string(),
                labels[2].to_string(),
            ));
        }
        t.set(pos[0], pos[1], pos[2], value);
    }
    Ok(t)
}

/// Renders any JSON value with stable key order and a trailing newline.
pub fn to_canonical_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn tensor_to_string(t: &Tensor3<Scalar>) -> String {
    to_canonical_string(&tensor_to_value(t))
}

pub fn tensor_from_str(text: &str) -> Result<Tensor3<Scalar>> {
    let v: Value = serde_json::from_str(text)?;
    tensor_from_value(&v)
}

pub fn write_tensor<P: AsRef<Path>>(path: P, t: &Tensor3<Scalar>) -> Result<()> {
    std::fs::write(path, tensor_to_string(t))?;
    Ok(())
}

pub fn read_tensor<P: AsRef<Path>>(path: P) -> Result<Tensor3<Scalar>> {
    let text = std::fs::read_to_string(path)?;
    tensor_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Tensor3<Scalar> {
        let field = FieldSpec::fp(5).unwrap();
        let mut t = Tensor3::zeros(
            [
                IndexSet::from_atoms(&["i1", "i2"]).unwrap(),
                IndexSet::from_atoms(&["j1"]).unwrap(),
                IndexSet::from_atoms(&["k1", "k2"]).unwrap(),
            ],
            field.zero(),
        );
        t.set(0, 0, 1, field.from_i64(3));
        t.set(1, 0, 0, field.from_i64(4));
        t
    }

    #[test]
    fn round_trip_preserves_everything() {
        let t = sample();
        let text = tensor_to_string(&t);
        let back = tensor_from_str(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(tensor_to_string(&back), text);
    }

    #[test]
    fn entries_are_sorted_and_sparse() {
        let text = tensor_to_string(&sample());
        let v: Value = serde_json::from_str(&text).unwrap();
        let entries = v["entries"].as_array().unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0][0], "i1");
        assert_eq!(entries[1][0], "i2");
    }

    #[test]
    fn rational_scalars_round_trip() {
        let field = FieldSpec::Q;
        let mut t = Tensor3::zeros(
            [
                IndexSet::positional(1),
                IndexSet::positional(1),
                IndexSet::positional(1),
            ],
            field.zero(),
        );
        t.set(0, 0, 0, field.parse_scalar("-7/3").unwrap());
        let back = tensor_from_str(&tensor_to_string(&t)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn malformed_inputs_are_rejected_with_positions() {
        let err = tensor_from_str("{\"field\": {\"kind\":\"Fp\",\"p\":5}, ").unwrap_err();
        assert!(matches!(err, Error::Json(_)));
        assert!(err.to_string().contains("column"));
        let dup = r#"{
            "field": {"kind":"Fp","p":5},
            "axes": {"I":["a"],"J":["b"],"K":["c"]},
            "entries": [["a","b","c","1"],["a","b","c","2"]]
        }"#;
        assert!(matches!(
            tensor_from_str(dup).unwrap_err(),
            Error::DuplicateEntry(..)
        ));
        let unknown = r#"{
            "field": {"kind":"Fp","p":5},
            "axes": {"I":["a"],"J":["b"],"K":["c"]},
            "entries": [["zz","b","c","1"]]
        }"#;
        assert!(matches!(
            tensor_from_str(unknown).unwrap_err(),
            Error::UnknownLabel { .. }
        ));
    }
}
