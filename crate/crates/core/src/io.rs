//! Text formats for tensors, vectors and instance metadata.
//!
//! A tensor file is a JSON object
//! `{"order": m, "dim": n, "entries": [[i1, ..., im, value], ...]}` with
//! 1-based indices; unlisted entries are zero and repeated indices are
//! rejected. A vector file is a JSON array of reals; plain whitespace- or
//! comma-separated numbers are accepted on input as well.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::problems::{InstanceMeta, ProblemInstance};
use crate::tensor::DenseTensor;

#[derive(Debug, Serialize, Deserialize)]
struct TensorDoc {
    order: usize,
    dim: usize,
    entries: Vec<Vec<Value>>,
}

pub fn tensor_to_string(t: &DenseTensor) -> String {
    let entries: Vec<Value> = t
        .indexed()
        .filter(|(_, v)| *v != 0.0)
        .map(|(idx, v)| {
            let mut rec: Vec<Value> = idx.iter().map(|&i| json!(i + 1)).collect();
            rec.push(json!(v));
            Value::Array(rec)
        })
        .collect();
    let doc = json!({ "order": t.order(), "dim": t.dim(), "entries": entries });
    serde_json::to_string(&doc).expect("tensor serializes")
}

pub fn tensor_from_str(text: &str) -> Result<DenseTensor> {
    let doc: TensorDoc = serde_json::from_str(text)?;
    let mut t = DenseTensor::zeros(doc.order, doc.dim)?;
    let mut seen = HashSet::new();
    for (r, rec) in doc.entries.iter().enumerate() {
        if rec.len() != doc.order + 1 {
            return Err(Error::Parse(format!(
                "entry {r}: expected {} fields, found {}",
                doc.order + 1,
                rec.len()
            )));
        }
        let mut idx = Vec::with_capacity(doc.order);
        for v in &rec[..doc.order] {
            let i = v
                .as_u64()
                .filter(|&i| i >= 1 && i as usize <= doc.dim)
                .ok_or_else(|| Error::Parse(format!("entry {r}: bad index {v}")))?;
            idx.push(i as usize - 1);
        }
        let value = rec[doc.order]
            .as_f64()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse(format!("entry {r}: bad value")))?;
        if !seen.insert(idx.clone()) {
            let one_based: Vec<usize> = idx.iter().map(|i| i + 1).collect();
            return Err(Error::Parse(format!("duplicate index {one_based:?}")));
        }
        t.set(&idx, value);
    }
    Ok(t)
}

pub fn vector_to_string(v: &[f64]) -> String {
    serde_json::to_string(v).expect("vector serializes")
}

pub fn vector_from_str(text: &str) -> Result<Vec<f64>> {
    let trimmed = text.trim();
    let values: Vec<f64> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed)?
    } else {
        trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("not a number: '{s}'")))
            })
            .collect::<Result<_>>()?
    };
    if let Some(p) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(p));
    }
    Ok(values)
}

pub fn read_tensor(path: &Path) -> Result<DenseTensor> {
    tensor_from_str(&fs::read_to_string(path)?)
}

pub fn write_tensor(path: &Path, t: &DenseTensor) -> Result<()> {
    Ok(fs::write(path, tensor_to_string(t))?)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    vector_from_str(&fs::read_to_string(path)?)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    Ok(fs::write(path, vector_to_string(v))?)
}

/// File names used by [`write_instance`] inside the output directory.
pub const TENSOR_FILE: &str = "tensor.json";
pub const RHS_FILE: &str = "rhs.json";
pub const META_FILE: &str = "meta.json";

/// Writes `tensor.json`, `rhs.json` and `meta.json` into `dir`.
pub fn write_instance(dir: &Path, inst: &ProblemInstance) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_tensor(&dir.join(TENSOR_FILE), &inst.tensor)?;
    write_vector(&dir.join(RHS_FILE), &inst.rhs)?;
    fs::write(
        dir.join(META_FILE),
        serde_json::to_string_pretty(&inst.meta)?,
    )?;
    Ok(())
}

pub fn read_instance(dir: &Path) -> Result<ProblemInstance> {
    let tensor = read_tensor(&dir.join(TENSOR_FILE))?;
    let rhs = read_vector(&dir.join(RHS_FILE))?;
    let meta: InstanceMeta = serde_json::from_str(&fs::read_to_string(dir.join(META_FILE))?)?;
    Ok(ProblemInstance { tensor, rhs, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{fixture, gen_problem1, FixtureId};
    use proptest::prelude::*;

    #[test]
    fn parses_documented_layout() {
        let text = r#"{"order": 3, "dim": 2,
            "entries": [[1,1,1,1.0],[1,1,2,-1.5],[1,2,2,-1],[2,2,2,1]]}"#;
        assert_eq!(
            tensor_from_str(text).unwrap(),
            fixture(FixtureId::Ex22).tensor
        );
    }

    #[test]
    fn rejects_malformed_tensors() {
        let dup = r#"{"order":2,"dim":2,"entries":[[1,1,1.0],[1,1,2.0]]}"#;
        assert!(matches!(tensor_from_str(dup), Err(Error::Parse(m)) if m.contains("duplicate")));
        let range = r#"{"order":2,"dim":2,"entries":[[0,1,1.0]]}"#;
        assert!(tensor_from_str(range).is_err());
        let range = r#"{"order":2,"dim":2,"entries":[[3,1,1.0]]}"#;
        assert!(tensor_from_str(range).is_err());
        let short = r#"{"order":2,"dim":2,"entries":[[1,1.0]]}"#;
        assert!(tensor_from_str(short).is_err());
        assert!(tensor_from_str("not json").is_err());
    }

    #[test]
    fn vector_formats() {
        assert_eq!(
            vector_from_str("[1, 2.5, -3e2]").unwrap(),
            vec![1.0, 2.5, -300.0]
        );
        assert_eq!(
            vector_from_str("1 2.5\n-3e2").unwrap(),
            vec![1.0, 2.5, -300.0]
        );
        assert_eq!(vector_from_str("0.8,2").unwrap(), vec![0.8, 2.0]);
        assert!(vector_from_str("1 x").is_err());
    }

    #[test]
    fn instance_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let inst = gen_problem1(3, 5).unwrap();
        write_instance(dir.path(), &inst).unwrap();
        assert_eq!(read_instance(dir.path()).unwrap(), inst);
    }

    proptest! {
        #[test]
        fn tensor_text_round_trip(order in 2usize..5, dim in 1usize..4,
                                  vals in prop::collection::vec(prop_oneof![Just(0.0), -1e6f64..1e6], 256)) {
            let len = dim.pow(order as u32);
            let t = DenseTensor::from_vec(order, dim, vals[..len].to_vec()).unwrap();
            prop_assert_eq!(tensor_from_str(&tensor_to_string(&t)).unwrap(), t);
        }
    }
}
