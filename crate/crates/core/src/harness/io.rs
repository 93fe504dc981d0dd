//! Instance files: one JSON document with `weights`, `partition`, `u`, `w`
//! (arrays of `[re, im]` pairs), and optional `phi` and `labels`.
//!
//! Floats are written in shortest round-trip form and parsed with correct
//! rounding, so `parse(serialize(x)) == x` exactly.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Instance;
use crate::error::Error;
use crate::measure::{FiniteMeasureSpace, MeasurableFunction, Partition, C64};
use crate::spectral::measure::PointMap;
use crate::wce::WceInstance;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    weights: Vec<f64>,
    partition: Vec<Vec<usize>>,
    u: Vec<[f64; 2]>,
    w: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(field) = &self.field {
            write!(f, "field \"{field}\": ")?;
        }
        write!(f, "{}", self.message)?;
        match (self.line, self.column) {
            (Some(line), Some(column)) => write!(f, " (line {line}, column {column})"),
            (Some(line), None) => write!(f, " (line {line})"),
            _ => Ok(()),
        }
    }
}

impl std::error::Error for ParseError {}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(e.to_string())
    }
}

/// Field named in a serde message such as "missing field `w`".
fn backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

/// First line on which `"field"` appears as a key.
fn line_of_field(text: &str, field: &str) -> Option<usize> {
    let key = format!("\"{field}\"");
    text.lines().position(|l| l.contains(&key)).map(|i| i + 1)
}

fn semantic(text: &str, field: &str, err: impl fmt::Display) -> ParseError {
    ParseError {
        line: line_of_field(text, field),
        column: None,
        field: Some(field.to_string()),
        message: err.to_string(),
    }
}

fn complex(values: &[[f64; 2]]) -> Vec<C64> {
    values.iter().map(|[re, im]| C64::new(*re, *im)).collect()
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        // serde appends its own position; keep the bare message
        let bare = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message.clone(),
        };
        ParseError {
            line: Some(e.line()),
            column: Some(e.column()),
            field: backticked(&bare),
            message: bare,
        }
    })?;

    let space = match doc.labels {
        Some(labels) => FiniteMeasureSpace::with_labels(doc.weights, labels).map_err(|e| {
            let field = if matches!(e, Error::InvalidLabels(_)) {
                "labels"
            } else {
                "weights"
            };
            semantic(text, field, e)
        })?,
        None => FiniteMeasureSpace::new(doc.weights).map_err(|e| semantic(text, "weights", e))?,
    };
    let partition = Partition::new(space.clone(), doc.partition).map_err(|e| semantic(text, "partition", e))?;
    let u = MeasurableFunction::new(space.clone(), complex(&doc.u)).map_err(|e| semantic(text, "u", e))?;
    let w = MeasurableFunction::new(space.clone(), complex(&doc.w)).map_err(|e| semantic(text, "w", e))?;
    let phi = doc
        .phi
        .map(|images| PointMap::new(space, images))
        .transpose()
        .map_err(|e| semantic(text, "phi", e))?;
    let wce = WceInstance::new(partition, u, w).map_err(|e| semantic(text, "partition", e))?;
    Ok(Instance { wce, phi })
}

fn pairs(f: &MeasurableFunction) -> Vec<[f64; 2]> {
    f.values().iter().map(|z| [z.re, z.im]).collect()
}

pub fn serialize_instance(inst: &Instance) -> String {
    let space = inst.wce.space();
    let doc = InstanceDoc {
        weights: space.weights().to_vec(),
        partition: inst.wce.partition().blocks().to_vec(),
        u: pairs(inst.wce.u()),
        w: pairs(inst.wce.w()),
        phi: inst.phi.as_ref().map(|p| p.images().to_vec()),
        labels: space.labels().map(|l| l.to_vec()),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    text.push('\n');
    text
}

/// Leading 16 hex digits of the SHA-256 of the serialized instance.
pub fn instance_digest(inst: &Instance) -> String {
    let hash = Sha256::digest(serialize_instance(inst).as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generator::{gen_instance, GeneratorConfig};

    const SMALL: &str = r#"{
  "weights": [1.0, 2.0, 0.5],
  "partition": [[0, 2], [1]],
  "u": [[1.0, 0.0], [0.5, -0.5], [0.0, 0.0]],
  "w": [[2.0, 1.0], [1.0, 0.0], [3.0, 0.0]],
  "phi": [0, 0, 2]
}
"#;

    #[test]
    fn parses_a_small_document() {
        let inst = parse_instance(SMALL).unwrap();
        assert_eq!(inst.wce.space().len(), 3);
        assert_eq!(inst.wce.partition().blocks(), &[vec![0, 2], vec![1]]);
        assert_eq!(inst.wce.u().get(1), C64::new(0.5, -0.5));
        assert_eq!(inst.phi.unwrap().images(), &[0, 0, 2]);
    }

    #[test]
    fn round_trip_is_exact() {
        for seed in 0..10 {
            let inst = gen_instance(&GeneratorConfig::new(seed, 17, 5)).unwrap();
            let text = serialize_instance(&inst);
            let back = parse_instance(&text).unwrap();
            assert_eq!(back, inst);
            assert_eq!(serialize_instance(&back), text);
        }
    }

    #[test]
    fn overlapping_blocks_are_named() {
        let text = SMALL.replace("[[0, 2], [1]]", "[[0, 1], [1, 2]]");
        let err = parse_instance(&text).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("partition"));
        assert_eq!(err.line, Some(3));
        assert!(err.message.contains("blocks 0 and 1 overlap at point 1"), "{err}");
    }

    #[test]
    fn missing_field_is_named() {
        let text = SMALL.replace("  \"w\": [[2.0, 1.0], [1.0, 0.0], [3.0, 0.0]],\n", "");
        let err = parse_instance(&text).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("w"));
        assert!(err.to_string().contains("missing field"), "{err}");
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = SMALL.replace("\"phi\"", "\"psi\"");
        let err = parse_instance(&text).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("psi"));
        assert_eq!(err.line, Some(6));
    }

    #[test]
    fn semantic_errors_point_at_fields() {
        let err = parse_instance(&SMALL.replace("[1.0, 2.0, 0.5]", "[1.0, -2.0, 0.5]")).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("weights"));
        let err = parse_instance(&SMALL.replace("[0, 0, 2]", "[0, 0, 3]")).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("phi"));
        let err = parse_instance(&SMALL.replace("[[1.0, 0.0], [0.5, -0.5], [0.0, 0.0]]", "[[1.0, 0.0]]")).unwrap_err();
        assert_eq!(err.field.as_deref(), Some("u"));
        let err = parse_instance("{ \"weights\": [1.0,").unwrap_err();
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn digest_is_stable_and_distinguishes() {
        let a = gen_instance(&GeneratorConfig::new(1, 8, 2)).unwrap();
        let b = gen_instance(&GeneratorConfig::new(2, 8, 2)).unwrap();
        assert_eq!(instance_digest(&a), instance_digest(&a.clone()));
        assert_ne!(instance_digest(&a), instance_digest(&b));
        assert_eq!(instance_digest(&a).len(), 16);
    }
}
