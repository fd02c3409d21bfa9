//! Model files: self-describing JSON with explicit interpolation kind and
//! depth, deterministic field order.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::DmnModel;
use crate::error::{Error, Result};
use crate::mech::ShapeKind;

/// Current model format version. Version 1 files carried unnormalized
/// weights; loading one rescales the weights on the fly.
pub const CURRENT_FORMAT_VERSION: u32 = 2;

/// Training provenance carried inside a model file.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct ModelMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_by: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_validation_error: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    depth: u32,
    interp: ShapeKind,
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    v: Vec<f64>,
    #[serde(default)]
    meta: ModelMeta,
}

impl DmnModel<f64> {
    /// Serializes with the mixing constraint enforced exactly: the weights
    /// are rescaled so the Macauley-bracketed sum is one.
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let positive: f64 = self.v.iter().map(|&v| v.max(0.0)).sum();
        if positive <= 0.0 {
            return Err(Error::invalid("cannot serialize a model with all-zero weights"));
        }
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|r| m.row(r).iter().copied().collect())
                .collect()
        };
        let file = ModelFile {
            version: CURRENT_FORMAT_VERSION,
            depth: self.depth,
            interp: self.kind,
            p: rows(&self.p),
            q: rows(&self.q),
            v: self.v.iter().map(|&v| v / positive).collect(),
            meta: self.meta.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&file)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        let file: ModelFile = serde_json::from_slice(bytes)?;
        if file.version > CURRENT_FORMAT_VERSION {
            return Err(Error::Decode(format!(
                "model format version {} is newer than supported {}",
                file.version, CURRENT_FORMAT_VERSION
            )));
        }
        let nodes = (1usize << file.depth) - 1;
        let m = file.interp.count();
        let dense = |rows: &[Vec<f64>], what: &str| -> Result<DMatrix<f64>> {
            if rows.len() != nodes || rows.iter().any(|r| r.len() != m) {
                return Err(Error::Decode(format!(
                    "{what} must be {nodes} rows of {m} coefficients"
                )));
            }
            Ok(DMatrix::from_fn(nodes, m, |r, c| rows[r][c]))
        };
        let p = dense(&file.p, "p")?;
        let q = dense(&file.q, "q")?;
        if file.v.len() != 1usize << file.depth {
            return Err(Error::Decode("weight count does not match depth".into()));
        }
        let mut v = DVector::from_vec(file.v);
        let positive: f64 = v.iter().map(|&x| x.max(0.0)).sum();
        if positive <= 0.0 {
            return Err(Error::Decode("model has no positive weights".into()));
        }
        if file.version < CURRENT_FORMAT_VERSION {
            // Upgrade path: older files did not normalize on export.
            v /= positive;
        } else if (positive - 1.0).abs() > 1e-10 {
            return Err(Error::Decode(format!(
                "weights violate the mixing constraint: sum {positive}"
            )));
        }
        DmnModel::new(file.depth, file.interp, p, q, v, file.meta)
            .map_err(|e| Error::Decode(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_json_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::random_model_for_tests;

    #[test]
    fn round_trip_is_bit_exact_on_coefficients() {
        let model = random_model_for_tests(3, ShapeKind::Trilinear, 17);
        let bytes = model.to_json_bytes().unwrap();
        let back = DmnModel::from_json_bytes(&bytes).unwrap();
        assert_eq!(model.coefficients_p(), back.coefficients_p());
        assert_eq!(model.coefficients_q(), back.coefficients_q());
        // Weights were already normalized by construction.
        for (a, b) in model.weights_raw().iter().zip(back.weights_raw().iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn truncated_payload_is_a_decode_error() {
        let model = random_model_for_tests(2, ShapeKind::Linear, 3);
        let bytes = model.to_json_bytes().unwrap();
        let err = DmnModel::from_json_bytes(&bytes[..bytes.len() / 2]).unwrap_err();
        assert!(matches!(err, Error::Decode(_)));
    }

    #[test]
    fn version_1_weights_are_renormalized_on_load() {
        // Version 1 files stored raw (unnormalized) weights.
        let file = serde_json::json!({
            "version": 1,
            "depth": 1,
            "interp": "linear",
            "p": [[0.1, 0.2, 0.3]],
            "q": [[0.4, 0.5, 0.6]],
            "v": [3.0, 1.0]
        });
        let model = DmnModel::from_json_bytes(file.to_string().as_bytes()).unwrap();
        let sum: f64 = model.weights_raw().iter().map(|&v| v.max(0.0)).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((model.weights_raw()[0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn newer_version_is_rejected() {
        let file = serde_json::json!({
            "version": 99,
            "depth": 1,
            "interp": "linear",
            "p": [[0.0, 0.0, 0.0]],
            "q": [[0.0, 0.0, 0.0]],
            "v": [0.5, 0.5]
        });
        assert!(DmnModel::from_json_bytes(file.to_string().as_bytes()).is_err());
    }
}
