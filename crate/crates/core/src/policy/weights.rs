//! Weight file: one JSON document
//!
//! ```json
//! {"format_version": 1,
//!  "tensors": {"policy.layer1.head0.theta_s": {"shape": [16, 8], "data": [...]}, ...}}
//! ```
//!
//! Values are 32-bit floats written in shortest round-trip form, row-major.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::WeightsError;
use crate::graph::FEATURE_DIM;
use crate::num::Real;
use crate::policy::gat::{HeadParams, Matrix};
use crate::policy::network::{
    CriticNetwork, GatNetwork, PolicyWeights, HIDDEN_DIM, LAYER1_HEADS, LAYER1_OUT,
};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorRecord {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightDocument {
    pub format_version: u64,
    pub tensors: BTreeMap<String, TensorRecord>,
}

/// Canonical tensor names and shapes, in a fixed order.
pub fn tensor_layout() -> Vec<(String, Vec<usize>)> {
    let mut out = Vec::new();
    for net in ["policy", "critic"] {
        for h in 0..LAYER1_HEADS {
            let p = format!("{net}.layer1.head{h}");
            out.push((format!("{p}.theta_s"), vec![LAYER1_OUT, FEATURE_DIM]));
            out.push((format!("{p}.theta_t"), vec![LAYER1_OUT, FEATURE_DIM]));
            out.push((format!("{p}.att"), vec![LAYER1_OUT]));
            out.push((format!("{p}.bias"), vec![LAYER1_OUT]));
        }
        let p = format!("{net}.layer2");
        out.push((format!("{p}.theta_s"), vec![1, HIDDEN_DIM]));
        out.push((format!("{p}.theta_t"), vec![1, HIDDEN_DIM]));
        out.push((format!("{p}.att"), vec![1]));
        out.push((format!("{p}.bias"), vec![1]));
    }
    out.push(("critic.fc.weight".into(), vec![1]));
    out.push(("critic.fc.bias".into(), vec![1]));
    out
}

fn f32_of<T: Real>(v: T) -> f32 {
    v.to_f32().unwrap_or(f32::NAN)
}

impl WeightDocument {
    pub fn from_weights<T: Real>(weights: &PolicyWeights<T>) -> Result<Self, WeightsError> {
        let mut tensors = BTreeMap::new();
        let mut put = |name: String, shape: Vec<usize>, values: &[T]| -> Result<(), WeightsError> {
            let data: Vec<f32> = values.iter().map(|&v| f32_of(v)).collect();
            if let Some(index) = data.iter().position(|v| !v.is_finite()) {
                return Err(WeightsError::NonFinite { name, index });
            }
            tensors.insert(name, TensorRecord { shape, data });
            Ok(())
        };
        for (net, gnn) in [("policy", &weights.policy), ("critic", &weights.critic.gnn)] {
            for (h, head) in gnn.layer1.iter().enumerate() {
                let p = format!("{net}.layer1.head{h}");
                put(format!("{p}.theta_s"), vec![head.theta_s.rows, head.theta_s.cols], &head.theta_s.data)?;
                put(format!("{p}.theta_t"), vec![head.theta_t.rows, head.theta_t.cols], &head.theta_t.data)?;
                put(format!("{p}.att"), vec![head.att.len()], &head.att)?;
                put(format!("{p}.bias"), vec![head.bias.len()], &head.bias)?;
            }
            let l2 = &gnn.layer2;
            let p = format!("{net}.layer2");
            put(format!("{p}.theta_s"), vec![l2.theta_s.rows, l2.theta_s.cols], &l2.theta_s.data)?;
            put(format!("{p}.theta_t"), vec![l2.theta_t.rows, l2.theta_t.cols], &l2.theta_t.data)?;
            put(format!("{p}.att"), vec![l2.att.len()], &l2.att)?;
            put(format!("{p}.bias"), vec![l2.bias.len()], &l2.bias)?;
        }
        put("critic.fc.weight".into(), vec![1], &[weights.critic.fc_weight])?;
        put("critic.fc.bias".into(), vec![1], &[weights.critic.fc_bias])?;
        let doc = Self { format_version: FORMAT_VERSION, tensors };
        doc.validate_shapes()?;
        Ok(doc)
    }

    fn validate_shapes(&self) -> Result<(), WeightsError> {
        let layout = tensor_layout();
        for (name, shape) in &layout {
            let t = self.tensors.get(name).ok_or_else(|| WeightsError::MissingTensor(name.clone()))?;
            if &t.shape != shape {
                return Err(WeightsError::Shape {
                    name: name.clone(),
                    expected: shape.clone(),
                    found: t.shape.clone(),
                });
            }
        }
        if let Some(extra) = self.tensors.keys().find(|k| !layout.iter().any(|(n, _)| n == *k)) {
            return Err(WeightsError::UnexpectedTensor(extra.clone()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("weights serialize")
    }

    /// Parses and fully validates a document. Nothing is returned unless
    /// every tensor is present, correctly shaped and finite.
    pub fn parse(text: &str) -> Result<Self, WeightsError> {
        let root: Value = serde_json::from_str(text).map_err(|e| WeightsError::Parse(e.to_string()))?;
        let obj = root.as_object().ok_or_else(|| WeightsError::Parse("top level is not an object".into()))?;
        let version = obj
            .get("format_version")
            .ok_or_else(|| WeightsError::Parse("missing format_version".into()))?
            .as_u64()
            .ok_or_else(|| WeightsError::Parse("format_version is not an integer".into()))?;
        if version != FORMAT_VERSION {
            return Err(WeightsError::Version(version));
        }
        let raw = obj
            .get("tensors")
            .and_then(Value::as_object)
            .ok_or_else(|| WeightsError::Parse("missing tensors object".into()))?;

        let mut tensors = BTreeMap::new();
        for (name, value) in raw {
            let shape: Vec<usize> = value
                .get("shape")
                .and_then(Value::as_array)
                .and_then(|a| a.iter().map(|d| d.as_u64().map(|d| d as usize)).collect())
                .ok_or_else(|| WeightsError::Parse(format!("{name}: bad or missing shape")))?;
            let items = value
                .get("data")
                .and_then(Value::as_array)
                .ok_or_else(|| WeightsError::Parse(format!("{name}: bad or missing data")))?;
            let mut data = Vec::with_capacity(items.len());
            for (index, item) in items.iter().enumerate() {
                let v = match item {
                    Value::Number(n) => n.as_f64().map(|v| v as f32).filter(|v| v.is_finite()),
                    // NaN/inf cannot be JSON numbers; writers emit null or strings
                    Value::Null | Value::String(_) => None,
                    _ => return Err(WeightsError::Parse(format!("{name}: data[{index}] is not a number"))),
                };
                data.push(v.ok_or_else(|| WeightsError::NonFinite { name: name.clone(), index })?);
            }
            let expected: usize = shape.iter().product();
            if expected != data.len() {
                return Err(WeightsError::Length {
                    name: name.clone(),
                    shape,
                    expected,
                    found: data.len(),
                });
            }
            tensors.insert(name.clone(), TensorRecord { shape, data });
        }
        let doc = Self { format_version: version, tensors };
        doc.validate_shapes()?;
        Ok(doc)
    }

    pub fn to_weights<T: Real>(&self) -> Result<PolicyWeights<T>, WeightsError> {
        self.validate_shapes()?;
        let get = |name: &str| -> Vec<T> {
            self.tensors[name].data.iter().map(|&v| T::lit(f64::from(v))).collect()
        };
        let network = |net: &str| -> GatNetwork<T> {
            let head = |p: &str, rows: usize, cols: usize| HeadParams {
                theta_s: Matrix::from_vec(rows, cols, get(&format!("{p}.theta_s"))),
                theta_t: Matrix::from_vec(rows, cols, get(&format!("{p}.theta_t"))),
                att: get(&format!("{p}.att")),
                bias: get(&format!("{p}.bias")),
            };
            GatNetwork {
                layer1: (0..LAYER1_HEADS)
                    .map(|h| head(&format!("{net}.layer1.head{h}"), LAYER1_OUT, FEATURE_DIM))
                    .collect(),
                layer2: head(&format!("{net}.layer2"), 1, HIDDEN_DIM),
            }
        };
        Ok(PolicyWeights {
            policy: network("policy"),
            critic: CriticNetwork {
                gnn: network("critic"),
                fc_weight: get("critic.fc.weight")[0],
                fc_bias: get("critic.fc.bias")[0],
            },
        })
    }
}

pub fn parse_weights<T: Real>(text: &str) -> Result<PolicyWeights<T>, WeightsError> {
    WeightDocument::parse(text)?.to_weights()
}

pub fn load_weights<T: Real>(path: impl AsRef<Path>) -> Result<PolicyWeights<T>, WeightsError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| WeightsError::Io(format!("{}: {e}", path.display())))?;
    parse_weights(&text)
}

pub fn save_weights<T: Real>(
    path: impl AsRef<Path>,
    weights: &PolicyWeights<T>,
) -> Result<(), WeightsError> {
    let path = path.as_ref();
    let doc = WeightDocument::from_weights(weights)?;
    std::fs::write(path, doc.to_json())
        .map_err(|e| WeightsError::Io(format!("{}: {e}", path.display())))
}
