//! Versioned checkpoint document.
//!
//! A JSON object holding named parameter groups (each parameter: name, shape,
//! base64 of the little-endian f64 payload), optional Adam state per group,
//! a config hash and free-form string metadata.

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adam::{AdamConfig, AdamState};
use crate::array::Array;
use crate::error::{AutodiffError, Result};
use crate::params::ParamSet;

pub const CHECKPOINT_FORMAT: &str = "cmvrp-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: String,
    pub metadata: BTreeMap<String, String>,
    pub groups: Vec<ParamGroup>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGroup {
    pub name: String,
    pub params: ParamSet,
    pub optimizer: Option<AdamState>,
}

#[derive(Serialize, Deserialize)]
struct RawTensor {
    name: String,
    shape: Vec<usize>,
    data: String,
}

#[derive(Serialize, Deserialize)]
struct RawAdam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    m: Vec<String>,
    v: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawGroup {
    name: String,
    params: Vec<RawTensor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adam: Option<RawAdam>,
}

#[derive(Serialize, Deserialize)]
struct RawCheckpoint {
    format: String,
    version: u32,
    config_hash: String,
    metadata: BTreeMap<String, String>,
    groups: Vec<RawGroup>,
}

fn encode(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    STANDARD.encode(bytes)
}

fn decode(text: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(text)
        .map_err(|e| AutodiffError::Checkpoint(format!("{what}: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(AutodiffError::Checkpoint(format!(
            "{what}: payload has {} bytes, expected {}",
            bytes.len(),
            expected * 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Hex SHA-256 of an arbitrary canonical config string.
pub fn config_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Checkpoint {
    pub fn group(&self, name: &str) -> Result<&ParamGroup> {
        self.groups
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| AutodiffError::Checkpoint(format!("missing group `{name}`")))
    }

    pub fn to_json(&self) -> String {
        let groups = self
            .groups
            .iter()
            .map(|g| RawGroup {
                name: g.name.clone(),
                params: g
                    .params
                    .iter()
                    .map(|(name, a)| RawTensor {
                        name: name.to_string(),
                        shape: a.shape().to_vec(),
                        data: encode(a.data()),
                    })
                    .collect(),
                adam: g.optimizer.as_ref().map(|s| RawAdam {
                    lr: s.config.lr,
                    beta1: s.config.beta1,
                    beta2: s.config.beta2,
                    eps: s.config.eps,
                    step: s.step,
                    m: s.m.iter().map(|a| encode(a.data())).collect(),
                    v: s.v.iter().map(|a| encode(a.data())).collect(),
                }),
            })
            .collect();
        let raw = RawCheckpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config_hash: self.config_hash.clone(),
            metadata: self.metadata.clone(),
            groups,
        };
        serde_json::to_string_pretty(&raw).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawCheckpoint =
            serde_json::from_str(text).map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
        if raw.format != CHECKPOINT_FORMAT {
            return Err(AutodiffError::Checkpoint(format!("unknown format `{}`", raw.format)));
        }
        if raw.version != CHECKPOINT_VERSION {
            return Err(AutodiffError::Checkpoint(format!(
                "unsupported version {}",
                raw.version
            )));
        }
        let mut groups = Vec::with_capacity(raw.groups.len());
        for g in raw.groups {
            let mut params = ParamSet::new();
            for t in g.params {
                let len = t.shape.iter().product();
                let data = decode(&t.data, len, &t.name)?;
                params.insert(t.name, Array::new(t.shape, data)?);
            }
            let optimizer = match g.adam {
                None => None,
                Some(a) => {
                    if a.m.len() != params.len() || a.v.len() != params.len() {
                        return Err(AutodiffError::Checkpoint(format!(
                            "group `{}`: optimizer moments do not match parameters",
                            g.name
                        )));
                    }
                    let moments = |payloads: &[String]| -> Result<Vec<Array>> {
                        payloads
                            .iter()
                            .zip(params.iter())
                            .map(|(p, (name, like))| {
                                Array::new(like.shape().to_vec(), decode(p, like.len(), name)?)
                            })
                            .collect()
                    };
                    Some(AdamState {
                        config: AdamConfig {
                            lr: a.lr,
                            beta1: a.beta1,
                            beta2: a.beta2,
                            eps: a.eps,
                        },
                        step: a.step,
                        m: moments(&a.m)?,
                        v: moments(&a.v)?,
                    })
                }
            };
            groups.push(ParamGroup {
                name: g.name,
                params,
                optimizer,
            });
        }
        Ok(Self {
            config_hash: raw.config_hash,
            metadata: raw.metadata,
            groups,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let mut params = ParamSet::new();
        params.insert("a.W", Array::matrix(2, 2, vec![0.1, -2.5, 1e-300, 3.0]).unwrap());
        params.insert("a.b", Array::row(vec![f64::MIN_POSITIVE, -0.0]));
        let mut adam = AdamState::new(&params, AdamConfig::default());
        adam.step = 4;
        adam.m[0].data_mut()[1] = 0.25;
        Checkpoint {
            config_hash: config_hash("dims=2"),
            metadata: BTreeMap::from([("iteration".to_string(), "4".to_string())]),
            groups: vec![ParamGroup {
                name: "actor.0".into(),
                params,
                optimizer: Some(adam),
            }],
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let ck = sample();
        let back = Checkpoint::from_json(&ck.to_json()).unwrap();
        assert_eq!(back, ck);
        // -0.0 == 0.0 under PartialEq; compare bits too.
        assert_eq!(
            back.groups[0].params.get(1).data()[1].to_bits(),
            (-0.0f64).to_bits()
        );
    }

    #[test]
    fn rejects_wrong_version_and_truncated_payload() {
        let text = sample().to_json().replace("\"version\": 1", "\"version\": 9");
        assert!(Checkpoint::from_json(&text).is_err());

        let mut raw: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        raw["groups"][0]["params"][0]["data"] = serde_json::Value::String(STANDARD.encode([0u8; 8]));
        assert!(Checkpoint::from_json(&raw.to_string()).is_err());
    }

    #[test]
    fn hash_is_stable_hex() {
        let h = config_hash("abc");
        assert_eq!(h, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
