use cmvrp_autodiff::{Array, Graph, NodeId, ParamSet};

use super::{check_shape, uniform_init, PolicyDims};
use crate::error::{CoreError, Result};
use crate::instances::ProblemInstance;
use crate::rng::{stream_rng, Domain};

/// ParamInit stream reserved for the critic; actors use their agent index.
const CRITIC_STREAM: u64 = u64::MAX;

const LAYERS: [&str; 4] = ["embed", "layer1", "layer2", "head"];

/// Value network over the static node coordinates: a shared per-node
/// embedding, mean pooling, two relu layers and a linear head estimating
/// the episode cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub embed_dim: usize,
    pub params: ParamSet,
}

#[derive(Debug, Clone)]
pub struct CriticNodes {
    /// Every bound parameter, indexed by slot.
    pub params: Vec<NodeId>,
}

impl Critic {
    pub fn init(dims: PolicyDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let d = dims.embed_dim;
        let mut rng = stream_rng(seed, Domain::ParamInit, CRITIC_STREAM);
        let mut params = ParamSet::new();
        for (name, (rows, cols)) in LAYERS.iter().zip([(2, d), (d, d), (d, d), (d, 1)]) {
            params.insert(format!("critic.{name}.W"), uniform_init(&mut rng, rows, cols));
            params.insert(format!("critic.{name}.b"), Array::zeros(&[1, cols]));
        }
        Ok(Self { embed_dim: d, params })
    }

    pub fn from_params(dims: PolicyDims, params: ParamSet) -> Result<Self> {
        let template = Self::init(dims, 0)?;
        if template.params.names() != params.names() {
            return Err(CoreError::Validation(
                "critic: parameter names do not match the expected layout".into(),
            ));
        }
        for (name, value) in template.params.iter() {
            check_shape(&params, name, value.shape())?;
        }
        Ok(Self {
            embed_dim: dims.embed_dim,
            params,
        })
    }

    pub fn bind<'p>(&'p self, g: &mut Graph<'p>) -> Result<CriticNodes> {
        let params = self
            .params
            .values()
            .iter()
            .map(|v| g.param(v))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(CriticNodes { params })
    }

    /// Scalar value node for `instance`.
    pub fn forward(&self, g: &mut Graph<'_>, nodes: &CriticNodes, instance: &ProblemInstance) -> Result<NodeId> {
        let mut coords = Vec::with_capacity(instance.num_nodes() * 2);
        for node in 0..instance.num_nodes() {
            let p = instance.coord(node);
            coords.extend_from_slice(&[p.x, p.y]);
        }
        let x = g.constant(Array::matrix(instance.num_nodes(), 2, coords)?)?;
        let p = &nodes.params;
        let emb = affine(g, x, p[0], p[1])?;
        let pooled = g.mean_rows(emb)?;
        let l1 = affine(g, pooled, p[2], p[3])?;
        let a1 = g.relu(l1)?;
        let l2 = affine(g, a1, p[4], p[5])?;
        let a2 = g.relu(l2)?;
        affine(g, a2, p[6], p[7])
    }
}

fn affine(g: &mut Graph<'_>, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
    let xw = g.matmul(x, w)?;
    Ok(g.add(xw, b)?)
}

/// Estimated episode cost of `instance`.
pub fn critic_value(instance: &ProblemInstance, critic: &Critic) -> Result<f64> {
    let mut g = Graph::new();
    let nodes = critic.bind(&mut g)?;
    let v = critic.forward(&mut g, &nodes, instance)?;
    Ok(g.value(v).item())
}
