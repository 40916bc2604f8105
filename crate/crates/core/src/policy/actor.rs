use cmvrp_autodiff::{gru_cell, Array, Graph, GruNodes, GruSlots, NodeId, ParamSet};

use super::{check_shape, uniform_init, PolicyDims, DEMAND_SCALE};
use crate::env::EnvState;
use crate::error::{CoreError, Result};
use crate::instances::Point;
use crate::rng::{stream_rng, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ActorSlots {
    enc_cust_w: usize,
    enc_cust_b: usize,
    enc_veh_w: usize,
    enc_veh_b: usize,
    dec_embed_w: usize,
    dec_embed_b: usize,
    gru: GruSlots,
    attn_w: usize,
    attn_v: usize,
}

/// Policy network of one vehicle: customer and vehicle encoders, a
/// recurrent decoder fed with the previous action's coordinates, and an
/// additive attention head that scores every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub agent: usize,
    pub dims: PolicyDims,
    pub params: ParamSet,
    slots: ActorSlots,
}

/// Parameter handles of one actor inside a graph. The attention matrix is
/// split into its per-node block and its shared-context block.
#[derive(Debug, Clone)]
pub struct ActorNodes {
    /// Every bound parameter, indexed by its slot in [`Actor::params`].
    pub params: Vec<NodeId>,
    pub enc_cust_w: NodeId,
    pub enc_cust_b: NodeId,
    pub enc_veh_w: NodeId,
    pub enc_veh_b: NodeId,
    pub dec_embed_w: NodeId,
    pub dec_embed_b: NodeId,
    pub gru: GruNodes,
    pub attn_w_node: NodeId,
    pub attn_w_context: NodeId,
    pub attn_v: NodeId,
}

impl Actor {
    pub fn prefix(agent: usize) -> String {
        format!("actor.{agent}")
    }

    /// Freshly initialized actor; deterministic in `(seed, agent)`.
    pub fn init(agent: usize, dims: PolicyDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        let mut rng = stream_rng(seed, Domain::ParamInit, agent as u64);
        let (d, a) = (dims.embed_dim, dims.attention_dim);
        let p = Self::prefix(agent);
        let mut params = ParamSet::new();
        let enc_cust_w = params.insert(format!("{p}.enc_cust.W"), uniform_init(&mut rng, 3, d));
        let enc_cust_b = params.insert(format!("{p}.enc_cust.b"), Array::zeros(&[1, d]));
        let enc_veh_w = params.insert(format!("{p}.enc_veh.W"), uniform_init(&mut rng, 3, d));
        let enc_veh_b = params.insert(format!("{p}.enc_veh.b"), Array::zeros(&[1, d]));
        let dec_embed_w = params.insert(format!("{p}.dec_embed.W"), uniform_init(&mut rng, 2, d));
        let dec_embed_b = params.insert(format!("{p}.dec_embed.b"), Array::zeros(&[1, d]));
        let gru = GruSlots::register(&mut params, &format!("{p}.gru"), d, d, |r, c| uniform_init(&mut rng, r, c));
        let attn_w = params.insert(format!("{p}.attn.W"), uniform_init(&mut rng, dims.attention_input(), a));
        let attn_v = params.insert(format!("{p}.attn.v"), uniform_init(&mut rng, a, 1));
        Ok(Self {
            agent,
            dims,
            params,
            slots: ActorSlots {
                enc_cust_w,
                enc_cust_b,
                enc_veh_w,
                enc_veh_b,
                dec_embed_w,
                dec_embed_b,
                gru,
                attn_w,
                attn_v,
            },
        })
    }

    /// Rebuilds an actor from stored parameters, checking names and shapes.
    pub fn from_params(agent: usize, dims: PolicyDims, params: ParamSet) -> Result<Self> {
        let template = Self::init(agent, dims, 0)?;
        if template.params.names() != params.names() {
            return Err(CoreError::Validation(format!(
                "actor {agent}: parameter names do not match the expected layout"
            )));
        }
        for (name, value) in template.params.iter() {
            check_shape(&params, name, value.shape())?;
        }
        Ok(Self {
            agent,
            dims,
            params,
            slots: template.slots,
        })
    }

    pub fn bind<'p>(&'p self, g: &mut Graph<'p>) -> Result<ActorNodes> {
        let bound = self
            .params
            .values()
            .iter()
            .map(|v| g.param(v))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        self.attach(g, bound)
    }

    /// Builds the handles from parameter nodes already in the graph, one per
    /// slot (e.g. variables of a gradient check).
    pub fn attach(&self, g: &mut Graph<'_>, bound: Vec<NodeId>) -> Result<ActorNodes> {
        if bound.len() != self.params.len() {
            return Err(CoreError::Contract(format!(
                "actor {} needs {} parameter nodes, got {}",
                self.agent,
                self.params.len(),
                bound.len()
            )));
        }
        let s = &self.slots;
        let d = self.dims.embed_dim;
        let rows = self.dims.attention_input();
        let attn_w = bound[s.attn_w];
        Ok(ActorNodes {
            enc_cust_w: bound[s.enc_cust_w],
            enc_cust_b: bound[s.enc_cust_b],
            enc_veh_w: bound[s.enc_veh_w],
            enc_veh_b: bound[s.enc_veh_b],
            dec_embed_w: bound[s.dec_embed_w],
            dec_embed_b: bound[s.dec_embed_b],
            gru: s.gru.select(&bound),
            attn_w_node: g.row_slice(attn_w, 0, d)?,
            attn_w_context: g.row_slice(attn_w, d, rows)?,
            attn_v: bound[s.attn_v],
            params: bound,
        })
    }
}

/// Customer features `(x, y, remaining / 9)` per node; row 0 is the depot
/// with a zero demand feature.
pub fn customer_features(state: &EnvState<'_>) -> Array {
    let inst = state.instance;
    let mut data = Vec::with_capacity(inst.num_nodes() * 3);
    data.extend_from_slice(&[inst.depot.x, inst.depot.y, 0.0]);
    for (c, &d) in inst.customers.iter().zip(&state.remaining_demands) {
        data.extend_from_slice(&[c.coord.x, c.coord.y, d as f64 / DEMAND_SCALE]);
    }
    Array::matrix(inst.num_nodes(), 3, data).expect("3 features per node")
}

/// Vehicle features `(load / capacity, x, y)` in fleet order.
pub fn vehicle_features(state: &EnvState<'_>) -> Array {
    let inst = state.instance;
    let mut data = Vec::with_capacity(inst.num_vehicles() * 3);
    for (j, v) in inst.vehicles.iter().enumerate() {
        let at = inst.coord(state.positions[j]);
        data.extend_from_slice(&[state.loads[j] as f64 / v.capacity as f64, at.x, at.y]);
    }
    Array::matrix(inst.num_vehicles(), 3, data).expect("3 features per vehicle")
}

/// `[(M+1), D]` customer embeddings for the current state.
pub fn encode_customers(g: &mut Graph<'_>, state: &EnvState<'_>, nodes: &ActorNodes) -> Result<NodeId> {
    let x = g.constant(customer_features(state))?;
    let xw = g.matmul(x, nodes.enc_cust_w)?;
    Ok(g.add(xw, nodes.enc_cust_b)?)
}

/// `[N, D]` vehicle embeddings for the current state.
pub fn encode_vehicles(g: &mut Graph<'_>, state: &EnvState<'_>, nodes: &ActorNodes) -> Result<NodeId> {
    let z = g.constant(vehicle_features(state))?;
    let zw = g.matmul(z, nodes.enc_veh_w)?;
    Ok(g.add(zw, nodes.enc_veh_b)?)
}

/// Advances the decoder state with the coordinates of the previous action.
pub fn decode_step(g: &mut Graph<'_>, prev_action: Point, hidden: NodeId, nodes: &ActorNodes) -> Result<NodeId> {
    let y = g.constant(Array::row(vec![prev_action.x, prev_action.y]))?;
    let yw = g.matmul(y, nodes.dec_embed_w)?;
    let embedded = g.add(yw, nodes.dec_embed_b)?;
    Ok(gru_cell(g, embedded, hidden, &nodes.gru)?)
}

/// `u[i] = vᵀ tanh(W [cust_emb[i]; vec(veh_emb); hidden])` for every node,
/// returned as a `[1, M+1]` row.
pub fn attention_logits(
    g: &mut Graph<'_>,
    cust_emb: NodeId,
    veh_emb: NodeId,
    hidden: NodeId,
    nodes: &ActorNodes,
) -> Result<NodeId> {
    let veh = g.value(veh_emb);
    let flat_len = veh.len();
    let num_nodes = g.value(cust_emb).rows();
    let veh_flat = g.reshape(veh_emb, &[1, flat_len])?;
    let context = g.concat(&[veh_flat, hidden], 1)?;
    let context_proj = g.matmul(context, nodes.attn_w_context)?;
    let node_proj = g.matmul(cust_emb, nodes.attn_w_node)?;
    let pre = g.add(node_proj, context_proj)?;
    let act = g.tanh(pre)?;
    let scores = g.matmul(act, nodes.attn_v)?;
    Ok(g.reshape(scores, &[1, num_nodes])?)
}
