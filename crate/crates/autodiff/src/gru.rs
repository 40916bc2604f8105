use crate::array::Array;
use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::params::ParamSet;

/// Gate suffixes in the order parameters are registered.
const GATES: [&str; 3] = ["z", "r", "h"];

/// Graph handles for one gated recurrent unit.
///
/// Row-vector convention: `x` is `[1, input]`, `h` is `[1, hidden]`,
/// input weights are `[input, hidden]`, recurrent weights `[hidden, hidden]`.
#[derive(Debug, Clone, Copy)]
pub struct GruNodes {
    pub w_z: NodeId,
    pub u_z: NodeId,
    pub b_z: NodeId,
    pub w_r: NodeId,
    pub u_r: NodeId,
    pub b_r: NodeId,
    pub w_h: NodeId,
    pub u_h: NodeId,
    pub b_h: NodeId,
}

/// Slot indices of a GRU inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruSlots {
    slots: [usize; 9],
}

impl GruSlots {
    /// Registers `{prefix}.W_g`, `{prefix}.U_g`, `{prefix}.b_g` for each gate,
    /// using `init` to produce weight matrices. Biases start at zero.
    pub fn register(
        params: &mut ParamSet,
        prefix: &str,
        input: usize,
        hidden: usize,
        mut init: impl FnMut(usize, usize) -> Array,
    ) -> Self {
        let mut slots = [0; 9];
        for (k, gate) in GATES.iter().enumerate() {
            slots[3 * k] = params.insert(format!("{prefix}.W_{gate}"), init(input, hidden));
            slots[3 * k + 1] = params.insert(format!("{prefix}.U_{gate}"), init(hidden, hidden));
            slots[3 * k + 2] = params.insert(format!("{prefix}.b_{gate}"), Array::zeros(&[1, hidden]));
        }
        Self { slots }
    }

    pub fn bind<'p>(&self, graph: &mut Graph<'p>, params: &'p ParamSet) -> Result<GruNodes> {
        let mut n = [None; 9];
        for (i, &slot) in self.slots.iter().enumerate() {
            n[i] = Some(graph.param(params.get(slot))?);
        }
        Ok(Self::nodes(n.map(|v| v.expect("bound above"))))
    }

    /// Picks the GRU handles out of a slot-indexed list of already bound
    /// parameters.
    pub fn select(&self, bound: &[NodeId]) -> GruNodes {
        Self::nodes(self.slots.map(|slot| bound[slot]))
    }

    fn nodes(n: [NodeId; 9]) -> GruNodes {
        GruNodes {
            w_z: n[0],
            u_z: n[1],
            b_z: n[2],
            w_r: n[3],
            u_r: n[4],
            b_r: n[5],
            w_h: n[6],
            u_h: n[7],
            b_h: n[8],
        }
    }

    pub fn update_gate_bias(&self) -> usize {
        self.slots[2]
    }
}

fn affine(g: &mut Graph<'_>, x: NodeId, w: NodeId, h: NodeId, u: NodeId, b: NodeId) -> Result<NodeId> {
    let xw = g.matmul(x, w)?;
    let hu = g.matmul(h, u)?;
    let s = g.add(xw, hu)?;
    g.add(s, b)
}

/// `h' = (1 - z) ⊙ h + z ⊙ h̃` with
/// `z = σ(xW_z + hU_z + b_z)`, `r = σ(xW_r + hU_r + b_r)`,
/// `h̃ = tanh(xW_h + (r ⊙ h)U_h + b_h)`.
pub fn gru_cell(g: &mut Graph<'_>, x: NodeId, h: NodeId, p: &GruNodes) -> Result<NodeId> {
    let z_pre = affine(g, x, p.w_z, h, p.u_z, p.b_z)?;
    let z = g.sigmoid(z_pre)?;
    let r_pre = affine(g, x, p.w_r, h, p.u_r, p.b_r)?;
    let r = g.sigmoid(r_pre)?;
    let rh = g.mul(r, h)?;
    let cand_pre = affine(g, x, p.w_h, rh, p.u_h, p.b_h)?;
    let cand = g.tanh(cand_pre)?;
    // h + z ⊙ (h̃ - h)
    let diff = g.sub(cand, h)?;
    let step = g.mul(z, diff)?;
    g.add(h, step)
}
