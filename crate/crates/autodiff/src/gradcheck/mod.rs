//! Central finite-difference gradient checking.
//!
//! Only compiled with the `gradcheck` feature; downstream crates enable it
//! for their test builds. The numerical side only ever evaluates forward
//! passes, so it is independent of every backward rule it checks.

use crate::array::Array;
use crate::error::Result;
use crate::graph::{Graph, NodeId};

/// Smallest denominator used for relative error, so that gradients that are
/// numerically zero are compared in absolute terms.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub coordinates_checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Compares the backward pass of `build` against central differences with
/// step `h`, for every entry of every input (or an evenly strided subset of
/// at most `max_coords_per_input` entries).
pub fn check<F>(inputs: &[Array], build: F, h: f64, max_coords_per_input: Option<usize>) -> Result<GradCheckReport>
where
    F: for<'g> Fn(&mut Graph<'g>, &[NodeId]) -> Result<NodeId>,
{
    let analytic = {
        let mut g = Graph::new();
        let ids = inputs
            .iter()
            .map(|a| g.variable(a.clone()))
            .collect::<Result<Vec<_>>>()?;
        let loss = build(&mut g, &ids)?;
        let grads = g.backward(loss)?;
        ids.iter().map(|&id| grads.get(id)).collect::<Vec<_>>()
    };

    let eval = |perturbed: &[Array]| -> Result<f64> {
        let mut g = Graph::new();
        let ids = perturbed
            .iter()
            .map(|a| g.constant(a.clone()))
            .collect::<Result<Vec<_>>>()?;
        let loss = build(&mut g, &ids)?;
        Ok(g.value(loss).item())
    };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        coordinates_checked: 0,
    };
    let mut work: Vec<Array> = inputs.to_vec();
    for (k, input) in inputs.iter().enumerate() {
        let n = input.len();
        let stride = match max_coords_per_input {
            Some(limit) if limit > 0 && n > limit => n.div_ceil(limit),
            _ => 1,
        };
        for i in (0..n).step_by(stride) {
            let original = input.data()[i];
            work[k].data_mut()[i] = original + h;
            let plus = eval(&work)?;
            work[k].data_mut()[i] = original - h;
            let minus = eval(&work)?;
            work[k].data_mut()[i] = original;
            let numeric = (plus - minus) / (2.0 * h);
            let err = relative_error(analytic[k].data()[i], numeric);
            report.max_relative_error = report.max_relative_error.max(err);
            report.coordinates_checked += 1;
        }
    }
    Ok(report)
}

pub mod cases;
