//! Randomized gradient-check cases, one per group of graph operations.
//! Each case draws its own shapes and values and returns the worst relative
//! error of one finite-difference check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::check;
use crate::array::Array;
use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::gru::{gru_cell, GruNodes, GruSlots};
use crate::params::ParamSet;

pub const STEP: f64 = 1e-6;

pub type Case = fn(&mut ChaCha8Rng) -> Result<f64>;

/// Every case with its name.
pub const ALL: [(&str, Case); 8] = [
    ("matmul", matmul),
    ("elementwise", elementwise),
    ("activations", activations),
    ("concat", concat),
    ("reductions", reductions),
    ("masked_log_softmax", masked_log_softmax),
    ("gru_cell", gru),
    ("mlp", mlp),
];

/// Worst error of `case` over `trials` draws from a stream seeded by `name`.
pub fn run(name: &str, case: Case, trials: usize) -> Result<f64> {
    let seed = name.bytes().fold(7919u64, |h, b| h.wrapping_mul(31).wrapping_add(u64::from(b)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        worst = worst.max(case(&mut rng)?);
    }
    Ok(worst)
}

/// Entries in `±[0.05, 1)`, away from zero so relu kinks are not straddled.
pub fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array {
    let data = (0..rows * cols)
        .map(|_| {
            let v: f64 = rng.gen_range(0.05..1.0);
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    Array::matrix(rows, cols, data).expect("shape matches data")
}

/// Contracts an arbitrary output with fixed weights into a scalar.
fn contract(g: &mut Graph<'_>, out: NodeId, weights: &Array) -> Result<NodeId> {
    let w = g.constant(weights.clone())?;
    let m = g.mul(out, w)?;
    g.sum(m)
}

pub fn matmul(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (m, k, n) = (rng.gen_range(1..4), rng.gen_range(1..5), rng.gen_range(1..4));
    let w = random(rng, m, n);
    let inputs = [random(rng, m, k), random(rng, k, n)];
    let report = check(
        &inputs,
        |g, x| {
            let y = g.matmul(x[0], x[1])?;
            contract(g, y, &w)
        },
        STEP,
        None,
    )?;
    Ok(report.max_relative_error)
}

pub fn elementwise(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (m, n) = (rng.gen_range(1..4), rng.gen_range(1..5));
    let w = random(rng, m, n);
    let inputs = [random(rng, m, n), random(rng, m, n), random(rng, 1, n)];
    let report = check(
        &inputs,
        |g, x| {
            let a = g.add(x[0], x[1])?;
            let b = g.add(a, x[2])?; // row broadcast
            let c = g.sub(b, x[1])?;
            let d = g.mul(c, x[0])?;
            let e = g.scale(d, -1.7)?;
            contract(g, e, &w)
        },
        STEP,
        None,
    )?;
    Ok(report.max_relative_error)
}

pub fn activations(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (m, n) = (rng.gen_range(1..3), rng.gen_range(1..6));
    let w = random(rng, m, n);
    let inputs = [random(rng, m, n)];
    let report = check(
        &inputs,
        |g, x| {
            let t = g.tanh(x[0])?;
            let s = g.sigmoid(x[0])?;
            let r = g.relu(x[0])?;
            let ts = g.add(t, s)?;
            let all = g.add(ts, r)?;
            contract(g, all, &w)
        },
        STEP,
        None,
    )?;
    Ok(report.max_relative_error)
}

pub fn concat(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (m, n1, n2) = (rng.gen_range(1..4), rng.gen_range(1..4), rng.gen_range(1..4));
    let w_cols = random(rng, m, n1 + n2);
    let w_rows = random(rng, 2 * m, n1);
    let inputs = [random(rng, m, n1), random(rng, m, n2), random(rng, m, n1)];
    let report = check(
        &inputs,
        |g, x| {
            let c1 = g.concat(&[x[0], x[1]], 1)?;
            let c0 = g.concat(&[x[0], x[2]], 0)?;
            let l1 = contract(g, c1, &w_cols)?;
            let l0 = contract(g, c0, &w_rows)?;
            g.add(l1, l0)
        },
        STEP,
        None,
    )?;
    Ok(report.max_relative_error)
}

/// `mean_rows`, `gather`, `mean`, `row_slice`, `sum`, `element`, `reshape`.
pub fn reductions(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (m, n) = (rng.gen_range(2..5), rng.gen_range(1..5));
    let w = random(rng, 1, n);
    let wg = random(rng, 3, n);
    let rows = [rng.gen_range(0..m), rng.gen_range(0..m), 0];
    let inputs = [random(rng, m, n)];
    let report = check(
        &inputs,
        |g, x| {
            let mr = g.mean_rows(x[0])?;
            let l1 = contract(g, mr, &w)?;
            let gathered = g.gather(x[0], &rows)?;
            let l2 = contract(g, gathered, &wg)?;
            let mean = g.mean(x[0])?;
            let sliced = g.row_slice(x[0], 1, m)?;
            let ssum = g.sum(sliced)?;
            let e = g.element(x[0], m * n - 1)?;
            let flat = g.reshape(x[0], &[1, m * n])?;
            let fsum = g.sum(flat)?;
            let mut acc = g.add(l1, l2)?;
            for term in [mean, ssum, e, fsum] {
                acc = g.add(acc, term)?;
            }
            Ok(acc)
        },
        STEP,
        None,
    )?;
    Ok(report.max_relative_error)
}

pub fn masked_log_softmax(rng: &mut ChaCha8Rng) -> Result<f64> {
    let n = rng.gen_range(2..7);
    let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
    let keep = rng.gen_range(0..n);
    mask[keep] = true;
    let w = random(rng, 1, n);
    let inputs = [random(rng, 1, n)];
    let report = check(
        &inputs,
        |g, x| {
            let lp = g.masked_log_softmax(x[0], &mask)?;
            // Only unmasked entries are contracted; the sentinel is constant.
            let mut acc = g.element(lp, keep)?;
            for (i, &m) in mask.iter().enumerate() {
                if m {
                    let e = g.element(lp, i)?;
                    let c = g.constant(Array::scalar(w.data()[i]))?;
                    let term = g.mul(e, c)?;
                    acc = g.add(acc, term)?;
                }
            }
            Ok(acc)
        },
        STEP,
        None,
    )?;
    Ok(report.max_relative_error)
}

pub fn gru(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (d_in, d) = (rng.gen_range(1..4), rng.gen_range(1..4));
    let mut params = ParamSet::new();
    let mut draw = |r: usize, c: usize| random(rng, r, c);
    GruSlots::register(&mut params, "gru", d_in, d, &mut draw);
    let w = random(rng, 1, d);
    let mut inputs = vec![random(rng, 1, d_in), random(rng, 1, d)];
    inputs.extend(params.values().iter().cloned());
    let report = check(
        &inputs,
        |g, x| {
            let nodes = GruNodes {
                w_z: x[2],
                u_z: x[3],
                b_z: x[4],
                w_r: x[5],
                u_r: x[6],
                b_r: x[7],
                w_h: x[8],
                u_h: x[9],
                b_h: x[10],
            };
            let h = gru_cell(g, x[0], x[1], &nodes)?;
            contract(g, h, &w)
        },
        STEP,
        None,
    )?;
    Ok(report.max_relative_error)
}

/// Three layers chained: affine + tanh, sigmoid, linear head, mean.
pub fn mlp(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (d0, d1, d2) = (rng.gen_range(1..4), rng.gen_range(1..5), rng.gen_range(1..5));
    let inputs = [
        random(rng, 2, d0),
        random(rng, d0, d1),
        random(rng, 1, d1),
        random(rng, d1, d2),
        random(rng, d2, 1),
    ];
    let report = check(
        &inputs,
        |g, x| {
            let h1 = g.matmul(x[0], x[1])?;
            let h1 = g.add(h1, x[2])?;
            let h1 = g.tanh(h1)?;
            let h2 = g.matmul(h1, x[3])?;
            let h2 = g.sigmoid(h2)?;
            let out = g.matmul(h2, x[4])?;
            g.mean(out)
        },
        STEP,
        None,
    )?;
    Ok(report.max_relative_error)
}
