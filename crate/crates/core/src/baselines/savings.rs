use super::two_opt::{instance_coords, two_opt};
use super::{load_of, SlotFiller};
use crate::instances::ProblemInstance;
use crate::plan::{sequence_length, RoutePlan};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SavingsPair {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// `s(i, j) = d(0, i) + d(0, j) − d(i, j)` for every pair of `customers`,
/// largest first; ties keep the lexicographic pair order.
pub fn savings(instance: &ProblemInstance, customers: &[usize]) -> Vec<SavingsPair> {
    let mut pairs = Vec::with_capacity(customers.len() * customers.len().saturating_sub(1) / 2);
    for (a, &i) in customers.iter().enumerate() {
        for &j in &customers[a + 1..] {
            let value = instance.distance(0, i) + instance.distance(0, j) - instance.distance(i, j);
            pairs.push(SavingsPair { i, j, value });
        }
    }
    pairs.sort_by(|x, y| y.value.total_cmp(&x.value));
    pairs
}

/// Parallel savings merge over `customers` with route capacity `capacity`.
/// Returns customer sequences (depot excluded).
fn merge_routes(instance: &ProblemInstance, customers: &[usize], capacity: u32) -> Vec<Vec<usize>> {
    let n = instance.num_nodes();
    // route_of[c] = index into `routes` of the route holding customer c.
    let mut route_of = vec![usize::MAX; n];
    let mut routes: Vec<Option<Vec<usize>>> = Vec::with_capacity(customers.len());
    let mut loads = Vec::with_capacity(customers.len());
    for (r, &c) in customers.iter().enumerate() {
        route_of[c] = r;
        routes.push(Some(vec![c]));
        loads.push(instance.demand(c));
    }
    for pair in savings(instance, customers) {
        if pair.value <= 0.0 {
            break;
        }
        let (ri, rj) = (route_of[pair.i], route_of[pair.j]);
        if ri == rj || loads[ri] + loads[rj] > capacity {
            continue;
        }
        let (a, b) = (routes[ri].as_ref().unwrap(), routes[rj].as_ref().unwrap());
        let i_end = a.first() == Some(&pair.i) || a.last() == Some(&pair.i);
        let j_end = b.first() == Some(&pair.j) || b.last() == Some(&pair.j);
        if !i_end || !j_end {
            continue;
        }
        let mut left = routes[ri].take().unwrap();
        let mut right = routes[rj].take().unwrap();
        if left.last() != Some(&pair.i) {
            left.reverse();
        }
        if right.first() != Some(&pair.j) {
            right.reverse();
        }
        for &c in &right {
            route_of[c] = ri;
        }
        left.extend(right);
        loads[ri] += loads[rj];
        routes[ri] = Some(left);
    }
    routes.into_iter().flatten().collect()
}

/// Clarke-Wright savings with successive approximation: each round runs the
/// savings merge over the still-unserved customers with the capacity of the
/// next tour slot, keeps the route carrying the most demand (ties: shorter,
/// then smallest customer index), and improves it with 2-opt.
pub fn clarke_wright(instance: &ProblemInstance) -> RoutePlan {
    let coords = instance_coords(instance);
    let mut unserved: Vec<usize> = (1..instance.num_nodes()).collect();
    let mut slots = SlotFiller::new(instance);
    while !unserved.is_empty() {
        let routes = merge_routes(instance, &unserved, slots.capacity());
        let route_len = |r: &[usize]| {
            let mut seq = vec![0];
            seq.extend_from_slice(r);
            seq.push(0);
            sequence_length(&seq, instance)
        };
        let best = routes
            .iter()
            .min_by(|a, b| {
                load_of(instance, b)
                    .cmp(&load_of(instance, a))
                    .then(route_len(a).total_cmp(&route_len(b)))
                    .then(a.iter().min().cmp(&b.iter().min()))
            })
            .expect("unserved customers form at least one route");
        let mut seq = vec![0];
        seq.extend_from_slice(best);
        seq.push(0);
        let improved = two_opt(&seq, &coords);
        slots.push(&improved[1..improved.len() - 1]);
        unserved.retain(|c| !best.contains(c));
    }
    slots.finish()
}
