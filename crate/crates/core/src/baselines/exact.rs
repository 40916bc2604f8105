//! Exact minimum-length plan for tiny instances.
//!
//! Every feasible plan is a partition of the customers into at most two
//! tours per vehicle, each tour visiting its customers in a shortest order.
//! The search therefore splits into an exact shortest-tour length per
//! customer subset (Held-Karp) and an exact assignment of subsets to tour
//! slots (dynamic programming over vehicles and remaining subsets), which
//! together cover the whole space the naive enumeration would visit.

use super::TOURS_PER_VEHICLE;
use crate::error::{CoreError, Result};
use crate::instances::ProblemInstance;
use crate::plan::{RoutePlan, Tour, VehicleRoutes, Visit};

pub const MAX_EXACT_CUSTOMERS: usize = 7;
pub const MAX_EXACT_VEHICLES: usize = 3;

/// Shortest depot-to-depot tour for every subset of customers (bit `i` is
/// node `i + 1`), with its visiting order.
fn subset_tours(instance: &ProblemInstance) -> (Vec<f64>, Vec<Vec<usize>>) {
    let m = instance.num_customers();
    let full = 1usize << m;
    let node = |i: usize| i + 1;
    // best[mask][last]: shortest path depot → … → last covering mask.
    let mut best = vec![vec![f64::INFINITY; m]; full];
    let mut parent = vec![vec![usize::MAX; m]; full];
    for i in 0..m {
        best[1 << i][i] = instance.distance(0, node(i));
    }
    for mask in 1..full {
        for last in 0..m {
            let here = best[mask][last];
            if mask & (1 << last) == 0 || here.is_infinite() {
                continue;
            }
            for next in 0..m {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let grown = mask | (1 << next);
                let cand = here + instance.distance(node(last), node(next));
                if cand < best[grown][next] {
                    best[grown][next] = cand;
                    parent[grown][next] = last;
                }
            }
        }
    }
    let mut length = vec![0.0; full];
    let mut order = vec![Vec::new(); full];
    for mask in 1..full {
        let (mut end, mut total) = (usize::MAX, f64::INFINITY);
        for last in 0..m {
            if mask & (1 << last) != 0 {
                let cand = best[mask][last] + instance.distance(node(last), 0);
                if cand < total {
                    total = cand;
                    end = last;
                }
            }
        }
        let mut seq = Vec::new();
        let (mut cur, mut at) = (mask, end);
        while at != usize::MAX {
            seq.push(node(at));
            let prev = parent[cur][at];
            cur &= !(1 << at);
            at = prev;
        }
        seq.reverse();
        length[mask] = total;
        order[mask] = seq;
    }
    (length, order)
}

/// Minimum-length plan with full single-visit deliveries and at most two
/// tours per vehicle. Refuses instances beyond the size guard.
pub fn brute_force_optimal(instance: &ProblemInstance) -> Result<RoutePlan> {
    let (m, n) = (instance.num_customers(), instance.num_vehicles());
    if m > MAX_EXACT_CUSTOMERS || n > MAX_EXACT_VEHICLES {
        return Err(CoreError::SizeGuard(format!(
            "{m} customers and {n} vehicles exceed the limit of {MAX_EXACT_CUSTOMERS} and {MAX_EXACT_VEHICLES}"
        )));
    }
    debug_assert_eq!(TOURS_PER_VEHICLE, 2);
    let full = 1usize << m;
    let (tour_len, tour_order) = subset_tours(instance);
    let demand: Vec<u32> = (0..full)
        .map(|mask| (0..m).filter(|i| mask & (1 << i) != 0).map(|i| instance.customers[i].demand).sum())
        .collect();

    // Best way for one vehicle of capacity `cap` to cover exactly `mask`
    // with zero, one or two tours; the split records the first tour.
    let vehicle_cover = |cap: u32| -> Vec<(f64, usize)> {
        (0..full)
            .map(|mask| {
                if mask == 0 {
                    return (0.0, 0);
                }
                let mut best = (f64::INFINITY, 0);
                if demand[mask] <= cap {
                    best = (tour_len[mask], mask);
                }
                // Enumerate splits a | b with a holding the lowest bit, so
                // each unordered pair is seen once.
                let low = mask & mask.wrapping_neg();
                let rest = mask & !low;
                let mut sub = rest;
                loop {
                    let a = low | sub;
                    let b = mask & !a;
                    if b != 0 && demand[a] <= cap && demand[b] <= cap {
                        let cand = tour_len[a] + tour_len[b];
                        if cand < best.0 {
                            best = (cand, a);
                        }
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & rest;
                }
                best
            })
            .collect()
    };
    let covers: Vec<Vec<(f64, usize)>> = instance.vehicles.iter().map(|v| vehicle_cover(v.capacity)).collect();

    // cost[v][mask]: cheapest cover of `mask` by vehicles 0..v.
    let mut cost = vec![vec![f64::INFINITY; full]; n + 1];
    let mut take = vec![vec![0usize; full]; n + 1];
    cost[0][0] = 0.0;
    for v in 0..n {
        for mask in 0..full {
            // This vehicle covers `sub` ⊆ mask, the earlier ones the rest.
            let mut sub = mask;
            loop {
                let prev = cost[v][mask & !sub];
                let own = covers[v][sub].0;
                if prev + own < cost[v + 1][mask] {
                    cost[v + 1][mask] = prev + own;
                    take[v + 1][mask] = sub;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
        }
    }
    if cost[n][full - 1].is_infinite() {
        return Err(CoreError::Validation(format!(
            "instance {} has no plan with at most {TOURS_PER_VEHICLE} tours per vehicle",
            instance.instance_id
        )));
    }

    let mut vehicles: Vec<VehicleRoutes> = instance
        .vehicles
        .iter()
        .map(|v| VehicleRoutes {
            capacity: v.capacity,
            tours: Vec::new(),
        })
        .collect();
    let mut mask = full - 1;
    for v in (0..n).rev() {
        let sub = take[v + 1][mask];
        let first = covers[v][sub].1;
        for part in [first, sub & !first] {
            if part != 0 {
                let visits = tour_order[part]
                    .iter()
                    .map(|&node| Visit {
                        node,
                        delivered: instance.demand(node),
                    })
                    .collect();
                vehicles[v].tours.push(Tour::from_visits(visits));
            }
        }
        mask &= !sub;
    }
    Ok(RoutePlan::from_tours(instance, vehicles))
}
