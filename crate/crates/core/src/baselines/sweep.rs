use std::f64::consts::TAU;

use super::two_opt::{instance_coords, two_opt};
use super::SlotFiller;
use crate::instances::{Point, ProblemInstance};
use crate::plan::RoutePlan;

/// Counter-clockwise angle of `p` around `origin`, in `[0, 2π)`.
pub fn polar_angle(origin: Point, p: Point) -> f64 {
    let a = (p.y - origin.y).atan2(p.x - origin.x);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Nearest-neighbour order from the depot over `cluster` (ties: lower node).
fn nearest_neighbour(instance: &ProblemInstance, cluster: &[usize]) -> Vec<usize> {
    let mut left = cluster.to_vec();
    let mut seq = vec![0];
    let mut at = 0;
    while !left.is_empty() {
        let (pos, _) = left
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| instance.distance(at, a).total_cmp(&instance.distance(at, b)).then(a.cmp(&b)))
            .expect("non-empty");
        at = left.remove(pos);
        seq.push(at);
    }
    seq.push(0);
    seq
}

/// Sweep heuristic: customers ordered by angle around the depot (ties by
/// radius, then index) are cut into clusters that fit the capacity of the
/// next tour slot; each cluster is routed by nearest neighbour and 2-opt.
pub fn sweep(instance: &ProblemInstance) -> RoutePlan {
    let coords = instance_coords(instance);
    let depot = instance.depot;
    let mut order: Vec<usize> = (1..instance.num_nodes()).collect();
    order.sort_by(|&a, &b| {
        polar_angle(depot, coords[a])
            .total_cmp(&polar_angle(depot, coords[b]))
            .then(instance.distance(0, a).total_cmp(&instance.distance(0, b)))
            .then(a.cmp(&b))
    });
    let mut slots = SlotFiller::new(instance);
    let mut cluster: Vec<usize> = Vec::new();
    let mut load = 0;
    let close = |cluster: &mut Vec<usize>, slots: &mut SlotFiller<'_>| {
        let routed = two_opt(&nearest_neighbour(instance, cluster), &coords);
        slots.push(&routed[1..routed.len() - 1]);
        cluster.clear();
    };
    for c in order {
        let d = instance.demand(c);
        if !cluster.is_empty() && load + d > slots.capacity() {
            close(&mut cluster, &mut slots);
            load = 0;
        }
        cluster.push(c);
        load += d;
    }
    if !cluster.is_empty() {
        close(&mut cluster, &mut slots);
    }
    slots.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate_instance, Customer, ExperimentConfig};

    #[test]
    fn angle_of_diagonal() {
        let a = polar_angle(Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        assert!((a.to_degrees() - 45.0).abs() < 1e-12);
        let b = polar_angle(Point::new(0.5, 0.5), Point::new(0.5, 0.0));
        assert!((b.to_degrees() - 270.0).abs() < 1e-12);
    }

    #[test]
    fn first_cluster_takes_two_smallest_angles() {
        let at = |deg: f64| {
            let r = deg.to_radians();
            Customer {
                coord: Point::new(0.5 + 0.3 * r.cos(), 0.5 + 0.3 * r.sin()),
                demand: 5,
            }
        };
        let customers = vec![at(190.0), at(350.0), at(80.0), at(10.0)];
        let inst = ProblemInstance::new("sw", Point::new(0.5, 0.5), customers, &[10]).unwrap();
        let plan = sweep(&inst);
        let mut first: Vec<usize> = plan.vehicles[0].tours[0].visits.iter().map(|v| v.node).collect();
        first.sort_unstable();
        // Nodes 4 (10°) and 3 (80°).
        assert_eq!(first, vec![3, 4]);
        assert_eq!(plan.num_tours(), 2);
        plan.check(&inst, true).unwrap();
    }

    #[test]
    fn single_customer_out_and_back() {
        let c = Customer {
            coord: Point::new(0.9, 0.1),
            demand: 3,
        };
        let inst = ProblemInstance::new("one", Point::new(0.1, 0.1), vec![c], &[10]).unwrap();
        let plan = sweep(&inst);
        assert_eq!(plan.num_tours(), 1);
        assert!((plan.total_length - 1.6).abs() < 1e-12);
    }

    #[test]
    fn plans_are_feasible_and_deterministic() {
        for stream in 0..100 {
            let i = generate_instance(&ExperimentConfig::vrp50(), stream).unwrap();
            let plan = sweep(&i);
            plan.check(&i, true).unwrap();
            assert_eq!(plan, sweep(&i));
        }
    }
}
