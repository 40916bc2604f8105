//! Classical comparators: savings, sweep, random play and an exact solver
//! for tiny instances.
//!
//! The heuristics deliver each customer's full demand in a single stop and
//! give every vehicle at most [`TOURS_PER_VEHICLE`] tours, filled largest
//! vehicle first.

mod exact;
mod random;
mod savings;
mod sweep;
mod two_opt;

pub use exact::{brute_force_optimal, MAX_EXACT_CUSTOMERS, MAX_EXACT_VEHICLES};
pub use random::random_policy;
pub use savings::{clarke_wright, savings, SavingsPair};
pub use sweep::{polar_angle, sweep};
pub use two_opt::{instance_coords, two_opt};

use crate::instances::ProblemInstance;
use crate::plan::{RoutePlan, Tour, VehicleRoutes, Visit};

pub const TOURS_PER_VEHICLE: usize = 2;

/// Tour slots in fill order: vehicles by descending capacity (fleet order
/// among equals), each contributing [`TOURS_PER_VEHICLE`] consecutive slots.
pub(crate) struct SlotFiller<'a> {
    instance: &'a ProblemInstance,
    order: Vec<usize>,
    next: usize,
    tours: Vec<Vec<Tour>>,
    overflow: bool,
}

impl<'a> SlotFiller<'a> {
    pub(crate) fn new(instance: &'a ProblemInstance) -> Self {
        let mut vehicles: Vec<usize> = (0..instance.num_vehicles()).collect();
        vehicles.sort_by_key(|&j| std::cmp::Reverse(instance.vehicles[j].capacity));
        let order = vehicles
            .iter()
            .flat_map(|&j| std::iter::repeat_n(j, TOURS_PER_VEHICLE))
            .collect();
        Self {
            instance,
            order,
            next: 0,
            tours: vec![Vec::new(); instance.num_vehicles()],
            overflow: false,
        }
    }

    /// Vehicle the next tour goes to; once the slots run out, the largest.
    pub(crate) fn vehicle(&self) -> usize {
        self.order.get(self.next).copied().unwrap_or(self.order[0])
    }

    pub(crate) fn capacity(&self) -> u32 {
        self.instance.vehicles[self.vehicle()].capacity
    }

    /// Appends a tour (customer nodes, depot excluded) delivering full demands.
    pub(crate) fn push(&mut self, customers: &[usize]) {
        if self.next >= self.order.len() {
            self.overflow = true;
        }
        let visits = customers
            .iter()
            .map(|&node| Visit {
                node,
                delivered: self.instance.demand(node),
            })
            .collect();
        let j = self.vehicle();
        self.tours[j].push(Tour::from_visits(visits));
        self.next += 1;
    }

    pub(crate) fn finish(self) -> RoutePlan {
        let vehicles = self
            .tours
            .into_iter()
            .enumerate()
            .map(|(j, tours)| VehicleRoutes {
                capacity: self.instance.vehicles[j].capacity,
                tours,
            })
            .collect();
        let mut plan = RoutePlan::from_tours(self.instance, vehicles);
        plan.slot_overflow = self.overflow;
        plan
    }
}

/// Demand of a set of customer nodes.
pub(crate) fn load_of(instance: &ProblemInstance, customers: &[usize]) -> u32 {
    customers.iter().map(|&c| instance.demand(c)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{Customer, Point};

    #[test]
    fn slots_fill_largest_vehicle_first_then_overflow() {
        let customers = (0..6)
            .map(|k| Customer {
                coord: Point::new(0.1 * k as f64, 0.5),
                demand: 9,
            })
            .collect();
        let inst = ProblemInstance::new("s", Point::new(0.5, 0.5), customers, &[10, 20]).unwrap();
        let mut filler = SlotFiller::new(&inst);
        let mut seen = Vec::new();
        for node in 1..=6 {
            seen.push(filler.vehicle());
            filler.push(&[node]);
        }
        assert_eq!(seen, vec![1, 1, 0, 0, 1, 1]);
        let plan = filler.finish();
        assert!(plan.slot_overflow);
        assert_eq!(plan.vehicles[1].tours.len(), 4);
        plan.check(&inst, true).unwrap();
    }
}
