//! Sequential multi-vehicle environment.
//!
//! Vehicles act one at a time in fixed fleet order; a round is complete once
//! every vehicle has taken one action. Deliveries may be split: a visit
//! hands over `min(load, remaining demand)`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{CoreError, Result};
use crate::instances::ProblemInstance;
use crate::plan::{RoutePlan, Tour, VehicleRoutes, Visit};

/// Feasibility of every node (index 0 is the depot) for the acting vehicle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionMask {
    pub feasible: Vec<bool>,
}

impl ActionMask {
    pub fn is_feasible(&self, node: usize) -> bool {
        self.feasible.get(node).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.feasible.iter().filter(|&&f| f).count()
    }

    pub fn feasible_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.feasible.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i)
    }
}

/// Default horizon: two rounds per customer.
pub fn default_round_cap(num_customers: usize) -> usize {
    2 * num_customers
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState<'a> {
    pub instance: &'a ProblemInstance,
    /// Remaining demand per customer; index `i` is node `i + 1`.
    pub remaining_demands: Vec<u32>,
    pub loads: Vec<u32>,
    /// Node index each vehicle currently occupies.
    pub positions: Vec<usize>,
    /// Zero-based index of the vehicle that acts next.
    pub acting_agent: usize,
    pub round: usize,
    pub round_cap: usize,
    /// Every action per vehicle, depot returns included.
    pub visit_log: Vec<Vec<Visit>>,
    pub accumulated_cost: f64,
}

impl<'a> EnvState<'a> {
    pub fn reset(instance: &'a ProblemInstance) -> Self {
        Self::with_round_cap(instance, default_round_cap(instance.num_customers()))
    }

    pub fn with_round_cap(instance: &'a ProblemInstance, round_cap: usize) -> Self {
        let n = instance.num_vehicles();
        Self {
            instance,
            remaining_demands: instance.customers.iter().map(|c| c.demand).collect(),
            loads: instance.capacities(),
            positions: vec![0; n],
            acting_agent: 0,
            round: 0,
            round_cap,
            visit_log: vec![Vec::new(); n],
            accumulated_cost: 0.0,
        }
    }

    pub fn total_remaining(&self) -> u32 {
        self.remaining_demands.iter().sum()
    }

    pub fn remaining(&self, node: usize) -> u32 {
        if node == 0 {
            0
        } else {
            self.remaining_demands[node - 1]
        }
    }

    pub fn total_delivered(&self) -> u32 {
        self.visit_log.iter().flatten().map(|v| v.delivered).sum()
    }

    pub fn num_vehicles(&self) -> usize {
        self.loads.len()
    }

    /// Mask for the acting vehicle:
    /// customers with no remaining demand are closed; an empty vehicle can
    /// only head home; a vehicle never stays on its current node, except
    /// that idling at the depot is allowed once all demand is served.
    pub fn feasible_actions(&self) -> ActionMask {
        let j = self.acting_agent;
        let here = self.positions[j];
        let load = self.loads[j];
        let mut feasible = vec![false; self.instance.num_nodes()];
        if load > 0 {
            for (i, &d) in self.remaining_demands.iter().enumerate() {
                feasible[i + 1] = d > 0 && here != i + 1;
            }
        }
        feasible[0] = if here == 0 {
            self.total_remaining() == 0
        } else {
            true
        };
        ActionMask { feasible }
    }

    /// Moves the acting vehicle to `action` and returns the leg length.
    pub fn step(&mut self, action: usize) -> Result<f64> {
        if !self.feasible_actions().is_feasible(action) {
            return Err(CoreError::Contract(format!(
                "vehicle {} cannot move from node {} to node {action}",
                self.acting_agent, self.positions[self.acting_agent]
            )));
        }
        let j = self.acting_agent;
        let leg = self.instance.distance(self.positions[j], action);
        let delivered = if action == 0 {
            self.loads[j] = self.instance.vehicles[j].capacity;
            0
        } else {
            let remaining = &mut self.remaining_demands[action - 1];
            let amount = self.loads[j].min(*remaining);
            *remaining -= amount;
            self.loads[j] -= amount;
            amount
        };
        self.positions[j] = action;
        self.visit_log[j].push(Visit {
            node: action,
            delivered,
        });
        self.accumulated_cost += leg;
        self.acting_agent = (j + 1) % self.num_vehicles();
        if self.acting_agent == 0 {
            self.round += 1;
        }
        Ok(leg)
    }

    /// Hash of the dynamic part of the state (demands, loads, positions,
    /// acting vehicle, round).
    pub fn snapshot_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.remaining_demands.hash(&mut h);
        self.loads.hash(&mut h);
        self.positions.hash(&mut h);
        self.acting_agent.hash(&mut h);
        self.round.hash(&mut h);
        h.finish()
    }

    pub fn all_served_and_home(&self) -> bool {
        self.total_remaining() == 0 && self.positions.iter().all(|&p| p == 0)
    }

    pub fn is_terminal(&self) -> bool {
        self.all_served_and_home() || self.round >= self.round_cap
    }

    /// Leg-by-leg length implied by the visit log.
    pub fn recomputed_cost(&self) -> f64 {
        self.visit_log
            .iter()
            .map(|log| {
                let mut at = 0;
                let mut total = 0.0;
                for v in log {
                    total += self.instance.distance(at, v.node);
                    at = v.node;
                }
                total
            })
            .sum()
    }

    /// Conservation checks that hold after every step: delivered plus
    /// remaining demand equals the instance total, loads stay within
    /// `[0, capacity]`, and the running cost matches the visit log.
    pub fn check_invariants(&self) -> Result<()> {
        let bad = |msg: String| Err(CoreError::Contract(msg));
        let total = self.instance.total_demand();
        if self.total_remaining() + self.total_delivered() != total {
            return bad(format!(
                "remaining {} plus delivered {} differs from total demand {total}",
                self.total_remaining(),
                self.total_delivered()
            ));
        }
        for (j, (&load, v)) in self.loads.iter().zip(&self.instance.vehicles).enumerate() {
            if load > v.capacity {
                return bad(format!("vehicle {j} carries {load} over capacity {}", v.capacity));
            }
        }
        let recomputed = self.recomputed_cost();
        if (recomputed - self.accumulated_cost).abs() > 1e-9 {
            return bad(format!(
                "accumulated cost {} disagrees with recomputed {recomputed}",
                self.accumulated_cost
            ));
        }
        Ok(())
    }

    /// Extracts tours from the visit log, closing any tour still open with a
    /// return to the depot. Unserved demand marks the plan infeasible.
    pub fn finalize(&self) -> Result<RoutePlan> {
        if !self.is_terminal() {
            return Err(CoreError::Contract("finalize called on a non-terminal state".into()));
        }
        let mut vehicles = Vec::with_capacity(self.num_vehicles());
        let mut return_legs = 0.0;
        for (j, log) in self.visit_log.iter().enumerate() {
            let mut tours = Vec::new();
            let mut current = Vec::new();
            for v in log {
                if v.node == 0 {
                    if !current.is_empty() {
                        tours.push(Tour::from_visits(std::mem::take(&mut current)));
                    }
                } else {
                    current.push(*v);
                }
            }
            if !current.is_empty() {
                tours.push(Tour::from_visits(current));
            }
            return_legs += self.instance.distance(self.positions[j], 0);
            vehicles.push(VehicleRoutes {
                capacity: self.instance.vehicles[j].capacity,
                tours,
            });
        }
        let residual = self.total_remaining();
        Ok(RoutePlan {
            instance_id: self.instance.instance_id.clone(),
            vehicles,
            total_length: self.accumulated_cost + return_legs,
            feasible: residual == 0,
            residual_demand: residual,
            slot_overflow: false,
        })
    }
}
