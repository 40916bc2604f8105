//! Route plans: per-vehicle depot-to-depot tours with delivered amounts.

use crate::error::{CoreError, Result};
use crate::instances::{instance_from_value, write_instance, ProblemInstance};
use crate::textfmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Visit {
    pub node: usize,
    pub delivered: u32,
}

/// One depot-to-depot tour. Only customer stops are stored; the depot at both
/// ends is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tour {
    pub visits: Vec<Visit>,
}

impl Tour {
    pub fn from_visits(visits: Vec<Visit>) -> Self {
        Self { visits }
    }

    /// Full node sequence including the depot at both ends.
    pub fn node_sequence(&self) -> Vec<usize> {
        let mut seq = Vec::with_capacity(self.visits.len() + 2);
        seq.push(0);
        seq.extend(self.visits.iter().map(|v| v.node));
        seq.push(0);
        seq
    }

    pub fn delivered(&self) -> u32 {
        self.visits.iter().map(|v| v.delivered).sum()
    }

    pub fn length(&self, instance: &ProblemInstance) -> f64 {
        sequence_length(&self.node_sequence(), instance)
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }
}

pub fn sequence_length(nodes: &[usize], instance: &ProblemInstance) -> f64 {
    nodes.windows(2).map(|w| instance.distance(w[0], w[1])).sum()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VehicleRoutes {
    pub capacity: u32,
    pub tours: Vec<Tour>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutePlan {
    pub instance_id: String,
    pub vehicles: Vec<VehicleRoutes>,
    pub total_length: f64,
    /// `false` when some demand was left unserved (truncated episode).
    pub feasible: bool,
    pub residual_demand: u32,
    /// A heuristic ran out of its per-vehicle tour budget and used extra
    /// tours on the largest vehicle.
    pub slot_overflow: bool,
}

impl RoutePlan {
    /// Plan from tours, with `total_length` computed from coordinates.
    pub fn from_tours(instance: &ProblemInstance, vehicles: Vec<VehicleRoutes>) -> Self {
        let mut plan = Self {
            instance_id: instance.instance_id.clone(),
            vehicles,
            total_length: 0.0,
            feasible: true,
            residual_demand: 0,
            slot_overflow: false,
        };
        plan.total_length = plan.recompute_length(instance);
        let delivered: u32 = plan.tours().map(Tour::delivered).sum();
        plan.residual_demand = instance.total_demand().saturating_sub(delivered);
        plan.feasible = plan.residual_demand == 0;
        plan
    }

    pub fn tours(&self) -> impl Iterator<Item = &Tour> {
        self.vehicles.iter().flat_map(|v| v.tours.iter())
    }

    pub fn num_tours(&self) -> usize {
        self.tours().count()
    }

    pub fn recompute_length(&self, instance: &ProblemInstance) -> f64 {
        self.tours().map(|t| t.length(instance)).sum()
    }

    /// Checks capacity per tour and that deliveries match every demand
    /// exactly. With `single_visit`, a customer may appear in one stop only.
    pub fn check(&self, instance: &ProblemInstance, single_visit: bool) -> Result<()> {
        let bad = |msg: String| Err(CoreError::Contract(msg));
        if self.vehicles.len() != instance.num_vehicles() {
            return bad(format!(
                "plan has {} vehicles, instance {}",
                self.vehicles.len(),
                instance.num_vehicles()
            ));
        }
        let mut served = vec![0u32; instance.num_nodes()];
        let mut stops = vec![0usize; instance.num_nodes()];
        for (j, v) in self.vehicles.iter().enumerate() {
            for (t, tour) in v.tours.iter().enumerate() {
                if tour.delivered() > v.capacity {
                    return bad(format!(
                        "vehicle {j} tour {t} delivers {} over capacity {}",
                        tour.delivered(),
                        v.capacity
                    ));
                }
                for visit in &tour.visits {
                    if visit.node == 0 || visit.node >= instance.num_nodes() {
                        return bad(format!("vehicle {j} tour {t} visits invalid node {}", visit.node));
                    }
                    served[visit.node] += visit.delivered;
                    stops[visit.node] += 1;
                }
            }
        }
        for node in 1..instance.num_nodes() {
            let expected = instance.demand(node);
            if self.feasible && served[node] != expected {
                return bad(format!("customer {node} received {} of {expected}", served[node]));
            }
            if served[node] > expected {
                return bad(format!("customer {node} over-served: {} of {expected}", served[node]));
            }
            if single_visit && stops[node] > 1 {
                return bad(format!("customer {node} visited {} times", stops[node]));
            }
        }
        let recomputed = self.recompute_length(instance);
        if (recomputed - self.total_length).abs() > 1e-9 {
            return bad(format!(
                "total_length {} disagrees with recomputed {recomputed}",
                self.total_length
            ));
        }
        Ok(())
    }
}

/// Objective value of a plan: total Euclidean length.
pub fn episode_cost(plan: &RoutePlan) -> f64 {
    plan.total_length
}

/// Plan document: the instance (for coordinates) plus tours as explicit
/// node sequences with delivered amounts per customer stop.
pub fn write_plan(plan: &RoutePlan, instance: &ProblemInstance) -> String {
    use textfmt::num;
    let mut out = String::from("{\n");
    out.push_str(&format!("  \"instance_id\": {},\n", textfmt::string(&plan.instance_id)));
    out.push_str(&format!("  \"total_length\": {},\n", num(plan.total_length)));
    out.push_str(&format!("  \"feasible\": {},\n", plan.feasible));
    out.push_str(&format!("  \"residual_demand\": {},\n", plan.residual_demand));
    out.push_str(&format!("  \"slot_overflow\": {},\n", plan.slot_overflow));
    out.push_str("  \"vehicles\": [\n");
    for (j, v) in plan.vehicles.iter().enumerate() {
        let vehicle_length: f64 = v.tours.iter().map(|t| t.length(instance)).sum();
        out.push_str(&format!(
            "    {{\"capacity\": {}, \"length\": {}, \"tours\": [",
            v.capacity,
            num(vehicle_length)
        ));
        for (t, tour) in v.tours.iter().enumerate() {
            let nodes: Vec<String> = tour.node_sequence().iter().map(usize::to_string).collect();
            let delivered: Vec<String> = tour.visits.iter().map(|x| x.delivered.to_string()).collect();
            let sep = if t + 1 == v.tours.len() { "" } else { "," };
            out.push_str(&format!(
                "\n      {{\"nodes\": [{}], \"delivered\": [{}], \"length\": {}}}{sep}",
                nodes.join(", "),
                delivered.join(", "),
                num(tour.length(instance))
            ));
        }
        let sep = if j + 1 == plan.vehicles.len() { "" } else { "," };
        if v.tours.is_empty() {
            out.push_str(&format!("]}}{sep}\n"));
        } else {
            out.push_str(&format!("\n    ]}}{sep}\n"));
        }
    }
    out.push_str("  ],\n  \"instance\": ");
    let inst = write_instance(instance);
    out.push_str(&inst.trim_end().replace('\n', "\n  "));
    out.push_str("\n}\n");
    out
}

pub fn read_plan(text: &str) -> Result<(RoutePlan, ProblemInstance)> {
    use textfmt::{as_array, as_bool, as_f64, as_str, as_u32, as_usize, field};

    let doc = textfmt::parse_document(text)?;
    let instance = instance_from_value(field(&doc, "instance", "")?, "instance")?;
    let instance_id = as_str(field(&doc, "instance_id", "")?, "instance_id")?.to_string();
    let total_length = as_f64(field(&doc, "total_length", "")?, "total_length")?;
    let feasible = as_bool(field(&doc, "feasible", "")?, "feasible")?;
    let residual_demand = as_u32(field(&doc, "residual_demand", "")?, "residual_demand")?;
    let slot_overflow = match doc.get("slot_overflow") {
        Some(v) => as_bool(v, "slot_overflow")?,
        None => false,
    };

    let mut vehicles = Vec::new();
    for (j, v) in as_array(field(&doc, "vehicles", "")?, "vehicles")?.iter().enumerate() {
        let here = format!("vehicles[{j}]");
        let capacity = as_u32(field(v, "capacity", &here)?, &format!("{here}.capacity"))?;
        let mut tours = Vec::new();
        for (t, tour) in as_array(field(v, "tours", &here)?, &format!("{here}.tours"))?.iter().enumerate() {
            let tp = format!("{here}.tours[{t}]");
            let nodes = as_array(field(tour, "nodes", &tp)?, &format!("{tp}.nodes"))?
                .iter()
                .enumerate()
                .map(|(k, n)| as_usize(n, &format!("{tp}.nodes[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            let delivered = as_array(field(tour, "delivered", &tp)?, &format!("{tp}.delivered"))?
                .iter()
                .enumerate()
                .map(|(k, n)| as_u32(n, &format!("{tp}.delivered[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            tours.push(tour_from_sequence(&nodes, &delivered, &tp, &instance)?);
        }
        vehicles.push(VehicleRoutes { capacity, tours });
    }
    if vehicles.len() != instance.num_vehicles() {
        return Err(CoreError::parse("vehicles", "vehicle count does not match the instance"));
    }
    Ok((
        RoutePlan {
            instance_id,
            vehicles,
            total_length,
            feasible,
            residual_demand,
            slot_overflow,
        },
        instance,
    ))
}

fn tour_from_sequence(nodes: &[usize], delivered: &[u32], path: &str, instance: &ProblemInstance) -> Result<Tour> {
    if nodes.len() < 2 || nodes[0] != 0 || nodes[nodes.len() - 1] != 0 {
        return Err(CoreError::parse(
            format!("{path}.nodes"),
            "a tour must start and end at the depot (node 0)",
        ));
    }
    let inner = &nodes[1..nodes.len() - 1];
    if inner.len() != delivered.len() {
        return Err(CoreError::parse(
            format!("{path}.delivered"),
            "one delivered amount per customer stop is required",
        ));
    }
    let mut visits = Vec::with_capacity(inner.len());
    for (k, (&node, &amount)) in inner.iter().zip(delivered).enumerate() {
        if node == 0 || node >= instance.num_nodes() {
            return Err(CoreError::parse(format!("{path}.nodes[{}]", k + 1), format!("invalid customer node {node}")));
        }
        visits.push(Visit { node, delivered: amount });
    }
    Ok(Tour { visits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{Customer, Point};

    fn line_instance() -> ProblemInstance {
        ProblemInstance::new(
            "line",
            Point::new(0.0, 0.0),
            vec![
                Customer {
                    coord: Point::new(1.0, 0.0),
                    demand: 3,
                },
                Customer {
                    coord: Point::new(0.0, 1.0),
                    demand: 4,
                },
            ],
            &[10, 12],
        )
        .unwrap()
    }

    #[test]
    fn out_and_back_costs() {
        let inst = line_instance();
        let one = RoutePlan::from_tours(
            &inst,
            vec![
                VehicleRoutes {
                    capacity: 10,
                    tours: vec![Tour::from_visits(vec![Visit { node: 1, delivered: 3 }])],
                },
                VehicleRoutes {
                    capacity: 12,
                    tours: vec![],
                },
            ],
        );
        assert_eq!(episode_cost(&one), 2.0);
        assert!(!one.feasible);
        assert_eq!(one.residual_demand, 4);

        let two = RoutePlan::from_tours(
            &inst,
            vec![
                VehicleRoutes {
                    capacity: 10,
                    tours: vec![Tour::from_visits(vec![Visit { node: 1, delivered: 3 }])],
                },
                VehicleRoutes {
                    capacity: 12,
                    tours: vec![Tour::from_visits(vec![Visit { node: 2, delivered: 4 }])],
                },
            ],
        );
        assert_eq!(episode_cost(&two), 4.0);
        two.check(&inst, true).unwrap();
    }

    #[test]
    fn plan_document_round_trip() {
        let inst = line_instance();
        let plan = RoutePlan::from_tours(
            &inst,
            vec![
                VehicleRoutes {
                    capacity: 10,
                    tours: vec![Tour::from_visits(vec![
                        Visit { node: 2, delivered: 4 },
                        Visit { node: 1, delivered: 3 },
                    ])],
                },
                VehicleRoutes {
                    capacity: 12,
                    tours: vec![],
                },
            ],
        );
        let text = write_plan(&plan, &inst);
        let (back, back_inst) = read_plan(&text).unwrap();
        assert_eq!(back, plan);
        assert_eq!(back_inst, inst);
    }

    #[test]
    fn check_catches_over_capacity() {
        let inst = line_instance();
        let plan = RoutePlan::from_tours(
            &inst,
            vec![
                VehicleRoutes {
                    capacity: 5,
                    tours: vec![Tour::from_visits(vec![
                        Visit { node: 1, delivered: 3 },
                        Visit { node: 2, delivered: 4 },
                    ])],
                },
                VehicleRoutes {
                    capacity: 12,
                    tours: vec![],
                },
            ],
        );
        assert!(plan.check(&inst, true).is_err());
    }
}
