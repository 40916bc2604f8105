//! Problem data model, the random instance distribution and the instance
//! text document.
//!
//! Node indexing used everywhere downstream: node `0` is the depot, node `i`
//! (1-based) is `customers[i - 1]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng::{stream_rng, Domain, TEST_STREAM_BASE};
use crate::textfmt;

pub const MIN_DEMAND: u32 = 1;
pub const MAX_DEMAND: u32 = 9;
/// Smallest admissible vehicle capacity; every demand must fit strictly.
pub const MIN_CAPACITY: u32 = MAX_DEMAND + 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn in_unit_square(self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Customer {
    pub coord: Point,
    pub demand: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    pub capacity: u32,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub instance_id: String,
    pub depot: Point,
    pub customers: Vec<Customer>,
    pub vehicles: Vec<Vehicle>,
}

impl ProblemInstance {
    /// Builds and validates an instance with every vehicle parked at the depot.
    pub fn new(
        instance_id: impl Into<String>,
        depot: Point,
        customers: Vec<Customer>,
        capacities: &[u32],
    ) -> Result<Self> {
        let instance = Self {
            instance_id: instance_id.into(),
            depot,
            customers,
            vehicles: capacities
                .iter()
                .map(|&capacity| Vehicle {
                    capacity,
                    position: depot,
                })
                .collect(),
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CoreError::Validation(msg));
        if self.customers.is_empty() {
            return bad("an instance needs at least one customer".into());
        }
        if self.vehicles.is_empty() {
            return bad("an instance needs at least one vehicle".into());
        }
        if !self.depot.in_unit_square() {
            return bad(format!("depot {:?} outside the unit square", self.depot));
        }
        let min_capacity = self.vehicles.iter().map(|v| v.capacity).min().unwrap_or(0);
        for (i, c) in self.customers.iter().enumerate() {
            if !c.coord.in_unit_square() {
                return bad(format!("customer {} at {:?} outside the unit square", i + 1, c.coord));
            }
            if !(MIN_DEMAND..=MAX_DEMAND).contains(&c.demand) {
                return bad(format!("customer {} demand {} outside 1..=9", i + 1, c.demand));
            }
            if c.demand >= min_capacity {
                return bad(format!(
                    "customer {} demand {} is not below every capacity",
                    i + 1,
                    c.demand
                ));
            }
        }
        for (j, v) in self.vehicles.iter().enumerate() {
            if v.position != self.depot {
                return bad(format!("vehicle {j} does not start at the depot"));
            }
        }
        Ok(())
    }

    pub fn num_customers(&self) -> usize {
        self.customers.len()
    }

    pub fn num_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    /// Customers plus the depot.
    pub fn num_nodes(&self) -> usize {
        self.customers.len() + 1
    }

    pub fn coord(&self, node: usize) -> Point {
        if node == 0 {
            self.depot
        } else {
            self.customers[node - 1].coord
        }
    }

    /// Demand of a node; the depot has none.
    pub fn demand(&self, node: usize) -> u32 {
        if node == 0 {
            0
        } else {
            self.customers[node - 1].demand
        }
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.coord(a).distance(self.coord(b))
    }

    pub fn capacities(&self) -> Vec<u32> {
        self.vehicles.iter().map(|v| v.capacity).collect()
    }

    pub fn total_demand(&self) -> u32 {
        total_demand(self)
    }
}

pub fn total_demand(instance: &ProblemInstance) -> u32 {
    instance.customers.iter().map(|c| c.demand).sum()
}

/// One row of the experiment table: fleet and instance size plus the seed
/// that fixes the test set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub num_customers: usize,
    pub num_vehicles: usize,
    pub capacities: Vec<u32>,
    pub test_set_size: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CoreError::Validation(msg));
        if self.num_customers == 0 {
            return bad("num_customers must be at least 1".into());
        }
        if self.num_vehicles == 0 {
            return bad("num_vehicles must be at least 1".into());
        }
        if self.capacities.len() != self.num_vehicles {
            return bad(format!(
                "capacities lists {} entries but num_vehicles is {}",
                self.capacities.len(),
                self.num_vehicles
            ));
        }
        if let Some(c) = self.capacities.iter().find(|&&c| c < MIN_CAPACITY) {
            return bad(format!("capacity {c} must be at least {MIN_CAPACITY}"));
        }
        if self.test_set_size == 0 {
            return bad("test_set_size must be at least 1".into());
        }
        Ok(())
    }

    fn preset(name: &str, m: usize, capacities: [u32; 3]) -> Self {
        Self {
            name: name.to_string(),
            num_customers: m,
            num_vehicles: 3,
            capacities: capacities.to_vec(),
            test_set_size: 1000,
            seed: 1234,
        }
    }

    pub fn vrp10() -> Self {
        Self::preset("VRP10", 10, [10, 15, 20])
    }

    pub fn vrp20() -> Self {
        Self::preset("VRP20", 20, [20, 30, 35])
    }

    pub fn vrp50() -> Self {
        Self::preset("VRP50", 50, [60, 70, 80])
    }

    pub fn vrp80() -> Self {
        Self::preset("VRP80", 80, [80, 100, 120])
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "VRP10" => Some(Self::vrp10()),
            "VRP20" => Some(Self::vrp20()),
            "VRP50" => Some(Self::vrp50()),
            "VRP80" => Some(Self::vrp80()),
            _ => None,
        }
    }
}

/// Draws one instance from stream `stream_index` of the config's seed:
/// depot then customers, coordinates uniform on the unit square, demands
/// uniform on `1..=9`.
pub fn generate_instance(config: &ExperimentConfig, stream_index: u64) -> Result<ProblemInstance> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, Domain::Instances, stream_index);
    let depot = Point::new(rng.gen::<f64>(), rng.gen::<f64>());
    let customers = (0..config.num_customers)
        .map(|_| {
            let coord = Point::new(rng.gen::<f64>(), rng.gen::<f64>());
            let demand = rng.gen_range(MIN_DEMAND..=MAX_DEMAND);
            Customer { coord, demand }
        })
        .collect();
    ProblemInstance::new(
        format!("{}-{}-{}", config.name, config.seed, stream_index),
        depot,
        customers,
        &config.capacities,
    )
}

pub fn generate_test_set(config: &ExperimentConfig) -> Result<Vec<ProblemInstance>> {
    config.validate()?;
    (0..config.test_set_size as u64)
        .map(|i| generate_instance(config, TEST_STREAM_BASE + i))
        .collect()
}

/// Instances drawn from an arbitrary range of streams (validation, training).
pub fn generate_range(config: &ExperimentConfig, first_stream: u64, count: usize) -> Result<Vec<ProblemInstance>> {
    (0..count as u64)
        .map(|i| generate_instance(config, first_stream + i))
        .collect()
}

/// Canonical text form: a JSON object with fields in the order
/// `instance_id`, `depot`, `customers`, `vehicles`; floats carry 17
/// significant digits.
pub fn write_instance(instance: &ProblemInstance) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!("  \"instance_id\": {},\n", textfmt::string(&instance.instance_id)));
    out.push_str(&format!(
        "  \"depot\": {},\n",
        textfmt::point(instance.depot.x, instance.depot.y)
    ));
    out.push_str("  \"customers\": [\n");
    for (i, c) in instance.customers.iter().enumerate() {
        let sep = if i + 1 == instance.customers.len() { "" } else { "," };
        out.push_str(&format!(
            "    {{\"coord\": {}, \"demand\": {}}}{sep}\n",
            textfmt::point(c.coord.x, c.coord.y),
            c.demand
        ));
    }
    out.push_str("  ],\n  \"vehicles\": [\n");
    for (j, v) in instance.vehicles.iter().enumerate() {
        let sep = if j + 1 == instance.vehicles.len() { "" } else { "," };
        out.push_str(&format!("    {{\"capacity\": {}}}{sep}\n", v.capacity));
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn read_instance(text: &str) -> Result<ProblemInstance> {
    let doc = textfmt::parse_document(text)?;
    instance_from_value(&doc, "")
}

pub(crate) fn instance_from_value(doc: &serde_json::Value, path: &str) -> Result<ProblemInstance> {
    use textfmt::{as_array, as_point, as_str, as_u32, field, join};

    let id_path = join(path, "instance_id");
    let instance_id = as_str(field(doc, "instance_id", path)?, &id_path)?.to_string();

    let depot_path = join(path, "depot");
    let (dx, dy) = as_point(field(doc, "depot", path)?, &depot_path)?;
    let depot = Point::new(dx, dy);
    if !depot.in_unit_square() {
        return Err(CoreError::parse(depot_path, "coordinate outside [0, 1]"));
    }

    let cust_path = join(path, "customers");
    let raw_customers = as_array(field(doc, "customers", path)?, &cust_path)?;
    if raw_customers.is_empty() {
        return Err(CoreError::parse(cust_path, "at least one customer is required"));
    }
    let mut customers = Vec::with_capacity(raw_customers.len());
    for (i, c) in raw_customers.iter().enumerate() {
        let here = format!("{cust_path}[{i}]");
        let coord_path = join(&here, "coord");
        let (x, y) = as_point(field(c, "coord", &here)?, &coord_path)?;
        let coord = Point::new(x, y);
        if !coord.in_unit_square() {
            return Err(CoreError::parse(coord_path, "coordinate outside [0, 1]"));
        }
        let demand_path = join(&here, "demand");
        let demand = as_u32(field(c, "demand", &here)?, &demand_path)?;
        if !(MIN_DEMAND..=MAX_DEMAND).contains(&demand) {
            return Err(CoreError::parse(demand_path, format!("demand {demand} outside 1..=9")));
        }
        customers.push(Customer { coord, demand });
    }

    let veh_path = join(path, "vehicles");
    let raw_vehicles = as_array(field(doc, "vehicles", path)?, &veh_path)?;
    if raw_vehicles.is_empty() {
        return Err(CoreError::parse(veh_path, "at least one vehicle is required"));
    }
    let mut capacities = Vec::with_capacity(raw_vehicles.len());
    for (j, v) in raw_vehicles.iter().enumerate() {
        let here = format!("{veh_path}[{j}]");
        let cap_path = join(&here, "capacity");
        let capacity = as_u32(field(v, "capacity", &here)?, &cap_path)?;
        if capacity < MIN_CAPACITY {
            return Err(CoreError::parse(cap_path, format!("capacity {capacity} below {MIN_CAPACITY}")));
        }
        capacities.push(capacity);
    }

    ProblemInstance::new(instance_id, depot, customers, &capacities)
}
