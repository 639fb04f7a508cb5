//! Discrete-event elevator group-control simulator.
//!
//! Floors are numbered from 1 in passenger files and in [`Passenger`]; the
//! dispatcher works with 0-based floor indices.

mod dispatch;
mod engine;
pub mod traffic;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::{parse_f64, parse_kv, parse_u32};

pub use dispatch::{
    default_configuration, default_space, dispatch_assign, estimate_arrival, CallView, CarView, CostDispatcher,
    Dispatch, DispatcherParams, ParkingPolicy, RoundRobin, NEAR_INERT, PERFORMANCE_CRITICAL,
};
pub use engine::{simulate, simulate_with};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    Up,
    Down,
}

impl Dir {
    pub fn sign(self) -> i64 {
        match self {
            Dir::Up => 1,
            Dir::Down => -1,
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::Up => Dir::Down,
            Dir::Down => Dir::Up,
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Dir::Up => 0,
            Dir::Down => 1,
        }
    }
}

/// Installation being simulated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub floors: u32,
    pub elevators: u32,
    pub capacity_kg: f64,
    pub floor_travel_s: f64,
    /// Door opening plus closing; each half takes `door_cycle_s / 2`.
    pub door_cycle_s: f64,
    /// Per-passenger boarding or alighting time.
    pub board_s: f64,
    /// Simulated time allowed after the last arrival.
    pub drain_s: f64,
    /// Relative spread of boarding times, drawn from the simulation seed. 0 disables it.
    pub board_jitter: f64,
}

impl Default for Building {
    /// Three cars serving twelve floors.
    fn default() -> Self {
        Self {
            floors: 12,
            elevators: 3,
            capacity_kg: 1000.0,
            floor_travel_s: 2.5,
            door_cycle_s: 6.0,
            board_s: 1.2,
            drain_s: 1800.0,
            board_jitter: 0.0,
        }
    }
}

impl Building {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidBuilding(m.to_string()));
        if self.floors < 2 {
            return bad("at least two floors are required");
        }
        if self.elevators < 1 {
            return bad("at least one elevator is required");
        }
        for (name, v) in [
            ("capacity_kg", self.capacity_kg),
            ("floor_travel_s", self.floor_travel_s),
            ("door_cycle_s", self.door_cycle_s),
            ("board_s", self.board_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be strictly positive"));
            }
        }
        if !(self.drain_s.is_finite() && self.drain_s >= 0.0) {
            return bad("drain_s must be non-negative");
        }
        if !(0.0..1.0).contains(&self.board_jitter) {
            return bad("board_jitter must lie in [0, 1)");
        }
        Ok(())
    }

    /// Parses a `key=value` building file; unspecified keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut b = Building::default();
        for (line, key, v) in parse_kv(text)? {
            match key.as_str() {
                "floors" => b.floors = parse_u32(line, &key, &v)?,
                "elevators" => b.elevators = parse_u32(line, &key, &v)?,
                "capacity_kg" => b.capacity_kg = parse_f64(line, &key, &v)?,
                "floor_travel_s" => b.floor_travel_s = parse_f64(line, &key, &v)?,
                "door_cycle_s" => b.door_cycle_s = parse_f64(line, &key, &v)?,
                "board_s" => b.board_s = parse_f64(line, &key, &v)?,
                "drain_s" => b.drain_s = parse_f64(line, &key, &v)?,
                "board_jitter" => b.board_jitter = parse_f64(line, &key, &v)?,
                _ => return Err(Error::parse(line, format!("unknown building key `{key}`"))),
            }
        }
        b.validate()?;
        Ok(b)
    }

    pub fn to_text(&self) -> String {
        format!(
            "floors={}\nelevators={}\ncapacity_kg={}\nfloor_travel_s={}\ndoor_cycle_s={}\nboard_s={}\ndrain_s={}\nboard_jitter={}\n",
            self.floors,
            self.elevators,
            self.capacity_kg,
            self.floor_travel_s,
            self.door_cycle_s,
            self.board_s,
            self.drain_s,
            self.board_jitter
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Passenger {
    pub arrival_time_s: f64,
    pub arrival_floor: u32,
    pub destination_floor: u32,
    pub weight_kg: f64,
}

impl Passenger {
    pub fn direction(&self) -> Dir {
        if self.destination_floor > self.arrival_floor {
            Dir::Up
        } else {
            Dir::Down
        }
    }

    fn check(&self, index: usize) -> Result<()> {
        let bad = |m: &str| {
            Err(Error::InvalidPassenger {
                index,
                msg: m.to_string(),
            })
        };
        if !(self.arrival_time_s.is_finite() && self.arrival_time_s >= 0.0) {
            return bad("arrival time must be a non-negative number");
        }
        if self.arrival_floor == self.destination_floor {
            return bad("arrival floor equals destination floor");
        }
        if self.arrival_floor == 0 || self.destination_floor == 0 {
            return bad("floors are numbered from 1");
        }
        if !(self.weight_kg.is_finite() && self.weight_kg > 0.0) {
            return bad("weight must be positive");
        }
        Ok(())
    }
}

/// One test input: a time-ordered passenger file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    passengers: Vec<Passenger>,
}

pub const PASSENGER_HEADER: [&str; 4] = ["arrival_time_s", "arrival_floor", "destination_floor", "weight_kg"];

impl TestCase {
    /// Validates the passengers and sorts them stably by arrival time.
    pub fn new(id: impl Into<String>, mut passengers: Vec<Passenger>) -> Result<Self> {
        for (i, p) in passengers.iter().enumerate() {
            p.check(i)?;
        }
        passengers.sort_by(|a, b| a.arrival_time_s.total_cmp(&b.arrival_time_s));
        Ok(Self {
            id: id.into(),
            passengers,
        })
    }

    pub fn passengers(&self) -> &[Passenger] {
        &self.passengers
    }

    pub fn len(&self) -> usize {
        self.passengers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passengers.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = PASSENGER_HEADER.join(",");
        s.push('\n');
        for p in &self.passengers {
            let _ = writeln!(s, "{},{},{},{}", p.arrival_time_s, p.arrival_floor, p.destination_floor, p.weight_kg);
        }
        s
    }
}

/// Parses a passenger CSV file into a non-empty test case.
pub fn parse_passenger_file(id: &str, text: &str) -> Result<TestCase> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != PASSENGER_HEADER {
        return Err(Error::parse(1, format!("expected header `{}`", PASSENGER_HEADER.join(","))));
    }
    let mut passengers = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(line, e.to_string()))?;
        if row.len() != 4 {
            return Err(Error::parse(line, format!("expected 4 fields, got {}", row.len())));
        }
        let num = |k: usize| -> Result<f64> { parse_f64(line, PASSENGER_HEADER[k], &row[k]) };
        let floor = |k: usize| -> Result<u32> { parse_u32(line, PASSENGER_HEADER[k], &row[k]) };
        let p = Passenger {
            arrival_time_s: num(0)?,
            arrival_floor: floor(1)?,
            destination_floor: floor(2)?,
            weight_kg: num(3)?,
        };
        p.check(passengers.len()).map_err(|e| Error::parse(line, e.to_string()))?;
        passengers.push(p);
    }
    if passengers.is_empty() {
        return Err(Error::Empty("passenger file"));
    }
    TestCase::new(id, passengers)
}

/// Timing of one passenger in a simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassengerOutcome {
    /// Call registration until the doors of the boarded car open; truncated at the horizon if never boarded.
    pub waiting_time_s: f64,
    /// Start of boarding until the doors open at the destination; truncated at the horizon if still riding.
    pub transit_time_s: f64,
    pub boarded: bool,
    pub completed: bool,
    pub car: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub test_case: String,
    pub passengers: Vec<PassengerOutcome>,
    /// Time of the last completed trip, or the horizon if someone was left unserved.
    pub duration_s: f64,
    pub horizon_s: f64,
    pub boardings: usize,
    pub alightings: usize,
    pub max_load_kg: f64,
}

impl SimResult {
    pub fn unserved(&self) -> usize {
        self.passengers.iter().filter(|p| !p.completed).count()
    }

    pub fn all_completed(&self) -> bool {
        self.passengers.iter().all(|p| p.completed)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("passenger,waiting_time_s,transit_time_s,boarded,completed,car\n");
        for (i, p) in self.passengers.iter().enumerate() {
            let car = p.car.map(|c| c.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                i, p.waiting_time_s, p.transit_time_s, p.boarded, p.completed, car
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row() {
        let tc = parse_passenger_file("t", "arrival_time_s,arrival_floor,destination_floor,weight_kg\n0.0,1,5,75\n").unwrap();
        assert_eq!(
            tc.passengers(),
            &[Passenger {
                arrival_time_s: 0.0,
                arrival_floor: 1,
                destination_floor: 5,
                weight_kg: 75.0
            }]
        );
    }

    #[test]
    fn unsorted_rows_sorted_stably() {
        let text = "arrival_time_s,arrival_floor,destination_floor,weight_kg\n5,1,2,70\n1,3,4,70\n5,2,1,80\n0,4,1,60\n";
        let tc = parse_passenger_file("t", text).unwrap();
        let order: Vec<(f64, u32)> = tc.passengers().iter().map(|p| (p.arrival_time_s, p.arrival_floor)).collect();
        assert_eq!(order, vec![(0.0, 4), (1.0, 3), (5.0, 1), (5.0, 2)]);
    }

    #[test]
    fn bad_rows() {
        let head = "arrival_time_s,arrival_floor,destination_floor,weight_kg\n";
        for body in ["0,3,3,70\n", "0,1,x,70\n", "0,1,2\n", "-1,1,2,70\n", "0,1,2,0\n"] {
            assert!(parse_passenger_file("t", &format!("{head}{body}")).is_err(), "{body}");
        }
        assert!(parse_passenger_file("t", head).is_err());
        assert!(parse_passenger_file("t", "a,b,c,d\n0,1,2,70\n").is_err());
    }

    #[test]
    fn large_file_accepted() {
        let mut text = PASSENGER_HEADER.join(",") + "\n";
        for i in 0..3105 {
            text.push_str(&format!("{},{},{},{}\n", i as f64 * 18.5, 1 + i % 12, 1 + (i + 5) % 12, 60 + i % 40));
        }
        assert_eq!(parse_passenger_file("big", &text).unwrap().len(), 3105);
    }

    #[test]
    fn csv_round_trip() {
        let tc = TestCase::new(
            "x",
            vec![
                Passenger { arrival_time_s: 1.25, arrival_floor: 2, destination_floor: 9, weight_kg: 71.5 },
                Passenger { arrival_time_s: 0.5, arrival_floor: 12, destination_floor: 1, weight_kg: 90.0 },
            ],
        )
        .unwrap();
        assert_eq!(parse_passenger_file("x", &tc.to_csv()).unwrap(), tc);
    }

    #[test]
    fn building_file() {
        let b = Building::parse("floors=12\nelevators=3\nfloor_travel_s = 2.0\n").unwrap();
        assert_eq!(b.floor_travel_s, 2.0);
        assert_eq!(b.capacity_kg, 1000.0);
        assert_eq!(Building::parse(&b.to_text()).unwrap(), b);
        assert!(Building::parse("floors=1\n").is_err());
        assert!(Building::parse("board_s=0\n").is_err());
        assert!(Building::parse("lifts=2\n").is_err());
    }
}
