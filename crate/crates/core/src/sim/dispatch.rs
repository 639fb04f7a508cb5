//! Group-control dispatcher: parameters, fleet view and hall-call assignment.

use std::sync::{Arc, OnceLock};

use crate::config::{Configuration, ParameterSpace, Value};
use crate::error::{Error, Result};

use super::{Building, Dir};

const DEFAULT_SPACE: &str = "\
eta_weight               real 0 10       # weight of the estimated arrival time in the assignment cost
load_weight              real 0 300      # weight of the car load ratio in the assignment cost
stop_count_weight        real 0 60       # weight of the number of pending stops in the assignment cost
stop_time_estimate_s     real 0 30       # assumed duration of each intermediate stop when estimating arrival
coincident_call_bonus_s  real 0 60       # cost bonus when the car already stops at the call floor
reversal_penalty_s       real 0 120      # cost penalty when serving the call requires a reversal
car_full_ratio           real 0.4 1      # load ratio at or above which a car bypasses hall calls
door_dwell_extra_s       real 0 15       # extra door hold time at every stop
zoning_enabled           bool            # restrict cars to floor bands
zone_penalty_s           real 0 300      # cost penalty for calls outside the car's band
zone_overlap_floors      int 0 6         # floors shared by neighbouring bands
parking_policy           enum none,lobby,spread # where idle cars wait
parking_delay_s          real 0 300      # idle time before a car parks
lobby_floor              int 1 4         # main entrance floor
up_peak_mode             bool            # idle cars return to the lobby at once and lobby up calls favour cars waiting there
peak_lobby_bonus_s       real 0 60       # cost bonus for a car waiting at the lobby in up-peak mode
reassignment_enabled     bool            # allow moving unserved calls to a better car
reassign_after_s         real 10 180     # age after which an unserved call may be reassigned
standby_lighting_delay_s real 0 600      # idle time before the car light switches off
diagnostic_level         enum off,basic,verbose # controller log verbosity
fire_recall_floor        int 1 12        # recall floor in fire service
overload_buzzer_enabled  bool            # audible overload warning
";

const DEFAULT_CONFIG: &str = "\
eta_weight = 1
load_weight = 20
stop_count_weight = 3
stop_time_estimate_s = 8
coincident_call_bonus_s = 8
reversal_penalty_s = 10
car_full_ratio = 0.8
door_dwell_extra_s = 0.5
zoning_enabled = false
zone_penalty_s = 40
zone_overlap_floors = 1
parking_policy = lobby
parking_delay_s = 15
lobby_floor = 1
up_peak_mode = false
peak_lobby_bonus_s = 20
reassignment_enabled = false
reassign_after_s = 45
standby_lighting_delay_s = 120
diagnostic_level = basic
fire_recall_floor = 1
overload_buzzer_enabled = true
";

/// Parameters that shift waiting and transit times on any traffic.
pub const PERFORMANCE_CRITICAL: [&str; 6] = [
    "eta_weight",
    "load_weight",
    "stop_count_weight",
    "car_full_ratio",
    "door_dwell_extra_s",
    "parking_policy",
];

/// Parameters with no influence on passenger timing.
pub const NEAR_INERT: [&str; 4] = [
    "standby_lighting_delay_s",
    "diagnostic_level",
    "fire_recall_floor",
    "overload_buzzer_enabled",
];

/// The built-in dispatcher's parameter space.
pub fn default_space() -> Arc<ParameterSpace> {
    static SPACE: OnceLock<Arc<ParameterSpace>> = OnceLock::new();
    Arc::clone(SPACE.get_or_init(|| Arc::new(ParameterSpace::parse(DEFAULT_SPACE).expect("valid default space"))))
}

/// Factory settings of the built-in dispatcher.
pub fn default_configuration() -> Configuration {
    Configuration::parse(DEFAULT_CONFIG, &default_space()).expect("valid default configuration")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParkingPolicy {
    None,
    Lobby,
    Spread,
}

/// Typed view of a dispatcher configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct DispatcherParams {
    pub eta_weight: f64,
    pub load_weight: f64,
    pub stop_count_weight: f64,
    pub stop_time_estimate_s: f64,
    pub coincident_call_bonus_s: f64,
    pub reversal_penalty_s: f64,
    pub car_full_ratio: f64,
    pub door_dwell_extra_s: f64,
    pub zoning_enabled: bool,
    pub zone_penalty_s: f64,
    pub zone_overlap_floors: u32,
    pub parking_policy: ParkingPolicy,
    pub parking_delay_s: f64,
    /// 1-based.
    pub lobby_floor: u32,
    pub up_peak_mode: bool,
    pub peak_lobby_bonus_s: f64,
    pub reassignment_enabled: bool,
    pub reassign_after_s: f64,
}

impl Default for DispatcherParams {
    fn default() -> Self {
        Self::from_config(&default_configuration()).expect("default configuration is complete")
    }
}

impl DispatcherParams {
    /// Reads the dispatcher parameters by name; extra parameters are ignored.
    pub fn from_config(config: &Configuration) -> Result<Self> {
        let get = |name: &str| config.get_by_name(name).ok_or_else(|| Error::MissingParameter(name.to_string()));
        let real = |name: &str| -> Result<f64> {
            match get(name)? {
                Value::Real(v) => Ok(*v),
                Value::Int(v) => Ok(*v as f64),
                _ => Err(Error::InvalidArgument(format!("`{name}` must be numeric"))),
            }
        };
        let int = |name: &str| -> Result<u32> {
            match get(name)? {
                Value::Int(v) if *v >= 0 => Ok(*v as u32),
                _ => Err(Error::InvalidArgument(format!("`{name}` must be a non-negative integer"))),
            }
        };
        let flag = |name: &str| -> Result<bool> {
            match get(name)? {
                Value::Bool(b) => Ok(*b),
                _ => Err(Error::InvalidArgument(format!("`{name}` must be boolean"))),
            }
        };
        let parking_policy = {
            let i = config.space().index_of("parking_policy").ok_or_else(|| Error::MissingParameter("parking_policy".into()))?;
            let text = config.space().spec(i).format_value(config.get(i));
            match text.as_str() {
                "none" => ParkingPolicy::None,
                "lobby" => ParkingPolicy::Lobby,
                "spread" => ParkingPolicy::Spread,
                other => return Err(Error::InvalidArgument(format!("unknown parking policy `{other}`"))),
            }
        };
        Ok(Self {
            eta_weight: real("eta_weight")?,
            load_weight: real("load_weight")?,
            stop_count_weight: real("stop_count_weight")?,
            stop_time_estimate_s: real("stop_time_estimate_s")?,
            coincident_call_bonus_s: real("coincident_call_bonus_s")?,
            reversal_penalty_s: real("reversal_penalty_s")?,
            car_full_ratio: real("car_full_ratio")?,
            door_dwell_extra_s: real("door_dwell_extra_s")?,
            zoning_enabled: flag("zoning_enabled")?,
            zone_penalty_s: real("zone_penalty_s")?,
            zone_overlap_floors: int("zone_overlap_floors")?,
            parking_policy,
            parking_delay_s: real("parking_delay_s")?,
            lobby_floor: int("lobby_floor")?.max(1),
            up_peak_mode: flag("up_peak_mode")?,
            peak_lobby_bonus_s: real("peak_lobby_bonus_s")?,
            reassignment_enabled: flag("reassignment_enabled")?,
            reassign_after_s: real("reassign_after_s")?,
        })
    }

    /// 0-based lobby floor clamped into the building.
    pub(crate) fn lobby_index(&self, building: &Building) -> usize {
        (self.lobby_floor as usize).clamp(1, building.floors as usize) - 1
    }
}

/// Snapshot of one car as seen by the dispatcher. Floors are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct CarView {
    pub index: usize,
    /// Current floor, or the last floor passed while moving.
    pub floor: usize,
    pub direction: Option<Dir>,
    pub load_ratio: f64,
    /// Distinct floors the car is committed to stop at, ascending.
    pub stops: Vec<usize>,
}

impl CarView {
    pub fn idle_at(index: usize, floor: usize) -> Self {
        Self {
            index,
            floor,
            direction: None,
            load_ratio: 0.0,
            stops: Vec::new(),
        }
    }
}

/// A hall call: 0-based floor and requested direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CallView {
    pub floor: usize,
    pub dir: Dir,
}

/// Assignment policy for new hall calls.
pub trait Dispatch {
    /// Picks a car for `call`; `exclude` names a car that must not be chosen when another exists.
    fn assign(&mut self, fleet: &[CarView], call: CallView, building: &Building, exclude: Option<usize>) -> usize;
}

/// Cost-based dispatcher driven by [`DispatcherParams`].
#[derive(Clone, Debug)]
pub struct CostDispatcher {
    pub params: DispatcherParams,
}

impl Dispatch for CostDispatcher {
    fn assign(&mut self, fleet: &[CarView], call: CallView, building: &Building, exclude: Option<usize>) -> usize {
        let candidates: Vec<CarView> = match exclude {
            Some(x) if fleet.len() > 1 => fleet.iter().filter(|c| c.index != x).cloned().collect(),
            _ => fleet.to_vec(),
        };
        candidates[dispatch_assign(&candidates, &call, &self.params, building)].index
    }
}

/// Cycles through the cars regardless of state.
#[derive(Clone, Debug, Default)]
pub struct RoundRobin {
    next: usize,
}

impl Dispatch for RoundRobin {
    fn assign(&mut self, fleet: &[CarView], _call: CallView, _building: &Building, exclude: Option<usize>) -> usize {
        let n = fleet.len();
        let mut pick = self.next % n;
        if n > 1 && Some(fleet[pick].index) == exclude {
            pick = (pick + 1) % n;
        }
        self.next = pick + 1;
        fleet[pick].index
    }
}

/// Position in `fleet` of the car with the lowest assignment cost; ties go to the lowest position.
pub fn dispatch_assign(fleet: &[CarView], call: &CallView, params: &DispatcherParams, building: &Building) -> usize {
    assert!(!fleet.is_empty(), "dispatch needs at least one car");
    let n_cars = building.elevators.max(fleet.len() as u32) as usize;
    let mut best = 0;
    let mut best_cost = f64::INFINITY;
    for (i, car) in fleet.iter().enumerate() {
        let c = assignment_cost(car, call, params, building, n_cars);
        if c < best_cost {
            best = i;
            best_cost = c;
        }
    }
    best
}

/// Estimated seconds until `car` can open its doors for `call`, and whether it must reverse first.
pub fn estimate_arrival(car: &CarView, call: &CallView, params: &DispatcherParams, building: &Building) -> (f64, bool) {
    let pos = car.floor as i64;
    let target = call.floor as i64;
    let half_door = building.door_cycle_s / 2.0;
    let Some(dir) = car.direction else {
        return ((target - pos).abs() as f64 * building.floor_travel_s + half_door, false);
    };
    let sign = dir.sign();
    let ahead = (target - pos) * sign > 0;
    if ahead && call.dir == dir {
        let between = car
            .stops
            .iter()
            .filter(|&&s| {
                let s = s as i64;
                (s - pos) * sign > 0 && (target - s) * sign > 0
            })
            .count();
        let eta = (target - pos).abs() as f64 * building.floor_travel_s
            + between as f64 * params.stop_time_estimate_s
            + half_door;
        (eta, false)
    } else {
        let far = car
            .stops
            .iter()
            .map(|&s| s as i64)
            .filter(|&s| (s - pos) * sign > 0)
            .fold(pos, |acc, s| if (s - acc) * sign > 0 { s } else { acc });
        let dist = (far - pos).abs() + (far - target).abs();
        let eta = dist as f64 * building.floor_travel_s + car.stops.len() as f64 * params.stop_time_estimate_s + half_door;
        (eta, true)
    }
}

fn in_zone(car: usize, floor: usize, n_cars: usize, params: &DispatcherParams, building: &Building) -> bool {
    if floor == params.lobby_index(building) {
        return true;
    }
    let floors = building.floors as usize;
    let lo = car * floors / n_cars;
    let hi = ((car + 1) * floors / n_cars).saturating_sub(1);
    let overlap = params.zone_overlap_floors as usize;
    floor + overlap >= lo && floor <= hi + overlap
}

fn assignment_cost(car: &CarView, call: &CallView, params: &DispatcherParams, building: &Building, n_cars: usize) -> f64 {
    let (eta, reversal) = estimate_arrival(car, call, params, building);
    let mut cost = params.eta_weight * eta
        + params.load_weight * car.load_ratio
        + params.stop_count_weight * car.stops.len() as f64;
    if reversal {
        cost += params.reversal_penalty_s;
    }
    if car.stops.contains(&call.floor) {
        cost -= params.coincident_call_bonus_s;
    }
    if params.zoning_enabled && !in_zone(car.index, call.floor, n_cars, params, building) {
        cost += params.zone_penalty_s;
    }
    let lobby = params.lobby_index(building);
    if params.up_peak_mode
        && call.floor == lobby
        && call.dir == Dir::Up
        && car.direction.is_none()
        && car.floor == lobby
    {
        cost -= params.peak_lobby_bonus_s;
    }
    cost
}
