use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Configuration;
use crate::error::{Error, Result};

use super::dispatch::{CallView, CarView, CostDispatcher, Dispatch, DispatcherParams, ParkingPolicy};
use super::{Building, Dir, PassengerOutcome, SimResult, TestCase};

/// Runs one test case under `config` with the cost-based dispatcher.
///
/// The result depends only on the arguments: equal inputs give bit-identical results.
pub fn simulate(config: &Configuration, tc: &TestCase, building: &Building, seed: u64) -> Result<SimResult> {
    let params = DispatcherParams::from_config(config)?;
    let mut dispatcher = CostDispatcher { params: params.clone() };
    simulate_with(&mut dispatcher, &params, tc, building, seed)
}

/// Runs one test case with an arbitrary assignment policy; `params` still drives car behaviour.
pub fn simulate_with(
    dispatcher: &mut dyn Dispatch,
    params: &DispatcherParams,
    tc: &TestCase,
    building: &Building,
    seed: u64,
) -> Result<SimResult> {
    building.validate()?;
    for (index, p) in tc.passengers().iter().enumerate() {
        let check = |f: u32| f >= 1 && f <= building.floors;
        if !check(p.arrival_floor) || !check(p.destination_floor) {
            return Err(Error::InvalidPassenger {
                index,
                msg: format!("floor outside building with {} floors", building.floors),
            });
        }
        if p.weight_kg > building.capacity_kg {
            return Err(Error::InvalidPassenger {
                index,
                msg: "heavier than the car capacity".into(),
            });
        }
    }
    let mut sim = Sim::new(dispatcher, params, tc, building, seed);
    sim.run();
    Ok(sim.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Idle,
    Moving,
    Opening,
    Dwelling,
    Closing,
}

#[derive(Clone, Copy, Debug)]
enum EventKind {
    Arrival(usize),
    CarAtFloor(usize),
    DoorsOpened(usize),
    DwellEnd(usize),
    DoorsClosed(usize),
    ParkCheck(usize, u64),
}

#[derive(Clone, Copy, Debug)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest (time, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

type CallKey = (usize, Dir);

#[derive(Default)]
struct HallCall {
    queue: VecDeque<usize>,
    assigned: Option<usize>,
    assigned_at: f64,
}

struct Car {
    floor: usize,
    dir: Option<Dir>,
    phase: Phase,
    onboard: Vec<usize>,
    load_kg: f64,
    stops: Vec<bool>,
    assigned: Vec<CallKey>,
    park_target: Option<usize>,
    serve_dir: Option<Dir>,
    doors_opened_at: f64,
    refused: Option<CallKey>,
    idle_epoch: u64,
}

#[derive(Clone, Copy, Default)]
struct Progress {
    wait_end: Option<f64>,
    board_start: f64,
    done_at: Option<f64>,
    car: Option<usize>,
}

struct Sim<'a> {
    dispatcher: &'a mut dyn Dispatch,
    params: &'a DispatcherParams,
    tc: &'a TestCase,
    b: &'a Building,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Event>,
    seq: u64,
    now: f64,
    horizon: f64,
    cars: Vec<Car>,
    calls: Vec<HallCall>,
    progress: Vec<Progress>,
    remaining: usize,
    boardings: usize,
    alightings: usize,
    max_load: f64,
}

impl<'a> Sim<'a> {
    fn new(
        dispatcher: &'a mut dyn Dispatch,
        params: &'a DispatcherParams,
        tc: &'a TestCase,
        b: &'a Building,
        seed: u64,
    ) -> Self {
        let floors = b.floors as usize;
        let start = params.lobby_index(b);
        let cars = (0..b.elevators)
            .map(|_| Car {
                floor: start,
                dir: None,
                phase: Phase::Idle,
                onboard: Vec::new(),
                load_kg: 0.0,
                stops: vec![false; floors],
                assigned: Vec::new(),
                park_target: None,
                serve_dir: None,
                doors_opened_at: 0.0,
                refused: None,
                idle_epoch: 0,
            })
            .collect();
        let last = tc.passengers().last().map_or(0.0, |p| p.arrival_time_s);
        let mut sim = Sim {
            dispatcher,
            params,
            tc,
            b,
            rng: ChaCha8Rng::seed_from_u64(seed),
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            horizon: if tc.is_empty() { 0.0 } else { last + b.drain_s },
            cars,
            calls: (0..floors * 2).map(|_| HallCall::default()).collect(),
            progress: vec![Progress::default(); tc.len()],
            remaining: tc.len(),
            boardings: 0,
            alightings: 0,
            max_load: 0.0,
        };
        for (i, p) in tc.passengers().iter().enumerate() {
            sim.push(p.arrival_time_s, EventKind::Arrival(i));
        }
        sim
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Event { time, seq: self.seq, kind });
    }

    fn run(&mut self) {
        while self.remaining > 0 {
            let Some(ev) = self.queue.pop() else { break };
            if ev.time > self.horizon {
                break;
            }
            self.now = ev.time;
            match ev.kind {
                EventKind::Arrival(p) => self.on_arrival(p),
                EventKind::CarAtFloor(c) => self.on_car_at_floor(c),
                EventKind::DoorsOpened(c) => self.on_doors_opened(c),
                EventKind::DwellEnd(c) => self.on_dwell_end(c),
                EventKind::DoorsClosed(c) => {
                    self.maybe_reassign();
                    self.start_next(c);
                }
                EventKind::ParkCheck(c, epoch) => self.on_park_check(c, epoch),
            }
        }
    }

    fn finish(self) -> SimResult {
        let horizon = self.horizon;
        let mut duration: f64 = 0.0;
        let passengers = self
            .tc
            .passengers()
            .iter()
            .zip(&self.progress)
            .map(|(p, pr)| {
                let boarded = pr.wait_end.is_some();
                let completed = pr.done_at.is_some();
                if let Some(t) = pr.done_at {
                    duration = duration.max(t);
                }
                PassengerOutcome {
                    waiting_time_s: pr.wait_end.unwrap_or(horizon) - p.arrival_time_s,
                    transit_time_s: match (boarded, pr.done_at) {
                        (_, Some(t)) => t - pr.board_start,
                        (true, None) => horizon - pr.board_start,
                        (false, None) => 0.0,
                    },
                    boarded,
                    completed,
                    car: pr.car,
                }
            })
            .collect::<Vec<_>>();
        if passengers.iter().any(|p| !p.completed) {
            duration = horizon;
        }
        SimResult {
            test_case: self.tc.id.clone(),
            passengers,
            duration_s: duration,
            horizon_s: horizon,
            boardings: self.boardings,
            alightings: self.alightings,
            max_load_kg: self.max_load,
        }
    }

    fn call_index(&self, key: CallKey) -> usize {
        key.0 * 2 + key.1.index()
    }

    fn call(&self, key: CallKey) -> &HallCall {
        &self.calls[self.call_index(key)]
    }

    fn call_mut(&mut self, key: CallKey) -> &mut HallCall {
        let i = self.call_index(key);
        &mut self.calls[i]
    }

    fn has_room(&self, c: usize) -> bool {
        self.cars[c].load_kg / self.b.capacity_kg < self.params.car_full_ratio
    }

    fn fleet_view(&self) -> Vec<CarView> {
        self.cars
            .iter()
            .enumerate()
            .map(|(index, car)| {
                let mut stops: Vec<usize> = car
                    .stops
                    .iter()
                    .enumerate()
                    .filter_map(|(f, &s)| s.then_some(f))
                    .chain(car.assigned.iter().map(|k| k.0))
                    .collect();
                stops.sort_unstable();
                stops.dedup();
                CarView {
                    index,
                    floor: car.floor,
                    direction: car.dir,
                    load_ratio: car.load_kg / self.b.capacity_kg,
                    stops,
                }
            })
            .collect()
    }

    fn assign_call(&mut self, key: CallKey, exclude: Option<usize>) {
        let fleet = self.fleet_view();
        let car = self.dispatcher.assign(&fleet, CallView { floor: key.0, dir: key.1 }, self.b, exclude);
        let now = self.now;
        let call = self.call_mut(key);
        call.assigned = Some(car);
        call.assigned_at = now;
        self.cars[car].assigned.push(key);
        self.cars[car].park_target = None;
        if self.cars[car].phase == Phase::Idle {
            self.start_next(car);
        }
    }

    fn unassign(&mut self, key: CallKey) {
        if let Some(car) = self.call_mut(key).assigned.take() {
            self.cars[car].assigned.retain(|k| *k != key);
        }
    }

    fn on_arrival(&mut self, p: usize) {
        let pass = &self.tc.passengers()[p];
        let key = ((pass.arrival_floor - 1) as usize, pass.direction());
        self.call_mut(key).queue.push_back(p);
        if self.call(key).assigned.is_none() {
            self.assign_call(key, None);
        }
        self.maybe_reassign();
    }

    fn maybe_reassign(&mut self) {
        if !self.params.reassignment_enabled || self.cars.len() < 2 {
            return;
        }
        for idx in 0..self.calls.len() {
            let key = (idx / 2, if idx % 2 == 0 { Dir::Up } else { Dir::Down });
            let call = &self.calls[idx];
            let Some(owner) = call.assigned else { continue };
            if call.queue.is_empty() || self.now - call.assigned_at <= self.params.reassign_after_s {
                continue;
            }
            let car = &self.cars[owner];
            if car.floor == key.0 && matches!(car.phase, Phase::Opening | Phase::Dwelling) {
                continue;
            }
            let fleet = self.fleet_view();
            let best = self.dispatcher.assign(&fleet, CallView { floor: key.0, dir: key.1 }, self.b, None);
            if best != owner {
                self.unassign(key);
                let now = self.now;
                let call = self.call_mut(key);
                call.assigned = Some(best);
                call.assigned_at = now;
                self.cars[best].assigned.push(key);
                self.cars[best].park_target = None;
                if self.cars[best].phase == Phase::Idle {
                    self.start_next(best);
                }
            } else {
                self.calls[idx].assigned_at = self.now;
            }
        }
    }

    /// True if the car has a car call, hall call or parking target strictly beyond its floor in `dir`.
    fn has_target_beyond(&self, c: usize, dir: Dir) -> bool {
        let car = &self.cars[c];
        let beyond = |f: usize| match dir {
            Dir::Up => f > car.floor,
            Dir::Down => f < car.floor,
        };
        car.stops.iter().enumerate().any(|(f, &s)| s && beyond(f))
            || car.assigned.iter().any(|k| beyond(k.0))
            || car.park_target.is_some_and(beyond)
    }

    fn assigned_here(&self, c: usize, dir: Dir) -> bool {
        let car = &self.cars[c];
        let key = (car.floor, dir);
        car.assigned.contains(&key) && car.refused != Some(key)
    }

    fn waiting_here(&self, floor: usize, dir: Dir) -> bool {
        !self.call((floor, dir)).queue.is_empty()
    }

    fn start_moving(&mut self, c: usize, dir: Dir) {
        let car = &mut self.cars[c];
        car.dir = Some(dir);
        car.phase = Phase::Moving;
        self.push(self.now + self.b.floor_travel_s, EventKind::CarAtFloor(c));
    }

    fn open_doors(&mut self, c: usize) {
        self.cars[c].phase = Phase::Opening;
        self.push(self.now + self.b.door_cycle_s / 2.0, EventKind::DoorsOpened(c));
    }

    /// Decides what a car with closed doors standing at a floor does next.
    fn start_next(&mut self, c: usize) {
        if self.has_room(c) {
            let open = match self.cars[c].dir {
                None => self.assigned_here(c, Dir::Up) || self.assigned_here(c, Dir::Down),
                Some(d) => {
                    self.assigned_here(c, d)
                        || (self.assigned_here(c, d.opposite()) && !self.has_target_beyond(c, d))
                }
            };
            if open {
                self.open_doors(c);
                return;
            }
        }
        if let Some(d) = self.cars[c].dir {
            if self.has_target_beyond(c, d) {
                return self.start_moving(c, d);
            }
            if self.has_target_beyond(c, d.opposite()) {
                return self.start_moving(c, d.opposite());
            }
        } else if let Some(d) = self.nearest_target_dir(c) {
            return self.start_moving(c, d);
        }
        self.become_idle(c);
    }

    fn nearest_target_dir(&self, c: usize) -> Option<Dir> {
        let car = &self.cars[c];
        let floors = car
            .stops
            .iter()
            .enumerate()
            .filter_map(|(f, &s)| s.then_some(f))
            .chain(car.assigned.iter().map(|k| k.0))
            .chain(car.park_target)
            .filter(|&f| f != car.floor);
        floors
            .min_by_key(|&f| (f.abs_diff(car.floor), f < car.floor))
            .map(|f| if f > car.floor { Dir::Up } else { Dir::Down })
    }

    fn become_idle(&mut self, c: usize) {
        if self.cars[c].refused.take().is_some() && !self.cars[c].assigned.is_empty() {
            return self.start_next(c);
        }
        let car = &mut self.cars[c];
        car.dir = None;
        car.phase = Phase::Idle;
        car.serve_dir = None;
        car.refused = None;
        car.park_target = None;
        car.idle_epoch += 1;
        let epoch = car.idle_epoch;
        let delay = if self.params.up_peak_mode {
            Some(0.0)
        } else if self.params.parking_policy != ParkingPolicy::None {
            Some(self.params.parking_delay_s)
        } else {
            None
        };
        if let Some(d) = delay {
            self.push(self.now + d, EventKind::ParkCheck(c, epoch));
        }
    }

    fn park_floor(&self, c: usize) -> Option<usize> {
        let lobby = self.params.lobby_index(self.b);
        if self.params.up_peak_mode {
            return Some(lobby);
        }
        match self.params.parking_policy {
            ParkingPolicy::None => None,
            ParkingPolicy::Lobby => Some(lobby),
            ParkingPolicy::Spread => {
                let n = self.cars.len();
                let floors = self.b.floors as usize;
                Some(if c == 0 { lobby } else { (c * floors / n).min(floors - 1) })
            }
        }
    }

    fn on_park_check(&mut self, c: usize, epoch: u64) {
        let car = &self.cars[c];
        if car.phase != Phase::Idle || car.idle_epoch != epoch {
            return;
        }
        if let Some(target) = self.park_floor(c) {
            if target != car.floor {
                self.cars[c].park_target = Some(target);
                let dir = if target > self.cars[c].floor { Dir::Up } else { Dir::Down };
                self.start_moving(c, dir);
            }
        }
    }

    fn on_car_at_floor(&mut self, c: usize) {
        let d = self.cars[c].dir.expect("moving car has a direction");
        {
            let car = &mut self.cars[c];
            car.floor = (car.floor as i64 + d.sign()) as usize;
            car.refused = None;
        }
        let floor = self.cars[c].floor;
        let room = self.has_room(c);
        let stop_dest = self.cars[c].stops[floor];
        let stop_call = room
            && (self.assigned_here(c, d) || (self.assigned_here(c, d.opposite()) && !self.has_target_beyond(c, d)));
        if self.cars[c].park_target == Some(floor) {
            self.cars[c].park_target = None;
        }
        if stop_dest || stop_call {
            self.open_doors(c);
        } else if self.has_target_beyond(c, d) {
            self.start_moving(c, d);
        } else {
            self.start_next(c);
        }
    }

    fn board_time(&mut self) -> f64 {
        let j = self.b.board_jitter;
        if j > 0.0 {
            let u: f64 = self.rng.random();
            self.b.board_s * (1.0 + j * (2.0 * u - 1.0))
        } else {
            self.b.board_s
        }
    }

    fn on_doors_opened(&mut self, c: usize) {
        let now = self.now;
        let floor = self.cars[c].floor;
        self.cars[c].phase = Phase::Dwelling;
        self.cars[c].doors_opened_at = now;
        self.cars[c].stops[floor] = false;

        let mut dwell = 0.0;
        let mut i = 0;
        while i < self.cars[c].onboard.len() {
            let p = self.cars[c].onboard[i];
            if (self.tc.passengers()[p].destination_floor - 1) as usize == floor {
                self.cars[c].onboard.swap_remove(i);
                self.cars[c].load_kg -= self.tc.passengers()[p].weight_kg;
                self.progress[p].done_at = Some(now);
                self.alightings += 1;
                self.remaining -= 1;
                dwell += self.board_time();
            } else {
                i += 1;
            }
        }
        if self.cars[c].onboard.is_empty() {
            self.cars[c].load_kg = 0.0;
        }

        let serve = self.choose_serve_dir(c);
        self.cars[c].serve_dir = serve;
        if let Some(s) = serve {
            self.cars[c].dir = Some(s);
            dwell += self.board(c, now + dwell, s);
        }
        self.push(now + dwell + self.params.door_dwell_extra_s, EventKind::DwellEnd(c));
    }

    fn choose_serve_dir(&self, c: usize) -> Option<Dir> {
        let car = &self.cars[c];
        let floor = car.floor;
        match car.dir {
            Some(d) => {
                if self.waiting_here(floor, d) || self.has_target_beyond(c, d) {
                    Some(d)
                } else if self.waiting_here(floor, d.opposite()) {
                    Some(d.opposite())
                } else {
                    Some(d)
                }
            }
            None => {
                let assigned = |d: Dir| car.assigned.contains(&(floor, d));
                [Dir::Up, Dir::Down]
                    .into_iter()
                    .find(|&d| assigned(d) && self.waiting_here(floor, d))
                    .or_else(|| [Dir::Up, Dir::Down].into_iter().find(|&d| self.waiting_here(floor, d)))
            }
        }
    }

    /// Boards waiting passengers in FIFO order, skipping those who do not fit. Returns the time spent.
    fn board(&mut self, c: usize, start: f64, dir: Dir) -> f64 {
        let floor = self.cars[c].floor;
        let key = (floor, dir);
        let opened = self.cars[c].doors_opened_at;
        let mut spent = 0.0;
        let mut left = VecDeque::new();
        let mut queue = std::mem::take(&mut self.call_mut(key).queue);
        while let Some(p) = queue.pop_front() {
            let pass = &self.tc.passengers()[p];
            if self.cars[c].load_kg + pass.weight_kg <= self.b.capacity_kg {
                let dest = (pass.destination_floor - 1) as usize;
                let car = &mut self.cars[c];
                car.load_kg += pass.weight_kg;
                car.onboard.push(p);
                car.stops[dest] = true;
                self.max_load = self.max_load.max(car.load_kg);
                let pr = &mut self.progress[p];
                pr.wait_end = Some(opened.max(pass.arrival_time_s));
                pr.board_start = start + spent;
                pr.car = Some(c);
                self.boardings += 1;
                spent += self.board_time();
            } else {
                left.push_back(p);
            }
        }
        let leftovers = !left.is_empty();
        self.call_mut(key).queue = left;
        if !leftovers {
            self.unassign(key);
        } else if self.call(key).assigned == Some(c) || self.call(key).assigned.is_none() {
            self.cars[c].refused = Some(key);
            self.unassign(key);
            self.assign_call(key, Some(c));
            if self.call(key).assigned == Some(c) {
                self.cars[c].refused = Some(key);
            }
        }
        spent
    }

    fn on_dwell_end(&mut self, c: usize) {
        let floor = self.cars[c].floor;
        if self.cars[c].serve_dir.is_none() {
            self.cars[c].serve_dir = [Dir::Up, Dir::Down].into_iter().find(|&d| self.waiting_here(floor, d));
            if let Some(d) = self.cars[c].serve_dir {
                self.cars[c].dir = Some(d);
            }
        }
        if let Some(s) = self.cars[c].serve_dir {
            if self.cars[c].refused != Some((floor, s)) && self.waiting_here(floor, s) {
                let spent = self.board(c, self.now, s);
                if spent > 0.0 {
                    self.push(self.now + spent, EventKind::DwellEnd(c));
                    return;
                }
            }
        }
        self.cars[c].phase = Phase::Closing;
        self.push(self.now + self.b.door_cycle_s / 2.0, EventKind::DoorsClosed(c));
    }
}
