//! Synthetic passenger profiles for scenarios and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Building, Passenger, TestCase};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// Mostly lobby to upper floors.
    UpPeak,
    /// Mostly upper floors to the lobby.
    DownPeak,
    /// Uniform trips between any two floors.
    InterFloor,
    /// Lunch-time blend of up, down and inter-floor trips.
    Mixed,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::UpPeak => "up-peak",
            Profile::DownPeak => "down-peak",
            Profile::InterFloor => "inter-floor",
            Profile::Mixed => "mixed",
        }
    }

    /// Shares of (from lobby, to lobby) trips; the rest are inter-floor.
    fn shares(self) -> (f64, f64) {
        match self {
            Profile::UpPeak => (0.8, 0.1),
            Profile::DownPeak => (0.1, 0.8),
            Profile::InterFloor => (0.0, 0.0),
            Profile::Mixed => (0.4, 0.4),
        }
    }
}

/// Generates `n` passengers with uniformly spread arrival times over `duration_s`; the lobby is floor 1.
pub fn generate(profile: Profile, n: usize, duration_s: f64, building: &Building, seed: u64) -> TestCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floors = building.floors;
    let (up, down) = profile.shares();
    let mut passengers = Vec::with_capacity(n);
    for _ in 0..n {
        let t = (rng.random_range(0.0..duration_s) * 10.0).round() / 10.0;
        let u: f64 = rng.random();
        let (from, to) = if u < up {
            (1, rng.random_range(2..=floors))
        } else if u < up + down {
            (rng.random_range(2..=floors), 1)
        } else {
            let a = rng.random_range(1..=floors);
            let mut b = rng.random_range(1..=floors - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        };
        let weight = rng.random_range(50..=100) as f64;
        passengers.push(Passenger {
            arrival_time_s: t,
            arrival_floor: from,
            destination_floor: to,
            weight_kg: weight,
        });
    }
    TestCase::new(format!("{}-{seed}", profile.name()), passengers).expect("generated passengers are valid")
}
