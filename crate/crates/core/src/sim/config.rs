use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::RegionKind;
use crate::shooter::ShooterParams;

/// Relative spawn weight per region kind; multiplied by sqrt(area).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpawnWeights {
    pub classroom: f64,
    pub lounge: f64,
    pub corridor: f64,
    pub cafeteria: f64,
    pub kitchen: f64,
    pub bathroom: f64,
    pub entrance: f64,
    pub yard: f64,
    pub office: f64,
}

impl Default for SpawnWeights {
    fn default() -> Self {
        Self {
            classroom: 3.0,
            lounge: 2.0,
            corridor: 1.0,
            cafeteria: 4.0,
            kitchen: 1.0,
            bathroom: 0.5,
            entrance: 0.5,
            yard: 0.0,
            office: 3.0,
        }
    }
}

impl SpawnWeights {
    pub fn weight(&self, kind: RegionKind) -> f64 {
        match kind {
            RegionKind::Classroom => self.classroom,
            RegionKind::Lounge => self.lounge,
            RegionKind::Corridor => self.corridor,
            RegionKind::Cafeteria => self.cafeteria,
            RegionKind::Kitchen => self.kitchen,
            RegionKind::Bathroom => self.bathroom,
            RegionKind::Entrance => self.entrance,
            RegionKind::Yard => self.yard,
            RegionKind::Office => self.office,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    /// Overrides the layout's shooter entry time when set.
    pub shooter_entry_time_s: Option<f64>,
    pub horizon_s: f64,
    pub pursuit_timeout_s: f64,
    pub stay_cooldown_s: f64,
    pub nearby_radius_m: f64,
    pub utterance_window_s: f64,
    pub utterance_radius_m: f64,
    pub whisper_radius_m: f64,
    /// Shots are heard by agents within this many region hops.
    pub hearing_hops: usize,
    /// Whether the entry shot reveals the shooter's region to everyone.
    pub entry_shot_global: bool,
    pub memory_cap: usize,
    pub reach_radius_m: f64,
    pub co_mover_radius_m: f64,
    pub in_flight_limit: usize,
    /// Seed for initial placement; defaults to the episode seed.
    pub placement_seed: Option<u64>,
    pub spawn: SpawnWeights,
    pub shooter: ShooterParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.5,
            shooter_entry_time_s: None,
            horizon_s: 120.0,
            pursuit_timeout_s: 5.0,
            stay_cooldown_s: 5.0,
            nearby_radius_m: 3.0,
            utterance_window_s: 3.0,
            utterance_radius_m: 5.0,
            whisper_radius_m: 2.0,
            hearing_hops: 3,
            entry_shot_global: true,
            memory_cap: 20,
            reach_radius_m: 1.0,
            co_mover_radius_m: 5.0,
            in_flight_limit: 8,
            placement_seed: None,
            spawn: SpawnWeights::default(),
            shooter: ShooterParams::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("horizon_s", self.horizon_s),
            ("pursuit_timeout_s", self.pursuit_timeout_s),
            ("stay_cooldown_s", self.stay_cooldown_s),
            ("nearby_radius_m", self.nearby_radius_m),
            ("utterance_window_s", self.utterance_window_s),
            ("utterance_radius_m", self.utterance_radius_m),
            ("reach_radius_m", self.reach_radius_m),
            ("co_mover_radius_m", self.co_mover_radius_m),
            ("shooter.speed", self.shooter.speed),
            ("shooter.fire_interval", self.shooter.fire_interval),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(t) = self.shooter_entry_time_s {
            if !(t >= 0.0 && t < self.horizon_s) {
                return Err(Error::Config(format!("shooter entry time {t} must lie in [0, horizon)")));
            }
        }
        if self.memory_cap == 0 || self.in_flight_limit == 0 || self.shooter.magazine_size == 0 {
            return Err(Error::Config("memory_cap, in_flight_limit and magazine_size must be ≥ 1".into()));
        }
        if !(0.0..=1.0).contains(&self.shooter.hit_probability) {
            return Err(Error::Config("hit probability must lie in [0,1]".into()));
        }
        Ok(())
    }
}
