//! Discrete-time tank plant with three binary level sensors and two binary
//! valves.
//!
//! Two flow models are supported: a deterministic one (every open valve
//! moves a fixed rate) and a stochastic one (open-valve flow is normal,
//! closed valves leak a uniform amount). Random draws come from a seeded
//! ChaCha8 stream; each tick consumes exactly one inlet draw followed by one
//! outlet draw, whatever the valve states.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of the random stream used by the stochastic plant.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng(rand_chacha 0.9, seed_from_u64)";

/// Default tick length in seconds.
pub const DEFAULT_DT: f64 = 0.1;

pub const ADDR_ULS: &str = "%IX0.0";
pub const ADDR_LLS: &str = "%IX0.1";
pub const ADDR_MLS: &str = "%IX0.2";
pub const ADDR_INV: &str = "%QX0.0";
pub const ADDR_OUTV: &str = "%QX0.1";

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("invalid plant configuration: {0}")]
    Invalid(String),
    #[error("cannot parse plant configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorLevels {
    #[serde(rename = "ULS")]
    pub uls: f64,
    #[serde(rename = "MLS")]
    pub mls: f64,
    #[serde(rename = "LLS")]
    pub lls: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FlowModel {
    Deterministic {
        rate: f64,
    },
    #[serde(rename_all = "camelCase")]
    Stochastic {
        mean_rate: f64,
        std_dev: f64,
        leak_min: f64,
        leak_max: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlantConfig {
    pub capacity: f64,
    pub sensor_levels: SensorLevels,
    pub flow_model: FlowModel,
    pub dt: f64,
    pub seed: u64,
}

impl PlantConfig {
    fn tank(flow_model: FlowModel, dt: f64, seed: u64) -> Self {
        PlantConfig {
            capacity: 100.0,
            sensor_levels: SensorLevels {
                uls: 90.0,
                mls: 50.0,
                lls: 10.0,
            },
            flow_model,
            dt,
            seed,
        }
    }

    /// Deterministic plant: 9 gal/s through any open valve, nothing through closed ones.
    pub fn p1(dt: f64) -> Self {
        Self::tank(FlowModel::Deterministic { rate: 9.0 }, dt, 0)
    }

    /// Stochastic plant: open flow ~ N(9, 2), closed-valve leakage ~ U(0, 0.5).
    pub fn p2(dt: f64, seed: u64) -> Self {
        Self::tank(
            FlowModel::Stochastic {
                mean_rate: 9.0,
                std_dev: 2.0,
                leak_min: 0.0,
                leak_max: 0.5,
            },
            dt,
            seed,
        )
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let s = &self.sensor_levels;
        if !(0.0 < s.lls && s.lls < s.mls && s.mls < s.uls && s.uls < self.capacity) {
            return Err(PlantError::Invalid(format!(
                "sensor levels must satisfy 0 < LLS < MLS < ULS < capacity, got {} / {} / {} / {}",
                s.lls, s.mls, s.uls, self.capacity
            )));
        }
        if !(self.dt > 0.0) {
            return Err(PlantError::Invalid(format!("dt must be positive, got {}", self.dt)));
        }
        match self.flow_model {
            FlowModel::Deterministic { rate } if !(rate >= 0.0) => {
                Err(PlantError::Invalid(format!("rate must be non-negative, got {rate}")))
            }
            FlowModel::Stochastic {
                std_dev,
                leak_min,
                leak_max,
                ..
            } if !(std_dev >= 0.0 && 0.0 <= leak_min && leak_min <= leak_max) => Err(PlantError::Invalid(
                "need stdDev >= 0 and 0 <= leakMin <= leakMax".to_string(),
            )),
            _ => Ok(()),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, PlantError> {
        let cfg: PlantConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plant config serializes")
    }

    /// Number of whole ticks in `duration_s` seconds (truncated at the tick boundary).
    pub fn ticks_for(&self, duration_s: f64) -> u64 {
        if duration_s <= 0.0 {
            return 0;
        }
        // tolerate representation error in e.g. 880 / 0.1
        (duration_s / self.dt + 1e-9).floor() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Sensors {
    pub uls: bool,
    pub mls: bool,
    pub lls: bool,
}

impl Sensors {
    /// Sensor readings as (address, value) pairs in address order.
    pub fn image(&self) -> [(&'static str, bool); 3] {
        [(ADDR_ULS, self.uls), (ADDR_LLS, self.lls), (ADDR_MLS, self.mls)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Actuators {
    pub inv: bool,
    pub outv: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub level: f64,
    pub tick: u64,
    pub sensors: Sensors,
    pub actuators: Actuators,
}

/// Sensor `s` reads true iff `level >= threshold(s)`.
pub fn read_sensors(level: f64, cfg: &PlantConfig) -> Sensors {
    let s = &cfg.sensor_levels;
    Sensors {
        uls: level >= s.uls,
        mls: level >= s.mls,
        lls: level >= s.lls,
    }
}

enum Flow {
    Deterministic(f64),
    Stochastic { open: Normal<f64>, leak: Uniform<f64> },
}

/// A running plant: configuration, current state and its random stream.
pub struct Plant {
    cfg: PlantConfig,
    state: PlantState,
    flow: Flow,
    rng: ChaCha8Rng,
}

impl Plant {
    /// Empty tank, valves closed.
    pub fn new(cfg: PlantConfig) -> Result<Self, PlantError> {
        Self::with_level(cfg, 0.0)
    }

    pub fn with_level(cfg: PlantConfig, level: f64) -> Result<Self, PlantError> {
        cfg.validate()?;
        let flow = match cfg.flow_model {
            FlowModel::Deterministic { rate } => Flow::Deterministic(rate),
            FlowModel::Stochastic {
                mean_rate,
                std_dev,
                leak_min,
                leak_max,
            } => Flow::Stochastic {
                open: Normal::new(mean_rate, std_dev).map_err(|e| PlantError::Invalid(e.to_string()))?,
                leak: Uniform::new_inclusive(leak_min, leak_max).map_err(|e| PlantError::Invalid(e.to_string()))?,
            },
        };
        let level = level.clamp(0.0, cfg.capacity);
        let state = PlantState {
            level,
            tick: 0,
            sensors: read_sensors(level, &cfg),
            actuators: Actuators::default(),
        };
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Plant { cfg, state, flow, rng })
    }

    pub fn config(&self) -> &PlantConfig {
        &self.cfg
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    fn valve_flow(&mut self, open: bool) -> f64 {
        match &self.flow {
            Flow::Deterministic(rate) => {
                if open {
                    *rate
                } else {
                    0.0
                }
            }
            Flow::Stochastic { open: normal, leak } => {
                if open {
                    normal.sample(&mut self.rng).max(0.0)
                } else {
                    self.rng.sample(leak)
                }
            }
        }
    }

    /// Advance one tick with the given valve commands.
    pub fn step(&mut self, inv: bool, outv: bool) -> &PlantState {
        let inflow = self.valve_flow(inv);
        let outflow = self.valve_flow(outv);
        let level = (self.state.level + (inflow - outflow) * self.cfg.dt).clamp(0.0, self.cfg.capacity);
        self.state = PlantState {
            level,
            tick: self.state.tick + 1,
            sensors: read_sensors(level, &self.cfg),
            actuators: Actuators { inv, outv },
        };
        &self.state
    }
}

/// One row of a closed-loop trajectory: the plant at the start of `tick`
/// and the valve commands applied during it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub tick: u64,
    pub time_s: f64,
    pub level: f64,
    #[serde(rename = "ULS")]
    pub uls: bool,
    #[serde(rename = "MLS")]
    pub mls: bool,
    #[serde(rename = "LLS")]
    pub lls: bool,
    pub inv: bool,
    pub outv: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub dt: f64,
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn new(dt: f64) -> Self {
        Trajectory { dt, rows: Vec::new() }
    }

    pub fn push(&mut self, state: &PlantState, commands: Actuators) {
        self.rows.push(TrajectoryRow {
            tick: state.tick,
            time_s: state.tick as f64 * self.dt,
            level: state.level,
            uls: state.sensors.uls,
            mls: state.sensors.mls,
            lls: state.sensors.lls,
            inv: commands.inv,
            outv: commands.outv,
        });
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV with header `tick,time_s,level,ULS,MLS,LLS,inv,outv`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PlantError> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record(["tick", "time_s", "level", "ULS", "MLS", "LLS", "inv", "outv"])?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, dt: f64) -> Result<Self, PlantError> {
        let mut r = csv::Reader::from_reader(input);
        let rows = r.deserialize().collect::<Result<Vec<TrajectoryRow>, _>>()?;
        Ok(Trajectory { dt, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p1() -> PlantConfig {
        PlantConfig::p1(1.0)
    }

    #[test]
    fn p1_fill_one_second() {
        let mut plant = Plant::with_level(p1(), 50.0).unwrap();
        assert_eq!(plant.step(true, false).level, 59.0);
    }

    #[test]
    fn p1_has_no_leakage() {
        let mut plant = Plant::with_level(p1(), 50.0).unwrap();
        assert_eq!(plant.step(false, false).level, 50.0);
    }

    #[test]
    fn p2_leakage_is_bounded() {
        let mut plant = Plant::with_level(PlantConfig::p2(0.1, 42), 50.0).unwrap();
        for _ in 0..100 {
            plant.step(false, false);
        }
        // both closed valves leak independently, each at most 0.5 gal/s
        assert!((plant.state().level - 50.0).abs() <= 5.0);
        assert_ne!(plant.state().level, 50.0);
    }

    #[test]
    fn sensor_thresholds_are_inclusive() {
        let cfg = p1();
        assert_eq!(read_sensors(90.0, &cfg), Sensors { uls: true, mls: true, lls: true });
        assert_eq!(read_sensors(50.0, &cfg), Sensors { uls: false, mls: true, lls: true });
        assert_eq!(read_sensors(5.0, &cfg), Sensors::default());
    }

    #[test]
    fn p1_fill_timing_from_lls() {
        let cfg = PlantConfig::p1(0.1);
        let mut plant = Plant::with_level(cfg.clone(), 10.0).unwrap();
        let expected = ((90.0f64 - 10.0) / (9.0 * cfg.dt)).ceil() as u64;
        let mut ticks = 0;
        while !plant.state().sensors.uls {
            plant.step(true, false);
            ticks += 1;
        }
        assert_eq!(ticks, expected);
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = p1();
        cfg.sensor_levels.mls = 95.0;
        assert!(Plant::new(cfg).is_err());
        let mut cfg = p1();
        cfg.dt = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = PlantConfig::p2(0.1, 7);
        let text = cfg.to_toml();
        assert!(text.contains("sensorLevels"));
        assert!(text.contains("leakMax"));
        assert_eq!(PlantConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn ticks_truncate_at_boundary() {
        let cfg = PlantConfig::p1(0.1);
        assert_eq!(cfg.ticks_for(880.0), 8800);
        assert_eq!(cfg.ticks_for(0.0), 0);
        assert_eq!(cfg.ticks_for(0.25), 2);
    }

    fn run(cfg: &PlantConfig, valves: &[(bool, bool)]) -> Vec<f64> {
        let mut plant = Plant::new(cfg.clone()).unwrap();
        valves.iter().map(|&(i, o)| plant.step(i, o).level).collect()
    }

    proptest! {
        #[test]
        fn level_stays_in_bounds(valves in proptest::collection::vec(any::<(bool, bool)>(), 0..400), seed in any::<u64>()) {
            for cfg in [PlantConfig::p1(0.5), PlantConfig::p2(0.5, seed)] {
                for level in run(&cfg, &valves) {
                    prop_assert!((0.0..=cfg.capacity).contains(&level));
                }
            }
        }

        #[test]
        fn trajectories_are_reproducible(valves in proptest::collection::vec(any::<(bool, bool)>(), 0..200), seed in any::<u64>()) {
            for cfg in [PlantConfig::p1(0.1), PlantConfig::p2(0.1, seed)] {
                let a: Vec<u64> = run(&cfg, &valves).iter().map(|l| l.to_bits()).collect();
                let b: Vec<u64> = run(&cfg, &valves).iter().map(|l| l.to_bits()).collect();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn sensors_are_monotone(a in 0.0f64..100.0, b in 0.0f64..100.0) {
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            let cfg = p1();
            let (h, l) = (read_sensors(hi, &cfg), read_sensors(lo, &cfg));
            prop_assert!(!l.uls || h.uls);
            prop_assert!(!l.mls || h.mls);
            prop_assert!(!l.lls || h.lls);
        }
    }
}
