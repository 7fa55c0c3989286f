//! Scenario presets and the end-to-end stages: record, convert, discover,
//! train, substitute, validate.

use std::fmt;
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closed_loop::{run_closed_loop, LoopError, Recording};
use crate::controller::{
    choice_points, compare_trajectories, run_substituted, CompareError, Comparison, ControllerError, ControllerOptions,
    RunReport,
};
use crate::discovery::{build_dfg, discover_net, DirectlyFollowsGraph, DiscoveryConfig, DiscoveryError};
use crate::eventlog::{reduce_log, split_traces, EventLog, LogError, LogMeta};
use crate::ladder::{c1, c2, LadderProgram};
use crate::nap::{estimate_decay_params, sample_log, train, NapError, NapModel, TimedStateSample, TrainConfig};
use crate::petri::{replay_trace, LabeledPetriNet, PetriError};
use crate::plant::{PlantConfig, DEFAULT_DT, RNG_ALGORITHM};

/// The low sensor going dark starts every cycle.
pub const RESET_ACTIVITY: &str = "%IX0.1_false";
pub const DEFAULT_DURATION_S: f64 = 880.0;
pub const DEFAULT_SEED: u64 = 1;
/// One tick of nominal flow, in gallons.
pub const LEVEL_TOLERANCE: f64 = 0.9;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("unknown scenario `{0}` (expected 1, 2 or 3)")]
    UnknownScenario(String),
    #[error("invalid split `{0}` (expected TRAIN/TEST, e.g. 17/5)")]
    BadSplit(String),
    #[error("no complete cycle in the log")]
    NoCompleteCycle,
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Discovery(#[from] DiscoveryError),
    #[error(transparent)]
    Net(#[from] PetriError),
    #[error(transparent)]
    Predictor(#[from] NapError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Compare(#[from] CompareError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Two-sensor latch on the deterministic plant.
    S1,
    /// Counter-based three-fill cycle on the deterministic plant.
    S2,
    /// The counter program on the noisy, leaky plant.
    S3,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::S1, Scenario::S2, Scenario::S3];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::S1 => "scenario1",
            Scenario::S2 => "scenario2",
            Scenario::S3 => "scenario3",
        }
    }

    pub fn program(self) -> LadderProgram {
        match self {
            Scenario::S1 => c1(),
            Scenario::S2 | Scenario::S3 => c2(),
        }
    }

    /// Plant for recording the original controller.
    pub fn plant(self, dt: f64, seed: u64) -> PlantConfig {
        match self {
            Scenario::S1 | Scenario::S2 => PlantConfig::p1(dt),
            Scenario::S3 => PlantConfig::p2(dt, derive_seed(seed, "plant")),
        }
    }

    /// Plant for the substituted run; the noisy plant gets a fresh seed.
    pub fn substitute_plant(self, dt: f64, seed: u64) -> PlantConfig {
        match self {
            Scenario::S1 | Scenario::S2 => PlantConfig::p1(dt),
            Scenario::S3 => PlantConfig::p2(dt, derive_seed(seed, "substitute-plant")),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "s1" | "scenario1" => Ok(Scenario::S1),
            "2" | "s2" | "scenario2" => Ok(Scenario::S2),
            "3" | "s3" | "scenario3" => Ok(Scenario::S3),
            _ => Err(PipelineError::UnknownScenario(s.to_string())),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent sub-seed for a named random stream.
pub fn derive_seed(seed: u64, stream: &str) -> u64 {
    // FNV-1a of the stream name, mixed with the master seed
    let name = stream
        .bytes()
        .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01B3));
    splitmix64(seed ^ splitmix64(name))
}

/// Number of complete cycles used for training and for testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: usize,
    pub test: usize,
}

impl Default for Split {
    fn default() -> Self {
        Split { train: 17, test: 5 }
    }
}

impl FromStr for Split {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PipelineError::BadSplit(s.to_string());
        let (a, b) = s.split_once('/').ok_or_else(bad)?;
        let split = Split {
            train: a.trim().parse().map_err(|_| bad())?,
            test: b.trim().parse().map_err(|_| bad())?,
        };
        if split.train == 0 {
            return Err(bad());
        }
        Ok(split)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.train, self.test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PipelineConfig {
    pub scenario: Scenario,
    pub duration_s: f64,
    pub dt: f64,
    pub seed: u64,
    pub edge_filter: f64,
    pub epochs: usize,
    pub split: Split,
    pub strict: bool,
    /// Train a predictor even when the net has no choice point.
    pub force_predictor: bool,
}

impl PipelineConfig {
    pub fn new(scenario: Scenario) -> Self {
        PipelineConfig {
            scenario,
            duration_s: DEFAULT_DURATION_S,
            dt: DEFAULT_DT,
            seed: DEFAULT_SEED,
            edge_filter: 0.0,
            epochs: TrainConfig::default().epochs,
            split: Split::default(),
            strict: false,
            force_predictor: false,
        }
    }

    pub fn meta(&self) -> LogMeta {
        LogMeta {
            scenario: self.scenario.name().to_string(),
            reset: RESET_ACTIVITY.to_string(),
            duration_s: self.duration_s,
            dt_s: self.dt,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            seed: derive_seed(self.seed, "nap-init"),
            ..TrainConfig::default()
        }
    }
}

pub fn record(cfg: &PipelineConfig) -> Result<Recording, PipelineError> {
    let plant = cfg.scenario.plant(cfg.dt, cfg.seed);
    Ok(run_closed_loop(&cfg.scenario.program(), &plant, cfg.duration_s)?)
}

pub fn convert(rec: &Recording, meta: LogMeta) -> Result<EventLog, PipelineError> {
    Ok(split_traces(reduce_log(&rec.io_log)?, meta))
}

/// Mine on complete cycles only: the cut-off cycles at either end of the
/// recording would add spurious start and end edges.
pub fn discover(log: &EventLog, edge_filter: f64) -> Result<(LabeledPetriNet, DirectlyFollowsGraph), PipelineError> {
    let complete = log.complete();
    if complete.traces.is_empty() {
        return Err(PipelineError::NoCompleteCycle);
    }
    let cfg = DiscoveryConfig {
        edge_filter_percentile: edge_filter,
    };
    let net = discover_net(&complete, &cfg)?;
    info!(
        "discovered {} places and {} transitions from {} cycles",
        net.place_count(),
        net.transitions().len(),
        complete.traces.len()
    );
    Ok((net, build_dfg(&complete).filtered(edge_filter)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainReport {
    pub choice_points: usize,
    pub train_traces: usize,
    pub test_traces: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub skipped_traces: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub final_loss: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: NapModel,
    pub train_samples: Vec<TimedStateSample>,
    pub test_samples: Vec<TimedStateSample>,
    pub report: TrainReport,
}

/// Train on the first `split.train` complete cycles and test on the last
/// `split.test` of the rest.
pub fn train_predictor(net: &LabeledPetriNet, log: &EventLog, cfg: &PipelineConfig) -> Result<Trained, PipelineError> {
    let complete = log.complete();
    if complete.traces.is_empty() {
        return Err(PipelineError::NoCompleteCycle);
    }
    let n = complete.traces.len();
    let train_n = cfg.split.train.min(n);
    let test_n = cfg.split.test.min(n - train_n);
    let train_log = complete.with_traces(complete.traces[..train_n].to_vec());
    let test_log = complete.with_traces(complete.traces[n - test_n..].to_vec());
    let params = estimate_decay_params(net, &train_log)?;
    let train_set = sample_log(net, &train_log, &params)?;
    let test_set = sample_log(net, &test_log, &params)?;
    let mut model = train(&train_set.samples, &cfg.train_config())?.with_decay(params);
    let test_accuracy = model.accuracy(&test_set.samples)?;
    model.training.test_accuracy = Some(test_accuracy);
    let report = TrainReport {
        choice_points: choice_points(net)?.len(),
        train_traces: train_n,
        test_traces: test_n,
        train_samples: train_set.samples.len(),
        test_samples: test_set.samples.len(),
        skipped_traces: train_set.skipped + test_set.skipped,
        train_accuracy: model.training.train_accuracy,
        test_accuracy,
        final_loss: model.training.final_loss,
        epochs: cfg.epochs,
    };
    info!(
        "predictor: train accuracy {:.4}, test accuracy {:.4}",
        report.train_accuracy, report.test_accuracy
    );
    Ok(Trained {
        model,
        train_samples: train_set.samples,
        test_samples: test_set.samples,
        report,
    })
}

pub fn needs_training(net: &LabeledPetriNet, cfg: &PipelineConfig) -> Result<bool, PipelineError> {
    Ok(cfg.force_predictor || !choice_points(net)?.is_empty())
}

pub fn substitute(
    net: &LabeledPetriNet,
    model: Option<&NapModel>,
    cfg: &PipelineConfig,
) -> Result<(Recording, RunReport), PipelineError> {
    let plant = cfg.scenario.substitute_plant(cfg.dt, cfg.seed);
    Ok(run_substituted(
        net,
        model,
        &plant,
        cfg.duration_s,
        ControllerOptions { strict: cfg.strict },
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Validation {
    pub scenario: Scenario,
    /// Whether both runs used the same plant, so trajectories must coincide.
    pub same_plant: bool,
    pub comparison: Comparison,
    pub run: RunReport,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Same plant: identical event order and levels within [`LEVEL_TOLERANCE`].
/// Either way: no deadlock and the same set of cycle behaviours.
pub fn validate(
    scenario: Scenario,
    original: &Recording,
    substituted: &Recording,
    run: &RunReport,
) -> Result<Validation, PipelineError> {
    let same_plant = scenario != Scenario::S3;
    let comparison = compare_trajectories(original, substituted, RESET_ACTIVITY)?;
    let mut failures = Vec::new();
    if run.deadlocked {
        failures.push(format!(
            "deadlock: {}",
            run.diagnostic.as_deref().unwrap_or("no diagnostic")
        ));
    }
    if !comparison.lengths_equal {
        failures.push(format!(
            "runs differ in length: {} vs {} ticks",
            original.trajectory.len(),
            substituted.trajectory.len()
        ));
    }
    if !comparison.cycle_sequences_equal {
        failures.push("cycle behaviours differ".to_string());
    }
    if same_plant {
        if !comparison.event_sequence_equal {
            failures.push("event sequences differ".to_string());
        }
        if comparison.max_level_diff > LEVEL_TOLERANCE {
            failures.push(format!(
                "level differs by {:.3} > {LEVEL_TOLERANCE}",
                comparison.max_level_diff
            ));
        }
    }
    Ok(Validation {
        scenario,
        same_plant,
        comparison,
        run: run.clone(),
        passed: failures.is_empty(),
        failures,
    })
}

/// Every artifact of one end-to-end run.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub original: Recording,
    pub log: EventLog,
    pub net: LabeledPetriNet,
    pub dfg: DirectlyFollowsGraph,
    pub trained: Option<Trained>,
    pub substituted: Recording,
    pub run: RunReport,
    pub validation: Validation,
}

/// How well the complete cycles replay on the discovered net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayFitness {
    pub traces: usize,
    pub fitting_traces: usize,
    pub missing_tokens: u32,
}

pub fn replay_fitness(net: &LabeledPetriNet, log: &EventLog) -> Result<ReplayFitness, PipelineError> {
    let complete = log.complete();
    let mut fit = ReplayFitness {
        traces: complete.traces.len(),
        fitting_traces: 0,
        missing_tokens: 0,
    };
    for trace in &complete.traces {
        let r = replay_trace(net, trace)?;
        if r.reached_final && r.missing_tokens == 0 {
            fit.fitting_traces += 1;
        }
        fit.missing_tokens += r.missing_tokens;
    }
    Ok(fit)
}

/// Compact report of one end-to-end run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub scenario: Scenario,
    pub seed: u64,
    pub rng: String,
    pub ticks: usize,
    pub traces: usize,
    pub complete_traces: usize,
    pub places: usize,
    pub transitions: usize,
    pub choice_points: usize,
    pub replay: ReplayFitness,
    pub training: Option<TrainReport>,
    pub run: RunReport,
    pub passed: bool,
    pub failures: Vec<String>,
}

impl PipelineOutcome {
    pub fn summary(&self, cfg: &PipelineConfig) -> Result<Summary, PipelineError> {
        Ok(Summary {
            scenario: cfg.scenario,
            seed: cfg.seed,
            rng: RNG_ALGORITHM.to_string(),
            ticks: self.original.trajectory.len(),
            traces: self.log.traces.len(),
            complete_traces: self.log.complete().traces.len(),
            places: self.net.places().len(),
            transitions: self.net.transitions().len(),
            choice_points: choice_points(&self.net)?.len(),
            replay: replay_fitness(&self.net, &self.log)?,
            training: self.trained.as_ref().map(|t| t.report.clone()),
            run: self.run.clone(),
            passed: self.validation.passed,
            failures: self.validation.failures.clone(),
        })
    }
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    let original = record(cfg)?;
    let log = convert(&original, cfg.meta())?;
    let (net, dfg) = discover(&log, cfg.edge_filter)?;
    let trained = if needs_training(&net, cfg)? {
        Some(train_predictor(&net, &log, cfg)?)
    } else {
        None
    };
    let (substituted, run) = substitute(&net, trained.as_ref().map(|t| &t.model), cfg)?;
    let validation = validate(cfg.scenario, &original, &substituted, &run)?;
    Ok(PipelineOutcome {
        original,
        log,
        net,
        dfg,
        trained,
        substituted,
        run,
        validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_parse() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert_eq!("2".parse::<Scenario>().unwrap(), Scenario::S2);
        assert!("4".parse::<Scenario>().is_err());
    }

    #[test]
    fn split_parses() {
        assert_eq!("17/5".parse::<Split>().unwrap(), Split::default());
        assert!("17".parse::<Split>().is_err());
        assert!("0/5".parse::<Split>().is_err());
        assert_eq!(Split::default().to_string(), "17/5");
    }

    #[test]
    fn derived_seeds_differ_per_stream() {
        let a = derive_seed(1, "plant");
        assert_eq!(a, derive_seed(1, "plant"));
        assert_ne!(a, derive_seed(1, "substitute-plant"));
        assert_ne!(a, derive_seed(2, "plant"));
    }

    #[test]
    fn short_run_without_cycles() {
        let mut cfg = PipelineConfig::new(Scenario::S1);
        cfg.duration_s = 5.0;
        let rec = record(&cfg).unwrap();
        let log = convert(&rec, cfg.meta()).unwrap();
        assert!(matches!(discover(&log, 0.0), Err(PipelineError::NoCompleteCycle)));
    }
}
