//! `plcmine`: record a PLC-controlled tank, mine its logic, and drive the
//! tank with the mined model.

mod svg;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use plcmine::closed_loop::Recording;
use plcmine::controller::RunReport;
use plcmine::eventlog::{read_event_log, read_io_log, reduce_log, write_event_log, write_io_log, EventLog};
use plcmine::nap::{write_samples_csv, NapModel};
use plcmine::pipeline::{self, Split, Trained, Validation};
use plcmine::plant::{Trajectory, DEFAULT_DT};
use plcmine::{LabeledPetriNet, PipelineConfig, Scenario};

const IO_LOG: &str = "io_log.csv";
const TRAJECTORY: &str = "trajectory.csv";
const TRAJECTORY_SVG: &str = "trajectory.svg";
const EVENT_LOG: &str = "event_log.json";
const NET: &str = "net.json";
const DFG: &str = "dfg.dot";
const MODEL: &str = "model.json";
const SAMPLES: &str = "samples.csv";
const TRAIN_REPORT: &str = "report.json";
const SUB_IO_LOG: &str = "substituted_io_log.csv";
const SUB_TRAJECTORY: &str = "substituted_trajectory.csv";
const SUB_TRAJECTORY_SVG: &str = "substituted_trajectory.svg";
const RUN_REPORT: &str = "run_report.json";
const VALIDATION: &str = "validation.json";
const SUMMARY: &str = "summary.json";

/// Exit status when the substituted controller fails validation.
const EXIT_VALIDATION_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "plcmine", version, about = "Mine PLC logic from tapped IO and substitute it")]
struct Cli {
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the original controller and tap its IO.
    Record(Opts),
    /// Reduce the IO log to an event log split into cycles.
    Convert(Opts),
    /// Mine a Petri net from the event log.
    Discover(Opts),
    /// Train the next-activity predictor where the net has a choice.
    Train(Opts),
    /// Drive a fresh plant with the mined net.
    Substitute(Opts),
    /// Compare the original and substituted runs.
    Validate(Opts),
    /// All stages in order.
    Pipeline(Opts),
}

#[derive(Args, Clone)]
struct Opts {
    /// 1, 2 or 3.
    #[arg(long, default_value = "1")]
    scenario: Scenario,
    /// Simulated seconds.
    #[arg(long, default_value_t = pipeline::DEFAULT_DURATION_S)]
    duration: f64,
    /// Scan period in seconds.
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = pipeline::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Per-node percentile below which directly-follows edges are dropped.
    #[arg(long, default_value_t = 0.0)]
    edge_filter: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    /// Complete cycles for training and testing, as TRAIN/TEST.
    #[arg(long, default_value = "17/5")]
    split: Split,
    /// Abort on an input change the net cannot explain.
    #[arg(long)]
    strict: bool,
    /// Train and use a predictor even without choice points.
    #[arg(long)]
    nap: bool,
}

impl Opts {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            scenario: self.scenario,
            duration_s: self.duration,
            dt: self.dt,
            seed: self.seed,
            edge_filter: self.edge_filter,
            epochs: self.epochs,
            split: self.split,
            strict: self.strict,
            force_predictor: self.nap,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_recording(opts: &Opts, rec: &Recording, io: &str, traj: &str, svg_name: &str, title: &str) -> Result<()> {
    write_io_log(&rec.io_log, create(&opts.path(io))?).with_context(|| format!("writing {io}"))?;
    rec.trajectory
        .write_csv(create(&opts.path(traj))?)
        .with_context(|| format!("writing {traj}"))?;
    let capacity = opts.scenario.plant(opts.dt, opts.seed).capacity;
    write_text(&opts.path(svg_name), &svg::render(&rec.trajectory, title, capacity))
}

fn read_recording(opts: &Opts, io: &str, traj: &str) -> Result<Recording> {
    Ok(Recording {
        io_log: read_io_log(open(&opts.path(io))?).with_context(|| format!("reading {io}"))?,
        trajectory: Trajectory::read_csv(open(&opts.path(traj))?, opts.dt).with_context(|| format!("reading {traj}"))?,
    })
}

fn read_net(opts: &Opts) -> Result<LabeledPetriNet> {
    let text = fs::read_to_string(opts.path(NET)).with_context(|| format!("reading {NET}"))?;
    LabeledPetriNet::from_json(&text).with_context(|| format!("parsing {NET}"))
}

fn read_log(opts: &Opts) -> Result<EventLog> {
    read_event_log(open(&opts.path(EVENT_LOG))?).with_context(|| format!("reading {EVENT_LOG}"))
}

fn write_event_log_file(opts: &Opts, log: &EventLog) -> Result<()> {
    write_event_log(log, create(&opts.path(EVENT_LOG))?).with_context(|| format!("writing {EVENT_LOG}"))?;
    println!(
        "{} traces ({} complete cycles), {} events",
        log.traces.len(),
        log.complete().traces.len(),
        log.event_count()
    );
    Ok(())
}

fn write_net_files(opts: &Opts, net: &LabeledPetriNet, dfg_dot: &str) -> Result<()> {
    write_text(&opts.path(NET), &(net.to_json() + "\n"))?;
    write_text(&opts.path(DFG), dfg_dot)?;
    println!(
        "net: {} places, {} transitions",
        net.place_count(),
        net.transitions().len()
    );
    Ok(())
}

fn write_trained(opts: &Opts, net: &LabeledPetriNet, trained: &Trained) -> Result<()> {
    write_text(&opts.path(MODEL), &(trained.model.to_json() + "\n"))?;
    write_samples_csv(net, &trained.train_samples, create(&opts.path(SAMPLES))?).context("writing samples")?;
    write_json(&opts.path(TRAIN_REPORT), &trained.report)?;
    println!(
        "predictor: train accuracy {:.4}, test accuracy {:.4}",
        trained.report.train_accuracy, trained.report.test_accuracy
    );
    Ok(())
}

fn write_substituted(opts: &Opts, rec: &Recording, report: &RunReport) -> Result<()> {
    write_recording(opts, rec, SUB_IO_LOG, SUB_TRAJECTORY, SUB_TRAJECTORY_SVG, "substituted controller")?;
    write_json(&opts.path(RUN_REPORT), report)?;
    let r = &report.rule_counts;
    println!(
        "substituted run: {} cycles, rules r1={} r2={} r3={} hidden={}, {} violations{}",
        report.cycles,
        r.r1,
        r.r2,
        r.r3,
        r.hidden,
        report.violations,
        if report.deadlocked { ", deadlocked" } else { "" }
    );
    Ok(())
}

fn finish_validation(opts: &Opts, v: &Validation) -> Result<ExitCode> {
    write_json(&opts.path(VALIDATION), v)?;
    println!(
        "validation: max level diff {:.3}, event order {}, cycles {}",
        v.comparison.max_level_diff,
        if v.comparison.event_sequence_equal { "equal" } else { "differs" },
        if v.comparison.cycle_sequences_equal { "equal" } else { "differ" }
    );
    if v.passed {
        println!("PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &v.failures {
            println!("FAIL: {f}");
        }
        Ok(ExitCode::from(EXIT_VALIDATION_FAILED))
    }
}

fn load_model(opts: &Opts, net: &LabeledPetriNet) -> Result<Option<NapModel>> {
    let path = opts.path(MODEL);
    let needed = pipeline::needs_training(net, &opts.config())?;
    if !needed {
        return Ok(None);
    }
    if !path.exists() {
        bail!("the net has a choice point but {} is missing; run `train` first", path.display());
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(NapModel::from_json(&text).with_context(|| format!("parsing {}", path.display()))?))
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Record(opts) => {
            let rec = pipeline::record(&opts.config())?;
            write_recording(&opts, &rec, IO_LOG, TRAJECTORY, TRAJECTORY_SVG, opts.scenario.name())?;
            println!(
                "recorded {} ticks, {} change events",
                rec.trajectory.len(),
                reduce_log(&rec.io_log)?.len()
            );
        }
        Command::Convert(opts) => {
            let rec = Recording {
                io_log: read_io_log(open(&opts.path(IO_LOG))?).context("reading IO log")?,
                trajectory: Trajectory::new(opts.dt),
            };
            let log = pipeline::convert(&rec, opts.config().meta())?;
            write_event_log_file(&opts, &log)?;
        }
        Command::Discover(opts) => {
            let log = read_log(&opts)?;
            let (net, dfg) = pipeline::discover(&log, opts.edge_filter)?;
            write_net_files(&opts, &net, &dfg.to_dot())?;
        }
        Command::Train(opts) => {
            let net = read_net(&opts)?;
            let cfg = opts.config();
            if !pipeline::needs_training(&net, &cfg)? {
                println!("the net has no choice point; no predictor needed (pass --nap to train one anyway)");
                return Ok(ExitCode::SUCCESS);
            }
            let trained = pipeline::train_predictor(&net, &read_log(&opts)?, &cfg)?;
            write_trained(&opts, &net, &trained)?;
        }
        Command::Substitute(opts) => {
            let net = read_net(&opts)?;
            let model = load_model(&opts, &net)?;
            let (rec, report) = pipeline::substitute(&net, model.as_ref(), &opts.config())?;
            write_substituted(&opts, &rec, &report)?;
        }
        Command::Validate(opts) => {
            let original = read_recording(&opts, IO_LOG, TRAJECTORY)?;
            let substituted = read_recording(&opts, SUB_IO_LOG, SUB_TRAJECTORY)?;
            let text = fs::read_to_string(opts.path(RUN_REPORT)).with_context(|| format!("reading {RUN_REPORT}"))?;
            let report: RunReport = serde_json::from_str(&text).with_context(|| format!("parsing {RUN_REPORT}"))?;
            let v = pipeline::validate(opts.scenario, &original, &substituted, &report)?;
            return finish_validation(&opts, &v);
        }
        Command::Pipeline(opts) => {
            let cfg = opts.config();
            let out = pipeline::run_pipeline(&cfg)?;
            write_recording(&opts, &out.original, IO_LOG, TRAJECTORY, TRAJECTORY_SVG, opts.scenario.name())?;
            write_event_log_file(&opts, &out.log)?;
            write_net_files(&opts, &out.net, &out.dfg.to_dot())?;
            if let Some(trained) = &out.trained {
                write_trained(&opts, &out.net, trained)?;
            }
            write_substituted(&opts, &out.substituted, &out.run)?;
            write_json(&opts.path(SUMMARY), &out.summary(&cfg)?)?;
            return finish_validation(&opts, &out.validation);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors exit 1 so that 2 stays reserved for failed validation
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    info!("plcmine {}", env!("CARGO_PKG_VERSION"));
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
