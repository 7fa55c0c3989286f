use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter};

use plcmine::discovery::Node;
use plcmine::eventlog::{read_event_log, read_io_log, write_event_log, write_io_log};
use plcmine::nap::{NapModel, NextLabel};
use plcmine::pipeline::{self, replay_fitness, PipelineConfig, Scenario};
use plcmine::{run_pipeline, LabeledPetriNet, PipelineOutcome};

fn outcome(scenario: Scenario) -> (PipelineConfig, PipelineOutcome) {
    let cfg = PipelineConfig::new(scenario);
    let out = run_pipeline(&cfg).expect("pipeline runs");
    (cfg, out)
}

fn has_cycle(edges: &BTreeSet<(String, String)>) -> bool {
    let mut succ: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in edges {
        succ.entry(a).or_default().push(b);
    }
    fn visit<'a>(
        n: &'a str,
        succ: &BTreeMap<&'a str, Vec<&'a str>>,
        on_stack: &mut BTreeSet<&'a str>,
        done: &mut BTreeSet<&'a str>,
    ) -> bool {
        if on_stack.contains(n) {
            return true;
        }
        if !done.insert(n) {
            return false;
        }
        on_stack.insert(n);
        let found = succ.get(n).into_iter().flatten().any(|m| visit(m, succ, on_stack, done));
        on_stack.remove(n);
        found
    }
    let (mut on_stack, mut done) = (BTreeSet::new(), BTreeSet::new());
    succ.keys().any(|n| visit(n, &succ, &mut on_stack, &mut done))
}

#[test]
fn counter_scenario_dfg_has_a_loop() {
    let (_, out) = outcome(Scenario::S2);
    let edges: BTreeSet<(String, String)> = out
        .dfg
        .edges
        .keys()
        .filter_map(|(a, b)| match (a, b) {
            (Node::Activity(a), Node::Activity(b)) => Some((a.clone(), b.clone())),
            _ => None,
        })
        .collect();
    assert!(has_cycle(&edges));

    let (_, s1) = outcome(Scenario::S1);
    let s1_edges: BTreeSet<(String, String)> = s1
        .dfg
        .edges
        .keys()
        .filter_map(|(a, b)| match (a, b) {
            (Node::Activity(a), Node::Activity(b)) => Some((a.clone(), b.clone())),
            _ => None,
        })
        .collect();
    assert!(!has_cycle(&s1_edges));
}

#[test]
fn complete_cycles_replay_without_missing_tokens() {
    for s in Scenario::ALL {
        let (_, out) = outcome(s);
        let fit = replay_fitness(&out.net, &out.log).unwrap();
        assert_eq!(fit.fitting_traces, fit.traces, "{s:?}");
        assert_eq!(fit.missing_tokens, 0, "{s:?}");
    }
}

#[test]
fn same_marking_different_counts_different_labels() {
    let (_, out) = outcome(Scenario::S2);
    let trained = out.trained.as_ref().expect("counter scenario trains a predictor");
    let mut by_marking: BTreeMap<&[u32], BTreeMap<&[u32], BTreeSet<String>>> = BTreeMap::new();
    for s in &trained.train_samples {
        by_marking
            .entry(&s.marking)
            .or_default()
            .entry(&s.counts)
            .or_default()
            .insert(s.label.to_string());
    }
    let ambiguous = by_marking.values().any(|per_counts| {
        let labels: BTreeSet<&String> = per_counts.values().flatten().collect();
        labels.len() > 1 && per_counts.values().all(|l| l.len() == 1)
    });
    assert!(ambiguous, "counts should separate next activities at the decision marking");
}

#[test]
fn predictor_resolves_the_decision_marking() {
    let (_, out) = outcome(Scenario::S2);
    let trained = out.trained.as_ref().unwrap();
    let mut saw_end = false;
    let mut saw_activity = false;
    for s in &trained.test_samples {
        let top = &trained.model.predict_next(s).unwrap()[0].0;
        assert_eq!(top, &s.label);
        match s.label {
            NextLabel::End => saw_end = true,
            NextLabel::Activity(_) => saw_activity = true,
        }
    }
    assert!(saw_end && saw_activity);
    assert_eq!(trained.model.training.test_accuracy, Some(1.0));
}

#[test]
fn artifacts_round_trip_through_files() {
    let (_, out) = outcome(Scenario::S2);
    let dir = tempfile::tempdir().unwrap();

    let io_path = dir.path().join("io_log.csv");
    write_io_log(&out.original.io_log, BufWriter::new(File::create(&io_path).unwrap())).unwrap();
    let io = read_io_log(BufReader::new(File::open(&io_path).unwrap())).unwrap();
    assert_eq!(io, out.original.io_log);

    let log_path = dir.path().join("event_log.json");
    write_event_log(&out.log, BufWriter::new(File::create(&log_path).unwrap())).unwrap();
    assert_eq!(read_event_log(BufReader::new(File::open(&log_path).unwrap())).unwrap(), out.log);

    let net_path = dir.path().join("net.json");
    std::fs::write(&net_path, out.net.to_json()).unwrap();
    let net = LabeledPetriNet::from_json(&std::fs::read_to_string(&net_path).unwrap()).unwrap();
    assert_eq!(net, out.net);

    let model = &out.trained.as_ref().unwrap().model;
    let model_path = dir.path().join("model.json");
    std::fs::write(&model_path, model.to_json()).unwrap();
    let back = NapModel::from_json(&std::fs::read_to_string(&model_path).unwrap()).unwrap();
    assert_eq!(&back, model);
}

#[test]
fn substituted_runs_never_open_both_valves() {
    for s in Scenario::ALL {
        for seed in 1..=3 {
            let mut cfg = PipelineConfig::new(s);
            cfg.seed = seed;
            let out = run_pipeline(&cfg).unwrap();
            assert!(
                out.substituted.trajectory.rows.iter().all(|r| !(r.inv && r.outv)),
                "{s:?} seed {seed}"
            );
            assert_eq!(out.run.violations, 0, "{s:?} seed {seed}");
        }
    }
}

#[test]
fn summary_reports_counts_and_rng() {
    let (cfg, out) = outcome(Scenario::S1);
    let summary = out.summary(&cfg).unwrap();
    assert_eq!(summary.traces, 50);
    assert_eq!(summary.complete_traces, 48);
    assert_eq!(summary.ticks, 8800);
    assert!(summary.rng.contains("ChaCha8"));
    assert!(summary.training.is_none());
    assert!(summary.passed);
}

#[test]
fn staged_functions_agree_with_run_pipeline() {
    let (cfg, whole) = outcome(Scenario::S3);
    let rec = pipeline::record(&cfg).unwrap();
    let log = pipeline::convert(&rec, cfg.meta()).unwrap();
    let (net, _) = pipeline::discover(&log, cfg.edge_filter).unwrap();
    assert_eq!(net, whole.net);
    let trained = pipeline::train_predictor(&net, &log, &cfg).unwrap();
    assert_eq!(trained.model, whole.trained.as_ref().unwrap().model);
    let (sub, run) = pipeline::substitute(&net, Some(&trained.model), &cfg).unwrap();
    assert_eq!(run, whole.run);
    assert_eq!(sub.io_log, whole.substituted.io_log);
}
