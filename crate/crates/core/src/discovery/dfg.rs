use std::collections::BTreeMap;
use std::fmt::Write;

use crate::eventlog::EventLog;

/// DFG node; `Start < Activity < End` in the derived order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Start,
    Activity(String),
    End,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DirectlyFollowsGraph {
    pub edges: BTreeMap<(Node, Node), u64>,
    pub start_counts: BTreeMap<String, u64>,
    pub end_counts: BTreeMap<String, u64>,
}

pub fn build_dfg(log: &EventLog) -> DirectlyFollowsGraph {
    let mut dfg = DirectlyFollowsGraph::default();
    for trace in &log.traces {
        if trace.is_empty() {
            continue;
        }
        let mut prev = Node::Start;
        for activity in trace.activities() {
            let node = Node::Activity(activity.to_string());
            *dfg.edges.entry((prev, node.clone())).or_default() += 1;
            prev = node;
        }
        *dfg.edges.entry((prev, Node::End)).or_default() += 1;
        let first = trace.events.first().expect("non-empty").activity.clone();
        let last = trace.events.last().expect("non-empty").activity.clone();
        *dfg.start_counts.entry(first).or_default() += 1;
        *dfg.end_counts.entry(last).or_default() += 1;
    }
    dfg
}

impl DirectlyFollowsGraph {
    pub fn frequency(&self, from: &Node, to: &Node) -> u64 {
        self.edges.get(&(from.clone(), to.clone())).copied().unwrap_or(0)
    }

    /// Drop, per source node, outgoing edges below the given percentile of
    /// that node's outgoing frequencies (nearest-rank on the sorted list).
    pub fn filtered(&self, percentile: f64) -> DirectlyFollowsGraph {
        if percentile <= 0.0 {
            return self.clone();
        }
        let mut by_source: BTreeMap<&Node, Vec<u64>> = BTreeMap::new();
        for ((from, _), &f) in &self.edges {
            by_source.entry(from).or_default().push(f);
        }
        let thresholds: BTreeMap<&Node, u64> = by_source
            .into_iter()
            .map(|(node, mut freqs)| {
                freqs.sort_unstable();
                let idx = ((freqs.len() - 1) as f64 * percentile).round() as usize;
                (node, freqs[idx])
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|((from, _), &f)| f >= thresholds[from])
            .map(|(k, &f)| (k.clone(), f))
            .collect();
        DirectlyFollowsGraph {
            edges,
            start_counts: self.start_counts.clone(),
            end_counts: self.end_counts.clone(),
        }
    }

    /// Graphviz rendering for inspection.
    pub fn to_dot(&self) -> String {
        let name = |n: &Node| match n {
            Node::Start => "START".to_string(),
            Node::Activity(a) => a.clone(),
            Node::End => "END".to_string(),
        };
        let mut out = String::from("digraph dfg {\n  rankdir=LR;\n");
        for ((from, to), f) in &self.edges {
            let _ = writeln!(out, "  \"{}\" -> \"{}\" [label=\"{f}\"];", name(from), name(to));
        }
        out.push_str("}\n");
        out
    }
}
