//! Experiment metrics and the report file.
//!
//! `report.txt` holds one `key: value` line per scalar, a few indented
//! tables, and then a line `--- json ---` followed by the whole report as
//! pretty-printed JSON:
//!
//! ```text
//! {
//!   "dataset": string,
//!   "sample_count": int,                 // M, pipeline samples
//!   "accuracy": float,                   // over samples with known truth
//!   "per_class_accuracy": [{"class", "correct", "total", "accuracy"}],
//!   "queried_count": int,                // |𝒜|, initial labels included
//!   "queried_fraction": float,           // queried_count / M
//!   "oracle_queries": int,               // queries issued during the sweep
//!   "component_history": [{"eta", "components", "queries", "newly_labeled", "conflicting"}],
//!   "n_used": int, "witness_n": int, "sphere_dim": int,
//!   "kept_count": int, "uncertain_count": int, "pruned_count": int,
//!   "budget_exhausted": bool,
//!   "refine_trace": [{"n", "components"}],
//!   "wall_time_seconds": float,
//!   "config_echo": {key: string}
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub class: u32,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaStep {
    pub eta: f64,
    pub components: usize,
    pub queries: usize,
    pub newly_labeled: usize,
    pub conflicting: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineStep {
    pub n: usize,
    pub components: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub sample_count: usize,
    pub accuracy: f64,
    pub per_class_accuracy: Vec<ClassAccuracy>,
    pub queried_count: usize,
    pub queried_fraction: f64,
    pub oracle_queries: usize,
    pub component_history: Vec<EtaStep>,
    pub n_used: usize,
    pub witness_n: usize,
    pub sphere_dim: usize,
    pub kept_count: usize,
    pub uncertain_count: usize,
    pub pruned_count: usize,
    pub budget_exhausted: bool,
    pub refine_trace: Vec<RefineStep>,
    pub wall_time_seconds: f64,
    pub config_echo: BTreeMap<String, String>,
}

/// Overall and per-class accuracy. Samples whose truth is 0 (unknown) are
/// skipped; a sample with no prediction counts as wrong.
pub fn accuracy(predicted: &[Option<u32>], truth: &[u32]) -> (f64, Vec<ClassAccuracy>) {
    let mut per: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (p, &t) in predicted.iter().zip(truth) {
        if t == 0 {
            continue;
        }
        let e = per.entry(t).or_default();
        e.1 += 1;
        if *p == Some(t) {
            e.0 += 1;
        }
    }
    let (correct, total) = per.values().fold((0, 0), |(c, t), &(a, b)| (c + a, t + b));
    let overall = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
    let per_class = per
        .into_iter()
        .map(|(class, (correct, total))| ClassAccuracy {
            class,
            correct,
            total,
            accuracy: correct as f64 / total as f64,
        })
        .collect();
    (overall, per_class)
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k}: {v}");
        };
        line("dataset", self.dataset.clone());
        line("sample_count", self.sample_count.to_string());
        line("accuracy", format!("{:.6}", self.accuracy));
        line("queried_count", self.queried_count.to_string());
        line("queried_fraction", format!("{:.6}", self.queried_fraction));
        line("oracle_queries", self.oracle_queries.to_string());
        line("n_used", self.n_used.to_string());
        line("witness_n", self.witness_n.to_string());
        line("sphere_dim", self.sphere_dim.to_string());
        line("kept_count", self.kept_count.to_string());
        line("uncertain_count", self.uncertain_count.to_string());
        line("pruned_count", self.pruned_count.to_string());
        line("budget_exhausted", self.budget_exhausted.to_string());
        line("wall_time_seconds", format!("{:.3}", self.wall_time_seconds));
        s.push_str("per_class_accuracy:\n");
        for c in &self.per_class_accuracy {
            let _ = writeln!(s, "  class {}: {}/{} = {:.6}", c.class, c.correct, c.total, c.accuracy);
        }
        s.push_str("component_history:\n");
        for h in &self.component_history {
            let _ = writeln!(
                s,
                "  eta {:.6}: components {} queries {} newly_labeled {} conflicting {}",
                h.eta, h.components, h.queries, h.newly_labeled, h.conflicting
            );
        }
        if !self.refine_trace.is_empty() {
            s.push_str("refine_trace:\n");
            for r in &self.refine_trace {
                let _ = writeln!(s, "  n {}: {:?}", r.n, r.components);
            }
        }
        s.push_str("config:\n");
        for (k, v) in &self.config_echo {
            let _ = writeln!(s, "  {k} = {v}");
        }
        s.push_str("--- json ---\n");
        s.push_str(&self.to_json());
        s.push('\n');
        s
    }
}
