//! The active-learning sweep.
//!
//! For η = η_start, η_start + η_step, … ≤ η_max the kept samples are grouped
//! into η-graph components. A component with no queried member is labeled by
//! asking the oracle about its member with the largest F_{n,M} value; a
//! component whose queried members agree propagates that label; a component
//! with disagreeing queried members is left alone. Labels are never
//! overwritten once assigned.

use std::collections::HashMap;

use crate::error::{Result, ScaleError};
use crate::graph::EtaSweep;
use crate::preprocess::SpherePoint;
use crate::support::SupportEstimate;

/// Source of ground-truth labels. Each distinct index is charged once.
pub trait LabelOracle {
    fn query(&mut self, index: usize) -> Result<u32>;
    fn query_count(&self) -> usize;
}

/// Oracle backed by a full label vector.
#[derive(Clone, Debug)]
pub struct TruthOracle {
    labels: Vec<u32>,
    answered: HashMap<usize, u32>,
}

impl TruthOracle {
    pub fn new(labels: Vec<u32>) -> Self {
        TruthOracle {
            labels,
            answered: HashMap::new(),
        }
    }
}

impl LabelOracle for TruthOracle {
    fn query(&mut self, index: usize) -> Result<u32> {
        if let Some(&l) = self.answered.get(&index) {
            return Ok(l);
        }
        let label = *self
            .labels
            .get(index)
            .ok_or_else(|| ScaleError::param(format!("oracle has no label for index {index}")))?;
        if label == 0 {
            return Err(ScaleError::data(format!("oracle label for index {index} is background")));
        }
        self.answered.insert(index, label);
        Ok(label)
    }

    fn query_count(&self) -> usize {
        self.answered.len()
    }
}

/// Oracle replaying recorded `(index, label)` answers.
#[derive(Clone, Debug)]
pub struct ReplayOracle {
    answers: HashMap<usize, u32>,
    asked: HashMap<usize, u32>,
}

impl ReplayOracle {
    pub fn new(pairs: impl IntoIterator<Item = (usize, u32)>) -> Result<Self> {
        let mut answers = HashMap::new();
        for (i, l) in pairs {
            if l == 0 {
                return Err(ScaleError::data(format!("replay label for index {i} is 0")));
            }
            if let Some(prev) = answers.insert(i, l) {
                if prev != l {
                    return Err(ScaleError::data(format!("replay file gives index {i} two labels")));
                }
            }
        }
        Ok(ReplayOracle {
            answers,
            asked: HashMap::new(),
        })
    }
}

impl LabelOracle for ReplayOracle {
    fn query(&mut self, index: usize) -> Result<u32> {
        let label = *self
            .answers
            .get(&index)
            .ok_or_else(|| ScaleError::data(format!("replay oracle has no answer for index {index}")))?;
        self.asked.insert(index, label);
        Ok(label)
    }

    fn query_count(&self) -> usize {
        self.asked.len()
    }
}

/// Sweep parameters (angles in radians).
#[derive(Clone, Debug, PartialEq)]
pub struct LoopConfig {
    pub eta_start: f64,
    pub eta_step: f64,
    pub eta_max: f64,
    pub n: usize,
    pub theta_cap: f64,
    /// Maximum number of oracle queries issued by the sweep.
    pub query_budget: Option<usize>,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            eta_start: 0.05,
            eta_step: 0.05,
            eta_max: std::f64::consts::FRAC_PI_4,
            n: 16,
            theta_cap: 0.05,
            query_budget: None,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        let pi = std::f64::consts::PI;
        if !(self.eta_start > 0.0 && self.eta_start <= self.eta_max && self.eta_max <= pi) {
            return Err(ScaleError::param(format!(
                "need 0 < eta_start ({}) <= eta_max ({}) <= π",
                self.eta_start, self.eta_max
            )));
        }
        if self.eta_step.is_nan() || self.eta_step <= 0.0 {
            return Err(ScaleError::param(format!("eta_step must be positive, got {}", self.eta_step)));
        }
        Ok(())
    }

    /// η_start + i·η_step for every i with the value ≤ η_max (up to rounding).
    pub fn etas(&self) -> Vec<f64> {
        let slack = 1e-12 * self.eta_max.max(1.0);
        (0..)
            .map(|i| self.eta_start + i as f64 * self.eta_step)
            .take_while(|&eta| eta <= self.eta_max + slack)
            .map(|eta| eta.min(self.eta_max))
            .collect()
    }
}

/// Summary of one η step.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepStep {
    pub eta: f64,
    pub components: usize,
    pub queries: usize,
    pub newly_labeled: usize,
    pub conflicting: usize,
}

/// Per-sample labeling state.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelState {
    /// Current label ŷ of each sample.
    pub predicted: Vec<Option<u32>>,
    /// Queried set 𝒜 in query order.
    pub queried: Vec<(usize, u32)>,
    /// Kept samples never covered by a consistently labeled component, ascending.
    pub uncertain: Vec<usize>,
    /// Samples removed by the support threshold and left unlabeled, ascending.
    pub pruned: Vec<usize>,
    pub history: Vec<SweepStep>,
    /// Set when the budget stopped at least one query.
    pub budget_exhausted: bool,
}

impl LabelState {
    pub fn new(len: usize) -> Self {
        LabelState {
            predicted: vec![None; len],
            queried: Vec::new(),
            uncertain: Vec::new(),
            pruned: Vec::new(),
            history: Vec::new(),
            budget_exhausted: false,
        }
    }

    /// Starts from already-labeled points, which join 𝒜 without an oracle charge.
    pub fn with_queried(len: usize, seeds: &[(usize, u32)]) -> Result<Self> {
        let mut state = LabelState::new(len);
        for &(i, l) in seeds {
            if i >= len || l == 0 {
                return Err(ScaleError::param(format!("bad initial label ({i}, {l}) for {len} samples")));
            }
            match state.predicted[i] {
                Some(prev) if prev != l => {
                    return Err(ScaleError::param(format!("index {i} given two initial labels")));
                }
                Some(_) => continue,
                None => {
                    state.predicted[i] = Some(l);
                    state.queried.push((i, l));
                }
            }
        }
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }

    pub fn queried_label(&self, index: usize) -> Option<u32> {
        self.queried.iter().find(|(i, _)| *i == index).map(|&(_, l)| l)
    }

    /// Samples the witness stage must classify: uncertain ∪ pruned.
    pub fn unresolved(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.uncertain.iter().chain(&self.pruned).copied().collect();
        v.sort_unstable();
        v
    }

    pub fn component_history(&self) -> Vec<(f64, usize)> {
        self.history.iter().map(|s| (s.eta, s.components)).collect()
    }
}

/// Runs the sweep over the samples kept by `support`.
///
/// Query selection uses the precomputed F_{n,M} values (sums over all
/// samples); ties go to the lowest index.
pub fn run_scale(
    points: &[SpherePoint],
    support: &SupportEstimate,
    oracle: &mut dyn LabelOracle,
    config: &LoopConfig,
    initial: LabelState,
) -> Result<LabelState> {
    config.validate()?;
    let m = points.len();
    if support.kept_mask.len() != m || support.f_values.len() != m || initial.len() != m {
        return Err(ScaleError::param(format!(
            "sweep inputs disagree on sample count ({m} points, {} mask, {} state)",
            support.kept_mask.len(),
            initial.len()
        )));
    }
    let mut state = initial;
    state.uncertain.clear();
    state.pruned.clear();
    let mut query_label: Vec<Option<u32>> = vec![None; m];
    for &(i, l) in &state.queried {
        query_label[i] = Some(l);
    }
    let mut issued = 0usize;

    let mut sweep = EtaSweep::new(points, &support.kept_mask)?;
    for eta in config.etas() {
        let graph = sweep.advance(eta)?;
        let mut step = SweepStep {
            eta,
            components: graph.component_count,
            queries: 0,
            newly_labeled: 0,
            conflicting: 0,
        };
        for members in graph.components() {
            let mut labels = members.iter().filter_map(|&i| query_label[i]);
            let label = match labels.next() {
                None => {
                    if config.query_budget.is_some_and(|b| issued >= b) {
                        state.budget_exhausted = true;
                        continue;
                    }
                    let pick = members
                        .iter()
                        .copied()
                        .reduce(|best, i| if support.f_values[i] > support.f_values[best] { i } else { best })
                        .expect("components are non-empty");
                    let label = oracle.query(pick)?;
                    if label == 0 {
                        return Err(ScaleError::data(format!("oracle returned background for index {pick}")));
                    }
                    issued += 1;
                    step.queries += 1;
                    query_label[pick] = Some(label);
                    state.queried.push((pick, label));
                    state.predicted[pick] = Some(label);
                    label
                }
                Some(first) => {
                    if labels.all(|l| l == first) {
                        first
                    } else {
                        step.conflicting += 1;
                        continue;
                    }
                }
            };
            for &i in &members {
                if state.predicted[i].is_none() {
                    state.predicted[i] = Some(label);
                    step.newly_labeled += 1;
                }
            }
        }
        state.history.push(step);
    }

    for i in 0..m {
        if state.predicted[i].is_none() {
            if support.kept_mask[i] {
                state.uncertain.push(i);
            } else {
                state.pruned.push(i);
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use crate::graph::components_from_points;
    use crate::support::prune_support;

    fn two_caps(distance: f64, seed: u64) -> (Vec<SpherePoint>, Vec<u32>) {
        let c0 = SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        let c1 = SpherePoint::new(vec![distance.cos(), distance.sin(), 0.0]).unwrap();
        let data = generate_synthetic(&SyntheticSpec {
            cap_centers: vec![c0, c1],
            cap_radius: 0.1,
            points_per_class: 200,
            overlap_fraction: 0.0,
            seed,
        })
        .unwrap();
        (data.points, data.labels)
    }

    fn config(eta_start: f64, eta_max: f64) -> LoopConfig {
        LoopConfig {
            eta_start,
            eta_step: 0.05,
            eta_max,
            n: 16,
            theta_cap: 1e-6,
            query_budget: None,
        }
    }

    #[test]
    fn two_separated_caps_need_two_queries() {
        let (points, labels) = two_caps(1.0, 4);
        let support = prune_support(&points, 16, 1e-6).unwrap();
        let mut oracle = TruthOracle::new(labels.clone());
        let state = run_scale(&points, &support, &mut oracle, &config(0.2, 0.5), LabelState::new(points.len())).unwrap();
        assert_eq!(oracle.query_count(), 2);
        assert_eq!(state.queried.len(), 2);
        assert!(state.uncertain.is_empty());
        assert!(state.pruned.is_empty());
        for (p, t) in state.predicted.iter().zip(&labels) {
            assert_eq!(*p, Some(*t));
        }
        // queried point is the component's F argmax
        for &(idx, label) in &state.queried {
            let best = (0..points.len())
                .filter(|&i| labels[i] == label)
                .max_by(|&a, &b| support.f_values[a].partial_cmp(&support.f_values[b]).unwrap().then(b.cmp(&a)))
                .unwrap();
            assert_eq!(idx, best);
        }
    }

    #[test]
    fn pre_queried_component_needs_no_query() {
        let points = generate_synthetic(&SyntheticSpec::axis_caps(1, 2, 0.1, 200, 4).unwrap()).unwrap().points;
        let support = prune_support(&points, 16, 1e-6).unwrap();
        let mut oracle = TruthOracle::new(vec![2; points.len()]);
        let init = LabelState::with_queried(points.len(), &[(7, 1)]).unwrap();
        let state = run_scale(&points, &support, &mut oracle, &config(0.3, 0.3), init).unwrap();
        assert_eq!(oracle.query_count(), 0);
        assert!(state.predicted.iter().all(|p| *p == Some(1)));
    }

    #[test]
    fn conflicting_component_stays_uncertain() {
        let (points, labels) = two_caps(0.25, 6);
        let support = prune_support(&points, 16, 1e-6).unwrap();
        let g = components_from_points(&points, &support.kept_mask, 0.2).unwrap();
        assert_eq!(g.component_count, 1);
        let init = LabelState::with_queried(points.len(), &[(0, 1), (200, 2)]).unwrap();
        let mut oracle = TruthOracle::new(labels);
        let state = run_scale(&points, &support, &mut oracle, &config(0.2, 0.4), init).unwrap();
        assert_eq!(oracle.query_count(), 0);
        assert_eq!(state.uncertain.len(), points.len() - 2);
        assert!(state.history.iter().all(|s| s.conflicting == 1));
    }

    #[test]
    fn budget_limits_queries() {
        let data = generate_synthetic(&SyntheticSpec::axis_caps(4, 2, 0.1, 100, 3).unwrap()).unwrap();
        let support = prune_support(&data.points, 16, 1e-6).unwrap();
        let mut oracle = TruthOracle::new(data.labels.clone());
        let mut cfg = config(0.2, 0.4);
        cfg.query_budget = Some(2);
        let state = run_scale(&data.points, &support, &mut oracle, &cfg, LabelState::new(400)).unwrap();
        assert_eq!(oracle.query_count(), 2);
        assert!(state.budget_exhausted);
        assert_eq!(state.uncertain.len(), 200);
    }

    #[test]
    fn pruned_points_are_reported_separately() {
        let (mut points, mut labels) = two_caps(1.0, 8);
        points.push(SpherePoint::new(vec![0.0, 0.0, 1.0]).unwrap());
        labels.push(1);
        let support = prune_support(&points, 16, 0.05).unwrap();
        assert!(!support.kept_mask[400]);
        let mut oracle = TruthOracle::new(labels);
        let state = run_scale(&points, &support, &mut oracle, &config(0.2, 0.5), LabelState::new(401)).unwrap();
        assert!(state.pruned.contains(&400));
        assert_eq!(state.unresolved(), [state.uncertain.clone(), state.pruned.clone()].concat());
        let labeled = state.predicted.iter().filter(|p| p.is_some()).count();
        assert_eq!(labeled + state.uncertain.len() + state.pruned.len(), 401);
    }

    #[test]
    fn eta_grid_includes_endpoint() {
        let cfg = LoopConfig {
            eta_start: 0.1,
            eta_step: 0.1,
            eta_max: 0.5,
            ..Default::default()
        };
        assert_eq!(cfg.etas().len(), 5);
        assert_eq!(*cfg.etas().last().unwrap(), 0.5);
        assert!(LoopConfig { eta_step: 0.0, ..cfg.clone() }.validate().is_err());
        assert!(LoopConfig { eta_max: 4.0, ..cfg.clone() }.validate().is_err());
        assert!(LoopConfig { eta_start: 0.6, ..cfg }.validate().is_err());
    }

    #[test]
    fn oracles_charge_once() {
        let mut o = TruthOracle::new(vec![1, 2, 0]);
        assert_eq!(o.query(1).unwrap(), 2);
        assert_eq!(o.query(1).unwrap(), 2);
        assert_eq!(o.query_count(), 1);
        assert!(o.query(2).is_err());
        assert!(o.query(9).is_err());
        let mut r = ReplayOracle::new([(3, 1), (5, 2)]).unwrap();
        assert_eq!(r.query(5).unwrap(), 2);
        assert_eq!(r.query(5).unwrap(), 2);
        assert_eq!(r.query_count(), 1);
        assert!(r.query(4).is_err());
        assert!(ReplayOracle::new([(1, 1), (1, 2)]).is_err());
    }
}
