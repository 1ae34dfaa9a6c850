//! Witness-function classification of points the sweep left unresolved:
//! ŷ(x) = argmax_k Σ_{x_i ∈ 𝒜_k} Φ_{n,q}(⟨x, x_i⟩).

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::active::LabelState;
use crate::error::{Result, ScaleError};
use crate::kernels::{ChebyshevKernel, JacobiKernel};
use crate::preprocess::SpherePoint;

/// A zonal kernel x ↦ K(⟨x, y⟩) on the sphere.
pub trait ZonalKernel: Sync {
    fn eval(&self, dot: f64) -> f64;
}

impl ZonalKernel for JacobiKernel {
    fn eval(&self, dot: f64) -> f64 {
        JacobiKernel::eval(self, dot)
    }
}

impl ZonalKernel for ChebyshevKernel {
    fn eval(&self, dot: f64) -> f64 {
        ChebyshevKernel::eval(self, dot)
    }
}

/// `factor · K`.
#[derive(Clone, Debug)]
pub struct Scaled<K>(pub K, pub f64);

impl<K: ZonalKernel> ZonalKernel for Scaled<K> {
    fn eval(&self, dot: f64) -> f64 {
        self.1 * self.0.eval(dot)
    }
}

/// Optional per-class anchor subsampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnchorCap {
    pub per_class: usize,
    pub seed: u64,
}

/// Anchors 𝒜_k per class and the kernel that scores them.
#[derive(Clone, Debug)]
pub struct WitnessModel<K = JacobiKernel> {
    anchors: BTreeMap<u32, Vec<SpherePoint>>,
    kernel: K,
}

impl WitnessModel<JacobiKernel> {
    /// Uses Φ_{n,q} with q taken from the anchors' dimension.
    pub fn new(anchors: BTreeMap<u32, Vec<SpherePoint>>, n: usize, q: usize) -> Result<Self> {
        WitnessModel::with_kernel(anchors, JacobiKernel::new(n, q)?)
    }
}

impl<K: ZonalKernel> WitnessModel<K> {
    pub fn with_kernel(anchors: BTreeMap<u32, Vec<SpherePoint>>, kernel: K) -> Result<Self> {
        if anchors.keys().any(|&k| k == 0) {
            return Err(ScaleError::param("witness classes are numbered from 1"));
        }
        if anchors.values().all(Vec::is_empty) {
            return Err(ScaleError::Config("witness model has no anchors in any class".into()));
        }
        Ok(WitnessModel { anchors, kernel })
    }

    pub fn anchors(&self) -> &BTreeMap<u32, Vec<SpherePoint>> {
        &self.anchors
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    /// Anchor-summed kernel per class; empty classes score −∞.
    pub fn class_scores(&self, x: &SpherePoint) -> Vec<(u32, f64)> {
        self.anchors
            .iter()
            .map(|(&k, pts)| {
                let score = if pts.is_empty() {
                    f64::NEG_INFINITY
                } else {
                    pts.iter().map(|a| self.kernel.eval(x.dot(a))).sum()
                };
                (k, score)
            })
            .collect()
    }

    /// Class with the largest score; ties resolve to the lowest class id.
    pub fn classify(&self, x: &SpherePoint) -> Result<u32> {
        let mut best: Option<(u32, f64)> = None;
        for (k, s) in self.class_scores(x) {
            if !s.is_finite() {
                continue;
            }
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((k, s));
            }
        }
        best.map(|(k, _)| k)
            .ok_or_else(|| ScaleError::Numeric("every witness class score is non-finite".into()))
    }
}

pub fn witness_classify<K: ZonalKernel>(x: &SpherePoint, model: &WitnessModel<K>) -> Result<u32> {
    model.classify(x)
}

/// Builds 𝒜_k = {x_j : ŷ(x_j) = k} from every labeled sample.
pub fn anchors_from_state(state: &LabelState, points: &[SpherePoint], cap: Option<AnchorCap>) -> BTreeMap<u32, Vec<SpherePoint>> {
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, p) in state.predicted.iter().enumerate() {
        if let Some(k) = p {
            by_class.entry(*k).or_default().push(i);
        }
    }
    by_class
        .into_iter()
        .map(|(k, mut idx)| {
            if let Some(cap) = cap {
                if idx.len() > cap.per_class {
                    let mut rng = ChaCha8Rng::seed_from_u64(cap.seed ^ u64::from(k));
                    let mut pick = rand::seq::index::sample(&mut rng, idx.len(), cap.per_class).into_vec();
                    pick.sort_unstable();
                    idx = pick.into_iter().map(|j| idx[j]).collect();
                }
            }
            (k, idx.into_iter().map(|i| points[i].clone()).collect())
        })
        .collect()
}

/// Labels every uncertain or pruned sample with the witness rule; labels
/// already assigned by the sweep are left untouched.
pub fn classify_uncertain(state: &LabelState, points: &[SpherePoint], n: usize, q: usize, cap: Option<AnchorCap>) -> Result<LabelState> {
    if points.len() != state.len() {
        return Err(ScaleError::param("label state and points disagree on sample count"));
    }
    let targets = state.unresolved();
    if targets.is_empty() {
        return Ok(state.clone());
    }
    let model = WitnessModel::new(anchors_from_state(state, points, cap), n, q)?;
    let labels: Vec<u32> = targets
        .par_iter()
        .map(|&i| model.classify(&points[i]))
        .collect::<Result<_>>()?;
    let mut out = state.clone();
    for (&i, l) in targets.iter().zip(labels) {
        out.predicted[i] = Some(l);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::jacobi_norm;

    fn on_circle(theta: f64) -> SpherePoint {
        SpherePoint::normalize(vec![theta.cos(), theta.sin(), 0.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn own_anchor_wins() {
        let x = on_circle(0.0);
        let anchors = BTreeMap::from([(1, vec![on_circle(1.5)]), (2, vec![x.clone()])]);
        let model = WitnessModel::new(anchors, 32, 4).unwrap();
        assert_eq!(witness_classify(&x, &model).unwrap(), 2);
        let scores = model.class_scores(&x);
        assert!(scores[1].1 > scores[0].1);
    }

    #[test]
    fn mirror_tie_goes_to_lowest_class() {
        let x = on_circle(0.0);
        let anchors = BTreeMap::from([(1, vec![on_circle(0.3)]), (2, vec![on_circle(-0.3)])]);
        let model = WitnessModel::new(anchors, 16, 4).unwrap();
        let s = model.class_scores(&x);
        assert_eq!(s[0].1, s[1].1);
        assert_eq!(model.classify(&x).unwrap(), 1);
    }

    #[test]
    fn empty_class_never_wins() {
        let anchors = BTreeMap::from([(1, vec![]), (2, vec![on_circle(2.5)])]);
        let model = WitnessModel::new(anchors, 8, 4).unwrap();
        for t in [0.0, 1.0, 2.5, 3.0] {
            assert_eq!(model.classify(&on_circle(t)).unwrap(), 2);
        }
        let empty: BTreeMap<u32, Vec<SpherePoint>> = BTreeMap::from([(1, vec![])]);
        assert!(matches!(WitnessModel::new(empty, 8, 4), Err(ScaleError::Config(_))));
    }

    #[test]
    fn single_term_kernel_is_constant() {
        let model = WitnessModel::new(BTreeMap::from([(3, vec![on_circle(0.4)])]), 1, 4).unwrap();
        let s = model.class_scores(&on_circle(2.0));
        assert!((s[0].1 - 1.0 / jacobi_norm(0, 1.0).unwrap()).abs() < 1e-14);
    }

    fn state_with(len: usize, labeled: &[(usize, u32)], uncertain: &[usize]) -> LabelState {
        let mut s = LabelState::new(len);
        for &(i, l) in labeled {
            s.predicted[i] = Some(l);
        }
        s.uncertain = uncertain.to_vec();
        s
    }

    #[test]
    fn no_uncertain_points_is_a_no_op() {
        let pts: Vec<SpherePoint> = (0..3).map(|i| on_circle(i as f64)).collect();
        let s = state_with(3, &[(0, 1), (1, 1), (2, 2)], &[]);
        assert_eq!(classify_uncertain(&s, &pts, 8, 4, None).unwrap(), s);
    }

    #[test]
    fn uncertain_point_joins_its_cluster() {
        let mut pts: Vec<SpherePoint> = (0..10).map(|i| on_circle(0.01 * i as f64)).collect();
        pts.extend((0..10).map(|i| on_circle(1.5 + 0.01 * i as f64)));
        pts.push(on_circle(1.53));
        let labeled: Vec<(usize, u32)> = (0..20).map(|i| (i, if i < 10 { 1 } else { 2 })).collect();
        let s = state_with(21, &labeled, &[20]);
        let out = classify_uncertain(&s, &pts, 16, 4, None).unwrap();
        assert_eq!(out.predicted[20], Some(2));
        assert_eq!(&out.predicted[..20], &s.predicted[..20]);
    }

    #[test]
    fn equidistant_outlier_ties_to_lowest_class() {
        let pts = vec![on_circle(0.5), on_circle(-0.5), on_circle(0.0)];
        let mut s = state_with(3, &[(0, 2), (1, 1)], &[]);
        s.pruned = vec![2];
        let out = classify_uncertain(&s, &pts, 16, 4, None).unwrap();
        assert_eq!(out.predicted[2], Some(1));
    }

    #[test]
    fn anchors_respect_cap() {
        let pts: Vec<SpherePoint> = (0..50).map(|i| on_circle(0.01 * i as f64)).collect();
        let labeled: Vec<(usize, u32)> = (0..50).map(|i| (i, 1 + (i % 2) as u32)).collect();
        let s = state_with(50, &labeled, &[]);
        let cap = AnchorCap { per_class: 5, seed: 3 };
        let a = anchors_from_state(&s, &pts, Some(cap));
        assert_eq!(a[&1].len(), 5);
        assert_eq!(a[&2].len(), 5);
        assert_eq!(a, anchors_from_state(&s, &pts, Some(cap)));
        assert_eq!(anchors_from_state(&s, &pts, None)[&1].len(), 25);
    }

    #[test]
    fn no_anchors_is_a_config_error() {
        let pts = vec![on_circle(0.0)];
        let s = state_with(1, &[], &[0]);
        assert!(matches!(classify_uncertain(&s, &pts, 8, 4, None), Err(ScaleError::Config(_))));
    }
}
