//! End-to-end classification of points on the sphere: support pruning, the
//! η sweep, then witness classification of what the sweep left open.

use nalgebra::DMatrix;

use crate::active::{run_scale, LabelOracle, LabelState, LoopConfig};
use crate::error::{Result, ScaleError};
use crate::graph::EtaSweep;
use crate::preprocess::{pca_reduce, place_on_sphere, PcaOutput, PcaTarget, Projection, SpherePoint};
use crate::support::{prune_support, SupportEstimate};
use crate::witness::{classify_uncertain, AnchorCap};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub sweep: LoopConfig,
    /// Degree of the witness kernel; defaults to the sweep degree.
    pub witness_n: Option<usize>,
    pub anchor_cap: Option<AnchorCap>,
    /// Maximum number of degree doublings when refining n; `None` keeps n fixed.
    pub refine_doublings: Option<u32>,
}

impl PipelineConfig {
    pub fn new(sweep: LoopConfig) -> Self {
        PipelineConfig {
            sweep,
            witness_n: None,
            anchor_cap: None,
            refine_doublings: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    /// Degree actually used (differs from the configured one after refinement).
    pub n: usize,
    pub q: usize,
    pub support: SupportEstimate,
    /// State right after the sweep.
    pub sweep_state: LabelState,
    /// State after witness classification; every sample is labeled.
    pub state: LabelState,
    pub refine_trace: RefineTrace,
}

impl PipelineOutcome {
    pub fn labels(&self) -> Vec<u32> {
        self.state.predicted.iter().map(|p| p.unwrap_or(0)).collect()
    }
}

/// PCA followed by placement on the sphere.
pub fn prepare_points(features: &DMatrix<f64>, target: PcaTarget, projection: Projection) -> Result<(Vec<SpherePoint>, PcaOutput)> {
    let pca = pca_reduce(features, target)?;
    let points = place_on_sphere(&pca.reduced, projection)?;
    Ok((points, pca))
}

fn component_profile(points: &[SpherePoint], support: &SupportEstimate, etas: &[f64]) -> Result<Vec<usize>> {
    let mut sweep = EtaSweep::new(points, &support.kept_mask)?;
    etas.iter().map(|&eta| Ok(sweep.advance(eta)?.component_count)).collect()
}

/// Support estimate at the configured degree, or at the degree refinement
/// settles on: n doubles until the per-η component counts stop changing, and
/// the smaller of the two agreeing degrees is kept.
/// (n, component counts per η) for every degree tried.
pub type RefineTrace = Vec<(usize, Vec<usize>)>;

pub fn refine_degree(points: &[SpherePoint], config: &PipelineConfig) -> Result<(usize, SupportEstimate, RefineTrace)> {
    config.sweep.validate()?;
    let mut n = config.sweep.n;
    let mut support = prune_support(points, n, config.sweep.theta_cap)?;
    let mut trace = Vec::new();
    if let Some(max) = config.refine_doublings {
        let etas = config.sweep.etas();
        let mut profile = component_profile(points, &support, &etas)?;
        trace.push((n, profile.clone()));
        for _ in 0..max {
            let next_n = 2 * n;
            let next_support = prune_support(points, next_n, config.sweep.theta_cap)?;
            let next_profile = component_profile(points, &next_support, &etas)?;
            trace.push((next_n, next_profile.clone()));
            if next_profile == profile {
                break;
            }
            n = next_n;
            support = next_support;
            profile = next_profile;
        }
    }
    Ok((n, support, trace))
}

/// Common sphere dimension q of the points.
pub fn sphere_dim(points: &[SpherePoint]) -> Result<usize> {
    let q = points
        .first()
        .ok_or_else(|| ScaleError::param("no points to classify"))?
        .sphere_dim();
    if points.iter().any(|p| p.sphere_dim() != q) {
        return Err(ScaleError::param("points live on spheres of different dimension"));
    }
    Ok(q)
}

pub fn classify_points(
    points: &[SpherePoint],
    oracle: &mut dyn LabelOracle,
    config: &PipelineConfig,
    initial: LabelState,
) -> Result<PipelineOutcome> {
    config.sweep.validate()?;
    let q = sphere_dim(points)?;
    let (n, support, refine_trace) = refine_degree(points, config)?;
    let sweep = LoopConfig { n, ..config.sweep.clone() };
    let sweep_state = run_scale(points, &support, oracle, &sweep, initial)?;
    let witness_n = config.witness_n.unwrap_or(n);
    let state = classify_uncertain(&sweep_state, points, witness_n, q, config.anchor_cap)?;
    Ok(PipelineOutcome {
        n,
        q,
        support,
        sweep_state,
        state,
        refine_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::active::TruthOracle;
    use crate::data::{generate_synthetic, SyntheticSpec};

    #[test]
    fn three_caps_classified_with_three_queries() {
        let data = generate_synthetic(&SyntheticSpec::axis_caps(3, 2, 0.1, 300, 12).unwrap()).unwrap();
        let mut oracle = TruthOracle::new(data.labels.clone());
        let cfg = PipelineConfig::new(LoopConfig {
            eta_start: 0.2,
            eta_step: 0.05,
            eta_max: 0.5,
            n: 16,
            theta_cap: 0.1,
            query_budget: None,
        });
        let out = classify_points(&data.points, &mut oracle, &cfg, LabelState::new(data.points.len())).unwrap();
        assert_eq!(oracle.query_count(), 3);
        assert_eq!(out.labels(), data.labels);
        assert_eq!(out.q, 2);
    }

    #[test]
    fn refinement_records_trace() {
        let data = generate_synthetic(&SyntheticSpec::axis_caps(2, 2, 0.1, 150, 1).unwrap()).unwrap();
        let mut oracle = TruthOracle::new(data.labels.clone());
        let mut cfg = PipelineConfig::new(LoopConfig {
            eta_start: 0.2,
            eta_step: 0.1,
            eta_max: 0.4,
            n: 8,
            theta_cap: 0.1,
            query_budget: None,
        });
        cfg.refine_doublings = Some(3);
        let out = classify_points(&data.points, &mut oracle, &cfg, LabelState::new(300)).unwrap();
        assert!(!out.refine_trace.is_empty() && out.refine_trace.len() <= 4);
        assert_eq!(out.refine_trace[0].0, 8);
        assert_eq!(out.labels(), data.labels);
    }

    #[test]
    fn prepare_points_reduces_and_normalizes() {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.2, 0.0, 1.0, 0.1, -1.0, 0.0, 0.0, 0.0, -1.0, -0.3]);
        let (pts, pca) = prepare_points(&x, PcaTarget::Dim(2), Projection::Normalize).unwrap();
        assert_eq!(pca.dim(), 2);
        assert!(pts.iter().all(|p| p.ambient_dim() == 2));
        let (pts, _) = prepare_points(&x, PcaTarget::Dim(2), Projection::Stereographic).unwrap();
        assert!(pts.iter().all(|p| p.ambient_dim() == 3));
    }
}
