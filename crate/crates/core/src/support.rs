//! Support estimation with F_{n,M}(x) = (1/M) Σ_j Φ_n(⟨x, x_j⟩)² and the
//! relative superlevel set 𝒢_n(Θ) = {x : F(x) ≥ Θ · max_k F(x_k)}, evaluated
//! at the sample points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{distance_to_support, generate_synthetic, sample_in_cap, Cap, SyntheticSpec};
use crate::error::{Result, ScaleError};
use crate::graph::{components_from_points, min_intercomponent_angle};
use crate::kernels::ChebyshevKernel;
use crate::preprocess::SpherePoint;

/// F_{n,M} at every sample and the resulting 𝒢_n(Θ) membership.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportEstimate {
    pub f_values: Vec<f64>,
    pub f_max: f64,
    pub theta_cap: f64,
    pub kept_mask: Vec<bool>,
}

impl SupportEstimate {
    pub fn kept_count(&self) -> usize {
        self.kept_mask.iter().filter(|&&k| k).count()
    }

    pub fn kept_indices(&self) -> Vec<usize> {
        (0..self.kept_mask.len()).filter(|&i| self.kept_mask[i]).collect()
    }

    /// Threshold the same F values at a different Θ.
    pub fn rethreshold(&self, theta_cap: f64) -> Result<SupportEstimate> {
        check_theta(theta_cap)?;
        Ok(threshold(self.f_values.clone(), theta_cap))
    }
}

fn check_theta(theta_cap: f64) -> Result<()> {
    if !(theta_cap > 0.0 && theta_cap <= 1.0) {
        return Err(ScaleError::param(format!("threshold must lie in (0, 1], got {theta_cap}")));
    }
    Ok(())
}

fn check_samples(samples: &[SpherePoint]) -> Result<()> {
    if samples.is_empty() {
        return Err(ScaleError::param("support estimation needs at least one sample"));
    }
    Ok(())
}

/// F_{n,M}(x) against `samples`.
pub fn f_estimator(x: &SpherePoint, samples: &[SpherePoint], n: usize) -> Result<f64> {
    check_samples(samples)?;
    let kernel = ChebyshevKernel::new(n)?;
    Ok(f_at(x, samples, &kernel))
}

#[inline]
fn f_at(x: &SpherePoint, samples: &[SpherePoint], kernel: &ChebyshevKernel) -> f64 {
    let sum: f64 = samples.iter().map(|s| kernel.eval_sq(x.dot(s))).sum();
    sum / samples.len() as f64
}

/// F_{n,M} at every sample. Rows are accumulated in parallel, each in fixed
/// index order, so the result does not depend on the thread schedule.
pub fn f_values(samples: &[SpherePoint], kernel: &ChebyshevKernel) -> Vec<f64> {
    samples.par_iter().map(|x| f_at(x, samples, kernel)).collect()
}

/// Dense matrix of Φ_n(⟨x_i, x_j⟩)², row-major. Only sensible for small M.
pub fn kernel_matrix_sq(samples: &[SpherePoint], kernel: &ChebyshevKernel) -> Vec<f64> {
    let m = samples.len();
    let mut out = vec![0.0; m * m];
    out.par_chunks_mut(m.max(1)).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = kernel.eval_sq(samples[i].dot(&samples[j]));
        }
    });
    out
}

/// Row means of a dense squared-kernel matrix.
pub fn f_values_from_matrix(matrix: &[f64], m: usize) -> Vec<f64> {
    matrix.chunks(m).map(|row| row.iter().sum::<f64>() / m as f64).collect()
}

fn threshold(f_values: Vec<f64>, theta_cap: f64) -> SupportEstimate {
    let f_max = f_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = theta_cap * f_max;
    let kept_mask = f_values.iter().map(|&f| f >= cut).collect();
    SupportEstimate {
        f_values,
        f_max,
        theta_cap,
        kept_mask,
    }
}

/// Evaluates F at all samples and keeps those with F ≥ Θ · max F (ties kept).
pub fn prune_support(samples: &[SpherePoint], n: usize, theta_cap: f64) -> Result<SupportEstimate> {
    check_samples(samples)?;
    check_theta(theta_cap)?;
    let kernel = ChebyshevKernel::new(n)?;
    let values = f_values(samples, &kernel);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ScaleError::Numeric("support estimator produced a non-finite value".into()));
    }
    Ok(threshold(values, theta_cap))
}

/// Settings for [`containment_harness`].
#[derive(Clone, Debug)]
pub struct HarnessOptions {
    /// Separation at which kept samples are grouped.
    pub eta: f64,
    /// Extra off-sample probes used to measure how far 𝒢_n(Θ) reaches
    /// beyond the true support.
    pub probe_count: usize,
    /// Probes are placed at distance up to this much outside a random cap.
    pub probe_margin: f64,
    pub probe_seed: u64,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            eta: 0.3,
            probe_count: 2000,
            probe_margin: 0.3,
            probe_seed: 0x5ca1e,
        }
    }
}

/// Empirical view of support containment and cluster separation.
#[derive(Clone, Debug, PartialEq)]
pub struct ContainmentReport {
    pub n: usize,
    pub theta_cap: f64,
    pub eta: f64,
    pub sample_count: usize,
    /// Fraction of samples lying in the true support that survive pruning.
    pub kept_support_fraction: f64,
    /// Largest distance to the true support over kept samples and probes in 𝒢_n(Θ).
    pub max_kept_distance: f64,
    pub probes_kept: usize,
    pub component_count: usize,
    pub expected_components: usize,
    /// Smallest angle between distinct components (None for one component).
    pub min_separation: Option<f64>,
}

impl ContainmentReport {
    pub fn components_match(&self) -> bool {
        self.component_count == self.expected_components
    }
}

fn probe_points(caps: &[Cap], count: usize, margin: f64, seed: u64) -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let cap = &caps[rng.random_range(0..caps.len())];
            // a point on the sphere of radius r + δ around the center
            let delta = rng.random::<f64>() * margin;
            let shell = Cap {
                center: cap.center.clone(),
                radius: (cap.radius + delta).min(std::f64::consts::PI),
            };
            let inside = sample_in_cap(&mut rng, &shell);
            let dir: Vec<f64> = inside
                .coords()
                .iter()
                .zip(cap.center.coords())
                .map(|(p, c)| p - c * inside.dot(&cap.center))
                .collect();
            match SpherePoint::normalize(dir) {
                Ok(u) => {
                    let (s, co) = shell.radius.sin_cos();
                    let v: Vec<f64> = cap.center.coords().iter().zip(u.coords()).map(|(c, t)| co * c + s * t).collect();
                    SpherePoint::normalize(v).expect("unit combination")
                }
                Err(_) => inside,
            }
        })
        .collect()
}

/// Generates the synthetic instance, prunes it, and reports containment
/// statistics. Failures are recorded in the report rather than raised.
pub fn containment_harness(spec: &SyntheticSpec, n: usize, theta_cap: f64, opts: &HarnessOptions) -> Result<ContainmentReport> {
    let data = generate_synthetic(spec)?;
    let est = prune_support(&data.points, n, theta_cap)?;
    let kernel = ChebyshevKernel::new(n)?;

    let in_support: Vec<usize> = (0..data.points.len())
        .filter(|&i| distance_to_support(&data.points[i], &data.support) <= 1e-12)
        .collect();
    let kept_support = in_support.iter().filter(|&&i| est.kept_mask[i]).count();
    let kept_support_fraction = if in_support.is_empty() {
        1.0
    } else {
        kept_support as f64 / in_support.len() as f64
    };

    let mut max_dist = data
        .points
        .iter()
        .zip(&est.kept_mask)
        .filter(|(_, &k)| k)
        .map(|(p, _)| distance_to_support(p, &data.support))
        .fold(0.0, f64::max);
    let probes = probe_points(&data.support, opts.probe_count, opts.probe_margin, opts.probe_seed);
    let cut = theta_cap * est.f_max;
    let probe_hits: Vec<f64> = probes
        .par_iter()
        .filter(|p| f_at(p, &data.points, &kernel) >= cut)
        .map(|p| distance_to_support(p, &data.support))
        .collect();
    for d in &probe_hits {
        max_dist = max_dist.max(*d);
    }

    let graph = components_from_points(&data.points, &est.kept_mask, opts.eta)?;
    let min_separation = min_intercomponent_angle(&data.points, &graph);
    Ok(ContainmentReport {
        n,
        theta_cap,
        eta: opts.eta,
        sample_count: data.points.len(),
        kept_support_fraction,
        max_kept_distance: max_dist,
        probes_kept: probe_hits.len(),
        component_count: graph.component_count,
        expected_components: spec.class_count(),
        min_separation,
    })
}
