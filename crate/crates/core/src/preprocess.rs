//! Feature preprocessing: PCA reduction, placement on the unit hypersphere
//! and pairwise geodesic angles.
//!
//! Points live on 𝕊^q ⊂ ℝ^{q+1}. With the default normalizing projection the
//! PCA output dimension d′ gives q = d′ − 1; the stereographic lift maps
//! ℝ^{d′} onto 𝕊^{d′} instead.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Result, ScaleError};

/// Norm tolerance for [`SpherePoint`].
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Rows with a norm below this cannot be normalized.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Raw samples before preprocessing.
///
/// `labels` uses 0 for background. When the samples were cut out of an image,
/// `pixel_index[i]` is the row-major pixel index of sample `i` within a grid
/// of `grid_dims = (height, width)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub features: DMatrix<f64>,
    pub labels: Vec<u32>,
    pub grid_dims: Option<(usize, usize)>,
    pub pixel_index: Vec<usize>,
}

impl RawDataset {
    /// Builds a dataset without an image grid; the pixel map is the identity.
    pub fn new(features: DMatrix<f64>, labels: Vec<u32>) -> Result<Self> {
        let pixel_index = (0..features.nrows()).collect();
        let ds = RawDataset {
            features,
            labels,
            grid_dims: None,
            pixel_index,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (m, d) = self.features.shape();
        if m == 0 || d == 0 {
            return Err(ScaleError::data(format!(
                "dataset must have at least one row and column, got {m}x{d}"
            )));
        }
        if self.labels.len() != m {
            return Err(ScaleError::data(format!(
                "{} labels for {m} feature rows",
                self.labels.len()
            )));
        }
        if self.pixel_index.len() != m {
            return Err(ScaleError::data(format!(
                "{} pixel indices for {m} feature rows",
                self.pixel_index.len()
            )));
        }
        if let Some((h, w)) = self.grid_dims {
            if let Some(&bad) = self.pixel_index.iter().find(|&&p| p >= h * w) {
                return Err(ScaleError::data(format!(
                    "pixel index {bad} outside the {h}x{w} grid"
                )));
            }
        }
        check_finite(&self.features)
    }
}

/// A unit vector on 𝕊^q.
#[derive(Clone, Debug, PartialEq)]
pub struct SpherePoint(Vec<f64>);

impl SpherePoint {
    /// Wraps coordinates that are already unit norm (within [`UNIT_TOLERANCE`]).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let norm = l2_norm(&coords);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(ScaleError::param(format!(
                "sphere point must have unit norm, got {norm}"
            )));
        }
        Ok(SpherePoint(coords))
    }

    /// Scales `coords` to unit norm.
    pub fn normalize(coords: Vec<f64>) -> Result<Self> {
        let norm = l2_norm(&coords);
        if !norm.is_finite() || norm < DEGENERATE_NORM {
            return Err(ScaleError::DegeneratePoint { row: 0, norm });
        }
        Ok(SpherePoint(coords.into_iter().map(|c| c / norm).collect()))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Ambient dimension q + 1.
    pub fn ambient_dim(&self) -> usize {
        self.0.len()
    }

    /// Sphere dimension q.
    pub fn sphere_dim(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Inner product clamped to [−1, 1].
    #[inline]
    pub fn dot(&self, other: &SpherePoint) -> f64 {
        clamped_dot(&self.0, &other.0)
    }

    /// Geodesic distance arccos⟨x, y⟩.
    #[inline]
    pub fn angle(&self, other: &SpherePoint) -> f64 {
        self.dot(other).acos()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[inline]
pub(crate) fn clamped_dot(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    s.clamp(-1.0, 1.0)
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if !m[(i, j)].is_finite() {
                return Err(ScaleError::data(format!(
                    "non-finite value {} at row {i}, column {j}",
                    m[(i, j)]
                )));
            }
        }
    }
    Ok(())
}

/// How many principal components to keep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PcaTarget {
    Dim(usize),
    /// Smallest dimension whose cumulative explained variance reaches
    /// `fraction`, but never more than `max_dim`.
    Variance { fraction: f64, max_dim: usize },
}

impl Default for PcaTarget {
    fn default() -> Self {
        PcaTarget::Variance {
            fraction: 0.999,
            max_dim: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PcaOutput {
    /// M × d′ scores.
    pub reduced: DMatrix<f64>,
    /// Variance along every principal direction, non-increasing (length min(M, d)).
    pub explained_variance: Vec<f64>,
    /// d′ × d principal directions, one per row.
    pub components: DMatrix<f64>,
    pub mean: Vec<f64>,
}

impl PcaOutput {
    pub fn dim(&self) -> usize {
        self.reduced.ncols()
    }

    /// Fraction of total variance per direction; all zeros when the data has none.
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        let total: f64 = self.explained_variance.iter().sum();
        if total <= 0.0 {
            return vec![0.0; self.explained_variance.len()];
        }
        self.explained_variance.iter().map(|v| v / total).collect()
    }
}

/// Projects the column-centered data onto its top principal directions.
///
/// Directions come from a symmetric eigendecomposition of the sample
/// covariance. Each direction is signed so that its largest-magnitude
/// coordinate is positive, which keeps scores reproducible.
pub fn pca_reduce(features: &DMatrix<f64>, target: PcaTarget) -> Result<PcaOutput> {
    let (m, d) = features.shape();
    if m == 0 || d == 0 {
        return Err(ScaleError::data("cannot run PCA on an empty matrix"));
    }
    check_finite(features)?;
    let rank_cap = m.min(d);

    let mean: Vec<f64> = (0..d).map(|j| features.column(j).mean()).collect();
    let mut centered = features.clone();
    for (j, mu) in mean.iter().enumerate() {
        centered.column_mut(j).iter_mut().for_each(|x| *x -= mu);
    }
    let denom = if m > 1 { (m - 1) as f64 } else { 1.0 };
    let cov = centered.tr_mul(&centered) / denom;

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let explained_variance: Vec<f64> = order
        .iter()
        .take(rank_cap)
        .map(|&k| eig.eigenvalues[k].max(0.0))
        .collect();

    let keep = match target {
        PcaTarget::Dim(k) => {
            if k == 0 || k > rank_cap {
                return Err(ScaleError::param(format!(
                    "target dimension {k} must lie in 1..={rank_cap}"
                )));
            }
            k
        }
        PcaTarget::Variance { fraction, max_dim } => {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(ScaleError::param(format!(
                    "variance fraction {fraction} must lie in (0, 1]"
                )));
            }
            if max_dim == 0 {
                return Err(ScaleError::param("maximum PCA dimension must be positive"));
            }
            let total: f64 = explained_variance.iter().sum();
            let mut k = rank_cap;
            if total > 0.0 {
                let mut acc = 0.0;
                for (i, v) in explained_variance.iter().enumerate() {
                    acc += v;
                    // relative slack absorbs rounding when fraction = 1
                    if acc >= fraction * total * (1.0 - 1e-12) {
                        k = i + 1;
                        break;
                    }
                }
            } else {
                k = 1;
            }
            k.min(max_dim).min(rank_cap)
        }
    };

    let mut components = DMatrix::zeros(keep, d);
    for (row, &k) in order.iter().take(keep).enumerate() {
        let v = eig.eigenvectors.column(k);
        let mut pivot = 0;
        for i in 1..d {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            components[(row, i)] = sign * v[i];
        }
    }
    let reduced = &centered * components.transpose();

    Ok(PcaOutput {
        reduced,
        explained_variance,
        components,
        mean,
    })
}

/// How reduced vectors are placed on the sphere.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Projection {
    /// x ↦ x/‖x‖, giving q = d′ − 1.
    #[default]
    Normalize,
    /// Inverse stereographic lift ℝ^{d′} → 𝕊^{d′}.
    Stereographic,
}

impl std::str::FromStr for Projection {
    type Err = ScaleError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalize" => Ok(Projection::Normalize),
            "stereographic" => Ok(Projection::Stereographic),
            other => Err(ScaleError::Config(format!(
                "unknown projection {other:?} (expected normalize or stereographic)"
            ))),
        }
    }
}

impl std::fmt::Display for Projection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Projection::Normalize => "normalize",
            Projection::Stereographic => "stereographic",
        })
    }
}

/// Normalizes every row to unit length.
pub fn project_to_sphere(reduced: &DMatrix<f64>) -> Result<Vec<SpherePoint>> {
    (0..reduced.nrows())
        .map(|i| {
            let row: Vec<f64> = reduced.row(i).iter().copied().collect();
            let norm = l2_norm(&row);
            if !norm.is_finite() || norm < DEGENERATE_NORM {
                return Err(ScaleError::DegeneratePoint { row: i, norm });
            }
            Ok(SpherePoint(row.into_iter().map(|c| c / norm).collect()))
        })
        .collect()
}

/// Inverse stereographic projection from the north pole:
/// x ↦ (2x, ‖x‖² − 1) / (‖x‖² + 1).
pub fn stereographic_lift(reduced: &DMatrix<f64>) -> Result<Vec<SpherePoint>> {
    (0..reduced.nrows())
        .map(|i| {
            let r2: f64 = reduced.row(i).iter().map(|x| x * x).sum();
            if !r2.is_finite() {
                return Err(ScaleError::data(format!("row {i} has non-finite norm")));
            }
            let scale = 1.0 / (r2 + 1.0);
            let mut coords: Vec<f64> = reduced.row(i).iter().map(|x| 2.0 * x * scale).collect();
            coords.push((r2 - 1.0) * scale);
            // renormalize to absorb rounding
            SpherePoint::normalize(coords).map_err(|_| ScaleError::DegeneratePoint { row: i, norm: 0.0 })
        })
        .collect()
}

pub fn place_on_sphere(reduced: &DMatrix<f64>, projection: Projection) -> Result<Vec<SpherePoint>> {
    match projection {
        Projection::Normalize => project_to_sphere(reduced),
        Projection::Stereographic => stereographic_lift(reduced),
    }
}

/// Symmetric matrix of geodesic angles, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleMatrix {
    len: usize,
    angles: Vec<f64>,
}

impl AngleMatrix {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.angles[i * self.len + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.angles[i * self.len..(i + 1) * self.len]
    }

    /// Builds a matrix from explicit entries; used for hand-made fixtures.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let len = rows.len();
        let mut angles = Vec::with_capacity(len * len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != len {
                return Err(ScaleError::param(format!(
                    "angle matrix row {i} has {} entries, expected {len}",
                    row.len()
                )));
            }
            angles.extend_from_slice(row);
        }
        let m = AngleMatrix { len, angles };
        for i in 0..len {
            if m.get(i, i) != 0.0 {
                return Err(ScaleError::param(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..len {
                let a = m.get(i, j);
                if !(0.0..=std::f64::consts::PI).contains(&a) || a != m.get(j, i) {
                    return Err(ScaleError::param(format!(
                        "entry ({i}, {j}) = {a} breaks symmetry or the [0, π] range"
                    )));
                }
            }
        }
        Ok(m)
    }
}

/// A_ij = arccos(clamp(⟨x_i, x_j⟩, −1, 1)), zero on the diagonal.
/// Rows are filled in parallel.
pub fn angle_matrix(points: &[SpherePoint]) -> AngleMatrix {
    let len = points.len();
    let mut angles = vec![0.0; len * len];
    if len > 0 {
        angles.par_chunks_mut(len).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = if i == j { 0.0 } else { points[i].angle(&points[j]) };
            }
        });
    }
    AngleMatrix { len, angles }
}
