//! Benchmark loading and synthetic sphere-cap fixtures.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, ScaleError};
use crate::io;
use crate::preprocess::{RawDataset, SpherePoint};

/// Geodesic ball 𝔹(center, radius).
#[derive(Clone, Debug, PartialEq)]
pub struct Cap {
    pub center: SpherePoint,
    pub radius: f64,
}

impl Cap {
    /// Geodesic distance from `x` to the cap (0 inside).
    pub fn distance(&self, x: &SpherePoint) -> f64 {
        (self.center.angle(x) - self.radius).max(0.0)
    }
}

/// Distance from `x` to the union of `caps`.
pub fn distance_to_support(x: &SpherePoint, caps: &[Cap]) -> f64 {
    caps.iter().map(|c| c.distance(x)).fold(f64::INFINITY, f64::min)
}

/// K classes, each a uniform cap on 𝕊^q. A fraction of every class can be
/// moved into a band midway to the nearest other center, modelling class
/// overlap.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub cap_centers: Vec<SpherePoint>,
    pub cap_radius: f64,
    pub points_per_class: usize,
    pub overlap_fraction: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Centers on the coordinate axes of ℝ^{q+1} (e₁, e₂, …, then −e₁, …),
    /// pairwise at least π/2 apart. Supports up to 2(q+1) classes.
    pub fn axis_caps(k: usize, q: usize, cap_radius: f64, points_per_class: usize, seed: u64) -> Result<Self> {
        Ok(SyntheticSpec {
            cap_centers: axis_centers(k, q)?,
            cap_radius,
            points_per_class,
            overlap_fraction: 0.0,
            seed,
        })
    }

    pub fn class_count(&self) -> usize {
        self.cap_centers.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.cap_centers.len();
        if k == 0 {
            return Err(ScaleError::param("synthetic spec needs at least one cap"));
        }
        let dim = self.cap_centers[0].ambient_dim();
        if dim < 2 || self.cap_centers.iter().any(|c| c.ambient_dim() != dim) {
            return Err(ScaleError::param("cap centers must share an ambient dimension >= 2"));
        }
        if !(self.cap_radius > 0.0 && self.cap_radius < std::f64::consts::PI) {
            return Err(ScaleError::param(format!("cap radius {} outside (0, π)", self.cap_radius)));
        }
        if self.points_per_class == 0 {
            return Err(ScaleError::param("points_per_class must be positive"));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(ScaleError::param(format!(
                "overlap fraction {} outside [0, 1)",
                self.overlap_fraction
            )));
        }
        if self.overlap_fraction > 0.0 && k < 2 {
            return Err(ScaleError::param("overlap bands need at least two caps"));
        }
        if self.overlap_fraction == 0.0 {
            for i in 0..k {
                for j in (i + 1)..k {
                    let d = self.cap_centers[i].angle(&self.cap_centers[j]);
                    if d <= 2.0 * self.cap_radius {
                        return Err(ScaleError::param(format!(
                            "caps {i} and {j} overlap: centers {d:.4} apart, radius {}",
                            self.cap_radius
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn axis_centers(k: usize, q: usize) -> Result<Vec<SpherePoint>> {
    let dim = q + 1;
    if k == 0 || k > 2 * dim {
        return Err(ScaleError::param(format!("axis caps support 1..={} classes on S^{q}", 2 * dim)));
    }
    Ok((0..k)
        .map(|i| {
            let mut v = vec![0.0; dim];
            v[i % dim] = if i < dim { 1.0 } else { -1.0 };
            SpherePoint::new(v).expect("axis vector is unit")
        })
        .collect())
}

/// Generated samples with their ground truth (labels 1..=K).
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub points: Vec<SpherePoint>,
    pub labels: Vec<u32>,
    /// True support: the class caps plus any overlap bands.
    pub support: Vec<Cap>,
}

impl SyntheticData {
    pub fn to_raw_dataset(&self) -> RawDataset {
        let dim = self.points.first().map_or(0, SpherePoint::ambient_dim);
        let flat: Vec<f64> = self.points.iter().flat_map(|p| p.coords().iter().copied()).collect();
        let features = DMatrix::from_row_slice(self.points.len(), dim, &flat);
        RawDataset::new(features, self.labels.clone()).expect("generated data is valid")
    }
}

/// Uniform sample from the cap.
///
/// The geodesic radius ρ has density ∝ sin^{q−1}(ρ) on [0, r] (the area
/// element of 𝕊^q in polar coordinates), drawn by rejection against
/// sin(min(r, π/2)). The direction is a Gaussian vector projected onto the
/// tangent space at the center. The point is cos ρ · c + sin ρ · u.
pub fn sample_in_cap(rng: &mut impl Rng, cap: &Cap) -> SpherePoint {
    let c = cap.center.coords();
    let q = c.len() - 1;
    let bound = cap.radius.min(std::f64::consts::FRAC_PI_2).sin();
    let rho = loop {
        let r = rng.random::<f64>() * cap.radius;
        if q <= 1 || rng.random::<f64>() <= (r.sin() / bound).powi(q as i32 - 1) {
            break r;
        }
    };
    let u = loop {
        let g: Vec<f64> = (0..c.len()).map(|_| rng.sample(StandardNormal)).collect();
        let along: f64 = g.iter().zip(c).map(|(a, b)| a * b).sum();
        let t: Vec<f64> = g.iter().zip(c).map(|(a, b)| a - along * b).collect();
        let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            break t.into_iter().map(|x| x / norm).collect::<Vec<_>>();
        }
    };
    let (s, co) = rho.sin_cos();
    let v: Vec<f64> = c.iter().zip(&u).map(|(ci, ui)| co * ci + s * ui).collect();
    SpherePoint::normalize(v).expect("cap sample is non-zero")
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = &spec.cap_centers;
    let mut support: Vec<Cap> = centers
        .iter()
        .map(|c| Cap {
            center: c.clone(),
            radius: spec.cap_radius,
        })
        .collect();
    let band_count = (spec.overlap_fraction * spec.points_per_class as f64).round() as usize;
    let mut points = Vec::with_capacity(centers.len() * spec.points_per_class);
    let mut labels = Vec::with_capacity(points.capacity());
    for (k, center) in centers.iter().enumerate() {
        let own = &support[k].clone();
        let band = if band_count > 0 {
            let nearest = (0..centers.len())
                .filter(|&j| j != k)
                .min_by(|&a, &b| {
                    center
                        .angle(&centers[a])
                        .partial_cmp(&center.angle(&centers[b]))
                        .unwrap()
                        .then(a.cmp(&b))
                })
                .expect("validated: at least two caps");
            let mid: Vec<f64> = center
                .coords()
                .iter()
                .zip(centers[nearest].coords())
                .map(|(a, b)| a + b)
                .collect();
            let mid = SpherePoint::normalize(mid).map_err(|_| {
                ScaleError::param(format!("caps {k} and {nearest} are antipodal; no midpoint band"))
            })?;
            let cap = Cap {
                center: mid,
                radius: spec.cap_radius,
            };
            if !support.contains(&cap) {
                support.push(cap.clone());
            }
            Some(cap)
        } else {
            None
        };
        for i in 0..spec.points_per_class {
            let cap = match &band {
                Some(b) if i < band_count => b,
                _ => own,
            };
            points.push(sample_in_cap(&mut rng, cap));
            labels.push(k as u32 + 1);
        }
    }
    Ok(SyntheticData { points, labels, support })
}

/// Named benchmark protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchmarkName {
    Salinas,
    IndianPinesSubset,
    /// User-supplied scene; classes default to every non-background id.
    Custom,
}

/// Row and column ranges (half-open) of an image window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
}

impl Window {
    pub fn height(&self) -> usize {
        self.rows.1 - self.rows.0
    }

    pub fn width(&self) -> usize {
        self.cols.1 - self.cols.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkSpec {
    pub name: BenchmarkName,
    pub class_filter: Vec<u32>,
    pub per_class_fraction: f64,
    pub subset_window: Option<Window>,
    /// (height, width) of the full scene; `None` treats rows as a flat list.
    pub grid_dims: Option<(usize, usize)>,
    pub seed: u64,
}

impl BenchmarkSpec {
    /// Salinas: classes 1–10, half of every class.
    pub fn salinas(seed: u64) -> Self {
        BenchmarkSpec {
            name: BenchmarkName::Salinas,
            class_filter: (1..=10).collect(),
            per_class_fraction: 0.5,
            subset_window: None,
            grid_dims: Some((512, 217)),
            seed,
        }
    }

    /// Indian Pines window with corn-notill (2), grass-trees (6),
    /// soybean-mintill (11), woods (14) and stone-steel-towers (16). The
    /// window position within the 145×145 scene must be supplied.
    pub fn indian_pines_subset(window: Window, seed: u64) -> Self {
        BenchmarkSpec {
            name: BenchmarkName::IndianPinesSubset,
            class_filter: vec![2, 6, 11, 14, 16],
            per_class_fraction: 1.0,
            subset_window: Some(window),
            grid_dims: Some((145, 145)),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.per_class_fraction > 0.0 && self.per_class_fraction <= 1.0) {
            return Err(ScaleError::Config(format!(
                "per-class fraction {} outside (0, 1]",
                self.per_class_fraction
            )));
        }
        if self.class_filter.is_empty() || self.class_filter.contains(&0) {
            return Err(ScaleError::Config("class filter must list classes >= 1".into()));
        }
        if let Some(w) = self.subset_window {
            let (h, wd) = self
                .grid_dims
                .ok_or_else(|| ScaleError::Config("a window needs grid dimensions".into()))?;
            if w.rows.0 >= w.rows.1 || w.cols.0 >= w.cols.1 || w.rows.1 > h || w.cols.1 > wd {
                return Err(ScaleError::Config(format!(
                    "window rows {:?} cols {:?} does not fit the {h}x{wd} grid",
                    w.rows, w.cols
                )));
            }
        }
        Ok(())
    }
}

pub fn load_benchmark(spec: &BenchmarkSpec, feature_file: impl AsRef<Path>, label_file: impl AsRef<Path>) -> Result<RawDataset> {
    let features = io::read_features(feature_file)?;
    let labels = io::read_labels(label_file)?;
    subset_benchmark(spec, &features, &labels)
}

/// Applies window, background removal, class filter and stratified sampling.
///
/// Each filtered class keeps ⌈fraction · count⌉ of its pixels, chosen by a
/// seeded shuffle. Output rows are in ascending pixel order; `pixel_index`
/// refers to the window grid (or the full grid without a window).
pub fn subset_benchmark(spec: &BenchmarkSpec, features: &DMatrix<f64>, labels: &[u32]) -> Result<RawDataset> {
    spec.validate()?;
    if features.nrows() != labels.len() {
        return Err(ScaleError::data(format!(
            "{} feature rows but {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    if let Some((h, w)) = spec.grid_dims {
        if h * w != labels.len() {
            return Err(ScaleError::data(format!(
                "grid {h}x{w} needs {} rows, files have {}",
                h * w,
                labels.len()
            )));
        }
    }

    // (source row, pixel index in the output grid)
    let candidates: Vec<(usize, usize)> = match (spec.subset_window, spec.grid_dims) {
        (Some(win), Some((_, w))) => {
            let mut v = Vec::new();
            for r in win.rows.0..win.rows.1 {
                for c in win.cols.0..win.cols.1 {
                    v.push((r * w + c, (r - win.rows.0) * win.width() + (c - win.cols.0)));
                }
            }
            v
        }
        _ => (0..labels.len()).map(|i| (i, i)).collect(),
    };
    let out_grid = match (spec.subset_window, spec.grid_dims) {
        (Some(win), _) => Some((win.height(), win.width())),
        (None, g) => g,
    };

    let mut by_class: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
    for &(row, pix) in &candidates {
        if labels[row] != 0 {
            by_class.entry(labels[row]).or_default().push((row, pix));
        }
    }
    let missing: Vec<u32> = spec.class_filter.iter().copied().filter(|c| !by_class.contains_key(c)).collect();
    if !missing.is_empty() {
        let available: Vec<u32> = by_class.keys().copied().collect();
        return Err(ScaleError::data(format!(
            "classes {missing:?} not present; available classes: {available:?}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for class in &spec.class_filter {
        let mut members = by_class[class].clone();
        let take = (spec.per_class_fraction * members.len() as f64 - 1e-9).ceil().max(1.0) as usize;
        members.shuffle(&mut rng);
        chosen.extend(members.into_iter().take(take));
    }
    chosen.sort_unstable();
    chosen.dedup();

    let d = features.ncols();
    let mut flat = Vec::with_capacity(chosen.len() * d);
    for &(row, _) in &chosen {
        flat.extend(features.row(row).iter().copied());
    }
    let ds = RawDataset {
        features: DMatrix::from_row_slice(chosen.len(), d, &flat),
        labels: chosen.iter().map(|&(row, _)| labels[row]).collect(),
        grid_dims: out_grid,
        pixel_index: chosen.iter().map(|&(_, pix)| pix).collect(),
    };
    ds.validate()?;
    Ok(ds)
}
