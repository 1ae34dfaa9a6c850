//! Experiment configuration.
//!
//! A config file holds one `key = value` pair per line; `#` starts a comment.
//! Keys match the long command-line flags without the leading dashes, and a
//! flag given on the command line overrides the file. Relative paths in a
//! file are resolved against the file's directory.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `dataset` | `synthetic`, `salinas`, `indian_pines` or `custom` | `synthetic` |
//! | `features`, `labels` | input files (CSV or SCL1 / one label per line) | required |
//! | `out-dir` | where report, query log and map are written | required |
//! | `n` | kernel degree | 16 |
//! | `theta` | support threshold Θ in (0, 1] | 0.05 |
//! | `eta-start`, `eta-step`, `eta-max` | η sweep in radians | 0.05, 0.05, π/4 |
//! | `pca-dim` | fixed PCA dimension (overrides `pca-var`) | none |
//! | `pca-var`, `pca-max-dim` | variance fraction and cap | 0.999, 50 |
//! | `projection` | `normalize` or `stereographic` | `normalize` |
//! | `decay-s` | decay exponent S (reported only) | 3 |
//! | `seed` | sampling seed | 0 |
//! | `query-budget` | maximum oracle queries | none |
//! | `witness-n` | witness kernel degree | `n` |
//! | `anchor-cap` | per-class witness anchor limit | none |
//! | `refine` | maximum n doublings (0 = fixed n) | 0 |
//! | `classes` | comma-separated class ids | dataset preset |
//! | `fraction` | per-class sampling fraction | dataset preset |
//! | `window` | `r0:r1,c0:c1` half-open pixel window | none |
//! | `grid` | scene size `HxW` | dataset preset |
//! | `oracle` | `truth` or `replay` | `truth` |
//! | `replay-file` | `index,label` answers for the replay oracle | required for `replay` |
//! | `initial-labels` | `index,label` pairs placed in the queried set up front | none |
//! | `synthetic-k`, `synthetic-dim`, `synthetic-radius`, `synthetic-points`, `synthetic-overlap` | synthetic caps | 3, 2, 0.1, 300, 0 |
//! | `synthetic-centers` | `x,y,z; x,y,z; …` explicit cap centers | axis centers |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use scale_core::data::axis_centers;
use scale_core::{BenchmarkSpec, PcaTarget, Projection, SpherePoint, SyntheticSpec, Window};

use crate::error::ExperimentError;

pub const KNOWN_KEYS: &[&str] = &[
    "dataset",
    "features",
    "labels",
    "out-dir",
    "n",
    "theta",
    "eta-start",
    "eta-step",
    "eta-max",
    "pca-dim",
    "pca-var",
    "pca-max-dim",
    "projection",
    "decay-s",
    "seed",
    "query-budget",
    "witness-n",
    "anchor-cap",
    "refine",
    "classes",
    "fraction",
    "window",
    "grid",
    "oracle",
    "replay-file",
    "initial-labels",
    "synthetic-k",
    "synthetic-dim",
    "synthetic-radius",
    "synthetic-points",
    "synthetic-overlap",
    "synthetic-centers",
];

const PATH_KEYS: &[&str] = &["features", "labels", "out-dir", "replay-file", "initial-labels"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetKind {
    Synthetic,
    Salinas,
    IndianPines,
    Custom,
}

impl FromStr for DatasetKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "synthetic" => Ok(DatasetKind::Synthetic),
            "salinas" => Ok(DatasetKind::Salinas),
            "indian_pines" | "indian-pines" => Ok(DatasetKind::IndianPines),
            "custom" => Ok(DatasetKind::Custom),
            other => Err(ExperimentError::config(format!(
                "unknown dataset {other:?} (synthetic, salinas, indian_pines, custom)"
            ))),
        }
    }
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Synthetic => "synthetic",
            DatasetKind::Salinas => "salinas",
            DatasetKind::IndianPines => "indian_pines",
            DatasetKind::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    Truth,
    Replay,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSettings {
    pub k: usize,
    pub dim: usize,
    pub radius: f64,
    pub points: usize,
    pub overlap: f64,
    pub centers: Option<Vec<Vec<f64>>>,
}

impl SyntheticSettings {
    pub fn spec(&self, seed: u64) -> Result<SyntheticSpec, ExperimentError> {
        let cap_centers = match &self.centers {
            Some(rows) => rows
                .iter()
                .map(|r| SpherePoint::normalize(r.clone()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ExperimentError::new("data", e))?,
            None => axis_centers(self.k, self.dim).map_err(|e| ExperimentError::new("data", e))?,
        };
        Ok(SyntheticSpec {
            cap_centers,
            cap_radius: self.radius,
            points_per_class: self.points,
            overlap_fraction: self.overlap,
            seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub n: usize,
    pub theta: f64,
    pub eta_start: f64,
    pub eta_step: f64,
    pub eta_max: f64,
    pub pca: PcaTarget,
    pub projection: Projection,
    pub decay_s: u32,
    pub seed: u64,
    pub query_budget: Option<usize>,
    pub witness_n: Option<usize>,
    pub anchor_cap: Option<usize>,
    pub refine: u32,
    pub classes: Option<Vec<u32>>,
    pub fraction: Option<f64>,
    pub window: Option<Window>,
    pub grid: Option<(usize, usize)>,
    pub oracle: OracleKind,
    pub replay_file: Option<PathBuf>,
    pub initial_labels: Option<PathBuf>,
    pub synthetic: SyntheticSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::from_map(&BTreeMap::new()).expect("defaults parse")
    }
}

/// Reads a `key = value` file into a map. Later lines win.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, ExperimentError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ExperimentError::config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut map = parse_config_text(&text)?;
    for key in PATH_KEYS {
        if let Some(v) = map.get_mut(*key) {
            let p = Path::new(v.as_str());
            if p.is_relative() {
                *v = base.join(p).display().to_string();
            }
        }
    }
    Ok(map)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ExperimentError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ExperimentError::config(format!("line {}: expected `key = value`, got {raw:?}", i + 1)))?;
        let key = k.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ExperimentError::config(format!("line {}: unknown key {key:?}", i + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn parse<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, ExperimentError> {
    match map.get(key).map(String::as_str) {
        None | Some("") | Some("none") => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| ExperimentError::config(format!("{key}: cannot parse {v:?}"))),
    }
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ExperimentError> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| ExperimentError::config(format!("{key}: cannot parse {s:?}")))
        })
        .collect()
}

fn parse_range(key: &str, s: &str) -> Result<(usize, usize), ExperimentError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| ExperimentError::config(format!("{key}: expected start:end, got {s:?}")))?;
    let a = a.trim().parse().map_err(|_| ExperimentError::config(format!("{key}: bad start {a:?}")))?;
    let b = b.trim().parse().map_err(|_| ExperimentError::config(format!("{key}: bad end {b:?}")))?;
    Ok((a, b))
}

impl ExperimentConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, ExperimentError> {
        if let Some(k) = map.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(ExperimentError::config(format!("unknown key {k:?}")));
        }
        let dataset = parse(map, "dataset")?.unwrap_or(DatasetKind::Synthetic);
        let pca = match parse::<usize>(map, "pca-dim")? {
            Some(d) => PcaTarget::Dim(d),
            None => PcaTarget::Variance {
                fraction: parse(map, "pca-var")?.unwrap_or(0.999),
                max_dim: parse(map, "pca-max-dim")?.unwrap_or(50),
            },
        };
        let projection = match map.get("projection") {
            Some(p) => p.parse().map_err(|e| ExperimentError::new("config", e))?,
            None => Projection::Normalize,
        };
        let oracle = match map.get("oracle").map(String::as_str) {
            None | Some("truth") => OracleKind::Truth,
            Some("replay") => OracleKind::Replay,
            Some(o) => return Err(ExperimentError::config(format!("unknown oracle {o:?} (truth, replay)"))),
        };
        let classes = match map.get("classes") {
            Some(v) if !v.is_empty() && v != "none" => Some(parse_list("classes", v)?),
            _ => None,
        };
        let window = match map.get("window") {
            Some(v) if !v.is_empty() && v != "none" => {
                let (r, c) = v
                    .split_once(',')
                    .ok_or_else(|| ExperimentError::config(format!("window: expected r0:r1,c0:c1, got {v:?}")))?;
                Some(Window {
                    rows: parse_range("window", r)?,
                    cols: parse_range("window", c)?,
                })
            }
            _ => None,
        };
        let grid = match map.get("grid") {
            Some(v) if !v.is_empty() && v != "none" => {
                let (h, w) = v
                    .split_once('x')
                    .ok_or_else(|| ExperimentError::config(format!("grid: expected HxW, got {v:?}")))?;
                let h = h.trim().parse().map_err(|_| ExperimentError::config(format!("grid: bad height {h:?}")))?;
                let w = w.trim().parse().map_err(|_| ExperimentError::config(format!("grid: bad width {w:?}")))?;
                Some((h, w))
            }
            _ => None,
        };
        let centers = match map.get("synthetic-centers") {
            Some(v) if !v.is_empty() && v != "none" => Some(
                v.split(';')
                    .map(|row| parse_list::<f64>("synthetic-centers", row))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            _ => None,
        };
        let path = |k: &str| map.get(k).filter(|v| !v.is_empty() && *v != "none").map(PathBuf::from);

        let cfg = ExperimentConfig {
            dataset,
            features: path("features"),
            labels: path("labels"),
            out_dir: path("out-dir"),
            n: parse(map, "n")?.unwrap_or(16),
            theta: parse(map, "theta")?.unwrap_or(0.05),
            eta_start: parse(map, "eta-start")?.unwrap_or(0.05),
            eta_step: parse(map, "eta-step")?.unwrap_or(0.05),
            eta_max: parse(map, "eta-max")?.unwrap_or(std::f64::consts::FRAC_PI_4),
            pca,
            projection,
            decay_s: parse(map, "decay-s")?.unwrap_or(3),
            seed: parse(map, "seed")?.unwrap_or(0),
            query_budget: parse(map, "query-budget")?,
            witness_n: parse(map, "witness-n")?,
            anchor_cap: parse(map, "anchor-cap")?,
            refine: parse(map, "refine")?.unwrap_or(0),
            classes,
            fraction: parse(map, "fraction")?,
            window,
            grid,
            oracle,
            replay_file: path("replay-file"),
            initial_labels: path("initial-labels"),
            synthetic: SyntheticSettings {
                k: parse(map, "synthetic-k")?.unwrap_or(3),
                dim: parse(map, "synthetic-dim")?.unwrap_or(2),
                radius: parse(map, "synthetic-radius")?.unwrap_or(0.1),
                points: parse(map, "synthetic-points")?.unwrap_or(300),
                overlap: parse(map, "synthetic-overlap")?.unwrap_or(0.0),
                centers,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.n < 2 {
            return Err(ExperimentError::config(format!("n must be >= 2, got {}", self.n)));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(ExperimentError::config(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if self.decay_s < 2 {
            return Err(ExperimentError::config("decay-s must be >= 2"));
        }
        if matches!(self.witness_n, Some(0)) {
            return Err(ExperimentError::config("witness-n must be >= 1"));
        }
        if matches!(self.anchor_cap, Some(0)) {
            return Err(ExperimentError::config("anchor-cap must be >= 1"));
        }
        if self.oracle == OracleKind::Replay && self.replay_file.is_none() {
            return Err(ExperimentError::config("oracle = replay needs replay-file"));
        }
        if self.dataset != DatasetKind::Synthetic && (self.features.is_none() || self.labels.is_none()) {
            return Err(ExperimentError::config(format!(
                "dataset {} needs both features and labels",
                self.dataset.name()
            )));
        }
        if self.dataset == DatasetKind::IndianPines && self.window.is_none() {
            return Err(ExperimentError::config(
                "indian_pines needs a window (r0:r1,c0:c1) locating the 57x41 subset",
            ));
        }
        Ok(())
    }

    /// Benchmark protocol for file-backed datasets.
    pub fn benchmark_spec(&self) -> Option<BenchmarkSpec> {
        let mut spec = match self.dataset {
            DatasetKind::Synthetic => return None,
            DatasetKind::Salinas => BenchmarkSpec::salinas(self.seed),
            DatasetKind::IndianPines => BenchmarkSpec::indian_pines_subset(self.window?, self.seed),
            DatasetKind::Custom => BenchmarkSpec {
                name: scale_core::BenchmarkName::Custom,
                class_filter: Vec::new(),
                per_class_fraction: 1.0,
                subset_window: None,
                grid_dims: None,
                seed: self.seed,
            },
        };
        if let Some(c) = &self.classes {
            spec.class_filter = c.clone();
        }
        if let Some(f) = self.fraction {
            spec.per_class_fraction = f;
        }
        if self.window.is_some() {
            spec.subset_window = self.window;
        }
        if self.grid.is_some() {
            spec.grid_dims = self.grid;
        }
        Some(spec)
    }

    /// Every resolved setting as `key -> value`. The output directory is left
    /// out so that identical runs written to different places echo identically.
    pub fn echo(&self) -> BTreeMap<String, String> {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| "none".to_string(), ToString::to_string)
        }
        let p = |v: &Option<PathBuf>| v.as_ref().map_or_else(|| "none".to_string(), |p| p.display().to_string());
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("dataset", self.dataset.name().into());
        put("features", p(&self.features));
        put("labels", p(&self.labels));
        put("n", self.n.to_string());
        put("theta", self.theta.to_string());
        put("eta-start", self.eta_start.to_string());
        put("eta-step", self.eta_step.to_string());
        put("eta-max", self.eta_max.to_string());
        match self.pca {
            PcaTarget::Dim(d) => {
                put("pca-dim", d.to_string());
                put("pca-var", "none".into());
                put("pca-max-dim", "none".into());
            }
            PcaTarget::Variance { fraction, max_dim } => {
                put("pca-dim", "none".into());
                put("pca-var", fraction.to_string());
                put("pca-max-dim", max_dim.to_string());
            }
        }
        put("projection", self.projection.to_string());
        put("decay-s", self.decay_s.to_string());
        put("seed", self.seed.to_string());
        put("query-budget", opt(&self.query_budget));
        put("witness-n", opt(&self.witness_n));
        put("anchor-cap", opt(&self.anchor_cap));
        put("refine", self.refine.to_string());
        put(
            "classes",
            self.classes
                .as_ref()
                .map_or("none".into(), |c| c.iter().map(u32::to_string).collect::<Vec<_>>().join(",")),
        );
        put("fraction", opt(&self.fraction));
        put(
            "window",
            self.window.map_or("none".into(), |w| {
                format!("{}:{},{}:{}", w.rows.0, w.rows.1, w.cols.0, w.cols.1)
            }),
        );
        put("grid", self.grid.map_or("none".into(), |(h, w)| format!("{h}x{w}")));
        put(
            "oracle",
            match self.oracle {
                OracleKind::Truth => "truth",
                OracleKind::Replay => "replay",
            }
            .into(),
        );
        put("replay-file", p(&self.replay_file));
        put("initial-labels", p(&self.initial_labels));
        put("synthetic-k", self.synthetic.k.to_string());
        put("synthetic-dim", self.synthetic.dim.to_string());
        put("synthetic-radius", self.synthetic.radius.to_string());
        put("synthetic-points", self.synthetic.points.to_string());
        put("synthetic-overlap", self.synthetic.overlap.to_string());
        put(
            "synthetic-centers",
            self.synthetic.centers.as_ref().map_or("none".into(), |rows| {
                rows.iter()
                    .map(|r| r.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
                    .collect::<Vec<_>>()
                    .join(";")
            }),
        );
        m
    }
}
