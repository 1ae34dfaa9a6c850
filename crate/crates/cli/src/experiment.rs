use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use scale_core::active::{LabelOracle, ReplayOracle, TruthOracle};
use scale_core::data::{generate_synthetic, subset_benchmark};
use scale_core::io::{read_features, read_label_pairs, read_labels, write_query_log};
use scale_core::witness::{classify_uncertain, AnchorCap};
use scale_core::{prepare_points, refine_degree, run_scale, sphere_dim, LabelState, LoopConfig, PipelineConfig, ScaleError, SpherePoint};

use crate::config::{DatasetKind, ExperimentConfig, OracleKind};
use crate::error::{ExperimentError, InModule};
use crate::map::render_map;
use crate::report::{accuracy, EtaStep, ExperimentReport, RefineStep};

/// Everything one run produces.
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    /// Final label of every pipeline sample.
    pub predicted: Vec<u32>,
    pub query_log: Vec<u8>,
    /// PPM bytes; `None` when the dataset has no grid.
    pub map: Option<Vec<u8>>,
}

struct Prepared {
    points: Vec<SpherePoint>,
    truth: Vec<u32>,
    grid: Option<((usize, usize), Vec<usize>)>,
}

fn load(cfg: &ExperimentConfig) -> Result<Prepared, ExperimentError> {
    if cfg.dataset == DatasetKind::Synthetic {
        let spec = cfg.synthetic.spec(cfg.seed)?;
        let data = generate_synthetic(&spec).in_module("data")?;
        return Ok(Prepared {
            points: data.points,
            truth: data.labels,
            grid: None,
        });
    }
    let (Some(fpath), Some(lpath)) = (&cfg.features, &cfg.labels) else {
        return Err(ExperimentError::config("features and labels are required"));
    };
    let features = read_features(fpath).in_module("data")?;
    let labels = read_labels(lpath).in_module("data")?;
    let mut spec = cfg.benchmark_spec().expect("file-backed dataset");
    if spec.class_filter.is_empty() {
        let present: BTreeSet<u32> = labels.iter().copied().filter(|&l| l != 0).collect();
        spec.class_filter = present.into_iter().collect();
    }
    let raw = subset_benchmark(&spec, &features, &labels).in_module("data")?;
    let (points, _) = prepare_points(&raw.features, cfg.pca, cfg.projection).in_module("preprocess")?;
    let grid = raw.grid_dims.map(|g| (g, raw.pixel_index.clone()));
    Ok(Prepared {
        points,
        truth: raw.labels,
        grid,
    })
}

/// preprocess → support → η sweep → witness → metrics.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun, ExperimentError> {
    let start = Instant::now();
    let data = load(cfg)?;
    let m = data.points.len();

    let mut oracle: Box<dyn LabelOracle> = match cfg.oracle {
        OracleKind::Truth => Box::new(TruthOracle::new(data.truth.clone())),
        OracleKind::Replay => {
            let path = cfg.replay_file.as_ref().expect("validated");
            Box::new(ReplayOracle::new(read_label_pairs(path).in_module("data")?).in_module("data")?)
        }
    };
    let initial = match &cfg.initial_labels {
        Some(path) => LabelState::with_queried(m, &read_label_pairs(path).in_module("data")?).in_module("data")?,
        None => LabelState::new(m),
    };
    let initial_count = initial.queried.len();

    let pipeline = PipelineConfig {
        sweep: LoopConfig {
            eta_start: cfg.eta_start,
            eta_step: cfg.eta_step,
            eta_max: cfg.eta_max,
            n: cfg.n,
            theta_cap: cfg.theta,
            query_budget: cfg.query_budget,
        },
        witness_n: cfg.witness_n,
        anchor_cap: cfg.anchor_cap.map(|per_class| AnchorCap { per_class, seed: cfg.seed }),
        refine_doublings: (cfg.refine > 0).then_some(cfg.refine),
    };
    pipeline.sweep.validate().in_module("config")?;
    let q = sphere_dim(&data.points).in_module("preprocess")?;
    let (n, support, trace) = refine_degree(&data.points, &pipeline).in_module("support")?;
    let sweep = LoopConfig { n, ..pipeline.sweep.clone() };
    let swept = run_scale(&data.points, &support, oracle.as_mut(), &sweep, initial).in_module("active_loop")?;
    let witness_n = cfg.witness_n.unwrap_or(n);
    let state = classify_uncertain(&swept, &data.points, witness_n, q, pipeline.anchor_cap).in_module("witness")?;

    let (acc, per_class) = accuracy(&state.predicted, &data.truth);
    let predicted: Vec<u32> = state.predicted.iter().map(|p| p.unwrap_or(0)).collect();
    let mut query_log = Vec::new();
    write_query_log(&mut query_log, &state.queried).expect("writing to memory");
    let map = match &data.grid {
        Some((dims, index)) => Some(render_map(&predicted, *dims, index).in_module("cli")?),
        None => None,
    };

    let report = ExperimentReport {
        dataset: cfg.dataset.name().to_string(),
        sample_count: m,
        accuracy: acc,
        per_class_accuracy: per_class,
        queried_count: state.queried.len(),
        queried_fraction: state.queried.len() as f64 / m as f64,
        oracle_queries: state.queried.len() - initial_count,
        component_history: state
            .history
            .iter()
            .map(|h| EtaStep {
                eta: h.eta,
                components: h.components,
                queries: h.queries,
                newly_labeled: h.newly_labeled,
                conflicting: h.conflicting,
            })
            .collect(),
        n_used: n,
        witness_n,
        sphere_dim: q,
        kept_count: support.kept_count(),
        uncertain_count: swept.uncertain.len(),
        pruned_count: swept.pruned.len(),
        budget_exhausted: swept.budget_exhausted,
        refine_trace: trace.into_iter().map(|(n, components)| RefineStep { n, components }).collect(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        config_echo: cfg.echo(),
    };
    Ok(ExperimentRun {
        report,
        predicted,
        query_log,
        map,
    })
}

/// Writes `report.txt`, `queries.csv` and, when there is a grid, `map.ppm`.
pub fn write_artifacts(run: &ExperimentRun, out_dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let io = |path: &Path, e: std::io::Error| {
        ExperimentError::new(
            "cli",
            ScaleError::Io {
                path: path.display().to_string(),
                source: e,
            },
        )
    };
    std::fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let mut files = vec![
        (out_dir.join("report.txt"), run.report.to_text().into_bytes()),
        (out_dir.join("queries.csv"), run.query_log.clone()),
    ];
    if let Some(map) = &run.map {
        files.push((out_dir.join("map.ppm"), map.clone()));
    }
    for (path, bytes) in &files {
        std::fs::write(path, bytes).map_err(|e| io(path, e))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
