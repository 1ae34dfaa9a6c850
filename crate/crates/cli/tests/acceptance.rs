//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails. Criterion 7 needs the real scenes and is skipped unless
//! `SCALE_SALINAS_CONFIG` / `SCALE_INDIAN_PINES_CONFIG` name config files.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use helpers::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scale_cli::{read_config_file, run_experiment, write_artifacts, DatasetKind, ExperimentConfig};
use scale_core::data::generate_synthetic;
use scale_core::kernels::localization_ratio;
use scale_core::support::{containment_harness, HarnessOptions};
use scale_core::witness::{Scaled, WitnessModel};
use scale_core::{angle_matrix, build_components, chebyshev_kernel, components_oracle, filter_h, JacobiKernel, SpherePoint, SyntheticSpec};

// small helpers shared by several criteria
mod helpers {
    use super::*;

    pub fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> SpherePoint {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.1 && norm <= 1.0 {
                return SpherePoint::normalize(v).unwrap();
            }
        }
    }

    pub fn config(text: &str) -> ExperimentConfig {
        let map = scale_cli::config::parse_config_text(text).unwrap();
        ExperimentConfig::from_map(&map).unwrap()
    }

    /// 1 + 2 Σ_{ℓ=1}^{n-1} H(ℓ/n) cos(ℓθ), one cosine per term.
    pub fn phi_terms(n: usize, theta: f64) -> f64 {
        1.0 + 2.0
            * (1..n)
                .map(|l| filter_h(l as f64 / n as f64).unwrap() * (l as f64 * theta).cos())
                .sum::<f64>()
    }
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

enum Outcome {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn kernel_identities() -> Outcome {
    let mut worst = 0.0f64;
    for n in 2..=128 {
        let sum = 1.0 + 2.0 * (1..n).map(|l| filter_h(l as f64 / n as f64).unwrap()).sum::<f64>();
        worst = worst.max((chebyshev_kernel(1.0, n).unwrap() - sum).abs());
    }
    let p1 = chebyshev_kernel(1.0, 2).unwrap();
    let m1 = chebyshev_kernel(-1.0, 2).unwrap();
    check(
        worst <= 1e-12 && (p1 - 3.0).abs() <= 1e-12 && (m1 + 1.0).abs() <= 1e-12,
        format!("max |Φ_n(1) - (1 + 2ΣH(ℓ/n))| = {worst:.2e} over n=2..128, Φ_2(1) = {p1}, Φ_2(-1) = {m1}"),
    )
}

fn localization() -> Outcome {
    const GRID: usize = 20001;
    let mut parts = Vec::new();
    let mut ok = true;
    for s in [3u32, 4] {
        let oracle_r: Vec<f64> = [8usize, 16, 32, 64]
            .iter()
            .map(|&n| {
                (0..GRID)
                    .map(|i| {
                        let theta = PI * i as f64 / (GRID - 1) as f64;
                        phi_terms(n, theta).abs() * (n as f64 * theta).powi(s as i32).max(1.0) / n as f64
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let lib_r: Vec<f64> = [8usize, 16, 32, 64].iter().map(|&n| localization_ratio(n, s, GRID).unwrap()).collect();
        for r in [&oracle_r, &lib_r] {
            for w in r.windows(2) {
                let ratio = w[1] / w[0];
                ok &= (0.25..=4.0).contains(&ratio);
            }
        }
        for (a, b) in oracle_r.iter().zip(&lib_r) {
            ok &= (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        }
        let ratios: Vec<String> = oracle_r.windows(2).map(|w| format!("{:.3}", w[1] / w[0])).collect();
        parts.push(format!("S={s}: R(2n)/R(n) = [{}]", ratios.join(", ")));
    }
    check(ok, parts.join("; "))
}

fn support_recovery() -> Outcome {
    let spec = SyntheticSpec::axis_caps(3, 2, 0.1, 1000, 7).unwrap();
    let min_sep = (0..3)
        .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
        .map(|(i, j)| spec.cap_centers[i].angle(&spec.cap_centers[j]))
        .fold(f64::INFINITY, f64::min);
    let opts = HarnessOptions { eta: 0.3, ..HarnessOptions::default() };
    let r32 = containment_harness(&spec, 32, 0.1, &opts).unwrap();
    let r64 = containment_harness(&spec, 64, 0.1, &opts).unwrap();
    check(
        min_sep >= 1.0
            && r32.sample_count == 3000
            && r32.kept_support_fraction >= 0.99
            && r32.component_count == 3
            && r64.max_kept_distance <= r32.max_kept_distance,
        format!(
            "center separation {min_sep:.3}, kept {:.4}, components {} at η=0.3, max kept distance {:.4} (n=32) -> {:.4} (n=64)",
            r32.kept_support_fraction, r32.component_count, r32.max_kept_distance, r64.max_kept_distance
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    let mut total_components = 0;
    for _ in 0..200 {
        let m = rng.random_range(1..=100);
        let dim = rng.random_range(2..=5);
        let points: Vec<SpherePoint> = (0..m).map(|_| random_point(&mut rng, dim)).collect();
        let mask: Vec<bool> = (0..m).map(|_| rng.random::<f64>() < 0.8).collect();
        let eta = loop {
            let e = rng.random::<f64>() * PI;
            if e > 0.0 {
                break e;
            }
        };
        let angles = angle_matrix(&points);
        let a = build_components(&angles, &mask, eta).unwrap();
        let b = components_oracle(&angles, &mask, eta).unwrap();
        total_components += a.component_count;
        if a.partition() != b.partition() || a.component_of != b.component_of {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches} mismatches over 200 instances ({total_components} components)"),
    )
}

fn end_to_end() -> Outcome {
    let three = config(
        "dataset = synthetic\nsynthetic-k = 3\nsynthetic-dim = 2\nsynthetic-radius = 0.1\nsynthetic-points = 300\n\
         n = 16\ntheta = 0.1\neta-start = 0.2\neta-step = 0.05\nseed = 12",
    );
    let a = run_experiment(&three).unwrap().report;

    // two caps 0.25 apart, one pre-labeled point near each center
    let text = format!(
        "dataset = synthetic\nsynthetic-centers = 1,0,0; {},{},0\nsynthetic-radius = 0.1\nsynthetic-points = 300\n\
         n = 16\ntheta = 0.1\neta-start = 0.2\neta-step = 0.05\nwitness-n = 8\nseed = 5",
        0.25f64.cos(),
        0.25f64.sin()
    );
    let base = config(&text);
    let data = generate_synthetic(&base.synthetic.spec(base.seed).unwrap()).unwrap();
    let spec = base.synthetic.spec(base.seed).unwrap();
    let seeds: Vec<(usize, u32)> = spec
        .cap_centers
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let best = (0..data.points.len())
                .filter(|&i| data.labels[i] == k as u32 + 1)
                .min_by(|&i, &j| c.angle(&data.points[i]).total_cmp(&c.angle(&data.points[j])))
                .unwrap();
            (best, k as u32 + 1)
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let seed_file = dir.path().join("initial.csv");
    let body: String = seeds.iter().map(|(i, l)| format!("{i},{l}\n")).collect();
    std::fs::write(&seed_file, format!("index,label\n{body}")).unwrap();
    let mixed = config(&format!("{text}\ninitial-labels = {}", seed_file.display()));
    let b = run_experiment(&mixed).unwrap().report;
    let conflicts: usize = b.component_history.iter().map(|h| h.conflicting).sum();

    check(
        a.accuracy == 1.0 && a.oracle_queries == 3 && a.queried_count == 3 && conflicts > 0 && b.uncertain_count > 0 && b.accuracy >= 0.95,
        format!(
            "3 caps: accuracy {:.4} with {} queries; 2 caps: {} conflicting component-steps, {} witness-classified, accuracy {:.4}",
            a.accuracy,
            a.oracle_queries,
            conflicts,
            b.uncertain_count + b.pruned_count,
            b.accuracy
        ),
    )
}

/// Scene on a 30×30 grid: three caps in 𝕊^4 plus background pixels.
fn write_grid_scene(dir: &Path) -> (String, String) {
    let spec = SyntheticSpec::axis_caps(3, 4, 0.15, 250, 9).unwrap();
    let data = generate_synthetic(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut order: Vec<usize> = (0..900).collect();
    for i in (1..900).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut feats = vec![String::new(); 900];
    let mut labels = vec![0u32; 900];
    for (pix, slot) in order.iter().enumerate() {
        let row: Vec<f64> = if *slot < data.points.len() {
            labels[pix] = data.labels[*slot];
            let scale = 1.0 + rng.random::<f64>();
            data.points[*slot].coords().iter().map(|x| 3.0 * x * scale).collect()
        } else {
            (0..5).map(|_| rng.random::<f64>()).collect()
        };
        feats[pix] = row.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
    }
    let f = dir.join("scene.csv");
    let l = dir.join("scene_labels.csv");
    std::fs::write(&f, feats.join("\n") + "\n").unwrap();
    std::fs::write(&l, labels.iter().map(|x| format!("{x}\n")).collect::<String>()).unwrap();
    (f.display().to_string(), l.display().to_string())
}

fn strip_wall_time(text: &str) -> String {
    text.lines().filter(|l| !l.contains("wall_time_seconds")).collect::<Vec<_>>().join("\n")
}

fn determinism() -> Outcome {
    let input = tempfile::tempdir().unwrap();
    let (f, l) = write_grid_scene(input.path());
    let configs = [
        "dataset = synthetic\nsynthetic-k = 4\nsynthetic-dim = 3\nsynthetic-points = 200\nsynthetic-overlap = 0.1\n\
         theta = 0.1\neta-start = 0.1\nquery-budget = 20\nanchor-cap = 50\nseed = 3"
            .to_string(),
        format!(
            "dataset = custom\nfeatures = {f}\nlabels = {l}\ngrid = 30x30\nfraction = 0.8\npca-dim = 5\n\
             theta = 0.05\neta-start = 0.2\nrefine = 2\nseed = 11"
        ),
    ];
    let mut ok = true;
    let mut maps = 0;
    for text in &configs {
        let cfg = config(text);
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let out = tempfile::tempdir().unwrap();
            let run = run_experiment(&cfg).unwrap();
            write_artifacts(&run, out.path()).unwrap();
            let read = |name: &str| std::fs::read(out.path().join(name)).ok();
            outputs.push((
                strip_wall_time(&String::from_utf8(read("report.txt").unwrap()).unwrap()),
                read("queries.csv").unwrap(),
                read("map.ppm"),
            ));
        }
        maps += outputs[0].2.is_some() as usize;
        ok &= outputs[0] == outputs[1];
    }
    check(
        ok && maps == 1,
        format!("{} configs run twice; reports, query logs and {maps} map identical: {ok}", configs.len()),
    )
}

fn benchmark(env: &str, expected: DatasetKind, min_acc: f64, max_frac: f64) -> Outcome {
    let Some(path) = std::env::var_os(env) else {
        return Outcome::Skipped(format!("{env} not set"));
    };
    let map = match read_config_file(Path::new(&path)) {
        Ok(m) => m,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let cfg = match ExperimentConfig::from_map(&map) {
        Ok(c) if c.dataset == expected => c,
        Ok(c) => return Outcome::Fail(format!("config is for {}, expected {}", c.dataset.name(), expected.name())),
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    match run_experiment(&cfg) {
        Ok(run) => {
            let r = run.report;
            check(
                r.accuracy >= min_acc && r.queried_fraction <= max_frac,
                format!(
                    "accuracy {:.4} (need >= {min_acc}) at queried fraction {:.4} (need <= {max_frac})",
                    r.accuracy, r.queried_fraction
                ),
            )
        }
        Err(e) => Outcome::Fail(e.to_string()),
    }
}

fn benchmarks() -> Outcome {
    let salinas = benchmark("SCALE_SALINAS_CONFIG", DatasetKind::Salinas, 0.94, 0.05);
    let pines = benchmark("SCALE_INDIAN_PINES_CONFIG", DatasetKind::IndianPines, 0.78, 0.09);
    let describe = |name: &str, o: &Outcome| match o {
        Outcome::Pass(d) => format!("{name} pass: {d}"),
        Outcome::Fail(d) => format!("{name} FAIL: {d}"),
        Outcome::Skipped(d) => format!("{name} skipped: {d}"),
    };
    let detail = format!("{}; {}", describe("salinas", &salinas), describe("indian pines", &pines));
    match (&salinas, &pines) {
        (Outcome::Fail(_), _) | (_, Outcome::Fail(_)) => Outcome::Fail(detail),
        (Outcome::Pass(_), Outcome::Pass(_)) => Outcome::Pass(detail),
        _ => Outcome::Skipped(detail),
    }
}

fn witness_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut ties, mut perm, mut scale) = (0, 0, 0);
    for _ in 0..100 {
        let dim = rng.random_range(3..=6);
        let q = dim - 1;
        let n = rng.random_range(2..=24);
        let k = rng.random_range(2..=5u32);
        let anchors: BTreeMap<u32, Vec<SpherePoint>> = (1..=k)
            .map(|c| (c, (0..rng.random_range(1..=6)).map(|_| random_point(&mut rng, dim)).collect()))
            .collect();
        let x = random_point(&mut rng, dim);
        let kernel = JacobiKernel::new(n, q).unwrap();
        let model = WitnessModel::with_kernel(anchors.clone(), kernel.clone()).unwrap();
        let y = model.classify(&x).unwrap();

        // duplicated classes tie; the lower id must win, every time
        let (lo, hi) = (k + 1 + rng.random_range(0..3), k + 5);
        let mut dup = anchors.clone();
        dup.insert(lo, anchors[&y].clone());
        dup.insert(hi, anchors[&y].clone());
        dup.remove(&y);
        let dm = WitnessModel::with_kernel(dup, kernel.clone()).unwrap();
        let first = dm.classify(&x).unwrap();
        if first == lo && (0..3).all(|_| dm.classify(&x).unwrap() == first) {
            ties += 1;
        }

        // relabel classes by a random permutation
        let mut ids: Vec<u32> = (1..=k).collect();
        for i in (1..ids.len()).rev() {
            ids.swap(i, rng.random_range(0..=i));
        }
        let permuted: BTreeMap<u32, Vec<SpherePoint>> = anchors.iter().map(|(c, a)| (ids[*c as usize - 1], a.clone())).collect();
        let pm = WitnessModel::with_kernel(permuted, kernel.clone()).unwrap();
        if pm.classify(&x).unwrap() == ids[y as usize - 1] {
            perm += 1;
        }

        let c = 10f64.powf(rng.random::<f64>() * 6.0 - 3.0);
        let sm = WitnessModel::with_kernel(anchors, Scaled(kernel, c)).unwrap();
        if sm.classify(&x).unwrap() == y {
            scale += 1;
        }
    }
    check(
        ties == 100 && perm == 100 && scale == 100,
        format!("tie-break {ties}/100, permutation {perm}/100, rescaling {scale}/100"),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "kernel identities", Duration::from_secs(1), kernel_identities),
        (2, "localization ratio", Duration::from_secs(10), localization),
        (3, "support recovery", Duration::from_secs(60), support_recovery),
        (4, "component oracle equivalence", Duration::from_secs(10), oracle_equivalence),
        (5, "end-to-end synthetic", Duration::from_secs(60), end_to_end),
        (6, "determinism", Duration::from_secs(600), determinism),
        (7, "benchmark reproduction", Duration::from_secs(3600), benchmarks),
        (8, "witness properties", Duration::from_secs(5), witness_properties),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) if elapsed <= budget => ("PASS", d),
            Outcome::Pass(d) => ("FAIL", format!("{d}; over the {budget:?} budget")),
            Outcome::Fail(d) => ("FAIL", d),
            Outcome::Skipped(d) => ("SKIPPED", d),
        };
        failed += (tag == "FAIL") as usize;
        println!("criterion {id} [{name}]: {tag} ({:.2}s) {detail}", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
