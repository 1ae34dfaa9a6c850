use std::process::Command;

use scale_cli::map::{class_color, render_map, PALETTE};

fn scale() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scale"))
}

const THREE_CAPS: &str = "dataset = synthetic\nsynthetic-k = 3\nsynthetic-points = 100\ntheta = 0.1\neta-start = 0.2\nseed = 1\n";

#[test]
fn run_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(&cfg, format!("{THREE_CAPS}out-dir = out\n")).unwrap();
    let out = scale().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("accuracy: 1.000000"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("map skipped"));
    // out-dir is relative to the config file
    let report = std::fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert_eq!(report, stdout);
    let log = std::fs::read_to_string(dir.path().join("out/queries.csv")).unwrap();
    assert_eq!(log.lines().next(), Some("order,index,label"));
    assert_eq!(log.lines().count(), 4);
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(&cfg, THREE_CAPS).unwrap();
    let out = scale()
        .args(["run", "--n", "24", "--set", "synthetic-points=50", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("n_used: 24"));
    assert!(stdout.contains("sample_count: 150"));
    assert!(stdout.contains("  n = 24\n"));
}

#[test]
fn config_errors_exit_2() {
    for args in [
        vec!["run", "--n", "1"],
        vec!["run", "--theta", "abc"],
        vec!["run", "--set", "nonsense=1"],
        vec!["run", "--dataset", "salinas"],
    ] {
        let out = scale().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("[config]"));
    }
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = scale()
        .args(["run", "--dataset", "custom", "--features"])
        .arg(&missing)
        .arg("--labels")
        .arg(&missing)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[data]"));
    assert!(err.contains("dataset = custom"), "config echo missing: {err}");

    // the centre row is zero after centering and cannot be placed on the sphere
    let f = dir.path().join("f.csv");
    let l = dir.path().join("l.csv");
    std::fs::write(&f, "1,0\n-1,0\n0,0\n0,1\n0,-1\n").unwrap();
    std::fs::write(&l, "1\n1\n1\n2\n2\n").unwrap();
    let out = scale()
        .args(["run", "--dataset", "custom", "--pca-dim", "2", "--set", "projection=normalize", "--features"])
        .arg(&f)
        .arg("--labels")
        .arg(&l)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[preprocess]"));
}

#[test]
fn custom_grid_dataset_writes_a_map() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    let l = dir.path().join("l.csv");
    // 2x3 grid, two tight clusters and one background pixel
    std::fs::write(&f, "1,0.01,0\n1,0,0.02\n0,0,1\n0.01,1,0\n0,1,0.01\n0.02,1,0.01\n").unwrap();
    std::fs::write(&l, "1\n1\n0\n2\n2\n2\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = scale()
        .args(["run", "--dataset", "custom", "--pca-dim", "3", "--n", "8", "--theta", "0.01", "--eta-start", "0.3", "--set", "grid=2x3", "--features"])
        .arg(&f)
        .arg("--labels")
        .arg(&l)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let map = std::fs::read(out_dir.join("map.ppm")).unwrap();
    let header = b"P6\n3 2\n255\n";
    assert_eq!(&map[..header.len()], header);
    let px: Vec<[u8; 3]> = map[header.len()..].chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    assert_eq!(px, vec![PALETTE[0], PALETTE[0], [0, 0, 0], PALETTE[1], PALETTE[1], PALETTE[1]]);
}

#[test]
fn harness_and_localization_subcommands() {
    let out = scale().args(["harness", "--points", "300", "--n", "16"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("components: 3 (expected 3)"));
    let out = scale().args(["localization", "--doublings", "2"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}

fn pixels(ppm: &[u8], header: &str) -> Vec<[u8; 3]> {
    assert_eq!(&ppm[..header.len()], header.as_bytes());
    ppm[header.len()..].chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
}

#[test]
fn map_all_background_is_black() {
    let ppm = render_map(&[], (4, 5), &[]).unwrap();
    let px = pixels(&ppm, "P6\n5 4\n255\n");
    assert_eq!(px.len(), 20);
    assert!(px.iter().all(|p| *p == [0, 0, 0]));
}

#[test]
fn map_single_class_is_one_color() {
    let ppm = render_map(&[7; 12], (3, 4), &(0..12).collect::<Vec<_>>()).unwrap();
    let px = pixels(&ppm, "P6\n4 3\n255\n");
    assert!(px.iter().all(|p| *p == class_color(7)));
}

#[test]
fn map_checkerboard() {
    let (h, w) = (6, 7);
    let labels: Vec<u32> = (0..h * w).map(|i| 1 + ((i / w + i % w) % 2) as u32).collect();
    let ppm = render_map(&labels, (h, w), &(0..h * w).collect::<Vec<_>>()).unwrap();
    let px = pixels(&ppm, "P6\n7 6\n255\n");
    for (i, p) in px.iter().enumerate() {
        let expect = if (i / w + i % w) % 2 == 0 { PALETTE[0] } else { PALETTE[1] };
        assert_eq!(*p, expect);
    }
    assert_eq!(ppm.len(), "P6\n7 6\n255\n".len() + 3 * h * w);
}
