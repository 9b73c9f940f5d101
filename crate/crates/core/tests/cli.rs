use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rsf::interchange::{read_directions, read_jacobian, write_jacobian, write_mask, DirectionsFile};
use rsf::matrixkit::DenseMatrix;
use rsf::regions::RegionMask;
use tempfile::TempDir;

fn rsf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsf"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = rsf(dir, args);
    assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

/// Blob pipeline inputs: generator config, Jacobian, blob-0 mask.
fn blob_fixture(dir: &Path) {
    ok(
        dir,
        &[
            "gen-toy", "--kind", "radial-blobs", "-k", "12", "--shape", "64x64", "--seed", "7", "--out", "j.rsfj",
            "--spec-out", "g.toml",
        ],
    );
    ok(dir, &["mask", "--generator", "g.toml", "--blob", "0", "--out", "m.rsfm"]);
}

/// `A = diag(4, 1)` from the first two rows, `B = diag(1, 4)` from the last two.
fn diagonal_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let j = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
    let (jp, mp) = (dir.join("diag.rsfj"), dir.join("diag.rsfm"));
    write_jacobian(&j, &jp).unwrap();
    write_mask(&RegionMask::new(vec![true, true, false, false]).unwrap(), &mp).unwrap();
    (jp, mp)
}

#[test]
fn gen_toy_shape_and_determinism() {
    let t = TempDir::new().unwrap();
    let out = ok(t.path(), &["gen-toy", "--kind", "linear", "-k", "4", "--shape", "32x32x1", "--seed", "1", "--out", "a.rsfj"]);
    assert_eq!(out.trim(), "1024 4");
    let j = read_jacobian(t.path().join("a.rsfj")).unwrap();
    assert_eq!((j.pixels(), j.latent_dim()), (1024, 4));
    ok(t.path(), &["gen-toy", "--kind", "linear", "-k", "4", "--shape", "32x32x1", "--seed", "1", "--out", "b.rsfj"]);
    assert_eq!(fs::read(t.path().join("a.rsfj")).unwrap(), fs::read(t.path().join("b.rsfj")).unwrap());
    assert_eq!(fs::read(t.path().join("a.pgm")).unwrap(), fs::read(t.path().join("b.pgm")).unwrap());

    ok(t.path(), &["gen-toy", "--kind", "mlp", "-k", "3", "--shape", "4x4x3", "--out", "c.rsfj", "--dtype", "f32"]);
    assert!(fs::read_to_string(t.path().join("c.ppm")).unwrap().starts_with("P3\n4 4\n"));
}

#[test]
fn gen_toy_usage_errors() {
    let t = TempDir::new().unwrap();
    for args in [
        vec!["gen-toy", "--kind", "linear", "-k", "0", "--shape", "4x4", "--out", "x.rsfj"],
        vec!["gen-toy", "--kind", "spiral", "-k", "2", "--shape", "4x4", "--out", "x.rsfj"],
        vec!["gen-toy", "--kind", "linear", "-k", "2", "--shape", "4by4", "--out", "x.rsfj"],
        vec!["gen-toy", "--kind", "radial-blobs", "-k", "4", "--shape", "32x32", "--out", "x.rsfj"],
        vec!["gen-toy", "--kind", "linear", "-k", "2", "--shape", "4x4"],
    ] {
        let o = rsf(t.path(), &args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(o.stdout.is_empty());
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn diagonal_fixture_prints_known_eigenvalues() {
    let t = TempDir::new().unwrap();
    let (j, m) = diagonal_fixture(t.path());
    let (j, m) = (j.to_str().unwrap(), m.to_str().unwrap());
    let values = |method: &str, out: &str| -> Vec<f64> {
        ok(t.path(), &["factorize", j, "--mask", m, "--method", method, "--top", "2", "--out", out])
            .lines()
            .map(|l| l.parse().unwrap())
            .collect()
    };
    let fast = values("fast", "f.toml");
    let standard = values("standard", "s.toml");
    assert!((fast[0] - 4.0 / 1.005).abs() < 1e-12);
    assert!((fast[1] - 1.0 / 4.005).abs() < 1e-12);
    for (a, b) in fast.iter().zip(&standard) {
        assert!((a - b).abs() <= 1e-8 * b.abs());
    }
    assert_eq!(format!("{:.5}", fast[0]), "3.98010");
    ok(t.path(), &["verify", j, "--mask", m, "--directions", "f.toml"]);
}

#[test]
fn factorize_region_errors() {
    let t = TempDir::new().unwrap();
    let (j, _) = diagonal_fixture(t.path());
    let j = j.to_str().unwrap();
    // neither --mask nor --box
    assert_eq!(code(&rsf(t.path(), &["factorize", j, "--out", "d.toml"])), 2);
    // --box without --shape
    assert_eq!(code(&rsf(t.path(), &["factorize", j, "--box", "0,0,1,1", "--out", "d.toml"])), 2);
    // shape disagrees with P
    assert_eq!(code(&rsf(t.path(), &["factorize", j, "--box", "0,0,1,1", "--shape", "3x3", "--out", "d.toml"])), 3);
    // box covering everything leaves no background
    assert_eq!(code(&rsf(t.path(), &["factorize", j, "--box", "0,0,2,2", "--shape", "2x2", "--out", "d.toml"])), 3);
    // box foreground of the first two pixels, as in the mask fixture
    ok(t.path(), &["factorize", j, "--box", "0,0,1,2", "--shape", "2x2", "--out", "d.toml"]);
    // bad flag values
    for flags in [["--tau", "0"], ["--top", "0"], ["--method", "slow"], ["--rank-tolerance", "-1"], ["--jobs", "0"]] {
        let mut args = vec!["factorize", j, "--box", "0,0,1,2", "--shape", "2x2", "--out", "d.toml"];
        args.extend(flags);
        assert_eq!(code(&rsf(t.path(), &args)), 2, "{flags:?}");
    }
    // missing file
    assert_eq!(code(&rsf(t.path(), &["factorize", "nope.rsfj", "--box", "0,0,1,2", "--shape", "2x2", "--out", "d.toml"])), 2);
}

#[test]
fn degenerate_mask_and_zero_background_exit_codes() {
    let t = TempDir::new().unwrap();
    let j = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.5, 1.0], vec![0.0, 0.0]]).unwrap();
    write_jacobian(&j, t.path().join("z.rsfj")).unwrap();
    write_mask(&RegionMask::new(vec![true, true, false]).unwrap(), t.path().join("z.rsfm")).unwrap();
    for method in ["fast", "standard"] {
        let o = rsf(t.path(), &["factorize", "z.rsfj", "--mask", "z.rsfm", "--method", method, "--out", "d.toml"]);
        assert_eq!(code(&o), 4, "{method}");
        assert!(o.stdout.is_empty());
    }
    // all-zero mask bytes are rejected on load
    let mut bytes = fs::read(t.path().join("z.rsfm")).unwrap();
    bytes[16] = 0;
    bytes[17] = 0;
    fs::write(t.path().join("empty.rsfm"), bytes).unwrap();
    assert_eq!(code(&rsf(t.path(), &["factorize", "z.rsfj", "--mask", "empty.rsfm", "--out", "d.toml"])), 3);
    // mask length differs from P
    write_mask(&RegionMask::new(vec![true, false]).unwrap(), t.path().join("short.rsfm")).unwrap();
    assert_eq!(code(&rsf(t.path(), &["factorize", "z.rsfj", "--mask", "short.rsfm", "--out", "d.toml"])), 3);
    // mask byte 2
    let mut bytes = fs::read(t.path().join("z.rsfm")).unwrap();
    bytes[18] = 2;
    fs::write(t.path().join("two.rsfm"), bytes).unwrap();
    assert_eq!(code(&rsf(t.path(), &["factorize", "z.rsfj", "--mask", "two.rsfm", "--out", "d.toml"])), 2);
}

#[test]
fn verify_detects_corruption_and_mismatch() {
    let t = TempDir::new().unwrap();
    blob_fixture(t.path());
    ok(t.path(), &["factorize", "j.rsfj", "--mask", "m.rsfm", "--out", "d.toml"]);
    let report = ok(t.path(), &["verify", "j.rsfj", "--mask", "m.rsfm", "--directions", "d.toml"]);
    assert_eq!(report.lines().count(), 7);
    assert!(report.lines().all(|l| l.ends_with(" ok")));

    // swap two coordinates of direction 2: still unit-norm, no longer stationary
    let mut file = read_directions(t.path().join("d.toml")).unwrap();
    let v = &mut file.directions[1].vector;
    let big = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
    v.swap(big, (big + 5) % 12);
    fs::write(t.path().join("bad.toml"), file.encode()).unwrap();
    let o = rsf(t.path(), &["verify", "j.rsfj", "--mask", "m.rsfm", "--directions", "bad.toml"]);
    assert_eq!(code(&o), 5);
    assert!(stdout(&o).lines().nth(1).unwrap().ends_with(" fail"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("directions 2"));

    // non-unit vector is a file error
    let mut file = read_directions(t.path().join("d.toml")).unwrap();
    file.directions[0].vector[0] += 0.1;
    fs::write(t.path().join("nonunit.toml"), file.encode()).unwrap();
    assert_eq!(code(&rsf(t.path(), &["verify", "j.rsfj", "--mask", "m.rsfm", "--directions", "nonunit.toml"])), 2);

    // directions for another K
    let (dj, dm) = diagonal_fixture(t.path());
    let o = rsf(t.path(), &["verify", dj.to_str().unwrap(), "--mask", dm.to_str().unwrap(), "--directions", "d.toml"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn edit_and_sweep() {
    let t = TempDir::new().unwrap();
    blob_fixture(t.path());
    ok(t.path(), &["factorize", "j.rsfj", "--mask", "m.rsfm", "--out", "d.toml"]);

    ok(t.path(), &["edit", "--generator", "g.toml", "--directions", "d.toml", "--alpha", "0", "--out", "e0.pgm"]);
    assert_eq!(fs::read(t.path().join("e0.pgm")).unwrap(), fs::read(t.path().join("j.pgm")).unwrap());
    ok(t.path(), &["edit", "--generator", "g.toml", "--directions", "d.toml", "--alpha", "-3", "--out", "e1.pgm"]);
    assert_ne!(fs::read(t.path().join("e1.pgm")).unwrap(), fs::read(t.path().join("j.pgm")).unwrap());

    let zeros = ok(t.path(), &["sweep", "--generator", "g.toml", "--directions", "d.toml", "--mask", "m.rsfm", "--alpha-grid", "0"]);
    let mut lines = zeros.lines();
    assert_eq!(lines.next(), Some("direction_id,alpha,mse_in,mse_out"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(*row, format!("{},0e0,0e0,0e0", i + 1));
    }

    let csv = ok(
        t.path(),
        &["sweep", "--generator", "g.toml", "--directions", "d.toml", "--box", "0,0,16,16", "--direction", "1", "--alpha-grid", "-0.3,0,0.3"],
    );
    assert_eq!(csv.lines().count(), 4);

    // default grid: 21 points per direction
    let csv = ok(t.path(), &["sweep", "--generator", "g.toml", "--directions", "d.toml", "--mask", "m.rsfm", "--direction", "1,2"]);
    assert_eq!(csv.lines().count(), 1 + 42);

    // grids without 0 and unknown directions are usage errors
    let args = ["sweep", "--generator", "g.toml", "--directions", "d.toml", "--mask", "m.rsfm", "--alpha-grid", "1,2"];
    assert_eq!(code(&rsf(t.path(), &args)), 2);
    let args = ["sweep", "--generator", "g.toml", "--directions", "d.toml", "--mask", "m.rsfm", "--direction", "9"];
    assert_eq!(code(&rsf(t.path(), &args)), 2);

    // generator with a different K
    let args = ["edit", "--kind", "mlp", "-k", "5", "--shape", "64x64", "--directions", "d.toml", "--alpha", "1", "--out", "x.pgm"];
    assert_eq!(code(&rsf(t.path(), &args)), 3);
    let args = ["sweep", "--kind", "mlp", "-k", "5", "--shape", "64x64", "--directions", "d.toml", "--mask", "m.rsfm"];
    assert_eq!(code(&rsf(t.path(), &args)), 3);
}

#[test]
fn blob_pipeline_is_local() {
    let t = TempDir::new().unwrap();
    blob_fixture(t.path());
    ok(t.path(), &["factorize", "j.rsfj", "--mask", "m.rsfm", "--out", "d.toml"]);
    let csv = ok(
        t.path(),
        &["sweep", "--generator", "g.toml", "--directions", "d.toml", "--mask", "m.rsfm", "--direction", "1", "--alpha-grid", "0,0.3"],
    );
    let row: Vec<f64> = csv.lines().nth(2).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[1], 0.3);
    assert!(row[2] / row[3] >= 10.0, "ratio {}", row[2] / row[3]);
}

#[test]
fn pipeline_is_byte_deterministic_across_jobs() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    for (i, kind) in ["mlp", "radial-blobs", "linear"].iter().enumerate() {
        let out = format!("j{i}.rsfj");
        ok(p, &["gen-toy", "--kind", kind, "-k", "6", "--shape", "24x24", "--seed", "3", "--z", "normal:5", "--out", &out]);
    }
    let run = |tag: &str, jobs: &str| -> (String, Vec<Vec<u8>>) {
        let outs: Vec<String> = (0..3).map(|i| format!("{tag}{i}.toml")).collect();
        let mut args = vec!["factorize", "j0.rsfj", "j1.rsfj", "j2.rsfj", "--box", "4,4,14,14", "--shape", "24x24", "--jobs", jobs, "--out"];
        args.extend(outs.iter().map(String::as_str));
        let printed = ok(p, &args);
        (printed, outs.iter().map(|o| fs::read(p.join(o)).unwrap()).collect())
    };
    let (a_out, a_files) = run("a", "1");
    let (b_out, b_files) = run("b", "3");
    let (c_out, c_files) = run("c", "3");
    assert_eq!(a_out, b_out);
    assert_eq!(b_out, c_out);
    assert_eq!(a_files, b_files);
    assert_eq!(b_files, c_files);
    assert_eq!(a_out.lines().filter(|l| l.starts_with("# ")).count(), 3);

    let gen = ["--kind", "mlp", "-k", "6", "--shape", "24x24", "--seed", "3", "--z", "normal:5"];
    let sweep_csv = |out: &str| {
        let mut args = vec!["sweep"];
        args.extend(gen);
        args.extend(["--directions", "a0.toml", "--box", "4,4,14,14", "--out", out]);
        ok(p, &args);
        fs::read(p.join(out)).unwrap()
    };
    assert_eq!(sweep_csv("s1.csv"), sweep_csv("s2.csv"));

    // one bad input among good ones: the others are still written, exit reflects the failure
    let o = rsf(p, &["factorize", "j0.rsfj", "missing.rsfj", "--box", "4,4,14,14", "--shape", "24x24", "--out", "x0.toml", "x1.toml"]);
    assert_eq!(code(&o), 2);
    assert!(p.join("x0.toml").exists());
    let o = rsf(p, &["factorize", "j0.rsfj", "j1.rsfj", "--box", "4,4,14,14", "--shape", "24x24", "--out", "x0.toml"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn mask_command() {
    let t = TempDir::new().unwrap();
    let out = ok(t.path(), &["mask", "--box", "1,1,3,3", "--shape", "4x4", "--out", "m.rsfm"]);
    assert_eq!(out.trim(), "16 4");
    let bytes = fs::read(t.path().join("m.rsfm")).unwrap();
    assert_eq!(bytes.len(), 32);
    assert_eq!(&bytes[..4], b"RSFM");
    assert_eq!(code(&rsf(t.path(), &["mask", "--box", "0,0,4,4", "--shape", "4x4", "--out", "m.rsfm"])), 3);
    assert_eq!(code(&rsf(t.path(), &["mask", "--box", "0,0,5,4", "--shape", "4x4", "--out", "m.rsfm"])), 2);
    assert_eq!(code(&rsf(t.path(), &["mask", "--box", "0,0,1,1", "--out", "m.rsfm"])), 2);
    let blob_on_mlp = ["mask", "--kind", "mlp", "-k", "3", "--shape", "8x8", "--blob", "0", "--out", "m.rsfm"];
    assert_eq!(code(&rsf(t.path(), &blob_on_mlp)), 2);
}

#[test]
fn directions_file_is_readable_text() {
    let t = TempDir::new().unwrap();
    let (j, m) = diagonal_fixture(t.path());
    ok(t.path(), &["factorize", j.to_str().unwrap(), "--mask", m.to_str().unwrap(), "--top", "2", "--out", "d.toml"]);
    let text = fs::read_to_string(t.path().join("d.toml")).unwrap();
    assert!(text.contains("method = \"fast\""));
    assert!(text.contains("tau = 1.0000000000000000e-3"));
    assert!(text.contains("a = 5.0000000000000001e-3"));
    let file = DirectionsFile::decode(&text).unwrap();
    assert_eq!(file.directions[0].vector, vec![1.0, 0.0]);
    assert_eq!(file.directions[1].vector, vec![0.0, 1.0]);
}
