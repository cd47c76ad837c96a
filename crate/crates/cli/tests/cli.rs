use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tsurf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsurf"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn info_reports_genus_and_cone() {
    let dir = tempfile::tempdir().unwrap();
    let o = tsurf(dir.path(), &["info", "--builtin", "lshape"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("genus 2, 1 singularity: k=2"), "{}", stderr(&o));
    let info: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("info.json")).unwrap()).unwrap();
    assert_eq!(info["genus"], "2");
    assert_eq!(info["cone_k"], "2");
}

#[test]
fn circle_at_half() {
    let dir = tempfile::tempdir().unwrap();
    let o = tsurf(dir.path(), &["circle", "--builtin", "lshape", "--center", "0", "--rmax", "0.5", "--step", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("circle.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "0.5");
    let l: f64 = row[2].parse().unwrap();
    assert!((l - 3.0 * std::f64::consts::PI).abs() < 1e-10);
}

#[test]
fn entropy_is_nondecreasing_in_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let o = tsurf(dir.path(), &["entropy", "--builtin", "lshape", "--cutoffs", "3,5,8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("entropy.json")).unwrap()).unwrap();
    let hs: Vec<f64> = v["per_cutoff"].as_array().unwrap().iter().map(|c| c["h"].as_f64().unwrap()).collect();
    assert_eq!(hs.len(), 3);
    assert!(hs.windows(2).all(|w| w[1] >= w[0]), "{hs:?}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = tsurf(dir.path(), &["circle", "--builtin", "lshape", "--rmax", "3", "--budget", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("at least 3"));
    let o = tsurf(dir.path(), &["info", "--builtin", "slit_tori", "--params", "2,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = tsurf(dir.path(), &["validate", "--builtin", "torus"]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"polygons\": []}").unwrap();
    let o = tsurf(dir.path(), &["validate", "--surface", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn surface_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = tsurf::BuiltinSurface::lshape_default().build().unwrap();
    let path = dir.path().join("l.json");
    fs::write(&path, tsurf::surface::emit_surface(&s)).unwrap();
    let o = tsurf(dir.path(), &["info", "--surface", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("genus 2"));
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let runs: &[&[&str]] = &[
        &["saddles", "--builtin", "lshape", "--max-length", "3"],
        &["circle", "--builtin", "lshape", "--rmax", "3", "--step", "1/4", "--svg"],
        &["entropy", "--builtin", "slit_tori", "--params", "1/2,1/3", "--cutoffs", "2,3"],
        &["measure", "--builtin", "lshape", "--radius", "2.5", "--grid", "2", "--svg"],
        &["volume", "--builtin", "lshape", "--radius", "2", "--cells", "0,5"],
        &["geodesics", "--builtin", "lshape", "--tmax", "3", "--step", "1/2", "--svg"],
        &["weights", "--builtin", "lshape", "--cutoff", "3"],
    ];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for args in runs {
        let mut one = args.to_vec();
        one.extend(["--seed", "9", "--threads", "1"]);
        let mut many = args.to_vec();
        many.extend(["--seed", "9", "--threads", "3"]);
        assert!(tsurf(a.path(), &one).status.success(), "{args:?}");
        assert!(tsurf(b.path(), &many).status.success(), "{args:?}");
    }
    let (x, y) = (artifacts(a.path()), artifacts(b.path()));
    assert_eq!(x.len(), 12);
    assert_eq!(x, y);
}

#[test]
fn writes_only_inside_out() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("nested/out");
    let o = Command::new(env!("CARGO_BIN_EXE_tsurf"))
        .current_dir(root.path())
        .args(["measure", "--builtin", "lshape", "--radius", "1", "--svg", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success());
    let top: Vec<_> = fs::read_dir(root.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(top, vec!["nested"]);
    assert_eq!(artifacts(&out).len(), 2);
}
