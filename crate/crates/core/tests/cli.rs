use std::path::Path;
use std::process::Command;

fn hul(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hul")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn first_csv(dir: &Path) -> String {
    let mut csvs: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    csvs.sort();
    csvs[0].to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(hul(&[]).0, 1);
    assert_eq!(hul(&["frobnicate"]).0, 1);
    assert_eq!(hul(&["generate", "--side", "abc"]).0, 1);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, err) = hul(&["generate", "--model", "poisson", "--intensity", "-1", "--out", out]);
    assert_eq!(code, 1, "{err}");
    assert_eq!(hul(&["--help"]).0, 0);
}

#[test]
fn runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let (code, _) = hul(&[
        "analyze",
        "--input",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn generate_transform_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let gen_dir = dir.path().join("gen");
    let g = gen_dir.to_str().unwrap();
    let (code, err) = hul(&[
        "generate", "--model", "poisson", "--side", "12", "--seed", "3", "--out", g,
    ]);
    assert_eq!(code, 0, "{err}");
    let input = first_csv(&gen_dir);

    let tr_dir = dir.path().join("tr");
    let t = tr_dir.to_str().unwrap();
    let (code, err) = hul(&[
        "transform",
        "--input",
        &input,
        "--transport",
        "lloyd",
        "--resolution",
        "48",
        "--out",
        t,
    ]);
    assert_eq!(code, 0, "{err}");
    let moved = first_csv(&tr_dir);

    let an = dir.path().join("an");
    let (code, err) = hul(&[
        "analyze",
        "--input",
        &input,
        &moved,
        "--max-index",
        "4",
        "--radii",
        "1,2",
        "--n-windows",
        "50",
        "--out",
        an.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(std::fs::read_dir(&an).unwrap().count() > 0);
}
