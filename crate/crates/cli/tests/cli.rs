use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_monopush"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("monopush-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Rows of a CSV with a header, split on commas.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn density_of_product_with_linear_weight() {
    let o = run(&["density", "--A", "1,1", "--B", "0,1", "--grid", "0:0.9:10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("q,density,path\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 10);
    for row in &r {
        let q: f64 = row[0].parse().unwrap();
        let rho: f64 = row[1].parse().unwrap();
        assert!((rho - (1.0 - q)).abs() < 1e-14, "q={q} rho={rho}");
    }
    assert_eq!(r[0][2], "limit");
}

#[test]
fn density_divergent_at_zero() {
    let o = run(&["density", "--A", "1,1", "--B", "0,0", "--q", "0"]);
    assert!(o.status.success());
    assert_eq!(rows(&stdout(&o))[0][1], "inf");
    let o = run(&["density", "--A", "1,1", "--B", "0,0", "--q", "0.5"]);
    let rho: f64 = rows(&stdout(&o))[0][1].parse().unwrap();
    assert!((rho - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn density_domain_errors_exit_two() {
    for args in [
        &["density", "--A", "1", "--B", "0", "--q", "1"][..],
        &["density", "--A", "1", "--B", "0", "--q", "-0.1"][..],
        &["density", "--A", "1", "--B", "0", "--q", "-1", "--signed"][..],
        &["density", "--A", "1", "--B", "0"][..],
        &["density", "--A", "1", "--B", "0,0", "--q", "0.5"][..],
        &["density", "--A", "0,0", "--B", "0,0", "--q", "0.5"][..],
        &["density", "--A", "1", "--B", "-1", "--q", "0.5"][..],
        &["density", "--A", "1", "--B", "0", "--grid", "0:1"][..],
        &[
            "density", "--A", "1.5", "--B", "0", "--q", "0.5", "--signed",
        ][..],
        &["density", "--A", "1", "--B", "0", "--q", "0.5", "--plot"][..],
        &["density", "--A", "x", "--B", "0", "--q", "0.5"][..],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn signed_density_symmetry() {
    let odd = run(&[
        "density",
        "--A",
        "1,2",
        "--B",
        "0,0",
        "--signed",
        "--grid",
        "-0.5:0.5:3",
    ]);
    let r = rows(&stdout(&odd));
    assert_eq!(r[0][1], r[2][1]);
    assert_eq!(r[1][1], "inf");
    let even = run(&[
        "density",
        "--A",
        "2,2",
        "--B",
        "0,0",
        "--signed",
        "--grid",
        "-0.5:0.5:3",
    ]);
    let r = rows(&stdout(&even));
    assert_eq!(r[0][1], "0");
    assert_eq!(r[0][2], "outside");
    let unit = run(&["density", "--A", "2,2", "--B", "0,0", "--q", "0.5"]);
    let u: f64 = rows(&stdout(&unit))[0][1].parse().unwrap();
    let s: f64 = r[2][1].parse().unwrap();
    assert!((s - 4.0 * u).abs() < 1e-14 * s);
}

#[test]
fn classify_reports_cases() {
    let o = run(&["classify", "--A", "1,2", "--B", "0,3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["frs_case"], "Case2");
    assert_eq!(v["distinguished_axis"], 0);
    assert_eq!(v["continuous"], true);
    assert!((v["limit_at_zero"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert!(v.get("warning").is_none());

    let o = run(&["classify", "--A", "2,2", "--B", "0,0"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["frs_case"], "Outside");
    assert_eq!(v["limit_at_zero"], "inf");
    assert_eq!(v["parity"], "AllEven");
    assert!(v["warning"].is_string());

    let o = run(&["classify", "--A", "1,1", "--B", "1,1", "--format", "csv"]);
    let r = rows(&stdout(&o));
    assert_eq!(r[0][0], "Case1");

    let o = run(&["classify", "--A", "0,0", "--B", "1,1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("degenerate"));
}

#[test]
fn volume_endpoints_and_values() {
    let o = run(&["volume", "--A", "1,1", "--B", "0,0", "--grid", "0:1:5"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r[0][1], "1");
    assert_eq!(r[4][1], "0");
    let v: f64 = r[2][1].parse().unwrap();
    assert!((v - (1.0 - 0.5 + 0.5 * 0.5f64.ln())).abs() < 1e-15);
    let o = run(&["volume", "--A", "1", "--B", "0", "--q", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_output_round_trips_through_file() {
    let path = scratch("profile.json");
    let o = run(&[
        "density",
        "--A",
        "1,2",
        "--B",
        "1,0",
        "--grid",
        "0.1:0.9:9",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["grid"].as_array().unwrap().len(), 9);
    assert_eq!(v["values"].as_array().unwrap().len(), 9);
}

#[test]
fn plot_script_is_written_next_to_csv() {
    let csv = scratch("hat.csv");
    let o = run(&[
        "assemble",
        "--atoms",
        &fixture("stepped_hat.json"),
        "--grid",
        "-0.9:0.9:7",
        "--out",
        csv.to_str().unwrap(),
        "--plot",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let script = std::fs::read_to_string(csv.with_extension("py")).unwrap();
    assert!(script.contains("\"hat.csv\""));
    assert!(script.contains("matplotlib"));
}

#[test]
fn assemble_stepped_hat() {
    let o = run(&[
        "assemble",
        "--atoms",
        &fixture("stepped_hat.json"),
        "--grid",
        "-0.75:0.75:4",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let vals: Vec<f64> = rows(&stdout(&o))
        .iter()
        .map(|r| r[1].parse().unwrap())
        .collect();
    let expect = [1.0, 2.0, 2.0, 1.0];
    for (v, e) in vals.iter().zip(expect) {
        assert!((v - e).abs() < 1e-14, "{vals:?}");
    }
}

#[test]
fn assemble_product_hat() {
    // 2·1[0,1]^2 - 1[.5,1]x[0,1] - 1[0,1]x[.5,1] pushed forward by x*y.
    let o = run(&[
        "assemble",
        "--atoms",
        &fixture("product_hat.json"),
        "--grid",
        "0.1:0.9:9",
    ]);
    assert!(o.status.success());
    for r in rows(&stdout(&o)) {
        let q: f64 = r[0].parse().unwrap();
        let v: f64 = r[1].parse().unwrap();
        let expect = if q < 0.5 { -2.0 * (2.0 * q).ln() } else { 0.0 };
        assert!((v - expect).abs() < 1e-13, "q={q}: {v} vs {expect}");
    }
}

#[test]
fn assemble_rejects_bad_inputs() {
    let o = run(&[
        "assemble",
        "--atoms",
        &fixture("mixed_a.json"),
        "--q",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("map exponent"));

    let o = run(&[
        "assemble",
        "--atoms",
        &fixture("malformed.json"),
        "--q",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = run(&[
        "assemble",
        "--atoms",
        &fixture("inverted_box.json"),
        "--q",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));

    let o = run(&[
        "assemble",
        "--atoms",
        &fixture("missing.json"),
        "--q",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_mc_passes_for_closed_forms() {
    for (a, b, extra) in [
        ("2,2", "2,2", None),
        ("1", "0", None),
        ("1,3", "0,4", Some("--signed")),
    ] {
        let mut args = vec![
            "compare",
            "--A",
            a,
            "--B",
            b,
            "--samples",
            "400000",
            "--seed",
            "11",
            "--bins",
            "32",
        ];
        args.extend(extra);
        let o = run(&args);
        assert!(o.status.success(), "{a}/{b}: {}", stderr(&o));
        assert!(stderr(&o).contains("PASS"));
        assert!(stdout(&o).starts_with("q_lo,q_hi,expected,estimate,stderr,z"));
    }
}

#[test]
fn compare_mc_is_deterministic() {
    let args = [
        "compare",
        "--A",
        "1,2",
        "--B",
        "1,0",
        "--samples",
        "100000",
        "--seed",
        "5",
        "--bins",
        "16",
        "--log-bins",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn compare_mc_against_profile_files() {
    let good = scratch("linear.csv");
    // A=1, B=1: density q on (0,1), two symmetric points per bin.
    let o = run(&[
        "density",
        "--A",
        "1",
        "--B",
        "1",
        "--grid",
        "0.0125:0.9875:40",
        "--out",
        good.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let hist = scratch("hist.csv");
    let base = [
        "compare",
        "--A",
        "1",
        "--B",
        "1",
        "--samples",
        "400000",
        "--seed",
        "3",
        "--bins",
        "20",
    ];
    let mut args = base.to_vec();
    args.extend([
        "--profile",
        good.to_str().unwrap(),
        "--histogram",
        hist.to_str().unwrap(),
    ]);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(&hist)
        .unwrap()
        .starts_with("q_lo,q_hi,density,stderr\n"));

    let mut args = base.to_vec();
    let corrupted = fixture("corrupted_profile.csv");
    args.extend(["--profile", corrupted.as_str()]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("FAIL"));
}

#[test]
fn compare_mc_requires_sampling_options() {
    let o = run(&["compare", "--A", "1", "--B", "0", "--samples", "1000"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "compare",
        "--A",
        "1",
        "--B",
        "0",
        "--samples",
        "10",
        "--seed",
        "1",
        "--bins",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_quadrature_mode() {
    let o = run(&[
        "compare",
        "--A",
        "1,2",
        "--B",
        "0,1",
        "--oracle",
        "quadrature",
        "--grid",
        "0.1:0.9:5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 5);
    assert!(r.iter().all(|row| row[4] == "true"));
    let o = run(&[
        "compare",
        "--A",
        "1,1,1,1",
        "--B",
        "0,0,0,0",
        "--oracle",
        "quadrature",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dimension"));
}

#[test]
fn assemble_hat_gives_triangle() {
    // (1 - |x|) on [-1, 1] as 1·|x|^0 - 1·|x|^1 under the identity map.
    let o = run(&[
        "assemble",
        "--atoms",
        &fixture("hat.json"),
        "--grid",
        "-0.9:0.9:7",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for r in rows(&stdout(&o)) {
        let q: f64 = r[0].parse().unwrap();
        let v: f64 = r[1].parse().unwrap();
        assert!((v - (1.0 - q.abs())).abs() < 1e-14, "q={q}: {v}");
    }
}

#[test]
fn assemble_single_unit_atom_matches_density() {
    let grid = "0.05:0.95:19";
    let a = run(&[
        "assemble",
        "--atoms",
        &fixture("unit_cube.json"),
        "--grid",
        grid,
    ]);
    let d = run(&["density", "--A", "1,2,3", "--B", "0,2,1", "--grid", grid]);
    assert!(a.status.success() && d.status.success());
    assert_eq!(a.stdout, d.stdout);
}

#[test]
fn profiles_round_trip_and_are_deterministic() {
    let path = scratch("roundtrip.csv");
    let args = [
        "density",
        "--A",
        "1,2,2",
        "--B",
        "0,1,3",
        "--grid",
        "1e-4:0.99:40:log",
        "--out",
        path.to_str().unwrap(),
    ];
    assert!(run(&args).status.success());
    let first = std::fs::read(&path).unwrap();
    assert!(run(&args).status.success());
    assert_eq!(first, std::fs::read(&path).unwrap());

    let text = String::from_utf8(first).unwrap();
    let profile = monopush::DensityProfile::from_csv(&text).unwrap();
    assert_eq!(profile.to_csv(), text);
    let spec = monopush::Spectrum::from_exponents(
        &monopush::ExponentData::new(vec![1.0, 2.0, 2.0], vec![0.0, 1.0, 3.0]).unwrap(),
    )
    .unwrap();
    for (q, v) in profile.grid.iter().zip(&profile.values) {
        assert_eq!(spec.density(*q).unwrap().value.to_bits(), v.to_bits());
    }
}

#[test]
fn compare_reference_invocations() {
    let o = run(&[
        "compare",
        "--A",
        "2,2",
        "--B",
        "2,2",
        "--samples",
        "10000000",
        "--seed",
        "42",
        "--bins",
        "64",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&[
        "compare",
        "--A",
        "1",
        "--B",
        "0",
        "--samples",
        "10000",
        "--seed",
        "7",
        "--bins",
        "16",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}
