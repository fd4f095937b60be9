use std::process::Command;

use fracsum::cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("fracsum").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn temp_path(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("fracsum-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn eval_at_one() {
    let (code, out, _) = call(&["eval", "--a", "1", "--b", "2", "--x", "1", "--eps", "1e-20"]);
    assert_eq!(code, 0);
    assert!(out.contains("W block  = 1.0000000000"), "{out}");
    assert!(out.contains("agreement: OK"));
}

#[test]
fn eval_below_a_is_x() {
    let (code, out, _) = call(&["eval", "--a", "1", "--b", "2", "--x", "0.5", "--method", "direct"]);
    assert_eq!(code, 0);
    assert!(out.contains("W direct = 0.5000000000"), "{out}");
    assert!(!out.contains("block"));
}

#[test]
fn eval_rejects_reversed_endpoints() {
    let (code, _, err) = call(&["eval", "--a", "2", "--b", "1", "--x", "10"]);
    assert_eq!(code, 2);
    assert!(err.contains("requires a < b"), "{err}");
}

#[test]
fn exit_codes() {
    assert_eq!(call(&["eval", "--a", "1/0", "--b", "2", "--x", "1"]).0, 1);
    assert_eq!(call(&["eval", "--a", "1", "--b", "2"]).0, 1);
    assert_eq!(call(&["frobnicate"]).0, 1);
    assert_eq!(call(&["--help"]).0, 0);
    assert_eq!(call(&["eval", "--a", "1", "--b", "2", "--x=-3"]).0, 2);
    assert_eq!(call(&["eval", "--a", "0", "--b", "2", "--x", "3"]).0, 2);
    assert_eq!(call(&["check", "--a", "1", "--b", "2", "--x", "100", "--suites", "nope"]).0, 1);
}

#[test]
fn binary_exit_code() {
    let out = Command::new(env!("CARGO_BIN_EXE_fracsum"))
        .args(["eval", "--a", "3", "--b", "1", "--x", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("requires a < b"));
    let ok = Command::new(env!("CARGO_BIN_EXE_fracsum"))
        .args(["eval", "--a", "1", "--b", "3", "--x", "50"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn scan_matches_golden_file() {
    let (code, out, _) = call(&[
        "scan", "--a", "1", "--b", "5/2", "--x-start", "1e4", "--x-stop", "1e6", "--grid", "5", "--eps", "1e-15",
    ]);
    assert_eq!(code, 0);
    let golden = include_str!("data/scan_1_5half.csv");
    assert_eq!(out.lines().next(), golden.lines().next());
    assert_eq!(
        golden.lines().next().unwrap(),
        "x_num,x_den,a,b,c,J,W_value,W_err,main_value,main_err,RJ_value,RJ_err,residual_A,residual_B,hypothesis_A_ok,hypothesis_B_ok"
    );
    assert_eq!(out, golden);
}

#[test]
fn scan_is_deterministic_across_threads() {
    let base = ["scan", "--a", "1/3", "--b", "7/5", "--x-start", "100", "--x-stop", "1e5", "--grid", "9"];
    let one = call(&[&base[..], &["--threads", "1"]].concat());
    let four = call(&[&base[..], &["--threads", "4"]].concat());
    assert_eq!(one.0, 0);
    assert_eq!(one.1, four.1);
    let xs: Vec<f64> = one
        .1
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',');
            let n: f64 = f.next().unwrap().parse().unwrap();
            let d: f64 = f.next().unwrap().parse().unwrap();
            n / d
        })
        .collect();
    assert_eq!(xs.len(), 9);
    assert!(xs.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn integer_gap_scan_has_zero_remainder() {
    let (code, out, _) = call(&["scan", "--a", "1", "--b", "3", "--x-start", "10", "--x-stop", "1e5", "--grid", "6"]);
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    let h = rdr.headers().unwrap().clone();
    let rj = h.iter().position(|c| c == "RJ_value").unwrap();
    let (ra, rb) = (h.iter().position(|c| c == "residual_A").unwrap(), h.iter().position(|c| c == "residual_B").unwrap());
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert!(rec[rj].trim_start_matches('-').chars().all(|c| c == '0' || c == '.'), "{}", &rec[rj]);
        assert_eq!(rec[ra], rec[rb]);
    }
}

#[test]
fn two_point_grid_and_json() {
    let (code, out, _) = call(&[
        "scan", "--a", "1/2", "--b", "1", "--x-start", "5/3", "--x-stop", "20", "--grid", "2", "--format", "json",
    ]);
    assert_eq!(code, 0);
    let rows: serde_json::Value = serde_json::from_str(&out).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["x_num"], "5");
    assert_eq!(rows[0]["x_den"], "3");
    assert_eq!(rows[1]["x_num"], "20");
}

#[test]
fn scan_rejects_bad_config() {
    let base = ["scan", "--a", "1", "--b", "2"];
    assert_eq!(call(&[&base[..], &["--x-start", "10", "--x-stop", "5"]].concat()).0, 2);
    assert_eq!(call(&[&base[..], &["--x-start", "1", "--x-stop", "5", "--grid", "1"]].concat()).0, 2);
    assert_eq!(call(&[&base[..], &["--x-start", "1", "--x-stop", "5", "--eps", "0"]].concat()).0, 2);
}

#[test]
fn scan_writes_file() {
    let path = temp_path("scan.csv");
    let (code, out, _) = call(&[
        "scan", "--a", "1", "--b", "2", "--x-start", "10", "--x-stop", "1000", "--grid", "3", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("wrote 3 rows"));
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 4);
}

#[test]
fn fit_recovers_synthetic_slope() {
    let path = temp_path("synthetic.csv");
    let mut text = String::from(
        "x_num,x_den,a,b,c,J,W_value,W_err,main_value,main_err,RJ_value,RJ_err,residual_A,residual_B,hypothesis_A_ok,hypothesis_B_ok\n",
    );
    for e in 2..=9 {
        let x = 10f64.powi(e);
        let r = 3.0 * x.powf(0.375);
        text.push_str(&format!("{x},1,1,2,1,1,0,0,0,0,0,0,{r},{},false,false\n", -r));
    }
    std::fs::write(&path, text).unwrap();
    let (code, out, _) = call(&["fit", "--input", path.to_str().unwrap(), "--which", "B"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("slope 0.375000"), "{out}");
    assert!(out.contains("8 of 8 points"));
}

#[test]
fn fit_reports_missing_column() {
    let path = temp_path("broken.csv");
    std::fs::write(&path, "x_num,x_den,residual_A\n1,1,1\n").unwrap();
    let (code, _, err) = call(&["fit", "--input", path.to_str().unwrap(), "--which", "A"]);
    assert_ne!(code, 0);
    assert!(err.contains("missing column W_err"), "{err}");
}

#[test]
fn fit_on_golden_file() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/scan_1_5half.csv");
    let (code, out, _) = call(&["fit", "--input", path, "--which", "a"]);
    assert_eq!(code, 0);
    assert!(out.contains("5 of 5 points"), "{out}");
}

#[test]
fn fit_rejects_all_zero_residuals() {
    let path = temp_path("zero.csv");
    let mut text = String::from(
        "x_num,x_den,a,b,c,J,W_value,W_err,main_value,main_err,RJ_value,RJ_err,residual_A,residual_B,hypothesis_A_ok,hypothesis_B_ok\n",
    );
    for x in [10, 100, 1000, 10_000, 100_000, 1_000_000] {
        text.push_str(&format!("{x},1,1,2,1,1,0,0,0,0,0,0,0.000,0,false,false\n"));
    }
    std::fs::write(&path, text).unwrap();
    let (code, _, err) = call(&["fit", "--input", path.to_str().unwrap(), "--which", "A"]);
    assert_eq!(code, 2, "{err}");
    assert!(!err.is_empty());
}

#[test]
fn check_passes_and_names_suites() {
    let (code, out, _) = call(&["check", "--a", "1", "--b", "2", "--x", "1e4"]);
    assert_eq!(code, 0, "{out}");
    for name in ["partition", "nj-sandwich", "kj-bounds", "tail-bound", "identity", "rj-magnitude"] {
        assert!(out.lines().any(|l| l.starts_with("PASS") && l.contains(name)), "{name}: {out}");
    }
}

#[test]
fn check_degenerate_instance() {
    let (code, out, _) = call(&["check", "--a", "1", "--b", "2", "--x", "1/2"]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn check_detects_corrupted_kj() {
    let (code, out, _) =
        call(&["check", "--a", "1", "--b", "2", "--x", "1000", "--suites", "kj-bounds,nj-sandwich", "--corrupt-kj"]);
    assert_eq!(code, 3);
    assert!(out.contains("FAIL kj-bounds"), "{out}");
}

#[test]
fn bench_small_and_large() {
    let (code, out, _) = call(&["bench", "--a", "1", "--b", "2", "--x", "10,1e6"]);
    assert_eq!(code, 0, "{out}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].trim_end().ends_with("yes"));
    assert!(lines[2].trim_end().ends_with("yes"));
    let (code, out, _) = call(&["bench", "--a", "1", "--b", "2", "--x", "1e9"]);
    assert_eq!(code, 0);
    assert!(out.contains("skipped"));
}

#[test]
fn periodic_from_values_and_file() {
    let (code, out, _) = call(&["periodic", "--values", "1,0,-1,0", "--x", "100,1000"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.matches("agreement: OK").count(), 2);
    let path = temp_path("chi3.txt");
    std::fs::write(&path, "3\n1 -1 0\n").unwrap();
    let (code, out, _) = call(&["periodic", "--file", path.to_str().unwrap(), "--x", "1e5", "--bound"]);
    assert_eq!(code, 0);
    assert!(out.contains("excluded"), "{out}");
    assert_eq!(call(&["periodic", "--values", "1,1", "--x", "10"]).0, 2);
    assert_eq!(call(&["periodic", "--x", "10"]).0, 1);
}
