use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use logconcave::{fit_mle, prepare_sample, LogConcaveFit, Rng, SolverConfig};
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logconcave"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter_map(|l| {
            let r: Result<Vec<f64>, _> = l.split(',').map(str::parse).collect();
            r.ok()
        })
        .collect()
}

fn numbers(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn normal_data(seed: u64, n: usize) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn data_file(dir: &TempDir, name: &str, data: &[f64]) -> String {
    let body: String = data.iter().map(|x| format!("{x:?}\n")).collect();
    write(dir, name, &body)
}

/// Fits `data` through the binary and returns the artifact path.
fn fitted(dir: &TempDir, data: &[f64]) -> String {
    let input = data_file(dir, "data.csv", data);
    let art = dir.path().join("fit.json").to_str().unwrap().to_string();
    let o = run(&["fit", &input, "-o", &art]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    art
}

#[test]
fn two_point_fit_is_uniform() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "two.csv", "0\n1\n");
    let o = run(&["fit", &input]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(numbers(&v["knots"]), vec![0.0, 1.0]);
    for p in numbers(&v["log_density"]) {
        assert!(p.abs() < 1e-12);
    }
    assert_eq!(numbers(&v["cdf_at_knots"])[0], 0.0);
    assert_eq!(v["report"]["converged"], true);
    assert!(v["report"]["objective_trace"].is_array());
}

#[test]
fn fit_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    for (name, body) in [("one.csv", "5\n"), ("same.csv", "3\n3\n3\n"), ("text.csv", "1\n2\nabc\n"), ("empty.csv", "")] {
        let o = run(&["fit", &write(&dir, name, body)]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(!o.stderr.is_empty());
        assert!(o.stdout.is_empty());
    }
    let two_cols = write(&dir, "two_cols.csv", "1,2\n3,4\n5,6\n");
    assert_eq!(run(&["fit", &two_cols]).status.code(), Some(2));
    assert_eq!(run(&["fit", "/nonexistent/file.csv"]).status.code(), Some(2));
    assert_eq!(run(&["fit"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn header_row_is_skipped() {
    let dir = TempDir::new().unwrap();
    let with = run(&["fit", &write(&dir, "h.csv", "value\n0\n1\n0.4\n")]);
    let without = run(&["fit", &write(&dir, "n.csv", "0\n1\n0.4\n")]);
    assert!(with.status.success());
    assert_eq!(with.stdout, without.stdout);
}

#[test]
fn fit_from_standard_input() {
    use std::io::Write;
    let mut child = bin()
        .args(["fit", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"0\n1\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("\"knots\":[0,1]"));
}

#[test]
fn repeated_fits_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let input = data_file(&dir, "d.csv", &normal_data(1, 500));
    let a = run(&["fit", &input]);
    let b = run(&["fit", &input]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn unconverged_fit_exits_3_and_still_writes() {
    let dir = TempDir::new().unwrap();
    let input = data_file(&dir, "d.csv", &normal_data(2, 300));
    let art = dir.path().join("fit.json");
    let o = run(&["fit", &input, "--max-iter", "1", "-o", art.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&std::fs::read(&art).unwrap()).unwrap();
    assert_eq!(v["report"]["converged"], false);
}

#[test]
fn fit_csv_format() {
    let dir = TempDir::new().unwrap();
    let o = run(&["fit", &write(&dir, "two.csv", "0\n1\n"), "--format", "csv"]);
    let text = stdout(&o);
    assert!(text.starts_with("x,log_density,cdf\n"));
    assert_eq!(csv_rows(&text).len(), 2);
}

#[test]
fn uniform_pdf_grid() {
    let dir = TempDir::new().unwrap();
    let art = fitted(&dir, &[0.0, 1.0]);
    let o = run(&["eval", &art, "--grid", "3", "--what", "pdf"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    for (row, x) in rows.iter().zip([0.0, 0.5, 1.0]) {
        assert_eq!(row[0], x);
        assert!((row[1] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn cdf_grid_runs_from_zero_to_one() {
    let dir = TempDir::new().unwrap();
    let art = fitted(&dir, &normal_data(3, 200));
    let rows = csv_rows(&stdout(&run(&["eval", &art, "--grid", "50", "--what", "cdf"])));
    assert_eq!(rows.len(), 50);
    assert_eq!(rows[0][1], 0.0);
    assert!((rows[49][1] - 1.0).abs() < 1e-10);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));
}

#[test]
fn hazard_grid_is_nondecreasing_and_stops_short_of_the_end() {
    let dir = TempDir::new().unwrap();
    let data = normal_data(4, 300);
    let art = fitted(&dir, &data);
    let rows = csv_rows(&stdout(&run(&["eval", &art, "--grid", "200", "--what", "hazard"])));
    assert_eq!(rows.len(), 200);
    let hi = data.iter().cloned().fold(f64::MIN, f64::max);
    assert!(rows.iter().all(|r| r[0] < hi));
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));
}

#[test]
fn eval_rejects_bad_flags() {
    let dir = TempDir::new().unwrap();
    let art = fitted(&dir, &[0.0, 1.0, 3.0]);
    assert_eq!(run(&["eval", &art, "--what", "median"]).status.code(), Some(2));
    assert_eq!(run(&["eval", &art, "--grid", "1"]).status.code(), Some(2));
    let junk = write(&dir, "junk.json", "{\"version\": 1}");
    assert_eq!(run(&["eval", &junk]).status.code(), Some(2));
    let future = std::fs::read_to_string(&art).unwrap().replacen("\"version\":1", "\"version\":99", 1);
    assert_eq!(run(&["eval", &write(&dir, "future.json", &future)]).status.code(), Some(2));
}

#[test]
fn eval_json_format() {
    let dir = TempDir::new().unwrap();
    let art = fitted(&dir, &[0.0, 1.0]);
    let v: Value = serde_json::from_str(&stdout(&run(&["eval", &art, "--grid", "3", "--format", "json"]))).unwrap();
    assert_eq!(numbers(&v["x"]), vec![0.0, 0.5, 1.0]);
    assert_eq!(v["quantity"], "pdf");
}

#[test]
fn empty_sample() {
    let dir = TempDir::new().unwrap();
    let art = fitted(&dir, &[0.0, 1.0, 2.0]);
    let o = run(&["sample", &art, "--m", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
}

#[test]
fn negative_sample_size_is_rejected() {
    let dir = TempDir::new().unwrap();
    let art = fitted(&dir, &[0.0, 1.0, 2.0]);
    assert_eq!(run(&["sample", &art, "--m", "-5"]).status.code(), Some(2));
}

#[test]
fn samples_are_seeded() {
    let dir = TempDir::new().unwrap();
    let art = fitted(&dir, &normal_data(5, 100));
    let a = run(&["sample", &art, "--m", "100", "--seed", "7"]);
    let b = run(&["sample", &art, "--m", "100", "--seed", "7"]);
    let c = run(&["sample", &art, "--m", "100", "--seed", "8"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let d = run(&["sample", &art, "--m", "100"]);
    let e = run(&["sample", &art, "--m", "100", "--seed", "0"]);
    assert_eq!(d.stdout, e.stdout);
}

fn in_process_fit(data: &[f64]) -> LogConcaveFit {
    fit_mle(&prepare_sample(data, None).unwrap(), &SolverConfig::default()).unwrap()
}

#[test]
fn large_sample_passes_ks_against_the_fit() {
    let dir = TempDir::new().unwrap();
    let data = normal_data(6, 400);
    let art = fitted(&dir, &data);
    let fit = in_process_fit(&data);
    let m = 100_000;
    let mut draws: Vec<f64> = csv_rows(&stdout(&run(&["sample", &art, "--m", &m.to_string(), "--seed", "3"])))
        .into_iter()
        .map(|r| r[0])
        .collect();
    assert_eq!(draws.len(), m);
    draws.sort_by(f64::total_cmp);
    let ks = draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = fit.cdf(x);
            (f - i as f64 / m as f64).abs().max(((i + 1) as f64 / m as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 1.63 / (m as f64).sqrt(), "{ks}");
}

#[test]
fn artifact_reproduces_in_process_results() {
    let dir = TempDir::new().unwrap();
    let mut data = normal_data(7, 300);
    data.extend_from_slice(&data[..20].to_vec());
    let art = fitted(&dir, &data);
    let fit = in_process_fit(&data);

    let v: Value = serde_json::from_slice(&std::fs::read(&art).unwrap()).unwrap();
    assert_eq!(numbers(&v["log_density"]), fit.log_density());
    assert_eq!(numbers(&v["cdf_at_knots"]), fit.cdf_at_knots());
    assert_eq!(numbers(&v["weights"]), fit.weighted_sample().weights());

    for what in ["pdf", "cdf", "hazard"] {
        let rows = csv_rows(&stdout(&run(&["eval", &art, "--grid", "64", "--what", what])));
        for r in rows {
            let expected = match what {
                "pdf" => fit.pdf(r[0]).unwrap(),
                "cdf" => fit.cdf(r[0]),
                _ => fit.hazard(r[0]).unwrap(),
            };
            assert_eq!(r[1], expected, "{what} at {}", r[0]);
        }
    }
    let draws: Vec<f64> = csv_rows(&stdout(&run(&["sample", &art, "--m", "500", "--seed", "11"])))
        .into_iter()
        .map(|r| r[0])
        .collect();
    assert_eq!(draws, fit.sample(&mut Rng::seed_from_u64(11), 500));
}

fn labels_of(v: &Value) -> Vec<u64> {
    v["labels"].as_array().unwrap().iter().map(|l| l.as_u64().unwrap()).collect()
}

fn fixture_labels(name: &str) -> Vec<u64> {
    std::fs::read_to_string(fixture(name))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.parse().unwrap())
        .collect()
}

/// Disagreements with `truth`, minimized over swapping labels 1 and 2.
fn errors(labels: &[u64], truth: &[u64]) -> usize {
    let same = labels.iter().zip(truth).filter(|(a, b)| a == b).count();
    same.min(labels.len() - same)
}

#[test]
fn one_component_labels_everything_1() {
    let dir = TempDir::new().unwrap();
    let input = data_file(&dir, "d.csv", &normal_data(8, 100));
    let o = run(&["cluster", &input, "--k", "1"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(labels_of(&v).iter().all(|&l| l == 1));
    assert_eq!(numbers(&v["pi"]), vec![1.0]);
}

#[test]
fn fixture_clusters_are_recovered() {
    let truth = fixture_labels("separated_labels.csv");
    let input = fixture("separated.csv");
    for mode in ["univariate", "gaussian"] {
        let o = run(&["cluster", input.to_str().unwrap(), "--k", "2", "--mode", mode]);
        assert!(o.status.success(), "{mode}");
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        let labels = labels_of(&v);
        assert!(labels.iter().all(|&l| l == 1 || l == 2));
        assert_eq!(errors(&labels, &truth), 0, "{mode}");
        for row in v["posteriors"].as_array().unwrap() {
            let s: f64 = numbers(row).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        let pi: f64 = numbers(&v["pi"]).iter().sum();
        assert!((pi - 1.0).abs() < 1e-12);
    }
}

#[test]
fn copula_fixture_clusters_are_recovered() {
    let truth = fixture_labels("separated_2d_labels.csv");
    let input = fixture("separated_2d.csv");
    let o = run(&["cluster", input.to_str().unwrap(), "--k", "2", "--mode", "copula"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(errors(&labels_of(&v), &truth), 0);
}

#[test]
fn cluster_rejects_bad_requests() {
    let one_col = fixture("separated.csv");
    let one_col = one_col.to_str().unwrap();
    assert_eq!(run(&["cluster", one_col, "--k", "2", "--mode", "copula"]).status.code(), Some(2));
    assert_eq!(run(&["cluster", one_col, "--k", "0"]).status.code(), Some(2));
    assert_eq!(run(&["cluster", one_col, "--k", "-1"]).status.code(), Some(2));
    let two_col = fixture("separated_2d.csv");
    assert_eq!(run(&["cluster", two_col.to_str().unwrap(), "--k", "2"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let tiny = write(&dir, "tiny.csv", "1\n2\n3\n4\n");
    assert_eq!(run(&["cluster", &tiny, "--k", "2"]).status.code(), Some(2));
}

#[test]
fn degenerate_mixture_exits_4() {
    let input = fixture("separated.csv");
    let o = run(&["cluster", input.to_str().unwrap(), "--k", "2", "--min-component-weight", "0.9"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!o.stderr.is_empty());
}

#[test]
fn cluster_csv_format() {
    let input = fixture("separated.csv");
    let o = run(&["cluster", input.to_str().unwrap(), "--k", "2", "--format", "csv"]);
    let text = stdout(&o);
    assert!(text.starts_with("label,posterior_1,posterior_2\n"));
    assert_eq!(text.lines().count(), 201);
}

#[test]
fn cluster_is_deterministic_per_seed() {
    let input = fixture("separated.csv");
    let input = input.to_str().unwrap();
    let a = run(&["cluster", input, "--k", "2", "--seed", "5"]);
    let b = run(&["cluster", input, "--k", "2", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn help_succeeds() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["fit", "--help"]).status.code(), Some(0));
}
