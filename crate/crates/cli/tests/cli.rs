use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn asymtail(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asymtail"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

fn json_body(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    serde_json::from_str(&body.join("\n")).unwrap()
}

#[test]
fn simulate_model_writes_both_scales_with_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = asymtail(
        dir.path(),
        &[
            "simulate",
            "--model",
            "0.7,0.2,0.5",
            "--n",
            "1000",
            "--seed",
            "1",
            "--out",
            "a.csv",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(text.contains("# seed: 1"));
    assert!(text.lines().any(|l| l == "x1,x2,u1,u2"));
    assert_eq!(data_rows(&dir.path().join("a.csv")).len(), 1000);

    asymtail(
        dir.path(),
        &[
            "simulate",
            "--model",
            "0.7,0.2,0.5",
            "--n",
            "1000",
            "--seed",
            "1",
            "--out",
            "b.csv",
        ],
    );
    let strip = |f: &str| data_rows(&dir.path().join(f));
    assert_eq!(strip("a.csv"), strip("b.csv"));
}

#[test]
fn simulate_gumbel_and_dynamic() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&asymtail(
            dir.path(),
            &["simulate", "--gumbel", "0.5", "--n", "200", "--out", "g.csv"]
        )),
        0
    );
    let rows = data_rows(&dir.path().join("g.csv"));
    assert_eq!(rows.len(), 200);
    for r in &rows {
        let v: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v.len() == 2 && v.iter().all(|u| *u > 0.0 && *u < 1.0));
    }
    let o = asymtail(
        dir.path(),
        &["simulate", "--dynamic", "paper-4.3.3", "--n", "1500", "--out", "d1.csv"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    asymtail(
        dir.path(),
        &[
            "simulate",
            "--dynamic",
            "rising-lower",
            "--n",
            "1500",
            "--out",
            "d2.csv",
        ],
    );
    let (a, b) = (
        data_rows(&dir.path().join("d1.csv")),
        data_rows(&dir.path().join("d2.csv")),
    );
    assert_eq!(a.len(), 1500);
    assert_eq!(a, b);
}

#[test]
fn invalid_parameters_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = asymtail(dir.path(), &["simulate", "--model", "0.7,0.2,1.5"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("correlation"));
    assert_eq!(code(&asymtail(dir.path(), &["simulate", "--gumbel", "1.5"])), 2);
    assert_eq!(
        code(&asymtail(
            dir.path(),
            &["fit", "--input", "x.csv", "--censor", "scheme=4,tl=0.1"]
        )),
        2
    );
    assert_eq!(code(&asymtail(dir.path(), &["study", "case9"])), 2);
    assert_eq!(code(&asymtail(dir.path(), &["frobnicate"])), 2);
}

#[test]
fn data_errors_have_their_own_status() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&asymtail(dir.path(), &["fit", "--input", "missing.csv"])), 3);
    fs::write(dir.path().join("bad.csv"), "u1,u2\n0.1,0.2\n0.3,oops\n").unwrap();
    let o = asymtail(dir.path(), &["fit", "--input", "bad.csv"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));
}

#[test]
fn fit_full_censored_and_nonconverged() {
    let dir = tempfile::tempdir().unwrap();
    asymtail(
        dir.path(),
        &[
            "simulate",
            "--model",
            "0.7,0.2,0.5",
            "--n",
            "500",
            "--seed",
            "3",
            "--out",
            "s.csv",
        ],
    );

    let o = asymtail(dir.path(), &["fit", "--input", "s.csv", "--out", "full.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_body(&dir.path().join("full.json"));
    assert_eq!(v["result"]["converged"], true);
    assert!(v["parameters"]["delta_l"].as_f64().unwrap() > 0.4);
    assert!(v["result"]["aic"].is_number() && v["seed"] == "1");

    let o = asymtail(
        dir.path(),
        &[
            "fit",
            "--input",
            "s.csv",
            "--censor",
            "scheme=1,tl=0.1",
            "--out",
            "cens.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_body(&dir.path().join("cens.json"));
    let counts = &v["result"]["region_counts"];
    let total: u64 = ["a", "b", "c", "d", "corner"]
        .iter()
        .map(|k| counts[k].as_u64().unwrap())
        .sum();
    assert_eq!(total, 500);

    let o = asymtail(
        dir.path(),
        &["fit", "--input", "s.csv", "--max-iter", "3", "--out", "nc.json"],
    );
    assert_eq!(code(&o), 4);
    assert_eq!(json_body(&dir.path().join("nc.json"))["result"]["converged"], false);
}

#[test]
fn fit_with_bootstrap_appends_intervals() {
    let dir = tempfile::tempdir().unwrap();
    asymtail(
        dir.path(),
        &["simulate", "--gaussian", "0.5", "--n", "300", "--out", "s.csv"],
    );
    let o = asymtail(
        dir.path(),
        &[
            "fit", "--input", "s.csv", "--family", "gaussian", "--boot", "50", "--out", "f.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let b = &json_body(&dir.path().join("f.json"))["result"]["boot_intervals"];
    assert_eq!(b["replicates"], 50);
    let iv = &b["intervals"][0];
    assert_eq!(iv["name"], "rho");
    assert!(iv["lo"].as_f64().unwrap() < iv["hi"].as_f64().unwrap());
}

#[test]
fn fit_from_aligned_price_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = String::from("date,close\n");
    let mut b = String::from("date,close\n");
    let (mut pa, mut pb) = (100.0f64, 50.0f64);
    for d in 1..=28 {
        // deterministic wiggles with a shared component
        let s = ((d * 7919) % 13) as f64 / 13.0 - 0.5;
        pa *= 1.0 + 0.02 * s + 0.005 * ((d % 3) as f64 - 1.0);
        pb *= 1.0 + 0.02 * s - 0.004 * ((d % 5) as f64 - 2.0);
        a.push_str(&format!("2024-02-{d:02},{pa}\n"));
        if d != 10 {
            b.push_str(&format!("2024-02-{d:02},{pb}\n"));
        }
    }
    fs::write(dir.path().join("a.csv"), a).unwrap();
    fs::write(dir.path().join("b.csv"), b).unwrap();
    let o = asymtail(
        dir.path(),
        &[
            "fit", "--prices", "a.csv", "b.csv", "--family", "gaussian", "--out", "p.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1 unmatched"));
    let v = json_body(&dir.path().join("p.json"));
    assert_eq!(v["result"]["n_used"], 26);
    assert!(v["parameters"]["rho"].as_f64().unwrap() > 0.3);
}

#[test]
fn chi_parametric_and_moving_window() {
    let dir = tempfile::tempdir().unwrap();
    let o = asymtail(
        dir.path(),
        &["chi", "--gumbel", "0.5", "--t", "0.9,0.99", "--out", "c.csv"],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let limits = text.lines().find_map(|l| l.strip_prefix("# limits: ")).unwrap();
    let l: serde_json::Value = serde_json::from_str(limits).unwrap();
    assert!((l["chi_u"].as_f64().unwrap() - 0.586).abs() < 1e-3);
    assert_eq!(l["class_u"], "AD");

    asymtail(
        dir.path(),
        &["simulate", "--gumbel", "0.5", "--n", "1200", "--out", "s.csv"],
    );
    let o = asymtail(
        dir.path(),
        &[
            "chi", "--np", "--input", "s.csv", "--t", "0.05", "--window", "500", "--out", "np.csv",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&dir.path().join("np.csv"));
    assert_eq!(rows.len(), 1200);
    let est: f64 = rows[600].split(',').nth(1).unwrap().parse().unwrap();
    // lower tail of the Gumbel copula: chi_L(0.05) = 0.05^{2^0.5 − 1} ≈ 0.29
    assert!((est - 0.29).abs() < 0.12, "{est}");
}

#[test]
fn localfit_writes_per_index_series() {
    let dir = tempfile::tempdir().unwrap();
    asymtail(
        dir.path(),
        &["simulate", "--gaussian", "0.4", "--n", "120", "--out", "s.csv"],
    );
    let o = asymtail(
        dir.path(),
        &[
            "localfit", "--input", "s.csv", "--family", "gaussian", "--tau", "60", "--stride", "10", "--out", "l.csv",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("l.csv")).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    for c in ["index", "delta_l", "delta_u", "rho", "chi_l", "chi_u", "flags"] {
        assert!(header.split(',').any(|h| h == c), "{c}");
    }
    assert_eq!(data_rows(&dir.path().join("l.csv")).len(), 120);
}

#[test]
fn study_report_is_bitwise_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["r1", "r2"] {
        let o = asymtail(
            dir.path(),
            &[
                "study",
                "case2",
                "--replicates",
                "1",
                "--seed",
                "4",
                "--threads",
                "1",
                "--out",
                out,
            ],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["estimates.csv", "summary.csv", "report.json"] {
        let a = fs::read(dir.path().join("r1").join(f)).unwrap();
        let b = fs::read(dir.path().join("r2").join(f)).unwrap();
        // headers differ only in the output directory name
        let body = |x: &[u8]| {
            String::from_utf8_lossy(x)
                .lines()
                .filter(|l| !l.starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(body(&a), body(&b), "{f}");
    }
    let rows = data_rows(&dir.path().join("r1/estimates.csv"));
    assert_eq!(rows.len(), 16);
}
