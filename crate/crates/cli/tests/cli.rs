use std::process::{Command, Output};

fn corank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corank"))
        .args(args)
        .env_remove("CORANK_PREC")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data lines of a CSV body, header and config comment skipped.
fn rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("corank-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn chain_support_size() {
    let o = corank(&[
        "chain", "--kind", "uniform", "--q", "2", "--m", "0", "--n", "8",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("# run_config: {"));
    assert_eq!(rows(&o).len(), 9);
    assert!(out.contains("\n8,1/18446744073709551616\n"));
}

#[test]
fn invalid_m_exits_2() {
    let o = corank(&[
        "chain", "--kind", "uniform", "--q", "2", "--m", "-2", "--n", "8",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain"));
}

#[test]
fn hermitian_tv_has_signed_columns() {
    let o = corank(&[
        "chain",
        "--kind",
        "hermitian",
        "--q",
        "3",
        "--n",
        "20",
        "--tv",
    ]);
    assert!(o.status.success());
    let header = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(header.ends_with("leading_inner,signed_residual"));
    let r = rows(&o);
    assert_eq!(r.len(), 21);
    for w in r[1..].windows(2) {
        let a: f64 = w[0][6].parse().unwrap();
        let b: f64 = w[1][6].parse().unwrap();
        assert!(a * b < 0.0, "signed residual must alternate");
    }
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "--ensemble",
        "symmetric",
        "--n",
        "4",
        "--q",
        "3",
        "--trials",
        "20000",
        "--seed",
        "11",
    ];
    let a = corank(&args);
    let b = corank(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut w = args.to_vec();
    w.extend(["--workers", "1"]);
    let c: serde_json::Value = serde_json::from_slice(&corank(&w).stdout).unwrap();
    let a: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(a["histogram"], c["histogram"]);
    assert_eq!(a["tv_ok"], true);
}

#[test]
fn simulate_alternating_even_coranks() {
    let o = corank(&[
        "simulate",
        "--ensemble",
        "alternating",
        "--n",
        "6",
        "--q",
        "2",
        "--trials",
        "20000",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for (k, _) in v["histogram"]["counts"].as_object().unwrap() {
        assert_eq!(k.parse::<usize>().unwrap() % 2, 0);
    }
}

#[test]
fn simulate_rejects_even_skew_centrosymmetric() {
    let o = corank(&[
        "simulate",
        "--ensemble",
        "skew_centrosymmetric",
        "--n",
        "4",
        "--q",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectrum_sign_column() {
    let o = corank(&["spectrum", "--kind", "symmetric", "--q", "2", "--N", "60"]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r.len(), 12);
    assert_eq!(r[1][4], "+");
    assert_eq!(r[2][4], "-");
    for row in &r {
        assert!(row[3].parse::<f64>().unwrap() < 1e-8);
    }
}

#[test]
fn cokernel_validate_under_cap() {
    let o = corank(&[
        "cokernel",
        "--p",
        "3",
        "--m",
        "0",
        "--type",
        "1",
        "--n-range",
        "1..8",
        "--validate",
    ]);
    assert!(o.status.success());
    let r = rows(&o);
    assert_eq!(r.len(), 8);
    assert!(r.iter().all(|row| row[6] == "true"));
}

#[test]
fn classgroup_csv_and_svg() {
    let svg = tmp("series.svg");
    let o = corank(&[
        "classgroup",
        "--p",
        "3",
        "--type",
        "1",
        "--X",
        "100000",
        "--checkpoints",
        "30",
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&o);
    assert!(r.len() >= 20);
    let xs: Vec<u64> = r.iter().map(|row| row[0].parse().unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(*xs.last().unwrap(), 100_000);
    assert!(std::fs::read_to_string(svg).unwrap().contains("<polyline"));
}

#[test]
fn config_file_and_overrides() {
    let cfg = tmp("run.cfg");
    std::fs::write(
        &cfg,
        "# chain run\nkind = uniform\nq = 2\nn = 3\nprec = 128\n",
    )
    .unwrap();
    let o = corank(&["chain", "--config", cfg.to_str().unwrap(), "--n", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("\"n\":\"2\""));
    assert!(out.contains("\"precision_bits\":128"));
    assert_eq!(rows(&o).len(), 3);

    std::fs::write(&cfg, "kind = uniform\nbogus = 1\n").unwrap();
    let o = corank(&[
        "chain",
        "--config",
        cfg.to_str().unwrap(),
        "--q",
        "2",
        "--n",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn precision_from_env() {
    let o = Command::new(env!("CARGO_BIN_EXE_corank"))
        .args([
            "chain", "--kind", "uniform", "--q", "5/2", "--m", "1/2", "--n", "3",
        ])
        .env("CORANK_PREC", "96")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("\"precision_bits\":96"));
}

#[test]
fn output_file() {
    let path = tmp("out.csv");
    let o = corank(&[
        "snf",
        "--p",
        "2",
        "--n",
        "3",
        "--trials",
        "2000",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let body = std::fs::read_to_string(&path).unwrap();
    assert!(body.contains("type,count,frequency,exact,binomial_sigma"));
    assert!(body.contains("\"[1]\","));
}
