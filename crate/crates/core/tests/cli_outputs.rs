//! The CSV files written by the `phl` binary are the only interface the
//! figure scripts consume, so their headers and row shapes are pinned here.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn phl(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phl"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("PHL_THREADS", "1")
        .output()
        .unwrap()
}

/// Header fields plus rows, each row checked to have the header's width.
fn table(dir: &Path, name: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_owned).collect()).collect();
    assert!(!rows.is_empty(), "{name} has no rows");
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), header.len(), "{name} row {i}");
    }
    (header, rows)
}

fn column<'a>(header: &[String], rows: &'a [Vec<String>], name: &str) -> Vec<&'a str> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("missing column {name}"));
    rows.iter().map(|r| r[k].as_str()).collect()
}

fn numeric(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    column(header, rows, name).iter().map(|v| v.parse::<f64>().unwrap_or_else(|_| panic!("{name}: {v}"))).collect()
}

fn files(dir: &Path) -> BTreeSet<String> {
    fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect()
}

#[test]
fn llt_and_kernel_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let res = phl(&["all", "d=2", "L=48", "p=0.7", "seeds=1,2", "radius=6,8", "continuous=true"], &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let (h, rows) = table(&out, "llt.csv");
    assert_eq!(h, ["seed", "kind", "n", "t", "x0", "x1", "measured", "gaussian_ref", "abs_err"]);
    let (m, r, e) = (numeric(&h, &rows, "measured"), numeric(&h, &rows, "gaussian_ref"), numeric(&h, &rows, "abs_err"));
    for i in 0..rows.len() {
        assert!(((m[i] - r[i]).abs() - e[i]).abs() <= 1e-15 * e[i].max(1.0));
    }
    assert_eq!(column(&h, &rows, "seed").iter().collect::<BTreeSet<_>>().len(), 2);
    assert!(column(&h, &rows, "kind").iter().all(|k| *k == "myopic"));

    let (hc, _) = table(&out, "llt_continuous.csv");
    assert_eq!(hc, h);
    let (hs, sup) = table(&out, "llt_sup.csv");
    assert_eq!(hs, ["seed", "kind", "n", "sup_error", "reference_origin", "excluded", "continuous_sup_error"]);
    assert!(numeric(&hs, &sup, "sup_error").iter().all(|v| v.is_finite() && *v >= 0.0));

    let (hk, krows) = table(&out, "kernel.csv");
    assert_eq!(hk, ["seed", "kind", "step", "y0", "y1", "density", "mass"]);
    assert!(numeric(&hk, &krows, "density").iter().all(|v| *v > 0.0));

    let (hp, prows) = table(&out, "phi.csv");
    assert_eq!(
        hp,
        ["seed", "R", "T", "family_size", "c_h", "delta", "theta", "violations", "holder_c", "c_h_lateral"]
    );
    assert_eq!(column(&hp, &prows, "R"), ["6", "8", "6", "8"]);
    assert!(column(&hp, &prows, "violations").iter().all(|v| *v == "0"));

    let expected: BTreeSet<String> = [
        "balayage.csv",
        "cluster-seed1.txt",
        "cluster-seed2.txt",
        "geometry.csv",
        "kernel.csv",
        "kernel_identities.csv",
        "llt.csv",
        "llt_continuous.csv",
        "llt_sup.csv",
        "phi.csv",
        "summary.json",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    assert_eq!(files(&out), expected);
    // nothing lands beside the output directory
    assert_eq!(files(dir.path()), BTreeSet::from(["run".to_string()]));

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seeds"].as_array().unwrap().len(), 2);
    assert!(summary["seeds"][0]["a_hat"].as_f64().is_some());
    assert!(summary["seeds"][0]["d_hat"].as_f64().is_some());
}

#[test]
fn green_tables() {
    let dir = tempfile::tempdir().unwrap();
    let res = phl(&["green", "--d", "3", "--L", "32", "--p", "0.7", "--seeds", "2"], dir.path());
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let (h, rows) = table(dir.path(), "green.csv");
    assert_eq!(h, ["seed", "shell_radius", "mean", "min", "max", "C_ref", "raw_mean", "count"]);
    let radii = numeric(&h, &rows, "shell_radius");
    assert!(radii.windows(2).all(|w| w[0] < w[1]) && radii[0] >= 1.0);
    let (lo, mean, hi) = (numeric(&h, &rows, "min"), numeric(&h, &rows, "mean"), numeric(&h, &rows, "max"));
    for i in 0..rows.len() {
        assert!(lo[i] <= mean[i] && mean[i] <= hi[i]);
    }
    let c = numeric(&h, &rows, "C_ref");
    assert!(c.iter().all(|v| *v == c[0] && *v > 0.0));

    let (h2, _) = table(dir.path(), "green_two_box.csv");
    assert_eq!(h2, ["seed", "shell_radius", "small_raw", "large_raw", "small", "large"]);
}

#[test]
fn bad_parameters_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let res = phl(&["llt", "p=1.5"], &dir.path().join("never"));
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains('p'));
    assert!(!dir.path().join("never").exists());

    let res = phl(&["green", "d=2"], &dir.path().join("never"));
    assert_eq!(res.status.code(), Some(2));
}
