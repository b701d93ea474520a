use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dce(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dce"))
        .args(args)
        .current_dir(dir)
        .env_remove("DCE_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn rows(text: &str) -> Vec<Vec<&str>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').collect())
        .collect()
}

fn column(table: &[Vec<&str>], name: &str) -> Vec<f64> {
    let idx = table[0].iter().position(|c| *c == name).expect(name);
    table[1..].iter().map(|r| r[idx].parse().unwrap()).collect()
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = TempDir::new().unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = dce(dir.path(), &["preset", "fig2", "-n", "4", "-o", name]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn every_row_has_the_schema_width() {
    let dir = TempDir::new().unwrap();
    let out = dce(dir.path(), &["preset", "fig1"]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("fig1_N3.csv")).unwrap();
    let table = rows(&text);
    assert_eq!(table.len(), 601);
    // 8 fixed columns, 3 levels, photons 0..=30
    assert!(table.iter().all(|r| r.len() == 8 + 3 + 31));
    assert_eq!(table[0][..4], ["t", "eps_t", "n_mean", "mandel_q"]);
    // Q is undefined in the vacuum
    assert_eq!(table[1][3], "");
    let eps_t = column(&table, "eps_t");
    assert_eq!(eps_t[0], 0.0);
    assert!((eps_t[599] - 3.0).abs() < 1e-12);

    let out = dce(
        dir.path(),
        &["simulate", "-n", "2", "--cutoff", "40", "--eps-t", "0.5", "--samples", "5", "-v"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("simulate_ladder_N2.csv")).unwrap();
    assert!(rows(&text).iter().all(|r| r.len() == 8 + 2 + 41));
}

#[test]
fn saved_config_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let out = dce(
        dir.path(),
        &[
            "simulate",
            "--detector",
            "dicke",
            "-n",
            "5",
            "-g",
            "0.02",
            "--epsilon",
            "2e-3",
            "--eps-t",
            "1.5",
            "--samples",
            "50",
            "-o",
            "first.csv",
            "--save-config",
            "run.conf",
        ],
    );
    assert_eq!(code(&out), 0);
    let conf = fs::read_to_string(dir.path().join("run.conf")).unwrap();
    assert!(conf.contains("detector = dicke\n"));
    let out = dce(dir.path(), &["simulate", "--config", "run.conf", "-o", "second.csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        fs::read(dir.path().join("first.csv")).unwrap(),
        fs::read(dir.path().join("second.csv")).unwrap()
    );
}

#[test]
fn config_file_with_comments_and_flag_override() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("c.conf"),
        "# two levels\nlevels = 2\ncutoff = 30  # small\neps_t_final = 0.2\nsamples = 3\n",
    )
    .unwrap();
    let out = dce(dir.path(), &["simulate", "--config", "c.conf", "-n", "4", "-o", "-"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let table = rows(&text);
    assert_eq!(table.len(), 4);
    assert!(table[0].contains(&"P_level_4"));
    assert_eq!(table[0].len(), 8 + 4 + 31);
}

#[test]
fn twelve_atom_ensemble_caps_photons() {
    let dir = TempDir::new().unwrap();
    let out = dce(dir.path(), &["preset", "fig3b"]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("fig3b_N12.csv")).unwrap();
    let table = rows(&text);
    let mut worst = 0.0f64;
    for k in 11..=30 {
        worst = column(&table, &format!("P_photon_{k}"))
            .into_iter()
            .fold(worst, f64::max);
    }
    assert!(worst < 1e-2, "{worst}");
}

#[test]
fn empty_cavity_mode_is_the_closed_form() {
    let dir = TempDir::new().unwrap();
    let out = dce(dir.path(), &["analytic", "empty-cavity", "--samples", "31"]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("empty_cavity.csv")).unwrap();
    let table = rows(&text);
    assert_eq!(table.len(), 32);
    let t = column(&table, "t");
    let n = column(&table, "n_mean");
    let q = column(&table, "mandel_q");
    let x = column(&table, "x_var");
    let p = column(&table, "p_var");
    for i in 0..t.len() {
        let r = 1e-3 * t[i] / 2.0;
        let sinh2 = r.sinh() * r.sinh();
        let close = |a: f64, b: f64| (a - b).abs() <= 4.0 * f64::EPSILON * b.abs();
        assert!(close(n[i], sinh2));
        assert!(close(q[i], 1.0 + 2.0 * sinh2));
        assert!(close(x[i], 0.5 * (2.0 * r).exp()));
        assert!(close(p[i], 0.5 * (-2.0 * r).exp()));
    }
}

#[test]
fn oscillator_closed_form_mode() {
    let dir = TempDir::new().unwrap();
    let out = dce(dir.path(), &["analytic", "ho", "--samples", "11", "-o", "ho.csv"]);
    assert_eq!(code(&out), 0);
    let table_text = fs::read_to_string(dir.path().join("ho.csv")).unwrap();
    let table = rows(&table_text);
    let x = column(&table, "x_var");
    let p = column(&table, "p_var");
    let prod = column(&table, "uncertainty_product");
    for i in 0..x.len() {
        assert!((x[i] * p[i] - prod[i]).abs() < 1e-12);
        assert!(prod[i] >= 0.25);
    }
}

#[test]
fn fixed_tiny_cutoff_overflows() {
    let dir = TempDir::new().unwrap();
    let out = dce(dir.path(), &["preset", "fig1", "-n", "5", "--cutoff", "4"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cutoff 4"));
}

#[test]
fn loose_tolerance_trips_the_norm_guard() {
    let dir = TempDir::new().unwrap();
    let out = dce(
        dir.path(),
        &["simulate", "--rel-tol", "0.1", "--abs-tol", "0.1", "--samples", "2"],
    );
    assert_eq!(code(&out), 4);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.conf"), "levels = 3\nflavour = up\n").unwrap();
    assert_eq!(code(&dce(dir.path(), &["simulate", "--config", "bad.conf"])), 2);
    assert_eq!(code(&dce(dir.path(), &["preset", "fig1", "-g", "0.5"])), 2);
    assert_eq!(code(&dce(dir.path(), &["preset", "fig9"])), 2);
    assert_eq!(code(&dce(dir.path(), &["simulate", "--detector", "ho", "-n", "2"])), 2);
    assert_eq!(code(&dce(dir.path(), &["compare", "--detector", "dicke"])), 2);
    assert_eq!(code(&dce(dir.path(), &["simulate", "--config", "missing.conf"])), 2);
}

#[test]
fn convergence_check_passes_for_uncoupled_cavity() {
    let dir = TempDir::new().unwrap();
    let out = dce(dir.path(), &["check", "-g", "0", "-n", "1", "-o", "check.txt"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("check.txt")).unwrap();
    assert!(report.ends_with("PASS\n"));
    let dev: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("max relative change n_mean "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(dev < 1e-10, "{dev}");
}

#[test]
fn convergence_check_on_five_level_preset() {
    let dir = TempDir::new().unwrap();
    let out = dce(dir.path(), &["check", "--preset", "fig1", "-n", "5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("check_fig1_N5.txt")).unwrap();
    assert!(report.ends_with("PASS\n"));
}

#[test]
fn sweep_writes_one_file_per_value() {
    let dir = TempDir::new().unwrap();
    let out = dce(
        dir.path(),
        &[
            "sweep", "--vary", "levels=2,3", "--mode", "preset", "--preset", "fig1",
            "--output-dir", "runs",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let single = dce(dir.path(), &["preset", "fig1", "-n", "3", "-o", "single.csv"]);
    assert_eq!(code(&single), 0);
    assert!(dir.path().join("runs/fig1_N2_levels-2.csv").exists());
    assert_eq!(
        fs::read(dir.path().join("runs/fig1_N3_levels-3.csv")).unwrap(),
        fs::read(dir.path().join("single.csv")).unwrap()
    );

    let failing = dce(dir.path(), &["sweep", "--vary", "cutoff=4,auto", "--preset", "fig1", "--mode", "preset"]);
    assert_eq!(code(&failing), 3);
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dce"))
        .args(["spectral", "-n", "5"])
        .current_dir(dir.path())
        .env("DCE_OUTPUT_DIR", dir.path().join("reports"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let report = fs::read_to_string(dir.path().join("reports/spectral_ladder_N5.txt")).unwrap();
    assert!(report.contains("max_photons unbounded\n"));
    assert!(report.contains("resonant_chain 0 2 4\n"));
}

#[test]
fn compare_reports_max_deviation() {
    let dir = TempDir::new().unwrap();
    let out = dce(
        dir.path(),
        &["compare", "--detector", "ho", "-n", "30", "--eps-t", "2", "--samples", "41", "-o", "cmp.csv"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("cmp.csv")).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("# max relative deviation: n_mean "));
    let table = rows(&text);
    assert_eq!(table[0].len(), 2 + 2 * 6);
    let n = column(&table, "n_mean");
    let exact = column(&table, "n_mean_exact");
    for (a, b) in n.iter().zip(&exact).skip(1) {
        assert!((a - b).abs() <= 1e-6 * b, "{a} vs {b}");
    }
}
