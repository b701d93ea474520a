//! Executes a resolved [`RunConfig`] and writes its output file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use dce_core::analytic::{empty_cavity, ho_observables, HoParams};
use dce_core::dynamics::{coupling_profile, simulate, uniform_times};
use dce_core::spectral::{block_report, predict_max_photons, PhotonCap};
use dce_core::statespace::{ObservableRecord, SystemSpec};

use crate::config::{Cutoff, Mode, RunConfig};
use crate::error::CliError;
use crate::table::{format_value, simulation_columns, simulation_row, Csv};

/// What a finished run wrote and a one-line account of it.
#[derive(Debug, Clone)]
pub struct Report {
    pub path: PathBuf,
    pub summary: String,
}

/// Observables of a numerical run together with the system it finally used.
#[derive(Debug, Clone)]
pub struct Run {
    /// `fock_cutoff` is the cutoff of the successful attempt.
    pub spec: SystemSpec,
    pub records: Vec<ObservableRecord>,
    pub attempts: u32,
}

pub fn run_simulation(cfg: &RunConfig) -> Result<Run, CliError> {
    let mut spec = cfg.system_spec()?;
    let times = uniform_times(spec.t_final, cfg.samples);
    let sim = simulate(&spec, &times, cfg.max_doublings(), |s| {
        ObservableRecord::from_state(s)
    })?;
    let records = sim
        .trajectory
        .samples
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    spec.fock_cutoff = sim.cutoff;
    Ok(Run {
        spec,
        records,
        attempts: sim.attempts,
    })
}

/// Writes `body` to `path`, or to standard output when `path` is `-`.
pub fn write_output(path: &Path, body: &str) -> Result<(), CliError> {
    if path == Path::new("-") {
        print!("{body}");
        return Ok(());
    }
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, body).map_err(io)
}

/// Runs `cfg` and writes its output under `out_dir` unless the config names a path.
pub fn execute(cfg: &RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let (body, summary) = render(cfg)?;
    let path = cfg.output_path(out_dir);
    write_output(&path, &body)?;
    Ok(Report { path, summary })
}

/// Output text and summary line for `cfg` without touching the filesystem.
pub fn render(cfg: &RunConfig) -> Result<(String, String), CliError> {
    match cfg.mode {
        Mode::Simulate | Mode::Preset => simulation_table(cfg),
        Mode::AnalyticHo => analytic_ho_table(cfg),
        Mode::EmptyCavity => empty_cavity_table(cfg),
        Mode::Spectral => spectral_report(cfg),
        Mode::Compare => compare_table(cfg),
    }
}

fn simulation_table(cfg: &RunConfig) -> Result<(String, String), CliError> {
    let run = run_simulation(cfg)?;
    let k_report = cfg.report_photons_for(run.spec.fock_cutoff);
    let mut csv = Csv::new(&simulation_columns(run.spec.levels, k_report));
    for rec in &run.records {
        csv.row(&simulation_row(rec, cfg.epsilon, k_report));
    }
    let last = run.records.last().map_or(0.0, |r| r.n_mean);
    let summary = format!(
        "{} samples, cutoff {} after {} attempt(s), final <n> = {}",
        run.records.len(),
        run.spec.fock_cutoff,
        run.attempts,
        format_value(Some(last))
    );
    Ok((csv.into_string(), summary))
}

fn empty_cavity_table(cfg: &RunConfig) -> Result<(String, String), CliError> {
    let mut csv = Csv::new(&["t", "eps_t", "n_mean", "mandel_q", "x_var", "p_var"]);
    for t in uniform_times(cfg.t_final()?, cfg.samples) {
        let e = empty_cavity(t, cfg.epsilon);
        csv.row(&[
            Some(t),
            Some(cfg.epsilon * t),
            Some(e.n_mean),
            Some(e.mandel_q),
            Some(e.x_var),
            Some(e.p_var),
        ]);
    }
    Ok((csv.into_string(), format!("{} samples of the empty cavity", cfg.samples)))
}

fn analytic_ho_table(cfg: &RunConfig) -> Result<(String, String), CliError> {
    let params = HoParams::from_epsilon(cfg.epsilon, cfg.g);
    let mut csv = Csv::new(&[
        "t",
        "eps_t",
        "n_mean",
        "n_detector",
        "mandel_q",
        "x_var",
        "p_var",
        "uncertainty_product",
        "purity",
    ]);
    for t in uniform_times(cfg.t_final()?, cfg.samples) {
        let o = ho_observables(&params, t);
        csv.row(&[
            Some(t),
            Some(cfg.epsilon * t),
            Some(o.n_field),
            Some(o.n_detector),
            o.mandel_q,
            Some(o.x_var),
            Some(o.p_var),
            Some(o.uncertainty_product),
            Some(o.purity),
        ]);
    }
    Ok((
        csv.into_string(),
        format!("{} samples, {:?} branch", cfg.samples, params.branch()),
    ))
}

fn spectral_report(cfg: &RunConfig) -> Result<(String, String), CliError> {
    let profile = coupling_profile(cfg.detector, cfg.levels, cfg.g);
    let prediction = predict_max_photons(cfg.levels);
    let cap = match prediction.max_photons {
        PhotonCap::Bounded(k) => k.to_string(),
        PhotonCap::Unbounded => "unbounded".into(),
    };
    let mut s = String::new();
    let _ = writeln!(s, "detector {}", cfg.detector.name());
    let _ = writeln!(s, "levels {}", cfg.levels);
    let couplings: Vec<String> = profile
        .couplings()
        .iter()
        .map(|&g| format_value(Some(g)))
        .collect();
    let _ = writeln!(s, "couplings {}", couplings.join(" "));
    let _ = writeln!(s, "max_photons {cap}");
    let chain: Vec<String> = prediction
        .resonant_chain
        .iter()
        .map(|e| e.to_string())
        .collect();
    let _ = writeln!(s, "resonant_chain {}", chain.join(" "));
    let _ = writeln!(s);
    let _ = writeln!(s, "excitation,dim,null,min_abs_eigenvalue");
    if cfg.g > 0.0 || cfg.levels == 1 {
        for row in block_report(&profile, cfg.levels, cfg.max_excitation)? {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                row.excitation,
                row.dim,
                row.has_null,
                format_value(Some(row.min_abs_eigenvalue))
            );
        }
    }
    Ok((s, format!("N = {}: max photons {cap}", cfg.levels)))
}

/// Closed-form values matched against a numerical sample.
struct Exact {
    n_mean: f64,
    n_detector: f64,
    mandel_q: Option<f64>,
    x_var: f64,
    p_var: f64,
    purity: f64,
}

fn exact_at(cfg: &RunConfig, t: f64) -> Exact {
    if cfg.g == 0.0 {
        let e = empty_cavity(t, cfg.epsilon);
        Exact {
            n_mean: e.n_mean,
            n_detector: 0.0,
            mandel_q: Some(e.mandel_q),
            x_var: e.x_var,
            p_var: e.p_var,
            purity: 1.0,
        }
    } else {
        let o = ho_observables(&HoParams::from_epsilon(cfg.epsilon, cfg.g), t);
        Exact {
            n_mean: o.n_field,
            n_detector: o.n_detector,
            mandel_q: o.mandel_q,
            x_var: o.x_var,
            p_var: o.p_var,
            purity: o.purity,
        }
    }
}

/// `|a - b| / |b|`, or `|a|` when the reference vanishes.
fn deviation(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

const COMPARED: [&str; 6] = ["n_mean", "n_detector", "mandel_q", "x_var", "p_var", "purity"];

fn compare_table(cfg: &RunConfig) -> Result<(String, String), CliError> {
    let run = run_simulation(cfg)?;
    let mut columns = vec!["t".to_string(), "eps_t".to_string()];
    for name in COMPARED {
        columns.push(name.to_string());
        columns.push(format!("{name}_exact"));
    }
    let mut csv = Csv::new(&columns);
    let mut worst = [0.0f64; COMPARED.len()];
    for rec in &run.records {
        let ex = exact_at(cfg, rec.time);
        let pairs = [
            (Some(rec.n_mean), Some(ex.n_mean)),
            (Some(rec.n_detector()), Some(ex.n_detector)),
            (rec.mandel_q, ex.mandel_q),
            (Some(rec.x_var), Some(ex.x_var)),
            (Some(rec.p_var), Some(ex.p_var)),
            (Some(rec.purity), Some(ex.purity)),
        ];
        let mut row = vec![Some(rec.time), Some(cfg.epsilon * rec.time)];
        for (w, (num, exact)) in worst.iter_mut().zip(pairs) {
            row.push(num);
            row.push(exact);
            if let (Some(a), Some(b)) = (num, exact) {
                *w = w.max(deviation(a, b));
            }
        }
        csv.row(&row);
    }
    let summary = format!(
        "max relative deviation: {}",
        COMPARED
            .iter()
            .zip(worst)
            .map(|(n, w)| format!("{n} {w:.3e}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    csv.comment(&summary);
    Ok((csv.into_string(), summary))
}

/// Result of rerunning a simulation with a doubled cutoff and a tenfold
/// tighter relative tolerance.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub reference_cutoff: usize,
    pub refined_cutoff: usize,
    /// Largest relative change per observable, `n_mean` first.
    pub deviations: Vec<(&'static str, f64)>,
    pub passed: bool,
}

/// Largest allowed relative change of `<n>` between the two runs.
pub const CONVERGENCE_LIMIT: f64 = 1e-6;

fn symmetric_deviation(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn convergence_check(cfg: &RunConfig) -> Result<ConvergenceReport, CliError> {
    if !matches!(cfg.mode, Mode::Simulate | Mode::Preset) {
        return Err(CliError::Config(format!(
            "check needs a simulate or preset configuration, not {}",
            cfg.mode.name()
        )));
    }
    let coarse = run_simulation(cfg)?;
    let mut refined_cfg = cfg.clone();
    refined_cfg.cutoff = Cutoff::Fixed(coarse.spec.fock_cutoff * 2);
    refined_cfg.tolerances.rel_tol /= 10.0;
    let fine = run_simulation(&refined_cfg)?;

    type Pick = fn(&ObservableRecord) -> Option<f64>;
    let observables: [(&'static str, Pick); 5] = [
        ("n_mean", |r| Some(r.n_mean)),
        ("mandel_q", |r| r.mandel_q),
        ("x_var", |r| Some(r.x_var)),
        ("p_var", |r| Some(r.p_var)),
        ("purity", |r| Some(r.purity)),
    ];
    let deviations: Vec<(&'static str, f64)> = observables
        .iter()
        .map(|(name, pick)| {
            let worst = coarse
                .records
                .iter()
                .zip(&fine.records)
                .filter_map(|(a, b)| Some(symmetric_deviation(pick(a)?, pick(b)?)))
                .fold(0.0, f64::max);
            (*name, worst)
        })
        .collect();
    Ok(ConvergenceReport {
        reference_cutoff: coarse.spec.fock_cutoff,
        refined_cutoff: fine.spec.fock_cutoff,
        passed: deviations[0].1 < CONVERGENCE_LIMIT,
        deviations,
    })
}

impl ConvergenceReport {
    pub fn render(&self, cfg: &RunConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "reference cutoff {} rel_tol {:e}",
            self.reference_cutoff, cfg.tolerances.rel_tol
        );
        let _ = writeln!(
            s,
            "refined cutoff {} rel_tol {:e}",
            self.refined_cutoff,
            cfg.tolerances.rel_tol / 10.0
        );
        for (name, d) in &self.deviations {
            let _ = writeln!(s, "max relative change {name} {d:.3e}");
        }
        let _ = writeln!(s, "{}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

/// Runs the check and writes its report; a failed check is an error after
/// the report has been written.
pub fn execute_check(cfg: &RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let report = convergence_check(cfg)?;
    let path = cfg
        .output
        .clone()
        .unwrap_or_else(|| out_dir.join(check_file_name(cfg)));
    write_output(&path, &report.render(cfg))?;
    let summary = format!(
        "<n> changed by at most {:.3e} between cutoffs {} and {}",
        report.deviations[0].1, report.reference_cutoff, report.refined_cutoff
    );
    if report.passed {
        Ok(Report { path, summary })
    } else {
        Err(CliError::NotConverged(summary))
    }
}

fn check_file_name(cfg: &RunConfig) -> String {
    let name = cfg.default_file_name();
    let stem = name.rsplit_once('.').map_or(name.as_str(), |(s, _)| s);
    format!("check_{stem}.txt")
}

fn file_safe(value: &str) -> String {
    value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

/// Resolves and runs one configuration per value of `key`, in parallel,
/// each writing `<default stem>_<key>-<value>.<ext>` inside `out_dir`.
/// Results come back in the order of `values`.
pub fn sweep(
    file: Option<&Path>,
    overrides: &[(String, String)],
    key: &str,
    values: &[String],
    out_dir: &Path,
) -> Vec<(String, Result<Report, CliError>)> {
    values
        .par_iter()
        .map(|value| {
            let result = (|| {
                let mut pairs = overrides.to_vec();
                pairs.push((key.to_string(), value.clone()));
                let mut cfg = RunConfig::resolve(file, &pairs)?;
                if cfg.output.is_some() {
                    return Err(CliError::Config(
                        "sweep names its own output files; drop the output setting".into(),
                    ));
                }
                let name = cfg.default_file_name();
                let (stem, ext) = name.rsplit_once('.').unwrap_or((&name, "csv"));
                cfg.output = Some(out_dir.join(format!(
                    "{stem}_{}-{}.{ext}",
                    file_safe(key),
                    file_safe(value)
                )));
                execute(&cfg, out_dir)
            })();
            (value.clone(), result)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(items: &[(&str, &str)]) -> RunConfig {
        let pairs: Vec<(String, String)> = items
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        RunConfig::resolve(None, &pairs).unwrap()
    }

    #[test]
    fn empty_cavity_columns_are_closed_forms() {
        let c = cfg(&[("mode", "empty-cavity"), ("samples", "4")]);
        let (body, _) = render(&c).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines[0], "t,eps_t,n_mean,mandel_q,x_var,p_var");
        assert_eq!(lines.len(), 5);
        let last: Vec<f64> = lines[4].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(last[0], 3000.0);
        assert_eq!(last[2], 1.5f64.sinh().powi(2));
        assert_eq!(last[4], 0.5 * 3f64.exp());
    }

    #[test]
    fn spectral_report_for_even_detector() {
        let c = cfg(&[("mode", "spectral"), ("levels", "4"), ("max_excitation", "6")]);
        let (body, summary) = render(&c).unwrap();
        assert!(body.contains("max_photons 2\n"));
        assert!(body.contains("resonant_chain 0 2\n"));
        assert!(body.contains("\n4,4,false,"));
        assert!(body.contains("\n2,3,true,"));
        assert_eq!(summary, "N = 4: max photons 2");
    }

    #[test]
    fn compare_against_empty_cavity() {
        let c = cfg(&[
            ("mode", "compare"),
            ("g", "0"),
            ("levels", "1"),
            ("eps_t_final", "1"),
            ("samples", "11"),
        ]);
        let (body, summary) = render(&c).unwrap();
        assert!(body.lines().last().unwrap().starts_with("# max relative deviation"));
        let n_dev: f64 = summary
            .split("n_mean ")
            .nth(1)
            .unwrap()
            .split(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert!(n_dev < 1e-8, "{summary}");
    }

    #[test]
    fn deviations() {
        assert_eq!(deviation(1.0, 0.0), 1.0);
        assert_eq!(deviation(1.1, 1.0), 0.10000000000000009);
        assert_eq!(symmetric_deviation(0.0, 0.0), 0.0);
        assert_eq!(symmetric_deviation(1.0, 2.0), 0.5);
    }

    #[test]
    fn file_names_are_sanitized() {
        assert_eq!(file_safe("1e-3"), "1e-3");
        assert_eq!(file_safe("a/b c"), "a_b_c");
    }
}
