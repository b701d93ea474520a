use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dce_cli::config::OUTPUT_DIR_VAR;
use dce_cli::{execute, execute_check, sweep, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "dce", version, about = "Photon generation from vacuum in a modulated cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the amplitude equations and write observables as CSV.
    Simulate(Common),
    /// Evaluate a closed-form model on the time grid.
    Analytic {
        #[arg(value_enum)]
        model: Model,
        #[command(flatten)]
        common: Common,
    },
    /// Write the excitation-block report and the photon-cap prediction.
    Spectral(Common),
    /// Simulate and write numerical and closed-form columns side by side.
    Compare(Common),
    /// Reproduce one of the figure configurations.
    Preset {
        /// fig1, fig2, fig3a or fig3b.
        id: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run one configuration per value of a key, in parallel.
    Sweep {
        /// `key=v1,v2,...`, for example `levels=2,3,4,5`.
        #[arg(long)]
        vary: String,
        /// Mode of every run in the sweep.
        #[arg(long, default_value = "simulate")]
        mode: String,
        /// Directory for the per-run files.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Rerun with a doubled cutoff and tighter tolerance and compare.
    Check(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Ho,
    EmptyCavity,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// `key = value` file; flags override its settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset supplying the figure parameters (for `check` and `sweep`).
    #[arg(long)]
    preset: Option<String>,
    /// ladder, dicke or ho.
    #[arg(long)]
    detector: Option<String>,
    #[arg(long, short = 'n')]
    levels: Option<usize>,
    #[arg(long, short = 'g')]
    g: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// End of the time grid in units of 1/epsilon.
    #[arg(long)]
    eps_t: Option<f64>,
    /// End of the time grid.
    #[arg(long, conflicts_with = "eps_t")]
    t_final: Option<f64>,
    /// Fock cutoff, or `auto`.
    #[arg(long)]
    cutoff: Option<String>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    tail_threshold: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Output file, `-` for standard output.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Highest photon number written.
    #[arg(long)]
    report_photons: Option<usize>,
    /// Write the full photon distribution.
    #[arg(long, short = 'v')]
    verbose: bool,
    #[arg(long)]
    max_excitation: Option<usize>,
    /// Also write the effective configuration to this file.
    #[arg(long)]
    save_config: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        let mut put = |k: &str, val: Option<String>| {
            if let Some(val) = val {
                v.push((k.to_string(), val));
            }
        };
        put("preset", self.preset.clone());
        put("detector", self.detector.clone());
        put("levels", self.levels.map(|x| x.to_string()));
        put("g", self.g.map(|x| x.to_string()));
        put("epsilon", self.epsilon.map(|x| x.to_string()));
        put("eps_t_final", self.eps_t.map(|x| x.to_string()));
        put("t_final", self.t_final.map(|x| x.to_string()));
        put("cutoff", self.cutoff.clone());
        put("rel_tol", self.rel_tol.map(|x| x.to_string()));
        put("abs_tol", self.abs_tol.map(|x| x.to_string()));
        put("tail_threshold", self.tail_threshold.map(|x| x.to_string()));
        put("samples", self.samples.map(|x| x.to_string()));
        put("output", self.output.as_ref().map(|p| p.display().to_string()));
        put("report_photons", self.report_photons.map(|x| x.to_string()));
        put("verbose", self.verbose.then(|| "true".to_string()));
        put("max_excitation", self.max_excitation.map(|x| x.to_string()));
        v
    }

    fn resolve(&self, mode: &str) -> Result<RunConfig, CliError> {
        let mut pairs = self.overrides();
        pairs.push(("mode".into(), mode.into()));
        let cfg = RunConfig::resolve(self.config.as_deref(), &pairs)?;
        if let Some(path) = &self.save_config {
            std::fs::write(path, cfg.to_config_string()).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
        }
        Ok(cfg)
    }
}

fn output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_VAR).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("dce: {e}");
    ExitCode::from(e.exit_code())
}

fn run_one(common: &Common, mode: &str, check: bool) -> ExitCode {
    let result = common.resolve(mode).and_then(|cfg| {
        if check {
            execute_check(&cfg, &output_dir())
        } else {
            execute(&cfg, &output_dir())
        }
    });
    match result {
        Ok(report) => {
            eprintln!("{}: {}", report.path.display(), report.summary);
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn run_sweep(vary: &str, mode: &str, dir: Option<PathBuf>, common: &Common) -> ExitCode {
    let Some((key, values)) = vary.split_once('=') else {
        return fail(&CliError::Config(format!("--vary expects key=v1,v2,..., got {vary:?}")));
    };
    let values: Vec<String> = values.split(',').map(|s| s.trim().to_string()).collect();
    let mut pairs = common.overrides();
    pairs.push(("mode".into(), mode.into()));
    let dir = dir.unwrap_or_else(output_dir);
    let mut code = 0;
    for (value, result) in sweep(common.config.as_deref(), &pairs, key.trim(), &values, &dir) {
        match result {
            Ok(report) => eprintln!("{key}={value}: {}: {}", report.path.display(), report.summary),
            Err(e) => {
                eprintln!("{key}={value}: {e}");
                if code == 0 {
                    code = e.exit_code();
                }
            }
        }
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(c) => run_one(c, "simulate", false),
        Command::Analytic { model, common } => {
            let mode = match model {
                Model::Ho => "analytic-ho",
                Model::EmptyCavity => "empty-cavity",
            };
            run_one(common, mode, false)
        }
        Command::Spectral(c) => run_one(c, "spectral", false),
        Command::Compare(c) => run_one(c, "compare", false),
        Command::Preset { id, common } => {
            if common.preset.as_deref().is_some_and(|p| p != id) {
                return fail(&CliError::Config("conflicting preset ids".into()));
            }
            let common = Common {
                preset: Some(id.clone()),
                ..common.clone()
            };
            run_one(&common, "preset", false)
        }
        Command::Sweep {
            vary,
            mode,
            output_dir,
            common,
        } => run_sweep(vary, mode, output_dir.clone(), common),
        Command::Check(c) => {
            let mode = if c.preset.is_some() { "preset" } else { "simulate" };
            run_one(c, mode, true)
        }
    }
}
