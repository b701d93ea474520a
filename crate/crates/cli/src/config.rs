//! Run configuration: defaults, presets, `key = value` files and flag
//! overrides, all funnelled through [`RunConfig::set`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dce_core::dynamics::auto_cutoff;
use dce_core::statespace::{DetectorKind, SystemSpec, Tolerances};

use crate::error::CliError;

/// Environment variable naming the directory for outputs without an explicit path.
pub const OUTPUT_DIR_VAR: &str = "DCE_OUTPUT_DIR";
pub const DEFAULT_SAMPLES: usize = 600;
/// Photon columns written unless `verbose` or `report_photons` says otherwise.
pub const DEFAULT_REPORT_PHOTONS: usize = 30;
/// Cutoff doublings allowed when the cutoff was chosen automatically.
pub const AUTO_DOUBLINGS: u32 = 4;

pub const PRESET_G: f64 = 1e-2;
pub const PRESET_EPSILON: f64 = 1e-3;
pub const PRESET_EPS_T: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    AnalyticHo,
    EmptyCavity,
    Spectral,
    Compare,
    Preset,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::AnalyticHo => "analytic-ho",
            Mode::EmptyCavity => "empty-cavity",
            Mode::Spectral => "spectral",
            Mode::Compare => "compare",
            Mode::Preset => "preset",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Mode::Simulate,
            Mode::AnalyticHo,
            Mode::EmptyCavity,
            Mode::Spectral,
            Mode::Compare,
            Mode::Preset,
        ]
        .into_iter()
        .find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `g_j = g sqrt(j)`, three levels by default.
    Fig1,
    /// Two-level ensemble couplings, three levels by default.
    Fig2,
    /// `g_j = g sqrt(j)` with twelve levels.
    Fig3a,
    /// Two-level ensemble couplings with twelve levels.
    Fig3b,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Preset::Fig1, Preset::Fig2, Preset::Fig3a, Preset::Fig3b]
            .into_iter()
            .find(|p| p.name() == name)
    }

    pub fn detector(self) -> DetectorKind {
        match self {
            Preset::Fig1 | Preset::Fig3a => DetectorKind::Ladder,
            Preset::Fig2 | Preset::Fig3b => DetectorKind::TwoLevelEnsemble,
        }
    }

    pub fn default_levels(self) -> usize {
        match self {
            Preset::Fig1 | Preset::Fig2 => 3,
            Preset::Fig3a | Preset::Fig3b => 12,
        }
    }
}

/// End of the time grid, either as `eps * t` or as a plain time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    EpsT(f64),
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cutoff {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub preset: Option<Preset>,
    pub detector: DetectorKind,
    pub levels: usize,
    pub g: f64,
    pub epsilon: f64,
    pub horizon: Horizon,
    pub cutoff: Cutoff,
    pub tolerances: Tolerances,
    pub samples: usize,
    pub output: Option<PathBuf>,
    pub report_photons: Option<usize>,
    /// Write the whole photon distribution.
    pub verbose: bool,
    /// Largest excitation number in the spectral report.
    pub max_excitation: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Simulate,
            preset: None,
            detector: DetectorKind::Ladder,
            levels: 3,
            g: PRESET_G,
            epsilon: PRESET_EPSILON,
            horizon: Horizon::EpsT(PRESET_EPS_T),
            cutoff: Cutoff::Auto,
            tolerances: Tolerances::default(),
            samples: DEFAULT_SAMPLES,
            output: None,
            report_photons: None,
            verbose: false,
            max_excitation: 20,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

impl RunConfig {
    /// Defaults with a preset's parameters filled in.
    pub fn for_preset(preset: Preset) -> Self {
        Self {
            mode: Mode::Preset,
            preset: Some(preset),
            detector: preset.detector(),
            levels: preset.default_levels(),
            ..Self::default()
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key.trim() {
            "mode" => {
                self.mode = Mode::from_name(value)
                    .ok_or_else(|| CliError::Config(format!("unknown mode {value:?}")))?
            }
            "preset" => {
                self.preset = Some(
                    Preset::from_name(value)
                        .ok_or_else(|| CliError::Config(format!("unknown preset {value:?}")))?,
                )
            }
            "detector" => {
                self.detector = DetectorKind::from_name(value)
                    .ok_or_else(|| CliError::Config(format!("unknown detector {value:?}")))?
            }
            "levels" => self.levels = parse_num(key, value)?,
            "g" => self.g = parse_num(key, value)?,
            "epsilon" => self.epsilon = parse_num(key, value)?,
            "eps_t_final" => self.horizon = Horizon::EpsT(parse_num(key, value)?),
            "t_final" => self.horizon = Horizon::Time(parse_num(key, value)?),
            "cutoff" => {
                self.cutoff = if value == "auto" {
                    Cutoff::Auto
                } else {
                    Cutoff::Fixed(parse_num(key, value)?)
                }
            }
            "rel_tol" => self.tolerances.rel_tol = parse_num(key, value)?,
            "abs_tol" => self.tolerances.abs_tol = parse_num(key, value)?,
            "tail_threshold" => self.tolerances.tail_threshold = parse_num(key, value)?,
            "samples" => self.samples = parse_num(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            "report_photons" => self.report_photons = Some(parse_num(key, value)?),
            "verbose" => self.verbose = parse_bool(key, value)?,
            "max_excitation" => self.max_excitation = parse_num(key, value)?,
            other => return Err(CliError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Builds the effective configuration from an optional file and ordered
    /// overrides; later settings win. A preset named anywhere supplies the
    /// starting values.
    pub fn resolve(
        file: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<Self, CliError> {
        let mut pairs = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                parse_pairs(&text)?
            }
            None => Vec::new(),
        };
        pairs.extend(overrides.iter().cloned());

        let preset = pairs
            .iter()
            .rev()
            .find(|(k, _)| k == "preset")
            .map(|(_, v)| {
                Preset::from_name(v).ok_or_else(|| CliError::Config(format!("unknown preset {v:?}")))
            })
            .transpose()?;
        let mut cfg = preset.map_or_else(Self::default, Self::for_preset);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match (self.mode, self.preset) {
            (Mode::Preset, None) => {
                return Err(CliError::Config("preset mode needs a preset id".into()))
            }
            (Mode::Preset, Some(p)) => {
                let fixed = self.g == PRESET_G
                    && self.epsilon == PRESET_EPSILON
                    && self.detector == p.detector()
                    && self.horizon == Horizon::EpsT(PRESET_EPS_T);
                if !fixed {
                    return Err(CliError::Config(format!(
                        "preset {} fixes detector {}, g = {PRESET_G}, epsilon = {PRESET_EPSILON} \
                         and eps_t_final = {PRESET_EPS_T}",
                        p.name(),
                        p.detector().name()
                    )));
                }
            }
            (mode, Some(p)) => {
                return Err(CliError::Config(format!(
                    "preset {} only applies in preset mode, not {}",
                    p.name(),
                    mode.name()
                )))
            }
            (_, None) => {}
        }
        if self.samples < 1 {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        if self.mode == Mode::Compare
            && self.g != 0.0
            && self.detector == DetectorKind::TwoLevelEnsemble
        {
            return Err(CliError::Config(
                "compare needs g = 0 or a detector with g_j = g sqrt(j); \
                 the two-level ensemble has no closed form"
                    .into(),
            ));
        }
        if let Mode::Spectral = self.mode {
            if self.levels < 1 {
                return Err(CliError::Config("levels must be at least 1".into()));
            }
            return Ok(());
        }
        self.system_spec()?.validate()?;
        Ok(())
    }

    pub fn t_final(&self) -> Result<f64, CliError> {
        match self.horizon {
            Horizon::Time(t) => Ok(t),
            Horizon::EpsT(_) if self.epsilon == 0.0 => Err(CliError::Config(
                "eps_t_final needs a nonzero epsilon; use t_final".into(),
            )),
            Horizon::EpsT(x) => Ok(x / self.epsilon.abs()),
        }
    }

    /// Physical system with the cutoff resolved.
    pub fn system_spec(&self) -> Result<SystemSpec, CliError> {
        let mut spec = SystemSpec {
            detector: self.detector,
            levels: self.levels,
            g: self.g,
            epsilon: self.epsilon,
            fock_cutoff: 2,
            t_final: self.t_final()?,
            tolerances: self.tolerances,
        };
        spec.fock_cutoff = match self.cutoff {
            Cutoff::Auto => auto_cutoff(&spec),
            Cutoff::Fixed(k) => k,
        };
        Ok(spec)
    }

    pub fn max_doublings(&self) -> u32 {
        match self.cutoff {
            Cutoff::Auto => AUTO_DOUBLINGS,
            Cutoff::Fixed(_) => 0,
        }
    }

    /// Highest photon number written for a run that used `cutoff`.
    pub fn report_photons_for(&self, cutoff: usize) -> usize {
        if self.verbose {
            cutoff
        } else {
            self.report_photons
                .unwrap_or(DEFAULT_REPORT_PHOTONS)
                .min(cutoff)
        }
    }

    /// File name used when no output path is given.
    pub fn default_file_name(&self) -> String {
        let det = self.detector.name();
        let n = self.levels;
        match self.mode {
            Mode::Simulate => format!("simulate_{det}_N{n}.csv"),
            Mode::Preset => format!(
                "{}_N{n}.csv",
                self.preset.map_or("preset", Preset::name)
            ),
            Mode::AnalyticHo => "analytic_ho.csv".into(),
            Mode::EmptyCavity => "empty_cavity.csv".into(),
            Mode::Spectral => format!("spectral_{det}_N{n}.txt"),
            Mode::Compare => format!("compare_{det}_N{n}.csv"),
        }
    }

    /// Explicit output path, or the default name inside `dir`.
    pub fn output_path(&self, dir: &Path) -> PathBuf {
        self.output
            .clone()
            .unwrap_or_else(|| dir.join(self.default_file_name()))
    }

    /// Effective configuration as a file that [`RunConfig::resolve`] reads back
    /// to the same value.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("mode", self.mode.name().into());
        if let Some(p) = self.preset {
            line("preset", p.name().into());
        }
        line("detector", self.detector.name().into());
        line("levels", self.levels.to_string());
        line("g", format!("{:?}", self.g));
        line("epsilon", format!("{:?}", self.epsilon));
        match self.horizon {
            Horizon::EpsT(x) => line("eps_t_final", format!("{x:?}")),
            Horizon::Time(t) => line("t_final", format!("{t:?}")),
        }
        line(
            "cutoff",
            match self.cutoff {
                Cutoff::Auto => "auto".into(),
                Cutoff::Fixed(k) => k.to_string(),
            },
        );
        line("rel_tol", format!("{:?}", self.tolerances.rel_tol));
        line("abs_tol", format!("{:?}", self.tolerances.abs_tol));
        line("tail_threshold", format!("{:?}", self.tolerances.tail_threshold));
        line("samples", self.samples.to_string());
        if let Some(out) = &self.output {
            line("output", out.display().to_string());
        }
        if let Some(k) = self.report_photons {
            line("report_photons", k.to_string());
        }
        line("verbose", self.verbose.to_string());
        line("max_excitation", self.max_excitation.to_string());
        s
    }
}

/// Splits `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {}: expected key = value, got {raw:?}", i + 1))
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}
