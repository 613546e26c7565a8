//! Experiment configuration: a single JSON file whose fields can all be
//! overridden from the command line.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use treecoal::compare::{DiagnosticSettings, Thresholds};
use treecoal::gwve::{EnvironmentSpec, JumpConvention};
use treecoal::limit::LimitParams;
use treecoal::schedule::DegreeMix;

use crate::failure::{Failure, Kind};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub k: usize,
    pub schedule: Option<ScheduleSource>,
    pub limit: Option<LimitSource>,
    /// Environment for the `gwve` command.
    pub environment: Option<EnvSource>,
    /// Pre-computed ensembles for the `compare` command.
    pub ensembles: Option<EnsemblePair>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub render: bool,
    pub threads: Option<usize>,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub diagnostics: DiagnosticSettings,
    /// Truncation level `C` for the small-jump condition in `gwve`.
    #[serde(default = "default_a3_level")]
    pub a3_level: f64,
}

fn one() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_permutations() -> usize {
    999
}

fn default_a3_level() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSource {
    File(PathBuf),
    Family(Family),
    Profile(ProfileSpec),
    /// The first surviving sample of a branching process.
    Gwve(GwveSchedule),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    SmallExample,
    Path { n: usize },
    Kingman { n: usize, m: u64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub n: usize,
    pub scale: f64,
    pub shape: Shape,
    #[serde(default)]
    pub mix: DegreeMix,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Constant,
    /// `sin(pi t)`.
    Sine,
    /// Piecewise linear through `(t, value)` points.
    Points(Vec<(f64, f64)>),
}

impl Shape {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Shape::Constant => 1.0,
            Shape::Sine => (PI * t).sin(),
            Shape::Points(p) => {
                if p.is_empty() {
                    return 0.0;
                }
                if t <= p[0].0 {
                    return p[0].1;
                }
                for w in p.windows(2) {
                    if t <= w[1].0 {
                        let span = w[1].0 - w[0].0;
                        let f = if span > 0.0 { (t - w[0].0) / span } else { 1.0 };
                        return w[0].1 + f * (w[1].1 - w[0].1);
                    }
                }
                p[p.len() - 1].1
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GwveSchedule {
    pub environment: EnvSource,
    #[serde(default = "default_attempts")]
    pub attempts: u64,
}

fn default_attempts() -> u64 {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSource {
    File(PathBuf),
    Inline(EnvironmentSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LimitSource {
    File(PathBuf),
    Params(LimitParams),
    Extract(ExtractSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractSpec {
    pub environment: EnvSource,
    #[serde(default = "default_jump_threshold")]
    pub jump_threshold: f64,
    #[serde(default)]
    pub convention: JumpConvention,
    /// Jumps of the rescaled offspring below this size are left in the
    /// merge intensity.
    #[serde(default = "default_tail_cutoff")]
    pub tail_cutoff: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_attempts")]
    pub attempts: u64,
}

fn default_jump_threshold() -> f64 {
    0.5
}

fn default_tail_cutoff() -> f64 {
    0.5
}

fn default_grid_points() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsemblePair {
    pub discrete: PathBuf,
    pub limit: PathBuf,
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub k: Option<usize>,
    pub out: Option<PathBuf>,
    pub render: bool,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Reads the config (if any), applies overrides, resolves relative
    /// paths against the config's directory and checks the invariants.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, Failure> {
        let mut cfg = match path {
            Some(p) => {
                let file = File::open(p).map_err(|e| Failure::new(Kind::Io, format!("cannot open config {}: {e}", p.display())))?;
                let mut cfg: ExperimentConfig = serde_json::from_reader(BufReader::new(file))
                    .map_err(|e| Failure::new(Kind::Config, format!("invalid config {}: {e}", p.display())))?;
                let base = p.parent().unwrap_or(Path::new(""));
                cfg.resolve_paths(base);
                cfg
            }
            None => ExperimentConfig { replicates: 1, out: default_out(), permutations: default_permutations(), a3_level: 1.0, ..Default::default() },
        };
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(r) = overrides.replicates {
            cfg.replicates = r;
        }
        if let Some(k) = overrides.k {
            cfg.k = k;
        }
        if let Some(o) = &overrides.out {
            cfg.out = o.clone();
        }
        if overrides.render {
            cfg.render = true;
        }
        if overrides.threads.is_some() {
            cfg.threads = overrides.threads;
        }
        if cfg.replicates == 0 {
            return Err(Failure::new(Kind::Config, "replicates must be at least 1"));
        }
        if cfg.threads == Some(0) {
            return Err(Failure::new(Kind::Config, "threads must be at least 1"));
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let fix_env = |e: &mut EnvSource| {
            if let EnvSource::File(p) = e {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        match &mut self.schedule {
            Some(ScheduleSource::File(p)) => fix(p),
            Some(ScheduleSource::Gwve(g)) => fix_env(&mut g.environment),
            _ => {}
        }
        match &mut self.limit {
            Some(LimitSource::File(p)) => fix(p),
            Some(LimitSource::Extract(x)) => fix_env(&mut x.environment),
            _ => {}
        }
        if let Some(e) = &mut self.environment {
            fix_env(e);
        }
        if let Some(pair) = &mut self.ensembles {
            fix(&mut pair.discrete);
            fix(&mut pair.limit);
        }
    }
}
