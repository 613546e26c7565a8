//! Subcommand bodies. Each one resolves and validates every input, computes
//! its results in memory and returns the files to write, so nothing touches
//! the output directory until everything has succeeded.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use treecoal::compare::{energy_distance, ks_1d, schedule_diagnostics, ConvergenceReport, MatrixEnsemble};
use treecoal::gwve::{
    beta_tilde, check_a3, drift_stats, extract_limit_params, sample_gwve, uniform_grid, Environment, Extraction,
    JumpConvention, RescaledPath,
};
use treecoal::limit::{limit_distance_matrix, sample_coalescent, LimitParams};
use treecoal::rng::stream;
use treecoal::schedule::from_profile;
use treecoal::tree::render_svg;
use treecoal::{DegreeSchedule, Tree};

use crate::config::{EnvSource, ExperimentConfig, ExtractSpec, Family, LimitSource, ScheduleSource};
use crate::failure::{Context, Failure, Kind};

/// Stream indices at or above this are reserved for auxiliary draws, so
/// they never collide with replicate streams.
const AUX: u64 = 1 << 62;
const AUX_SCHEDULE: u64 = AUX;
const AUX_EXTRACT: u64 = AUX + (1 << 40);
const AUX_PERMUTATION: u64 = AUX + (2 << 40);

/// Named file contents, written in order by the caller.
pub type Outputs = Vec<(String, Vec<u8>)>;

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::new(Kind::Io, format!("cannot open {}: {e}", path.display())))
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> treecoal::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serialisable value");
    v.push(b'\n');
    v
}

fn load_environment(src: &EnvSource) -> Result<Environment, Failure> {
    match src {
        EnvSource::File(p) => Environment::from_json_reader(open(p)?).context(format!("environment {}", p.display())),
        EnvSource::Inline(spec) => Environment::from_spec(spec.clone()).context("environment"),
    }
}

/// The first of `attempts` independent paths that survives to generation `n`.
fn surviving_sample(env: &Environment, seed: u64, base: u64, attempts: u64) -> Result<(RescaledPath, DegreeSchedule), Failure> {
    for a in 0..attempts {
        let (path, schedule) = sample_gwve(env, &mut stream(seed, base + a))?;
        if !path.extinct() {
            return Ok((path, schedule));
        }
    }
    Err(Failure::new(Kind::Validation, format!("the branching process died out in all {attempts} attempts")))
}

pub fn load_schedule(cfg: &ExperimentConfig) -> Result<Arc<DegreeSchedule>, Failure> {
    let src = cfg.schedule.as_ref().ok_or_else(|| Failure::new(Kind::Config, "no schedule source configured"))?;
    let schedule = match src {
        ScheduleSource::File(p) => DegreeSchedule::from_json_reader(open(p)?).context(format!("schedule {}", p.display()))?,
        ScheduleSource::Family(Family::SmallExample) => DegreeSchedule::small_example(),
        ScheduleSource::Family(Family::Path { n }) => {
            if *n == 0 {
                return Err(Failure::new(Kind::Validation, "path family needs n >= 1"));
            }
            DegreeSchedule::path(*n)
        }
        ScheduleSource::Family(Family::Kingman { n, m }) => {
            if *m < 3 || *n == 0 {
                return Err(Failure::new(Kind::Validation, "kingman family needs m >= 3 and n >= 1"));
            }
            DegreeSchedule::kingman(*n, *m)
        }
        ScheduleSource::Profile(p) => from_profile(|t| p.shape.eval(t), p.n, p.scale, &p.mix).context("profile schedule")?,
        ScheduleSource::Gwve(g) => {
            let env = load_environment(&g.environment)?;
            surviving_sample(&env, cfg.seed, AUX_SCHEDULE, g.attempts)?.1
        }
    };
    schedule.ensure_valid().context("schedule")?;
    Ok(Arc::new(schedule))
}

fn extract(env: &Environment, spec: &ExtractSpec, seed: u64) -> Result<Extraction, Failure> {
    let (path, _) = surviving_sample(env, seed, AUX_EXTRACT, spec.attempts)?;
    plug_in(env, &path, spec.jump_threshold, spec.convention, spec.tail_cutoff, spec.grid_points)
}

fn plug_in(
    env: &Environment,
    path: &RescaledPath,
    jump_threshold: f64,
    convention: JumpConvention,
    tail_cutoff: f64,
    grid_points: usize,
) -> Result<Extraction, Failure> {
    if grid_points < 2 {
        return Err(Failure::new(Kind::Config, "grid_points must be at least 2"));
    }
    let stats = drift_stats(env)?;
    let beta = stats.beta_grid(&uniform_grid(grid_points));
    let (bt, mut warnings) = beta_tilde(&beta, &stats.tail.above(tail_cutoff));
    let mut out = extract_limit_params(path, &bt, jump_threshold, convention).context("extraction")?;
    warnings.append(&mut out.warnings);
    out.warnings = warnings;
    Ok(out)
}

pub fn load_limit(cfg: &ExperimentConfig) -> Result<(LimitParams, Vec<String>), Failure> {
    let src = cfg.limit.as_ref().ok_or_else(|| Failure::new(Kind::Config, "no limit parameter source configured"))?;
    match src {
        LimitSource::File(p) => Ok((LimitParams::from_json_reader(open(p)?).context(format!("limit parameters {}", p.display()))?, vec![])),
        LimitSource::Params(params) => {
            params.validate().context("limit parameters")?;
            Ok((params.clone(), vec![]))
        }
        LimitSource::Extract(spec) => {
            let env = load_environment(&spec.environment)?;
            let x = extract(&env, spec, cfg.seed)?;
            Ok((x.params, x.warnings))
        }
    }
}

fn upper_triangle<T: Copy>(m: &[Vec<T>], f: impl Fn(T) -> f64) -> Vec<f64> {
    let k = m.len();
    let mut v = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for q in 0..k {
        for r in q + 1..k {
            v.push(f(m[q][r]));
        }
    }
    v
}

fn discrete_ensemble(cfg: &ExperimentConfig, schedule: &Arc<DegreeSchedule>) -> Result<MatrixEnsemble, Failure> {
    let n = schedule.n as f64;
    let mut ens = MatrixEnsemble::new(cfg.k, 1.0 / n);
    if cfg.k == 0 {
        return Ok(ens);
    }
    let rows: Vec<treecoal::Result<Vec<f64>>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, r);
            let tree = Tree::sample(Arc::clone(schedule), &mut rng)?;
            let vertices = tree.sample_uniform_vertices(cfg.k, &mut rng);
            let m = tree.distance_matrix(&vertices)?;
            Ok(upper_triangle(&m, |d| d as f64 / n))
        })
        .collect();
    for row in rows {
        ens.samples.push(row?);
    }
    Ok(ens)
}

fn limit_ensemble(cfg: &ExperimentConfig, params: &LimitParams) -> Result<MatrixEnsemble, Failure> {
    let mut ens = MatrixEnsemble::new(cfg.k, 1.0);
    if cfg.k == 0 {
        return Ok(ens);
    }
    let rows: Vec<treecoal::Result<Vec<f64>>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let trace = sample_coalescent(params, cfg.k, &mut stream(cfg.seed, r))?;
            Ok(upper_triangle(&limit_distance_matrix(&trace), |d| d))
        })
        .collect();
    for row in rows {
        ens.samples.push(row?);
    }
    Ok(ens)
}

fn ensemble_files(prefix: &str, ens: &MatrixEnsemble) -> Result<Outputs, Failure> {
    Ok(vec![
        (format!("{prefix}.json"), to_bytes(|b| ens.to_json_writer(b))?),
        (format!("{prefix}.csv"), to_bytes(|b| ens.write_csv(b))?),
    ])
}

pub fn sample_tree(cfg: &ExperimentConfig) -> Result<Outputs, Failure> {
    let schedule = load_schedule(cfg)?;
    let tree = Tree::sample(schedule, &mut stream(cfg.seed, 0))?;
    let mut out = vec![
        ("tree.csv".to_string(), to_bytes(|b| tree.write_csv(b))?),
        ("tree.bin".to_string(), to_bytes(|b| tree.write_binary(b))?),
    ];
    if cfg.render {
        out.push(("tree.svg".into(), render_svg(&tree).into_bytes()));
    }
    Ok(out)
}

pub fn render(cfg: &ExperimentConfig) -> Result<Outputs, Failure> {
    let schedule = load_schedule(cfg)?;
    let tree = Tree::sample(schedule, &mut stream(cfg.seed, 0))?;
    Ok(vec![("tree.svg".into(), render_svg(&tree).into_bytes())])
}

pub fn matrix(cfg: &ExperimentConfig) -> Result<Outputs, Failure> {
    let schedule = load_schedule(cfg)?;
    ensemble_files("matrices", &discrete_ensemble(cfg, &schedule)?)
}

pub fn limit_matrix(cfg: &ExperimentConfig) -> Result<Outputs, Failure> {
    let (params, warnings) = load_limit(cfg)?;
    let ens = limit_ensemble(cfg, &params)?;
    let mut out = ensemble_files("limit_matrices", &ens)?;
    if cfg.k > 0 {
        let trace = sample_coalescent(&params, cfg.k, &mut stream(cfg.seed, 0))?;
        out.push(("limit_events.jsonl".into(), to_bytes(|b| trace.write_events_jsonl(b))?));
    }
    out.push(("limit_params.json".into(), to_bytes(|b| params.to_json_writer(b))?));
    if !warnings.is_empty() {
        out.push(("warnings.json".into(), json_bytes(&warnings)));
    }
    Ok(out)
}

pub fn compare(cfg: &ExperimentConfig) -> Result<(Outputs, ConvergenceReport), Failure> {
    let mut out = Outputs::new();
    let (discrete, limit, schedule, params) = match &cfg.ensembles {
        Some(pair) => {
            let d = MatrixEnsemble::from_json_reader(open(&pair.discrete)?).context(format!("ensemble {}", pair.discrete.display()))?;
            let l = MatrixEnsemble::from_json_reader(open(&pair.limit)?).context(format!("ensemble {}", pair.limit.display()))?;
            let schedule = cfg.schedule.as_ref().map(|_| load_schedule(cfg)).transpose()?;
            let params = cfg.limit.as_ref().map(|_| load_limit(cfg).map(|p| p.0)).transpose()?;
            (d, l, schedule, params)
        }
        None => {
            let schedule = load_schedule(cfg)?;
            let (params, _) = load_limit(cfg)?;
            let d = discrete_ensemble(cfg, &schedule)?;
            let l = limit_ensemble(cfg, &params)?;
            out.extend(ensemble_files("matrices", &d)?);
            out.extend(ensemble_files("limit_matrices", &l)?);
            (d, l, Some(schedule), Some(params))
        }
    };
    if discrete.k != limit.k {
        return Err(treecoal::Error::MismatchedK(discrete.k, limit.k).into());
    }
    let mut report = ConvergenceReport::new(cfg.thresholds);
    if discrete.dim() > 0 && !discrete.is_empty() && !limit.is_empty() {
        let e = energy_distance(&discrete, &limit, cfg.permutations, &mut stream(cfg.seed, AUX_PERMUTATION))?;
        report.add_p_value(
            "energy",
            e.p_value,
            format!("energy statistic {:.6} over {} permutations", e.statistic, cfg.permutations),
        );
        for q in 0..discrete.k {
            for r in q + 1..discrete.k {
                let t = ks_1d(&discrete.entry(q, r), &limit.entry(q, r))?;
                report.add_p_value(&format!("ks_{}_{}", q + 1, r + 1), t.p_value, format!("KS statistic {:.6}", t.statistic));
            }
        }
    }
    if let Some(s) = &schedule {
        schedule_diagnostics(&mut report, s, params.as_ref(), &cfg.diagnostics)?;
    }
    out.push(("report.json".into(), to_bytes(|b| report.to_json_writer(b))?));
    Ok((out, report))
}

pub fn check(cfg: &ExperimentConfig) -> Result<(Outputs, ConvergenceReport), Failure> {
    let src = cfg.schedule.as_ref().ok_or_else(|| Failure::new(Kind::Config, "no schedule source configured"))?;
    // structural violations are reported in full before failing
    if let ScheduleSource::File(p) = src {
        let raw = DegreeSchedule::from_json_reader(open(p)?).context(format!("schedule {}", p.display()))?;
        let v = raw.validate();
        if !v.is_valid() {
            return Err(Failure::new(Kind::Validation, format!("invalid schedule {}: {:?}", p.display(), v)));
        }
    }
    let schedule = load_schedule(cfg)?;
    let params = cfg.limit.as_ref().map(|_| load_limit(cfg).map(|p| p.0)).transpose()?;
    let mut report = ConvergenceReport::new(cfg.thresholds);
    schedule_diagnostics(&mut report, &schedule, params.as_ref(), &cfg.diagnostics)?;
    Ok((vec![("check.json".into(), to_bytes(|b| report.to_json_writer(b))?)], report))
}

#[derive(Serialize)]
struct GwveSummary {
    replicates: usize,
    extinct: usize,
    first_surviving: Option<usize>,
    small_jump_level: f64,
    small_jump_mean: f64,
    extraction_warnings: Vec<String>,
    jump_times: Vec<f64>,
}

pub fn gwve(cfg: &ExperimentConfig) -> Result<Outputs, Failure> {
    let src = cfg.environment.as_ref().ok_or_else(|| Failure::new(Kind::Config, "no environment configured"))?;
    let env = load_environment(src)?;
    let a3 = check_a3(&env, cfg.a3_level)?;
    let stats = drift_stats(&env)?;
    let samples: Vec<treecoal::Result<(RescaledPath, DegreeSchedule)>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| sample_gwve(&env, &mut stream(cfg.seed, r)))
        .collect();
    let samples: Vec<(RescaledPath, DegreeSchedule)> = samples.into_iter().collect::<treecoal::Result<_>>()?;

    let mut paths = String::from("replicate,i,t,z,x\n");
    for (r, (p, _)) in samples.iter().enumerate() {
        for (i, (&z, t)) in p.z.iter().zip(p.breakpoints()).enumerate() {
            paths.push_str(&format!("{r},{i},{t},{z},{}\n", z as f64 / p.ell));
        }
    }
    let grid = uniform_grid(100);
    let mut out = vec![
        ("paths.csv".to_string(), paths.into_bytes()),
        ("drift.csv".to_string(), to_bytes(|b| stats.write_csv(&grid, b))?),
    ];

    let first = samples.iter().position(|(p, _)| !p.extinct());
    let mut summary = GwveSummary {
        replicates: samples.len(),
        extinct: samples.iter().filter(|(p, _)| p.extinct()).count(),
        first_surviving: first,
        small_jump_level: cfg.a3_level,
        small_jump_mean: a3,
        extraction_warnings: vec![],
        jump_times: vec![],
    };
    if let Some(r) = first {
        let (path, schedule) = &samples[r];
        out.push(("schedule.json".into(), to_bytes(|b| schedule.to_json_writer(b))?));
        let spec = match &cfg.limit {
            Some(LimitSource::Extract(s)) => s.clone(),
            _ => ExtractSpec {
                environment: src.clone(),
                jump_threshold: 0.5,
                convention: JumpConvention::PostJump,
                tail_cutoff: 0.5,
                grid_points: 200,
                attempts: 1,
            },
        };
        let x = plug_in(&env, path, spec.jump_threshold, spec.convention, spec.tail_cutoff, spec.grid_points)?;
        out.push(("limit_params.json".into(), to_bytes(|b| x.params.to_json_writer(b))?));
        summary.extraction_warnings = x.warnings;
        summary.jump_times = x.jump_times;
    }
    out.push(("gwve.json".into(), json_bytes(&summary)));
    Ok(out)
}
