//! Galton–Watson processes in varying environment, their trees as degree
//! schedules, the rescaled drift statistics, and plug-in limit parameters.
//!
//! Generations are numbered `1..=n`; generation `i` has offspring law
//! `pmfs[i - 1]` and produces `Z_i` from `Z_{i-1}`. Cumulative statistics at
//! time `t` sum generations `1..=floor(n * gamma(t))`.

use std::io::{Read, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::limit::{Atom, BirthLaw, LimitParams, MergeIntensity};
use crate::schedule::{DegreeSchedule, Row};
use crate::{Error, Result};

/// Offspring law with finite support, as `(value, probability)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pmf {
    pub points: Vec<(u64, f64)>,
}

impl Pmf {
    pub fn dirac(value: u64) -> Self {
        Pmf { points: vec![(value, 1.0)] }
    }

    /// `P(0) = P(2) = 1/2`.
    pub fn binary() -> Self {
        Pmf { points: vec![(0, 0.5), (2, 0.5)] }
    }

    /// `P(j) = 2^{-j-1}`, cut where the remaining tail drops below `tail`
    /// and renormalised. Returns the pmf and the mass cut off.
    pub fn geometric(tail: f64) -> (Self, f64) {
        let mut points = Vec::new();
        let mut rest = 1.0;
        let mut j = 0;
        while rest >= tail && j < 2000 {
            let p = 0.5f64.powi(j as i32 + 1);
            points.push((j, p));
            rest -= p;
            j += 1;
        }
        let cut = rest.max(0.0);
        (Pmf { points }.renormalised(), cut)
    }

    /// Poisson with the given mean, cut like [`Pmf::geometric`].
    pub fn poisson(mean: f64, tail: f64) -> (Self, f64) {
        let mut points = Vec::new();
        let mut p = (-mean).exp();
        let mut rest = 1.0;
        let mut j = 0u64;
        while (rest >= tail || (j as f64) < mean) && j < 100_000 {
            points.push((j, p));
            rest -= p;
            j += 1;
            p *= mean / j as f64;
        }
        let cut = rest.max(0.0);
        (Pmf { points }.renormalised(), cut)
    }

    fn renormalised(mut self) -> Self {
        let total: f64 = self.points.iter().map(|p| p.1).sum();
        for p in &mut self.points {
            p.1 /= total;
        }
        self
    }

    pub fn mean(&self) -> f64 {
        self.expect(|j| j as f64)
    }

    pub fn expect(&self, f: impl Fn(u64) -> f64) -> f64 {
        self.points.iter().map(|&(j, p)| p * f(j)).sum()
    }

    fn validate(&self, generation: usize) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidEnvironment(format!("generation {generation}: empty pmf")));
        }
        if self.points.iter().any(|p| !(p.1 >= 0.0 && p.1.is_finite())) {
            return Err(Error::InvalidEnvironment(format!("generation {generation}: negative or non-finite probability")));
        }
        let total: f64 = self.points.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidEnvironment(format!("generation {generation}: probabilities sum to {total}")));
        }
        Ok(())
    }
}

/// Increasing bijection of `[0,1]` given by a piecewise-linear grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeChange {
    pub grid: Vec<(f64, f64)>,
}

impl TimeChange {
    pub fn identity() -> Self {
        TimeChange { grid: vec![(0.0, 0.0), (1.0, 1.0)] }
    }

    pub fn apply(&self, t: f64) -> f64 {
        interpolate(&self.grid, t, |p| p.0, |p| p.1)
    }

    pub fn inverse(&self, s: f64) -> f64 {
        interpolate(&self.grid, s, |p| p.1, |p| p.0)
    }

    fn validate(&self) -> Result<()> {
        let g = &self.grid;
        let ok = g.len() >= 2
            && g[0] == (0.0, 0.0)
            && g[g.len() - 1] == (1.0, 1.0)
            && g.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidEnvironment("time change must increase strictly from (0,0) to (1,1)".into()))
        }
    }
}

fn interpolate<P>(grid: &[P], x: f64, key: impl Fn(&P) -> f64, val: impl Fn(&P) -> f64) -> f64 {
    if x <= key(&grid[0]) {
        return val(&grid[0]);
    }
    let last = &grid[grid.len() - 1];
    if x >= key(last) {
        return val(last);
    }
    let b = grid.partition_point(|p| key(p) <= x);
    let (x0, y0) = (key(&grid[b - 1]), val(&grid[b - 1]));
    let (x1, y1) = (key(&grid[b]), val(&grid[b]));
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Named offspring laws used for every generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Generator {
    Dirac { value: u64 },
    Binary,
    Geometric {
        #[serde(default = "default_tail")]
        tail: f64,
    },
    Poisson {
        mean: f64,
        #[serde(default = "default_tail")]
        tail: f64,
    },
}

fn default_tail() -> f64 {
    1e-12
}

impl Generator {
    fn pmf(&self) -> (Pmf, f64) {
        match *self {
            Generator::Dirac { value } => (Pmf::dirac(value), 0.0),
            Generator::Binary => (Pmf::binary(), 0.0),
            Generator::Geometric { tail } => Pmf::geometric(tail),
            Generator::Poisson { mean, tail } => Pmf::poisson(mean, tail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Override {
    pub generation: usize,
    pub pmf: Pmf,
}

/// The on-disk form of an environment: explicit pmfs or a generator with
/// optional per-generation overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub n: usize,
    pub ell: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<TimeChange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmfs: Option<Vec<Pmf>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<Override>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub n: usize,
    pub ell: f64,
    pub gamma: TimeChange,
    /// `pmfs[i - 1]` is the offspring law of generation `i`.
    pub pmfs: Vec<Pmf>,
    /// Largest probability mass removed by truncating a heavy tail.
    pub truncated_mass: f64,
}

impl Environment {
    /// The same law for all `n` generations.
    pub fn homogeneous(n: usize, ell: f64, pmf: Pmf) -> Result<Self> {
        let env = Environment { n, ell, gamma: TimeChange::identity(), pmfs: vec![pmf; n], truncated_mass: 0.0 };
        env.validate()?;
        Ok(env)
    }

    pub fn from_spec(spec: EnvironmentSpec) -> Result<Self> {
        let (mut pmfs, truncated_mass) = match (spec.pmfs, spec.generator) {
            (Some(p), None) => (p, 0.0),
            (None, Some(g)) => {
                let (pmf, cut) = g.pmf();
                (vec![pmf; spec.n], cut)
            }
            _ => return Err(Error::InvalidEnvironment("give exactly one of pmfs and generator".into())),
        };
        for o in spec.overrides {
            if o.generation == 0 || o.generation > pmfs.len() {
                return Err(Error::InvalidEnvironment(format!("override for generation {} outside 1..={}", o.generation, spec.n)));
            }
            pmfs[o.generation - 1] = o.pmf;
        }
        let env = Environment {
            n: spec.n,
            ell: spec.ell,
            gamma: spec.gamma.unwrap_or_else(TimeChange::identity),
            pmfs,
            truncated_mass,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn to_spec(&self) -> EnvironmentSpec {
        EnvironmentSpec {
            n: self.n,
            ell: self.ell,
            gamma: Some(self.gamma.clone()),
            pmfs: Some(self.pmfs.clone()),
            generator: None,
            overrides: Vec::new(),
        }
    }

    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self> {
        let spec: EnvironmentSpec = serde_json::from_reader(reader)?;
        Environment::from_spec(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidEnvironment("n must be positive".into()));
        }
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return Err(Error::InvalidEnvironment(format!("scale must be positive, got {}", self.ell)));
        }
        if self.pmfs.len() != self.n {
            return Err(Error::InvalidEnvironment(format!("{} pmfs for {} generations", self.pmfs.len(), self.n)));
        }
        self.gamma.validate()?;
        for (i, p) in self.pmfs.iter().enumerate() {
            p.validate(i + 1)?;
        }
        Ok(())
    }

    /// Number of generations counted up to time `t`.
    pub fn generations_by(&self, t: f64) -> usize {
        let g = (self.n as f64 * self.gamma.apply(t.clamp(0.0, 1.0)) + 1e-9).floor() as usize;
        g.min(self.n)
    }

    /// Time at which generation `i` enters the cumulative sums.
    pub fn generation_time(&self, i: usize) -> f64 {
        self.gamma.inverse(i as f64 / self.n as f64)
    }

    fn rescaled(&self, j: u64) -> f64 {
        (j as f64 - 1.0) / self.ell
    }
}

/// Population sizes `Z_0 = 1, ..., Z_n` with the rescaling of time and space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledPath {
    pub z: Vec<u64>,
    pub ell: f64,
    pub gamma: TimeChange,
}

impl RescaledPath {
    pub fn n(&self) -> usize {
        self.z.len() - 1
    }

    /// `Z_{floor(n gamma(t))} / ell`.
    pub fn value(&self, t: f64) -> f64 {
        let n = self.n();
        let i = ((n as f64 * self.gamma.apply(t.clamp(0.0, 1.0)) + 1e-9).floor() as usize).min(n);
        self.z[i] as f64 / self.ell
    }

    /// Jump times `gamma^{-1}(i / n)` for `i = 0..=n`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..=self.n()).map(|i| self.gamma.inverse(i as f64 / n)).collect()
    }

    pub fn extinct(&self) -> bool {
        self.z.last() == Some(&0)
    }

    /// CSV with columns `i, t, z, x`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["i", "t", "z", "x"])?;
        for (i, (&z, t)) in self.z.iter().zip(self.breakpoints()).enumerate() {
            w.serialize((i, t, z, z as f64 / self.ell))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cap on a generation's size, so runaway environments fail cleanly.
pub const MAX_POPULATION: u64 = 50_000_000;

/// Samples `Z` and the tree's degree schedule. Row `i - 1` lists the
/// offspring counts of generation `i - 1`'s individuals in non-increasing
/// order; extinction ends the schedule.
pub fn sample_gwve<R: Rng + ?Sized>(env: &Environment, rng: &mut R) -> Result<(RescaledPath, DegreeSchedule)> {
    env.validate()?;
    let mut z = Vec::with_capacity(env.n + 1);
    z.push(1u64);
    let mut rows = Vec::new();
    let mut draws: Vec<u64> = Vec::new();
    for pmf in &env.pmfs {
        let prev = *z.last().unwrap();
        if prev == 0 {
            z.push(0);
            continue;
        }
        if prev > MAX_POPULATION {
            return Err(Error::InvalidEnvironment(format!("population exceeded {MAX_POPULATION}")));
        }
        let index = WeightedIndex::new(pmf.points.iter().map(|p| p.1))
            .map_err(|e| Error::InvalidEnvironment(e.to_string()))?;
        draws.clear();
        draws.extend((0..prev).map(|_| pmf.points[index.sample(rng)].0));
        draws.sort_unstable_by(|a, b| b.cmp(a));
        z.push(draws.iter().sum());
        rows.push(Row::from_degrees(&draws));
    }
    let schedule = DegreeSchedule::new(env.n, rows);
    let path = RescaledPath { z, ell: env.ell, gamma: env.gamma.clone() };
    Ok((path, schedule))
}

/// Exact per-generation drift quantities and their cumulative versions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftStats {
    pub n: usize,
    pub ell: f64,
    /// `alpha[i - 1] = E[xi_bar / (1 + xi_bar^2)]` for generation `i`.
    pub alpha: Vec<f64>,
    /// `beta[i - 1] = E[xi_bar^2 / (1 + xi_bar^2)]`.
    pub beta: Vec<f64>,
    /// Entry time of each generation.
    pub times: Vec<f64>,
    /// Atoms `(x, t, mass)` of the tail measure: mass `ell * P(xi_bar = x)`
    /// for every positive support point `x` of generation at time `t`.
    pub tail: TailMeasure,
}

pub fn drift_stats(env: &Environment) -> Result<DriftStats> {
    env.validate()?;
    let mut alpha = Vec::with_capacity(env.n);
    let mut beta = Vec::with_capacity(env.n);
    let mut times = Vec::with_capacity(env.n);
    let mut atoms = Vec::new();
    for (g, pmf) in env.pmfs.iter().enumerate() {
        let t = env.generation_time(g + 1);
        alpha.push(pmf.expect(|j| {
            let x = env.rescaled(j);
            x / (1.0 + x * x)
        }));
        beta.push(pmf.expect(|j| {
            let x = env.rescaled(j);
            x * x / (1.0 + x * x)
        }));
        times.push(t);
        for &(j, p) in &pmf.points {
            let x = env.rescaled(j);
            if x > 0.0 && p > 0.0 {
                atoms.push((x, t, env.ell * p));
            }
        }
    }
    Ok(DriftStats { n: env.n, ell: env.ell, alpha, beta, times, tail: TailMeasure { atoms } })
}

impl DriftStats {
    fn count_by(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t + 1e-12)
    }

    /// `ell * sum alpha_i` over generations counted by `t`.
    pub fn alpha_at(&self, t: f64) -> f64 {
        self.ell * self.alpha[..self.count_by(t)].iter().sum::<f64>()
    }

    /// Total variation of the cumulative drift up to `t`.
    pub fn alpha_variation_at(&self, t: f64) -> f64 {
        self.ell * self.alpha[..self.count_by(t)].iter().map(|a| a.abs()).sum::<f64>()
    }

    /// `ell / 2 * sum beta_i` over generations counted by `t`.
    pub fn beta_at(&self, t: f64) -> f64 {
        0.5 * self.ell * self.beta[..self.count_by(t)].iter().sum::<f64>()
    }

    /// `mu_n([x, inf) x (0, t])`.
    pub fn tail_at(&self, x: f64, t: f64) -> f64 {
        self.tail.tail(x, t)
    }

    pub fn beta_grid(&self, grid: &[f64]) -> GridFn {
        GridFn::new(grid.iter().map(|&t| (t, self.beta_at(t))).collect())
    }

    /// CSV with columns `t, alpha, alpha_variation, beta`.
    pub fn write_csv<W: Write>(&self, grid: &[f64], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "alpha", "alpha_variation", "beta"])?;
        for &t in grid {
            w.serialize((t, self.alpha_at(t), self.alpha_variation_at(t), self.beta_at(t)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A finite measure on `(0, inf) x (0, 1)` given by atoms `(x, t, mass)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TailMeasure {
    pub atoms: Vec<(f64, f64, f64)>,
}

impl TailMeasure {
    /// Mass of `[x, inf) x (0, t]`.
    pub fn tail(&self, x: f64, t: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 >= x && a.1 <= t + 1e-12).map(|a| a.2).sum()
    }

    /// Mass of `[x, inf) x {t}`.
    pub fn tail_at_time(&self, x: f64, t: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 >= x && (a.1 - t).abs() <= 1e-12).map(|a| a.2).sum()
    }

    /// Only atoms with jump size at least `x_min`. The prelimit measure
    /// carries a large mass of small jumps that belongs to the continuous
    /// part in the limit.
    pub fn above(&self, x_min: f64) -> TailMeasure {
        TailMeasure { atoms: self.atoms.iter().copied().filter(|a| a.0 >= x_min).collect() }
    }

    /// Times carrying mass.
    pub fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.atoms.iter().map(|a| a.1).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

/// Piecewise-linear function through `(t, value)` points, constant beyond
/// the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridFn {
    pub points: Vec<(f64, f64)>,
}

impl GridFn {
    pub fn new(mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        GridFn { points }
    }

    pub fn from_fn(grid: &[f64], f: impl Fn(f64) -> f64) -> Self {
        GridFn::new(grid.iter().map(|&t| (t, f(t))).collect())
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        interpolate(&self.points, t, |p| p.0, |p| p.1)
    }

    pub fn is_non_decreasing(&self, tol: f64) -> bool {
        self.points.windows(2).all(|w| w[1].1 >= w[0].1 - tol)
    }

    /// Total variation over the grid up to `t`.
    pub fn variation_at(&self, t: f64) -> f64 {
        let mut v = 0.0;
        let mut last = self.eval(0.0);
        for &(s, y) in &self.points {
            if s > t {
                v += (self.eval(t) - last).abs();
                return v;
            }
            v += (y - last).abs();
            last = y;
        }
        v
    }
}

/// Evenly spaced points `0, 1/m, ..., 1`.
pub fn uniform_grid(m: usize) -> Vec<f64> {
    (0..=m).map(|i| i as f64 / m as f64).collect()
}

/// `beta(t) - 1/2 * integral of x^2/(1+x^2) against mu over (0,inf) x (0,t)`
/// on `beta`'s grid, with warnings when the result decreases.
pub fn beta_tilde(beta: &GridFn, mu: &TailMeasure) -> (GridFn, Vec<String>) {
    let points: Vec<(f64, f64)> = beta
        .points
        .iter()
        .map(|&(t, b)| {
            let jumps: f64 = mu
                .atoms
                .iter()
                .filter(|a| a.1 < t)
                .map(|&(x, _, m)| x * x / (1.0 + x * x) * m)
                .sum();
            (t, b - 0.5 * jumps)
        })
        .collect();
    let out = GridFn::new(points);
    let mut warnings = Vec::new();
    for w in out.points.windows(2) {
        if w[1].1 < w[0].1 - 1e-12 {
            warnings.push(format!("beta tilde decreases on ({}, {}): jump mass exceeds beta", w[0].0, w[1].0));
        }
    }
    (out, warnings)
}

/// `inf_i E[xi_i 1{xi_i <= C ell}]`, exactly.
pub fn check_a3(env: &Environment, c: f64) -> Result<f64> {
    env.validate()?;
    if !(c > 0.0) {
        return Err(Error::InvalidArgument("C must be positive".into()));
    }
    let cut = c * env.ell;
    Ok(env
        .pmfs
        .iter()
        .map(|p| p.expect(|j| if j as f64 <= cut { j as f64 } else { 0.0 }))
        .fold(f64::INFINITY, f64::min))
}

/// Limit objects an environment family is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub alpha: GridFn,
    pub beta: GridFn,
    #[serde(default)]
    pub mu: TailMeasure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A1Row {
    pub n: usize,
    pub alpha_gap: f64,
    pub alpha_variation_gap: f64,
    pub beta_gap: f64,
    pub mu_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A2Row {
    pub n: usize,
    pub t: f64,
    /// Drift of the single generation counted last at `t`, against the
    /// jump of the candidate drift.
    pub alpha: f64,
    pub alpha_jump: f64,
    pub beta: f64,
    pub beta_jump: f64,
    /// `(x, ell * P(xi_bar >= x), mu([x, inf) x {t}))`.
    pub tails: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A1A2Report {
    pub a1: Vec<A1Row>,
    pub a2: Vec<A2Row>,
    /// `true` when every A1 gap is no larger than at the previous `n`.
    pub gaps_shrink: bool,
}

/// Sup gaps between each environment's cumulative statistics and the
/// candidate on `t_grid` x `x_grid`, plus single-generation rows at the
/// candidate's jump times. Environments are taken in increasing `n`.
pub fn check_a1_a2(family: &[Environment], candidate: &Candidate, t_grid: &[f64], x_grid: &[f64]) -> Result<A1A2Report> {
    if family.len() < 2 {
        return Err(Error::InvalidArgument("need environments at two or more values of n".into()));
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("time grid is empty".into()));
    }
    let mut family: Vec<&Environment> = family.iter().collect();
    family.sort_by_key(|e| e.n);
    let jump_times = candidate_jumps(candidate);

    let mut a1 = Vec::new();
    let mut a2 = Vec::new();
    for env in family {
        let s = drift_stats(env)?;
        let sup = |f: &dyn Fn(f64) -> f64| t_grid.iter().map(|&t| f(t).abs()).fold(0.0, f64::max);
        let alpha_gap = sup(&|t| s.alpha_at(t) - candidate.alpha.eval(t));
        let alpha_variation_gap = sup(&|t| s.alpha_variation_at(t) - candidate.alpha.variation_at(t));
        let beta_gap = sup(&|t| s.beta_at(t) - candidate.beta.eval(t));
        let mu_gap = x_grid
            .iter()
            .map(|&x| sup(&|t| s.tail_at(x, t) - candidate.mu.tail(x, t)))
            .fold(0.0, f64::max);
        a1.push(A1Row { n: env.n, alpha_gap, alpha_variation_gap, beta_gap, mu_gap });

        for &t in &jump_times {
            let g = env.generations_by(t).max(1);
            let pmf = &env.pmfs[g - 1];
            let tails = x_grid
                .iter()
                .map(|&x| {
                    let p = pmf.expect(|j| if env.rescaled(j) >= x { 1.0 } else { 0.0 });
                    (x, env.ell * p, candidate.mu.tail_at_time(x, t))
                })
                .collect();
            a2.push(A2Row {
                n: env.n,
                t,
                alpha: s.alpha[g - 1],
                alpha_jump: jump_of(&candidate.alpha, t),
                beta: s.beta[g - 1],
                beta_jump: jump_of(&candidate.beta, t),
                tails,
            });
        }
    }
    let gaps_shrink = a1.windows(2).all(|w| {
        w[1].alpha_gap <= w[0].alpha_gap + 1e-15
            && w[1].beta_gap <= w[0].beta_gap + 1e-15
            && w[1].mu_gap <= w[0].mu_gap + 1e-15
            && w[1].alpha_variation_gap <= w[0].alpha_variation_gap + 1e-15
    });
    Ok(A1A2Report { a1, a2, gaps_shrink })
}

/// A grid function jumps at `t` when it lists two points at `t`.
fn jump_of(f: &GridFn, t: f64) -> f64 {
    let at: Vec<f64> = f.points.iter().filter(|p| (p.0 - t).abs() <= 1e-12).map(|p| p.1).collect();
    if at.len() >= 2 {
        at[at.len() - 1] - at[0]
    } else {
        0.0
    }
}

fn candidate_jumps(c: &Candidate) -> Vec<f64> {
    let mut times = c.mu.times();
    for f in [&c.alpha, &c.beta] {
        for w in f.points.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 != w[1].1 {
                times.push(w[0].0);
            }
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Whether the jump ratio divides by the population before or after the
/// jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpConvention {
    #[default]
    PostJump,
    PreJump,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub params: LimitParams,
    pub jump_times: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Plug-in limit parameters from one surviving path: births follow the
/// normalised path, the merge density is `2 d(beta_tilde) / X`, and every
/// generation whose relative growth exceeds `jump_threshold` becomes an
/// atom with weight `(jump / X)^2`.
pub fn extract_limit_params(
    path: &RescaledPath,
    beta_tilde_fn: &GridFn,
    jump_threshold: f64,
    convention: JumpConvention,
) -> Result<Extraction> {
    let n = path.n();
    if let Some(i) = path.z.iter().position(|&z| z == 0) {
        return Err(Error::Extinct(i));
    }
    if !(jump_threshold > 0.0) {
        return Err(Error::InvalidArgument("jump threshold must be positive".into()));
    }
    let ts = path.breakpoints();
    let x: Vec<f64> = path.z.iter().map(|&z| z as f64 / path.ell).collect();
    let mut warnings = Vec::new();

    // births: exact integral of the step path, X = x[i] on [ts[i], ts[i+1])
    let mut cum = vec![0.0; n + 1];
    for i in 0..n {
        cum[i + 1] = cum[i] + x[i] * (ts[i + 1] - ts[i]);
    }
    let total = cum[n];
    let cdf_grid: Vec<(f64, f64)> = ts.iter().zip(&cum).map(|(&t, &c)| (t, c / total)).collect();

    // atoms
    let mut jump_cells = vec![false; n];
    let mut theta = Vec::new();
    let mut jump_times = Vec::new();
    for i in 1..n {
        let rise = x[i] - x[i - 1];
        if rise > 0.0 && rise / x[i - 1] > jump_threshold {
            let base = match convention {
                JumpConvention::PostJump => x[i],
                JumpConvention::PreJump => x[i - 1],
            };
            let w = (rise / base).powi(2);
            if w > 1.0 {
                return Err(Error::InvalidParams(format!(
                    "jump at t = {} gives atom weight {w} above 1 under the pre-jump convention",
                    ts[i]
                )));
            }
            theta.push(Atom { t: ts[i], weights: vec![w] });
            jump_times.push(ts[i]);
            jump_cells[i - 1] = true;
            jump_cells[i] = true;
        }
    }

    // merge density per cell
    let mut density: Vec<f64> = (0..n)
        .map(|i| {
            let db = beta_tilde_fn.eval(ts[i + 1]) - beta_tilde_fn.eval(ts[i]);
            2.0 * db / (ts[i + 1] - ts[i]) / x[i]
        })
        .collect();
    for i in 0..n {
        if jump_cells[i] {
            let left = (0..i).rev().find(|&j| !jump_cells[j]).map(|j| density[j] * x[j] / x[i]);
            let right = (i + 1..n).find(|&j| !jump_cells[j]).map(|j| density[j] * x[j] / x[i]);
            density[i] = match (left, right) {
                (Some(a), Some(b)) => 0.5 * (a + b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => 0.0,
            };
        }
    }
    for (i, d) in density.iter_mut().enumerate() {
        if *d < 0.0 {
            warnings.push(format!("negative merge density {d} on ({}, {}) clamped to 0", ts[i], ts[i + 1]));
            *d = 0.0;
        }
    }
    let mut grid: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..n {
        match grid.last_mut() {
            Some(last) if (last.2 - density[i]).abs() <= 1e-12 * last.2.abs().max(1.0) => last.1 = ts[i + 1],
            _ => grid.push((ts[i], ts[i + 1], density[i])),
        }
    }
    let params = LimitParams { nu: BirthLaw { cdf_grid }, rho: MergeIntensity { grid }, theta };
    params.validate()?;
    Ok(Extraction { params, jump_times, warnings })
}

/// Writes the environment in its explicit form.
pub fn write_environment<W: Write>(env: &Environment, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, &env.to_spec())?;
    Ok(())
}
