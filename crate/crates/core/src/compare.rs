//! Two-sample tests on distance-matrix ensembles, CDF gap diagnostics and
//! the aggregated convergence report.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::limit::{check_tight_gp, LimitParams};
use crate::schedule::{
    check_split_atoms, check_tightness_ghp, merge_measure, profile_measure, DegreeSchedule, EmpiricalMeasure1D,
};
use crate::{Error, Result};

/// Samples of `k x k` distance matrices, each stored as its strict upper
/// triangle in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEnsemble {
    pub k: usize,
    /// Factor already applied to every distance, e.g. `1/n`.
    pub scale: f64,
    pub samples: Vec<Vec<f64>>,
}

impl MatrixEnsemble {
    pub fn new(k: usize, scale: f64) -> Self {
        MatrixEnsemble { k, scale, samples: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.k * self.k.saturating_sub(1) / 2
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Adds a full matrix after checking symmetry, the zero diagonal and
    /// non-negativity.
    pub fn push_matrix(&mut self, m: &[Vec<f64>]) -> Result<()> {
        if m.len() != self.k || m.iter().any(|row| row.len() != self.k) {
            return Err(Error::MismatchedK(self.k, m.len()));
        }
        let mut v = Vec::with_capacity(self.dim());
        for q in 0..self.k {
            if m[q][q] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal entry at {q}")));
            }
            for r in q + 1..self.k {
                if m[q][r] != m[r][q] || !(m[q][r] >= 0.0) {
                    return Err(Error::InvalidArgument(format!("entry ({q},{r}) is asymmetric or negative")));
                }
                v.push(m[q][r]);
            }
        }
        self.samples.push(v);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        for (s, v) in self.samples.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidArgument(format!("sample {s} has {} entries, expected {dim}", v.len())));
            }
            if v.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::InvalidArgument(format!("sample {s} has a negative or non-finite distance")));
            }
        }
        Ok(())
    }

    /// Entry `(q, r)` of every sample, for `q < r`.
    pub fn entry(&self, q: usize, r: usize) -> Vec<f64> {
        let (q, r) = if q < r { (q, r) } else { (r, q) };
        let idx = q * self.k - q * (q + 1) / 2 + (r - q - 1);
        self.samples.iter().map(|v| v[idx]).collect()
    }

    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self> {
        let e: MatrixEnsemble = serde_json::from_reader(reader)?;
        e.validate()?;
        Ok(e)
    }

    pub fn to_json_writer<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, self)?;
        Ok(())
    }

    /// CSV with columns `sample, q, r, distance` (1-based labels).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["sample", "q", "r", "distance"])?;
        for (s, v) in self.samples.iter().enumerate() {
            let mut idx = 0;
            for q in 0..self.k {
                for r in q + 1..self.k {
                    w.serialize((s, q + 1, r + 1, v[idx]))?;
                    idx += 1;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Pooled pairwise distances, cached when small enough.
struct Pool<'a> {
    points: Vec<&'a [f64]>,
    cache: Option<Vec<f64>>,
}

impl<'a> Pool<'a> {
    const CACHE_LIMIT: usize = 4096;

    fn new(points: Vec<&'a [f64]>) -> Self {
        let n = points.len();
        let cache = (n <= Self::CACHE_LIMIT).then(|| {
            let mut c = vec![0.0; n * n];
            for i in 0..n {
                for j in i + 1..n {
                    let d = euclid(points[i], points[j]);
                    c[i * n + j] = d;
                    c[j * n + i] = d;
                }
            }
            c
        });
        Pool { points, cache }
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.cache {
            Some(c) => c[i * self.points.len() + j],
            None => euclid(self.points[i], self.points[j]),
        }
    }

    fn within(&self, idx: &[usize]) -> f64 {
        let mut s = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                s += self.dist(i, j);
            }
        }
        s
    }
}

/// Scaled energy statistic `nm/(n+m) (2 E|X-Y| - E|X-X'| - E|Y-Y'|)` with
/// V-statistic means, from the within-group sums of unordered pairs.
fn energy_from_sums(total: f64, wa: f64, wb: f64, n: usize, m: usize) -> f64 {
    let cross = total - wa - wb;
    let (nf, mf) = (n as f64, m as f64);
    let e = 2.0 * cross / (nf * mf) - 2.0 * wa / (nf * nf) - 2.0 * wb / (mf * mf);
    nf * mf / (nf + mf) * e
}

/// Energy two-sample test on the upper-triangle vectors with a permutation
/// p-value `(1 + #{perm >= observed}) / (1 + permutations)`.
pub fn energy_distance<R: Rng + ?Sized>(
    a: &MatrixEnsemble,
    b: &MatrixEnsemble,
    permutations: usize,
    rng: &mut R,
) -> Result<TestResult> {
    if a.k != b.k {
        return Err(Error::MismatchedK(a.k, b.k));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("energy distance needs two nonempty ensembles".into()));
    }
    let (n, m) = (a.len(), b.len());
    let pool = Pool::new(a.samples.iter().chain(&b.samples).map(Vec::as_slice).collect());
    let all: Vec<usize> = (0..n + m).collect();
    let total = pool.within(&all);
    let observed = energy_from_sums(total, pool.within(&all[..n]), pool.within(&all[n..]), n, m);

    let mut idx = all;
    let mut hits = 0usize;
    for _ in 0..permutations {
        idx.shuffle(rng);
        let s = energy_from_sums(total, pool.within(&idx[..n]), pool.within(&idx[n..]), n, m);
        if s >= observed - 1e-12 * observed.abs().max(1e-300) {
            hits += 1;
        }
    }
    let p_value = (1 + hits) as f64 / (1 + permutations) as f64;
    Ok(TestResult { statistic: observed.max(0.0), p_value })
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, effective_n: f64) -> f64 {
    let s = effective_n.sqrt();
    kolmogorov_tail((s + 0.12 + 0.11 / s) * d)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov–Smirnov statistic with its asymptotic p-value.
pub fn ks_1d(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("KS test needs two nonempty samples".into()));
    }
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(TestResult { statistic: d, p_value: ks_p(d, n * m / (n + m)) })
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("KS test needs a nonempty sample".into()));
    }
    let s = sorted(sample);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(TestResult { statistic: d, p_value: ks_p(d, n) })
}

/// A cumulative mass function to compare measures against.
pub enum Target<'a> {
    Measure(&'a EmpiricalMeasure1D),
    /// Mass of `[0, t]`.
    Cdf(&'a dyn Fn(f64) -> f64),
}

impl Target<'_> {
    fn mass_to(&self, t: f64) -> f64 {
        match self {
            Target::Measure(m) => m.cdf(t),
            Target::Cdf(f) => f(t),
        }
    }
}

/// `sup_t |F_n(t) - F(t)|` over `grid` for each `(n, measure)`.
pub fn weak_convergence_gap(measures: &[(usize, EmpiricalMeasure1D)], target: &Target<'_>, grid: &[f64]) -> Vec<(usize, f64)> {
    measures
        .iter()
        .map(|(n, m)| {
            let gap = grid.iter().map(|&t| (m.cdf(t) - target.mass_to(t)).abs()).fold(0.0, f64::max);
            (*n, gap)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub p_fail: f64,
    pub p_warn: f64,
    pub gap_warn: f64,
    pub gap_fail: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { p_fail: 0.001, p_warn: 0.01, gap_warn: 0.02, gap_fail: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub thresholds: Thresholds,
    pub entries: Vec<ReportEntry>,
    pub warnings: usize,
    pub failures: usize,
}

impl ConvergenceReport {
    pub fn new(thresholds: Thresholds) -> Self {
        ConvergenceReport { thresholds, entries: Vec::new(), warnings: 0, failures: 0 }
    }

    pub fn push(&mut self, name: impl Into<String>, status: Status, value: Option<f64>, detail: impl Into<String>) {
        match status {
            Status::Warn => self.warnings += 1,
            Status::Fail => self.failures += 1,
            Status::Pass => {}
        }
        self.entries.push(ReportEntry { name: name.into(), status, value, detail: detail.into() });
    }

    /// Small p-values warn or fail.
    pub fn add_p_value(&mut self, name: &str, p: f64, detail: impl Into<String>) {
        let t = self.thresholds;
        let status = if p < t.p_fail {
            Status::Fail
        } else if p < t.p_warn {
            Status::Warn
        } else {
            Status::Pass
        };
        self.push(name, status, Some(p), detail);
    }

    /// Large gaps warn or fail.
    pub fn add_gap(&mut self, name: &str, gap: f64, detail: impl Into<String>) {
        let t = self.thresholds;
        let status = if !(gap <= t.gap_fail) {
            Status::Fail
        } else if gap > t.gap_warn {
            Status::Warn
        } else {
            Status::Pass
        };
        self.push(name, status, Some(gap), detail);
    }

    pub fn add_check(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.push(name, if ok { Status::Pass } else { Status::Fail }, None, detail);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn to_json_writer<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

/// Settings for [`schedule_diagnostics`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticSettings {
    /// Degree ratio separating small merges from atoms.
    pub ratio_threshold: f64,
    /// Number of evaluation points on `(0, 1)`.
    pub grid_points: usize,
    /// Window count for the positivity check of the merge measure.
    pub windows: usize,
    pub ghp_alpha: f64,
    pub ghp_beta: f64,
    pub ghp_k: Vec<u64>,
    pub split_eps: f64,
}

impl Default for DiagnosticSettings {
    fn default() -> Self {
        DiagnosticSettings {
            ratio_threshold: 0.1,
            grid_points: 200,
            windows: 10,
            ghp_alpha: 0.1,
            ghp_beta: 0.9,
            ghp_k: vec![3, 10, 100],
            split_eps: 0.1,
        }
    }
}

/// Schedule-level hypothesis diagnostics against optional limit parameters:
/// births and merge measure against the target, merge mass on every window,
/// the GHP tightness sums and the separation of large degrees.
pub fn schedule_diagnostics(
    report: &mut ConvergenceReport,
    schedule: &DegreeSchedule,
    target: Option<&LimitParams>,
    settings: &DiagnosticSettings,
) -> Result<()> {
    schedule.ensure_valid()?;
    let grid: Vec<f64> = (1..settings.grid_points).map(|i| i as f64 / settings.grid_points as f64).collect();
    let profile = profile_measure(schedule)?;
    let (merges, cloud) = merge_measure(schedule, settings.ratio_threshold);

    if let Some(p) = target {
        let nu = |t: f64| p.nu.cdf(t);
        let gap = weak_convergence_gap(&[(schedule.n, profile.clone())], &Target::Cdf(&nu), &grid)[0].1;
        report.add_gap("births", gap, "sup gap between the profile CDF and the target birth law");
        let rho = |t: f64| p.rho.mass(0.0, t);
        let gap = weak_convergence_gap(&[(schedule.n, merges.clone())], &Target::Cdf(&rho), &grid)[0].1;
        report.add_gap(
            "merge_intensity",
            gap,
            format!(
                "sup gap between cumulative small-merge mass ({:.4} in total) and the target intensity ({:.4} in total)",
                merges.total_mass,
                p.rho.total_mass()
            ),
        );
        let gp = check_tight_gp(p);
        report.add_check(
            "target_support",
            gp.passed,
            format!("birth law has full support: {}; intensity gaps: {:?}", gp.nu_full_support, gp.rho_gaps),
        );
    }

    let w = settings.windows.max(1);
    let empty: Vec<String> = (0..w)
        .filter(|&j| {
            let (a, b) = (j as f64 / w as f64, (j + 1) as f64 / w as f64);
            let small = merges.cdf(b) - merges.cdf(a);
            let large = cloud.points.iter().any(|c| c.t > a && c.t <= b && c.weight > 0.0);
            small <= 0.0 && !large
        })
        .map(|j| format!("({:.2}, {:.2}]", j as f64 / w as f64, (j + 1) as f64 / w as f64))
        .collect();
    report.add_check(
        "merge_windows",
        empty.is_empty(),
        if empty.is_empty() {
            "every window carries merge mass".to_string()
        } else {
            format!("no pair merges possible on {}", empty.join(", "))
        },
    );

    let ghp = check_tightness_ghp(schedule, settings.ghp_alpha, settings.ghp_beta, &settings.ghp_k)?;
    let worst = ghp.worst.map(|(i, k, m)| format!("worst margin {m:.4} at height {i}, k = {k}"));
    report.add_check("ghp_tightness", ghp.passed, worst.unwrap_or_else(|| "no windows".into()));

    let split = check_split_atoms(schedule, settings.split_eps);
    report.push(
        "split_atoms",
        Status::Pass,
        Some(split.min_gap),
        format!("{} heights with a large degree; smallest separation {}", split.marked.len(), split.min_gap),
    );
    Ok(())
}
