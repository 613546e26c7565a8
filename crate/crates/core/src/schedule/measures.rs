//! Empirical measures and tightness functionals computed from a schedule.

use std::io::Write;

use serde::Serialize;

use super::DegreeSchedule;
use crate::{Error, Result};

/// Atoms `(location, weight)` on `[0, 1]`, sorted by location.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure1D {
    pub atoms: Vec<(f64, f64)>,
    pub total_mass: f64,
}

impl EmpiricalMeasure1D {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total_mass = atoms.iter().map(|a| a.1).sum();
        EmpiricalMeasure1D { atoms, total_mass }
    }

    /// Mass of `[0, t]` (not normalised).
    pub fn cdf(&self, t: f64) -> f64 {
        let end = self.atoms.partition_point(|a| a.0 <= t);
        self.atoms[..end].iter().map(|a| a.1).sum()
    }

    pub fn weight_at(&self, t: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.0 - t).abs() < 1e-12)
            .map(|a| a.1)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "weight"])?;
        for &(t, weight) in &self.atoms {
            w.write_record([t.to_string(), weight.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A vertex whose degree is a macroscopic fraction of its generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CloudPoint {
    pub t: f64,
    pub ratio: f64,
    /// `C(d, 2) / C(D, 2)`, the pair-merge probability this vertex carries.
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AtomCloud {
    pub points: Vec<CloudPoint>,
}

/// `sum_i delta_{i/n} D_i / sum D`.
pub fn profile_measure(schedule: &DegreeSchedule) -> Result<EmpiricalMeasure1D> {
    let sizes = schedule.generation_sizes();
    let total: u64 = sizes.iter().sum();
    if total == 0 {
        return Err(Error::EmptyTree);
    }
    let n = schedule.n as f64;
    let atoms = sizes
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0)
        .map(|(i, &d)| (i as f64 / n, d as f64 / total as f64))
        .collect();
    let mut m = EmpiricalMeasure1D::new(atoms);
    m.total_mass = 1.0;
    Ok(m)
}

fn pair_ratio(d: u64, big_d: u64) -> f64 {
    (d as f64 * (d as f64 - 1.0)) / (big_d as f64 * (big_d as f64 - 1.0))
}

/// Splits the pair-merge measure over heights `1 <= i < n` into the part
/// carried by vertices with `d <= threshold * D` and the cloud of larger ones.
pub fn merge_measure(
    schedule: &DegreeSchedule,
    ratio_threshold: f64,
) -> (EmpiricalMeasure1D, AtomCloud) {
    let n = schedule.n;
    let mut atoms = Vec::new();
    let mut cloud = AtomCloud::default();
    for i in 1..n.min(schedule.height()) {
        let row = schedule.row(i);
        let big_d = row.total();
        let t = i as f64 / n as f64;
        let mut small = 0.0;
        for &(d, count) in row.runs() {
            if d == 0 {
                continue;
            }
            let ratio = d as f64 / big_d as f64;
            let weight = if big_d >= 2 { pair_ratio(d, big_d) } else { 0.0 };
            if ratio <= ratio_threshold {
                small += weight * count as f64;
            } else {
                for _ in 0..count {
                    cloud.points.push(CloudPoint { t, ratio, weight });
                }
            }
        }
        if small > 0.0 {
            atoms.push((t, small));
        }
    }
    (EmpiricalMeasure1D::new(atoms), cloud)
}

/// `tau_i(k) = sum_j (d/D) min(k (d-1)/(D-1), 1)`, infinite when `D_i <= 1`.
pub fn tau(schedule: &DegreeSchedule, i: usize, k: u64) -> f64 {
    let row = schedule.row(i);
    let big_d = row.total();
    if big_d <= 1 {
        return f64::INFINITY;
    }
    let big_d = big_d as f64;
    row.runs()
        .iter()
        .map(|&(d, c)| {
            let d = d as f64;
            c as f64 * (d / big_d) * (k as f64 * (d - 1.0) / (big_d - 1.0)).min(1.0)
        })
        .sum()
}

/// `sum_{a <= i <= b} tau_i(k)`.
pub fn tau_window(schedule: &DegreeSchedule, a: usize, b: usize, k: u64) -> f64 {
    (a..=b).map(|i| tau(schedule, i, k)).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct GhpKReport {
    pub k: u64,
    /// `n / (log log k)^2`, the nominal window length.
    pub window: f64,
    pub windows: usize,
    pub truncated: usize,
    pub failures: usize,
    /// Smallest `tau - log k` over full-length windows.
    pub worst_margin: f64,
    pub worst_height: Option<usize>,
    /// Smallest margin over windows cut at the tree height.
    pub worst_truncated_margin: f64,
    pub exceeds_norm: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GhpReport {
    pub per_k: Vec<GhpKReport>,
    /// `(height, k, margin)` of the worst full-length window.
    pub worst: Option<(usize, u64, f64)>,
    /// `log log ||D|| / n`; absent when `||D|| <= 1`.
    pub loglog_norm_over_n: Option<f64>,
    pub passed: bool,
}

/// Evaluates `tau_{i, i + n/(log log k)^2}(k) >= log k` for `i` in
/// `[alpha n, beta n]` and each `k`. Windows that run past the last row with
/// children are cut there and reported as truncated instead of failing.
pub fn check_tightness_ghp(
    schedule: &DegreeSchedule,
    alpha: f64,
    beta: f64,
    k_grid: &[u64],
) -> Result<GhpReport> {
    if k_grid.is_empty() {
        return Err(Error::InvalidArgument("empty k grid".into()));
    }
    if !(0.0 < alpha && alpha < beta && beta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < alpha < beta < 1, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if let Some(&k) = k_grid.iter().find(|&&k| k < 3) {
        return Err(Error::InvalidArgument(format!("k = {k} < 3 has log log k <= 0")));
    }
    let n = schedule.n;
    let h = schedule.height();
    let norm = schedule.max_generation();
    let lo = (alpha * n as f64).ceil() as usize;
    let hi = (beta * n as f64).floor() as usize;

    let mut per_k = Vec::with_capacity(k_grid.len());
    let mut worst: Option<(usize, u64, f64)> = None;
    for &k in k_grid {
        let taus: Vec<f64> = (0..=h).map(|i| tau(schedule, i, k)).collect();
        // prefix sums over finite values plus a count of infinite ones
        let mut finite = vec![0.0; taus.len() + 1];
        let mut infinite = vec![0usize; taus.len() + 1];
        for (i, &t) in taus.iter().enumerate() {
            finite[i + 1] = finite[i] + if t.is_finite() { t } else { 0.0 };
            infinite[i + 1] = infinite[i] + usize::from(!t.is_finite());
        }
        let window = n as f64 / (k as f64).ln().ln().powi(2);
        let log_k = (k as f64).ln();
        let mut rep = GhpKReport {
            k,
            window,
            windows: 0,
            truncated: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
            worst_height: None,
            worst_truncated_margin: f64::INFINITY,
            exceeds_norm: k > norm,
        };
        for i in lo..=hi {
            rep.windows += 1;
            if i >= h {
                // rows at or above h have D = 0 and tau = +inf
                continue;
            }
            let nominal_end = i as f64 + window;
            let truncated = nominal_end > (h - 1) as f64;
            let end = if truncated { h - 1 } else { nominal_end.floor() as usize };
            let sum = if infinite[end + 1] > infinite[i] {
                f64::INFINITY
            } else {
                finite[end + 1] - finite[i]
            };
            let margin = sum - log_k;
            if truncated {
                rep.truncated += 1;
                rep.worst_truncated_margin = rep.worst_truncated_margin.min(margin);
            } else {
                if margin < 0.0 {
                    rep.failures += 1;
                }
                if margin < rep.worst_margin {
                    rep.worst_margin = margin;
                    rep.worst_height = Some(i);
                }
            }
        }
        if let Some(i) = rep.worst_height {
            if worst.is_none_or(|w| rep.worst_margin < w.2) {
                worst = Some((i, k, rep.worst_margin));
            }
        }
        per_k.push(rep);
    }
    let loglog_norm_over_n = (norm > 1).then(|| (norm as f64).ln().ln() / n as f64);
    let passed = per_k.iter().all(|r| r.failures == 0);
    Ok(GhpReport { per_k, worst, loglog_norm_over_n, passed })
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitAtomsReport {
    pub eps: f64,
    /// Heights in `(eps n, (1 - eps) n)` with `d_{i,1} > eps D_i`.
    pub marked: Vec<usize>,
    /// Smallest `|i - i'| / n` over distinct marked heights, `+inf` if fewer than two.
    pub min_gap: f64,
}

pub fn check_split_atoms(schedule: &DegreeSchedule, eps: f64) -> SplitAtomsReport {
    let n = schedule.n as f64;
    let lo = eps * n;
    let hi = (1.0 - eps) * n;
    let mut marked = Vec::new();
    let mut i = lo.floor() as usize;
    while (i as f64) < hi {
        if (i as f64) > lo {
            let row = schedule.row(i);
            let big_d = row.total() as f64;
            if row.max_degree() as f64 > eps * big_d && big_d > 0.0 {
                marked.push(i);
            }
        }
        i += 1;
    }
    let min_gap = marked
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64 / n)
        .fold(f64::INFINITY, f64::min);
    SplitAtomsReport { eps, marked, min_gap }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Row;

    #[test]
    fn profile_of_small_example_and_path() {
        let m = profile_measure(&DegreeSchedule::small_example()).unwrap();
        let expected = [(0.0, 4.0), (0.25, 5.0), (0.5, 3.0), (0.75, 2.0)];
        assert_eq!(m.atoms.len(), 4);
        for (a, e) in m.atoms.iter().zip(expected) {
            assert_eq!(a.0, e.0);
            assert!((a.1 - e.1 / 14.0).abs() < 1e-15);
        }
        let p = profile_measure(&DegreeSchedule::path(4)).unwrap();
        assert_eq!(p.atoms, vec![(0.0, 0.25), (0.25, 0.25), (0.5, 0.25), (0.75, 0.25)]);
        assert_eq!(p.total_mass, 1.0);
    }

    #[test]
    fn empty_profile_is_an_error() {
        let s = DegreeSchedule::new(3, vec![Row::empty()]);
        assert!(matches!(profile_measure(&s), Err(Error::EmptyTree)));
    }

    #[test]
    fn merge_weights() {
        let (m, cloud) = merge_measure(&DegreeSchedule::small_example(), 1.0);
        assert!(cloud.points.is_empty());
        assert!((m.weight_at(0.25) - 0.3).abs() < 1e-15);
        let (m, _) = merge_measure(&DegreeSchedule::path(10), 1.0);
        assert_eq!(m.total_mass, 0.0);
        let (m, _) = merge_measure(&DegreeSchedule::kingman(420, 21), 1.0);
        assert!((m.weight_at(1.0 / 420.0) - 1.0 / 210.0).abs() < 1e-15);
        assert_eq!(m.atoms.len(), 419);
    }

    #[test]
    fn merge_split_by_threshold() {
        let s = DegreeSchedule::small_example();
        let (full, _) = merge_measure(&s, 1.0);
        let (small, cloud) = merge_measure(&s, 0.5);
        // row 1: 3/5 > 0.5, row 2: 2/3 > 0.5, row 3: 2/2 > 0.5
        assert_eq!(cloud.points.len(), 3);
        let cloud_mass: f64 = cloud.points.iter().map(|p| p.weight).sum();
        assert!((full.total_mass - small.total_mass - cloud_mass).abs() < 1e-12);
    }

    #[test]
    fn tau_values() {
        let s = DegreeSchedule::small_example();
        assert!((tau(&s, 1, 1) - 0.3).abs() < 1e-15);
        assert!((tau(&s, 1, 4) - 0.6).abs() < 1e-15);
        assert_eq!(tau(&DegreeSchedule::path(5), 2, 7), f64::INFINITY);
        assert_eq!(tau(&s, 4, 1), f64::INFINITY);
    }

    #[test]
    fn tau_window_values() {
        let s = DegreeSchedule::small_example();
        assert_eq!(tau_window(&s, 2, 2, 3), tau(&s, 2, 3));
        let k = DegreeSchedule::kingman(420, 21);
        assert!((tau_window(&k, 1, 420, 1) - 2.0).abs() < 1e-12);
        let p = DegreeSchedule::path(6);
        assert_eq!(tau_window(&p, 0, 3, 2), f64::INFINITY);
    }

    #[test]
    fn ghp_on_path_and_kingman() {
        let p = DegreeSchedule::path(50);
        let r = check_tightness_ghp(&p, 0.2, 0.8, &[3, 5]).unwrap();
        assert!(r.passed);
        assert!(r.per_k.iter().all(|k| k.exceeds_norm));

        let k = DegreeSchedule::kingman(420, 21);
        assert!((tau(&k, 100, 3) - 1.0 / 70.0).abs() < 1e-15);
        let r = check_tightness_ghp(&k, 0.25, 0.75, &[3]).unwrap();
        assert_eq!(r.per_k[0].truncated, r.per_k[0].windows);
        assert!(r.passed);
        let ll = r.loglog_norm_over_n.unwrap();
        assert!((ll - 21f64.ln().ln() / 420.0).abs() < 1e-15);
    }

    #[test]
    fn ghp_rejects_bad_grids() {
        let s = DegreeSchedule::small_example();
        assert!(check_tightness_ghp(&s, 0.2, 0.8, &[]).is_err());
        assert!(check_tightness_ghp(&s, 0.2, 0.8, &[2]).is_err());
        assert!(check_tightness_ghp(&s, 0.8, 0.2, &[3]).is_err());
    }

    #[test]
    fn ghp_star_schedule_passes_when_giant_dominated() {
        // one vertex of degree D_{i+1} per row carries the whole next generation
        let n = 200;
        let mut rows = vec![Row::new(vec![(40, 1)])];
        for _ in 1..n {
            rows.push(Row::new(vec![(40, 1)]));
        }
        let s = DegreeSchedule::new(n, rows);
        assert!(s.validate().is_valid());
        // tau_i(k) = min(k * 39 / 39, 1) = 1 for every row
        assert!((tau(&s, 10, 5) - 1.0).abs() < 1e-15);
        let r = check_tightness_ghp(&s, 0.1, 0.5, &[3, 10, 40]).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn split_atoms() {
        let n = 100;
        let mut rows = vec![Row::new(vec![(50, 1)])];
        for i in 1..n {
            if i == 30 || i == 60 {
                rows.push(Row::new(vec![(21, 1), (1, 29)]));
            } else {
                rows.push(Row::new(vec![(1, 50)]));
            }
        }
        let s = DegreeSchedule::new(n, rows);
        assert!(s.validate().is_valid());
        let r = check_split_atoms(&s, 0.1);
        assert_eq!(r.marked, vec![30, 60]);
        assert!((r.min_gap - 0.3).abs() < 1e-12);

        let p = check_split_atoms(&DegreeSchedule::path(20), 0.1);
        assert!((p.min_gap - 1.0 / 20.0).abs() < 1e-12);

        let k = check_split_atoms(&DegreeSchedule::kingman(420, 21), 0.2);
        assert!(k.marked.is_empty());
        assert_eq!(k.min_gap, f64::INFINITY);
    }
}
