//! The continuous growth-coalescent driven by a birth law, a pairwise merge
//! intensity and a list of multiple-merge atoms.
//!
//! Time runs from 1 down to 0. Randomness is drawn once per label, per label
//! pair and per atom into a [`CoalescentNoise`], and the genealogy is a
//! deterministic replay of that noise. Dropping labels from the noise and
//! replaying gives the genealogy of the remaining labels.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Piecewise-linear CDF through the listed points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthLaw {
    pub cdf_grid: Vec<(f64, f64)>,
}

impl BirthLaw {
    pub fn uniform() -> Self {
        BirthLaw { cdf_grid: vec![(0.0, 0.0), (1.0, 1.0)] }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let g = &self.cdf_grid;
        if t <= g[0].0 {
            return 0.0;
        }
        if t >= g[g.len() - 1].0 {
            return 1.0;
        }
        let b = g.partition_point(|p| p.0 <= t);
        let (t0, f0) = g[b - 1];
        let (t1, f1) = g[b];
        f0 + (f1 - f0) * (t - t0) / (t1 - t0)
    }

    /// Inverse CDF at `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let g = &self.cdf_grid;
        let b = g.partition_point(|p| p.1 < u);
        if b == 0 {
            return g[0].0;
        }
        if b == g.len() {
            return g[g.len() - 1].0;
        }
        let (t0, f0) = g[b - 1];
        let (t1, f1) = g[b];
        t0 + (u - f0) / (f1 - f0) * (t1 - t0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// `true` if every grid segment carries mass, so the support is `[0,1]`.
    pub fn has_full_support(&self) -> bool {
        self.cdf_grid.windows(2).all(|w| w[1].1 > w[0].1)
    }

    fn validate(&self) -> Result<()> {
        let g = &self.cdf_grid;
        if g.len() < 2 {
            return invalid("birth law needs at least two grid points");
        }
        if g[0] != (0.0, 0.0) || g[g.len() - 1] != (1.0, 1.0) {
            return invalid("birth CDF grid must run from (0,0) to (1,1)");
        }
        for w in g.windows(2) {
            if !(w[1].0 > w[0].0) {
                return invalid("birth CDF grid times must increase strictly");
            }
            if !(w[1].1 >= w[0].1) || !w[1].1.is_finite() {
                return invalid("birth CDF must be non-decreasing");
            }
        }
        Ok(())
    }
}

/// Piecewise-constant density on disjoint cells `(t0, t1, density)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MergeIntensity {
    pub grid: Vec<(f64, f64, f64)>,
}

impl MergeIntensity {
    pub fn constant(density: f64) -> Self {
        MergeIntensity { grid: vec![(0.0, 1.0, density)] }
    }

    /// Measure of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.grid
            .iter()
            .map(|&(t0, t1, d)| (t1.min(b) - t0.max(a)).max(0.0) * d)
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass(0.0, 1.0)
    }

    /// Maximal open intervals of `(0,1)` carrying no mass.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        let mut gaps = Vec::new();
        let mut covered = 0.0;
        for &(t0, t1, d) in &self.grid {
            if d <= 0.0 {
                continue;
            }
            if t0 > covered {
                gaps.push((covered, t0));
            }
            covered = covered.max(t1);
        }
        if covered < 1.0 {
            gaps.push((covered, 1.0));
        }
        gaps
    }

    fn validate(&self) -> Result<()> {
        let mut last = 0.0;
        for &(t0, t1, d) in &self.grid {
            if !(t0 >= last && t1 > t0 && t1 <= 1.0) {
                return invalid(format!("merge intensity cell ({t0}, {t1}) is out of order or outside [0,1]"));
            }
            if !(d >= 0.0 && d.is_finite()) {
                return invalid(format!("merge intensity density {d} on ({t0}, {t1}) must be finite and non-negative"));
            }
            last = t1;
        }
        Ok(())
    }
}

/// A multiple-merge atom: at time `t`, each block picks `j` with probability
/// `weights[j - 1]` (or no group with the remaining mass).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub t: f64,
    pub weights: Vec<f64>,
}

impl Atom {
    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let mut u = rng.random::<f64>();
        for (j, &w) in self.weights.iter().enumerate() {
            if u < w {
                return j as u32 + 1;
            }
            u -= w;
        }
        0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub nu: BirthLaw,
    #[serde(default)]
    pub rho: MergeIntensity,
    #[serde(default, with = "atom_list")]
    pub theta: Vec<Atom>,
}

/// Atoms serialise as `[t, [w1, w2, ...]]`.
mod atom_list {
    use super::Atom;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(atoms: &[Atom], s: S) -> Result<S::Ok, S::Error> {
        let raw: Vec<(f64, &Vec<f64>)> = atoms.iter().map(|a| (a.t, &a.weights)).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Atom>, D::Error> {
        let raw: Vec<(f64, Vec<f64>)> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|(t, weights)| Atom { t, weights }).collect())
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParams(msg.into()))
}

impl LimitParams {
    /// Uniform births, constant merge density, no atoms.
    pub fn uniform(rho_density: f64) -> Self {
        LimitParams { nu: BirthLaw::uniform(), rho: MergeIntensity::constant(rho_density), theta: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        self.nu.validate()?;
        self.rho.validate()?;
        let mut times: Vec<f64> = Vec::with_capacity(self.theta.len());
        for a in &self.theta {
            if !(a.t > 0.0 && a.t < 1.0) {
                return invalid(format!("atom time {} must lie in (0,1)", a.t));
            }
            if a.weights.is_empty() || a.weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
                return invalid(format!("atom at {} needs positive weights", a.t));
            }
            if a.weights.windows(2).any(|w| w[1] > w[0]) {
                return invalid(format!("atom weights at {} must be non-increasing", a.t));
            }
            if a.weights.iter().sum::<f64>() > 1.0 + 1e-12 {
                return invalid(format!("atom weights at {} sum above 1", a.t));
            }
            times.push(a.t);
        }
        times.sort_by(f64::total_cmp);
        if times.windows(2).any(|w| w[0] == w[1]) {
            return invalid("atom times must be distinct");
        }
        Ok(())
    }

    pub fn from_json_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let p: LimitParams = serde_json::from_reader(reader)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json_writer<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

/// Outcome of the full-support and no-gap condition needed for the limit
/// space to exist.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightGpReport {
    pub nu_full_support: bool,
    /// Intervals of `(0,1)` where the merge intensity vanishes. Finite atom
    /// lists never compensate a gap.
    pub rho_gaps: Vec<(f64, f64)>,
    pub passed: bool,
}

pub fn check_tight_gp(params: &LimitParams) -> TightGpReport {
    let nu_full_support = params.nu.has_full_support();
    let rho_gaps = params.rho.gaps();
    TightGpReport { nu_full_support, passed: nu_full_support && rho_gaps.is_empty(), rho_gaps }
}

/// A pairwise merge point for labels `q < r` (0-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPoint {
    pub t: f64,
    pub q: u32,
    pub r: u32,
}

/// All randomness of one run, indexed by label.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalescentNoise {
    pub births: Vec<f64>,
    /// Sorted by decreasing time.
    pub pair_points: Vec<PairPoint>,
    /// `atom_groups[a][r]`: group index chosen by label `r` at atom `a`.
    pub atom_groups: Vec<Vec<u32>>,
}

impl CoalescentNoise {
    pub fn draw<R: Rng + ?Sized>(params: &LimitParams, k: usize, rng: &mut R) -> Result<Self> {
        params.validate()?;
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let births: Vec<f64> = (0..k).map(|_| params.nu.sample(rng)).collect();
        let pairs = (k * (k - 1) / 2) as f64;
        let mut pair_points = Vec::new();
        if pairs > 0.0 {
            for &(t0, t1, d) in &params.rho.grid {
                let mean = (t1 - t0) * d * pairs;
                if mean <= 0.0 {
                    continue;
                }
                let count = Poisson::new(mean).map_err(|e| Error::InvalidParams(e.to_string()))?.sample(rng) as u64;
                for _ in 0..count {
                    let t = t0 + (t1 - t0) * rng.random::<f64>();
                    let r = rng.random_range(1..k);
                    let q = rng.random_range(0..r);
                    pair_points.push(PairPoint { t, q: q as u32, r: r as u32 });
                }
            }
        }
        pair_points.sort_by(|a, b| b.t.total_cmp(&a.t));
        let atom_groups = params
            .theta
            .iter()
            .map(|a| (0..k).map(|_| a.pick(rng)).collect())
            .collect();
        Ok(CoalescentNoise { births, pair_points, atom_groups })
    }

    pub fn k(&self) -> usize {
        self.births.len()
    }

    /// The noise of labels `1..=k` only.
    pub fn restrict(&self, k: usize) -> CoalescentNoise {
        let k = k.min(self.k());
        CoalescentNoise {
            births: self.births[..k].to_vec(),
            pair_points: self.pair_points.iter().copied().filter(|p| (p.r as usize) < k).collect(),
            atom_groups: self.atom_groups.iter().map(|g| g[..k].to_vec()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Small,
    Large,
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEvent {
    pub time: f64,
    pub kind: EventKind,
    /// Each merged block after the event, as sorted 1-based labels.
    pub groups: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitTrace {
    pub k: usize,
    pub births: Vec<f64>,
    /// Strictly decreasing in time.
    pub events: Vec<LimitEvent>,
    /// `c[q][r]`: time at which labels `q+1` and `r+1` first share a block;
    /// `c[q][q]` is the birth time.
    pub c: Vec<Vec<f64>>,
}

impl LimitTrace {
    pub fn write_events_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut writer, e)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn satisfies_three_point(&self, tol: f64) -> bool {
        let k = self.k;
        for q in 0..k {
            for r in q + 1..k {
                for s in r + 1..k {
                    let mut v = [self.c[q][r], self.c[r][s], self.c[q][s]];
                    v.sort_by(f64::total_cmp);
                    if v[1] - v[0] > tol {
                        return false;
                    }
                }
            }
        }
        true
    }
}

enum Step {
    Atom(usize),
    Birth(usize),
    Pair(PairPoint),
}

impl Step {
    fn rank(&self) -> u8 {
        // at equal times atoms act before births, so a newborn misses the atom
        match self {
            Step::Atom(_) => 0,
            Step::Birth(_) => 1,
            Step::Pair(_) => 2,
        }
    }
}

struct Blocks {
    members: Vec<Vec<usize>>,
    c: Vec<Vec<f64>>,
}

impl Blocks {
    /// Moves the block of `from` into the block of `into`, recording `t`.
    fn absorb(&mut self, into: usize, from: usize, t: f64) {
        let moved = std::mem::take(&mut self.members[from]);
        for &a in &moved {
            for &b in &self.members[into] {
                self.c[a][b] = t;
                self.c[b][a] = t;
            }
        }
        self.members[into].extend(moved);
    }

    fn sorted_labels(&self, owner: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.members[owner].iter().map(|r| r + 1).collect();
        v.sort_unstable();
        v
    }
}

/// Replays `noise` under the atom times of `params`.
pub fn replay(params: &LimitParams, noise: &CoalescentNoise) -> LimitTrace {
    let k = noise.k();
    let mut steps: Vec<(f64, Step)> = Vec::with_capacity(k + noise.pair_points.len() + params.theta.len());
    steps.extend(noise.births.iter().enumerate().map(|(r, &t)| (t, Step::Birth(r))));
    steps.extend(noise.pair_points.iter().map(|&p| (p.t, Step::Pair(p))));
    steps.extend(params.theta.iter().enumerate().map(|(a, atom)| (atom.t, Step::Atom(a))));
    steps.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.rank().cmp(&b.1.rank())));

    let mut c = vec![vec![0.0; k]; k];
    for (r, &h) in noise.births.iter().enumerate() {
        c[r][r] = h;
    }
    let mut blocks = Blocks { members: vec![Vec::new(); k], c };
    let mut events = Vec::new();

    for (t, step) in steps {
        match step {
            Step::Birth(r) => blocks.members[r].push(r),
            Step::Pair(p) => {
                let (q, r) = (p.q as usize, p.r as usize);
                if !blocks.members[q].is_empty() && !blocks.members[r].is_empty() {
                    blocks.absorb(q, r, t);
                    events.push(LimitEvent { time: t, kind: EventKind::Small, groups: vec![blocks.sorted_labels(q)] });
                }
            }
            Step::Atom(a) => {
                let choice = &noise.atom_groups[a];
                // (group index, head label, merged anything)
                let mut heads: Vec<(u32, usize, bool)> = Vec::new();
                for r in 0..k {
                    let j = choice[r];
                    if j == 0 || blocks.members[r].is_empty() {
                        continue;
                    }
                    match heads.iter_mut().find(|h| h.0 == j) {
                        Some(h) => {
                            blocks.absorb(h.1, r, t);
                            h.2 = true;
                        }
                        None => heads.push((j, r, false)),
                    }
                }
                let groups: Vec<Vec<usize>> =
                    heads.iter().filter(|h| h.2).map(|h| blocks.sorted_labels(h.1)).collect();
                if !groups.is_empty() {
                    events.push(LimitEvent { time: t, kind: EventKind::Large, groups });
                }
            }
        }
    }

    let alive: Vec<usize> = (1..k).filter(|&r| !blocks.members[r].is_empty()).collect();
    if !alive.is_empty() {
        for r in alive {
            blocks.absorb(0, r, 0.0);
        }
        events.push(LimitEvent { time: 0.0, kind: EventKind::Final, groups: vec![blocks.sorted_labels(0)] });
    }
    LimitTrace { k, births: noise.births.clone(), events, c: blocks.c }
}

/// Draws births, merge points and atom groups for `k` labels and replays
/// them.
pub fn sample_coalescent<R: Rng + ?Sized>(params: &LimitParams, k: usize, rng: &mut R) -> Result<LimitTrace> {
    let noise = CoalescentNoise::draw(params, k, rng)?;
    Ok(replay(params, &noise))
}

/// `d(q, r) = H_q + H_r - 2 c(q, r)` with a zero diagonal.
pub fn limit_distance_matrix(trace: &LimitTrace) -> Vec<Vec<f64>> {
    let k = trace.k;
    let mut d = vec![vec![0.0; k]; k];
    for q in 0..k {
        for r in q + 1..k {
            let v = trace.births[q] + trace.births[r] - 2.0 * trace.c[q][r];
            d[q][r] = v;
            d[r][q] = v;
        }
    }
    d
}

/// Number of labels born after `x` that meet no other label at time `x` or
/// later.
pub fn leaf_tightness_stat_continuous(trace: &LimitTrace, x: f64) -> usize {
    (0..trace.k)
        .filter(|&q| trace.births[q] > x && (0..trace.k).all(|r| r == q || trace.c[q][r] < x))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn atom_half() -> LimitParams {
        LimitParams {
            nu: BirthLaw::uniform(),
            rho: MergeIntensity::default(),
            theta: vec![Atom { t: 0.5, weights: vec![1.0] }],
        }
    }

    #[test]
    fn json_round_trip_and_shape() {
        let p = LimitParams {
            nu: BirthLaw { cdf_grid: vec![(0.0, 0.0), (0.5, 0.8), (1.0, 1.0)] },
            rho: MergeIntensity { grid: vec![(0.0, 0.5, 2.0), (0.5, 1.0, 1.0)] },
            theta: vec![Atom { t: 0.25, weights: vec![0.5, 0.25] }],
        };
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(
            text,
            r#"{"nu":{"cdf_grid":[[0.0,0.0],[0.5,0.8],[1.0,1.0]]},"rho":{"grid":[[0.0,0.5,2.0],[0.5,1.0,1.0]]},"theta":[[0.25,[0.5,0.25]]]}"#
        );
        let back = LimitParams::from_json_reader(text.as_bytes()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = LimitParams::uniform(1.0);
        p.theta.push(Atom { t: 0.3, weights: vec![0.2, 0.5] });
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
        let mut p = LimitParams::uniform(1.0);
        p.theta.push(Atom { t: 0.3, weights: vec![0.7, 0.6] });
        assert!(p.validate().is_err());
        let mut p = LimitParams::uniform(f64::INFINITY);
        assert!(p.validate().is_err());
        p.rho = MergeIntensity::constant(1.0);
        p.nu.cdf_grid = vec![(0.0, 0.0), (1.0, 0.9)];
        assert!(p.validate().is_err());
        let mut rng = stream(0, 0);
        assert!(sample_coalescent(&p, 3, &mut rng).is_err());
    }

    #[test]
    fn birth_law_quantile_inverts_cdf() {
        let nu = BirthLaw { cdf_grid: vec![(0.0, 0.0), (0.2, 0.5), (0.6, 0.5), (1.0, 1.0)] };
        for u in [0.1, 0.3, 0.5, 0.7, 0.99] {
            assert!((nu.cdf(nu.quantile(u)) - u).abs() < 1e-12);
        }
        assert!(!nu.has_full_support());
        assert!(BirthLaw::uniform().has_full_support());
    }

    #[test]
    fn single_label() {
        let tr = sample_coalescent(&LimitParams::uniform(2.0), 1, &mut stream(1, 0)).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.c[0][0], tr.births[0]);
    }

    #[test]
    fn no_merges_means_root_distances() {
        let p = LimitParams::uniform(0.0);
        let tr = sample_coalescent(&p, 6, &mut stream(2, 0)).unwrap();
        assert_eq!(tr.events.len(), 1);
        assert_eq!(tr.events[0].kind, EventKind::Final);
        let d = limit_distance_matrix(&tr);
        for q in 0..6 {
            assert_eq!(d[q][q], 0.0);
            for r in 0..6 {
                if q != r {
                    assert_eq!(d[q][r], tr.births[q] + tr.births[r]);
                }
            }
        }
        assert_eq!(leaf_tightness_stat_continuous(&tr, 0.0), 0);
    }

    #[test]
    fn full_atom_gathers_everything_born_above_it() {
        let p = atom_half();
        let mut rng = stream(3, 0);
        for _ in 0..200 {
            let tr = sample_coalescent(&p, 3, &mut rng).unwrap();
            for q in 0..3 {
                for r in q + 1..3 {
                    let both_above = tr.births[q] > 0.5 && tr.births[r] > 0.5;
                    assert_eq!(tr.c[q][r], if both_above { 0.5 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn birth_at_atom_time_misses_the_atom() {
        let p = atom_half();
        let noise = CoalescentNoise { births: vec![0.7, 0.5], pair_points: vec![], atom_groups: vec![vec![1, 1]] };
        let tr = replay(&p, &noise);
        assert_eq!(tr.c[0][1], 0.0);
    }

    #[test]
    fn small_merge_needs_two_live_blocks() {
        let p = LimitParams::uniform(0.0);
        let noise = CoalescentNoise {
            births: vec![0.9, 0.8, 0.3],
            pair_points: vec![
                PairPoint { t: 0.85, q: 0, r: 1 },
                PairPoint { t: 0.7, q: 0, r: 1 },
                PairPoint { t: 0.6, q: 1, r: 2 },
                PairPoint { t: 0.4, q: 0, r: 2 },
                PairPoint { t: 0.2, q: 1, r: 2 },
            ],
            atom_groups: vec![],
        };
        let tr = replay(&p, &noise);
        // 0.85 and 0.6 and 0.4 involve unborn labels, 0.2 finds label 2's
        // block empty, so label 3 only joins at the final jump
        assert_eq!(tr.c[0][1], 0.7);
        assert_eq!(tr.c[0][2], 0.0);
        assert_eq!(tr.c[1][2], 0.0);
        assert_eq!(tr.events.len(), 2);
        assert_eq!(tr.events[1].kind, EventKind::Final);
        assert_eq!(tr.events[1].groups, vec![vec![1, 2, 3]]);
    }

    #[test]
    fn restriction_is_consistent() {
        let p = LimitParams {
            nu: BirthLaw::uniform(),
            rho: MergeIntensity { grid: vec![(0.0, 0.4, 3.0), (0.4, 1.0, 0.5)] },
            theta: vec![Atom { t: 0.35, weights: vec![0.4, 0.3] }, Atom { t: 0.6, weights: vec![0.5] }],
        };
        let mut rng = stream(4, 0);
        for _ in 0..100 {
            let noise = CoalescentNoise::draw(&p, 12, &mut rng).unwrap();
            let full = replay(&p, &noise);
            assert!(full.satisfies_three_point(0.0));
            for k in [1, 2, 5, 11] {
                let part = replay(&p, &noise.restrict(k));
                for q in 0..k {
                    for r in 0..k {
                        assert_eq!(part.c[q][r], full.c[q][r]);
                    }
                }
            }
        }
    }

    #[test]
    fn distance_bounds_and_event_order() {
        let p = LimitParams {
            nu: BirthLaw::uniform(),
            rho: MergeIntensity::constant(4.0),
            theta: vec![Atom { t: 0.5, weights: vec![0.3, 0.2, 0.1] }],
        };
        let mut rng = stream(5, 0);
        for _ in 0..200 {
            let tr = sample_coalescent(&p, 8, &mut rng).unwrap();
            assert!(tr.events.windows(2).all(|w| w[0].time > w[1].time));
            let d = limit_distance_matrix(&tr);
            for q in 0..8 {
                for r in 0..8 {
                    let (a, b) = (tr.births[q], tr.births[r]);
                    assert!(d[q][r] <= a + b + 1e-12 && d[q][r] >= (a - b).abs() - 1e-12);
                }
            }
        }
    }

    #[test]
    fn tight_gp() {
        assert!(check_tight_gp(&LimitParams::uniform(2.0)).passed);
        let r = check_tight_gp(&LimitParams::uniform(0.0));
        assert!(!r.passed);
        assert_eq!(r.rho_gaps, vec![(0.0, 1.0)]);
        let p = LimitParams {
            nu: BirthLaw::uniform(),
            rho: MergeIntensity { grid: vec![(0.0, 0.3, 1.0), (0.5, 1.0, 1.0)] },
            theta: vec![],
        };
        assert_eq!(check_tight_gp(&p).rho_gaps, vec![(0.3, 0.5)]);
    }

    #[test]
    fn jsonl_events() {
        let p = atom_half();
        let noise = CoalescentNoise { births: vec![0.7, 0.6], pair_points: vec![], atom_groups: vec![vec![1, 1]] };
        let mut buf = Vec::new();
        replay(&p, &noise).write_events_jsonl(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "{\"time\":0.5,\"kind\":\"large\",\"groups\":[[1,2]]}\n");
    }
}
