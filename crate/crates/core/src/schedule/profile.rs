//! Building schedules whose generation sizes follow a continuous profile.

use serde::{Deserialize, Serialize};

use super::{DegreeSchedule, Row};
use crate::{Error, Result};

/// Allowed degrees with target proportions, e.g. `{0: 3/4, 4: 1/4}`.
///
/// With `fillers` on, a row that the allowed degrees cannot complete is
/// topped up with degree-1 vertices, and any excess beyond that goes to a
/// single vertex of large degree. With it off, generation sizes are
/// rounded to multiples of the gcd of the positive degrees so rows use the
/// allowed degrees only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeMix {
    pub degrees: Vec<(u64, f64)>,
    #[serde(default = "default_true")]
    pub fillers: bool,
}

fn default_true() -> bool {
    true
}

impl Default for DegreeMix {
    fn default() -> Self {
        DegreeMix { degrees: vec![(2, 0.5), (0, 0.5)], fillers: true }
    }
}

impl DegreeMix {
    pub fn all_ones() -> Self {
        DegreeMix { degrees: vec![(1, 1.0)], fillers: false }
    }

    /// Degrees 0 and 4 only.
    pub fn zero_four() -> Self {
        DegreeMix { degrees: vec![(4, 0.25), (0, 0.75)], fillers: false }
    }

    fn positive_desc(&self) -> Vec<(u64, f64)> {
        let total: f64 = self.degrees.iter().map(|d| d.1).sum();
        let mut pos: Vec<(u64, f64)> = self
            .degrees
            .iter()
            .filter(|d| d.0 > 0)
            .map(|&(d, p)| (d, if total > 0.0 { p / total } else { 0.0 }))
            .collect();
        pos.sort_by(|a, b| b.0.cmp(&a.0));
        pos
    }

    fn unit(&self) -> u64 {
        if self.fillers {
            return 1;
        }
        self.degrees
            .iter()
            .filter(|d| d.0 > 0)
            .fold(0, |g, d| gcd(g, d.0))
            .max(1)
    }

    /// Degrees for `slots` vertices summing to `target`.
    fn fill_row(&self, slots: u64, target: u64) -> Option<Vec<(u64, u64)>> {
        let pos = self.positive_desc();
        let mut counts = vec![0u64; pos.len()];
        let mut remaining = target;
        let mut free = slots;
        for (c, &(d, p)) in counts.iter_mut().zip(&pos) {
            let want = (p * slots as f64).round() as u64;
            let take = want.min(remaining / d).min(free);
            *c += take;
            remaining -= take * d;
            free -= take;
        }
        for (c, &(d, _)) in counts.iter_mut().zip(&pos) {
            let take = (remaining / d).min(free);
            *c += take;
            remaining -= take * d;
            free -= take;
        }
        let mut runs: Vec<(u64, u64)> = pos
            .iter()
            .zip(&counts)
            .filter(|(_, &c)| c > 0)
            .map(|(&(d, _), &c)| (d, c))
            .collect();
        if remaining == 0 {
            return Some(runs);
        }
        if !self.fillers || slots == 0 {
            return None;
        }
        if remaining <= free {
            match runs.last_mut() {
                Some((1, c)) => *c += remaining,
                _ => runs.push((1, remaining)),
            }
            return Some(runs);
        }
        // not enough room: ones on the free slots, the rest on one big vertex
        let big = match runs.first_mut() {
            Some((d, c)) if free == 0 => {
                *c -= 1;
                *d + remaining
            }
            _ => remaining - (free - 1),
        };
        if free > 1 {
            match runs.last_mut() {
                Some((1, c)) => *c += free - 1,
                _ => runs.push((1, free - 1)),
            }
        }
        runs.push((big, 1));
        Some(normalise(runs))
    }
}

fn normalise(mut runs: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    runs.retain(|r| r.1 > 0);
    runs.sort_by(|a, b| b.0.cmp(&a.0));
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(runs.len());
    for (d, c) in runs {
        match out.last_mut() {
            Some((ld, lc)) if *ld == d => *lc += c,
            _ => out.push((d, c)),
        }
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Builds a schedule of height `n` with `D_i ~ scale * profile(i / n)`.
///
/// The root row is a single vertex of degree `D_0`; row `i >= 1` splits
/// `D_i` children among the `D_{i-1}` vertices at height `i` using `mix`.
/// Generation sizes are clamped below at the smallest achievable positive
/// value so the tree reaches height `n`.
pub fn from_profile<F: Fn(f64) -> f64>(
    profile: F,
    n: usize,
    scale: f64,
    mix: &DegreeMix,
) -> Result<DegreeSchedule> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if mix.positive_desc().is_empty() {
        return Err(Error::InvalidArgument("degree mix has no positive degree".into()));
    }
    let unit = mix.unit();
    let sizes: Vec<u64> = (0..n)
        .map(|i| {
            let raw = (scale * profile(i as f64 / n as f64)).max(0.0);
            let rounded = (raw / unit as f64).round() as u64 * unit;
            rounded.max(unit)
        })
        .collect();

    let mut rows = Vec::with_capacity(n);
    rows.push(Row::new(vec![(sizes[0], 1)]));
    for i in 1..n {
        let runs = mix.fill_row(sizes[i - 1], sizes[i]).ok_or_else(|| Error::ProfileTooSmall {
            height: i,
            reason: format!(
                "{} vertices cannot carry {} children with the given degree mix",
                sizes[i - 1],
                sizes[i]
            ),
        })?;
        rows.push(Row::new(runs));
    }
    let schedule = DegreeSchedule::new(n, rows);
    debug_assert!(schedule.validate().is_valid());
    Ok(schedule)
}
