//! Degree-by-height schedules.
//!
//! Row `i` lists the degrees `d_{i,1} >= d_{i,2} >= ...` of the vertices at
//! height `i`. Rows are stored sparsely as `(degree, count)` runs so that
//! generations of size `10^6` with a handful of distinct degrees stay small.
//! Row sums `D_i` are the generation sizes: there are `D_i` vertices at height
//! `i + 1`.

mod measures;
mod profile;

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use measures::{
    check_split_atoms, check_tightness_ghp, merge_measure, profile_measure, tau, tau_window,
    AtomCloud, CloudPoint, EmpiricalMeasure1D, GhpKReport, GhpReport, SplitAtomsReport,
};
pub use profile::{from_profile, DegreeMix};

/// One height of a schedule: runs of equal degrees, largest first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Row {
    runs: Vec<(u64, u64)>,
}

impl Row {
    pub fn new(runs: Vec<(u64, u64)>) -> Self {
        Row { runs }
    }

    pub fn empty() -> Self {
        Row::default()
    }

    /// Builds a row from a dense degree list. Trailing zeros are dropped;
    /// equal neighbours are collapsed into one run.
    pub fn from_degrees(degrees: &[u64]) -> Self {
        let end = degrees.iter().rposition(|&d| d > 0).map_or(0, |p| p + 1);
        let mut runs: Vec<(u64, u64)> = Vec::new();
        for &d in &degrees[..end] {
            match runs.last_mut() {
                Some((deg, count)) if *deg == d => *count += 1,
                _ => runs.push((d, 1)),
            }
        }
        Row { runs }
    }

    pub fn runs(&self) -> &[(u64, u64)] {
        &self.runs
    }

    /// `D_i`, the number of children of all vertices in this row.
    pub fn total(&self) -> u64 {
        self.runs.iter().map(|&(d, c)| d * c).sum()
    }

    /// Number of vertices with positive degree.
    pub fn positive_count(&self) -> u64 {
        self.runs.iter().filter(|r| r.0 > 0).map(|r| r.1).sum()
    }

    /// Largest degree, `d_{i,1}`.
    pub fn max_degree(&self) -> u64 {
        self.runs.first().map_or(0, |r| r.0)
    }

    /// Degree of the `j`-th vertex (1-based); zero past the stored runs.
    pub fn degree(&self, j: u64) -> u64 {
        let mut seen = 0;
        for &(d, c) in &self.runs {
            seen += c;
            if j <= seen {
                return d;
            }
        }
        0
    }

    /// Dense degree list of the positive-degree prefix.
    pub fn degrees(&self) -> impl Iterator<Item = u64> + '_ {
        self.runs
            .iter()
            .flat_map(|&(d, c)| std::iter::repeat_n(d, c as usize))
    }

    pub fn is_empty(&self) -> bool {
        self.max_degree() == 0
    }
}

/// The full degree array `{d_{i,j}}` with its scaling index `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSchedule {
    pub n: usize,
    rows: Vec<Row>,
}

impl DegreeSchedule {
    /// Wraps rows without checking them; see [`DegreeSchedule::validate`].
    pub fn new(n: usize, rows: Vec<Row>) -> Self {
        DegreeSchedule { n, rows }
    }

    /// Like [`DegreeSchedule::new`] but rejects schedules with violations.
    pub fn checked(n: usize, rows: Vec<Row>) -> Result<Self> {
        let s = DegreeSchedule::new(n, rows);
        s.ensure_valid()?;
        Ok(s)
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// Row `i`; rows past the stored ones are empty.
    pub fn row(&self, i: usize) -> &Row {
        static EMPTY: Row = Row { runs: Vec::new() };
        self.rows.get(i).unwrap_or(&EMPTY)
    }

    /// `D_i`.
    pub fn generation_size(&self, i: usize) -> u64 {
        self.row(i).total()
    }

    /// `D_0, D_1, ...` up to and including `D_h`.
    pub fn generation_sizes(&self) -> Vec<u64> {
        (0..=self.height()).map(|i| self.generation_size(i)).collect()
    }

    /// `h = inf{i : d_{i,1} = 0}`.
    pub fn height(&self) -> usize {
        self.rows
            .iter()
            .position(Row::is_empty)
            .unwrap_or(self.rows.len())
    }

    /// Number of vertices at height `i`: one root, then `D_{i-1}`.
    pub fn vertices_at(&self, i: usize) -> u64 {
        if i == 0 {
            1
        } else if i <= self.height() {
            self.generation_size(i - 1)
        } else {
            0
        }
    }

    pub fn total_vertices(&self) -> u64 {
        1 + (0..self.height()).map(|i| self.generation_size(i)).sum::<u64>()
    }

    /// `||D|| = max_{0 <= i <= h} D_i`.
    pub fn max_generation(&self) -> u64 {
        (0..=self.height())
            .map(|i| self.generation_size(i))
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.n == 0 {
            violations.push(Violation::ZeroScale);
        }
        for (i, row) in self.rows.iter().enumerate() {
            for w in row.runs.windows(2) {
                if w[1].0 > w[0].0 {
                    violations.push(Violation::NotNonIncreasing { height: i });
                    break;
                }
            }
            let malformed = row.runs.iter().any(|&(d, c)| c == 0 || d == 0)
                || row.runs.windows(2).any(|w| w[0].0 == w[1].0);
            if malformed {
                violations.push(Violation::MalformedRun { height: i });
            }
        }
        if self.row(0).positive_count() > 1 {
            violations.push(Violation::RootRowMultiple);
        }
        for i in 0..self.rows.len() {
            let available = self.generation_size(i);
            let positive = self.row(i + 1).positive_count();
            if positive > available {
                violations.push(Violation::Incoherent {
                    height: i + 1,
                    positive,
                    available,
                });
            }
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidSchedule(report.to_string()))
        }
    }

    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn to_json_writer<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, self)?;
        Ok(())
    }

    /// The four-generation example with `D = (4, 5, 3, 2, 0)`.
    pub fn small_example() -> Self {
        DegreeSchedule::new(
            4,
            vec![
                Row::from_degrees(&[4]),
                Row::from_degrees(&[3, 1, 1]),
                Row::from_degrees(&[2, 1]),
                Row::from_degrees(&[2]),
            ],
        )
    }

    /// A path of length `n`: `d_{i,1} = 1` for `i < n`.
    pub fn path(n: usize) -> Self {
        DegreeSchedule::new(n, vec![Row::new(vec![(1, 1)]); n])
    }

    /// Constant generations of size `m`: the root has `m` children, then
    /// heights `1..=n` each hold one vertex of degree 2, `m - 2` of degree 1
    /// and one leaf. Two lines meet at a given height with probability
    /// `1 / C(m, 2)`, so with `n = C(m, 2) * c` the pairwise merge rate per
    /// unit of rescaled height is `c`. The tree has height `n + 1`.
    pub fn kingman(n: usize, m: u64) -> Self {
        assert!(m >= 3, "kingman family needs m >= 3");
        let mut rows = Vec::with_capacity(n + 1);
        rows.push(Row::new(vec![(m, 1)]));
        rows.extend(std::iter::repeat_n(Row::new(vec![(2, 1), (1, m - 2)]), n));
        DegreeSchedule::new(n, rows)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ZeroScale,
    NotNonIncreasing { height: usize },
    MalformedRun { height: usize },
    RootRowMultiple,
    Incoherent { height: usize, positive: u64, available: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroScale => write!(f, "scaling index n must be positive"),
            Violation::NotNonIncreasing { height } => {
                write!(f, "row {height} is not non-increasing")
            }
            Violation::MalformedRun { height } => write!(
                f,
                "row {height} has a run with zero degree, zero count or a repeated degree"
            ),
            Violation::RootRowMultiple => write!(f, "root row has two positive degrees"),
            Violation::Incoherent { height, positive, available } => write!(
                f,
                "height {height} has {positive} vertices with positive degree but only {available} vertices"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_example_is_valid_with_expected_profile() {
        let s = DegreeSchedule::small_example();
        assert!(s.validate().is_valid());
        assert_eq!(s.generation_sizes(), vec![4, 5, 3, 2, 0]);
        assert_eq!(s.height(), 4);
        assert_eq!(s.total_vertices(), 15);
    }

    #[test]
    fn path_is_valid() {
        let s = DegreeSchedule::path(9);
        assert!(s.validate().is_valid());
        assert_eq!(s.height(), 9);
        assert!(s.generation_sizes()[..9].iter().all(|&d| d == 1));
    }

    #[test]
    fn root_with_two_children_slots_is_flagged() {
        let s = DegreeSchedule::new(2, vec![Row::from_degrees(&[1, 1]), Row::from_degrees(&[1])]);
        let report = s.validate();
        assert!(report.violations.contains(&Violation::RootRowMultiple));
        assert!(report.to_string().contains("root row has two positive degrees"));
    }

    #[test]
    fn incoherent_and_increasing_rows_are_flagged() {
        let s = DegreeSchedule::new(
            3,
            vec![
                Row::from_degrees(&[2]),
                Row::from_degrees(&[1, 1, 1]),
                Row::new(vec![(1, 1), (2, 1)]),
            ],
        );
        let v = s.validate().violations;
        assert!(v.contains(&Violation::Incoherent { height: 1, positive: 3, available: 2 }));
        assert!(v.contains(&Violation::NotNonIncreasing { height: 2 }));
    }

    #[test]
    fn kingman_rows() {
        let s = DegreeSchedule::kingman(420, 21);
        assert!(s.validate().is_valid());
        assert_eq!(s.height(), 421);
        assert!(s.generation_sizes()[..421].iter().all(|&d| d == 21));
    }

    #[test]
    fn json_format() {
        let s = DegreeSchedule::small_example();
        let mut buf = Vec::new();
        s.to_json_writer(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, r#"{"n":4,"rows":[[[4,1]],[[3,1],[1,2]],[[2,1],[1,1]],[[2,1]]]}"#);
        let back = DegreeSchedule::from_json_reader(text.as_bytes()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn row_degree_lookup() {
        let r = Row::from_degrees(&[3, 1, 1, 0, 0]);
        assert_eq!(r.runs(), &[(3, 1), (1, 2)]);
        assert_eq!((r.degree(1), r.degree(3), r.degree(4)), (3, 1, 0));
        assert_eq!(r.total(), 5);
    }
}
