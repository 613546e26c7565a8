//! Genealogy of finitely many vertices of a sampled tree.
//!
//! Labels are `1..=k`. Walking down from the highest sampled vertex, the
//! ancestor lines of the labels coalesce; every coincidence at a vertex is one
//! [`MergeEvent`] whose surviving label is the smallest one involved.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::schedule::DegreeSchedule;
use crate::tree::{Tree, VertexRef};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub height: usize,
    /// Every label whose block takes part, sorted.
    pub merged_labels: Vec<usize>,
    pub surviving_label: usize,
    pub merge_vertex: VertexRef,
    /// `d_{i,j} / D_i` for the merge vertex `(i, j)`.
    pub degree_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenealogyTrace {
    pub k: usize,
    /// Height of each sampled vertex, indexed by `label - 1`.
    pub birth_heights: Vec<usize>,
    /// Ordered by non-increasing height; events at one height are ordered by
    /// merge vertex.
    pub events: Vec<MergeEvent>,
    /// `c[q][r]`: height of the nearest common ancestor of labels `q+1, r+1`.
    pub c: Vec<Vec<usize>>,
}

/// Line format of the JSON-lines event export.
#[derive(Serialize)]
struct EventLine<'a> {
    height: usize,
    labels: &'a [usize],
    survivor: usize,
    vertex: [usize; 2],
    ratio: f64,
}

impl GenealogyTrace {
    /// Distances implied by the trace: `h(V_q) + h(V_r) - 2 c(q, r)`.
    pub fn distance(&self, q: usize, r: usize) -> usize {
        self.birth_heights[q] + self.birth_heights[r] - 2 * self.c[q][r]
    }

    /// Labels alive at height `i`, grouped into blocks and indexed by label:
    /// `blocks[r - 1]` is the block carried by label `r`, empty unless `r` is
    /// the smallest label of a block.
    pub fn partition_at(&self, i: usize) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.k];
        let mut owner: Vec<Option<usize>> = vec![None; self.k];
        for r in 0..self.k {
            if self.birth_heights[r] < i {
                continue;
            }
            let head = (0..r).find(|&q| self.birth_heights[q] >= i && self.c[q][r] >= i);
            let head = head.map_or(r, |q| owner[q].unwrap_or(q));
            owner[r] = Some(head);
            blocks[head].push(r + 1);
        }
        blocks
    }

    /// Number of distinct ancestor lines present at height `i`.
    pub fn active_lines(&self, i: usize) -> usize {
        self.partition_at(i).iter().filter(|b| !b.is_empty()).count()
    }

    /// `true` if the minimum of `c` over any three distinct labels is attained
    /// at least twice.
    pub fn satisfies_three_point(&self) -> bool {
        let k = self.k;
        for q in 0..k {
            for r in q + 1..k {
                for s in r + 1..k {
                    let mut v = [self.c[q][r], self.c[r][s], self.c[q][s]];
                    v.sort_unstable();
                    if v[0] != v[1] {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// One JSON object per event and line.
    pub fn write_events_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for e in &self.events {
            let line = EventLine {
                height: e.height,
                labels: &e.merged_labels,
                survivor: e.surviving_label,
                vertex: [e.merge_vertex.height, e.merge_vertex.index],
                ratio: e.degree_ratio,
            };
            serde_json::to_writer(&mut writer, &line)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Follows the ancestor lines of `vertices` (labels `1..=k` in order) down to
/// the root.
pub fn trace_genealogy(tree: &Tree, vertices: &[VertexRef]) -> Result<GenealogyTrace> {
    let k = vertices.len();
    for &v in vertices {
        if !tree.contains(v) {
            return Err(Error::NoSuchVertex { height: v.height, index: v.index });
        }
    }
    let birth_heights: Vec<usize> = vertices.iter().map(|v| v.height).collect();
    let mut c = vec![vec![0usize; k]; k];
    for (q, &h) in birth_heights.iter().enumerate() {
        c[q][q] = h;
    }
    let mut events = Vec::new();
    if k == 0 {
        return Ok(GenealogyTrace { k, birth_heights, events, c });
    }

    // labels sorted by decreasing birth height, consumed as lines are born
    let mut pending: Vec<usize> = (0..k).collect();
    pending.sort_by_key(|&r| std::cmp::Reverse(birth_heights[r]));
    let mut next = 0;
    // (position at current height, labels of the block), sorted by position
    let mut lines: Vec<(usize, Vec<usize>)> = Vec::new();
    let schedule = tree.schedule();
    let top = birth_heights[pending[0]];

    for i in (0..=top).rev() {
        while next < k && birth_heights[pending[next]] == i {
            let r = pending[next];
            lines.push((vertices[r].index, vec![r]));
            next += 1;
        }
        lines.sort_by_key(|l| l.0);
        let mut merged: Vec<(usize, Vec<usize>)> = Vec::with_capacity(lines.len());
        let mut a = 0;
        while a < lines.len() {
            let mut b = a + 1;
            while b < lines.len() && lines[b].0 == lines[a].0 {
                b += 1;
            }
            if b - a == 1 {
                merged.push(std::mem::take(&mut lines[a]));
            } else {
                for x in a..b {
                    for y in x + 1..b {
                        for &q in &lines[x].1 {
                            for &r in &lines[y].1 {
                                c[q][r] = i;
                                c[r][q] = i;
                            }
                        }
                    }
                }
                let mut labels: Vec<usize> = lines[a..b].iter().flat_map(|l| l.1.iter().copied()).collect();
                labels.sort_unstable();
                let pos = lines[a].0;
                let degree = schedule.row(i).degree(pos as u64);
                let size = schedule.generation_size(i);
                events.push(MergeEvent {
                    height: i,
                    merged_labels: labels.iter().map(|r| r + 1).collect(),
                    surviving_label: labels[0] + 1,
                    merge_vertex: VertexRef::new(i, pos),
                    degree_ratio: degree as f64 / size as f64,
                });
                merged.push((pos, labels));
            }
            a = b;
        }
        lines = merged;
        if i > 0 {
            for line in &mut lines {
                line.0 = tree.father_unchecked(VertexRef::new(i, line.0)).index;
            }
        }
    }
    Ok(GenealogyTrace { k, birth_heights, events, c })
}

/// The partition of labels at height `i`; see [`GenealogyTrace::partition_at`].
pub fn partition_path(trace: &GenealogyTrace, i: usize) -> Vec<Vec<usize>> {
    trace.partition_at(i)
}

/// Probability that two fixed distinct vertices at height `i + 1` have the
/// same father and that father's degree is at most `threshold * D_i`.
pub fn small_merge_probability(schedule: &DegreeSchedule, i: usize, threshold: f64) -> Result<f64> {
    let total = schedule.generation_size(i);
    if total < 2 {
        return Err(Error::TooFewVertices { height: i });
    }
    let pairs = |d: u64| (d * d.saturating_sub(1)) as f64 / 2.0;
    let cut = threshold * total as f64;
    let sum: f64 = schedule
        .row(i)
        .runs()
        .iter()
        .filter(|&&(d, _)| d as f64 <= cut)
        .map(|&(d, c)| c as f64 * pairs(d))
        .sum();
    Ok(sum / pairs(total))
}
