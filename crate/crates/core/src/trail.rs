//! k-trails and the Hausdorff and leaf-tightness statistics built on them.
//!
//! A k-trail picks `min(k, D_{i-1})` distinct vertices at every height `i`,
//! organised as `k` descending lines: line `j` follows fathers while they are
//! free and otherwise jumps to a uniform unused vertex of the same height.
//! Each height draws from its own substream, so the trail at heights `>= H`
//! depends only on the tree above `H` and those substreams.

use std::collections::{HashSet, VecDeque};
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::discrete::GenealogyTrace;
use crate::rng::{substream, StreamRng};
use crate::tree::{Tree, VertexRef};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Trail {
    pub k: usize,
    /// `members[i][j - 1]` is `X_{i,j}`; height 0 holds the root.
    pub members: Vec<Vec<VertexRef>>,
}

impl Trail {
    pub fn len(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The trail built from the first `k` lines. Equal to building with `k`
    /// and the same randomness.
    pub fn prefix(&self, k: usize) -> Trail {
        let members = self
            .members
            .iter()
            .enumerate()
            .map(|(i, m)| if i == 0 { m.clone() } else { m[..m.len().min(k)].to_vec() })
            .collect();
        Trail { k: k.min(self.k), members }
    }

    /// Checks per-height counts, distinctness and father closure.
    pub fn check(&self, tree: &Tree) -> std::result::Result<(), String> {
        if self.members.len() != tree.height() + 1 {
            return Err(format!("trail covers {} heights, tree has {}", self.members.len(), tree.height() + 1));
        }
        if self.members[0] != [VertexRef::ROOT] {
            return Err("height 0 must hold exactly the root".into());
        }
        for (i, level) in self.members.iter().enumerate().skip(1) {
            let want = self.k.min(tree.vertices_at(i));
            if level.len() != want {
                return Err(format!("height {i}: {} vertices, expected {want}", level.len()));
            }
            let mut seen = HashSet::new();
            for (j, &v) in level.iter().enumerate() {
                if v.height != i || !tree.contains(v) {
                    return Err(format!("height {i}: {v} is not a vertex of this height"));
                }
                if !seen.insert(v.index) {
                    return Err(format!("height {i}: {v} repeated"));
                }
                let f = tree.father_unchecked(v);
                let below = &self.members[i - 1];
                if !below[..(j + 1).min(below.len())].contains(&f) {
                    return Err(format!("height {i}: father of {v} is not on lines 1..={}", j + 1));
                }
            }
        }
        Ok(())
    }

    /// CSV with columns `height, slot, i, j`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["height", "slot", "i", "j"])?;
        for (i, level) in self.members.iter().enumerate() {
            for (slot, v) in level.iter().enumerate() {
                w.serialize((i, slot + 1, v.height, v.index))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds a k-trail; one key is drawn from `rng`.
pub fn build_trail<R: Rng + ?Sized>(tree: &Tree, k: usize, rng: &mut R) -> Result<Trail> {
    build_trail_keyed(tree, k, rng.next_u64())
}

/// Builds a k-trail with height `i` drawing from the substream `(key, i)`.
/// Trails for different `k` under one key are nested.
pub fn build_trail_keyed(tree: &Tree, k: usize, key: u64) -> Result<Trail> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let h = tree.height();
    let mut members: Vec<Vec<VertexRef>> = vec![Vec::new(); h + 1];
    members[0].push(VertexRef::ROOT);
    let mut used: Vec<HashSet<usize>> = vec![HashSet::new(); h + 1];
    let mut rngs: Vec<Option<StreamRng>> = (0..=h).map(|_| None).collect();

    for j in 1..=k {
        let mut any = false;
        let mut above: Option<VertexRef> = None;
        for i in (1..=h).rev() {
            let width = tree.vertices_at(i);
            if j > width {
                above = None;
                continue;
            }
            any = true;
            let father = above.map(|v| tree.father_unchecked(v)).filter(|f| !used[i].contains(&f.index));
            let v = match father {
                Some(f) => f,
                None => {
                    let rng = rngs[i].get_or_insert_with(|| substream(key, i as u64));
                    VertexRef::new(i, uniform_unused(&used[i], width, rng))
                }
            };
            used[i].insert(v.index);
            members[i].push(v);
            above = Some(v);
        }
        if !any {
            break;
        }
    }
    Ok(Trail { k, members })
}

fn uniform_unused<R: Rng + ?Sized>(used: &HashSet<usize>, width: usize, rng: &mut R) -> usize {
    if used.len() * 2 <= width {
        loop {
            let c = rng.random_range(1..=width);
            if !used.contains(&c) {
                return c;
            }
        }
    }
    let free: Vec<usize> = (1..=width).filter(|c| !used.contains(c)).collect();
    free[rng.random_range(0..free.len())]
}

/// Graph distance from every vertex to the nearest source, indexed by
/// global id.
pub fn distances_to_set(tree: &Tree, sources: impl IntoIterator<Item = VertexRef>) -> Vec<usize> {
    let mut dist = vec![usize::MAX; tree.vertex_count()];
    let mut queue = VecDeque::new();
    for v in sources {
        let id = tree.global_id(v);
        if dist[id] == usize::MAX {
            dist[id] = 0;
            queue.push_back(id);
        }
    }
    let mut nbrs = Vec::new();
    while let Some(id) = queue.pop_front() {
        tree.neighbour_ids(id, &mut nbrs);
        for &n in &nbrs {
            if dist[n] == usize::MAX {
                dist[n] = dist[id] + 1;
                queue.push_back(n);
            }
        }
    }
    dist
}

/// Largest distance from a vertex of the tree to the nearest member of
/// `set`, which must be nonempty.
pub fn hausdorff_to_set(tree: &Tree, set: impl IntoIterator<Item = VertexRef>) -> usize {
    distances_to_set(tree, set).into_iter().max().unwrap_or(0)
}

/// Hausdorff distance between the trail and the whole tree.
pub fn hausdorff_to_tree(tree: &Tree, trail: &Trail) -> usize {
    hausdorff_to_set(tree, trail.members.iter().flatten().copied())
}

/// Number of labels born at height `>= x` that have not met any other label
/// at height `x` or above.
pub fn leaf_tightness_stat(trace: &GenealogyTrace, x: usize) -> usize {
    (0..trace.k)
        .filter(|&q| {
            trace.birth_heights[q] >= x && (0..trace.k).all(|r| r == q || trace.c[q][r] < x)
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub k: usize,
    pub estimate: f64,
    pub stderr: f64,
}

/// Monte Carlo estimate, for each `k`, of the probability that `k` i.i.d.
/// uniform vertices leave some vertex farther than `delta * n` away.
///
/// Within a replicate the sets for different `k` are prefixes of one draw,
/// so every replicate is monotone in `k`.
pub fn strong_leaf_tightness_curve<R: Rng + ?Sized>(
    tree: &Tree,
    rng: &mut R,
    k_grid: &[usize],
    delta: f64,
    replicates: usize,
) -> Result<Vec<CurvePoint>> {
    if k_grid.is_empty() || k_grid.contains(&0) {
        return Err(Error::InvalidArgument("k grid must be nonempty and positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0,1), got {delta}")));
    }
    if replicates == 0 {
        return Err(Error::InvalidArgument("replicates must be positive".into()));
    }
    let cut = delta * tree.schedule().n as f64;
    let k_max = *k_grid.iter().max().unwrap();
    let mut hits = vec![0usize; k_grid.len()];
    for _ in 0..replicates {
        let vs = tree.sample_uniform_vertices(k_max, rng);
        for (slot, &k) in k_grid.iter().enumerate() {
            if hausdorff_to_set(tree, vs[..k].iter().copied()) as f64 > cut {
                hits[slot] += 1;
            }
        }
    }
    Ok(k_grid
        .iter()
        .zip(hits)
        .map(|(&k, hit)| {
            let p = hit as f64 / replicates as f64;
            CurvePoint { k, estimate: p, stderr: (p * (1.0 - p) / replicates as f64).sqrt() }
        })
        .collect())
}

/// CSV with columns `k, estimate, stderr`.
pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in curve {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
