//! Uniform trees realising a degree schedule.
//!
//! Height `i + 1` is attached to height `i` by a uniform permutation of the
//! slot multiset in which parent `(i, j)` appears `d_{i,j}` times; child `c`
//! takes the `c`-th slot. Heights use independent substreams, so the
//! attachment at one height is a function of the sampling key and that height
//! alone.

mod enumerate;
mod export;

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::substream;
use crate::schedule::DegreeSchedule;
use crate::{Error, Result};

pub use enumerate::{enumerate_trees, multinomial_count, TreeEnumeration, DEFAULT_ENUMERATION_CAP};
pub use export::render_svg;

/// Vertex `(i, j)`: height `i`, 1-based position `j` within its height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexRef {
    pub height: usize,
    pub index: usize,
}

impl VertexRef {
    pub const ROOT: VertexRef = VertexRef { height: 0, index: 1 };

    pub fn new(height: usize, index: usize) -> Self {
        VertexRef { height, index }
    }
}

impl fmt::Display for VertexRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.height, self.index)
    }
}

#[derive(Debug, Clone)]
pub struct Tree {
    schedule: Arc<DegreeSchedule>,
    /// `parents[i][c]`: 0-based position of the father of `(i, c + 1)`.
    parents: Vec<Vec<u32>>,
    /// `child_start[i][j]..child_start[i][j + 1]` indexes `children[i + 1]`.
    child_start: Vec<Vec<u32>>,
    /// `children[i]`: 0-based positions at height `i`, grouped by father.
    children: Vec<Vec<u32>>,
    /// Number of vertices strictly below each height.
    offsets: Vec<u64>,
}

impl Tree {
    /// Samples a uniform tree. One key is drawn from `rng`; height `i` is
    /// shuffled with the substream `(key, i)`.
    pub fn sample<R: Rng + ?Sized>(schedule: Arc<DegreeSchedule>, rng: &mut R) -> Result<Tree> {
        Tree::sample_keyed(schedule, rng.next_u64())
    }

    pub fn sample_keyed(schedule: Arc<DegreeSchedule>, key: u64) -> Result<Tree> {
        schedule.ensure_valid()?;
        let h = schedule.height();
        let mut parents = Vec::with_capacity(h + 1);
        parents.push(Vec::new());
        for i in 1..=h {
            let mut slots = slot_multiset(&schedule, i - 1);
            slots.shuffle(&mut substream(key, i as u64));
            parents.push(slots);
        }
        Ok(Tree::assemble(schedule, parents))
    }

    /// Rebuilds a tree from explicit parent arrays, checking that every
    /// vertex receives exactly its scheduled number of children.
    pub fn from_parents(schedule: Arc<DegreeSchedule>, parents: Vec<Vec<u32>>) -> Result<Tree> {
        schedule.ensure_valid()?;
        let h = schedule.height();
        if parents.len() != h + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} parent arrays, got {}",
                h + 1,
                parents.len()
            )));
        }
        for i in 1..=h {
            let mut want = slot_multiset(&schedule, i - 1);
            let mut got = parents[i].clone();
            want.sort_unstable();
            got.sort_unstable();
            if want != got {
                return Err(Error::InvalidArgument(format!(
                    "parent array at height {i} does not match the scheduled degrees"
                )));
            }
        }
        Ok(Tree::assemble(schedule, parents))
    }

    fn assemble(schedule: Arc<DegreeSchedule>, parents: Vec<Vec<u32>>) -> Tree {
        let h = schedule.height();
        let mut child_start = Vec::with_capacity(h + 1);
        let mut children = vec![Vec::new(); h + 1];
        for i in 0..=h {
            let row = schedule.row(i);
            let width = schedule.vertices_at(i) as usize;
            let mut start = Vec::with_capacity(width + 1);
            start.push(0u32);
            let mut acc = 0u32;
            for j in 1..=width as u64 {
                acc += row.degree(j) as u32;
                start.push(acc);
            }
            if i < h {
                let mut pos = start.clone();
                let mut kids = vec![0u32; parents[i + 1].len()];
                for (c, &p) in parents[i + 1].iter().enumerate() {
                    kids[pos[p as usize] as usize] = c as u32;
                    pos[p as usize] += 1;
                }
                children[i + 1] = kids;
            }
            child_start.push(start);
        }
        let mut offsets = Vec::with_capacity(h + 2);
        let mut acc = 0;
        for i in 0..=h {
            offsets.push(acc);
            acc += schedule.vertices_at(i);
        }
        offsets.push(acc);
        Tree { schedule, parents, child_start, children, offsets }
    }

    pub fn schedule(&self) -> &DegreeSchedule {
        &self.schedule
    }

    pub fn schedule_arc(&self) -> &Arc<DegreeSchedule> {
        &self.schedule
    }

    pub fn height(&self) -> usize {
        self.parents.len() - 1
    }

    pub fn vertices_at(&self, i: usize) -> usize {
        if i > self.height() {
            0
        } else {
            (self.offsets[i + 1] - self.offsets[i]) as usize
        }
    }

    pub fn vertex_count(&self) -> usize {
        *self.offsets.last().unwrap() as usize
    }

    pub fn contains(&self, v: VertexRef) -> bool {
        v.index >= 1 && v.index <= self.vertices_at(v.height)
    }

    fn check(&self, v: VertexRef) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::NoSuchVertex { height: v.height, index: v.index })
        }
    }

    /// Dense id in `0..vertex_count()`, ordered by height then index.
    pub fn global_id(&self, v: VertexRef) -> usize {
        (self.offsets[v.height] as usize) + v.index - 1
    }

    pub fn vertex_of(&self, id: usize) -> VertexRef {
        let height = self.offsets.partition_point(|&o| o as usize <= id) - 1;
        VertexRef { height, index: id - self.offsets[height] as usize + 1 }
    }

    /// Raw parent arrays, one per height (height 0 is empty).
    pub fn parents(&self) -> &[Vec<u32>] {
        &self.parents
    }

    pub fn father(&self, v: VertexRef) -> Result<VertexRef> {
        self.check(v)?;
        if v.height == 0 {
            return Err(Error::RootHasNoFather);
        }
        Ok(self.father_unchecked(v))
    }

    #[inline]
    pub(crate) fn father_unchecked(&self, v: VertexRef) -> VertexRef {
        let p = self.parents[v.height][v.index - 1];
        VertexRef { height: v.height - 1, index: p as usize + 1 }
    }

    pub fn children(&self, v: VertexRef) -> impl Iterator<Item = VertexRef> + '_ {
        let (lo, hi) = if v.height < self.height() {
            let start = &self.child_start[v.height];
            (start[v.index - 1] as usize, start[v.index] as usize)
        } else {
            (0, 0)
        };
        let h = v.height + 1;
        let kids: &[u32] = if lo < hi { &self.children[h][lo..hi] } else { &[] };
        kids.iter().map(move |&c| VertexRef { height: h, index: c as usize + 1 })
    }

    pub fn ancestor(&self, v: VertexRef, steps: usize) -> Result<VertexRef> {
        self.check(v)?;
        if steps > v.height {
            return Err(Error::AncestorOutOfRange { height: v.height, steps });
        }
        Ok(self.ancestor_unchecked(v, steps))
    }

    pub(crate) fn ancestor_unchecked(&self, mut v: VertexRef, steps: usize) -> VertexRef {
        for _ in 0..steps {
            v = self.father_unchecked(v);
        }
        v
    }

    /// Deepest common ancestor: lift the higher vertex, then climb in lockstep.
    pub fn lca(&self, u: VertexRef, v: VertexRef) -> Result<VertexRef> {
        self.check(u)?;
        self.check(v)?;
        let (mut a, mut b) = if u.height >= v.height { (u, v) } else { (v, u) };
        a = self.ancestor_unchecked(a, a.height - b.height);
        while a != b {
            a = self.father_unchecked(a);
            b = self.father_unchecked(b);
        }
        Ok(a)
    }

    pub fn distance(&self, u: VertexRef, v: VertexRef) -> Result<usize> {
        let w = self.lca(u, v)?;
        Ok(u.height + v.height - 2 * w.height)
    }

    /// `k` i.i.d. uniform vertices over all heights, root included.
    pub fn sample_uniform_vertices<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<VertexRef> {
        let total = self.vertex_count() as u64;
        (0..k)
            .map(|_| self.vertex_of(rng.random_range(0..total) as usize))
            .collect()
    }

    /// Symmetric matrix of pairwise graph distances, row-major.
    pub fn distance_matrix(&self, vertices: &[VertexRef]) -> Result<Vec<Vec<usize>>> {
        let k = vertices.len();
        let mut m = vec![vec![0usize; k]; k];
        for a in 0..k {
            for b in a + 1..k {
                let d = self.distance(vertices[a], vertices[b])?;
                m[a][b] = d;
                m[b][a] = d;
            }
        }
        Ok(m)
    }

    /// Undirected neighbours of a dense id, for graph searches.
    pub(crate) fn neighbour_ids(&self, id: usize, out: &mut Vec<usize>) {
        out.clear();
        let v = self.vertex_of(id);
        if v.height > 0 {
            out.push(self.global_id(self.father_unchecked(v)));
        }
        out.extend(self.children(v).map(|c| self.global_id(c)));
    }

    /// Flattened parent arrays, a canonical key for the tree's shape.
    pub fn parent_key(&self) -> Vec<u32> {
        self.parents.iter().flatten().copied().collect()
    }
}

/// Parent `j` (0-based) repeated `d_{i,j}` times.
fn slot_multiset(schedule: &DegreeSchedule, i: usize) -> Vec<u32> {
    let mut slots = Vec::with_capacity(schedule.generation_size(i) as usize);
    let mut j = 0u32;
    for &(d, c) in schedule.row(i).runs() {
        for _ in 0..c {
            slots.extend(std::iter::repeat_n(j, d as usize));
            j += 1;
        }
    }
    slots
}

/// Samples a uniform tree for `schedule`.
pub fn sample_tree<R: Rng + ?Sized>(schedule: &Arc<DegreeSchedule>, rng: &mut R) -> Result<Tree> {
    Tree::sample(Arc::clone(schedule), rng)
}
