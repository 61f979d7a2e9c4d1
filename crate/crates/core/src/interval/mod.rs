//! Interval graph recognition with certificates.
//!
//! `recognize` returns either an exact interval model or a forbidden induced
//! subgraph: a chordless cycle when the graph is not chordal, an asteroidal
//! triple otherwise. Chordality comes from maximum cardinality search, the
//! clique ordering from a PQ-tree over the maximal cliques.

pub mod brute;
pub mod resolve;

use pq_tree::PQTree;

use crate::error::{Error, Result};
use crate::graph::UGraph;

/// Closed interval with integer endpoints; `left < right` always holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub left: i64,
    pub right: i64,
}

impl Interval {
    pub fn intersects(&self, other: &Interval) -> bool {
        self.left <= other.right && other.left <= self.right
    }
}

/// One interval per vertex, indexed like the graph it realizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalModel {
    pub intervals: Vec<Interval>,
}

impl IntervalModel {
    /// Position of each vertex when sorted by (left, right, index).
    pub fn ranks(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.intervals.len()).collect();
        order.sort_by_key(|&v| (self.intervals[v].left, self.intervals[v].right, v));
        let mut rank = vec![0; order.len()];
        for (r, &v) in order.iter().enumerate() {
            rank[v] = r;
        }
        rank
    }

    /// True iff the intervals intersect exactly on the edges of `g`.
    pub fn realizes(&self, g: &UGraph) -> bool {
        if self.intervals.len() != g.n() || self.intervals.iter().any(|i| i.left >= i.right) {
            return false;
        }
        let mut order: Vec<usize> = (0..g.n()).collect();
        order.sort_by_key(|&v| (self.intervals[v].left, v));
        let mut active: Vec<usize> = Vec::new();
        let mut pairs = 0usize;
        for &v in &order {
            let iv = self.intervals[v];
            active.retain(|&u| self.intervals[u].right >= iv.left);
            for &u in &active {
                if !g.has_edge(u, v) {
                    return false;
                }
                pairs += 1;
                if pairs > g.m() {
                    return false;
                }
            }
            active.push(v);
        }
        pairs == g.m()
    }
}

/// Induced subgraph that no interval graph contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForbiddenWitness {
    /// Cycle of length at least four, listed in cycle order, with no chords.
    ChordlessCycle(Vec<usize>),
    /// Three pairwise non-adjacent vertices; `paths[i]` joins the two vertices
    /// other than `triple[i]` while avoiding its closed neighbourhood.
    AsteroidalTriple {
        triple: [usize; 3],
        paths: [Vec<usize>; 3],
    },
}

impl ForbiddenWitness {
    /// Every vertex mentioned by the witness, sorted and deduplicated.
    pub fn vertices(&self) -> Vec<usize> {
        let mut vs = match self {
            ForbiddenWitness::ChordlessCycle(c) => c.clone(),
            ForbiddenWitness::AsteroidalTriple { triple, paths } => {
                let mut v = triple.to_vec();
                for p in paths {
                    v.extend_from_slice(p);
                }
                v
            }
        };
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Check the witness structurally against `g`.
    pub fn holds_in(&self, g: &UGraph) -> bool {
        match self {
            ForbiddenWitness::ChordlessCycle(c) => {
                let k = c.len();
                if k < 4 {
                    return false;
                }
                let mut sorted = c.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != k {
                    return false;
                }
                for i in 0..k {
                    for j in i + 1..k {
                        let consecutive = j == i + 1 || (i == 0 && j == k - 1);
                        if g.has_edge(c[i], c[j]) != consecutive {
                            return false;
                        }
                    }
                }
                true
            }
            ForbiddenWitness::AsteroidalTriple { triple, paths } => {
                let [x, y, z] = *triple;
                if g.has_edge(x, y) || g.has_edge(y, z) || g.has_edge(x, z) {
                    return false;
                }
                let ends = [(y, z), (x, z), (x, y)];
                for i in 0..3 {
                    let p = &paths[i];
                    let avoid = triple[i];
                    if p.first() != Some(&ends[i].0) || p.last() != Some(&ends[i].1) {
                        return false;
                    }
                    if p.windows(2).any(|w| !g.has_edge(w[0], w[1])) {
                        return false;
                    }
                    if p.iter().any(|&u| u == avoid || g.has_edge(u, avoid)) {
                        return false;
                    }
                }
                true
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recognition {
    Interval(IntervalModel),
    Forbidden(ForbiddenWitness),
}

impl Recognition {
    pub fn is_interval(&self) -> bool {
        matches!(self, Recognition::Interval(_))
    }
}

/// Maximum cardinality search. Returns the visit order and, for each visited
/// vertex, the number of already visited neighbours at visit time.
fn max_cardinality_search(g: &UGraph) -> (Vec<usize>, Vec<usize>) {
    let n = g.n();
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut buckets: Vec<Vec<usize>> = vec![(0..n).rev().collect()];
    let mut top = 0usize;
    let mut order = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while order.len() < n {
        let v = loop {
            match buckets[top].pop() {
                Some(v) if !visited[v] && weight[v] == top => break v,
                Some(_) => {}
                None => top -= 1,
            }
        };
        visited[v] = true;
        order.push(v);
        labels.push(weight[v]);
        for &w in g.neighbors(v) {
            if !visited[w] {
                weight[w] += 1;
                if weight[w] == buckets.len() {
                    buckets.push(Vec::new());
                }
                buckets[weight[w]].push(w);
                top = top.max(weight[w]);
            }
        }
    }
    (order, labels)
}

/// Chordless cycle through `v` and its non-adjacent neighbours `p` and `w`,
/// if a `p`-`w` path avoiding the rest of `N[v]` exists.
fn cycle_through(g: &UGraph, v: usize, p: usize, w: usize) -> Option<Vec<usize>> {
    let mut blocked = vec![false; g.n()];
    blocked[v] = true;
    for &u in g.neighbors(v) {
        blocked[u] = true;
    }
    let path = g.shortest_path(p, w, &blocked)?;
    let mut cycle = vec![v];
    cycle.extend(path);
    Some(cycle)
}

fn find_chordless_cycle(g: &UGraph, order: &[usize], pos: &[usize]) -> ForbiddenWitness {
    for &v in order {
        let earlier: Vec<usize> = g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&u| pos[u] < pos[v])
            .collect();
        let Some(&p) = earlier.iter().max_by_key(|&&u| pos[u]) else {
            continue;
        };
        for &w in &earlier {
            if w != p && !g.has_edge(p, w) {
                if let Some(c) = cycle_through(g, v, p, w) {
                    return ForbiddenWitness::ChordlessCycle(c);
                }
            }
        }
    }
    // Every chordless cycle passes through some vertex with two non-adjacent
    // neighbours joined outside its neighbourhood, so this search is complete.
    for v in 0..g.n() {
        let ns = g.neighbors(v);
        for (i, &p) in ns.iter().enumerate() {
            for &w in &ns[i + 1..] {
                if !g.has_edge(p, w) {
                    if let Some(c) = cycle_through(g, v, p, w) {
                        return ForbiddenWitness::ChordlessCycle(c);
                    }
                }
            }
        }
    }
    unreachable!("non-chordal graph without a chordless cycle")
}

/// Perfect-elimination check over an MCS order; returns the order and labels
/// when chordal.
fn chordal_order(g: &UGraph) -> std::result::Result<(Vec<usize>, Vec<usize>), ForbiddenWitness> {
    let (order, labels) = max_cardinality_search(g);
    let mut pos = vec![0; g.n()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    for &v in &order {
        let mut parent = None;
        for &u in g.neighbors(v) {
            if pos[u] < pos[v] && parent.is_none_or(|p: usize| pos[u] > pos[p]) {
                parent = Some(u);
            }
        }
        let Some(p) = parent else { continue };
        let ok = g
            .neighbors(v)
            .iter()
            .all(|&u| u == p || pos[u] > pos[v] || g.has_edge(u, p));
        if !ok {
            return Err(find_chordless_cycle(g, &order, &pos));
        }
    }
    Ok((order, labels))
}

/// Maximal cliques of a chordal graph from its MCS order.
fn maximal_cliques(g: &UGraph, order: &[usize], labels: &[usize]) -> Vec<Vec<usize>> {
    let mut pos = vec![0; g.n()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut cliques = Vec::new();
    for (i, &v) in order.iter().enumerate() {
        if i + 1 == order.len() || labels[i + 1] <= labels[i] {
            let mut c: Vec<usize> = g
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| pos[u] < i)
                .collect();
            c.push(v);
            c.sort_unstable();
            cliques.push(c);
        }
    }
    cliques
}

/// Order the maximal cliques so that each vertex's cliques are consecutive.
fn clique_path(n: usize, cliques: &[Vec<usize>]) -> Option<Vec<usize>> {
    let k = cliques.len();
    if k <= 2 {
        return Some((0..k).collect());
    }
    let mut member: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ci, c) in cliques.iter().enumerate() {
        for &v in c {
            member[v].push(ci);
        }
    }
    let leaves: Vec<usize> = (0..k).collect();
    let mut tree = PQTree::from_leaves(&leaves).ok()?;
    for m in &member {
        if m.len() > 1 && m.len() < k {
            tree = tree.reduction(m).ok()?;
        }
    }
    tree.sort_minimal();
    Some(tree.frontier())
}

/// Interval model for a chordal graph, or `None` when the cliques admit no
/// consecutive arrangement.
fn model_from_cliques(g: &UGraph, order: &[usize], labels: &[usize]) -> Option<IntervalModel> {
    let n = g.n();
    let mut intervals = vec![Interval { left: 0, right: 1 }; n];
    // Components are laid side by side so the model stays exact.
    let mut base = 0i64;
    let comp_of = {
        let mut c = vec![0usize; n];
        for (i, comp) in g.components().iter().enumerate() {
            for &v in comp {
                c[v] = i;
            }
        }
        c
    };
    let cliques = maximal_cliques(g, order, labels);
    let mut by_comp: Vec<Vec<Vec<usize>>> = Vec::new();
    for c in cliques {
        let ci = comp_of[c[0]];
        if by_comp.len() <= ci {
            by_comp.resize(ci + 1, Vec::new());
        }
        by_comp[ci].push(c);
    }
    for cliques in by_comp.iter().filter(|c| !c.is_empty()) {
        let path = clique_path(n, cliques)?;
        let mut lo = vec![usize::MAX; n];
        let mut hi = vec![0usize; n];
        let mut touched = Vec::new();
        for (p, &ci) in path.iter().enumerate() {
            for &v in &cliques[ci] {
                if lo[v] == usize::MAX {
                    touched.push(v);
                }
                lo[v] = lo[v].min(p);
                hi[v] = hi[v].max(p);
            }
        }
        for v in touched {
            intervals[v] = Interval {
                left: base + 2 * lo[v] as i64,
                right: base + 2 * hi[v] as i64 + 1,
            };
        }
        base += 2 * path.len() as i64 + 1;
    }
    let model = IntervalModel { intervals };
    model.realizes(g).then_some(model)
}

fn chordal_interval_model(g: &UGraph) -> std::result::Result<Option<IntervalModel>, ForbiddenWitness> {
    let (order, labels) = chordal_order(g)?;
    Ok(model_from_cliques(g, &order, &labels))
}

/// Fast yes/no test without building a witness.
pub fn is_interval(g: &UGraph) -> bool {
    matches!(chordal_interval_model(g), Ok(Some(_)))
}

/// Shrink to a vertex set whose induced subgraph is non-interval but becomes
/// interval after deleting any single vertex.
fn minimal_non_interval(g: &UGraph) -> Vec<usize> {
    let mut keep: Vec<usize> = (0..g.n()).collect();
    let mut chunk = keep.len().div_ceil(2).max(1);
    loop {
        let mut i = 0;
        while i < keep.len() {
            let end = (i + chunk).min(keep.len());
            let trial: Vec<usize> = keep[..i].iter().chain(&keep[end..]).copied().collect();
            if !is_interval(&g.induced(&trial)) {
                keep = trial;
            } else {
                i = end;
            }
        }
        if chunk == 1 {
            return keep;
        }
        chunk = chunk.div_ceil(2);
    }
}

/// Asteroidal triple of a small graph by exhaustive search.
pub(crate) fn find_asteroidal_triple(g: &UGraph) -> Option<ForbiddenWitness> {
    let n = g.n();
    let closed_block = |z: usize| {
        let mut b = vec![false; n];
        b[z] = true;
        for &u in g.neighbors(z) {
            b[u] = true;
        }
        b
    };
    for x in 0..n {
        for y in x + 1..n {
            if g.has_edge(x, y) {
                continue;
            }
            for z in y + 1..n {
                if g.has_edge(x, z) || g.has_edge(y, z) {
                    continue;
                }
                let Some(pyz) = g.shortest_path(y, z, &closed_block(x)) else { continue };
                let Some(pxz) = g.shortest_path(x, z, &closed_block(y)) else { continue };
                let Some(pxy) = g.shortest_path(x, y, &closed_block(z)) else { continue };
                return Some(ForbiddenWitness::AsteroidalTriple {
                    triple: [x, y, z],
                    paths: [pyz, pxz, pxy],
                });
            }
        }
    }
    None
}

fn map_witness(w: ForbiddenWitness, keep: &[usize]) -> ForbiddenWitness {
    match w {
        ForbiddenWitness::ChordlessCycle(c) => {
            ForbiddenWitness::ChordlessCycle(c.into_iter().map(|v| keep[v]).collect())
        }
        ForbiddenWitness::AsteroidalTriple { triple, paths } => ForbiddenWitness::AsteroidalTriple {
            triple: triple.map(|v| keep[v]),
            paths: paths.map(|p| p.into_iter().map(|v| keep[v]).collect()),
        },
    }
}

/// Interval model or forbidden witness for `g`.
pub fn recognize(g: &UGraph) -> Recognition {
    match chordal_interval_model(g) {
        Err(w) => Recognition::Forbidden(w),
        Ok(Some(m)) => Recognition::Interval(m),
        Ok(None) => {
            let keep = minimal_non_interval(g);
            let small = g.induced(&keep);
            let w = find_asteroidal_triple(&small)
                .expect("chordal non-interval graph must contain an asteroidal triple");
            Recognition::Forbidden(map_witness(w, &keep))
        }
    }
}

/// Exact model of an interval graph; each component starts at coordinate 0.
pub fn interval_representation(g: &UGraph) -> Result<IntervalModel> {
    let mut intervals = vec![Interval { left: 0, right: 1 }; g.n()];
    for comp in g.components() {
        let sub = g.induced(&comp);
        match recognize(&sub) {
            Recognition::Interval(m) => {
                for (i, &v) in comp.iter().enumerate() {
                    intervals[v] = m.intervals[i];
                }
            }
            Recognition::Forbidden(_) => return Err(Error::NotInterval),
        }
    }
    Ok(IntervalModel { intervals })
}

/// True iff deleting `v` leaves an interval graph.
pub fn is_i_critical(g: &UGraph, v: usize) -> Result<bool> {
    if v >= g.n() {
        return Err(Error::NoSuchVertex(v));
    }
    Ok(is_interval(&g.without(v)))
}
