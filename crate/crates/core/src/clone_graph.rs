//! Clone graph built from subcontig placements, and witness-based resolution of
//! overlaps that failed the consistency check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::graph::UGraph;
use crate::layout::{check_consistency, Consistency, OverlapIndex, Subcontig};
use crate::model::{CloneId, Dataset, FragId, PipelineParams};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CloneGraph {
    n_clones: usize,
    /// Keyed by (smaller, larger) clone id; witnesses are sorted fragment pairs.
    edges: BTreeMap<(CloneId, CloneId), Vec<(FragId, FragId)>>,
}

fn key(x: CloneId, y: CloneId) -> (CloneId, CloneId) {
    (x.min(y), x.max(y))
}

impl CloneGraph {
    /// Two clones are adjacent iff fragments of each touch or overlap inside some subcontig.
    pub fn build(subcontigs: &[Subcontig], ds: &Dataset) -> CloneGraph {
        let mut edges: BTreeMap<(CloneId, CloneId), BTreeSet<(FragId, FragId)>> = BTreeMap::new();
        for sc in subcontigs {
            let mut active: Vec<(i64, FragId)> = Vec::new();
            for p in &sc.placements {
                active.retain(|&(end, _)| end >= p.start);
                let cp = ds.clone_of(p.frag);
                for &(_, g) in &active {
                    let cg = ds.clone_of(g);
                    if cg != cp {
                        edges
                            .entry(key(cp, cg))
                            .or_default()
                            .insert((p.frag.min(g), p.frag.max(g)));
                    }
                }
                active.push((p.start + ds.len(p.frag), p.frag));
            }
        }
        CloneGraph {
            n_clones: ds.clones.len(),
            edges: edges
                .into_iter()
                .map(|(k, w)| (k, w.into_iter().collect()))
                .collect(),
        }
    }

    /// Graph of witnessless edges, for inferred or synthetic adjacency.
    pub fn from_edges(n_clones: usize, edges: impl IntoIterator<Item = (CloneId, CloneId)>) -> CloneGraph {
        let mut g = CloneGraph { n_clones, edges: BTreeMap::new() };
        for (x, y) in edges {
            g.add_inferred_edge(x, y);
        }
        g
    }

    /// Add an edge with no fragment witness, e.g. an accepted false negative.
    pub fn add_inferred_edge(&mut self, x: CloneId, y: CloneId) {
        if x != y {
            self.edges.entry(key(x, y)).or_default();
        }
    }

    pub fn remove_edge(&mut self, x: CloneId, y: CloneId) -> bool {
        self.edges.remove(&key(x, y)).is_some()
    }

    pub fn n_clones(&self) -> usize {
        self.n_clones
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, x: CloneId, y: CloneId) -> bool {
        x != y && self.edges.contains_key(&key(x, y))
    }

    pub fn witnesses(&self, x: CloneId, y: CloneId) -> &[(FragId, FragId)] {
        self.edges.get(&key(x, y)).map_or(&[], Vec::as_slice)
    }

    pub fn edges(&self) -> impl Iterator<Item = (CloneId, CloneId, &[(FragId, FragId)])> + '_ {
        self.edges.iter().map(|(&(x, y), w)| (x, y, w.as_slice()))
    }

    /// Simple graph on clone indices.
    pub fn to_ugraph(&self) -> UGraph {
        UGraph::from_edges(
            self.n_clones,
            self.edges.keys().map(|&(x, y)| (x.index(), y.index())),
        )
    }

    /// Connected components as sorted clone lists.
    pub fn components(&self) -> Vec<Vec<CloneId>> {
        self.to_ugraph()
            .components()
            .into_iter()
            .map(|c| c.into_iter().map(|i| CloneId(i as u32)).collect())
            .collect()
    }

    /// TSV `clone_a clone_b witness_count`.
    pub fn dump(&self, ds: &Dataset) -> String {
        let mut out = String::from("#clone_a\tclone_b\twitness_count\n");
        for (&(x, y), w) in &self.edges {
            let _ = writeln!(out, "{}\t{}\t{}", ds.clone(x).name, ds.clone(y).name, w.len());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeferredOutcome {
    Accepted,
    /// A conflicting alternative had more clone-overlap witnesses.
    RepeatInduced,
    /// The clone pair has no independent witness.
    NoWitness,
    /// A conflicting alternative had the same number of witnesses.
    Ambiguous,
}

impl DeferredOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            DeferredOutcome::Accepted => "accepted",
            DeferredOutcome::RepeatInduced => "repeat_induced",
            DeferredOutcome::NoWitness => "no_witness",
            DeferredOutcome::Ambiguous => "ambiguous",
        }
    }
}

/// Decide each deferred overlap (index into `idx`) from clone-graph evidence.
pub fn resolve_inconsistent_overlaps(
    deferred: &BTreeSet<usize>,
    idx: &OverlapIndex,
    graph: &CloneGraph,
    ds: &Dataset,
    params: &PipelineParams,
) -> BTreeMap<usize, DeferredOutcome> {
    let lengths = ds.lengths();
    let support = |oi: usize| -> usize {
        let ov = idx.get(oi);
        let (x, y) = (ds.clone_of(ov.a), ds.clone_of(ov.b));
        if x == y {
            return 0;
        }
        graph
            .witnesses(x, y)
            .iter()
            .filter(|&&w| w != ov.pair())
            .count()
    };
    let counts: BTreeMap<usize, usize> = deferred.iter().map(|&oi| (oi, support(oi))).collect();
    let mut out = BTreeMap::new();
    for (&oi, &count) in &counts {
        if count == 0 {
            out.insert(oi, DeferredOutcome::NoWitness);
            continue;
        }
        let ov = idx.get(oi);
        let mut best_rival = 0usize;
        for f in [ov.a, ov.b] {
            for &other in idx.of(f) {
                let Some(&c) = counts.get(&other) else { continue };
                if other == oi || c == 0 {
                    continue;
                }
                let r = check_consistency(ov, idx.get(other), idx, &lengths, params);
                if matches!(r, Ok(Consistency::Inconsistent)) {
                    best_rival = best_rival.max(c);
                }
            }
        }
        let outcome = if best_rival > count {
            DeferredOutcome::RepeatInduced
        } else if best_rival == count {
            DeferredOutcome::Ambiguous
        } else {
            DeferredOutcome::Accepted
        };
        out.insert(oi, outcome);
    }
    out
}
