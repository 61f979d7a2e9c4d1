//! Repair of non-interval clone-graph components.
//!
//! Each round finds a forbidden witness and applies the first rung of the
//! ladder that works: add a missing edge backed by overlap evidence, drop the
//! edges carried by a single repeat fragment, or remove a clone. Components
//! with no critical vertex are split at articulation points first.

use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{is_interval, recognize, ForbiddenWitness, Recognition};
use crate::clone_graph::CloneGraph;
use crate::error::{Error, Result};
use crate::graph::UGraph;
use crate::model::{CloneId, Dataset, FragId, PipelineParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RemovalReason {
    SuspiciousChimera,
    UnidentifiedRepeat,
}

impl RemovalReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RemovalReason::SuspiciousChimera => "suspicious_chimera",
            RemovalReason::UnidentifiedRepeat => "unidentified_repeat",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ResolutionAction {
    AddFnEdge(CloneId, CloneId),
    /// Edges of `clone` whose only witnesses involve the repeat-carrying `fragment`.
    RemoveFpEdges {
        clone: CloneId,
        fragment: FragId,
        edges: Vec<(CloneId, CloneId)>,
    },
    RemoveVertex { clone: CloneId, reason: RemovalReason },
    /// Short clone isolated instead of removed; it may be falsely breaking intervals at a gap.
    Sideline(CloneId),
}

impl ResolutionAction {
    /// One log line with clone names.
    pub fn describe(&self, ds: &Dataset) -> String {
        let name = |c: CloneId| ds.clone(c).name.as_str();
        match self {
            ResolutionAction::AddFnEdge(x, y) => {
                format!("add_fn_edge\t{}\t{}\treason=missing_overlap_with_evidence", name(*x), name(*y))
            }
            ResolutionAction::RemoveFpEdges { clone, fragment, edges } => {
                let list: Vec<String> = edges
                    .iter()
                    .map(|&(x, y)| format!("{}-{}", name(x), name(y)))
                    .collect();
                format!(
                    "remove_fp_edges\t{}\t{}\treason=repeat_carrier\tedges={}",
                    name(*clone),
                    ds.frag(*fragment).name,
                    list.join(",")
                )
            }
            ResolutionAction::RemoveVertex { clone, reason } => {
                format!("remove_vertex\t{}\treason={}", name(*clone), reason.as_str())
            }
            ResolutionAction::Sideline(c) => format!("sideline\t{}\treason=short_clone", name(*c)),
        }
    }
}

impl fmt::Display for ResolutionAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Evidence that two clones overlap although no used overlap says so.
pub type FnEvidence<'a> = dyn Fn(CloneId, CloneId) -> bool + Sync + 'a;

pub struct RepairContext<'a> {
    pub graph: &'a CloneGraph,
    pub ds: &'a Dataset,
    pub params: &'a PipelineParams,
    pub fn_evidence: &'a FnEvidence<'a>,
}

#[derive(Debug, Clone)]
pub struct Resolution {
    pub ids: Vec<CloneId>,
    /// Final graph on local indices (`ids[i]` is vertex `i`).
    pub graph: UGraph,
    pub actions: Vec<ResolutionAction>,
}

impl Resolution {
    pub fn removed_fragments(&self) -> Vec<FragId> {
        let mut v: Vec<FragId> = self
            .actions
            .iter()
            .filter_map(|a| match a {
                ResolutionAction::RemoveFpEdges { fragment, .. } => Some(*fragment),
                _ => None,
            })
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn removed_clones(&self) -> Vec<CloneId> {
        let mut v: Vec<CloneId> = self
            .actions
            .iter()
            .filter_map(|a| match a {
                ResolutionAction::RemoveVertex { clone, .. } | ResolutionAction::Sideline(clone) => Some(*clone),
                _ => None,
            })
            .collect();
        v.sort();
        v
    }
}

/// Apply `actions` to `g`, whose vertex `i` is clone `ids[i]`.
pub fn replay(ids: &[CloneId], g: &UGraph, actions: &[ResolutionAction]) -> UGraph {
    let pos: HashMap<CloneId, usize> = ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut g = g.clone();
    for a in actions {
        apply(&mut g, &pos, a);
    }
    g
}

fn apply(g: &mut UGraph, pos: &HashMap<CloneId, usize>, a: &ResolutionAction) {
    match a {
        ResolutionAction::AddFnEdge(x, y) => {
            g.add_edge(pos[x], pos[y]);
        }
        ResolutionAction::RemoveFpEdges { edges, .. } => {
            for (x, y) in edges {
                g.remove_edge(pos[x], pos[y]);
            }
        }
        ResolutionAction::RemoveVertex { clone, .. } | ResolutionAction::Sideline(clone) => g.isolate(pos[clone]),
    }
}

struct Session<'c, 'a> {
    ctx: &'c RepairContext<'a>,
    ids: Vec<CloneId>,
    pos: HashMap<CloneId, usize>,
    g: UGraph,
    actions: Vec<ResolutionAction>,
    removed_pairs: HashSet<(CloneId, CloneId)>,
    removed_frags: HashSet<FragId>,
}

impl<'c, 'a> Session<'c, 'a> {
    fn new(ctx: &'c RepairContext<'a>, ids: Vec<CloneId>, g: UGraph) -> Self {
        let pos = ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Session {
            ctx,
            ids,
            pos,
            g,
            actions: Vec::new(),
            removed_pairs: HashSet::new(),
            removed_frags: HashSet::new(),
        }
    }

    fn push(&mut self, a: ResolutionAction) {
        apply(&mut self.g, &self.pos, &a);
        match &a {
            ResolutionAction::RemoveFpEdges { fragment, edges, .. } => {
                self.removed_frags.insert(*fragment);
                for &(x, y) in edges {
                    self.removed_pairs.insert((x.min(y), x.max(y)));
                }
            }
            ResolutionAction::RemoveVertex { clone, .. } | ResolutionAction::Sideline(clone) => {
                for (i, &c) in self.ids.iter().enumerate() {
                    if i != self.pos[clone] {
                        self.removed_pairs.insert((c.min(*clone), c.max(*clone)));
                    }
                }
            }
            ResolutionAction::AddFnEdge(..) => {}
        }
        self.actions.push(a);
    }

    fn action_limit(&self) -> usize {
        4 * self.g.n() + self.g.m() + 16
    }

    fn run(&mut self, depth: usize) -> Result<()> {
        loop {
            if self.actions.len() > self.action_limit() {
                return Err(self.unresolvable());
            }
            let w = match recognize(&self.g) {
                Recognition::Interval(_) => return Ok(()),
                Recognition::Forbidden(w) => w,
            };
            let wv = w.vertices();
            let critical: Vec<usize> = wv
                .iter()
                .copied()
                .filter(|&v| is_interval(&self.g.without(v)))
                .collect();
            if !critical.is_empty() {
                let ordered = self.fallback_order(&critical);
                self.ladder(&wv, &ordered, true);
                continue;
            }
            if depth < 8 && self.split_at_articulation(&wv, depth)? {
                continue;
            }
            let fallback = self.fallback_order(&wv);
            self.ladder(&wv, &fallback, false);
        }
    }

    fn unresolvable(&self) -> Error {
        let names: Vec<&str> = self
            .ids
            .iter()
            .map(|&c| self.ctx.ds.clone(c).name.as_str())
            .collect();
        Error::Unresolvable {
            clones: names.join(","),
            actions: self.actions.len(),
        }
    }

    /// Vertices ordered by how many neighbouring pieces their removal leaves, then id.
    fn fallback_order(&self, wv: &[usize]) -> Vec<usize> {
        let mut scored: Vec<(std::cmp::Reverse<usize>, CloneId, usize)> = wv
            .iter()
            .map(|&v| {
                let mut blocked = vec![false; self.g.n()];
                blocked[v] = true;
                let pieces = self
                    .g
                    .components_avoiding(&blocked)
                    .iter()
                    .filter(|c| c.iter().any(|&u| self.g.has_edge(u, v)))
                    .count();
                (std::cmp::Reverse(pieces), self.ids[v], v)
            })
            .collect();
        scored.sort();
        scored.into_iter().map(|(_, _, v)| v).collect()
    }

    /// Resolve the pieces around an articulation point of the witnessed
    /// component; returns whether any action was taken.
    fn split_at_articulation(&mut self, wv: &[usize], depth: usize) -> Result<bool> {
        let comp = self
            .g
            .components()
            .into_iter()
            .find(|c| c.binary_search(&wv[0]).is_ok())
            .unwrap_or_default();
        let sub = self.g.induced(&comp);
        let cuts = sub.articulation_points();
        let Some(&a_local) = cuts
            .iter()
            .find(|&&a| wv.contains(&comp[a]))
            .or_else(|| cuts.first())
        else {
            return Ok(false);
        };
        let mut blocked = vec![false; sub.n()];
        blocked[a_local] = true;
        let before = self.actions.len();
        for piece in sub.components_avoiding(&blocked) {
            let mut keep: Vec<usize> = piece.iter().map(|&i| comp[i]).collect();
            keep.push(comp[a_local]);
            keep.sort_unstable();
            let pg = self.g.induced(&keep);
            if is_interval(&pg) {
                continue;
            }
            let ids: Vec<CloneId> = keep.iter().map(|&i| self.ids[i]).collect();
            let mut inner = Session::new(self.ctx, ids, pg);
            inner.removed_pairs = self.removed_pairs.clone();
            inner.removed_frags = self.removed_frags.clone();
            inner.run(depth + 1)?;
            for a in inner.actions {
                self.push(a);
            }
        }
        Ok(self.actions.len() > before)
    }

    fn witness_fixed_by_edge(&self, wv: &[usize], u: usize, v: usize) -> bool {
        let mut h = self.g.induced(wv);
        let iu = wv.binary_search(&u).unwrap();
        let iv = wv.binary_search(&v).unwrap();
        h.add_edge(iu, iv);
        is_interval(&h)
    }

    /// In strict mode an edge must make the component interval, or failing that fix
    /// the witness while staying interval once `pivot` is set aside. The second form
    /// lets a clone that lost several edges regain them one at a time.
    fn try_add_fn_edge(&mut self, wv: &[usize], strict: bool, pivot: usize) -> bool {
        let mut pairs = Vec::new();
        for (i, &u) in wv.iter().enumerate() {
            for &v in &wv[i + 1..] {
                if self.g.has_edge(u, v) {
                    continue;
                }
                let (x, y) = (self.ids[u], self.ids[v]);
                if self.removed_pairs.contains(&(x.min(y), x.max(y))) || !(self.ctx.fn_evidence)(x, y) {
                    continue;
                }
                pairs.push((u, v));
            }
        }
        let fixes = |s: &Self, u: usize, v: usize| {
            let mut h = s.g.clone();
            h.add_edge(u, v);
            is_interval(&h)
        };
        let partly_fixes = |s: &Self, u: usize, v: usize| {
            if !s.witness_fixed_by_edge(wv, u, v) {
                return false;
            }
            if !strict {
                return true;
            }
            let mut h = s.g.clone();
            h.add_edge(u, v);
            is_interval(&h.without(pivot))
        };
        let pick = pairs
            .iter()
            .find(|&&(u, v)| fixes(self, u, v))
            .or_else(|| pairs.iter().find(|&&(u, v)| partly_fixes(self, u, v)));
        let Some(&(u, v)) = pick else { return false };
        let (x, y) = (self.ids[u], self.ids[v]);
        self.push(ResolutionAction::AddFnEdge(x.min(y), x.max(y)));
        true
    }

    /// Edges of `v` grouped by a fragment of `v` present in every remaining witness pair.
    fn carried_edges(&self, v: usize) -> Vec<(FragId, Vec<usize>)> {
        let x = self.ids[v];
        let mut by_frag: Vec<(FragId, Vec<usize>)> = Vec::new();
        for &f in &self.ctx.ds.clone(x).fragments {
            if self.removed_frags.contains(&f) {
                continue;
            }
            let carried: Vec<usize> = self
                .g
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| {
                    let ws: Vec<&(FragId, FragId)> = self
                        .ctx
                        .graph
                        .witnesses(x, self.ids[u])
                        .iter()
                        .filter(|(p, q)| !self.removed_frags.contains(p) && !self.removed_frags.contains(q))
                        .collect();
                    !ws.is_empty() && ws.iter().all(|(p, q)| *p == f || *q == f)
                })
                .collect();
            if !carried.is_empty() {
                by_frag.push((f, carried));
            }
        }
        by_frag
    }

    fn try_remove_fp_edges(&mut self, wv: &[usize], candidates: &[usize]) -> bool {
        for &v in candidates {
            for (f, carried) in self.carried_edges(v) {
                if carried.len() >= self.g.degree(v) || !carried.iter().any(|u| wv.contains(u)) {
                    continue;
                }
                let mut h = self.g.clone();
                for &u in &carried {
                    h.remove_edge(u, v);
                }
                if is_interval(&h) {
                    let x = self.ids[v];
                    let edges = carried
                        .iter()
                        .map(|&u| {
                            let y = self.ids[u];
                            (x.min(y), x.max(y))
                        })
                        .collect();
                    self.push(ResolutionAction::RemoveFpEdges { clone: x, fragment: f, edges });
                    return true;
                }
            }
        }
        false
    }

    fn removal_reason(&self, v: usize) -> RemovalReason {
        let mut blocked = vec![false; self.g.n()];
        blocked[v] = true;
        let touched = self
            .g
            .components_avoiding(&blocked)
            .iter()
            .filter(|c| c.iter().any(|&u| self.g.has_edge(u, v)))
            .count();
        if touched >= 2 {
            RemovalReason::SuspiciousChimera
        } else {
            RemovalReason::UnidentifiedRepeat
        }
    }

    fn ladder(&mut self, wv: &[usize], candidates: &[usize], strict: bool) {
        if self.try_add_fn_edge(wv, strict, candidates[0]) {
            return;
        }
        if self.try_remove_fp_edges(wv, candidates) {
            return;
        }
        let v = candidates[0];
        let clone = self.ids[v];
        if self.ctx.ds.clone(clone).estimated_length < self.ctx.params.short_clone_floor {
            self.push(ResolutionAction::Sideline(clone));
        } else {
            let reason = self.removal_reason(v);
            self.push(ResolutionAction::RemoveVertex { clone, reason });
        }
    }
}

/// Repair one component (sorted clone ids) until it is an interval graph.
pub fn resolve_component(component: &[CloneId], ctx: &RepairContext<'_>) -> Result<Resolution> {
    let full = ctx.graph.to_ugraph();
    let keep: Vec<usize> = component.iter().map(|c| c.index()).collect();
    let g = full.induced(&keep);
    let mut session = Session::new(ctx, component.to_vec(), g);
    session.run(0)?;
    Ok(Resolution {
        ids: session.ids,
        graph: session.g,
        actions: session.actions,
    })
}

/// The forbidden witness of a graph, translated to clone ids.
pub fn witness_clones(w: &ForbiddenWitness, ids: &[CloneId]) -> Vec<CloneId> {
    w.vertices().into_iter().map(|v| ids[v]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{PlacedFragment, Subcontig, SubcontigId};
    use crate::model::{Chromosome, Clone, Fragment, Orientation, Phase};

    /// `n` one-fragment clones of 100 kb.
    fn dataset(n: usize) -> Dataset {
        let clones = (0..n)
            .map(|i| Clone {
                id: CloneId(i as u32),
                name: format!("B{i}"),
                estimated_length: 100_000,
                phase: Phase::Three,
                chromosome: Chromosome::Unknown,
                fragments: vec![FragId(i as u32)],
            })
            .collect();
        let frags = (0..n)
            .map(|i| Fragment {
                id: FragId(i as u32),
                name: format!("B{i}~1"),
                clone: CloneId(i as u32),
                record_start: 1,
                record_end: 100_000,
                length: 100_000,
                declared_order: None,
                end_marker: None,
                sequence: None,
            })
            .collect();
        Dataset::new(clones, frags)
    }

    /// Clone graph whose witnesses are the single fragment pairs of the given edges.
    fn graph_from_edges(ds: &Dataset, edges: &[(u32, u32)]) -> CloneGraph {
        let scs: Vec<Subcontig> = edges
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| {
                Subcontig::from_placements(
                    SubcontigId(i as u32),
                    vec![
                        PlacedFragment { frag: FragId(x), start: 0, orientation: Orientation::Forward },
                        PlacedFragment { frag: FragId(y), start: 50_000, orientation: Orientation::Forward },
                    ],
                    ds,
                )
            })
            .collect();
        CloneGraph::build(&scs, ds)
    }

    fn all(n: usize) -> Vec<CloneId> {
        (0..n as u32).map(CloneId).collect()
    }

    #[test]
    fn c4_with_evidence_gets_fn_edge() {
        let ds = dataset(4);
        let graph = graph_from_edges(&ds, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let params = PipelineParams::default();
        let ev = |x: CloneId, y: CloneId| (x.0, y.0) == (0, 2) || (x.0, y.0) == (2, 0);
        let ctx = RepairContext { graph: &graph, ds: &ds, params: &params, fn_evidence: &ev };
        let r = resolve_component(&all(4), &ctx).unwrap();
        assert_eq!(r.actions, vec![ResolutionAction::AddFnEdge(CloneId(0), CloneId(2))]);
        assert!(is_interval(&r.graph));
        assert_eq!(replay(&r.ids, &graph.to_ugraph(), &r.actions), r.graph);
    }

    #[test]
    fn clone_missing_two_edges_regains_both() {
        // Clones i and j overlap when |i - j| <= 3; clone 4 lost its edges to 2 and 6.
        let ds = dataset(9);
        let truth = |x: u32, y: u32| x != y && x.abs_diff(y) <= 3;
        let edges: Vec<(u32, u32)> = (0..9u32)
            .flat_map(|i| (i + 1..9).map(move |j| (i, j)))
            .filter(|&(i, j)| truth(i, j) && (i, j) != (2, 4) && (i, j) != (4, 6))
            .collect();
        let graph = graph_from_edges(&ds, &edges);
        let params = PipelineParams::default();
        let ev = |x: CloneId, y: CloneId| truth(x.0, y.0);
        let ctx = RepairContext { graph: &graph, ds: &ds, params: &params, fn_evidence: &ev };
        let r = resolve_component(&all(9), &ctx).unwrap();
        assert_eq!(r.actions.len(), 2);
        assert!(r.actions.contains(&ResolutionAction::AddFnEdge(CloneId(2), CloneId(4))));
        assert!(r.actions.contains(&ResolutionAction::AddFnEdge(CloneId(4), CloneId(6))));
    }

    /// Path `first..first + len` plus a hub joined to its three middle clones.
    fn path_with_hub(edges: &mut Vec<(u32, u32)>, first: u32, len: u32, hub: u32) {
        for i in first..first + len - 1 {
            edges.push((i, i + 1));
        }
        let mid = first + len / 2;
        for v in mid - 1..=mid + 1 {
            edges.push((hub, v));
        }
    }

    #[test]
    fn bridging_clone_is_removed_as_chimera() {
        // Clone 0 joins the middle of path 1..=5 with the middle of path 6..=10.
        let ds = dataset(11);
        let mut edges = Vec::new();
        path_with_hub(&mut edges, 1, 5, 0);
        path_with_hub(&mut edges, 6, 5, 0);
        let graph = graph_from_edges(&ds, &edges);
        let params = PipelineParams::default();
        let ev = |_: CloneId, _: CloneId| false;
        let ctx = RepairContext { graph: &graph, ds: &ds, params: &params, fn_evidence: &ev };
        let r = resolve_component(&all(11), &ctx).unwrap();
        assert_eq!(
            r.actions,
            vec![ResolutionAction::RemoveVertex {
                clone: CloneId(0),
                reason: RemovalReason::SuspiciousChimera
            }]
        );
    }

    #[test]
    fn end_problem_is_unidentified_repeat() {
        // A clone closing a 5-cycle: its neighbours stay connected without it.
        let ds = dataset(5);
        let graph = graph_from_edges(&ds, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let params = PipelineParams::default();
        let ev = |_: CloneId, _: CloneId| false;
        let ctx = RepairContext { graph: &graph, ds: &ds, params: &params, fn_evidence: &ev };
        let r = resolve_component(&all(5), &ctx).unwrap();
        assert_eq!(
            r.actions,
            vec![ResolutionAction::RemoveVertex {
                clone: CloneId(0),
                reason: RemovalReason::UnidentifiedRepeat
            }]
        );
        assert!(is_interval(&r.graph));
    }

    #[test]
    fn short_clone_is_sidelined() {
        let mut ds = dataset(4);
        for c in &mut ds.clones {
            c.estimated_length = 5_000;
        }
        let graph = graph_from_edges(&ds, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let params = PipelineParams::default();
        let ev = |_: CloneId, _: CloneId| false;
        let ctx = RepairContext { graph: &graph, ds: &ds, params: &params, fn_evidence: &ev };
        let r = resolve_component(&all(4), &ctx).unwrap();
        assert_eq!(r.actions, vec![ResolutionAction::Sideline(CloneId(0))]);
    }

    #[test]
    fn two_chimeras_in_one_component() {
        // Hub 0 joins paths 1..=5 and 6..=10; hub 16 joins paths 6..=10 and 11..=15.
        let ds = dataset(17);
        let mut edges = Vec::new();
        path_with_hub(&mut edges, 1, 5, 0);
        path_with_hub(&mut edges, 6, 5, 0);
        path_with_hub(&mut edges, 11, 5, 16);
        for v in 7..=9 {
            edges.push((16, v));
        }
        let graph = graph_from_edges(&ds, &edges);
        let params = PipelineParams::default();
        let ev = |_: CloneId, _: CloneId| false;
        let ctx = RepairContext { graph: &graph, ds: &ds, params: &params, fn_evidence: &ev };
        let r = resolve_component(&all(17), &ctx).unwrap();
        assert!(is_interval(&r.graph));
        assert_eq!(r.removed_clones(), vec![CloneId(0), CloneId(16)], "{:?}", r.actions);
        assert!(r.actions.iter().all(|a| matches!(
            a,
            ResolutionAction::RemoveVertex { reason: RemovalReason::SuspiciousChimera, .. }
        )));
        assert_eq!(replay(&r.ids, &graph.to_ugraph(), &r.actions), r.graph);
    }
}
