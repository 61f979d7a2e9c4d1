//! End-to-end assembly: conservative layout, clone-graph repair, scaffolding
//! and error reports.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use log::info;
use rayon::prelude::*;

use crate::clone_graph::{resolve_inconsistent_overlaps, CloneGraph, DeferredOutcome};
use crate::error::{Error, Result};
use crate::ingest::{classify_all, write_text, Inputs};
use crate::interval::resolve::{resolve_component, RemovalReason, RepairContext, ResolutionAction};
use crate::interval::{interval_representation, is_interval, Interval};
use crate::layout::{
    assemble_maximal, classify_fragments, place_subfragments, write_subcontigs, FragmentClass, OverlapIndex,
    PlacedFragment, Subcontig, SubcontigId, SubfragmentRejection,
};
use crate::model::{intersection, CloneId, Dataset, FragId, PipelineParams, ValidOverlap};
use crate::scaffold::{
    apply_extra_info, assign_coordinates_and_order, consensus, detect_fns, detect_residual_fps, orient_unsure,
    place_single_clone_members, compact,
    write_layout, Contig, FnReport, FpReport, OrientSummary,
};

pub const SUBCONTIGS: &str = "subcontigs.tsv";
pub const CLONE_GRAPH: &str = "clone_graph.tsv";
pub const INTERVALS: &str = "intervals.tsv";
pub const ACTIONS: &str = "actions.log";
pub const LAYOUT: &str = "layout.txt";
pub const FN_REPORT: &str = "fn_report.tsv";
pub const FP_REPORT: &str = "fp_report.tsv";
pub const REJECTED: &str = "rejected_overlaps.tsv";
pub const SUMMARY: &str = "summary.txt";
pub const CONSENSUS: &str = "consensus.fa";

const MAX_REPAIR_ROUNDS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepCounts {
    pub alignments: usize,
    pub low_identity: usize,
    pub internal: usize,
    pub overlaps: usize,
    pub deferred: usize,
    pub deferred_accepted: usize,
    pub subcontigs_formed: usize,
    pub subfragments_rejected: usize,
    pub components: usize,
    pub non_interval_components: usize,
    pub repair_rounds: usize,
    pub vertices_removed: usize,
    pub fn_edges_added: usize,
    pub fp_edge_groups_removed: usize,
    pub fn_fragments_removed: usize,
    pub contigs: usize,
    pub fragments_used: usize,
}

impl StepCounts {
    pub fn to_text(&self) -> String {
        let rows: [(&str, usize); 17] = [
            ("alignments", self.alignments),
            ("rejected_low_identity", self.low_identity),
            ("rejected_internal", self.internal),
            ("valid_overlaps", self.overlaps),
            ("deferred_overlaps", self.deferred),
            ("deferred_accepted", self.deferred_accepted),
            ("subcontigs_formed", self.subcontigs_formed),
            ("subfragments_rejected", self.subfragments_rejected),
            ("components", self.components),
            ("non_interval_components", self.non_interval_components),
            ("repair_rounds", self.repair_rounds),
            ("vertices_removed", self.vertices_removed),
            ("fn_edges_added", self.fn_edges_added),
            ("fp_edge_groups_removed", self.fp_edge_groups_removed),
            ("fragments_removed_by_fn_detection", self.fn_fragments_removed),
            ("contigs", self.contigs),
            ("fragments_used", self.fragments_used),
        ];
        rows.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedOverlap {
    pub a: FragId,
    pub b: FragId,
    pub reason: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CloneInterval {
    pub clone: CloneId,
    pub interval: Interval,
    pub rank: usize,
    pub component: u32,
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub subcontigs: Vec<Subcontig>,
    pub clone_graph: CloneGraph,
    /// Clone graph before any repair action.
    pub initial_clone_graph: CloneGraph,
    pub intervals: Vec<CloneInterval>,
    pub actions: Vec<ResolutionAction>,
    pub contigs: Vec<Contig>,
    pub fn_reports: Vec<FnReport>,
    pub fp_reports: Vec<FpReport>,
    pub notes: Vec<String>,
    pub rejected: Vec<RejectedOverlap>,
    pub subfragment_rejections: Vec<(FragId, SubfragmentRejection)>,
    pub orientation: OrientSummary,
    pub consensus: Vec<(u32, String)>,
    pub counts: StepCounts,
}

/// Conservative layout with one round of clone-graph feedback on deferred overlaps.
fn conservative_layout(
    ds: &Dataset,
    overlaps: &[ValidOverlap],
    params: &PipelineParams,
    counts: &mut StepCounts,
) -> (Vec<Subcontig>, Vec<RejectedOverlap>, Vec<(FragId, SubfragmentRejection)>, OverlapIndex) {
    let idx = OverlapIndex::new(overlaps.iter().cloned(), ds.fragments.len());
    let classes = classify_fragments(ds, &idx);
    let first = assemble_maximal(ds, &classes, &idx, params);
    let (subs, sub_rej) = place_subfragments(ds, &first.subcontigs, &classes, &idx, &first.deferred, params);
    counts.deferred = first.deferred.len();
    if first.deferred.is_empty() {
        return (subs, Vec::new(), sub_rej, idx);
    }
    let graph = CloneGraph::build(&subs, ds);
    let outcomes = resolve_inconsistent_overlaps(&first.deferred, &idx, &graph, ds, params);
    let mut rejected: Vec<RejectedOverlap> = outcomes
        .iter()
        .filter(|(_, o)| **o != DeferredOutcome::Accepted)
        .map(|(&i, o)| RejectedOverlap { a: idx.get(i).a, b: idx.get(i).b, reason: o.as_str() })
        .collect();
    counts.deferred_accepted = outcomes.values().filter(|o| **o == DeferredOutcome::Accepted).count();
    if counts.deferred_accepted == 0 {
        return (subs, rejected, sub_rej, idx);
    }
    let dropped: HashSet<(FragId, FragId)> = rejected.iter().map(|r| (r.a, r.b)).collect();
    let idx2 = OverlapIndex::new(
        idx.overlaps().iter().filter(|o| !dropped.contains(&o.pair())).cloned(),
        ds.fragments.len(),
    );
    let classes2 = classify_fragments(ds, &idx2);
    let second = assemble_maximal(ds, &classes2, &idx2, params);
    let (subs2, sub_rej2) = place_subfragments(ds, &second.subcontigs, &classes2, &idx2, &second.deferred, params);
    for &i in &second.deferred {
        rejected.push(RejectedOverlap { a: idx2.get(i).a, b: idx2.get(i).b, reason: "inconsistent" });
    }
    (subs2, rejected, sub_rej2, idx)
}

/// Split a subcontig into pieces whose fragments are chained by touching or overlapping.
fn geometric_pieces(placements: Vec<PlacedFragment>, ds: &Dataset) -> Vec<Vec<PlacedFragment>> {
    let mut placements = placements;
    placements.sort_by_key(|p| (p.start, p.frag));
    let mut out: Vec<Vec<PlacedFragment>> = Vec::new();
    let mut reach = i64::MIN;
    for p in placements {
        if out.is_empty() || p.start > reach {
            out.push(Vec::new());
            reach = i64::MIN;
        }
        reach = reach.max(p.start + ds.len(p.frag));
        out.last_mut().expect("piece").push(p);
    }
    out
}

/// Drop `removed` fragments, move `sidelined` clones into their own subcontigs,
/// and split what remains into connected pieces. New pieces get fresh ids.
fn rebuild_subcontigs(
    subs: Vec<Subcontig>,
    removed: &HashSet<FragId>,
    sidelined: &HashSet<CloneId>,
    ds: &Dataset,
) -> Vec<Subcontig> {
    let mut next = subs.iter().map(|s| s.id.0 + 1).max().unwrap_or(0);
    let mut out = Vec::new();
    for sc in subs {
        let untouched = sc
            .placements
            .iter()
            .all(|p| !removed.contains(&p.frag) && !sidelined.contains(&ds.clone_of(p.frag)));
        if untouched {
            out.push(sc);
            continue;
        }
        let mut groups: BTreeMap<Option<CloneId>, Vec<PlacedFragment>> = BTreeMap::new();
        for p in sc.placements {
            if removed.contains(&p.frag) {
                continue;
            }
            let c = ds.clone_of(p.frag);
            groups.entry(sidelined.contains(&c).then_some(c)).or_default().push(p);
        }
        let mut first = true;
        for (_, ps) in groups {
            for piece in geometric_pieces(ps, ds) {
                let id = if first {
                    first = false;
                    sc.id
                } else {
                    next += 1;
                    SubcontigId(next - 1)
                };
                out.push(Subcontig::from_placements(id, piece, ds));
            }
        }
    }
    out.sort_by_key(|s| s.id);
    out
}

/// Evidence for a missing clone edge: an overlap between the two clones that the
/// layout did not use, or two overlaps through a shared fragment implying an
/// intersection of at least the implied overlap threshold.
fn fn_evidence_index(
    ds: &Dataset,
    idx: &OverlapIndex,
    rejected: &[RejectedOverlap],
    params: &PipelineParams,
) -> HashSet<(CloneId, CloneId)> {
    let banned: HashSet<(FragId, FragId)> = rejected.iter().map(|r| (r.a, r.b)).collect();
    let repeats: HashSet<(FragId, FragId)> = rejected
        .iter()
        .filter(|r| r.reason == DeferredOutcome::RepeatInduced.as_str())
        .map(|r| (r.a, r.b))
        .collect();
    let key = |x: CloneId, y: CloneId| (x.min(y), x.max(y));
    let mut out = implied_clone_overlaps(ds, idx, &repeats, params);
    for ov in idx.overlaps() {
        if banned.contains(&ov.pair()) {
            continue;
        }
        let (x, y) = (ds.clone_of(ov.a), ds.clone_of(ov.b));
        if x != y {
            out.insert(key(x, y));
        }
    }
    out
}

/// Clone pairs whose fragments are both placed by a shared third fragment with an
/// implied intersection of at least the implied-overlap threshold.
pub fn implied_clone_overlaps(
    ds: &Dataset,
    idx: &OverlapIndex,
    skip: &HashSet<(FragId, FragId)>,
    params: &PipelineParams,
) -> HashSet<(CloneId, CloneId)> {
    let lengths = ds.lengths();
    let key = |x: CloneId, y: CloneId| (x.min(y), x.max(y));
    let mut out = HashSet::new();
    for f in 0..ds.fragments.len() {
        let f = FragId(f as u32);
        let ovs: Vec<&ValidOverlap> = idx
            .of(f)
            .iter()
            .map(|&i| idx.get(i))
            .filter(|o| !skip.contains(&o.pair()))
            .collect();
        let origin = crate::model::Placement::new(0, crate::model::Orientation::Forward);
        for (i, o1) in ovs.iter().enumerate() {
            let a = o1.other(f);
            let pa = o1.place_other(f, origin, &lengths);
            for o2 in &ovs[i + 1..] {
                let b = o2.other(f);
                let (x, y) = (ds.clone_of(a), ds.clone_of(b));
                if x == y {
                    continue;
                }
                let pb = o2.place_other(f, origin, &lengths);
                if intersection(pa.start, lengths[a.index()], pb.start, lengths[b.index()]) >= params.implied_overlap_threshold {
                    out.insert(key(x, y));
                }
            }
        }
    }
    out
}

/// Valid overlaps of the inputs, nt-pairs included, indexed by fragment.
pub fn overlap_index(inputs: &Inputs, params: &PipelineParams) -> Result<OverlapIndex> {
    let mut overlaps = classify_all(&inputs.alignments, &inputs.dataset, params)?.overlaps;
    overlaps.extend(inputs.nt_pairs.iter().cloned());
    Ok(OverlapIndex::new(overlaps, inputs.dataset.fragments.len()))
}

pub fn assemble(inputs: &Inputs, params: &PipelineParams) -> Result<Assembly> {
    params.validate()?;
    let ds = &inputs.dataset;
    let mut counts = StepCounts { alignments: inputs.alignments.len(), ..Default::default() };

    let classified = classify_all(&inputs.alignments, ds, params)?;
    counts.low_identity = classified.low_identity;
    counts.internal = classified.internal;
    let mut overlaps = classified.overlaps;
    overlaps.extend(inputs.nt_pairs.iter().cloned());
    counts.overlaps = overlaps.len();
    info!("{} alignments, {} valid overlaps", counts.alignments, counts.overlaps);

    let (mut subs, rejected, subfragment_rejections, idx) = conservative_layout(ds, &overlaps, params, &mut counts);
    counts.subcontigs_formed = subs.len();
    counts.subfragments_rejected = subfragment_rejections.len();
    info!(
        "{} subcontigs, {} deferred overlaps ({} accepted)",
        subs.len(),
        counts.deferred,
        counts.deferred_accepted
    );

    let evidence = fn_evidence_index(ds, &idx, &rejected, params);
    let fn_evidence = |x: CloneId, y: CloneId| evidence.contains(&(x.min(y), x.max(y)));
    let mut actions: Vec<ResolutionAction> = Vec::new();
    let mut fn_edges: BTreeSet<(CloneId, CloneId)> = BTreeSet::new();
    let mut removed_frags: HashSet<FragId> = HashSet::new();
    let mut sidelined: HashSet<CloneId> = HashSet::new();
    let mut graph;
    let mut initial_graph = None;
    let mut round = 0;
    loop {
        graph = CloneGraph::build(&subs, ds);
        for &(x, y) in &fn_edges {
            graph.add_inferred_edge(x, y);
        }
        let full = graph.to_ugraph();
        let comps: Vec<Vec<CloneId>> = graph
            .components()
            .into_iter()
            .filter(|c| c.len() >= 4 && !is_interval(&full.induced(&c.iter().map(|x| x.index()).collect::<Vec<_>>())))
            .collect();
        if round == 0 {
            initial_graph = Some(graph.clone());
            counts.components = graph.components().iter().filter(|c| c.iter().any(|&x| has_fragments(x, &subs))).count();
            counts.non_interval_components = comps.len();
        }
        if comps.is_empty() {
            break;
        }
        round += 1;
        if round > MAX_REPAIR_ROUNDS {
            let names: Vec<&str> = comps[0].iter().map(|&c| ds.clone(c).name.as_str()).collect();
            return Err(Error::Unresolvable { clones: names.join(","), actions: actions.len() });
        }
        let ctx = RepairContext { graph: &graph, ds, params, fn_evidence: &fn_evidence };
        let resolutions: Vec<_> = comps.par_iter().map(|c| resolve_component(c, &ctx)).collect::<Result<_>>()?;
        let mut removed_clones = Vec::new();
        for r in resolutions {
            for a in r.actions {
                match &a {
                    ResolutionAction::AddFnEdge(x, y) => {
                        fn_edges.insert((*x, *y));
                    }
                    ResolutionAction::RemoveFpEdges { fragment, .. } => {
                        removed_frags.insert(*fragment);
                    }
                    ResolutionAction::RemoveVertex { clone, .. } => removed_clones.push(*clone),
                    ResolutionAction::Sideline(c) => {
                        sidelined.insert(*c);
                    }
                }
                actions.push(a);
            }
        }
        for &c in &removed_clones {
            removed_frags.extend(ds.clone(c).fragments.iter().copied());
        }
        let gone = |c: &CloneId| sidelined.contains(c) || removed_clones.contains(c);
        fn_edges.retain(|(x, y)| !gone(x) && !gone(y));
        subs = rebuild_subcontigs(subs, &removed_frags, &sidelined, ds);
    }
    counts.repair_rounds = round;
    counts.vertices_removed = actions.iter().filter(|a| matches!(a, ResolutionAction::RemoveVertex { .. })).count();
    counts.fn_edges_added = fn_edges.len();
    counts.fp_edge_groups_removed = actions.iter().filter(|a| matches!(a, ResolutionAction::RemoveFpEdges { .. })).count();
    info!(
        "{} components, {} not interval, {} clones removed, {} FN edges",
        counts.components, counts.non_interval_components, counts.vertices_removed, counts.fn_edges_added
    );

    // Interval models and contigs per component.
    let full = graph.to_ugraph();
    let mut sub_by_clone: HashMap<CloneId, Vec<usize>> = HashMap::new();
    for (i, sc) in subs.iter().enumerate() {
        sub_by_clone.entry(sc.member_clones[0]).or_default().push(i);
    }
    let adjacent = |x: CloneId, y: CloneId| graph.has_edge(x, y);
    let mut intervals = Vec::new();
    let mut contigs = Vec::new();
    let mut owned: Vec<Option<Subcontig>> = subs.iter().cloned().map(Some).collect();
    let mut component_id = 0u32;
    for comp in graph.components() {
        let members: Vec<usize> = comp.iter().flat_map(|c| sub_by_clone.get(c).cloned().unwrap_or_default()).collect();
        if members.is_empty() {
            continue;
        }
        let local: Vec<usize> = comp.iter().map(|c| c.index()).collect();
        let model = interval_representation(&full.induced(&local))?;
        let ranks = model.ranks();
        let pos: HashMap<CloneId, usize> = comp.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        for (i, &c) in comp.iter().enumerate() {
            intervals.push(CloneInterval { clone: c, interval: model.intervals[i], rank: ranks[i], component: component_id });
        }
        let mut members = members;
        members.sort_unstable();
        let taken: Vec<Subcontig> = members.into_iter().filter_map(|i| owned[i].take()).collect();
        let contig = assign_coordinates_and_order(
            contigs.len() as u32,
            component_id,
            taken,
            &|c| model.intervals[pos[&c]],
            &|c| ranks[pos[&c]],
            &adjacent,
            ds,
            params,
        );
        contigs.push(contig);
        component_id += 1;
    }

    let mut fn_reports = Vec::new();
    let mut notes = Vec::new();
    for c in &mut contigs {
        fn_reports.extend(detect_fns(c, &adjacent, ds, params));
        notes.extend(apply_extra_info(c, &adjacent, ds, params));
    }
    counts.fn_fragments_removed = fn_reports.iter().map(|r| r.fragments.len()).sum();
    for c in &mut contigs {
        place_single_clone_members(&mut c.members, &adjacent, ds, params.gap_spacer);
        compact(c, &adjacent, ds, params.gap_spacer);
    }
    let orientation = orient_unsure(&mut contigs, &inputs.orientation_pairs, &adjacent, ds);
    for c in &mut contigs {
        place_single_clone_members(&mut c.members, &adjacent, ds, params.gap_spacer);
        compact(c, &adjacent, ds, params.gap_spacer);
        c.relayout(params.gap_spacer);
    }
    contigs.retain(|c| !c.members.is_empty());
    let (fp_reports, fp_notes) = detect_residual_fps(&contigs, ds, params);
    notes.extend(fp_notes);

    let final_subs: Vec<Subcontig> = {
        let mut v: Vec<Subcontig> = contigs.iter().flat_map(|c| c.members.iter().map(|m| m.sub.clone())).collect();
        v.sort_by_key(|s| s.id);
        v
    };
    let maximal: HashSet<FragId> = {
        let classes = classify_fragments(ds, &idx);
        (0..ds.fragments.len())
            .filter(|&i| !matches!(classes[i], FragmentClass::Subfragment(_)))
            .map(|i| FragId(i as u32))
            .collect()
    };
    let consensus: Vec<(u32, String)> = if ds.has_sequences() {
        contigs
            .iter()
            .filter_map(|c| consensus(c, &|f| maximal.contains(&f), ds).map(|s| (c.id, s)))
            .collect()
    } else {
        Vec::new()
    };
    counts.contigs = contigs.len();
    counts.fragments_used = final_subs.iter().map(|s| s.placements.len()).sum();
    info!("{} contigs using {} fragments", counts.contigs, counts.fragments_used);

    Ok(Assembly {
        subcontigs: final_subs,
        clone_graph: graph,
        initial_clone_graph: initial_graph.unwrap_or_default(),
        intervals,
        actions,
        contigs,
        fn_reports,
        fp_reports,
        notes,
        rejected,
        subfragment_rejections,
        orientation,
        consensus,
        counts,
    })
}

fn has_fragments(c: CloneId, subs: &[Subcontig]) -> bool {
    subs.iter().any(|s| s.member_clones.binary_search(&c).is_ok())
}

impl Assembly {
    pub fn write_intervals(&self, ds: &Dataset) -> String {
        let mut out = String::from("#clone_id\tleft\tright\trank\tcomponent_id\n");
        for ci in &self.intervals {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                ds.clone(ci.clone).name,
                ci.interval.left,
                ci.interval.right,
                ci.rank,
                ci.component
            );
        }
        out
    }

    pub fn write_actions(&self, ds: &Dataset) -> String {
        self.actions.iter().map(|a| a.describe(ds) + "\n").collect()
    }

    pub fn write_fn_report(&self, ds: &Dataset) -> String {
        let mut out = String::from(
            "#contig\tleft_subcontig\tright_subcontig\tleft_clone\tright_clone\tremoved_subcontig\tfragments\tcause\n",
        );
        for r in &self.fn_reports {
            let frs: Vec<&str> = r.fragments.iter().map(|&f| ds.frag(f).name.as_str()).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.contig,
                r.violation.left.0,
                r.violation.right.0,
                ds.clone(r.violation.left_clone).name,
                ds.clone(r.violation.right_clone).name,
                r.removed.map_or("-".to_string(), |s| s.0.to_string()),
                if frs.is_empty() { "-".to_string() } else { frs.join(",") },
                r.cause.as_str()
            );
        }
        out
    }

    pub fn write_fp_report(&self, ds: &Dataset) -> String {
        let mut out = String::from("#clone\tspan\testimated_length\twarp\tlong_clone\tleft_fragment\tright_fragment\n");
        for r in &self.fp_reports {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.4}\t{}\t{}\t{}",
                ds.clone(r.clone).name,
                r.span,
                ds.clone(r.clone).estimated_length,
                r.warp,
                r.long_clone,
                ds.frag(r.stretch.0).name,
                ds.frag(r.stretch.1).name
            );
        }
        out
    }

    pub fn write_rejected(&self, ds: &Dataset) -> String {
        let mut out = String::from("#frag_a\tfrag_b\treason\n");
        for r in &self.rejected {
            let _ = writeln!(out, "{}\t{}\t{}", ds.frag(r.a).name, ds.frag(r.b).name, r.reason);
        }
        for (f, why) in &self.subfragment_rejections {
            let _ = writeln!(out, "{}\t-\tsubfragment_{}", ds.frag(*f).name, why.as_str());
        }
        out
    }

    pub fn write_summary(&self) -> String {
        let mut out = self.counts.to_text();
        let _ = writeln!(out, "orientation_flips\t{}", self.orientation.flips);
        let _ = writeln!(out, "orientation_disagreement\t{}", self.orientation.final_disagreement);
        for n in &self.notes {
            let _ = writeln!(out, "note\t{n}");
        }
        out
    }

    pub fn write_consensus(&self) -> String {
        let mut out = String::new();
        for (id, s) in &self.consensus {
            let _ = writeln!(out, ">contig{id}");
            for chunk in s.as_bytes().chunks(80) {
                out.push_str(std::str::from_utf8(chunk).expect("ASCII"));
                out.push('\n');
            }
        }
        out
    }

    /// Write every artifact into `dir`.
    pub fn write_artifacts(&self, ds: &Dataset, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_text(&dir.join(SUBCONTIGS), &write_subcontigs(&self.subcontigs, ds))?;
        write_text(&dir.join(CLONE_GRAPH), &self.clone_graph.dump(ds))?;
        write_text(&dir.join(INTERVALS), &self.write_intervals(ds))?;
        write_text(&dir.join(ACTIONS), &self.write_actions(ds))?;
        write_text(&dir.join(LAYOUT), &write_layout(&self.contigs, ds))?;
        write_text(&dir.join(FN_REPORT), &self.write_fn_report(ds))?;
        write_text(&dir.join(FP_REPORT), &self.write_fp_report(ds))?;
        write_text(&dir.join(REJECTED), &self.write_rejected(ds))?;
        write_text(&dir.join(SUMMARY), &self.write_summary())?;
        if !self.consensus.is_empty() {
            write_text(&dir.join(CONSENSUS), &self.write_consensus())?;
        }
        Ok(())
    }

    /// Clones removed from the assembly, with the logged reason.
    pub fn removed_clones(&self) -> BTreeMap<CloneId, RemovalReason> {
        self.actions
            .iter()
            .filter_map(|a| match a {
                ResolutionAction::RemoveVertex { clone, reason } => Some((*clone, *reason)),
                _ => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, SimParams};

    fn small(seed: u64) -> SimParams {
        SimParams { genome_length: 2_000_000, seed, ..SimParams::default() }
    }

    #[test]
    fn zero_noise_run_is_clean() {
        let sim = simulate(&small(3)).unwrap();
        let inputs = sim.bundle().parse().unwrap();
        let asm = assemble(&inputs, &PipelineParams::default()).unwrap();
        assert_eq!(asm.counts.deferred, 0);
        assert!(asm.actions.is_empty(), "{:?}", asm.actions);
        assert!(asm.fn_reports.is_empty());
        assert_eq!(asm.counts.fragments_used, inputs.dataset.fragments.len());
    }

    #[test]
    fn zero_noise_scores_perfectly() {
        let sim = simulate(&small(5)).unwrap();
        let inputs = sim.bundle().parse().unwrap();
        let asm = assemble(&inputs, &PipelineParams::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        asm.write_artifacts(&inputs.dataset, dir.path()).unwrap();
        let view = crate::report::AssemblyView::load(dir.path()).unwrap();
        let m = crate::sim::score_assembly(&view, &sim.truth, &inputs.dataset).unwrap();
        assert!(m.contigs_scored > 0);
        assert_eq!(m.order_agreement(), 1.0, "{}", m.to_text());
        assert_eq!(m.max_placement_error(), 0, "{}", m.to_text());
        assert!(m.warps.iter().all(|w| (0.98..=1.02).contains(&w.2)), "{}", m.to_text());
    }

    #[test]
    fn geometric_split() {
        let ds = Dataset::new(
            vec![crate::model::Clone {
                id: CloneId(0),
                name: "A".into(),
                estimated_length: 30,
                phase: crate::model::Phase::One,
                chromosome: crate::model::Chromosome::Unknown,
                fragments: vec![FragId(0), FragId(1), FragId(2)],
            }],
            (0..3)
                .map(|i| crate::model::Fragment {
                    id: FragId(i),
                    name: format!("A~{i}"),
                    clone: CloneId(0),
                    record_start: 1,
                    record_end: 10,
                    length: 10,
                    declared_order: None,
                    end_marker: None,
                    sequence: None,
                })
                .collect(),
        );
        let p = |f: u32, s: i64| PlacedFragment { frag: FragId(f), start: s, orientation: crate::model::Orientation::Forward };
        let pieces = geometric_pieces(vec![p(0, 0), p(1, 10), p(2, 21)], &ds);
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[0].len(), 2);
    }
}
