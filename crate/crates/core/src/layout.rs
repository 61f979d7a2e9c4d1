//! Fragment classification and conservative subcontig assembly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{
    intersection, CloneId, Chromosome, Dataset, FragId, Orientation, OverlapKind, PipelineParams,
    Placement, ValidOverlap,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubcontigId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FragmentClass {
    Singleton,
    Subfragment(FragId),
    Maximal,
}

/// Canonical overlaps with lookup by fragment pair and by fragment.
#[derive(Debug, Clone, Default)]
pub struct OverlapIndex {
    overlaps: Vec<ValidOverlap>,
    by_pair: HashMap<(FragId, FragId), usize>,
    by_frag: Vec<Vec<usize>>,
}

impl OverlapIndex {
    /// Duplicate pairs keep the longer overlap (first one on ties).
    pub fn new(overlaps: impl IntoIterator<Item = ValidOverlap>, n_frags: usize) -> OverlapIndex {
        let mut kept: Vec<ValidOverlap> = Vec::new();
        let mut by_pair: HashMap<(FragId, FragId), usize> = HashMap::new();
        for ov in overlaps {
            match by_pair.get(&ov.pair()) {
                Some(&i) if kept[i].overlap_length >= ov.overlap_length => {}
                Some(&i) => kept[i] = ov,
                None => {
                    by_pair.insert(ov.pair(), kept.len());
                    kept.push(ov);
                }
            }
        }
        let mut by_frag = vec![Vec::new(); n_frags];
        for (i, ov) in kept.iter().enumerate() {
            by_frag[ov.a.index()].push(i);
            by_frag[ov.b.index()].push(i);
        }
        OverlapIndex {
            overlaps: kept,
            by_pair,
            by_frag,
        }
    }

    pub fn len(&self) -> usize {
        self.overlaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.overlaps.is_empty()
    }

    pub fn overlaps(&self) -> &[ValidOverlap] {
        &self.overlaps
    }

    pub fn get(&self, i: usize) -> &ValidOverlap {
        &self.overlaps[i]
    }

    pub fn find(&self, x: FragId, y: FragId) -> Option<usize> {
        self.by_pair.get(&(x.min(y), x.max(y))).copied()
    }

    /// Indices of the overlaps touching `f`.
    pub fn of(&self, f: FragId) -> &[usize] {
        self.by_frag.get(f.index()).map_or(&[], Vec::as_slice)
    }
}

pub fn classify_fragments(ds: &Dataset, idx: &OverlapIndex) -> Vec<FragmentClass> {
    (0..ds.fragments.len())
        .map(|i| {
            let f = FragId(i as u32);
            let ovs = idx.of(f);
            let container = ovs
                .iter()
                .map(|&o| idx.get(o))
                .filter(|o| o.kind == OverlapKind::Containment && o.contained == Some(f))
                .map(|o| o.other(f))
                .min();
            match container {
                Some(c) => FragmentClass::Subfragment(c),
                None if ovs.is_empty() => FragmentClass::Singleton,
                None => FragmentClass::Maximal,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    Inconsistent,
    Independent,
}

fn agrees(ov: &ValidOverlap, from: FragId, at: Placement, other: Placement, lengths: &[i64], tol: i64) -> bool {
    let p = ov.place_other(from, at, lengths);
    p.orientation == other.orientation && (p.start - other.start).abs() <= tol
}

/// Compose two overlaps through their shared fragment and test the implied third overlap.
pub fn check_consistency(
    o_ab: &ValidOverlap,
    o_bc: &ValidOverlap,
    idx: &OverlapIndex,
    lengths: &[i64],
    params: &PipelineParams,
) -> Result<Consistency> {
    if o_ab.pair() == o_bc.pair() {
        return Err(Error::NoSharedFragment);
    }
    let b = if o_bc.involves(o_ab.a) {
        o_ab.a
    } else if o_bc.involves(o_ab.b) {
        o_ab.b
    } else {
        return Err(Error::NoSharedFragment);
    };
    let (a, c) = (o_ab.other(b), o_bc.other(b));
    let pb = Placement::new(0, Orientation::Forward);
    let pa = o_ab.place_other(b, pb, lengths);
    let pc = o_bc.place_other(b, pb, lengths);
    let implied = intersection(pa.start, lengths[a.index()], pc.start, lengths[c.index()]);
    if implied <= params.implied_overlap_threshold {
        return Ok(Consistency::Independent);
    }
    Ok(match idx.find(a, c) {
        Some(i) if agrees(idx.get(i), a, pa, pc, lengths, params.offset_tolerance) => Consistency::Consistent,
        _ => Consistency::Inconsistent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlacedFragment {
    pub frag: FragId,
    pub start: i64,
    pub orientation: Orientation,
}

impl PlacedFragment {
    pub fn placement(&self) -> Placement {
        Placement::new(self.start, self.orientation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subcontig {
    pub id: SubcontigId,
    /// Sorted by (start, fragment id); the first start is 0.
    pub placements: Vec<PlacedFragment>,
    pub length: i64,
    pub member_clones: Vec<CloneId>,
}

impl Subcontig {
    /// Normalise coordinates to start at 0 and fill in derived fields.
    pub fn from_placements(id: SubcontigId, mut placements: Vec<PlacedFragment>, ds: &Dataset) -> Subcontig {
        let min = placements.iter().map(|p| p.start).min().unwrap_or(0);
        for p in &mut placements {
            p.start -= min;
        }
        placements.sort_by_key(|p| (p.start, p.frag));
        let length = placements
            .iter()
            .map(|p| p.start + ds.len(p.frag))
            .max()
            .unwrap_or(0);
        let member_clones: BTreeSet<CloneId> = placements.iter().map(|p| ds.clone_of(p.frag)).collect();
        Subcontig {
            id,
            placements,
            length,
            member_clones: member_clones.into_iter().collect(),
        }
    }

    pub fn contains(&self, f: FragId) -> bool {
        self.placements.iter().any(|p| p.frag == f)
    }
}

/// Placements shared by the merge and subfragment passes.
struct Frame<'a> {
    ds: &'a Dataset,
    lengths: Vec<i64>,
    params: &'a PipelineParams,
    placed: Vec<Option<(usize, Placement)>>,
    layouts: Vec<Layout>,
}

#[derive(Default)]
struct Layout {
    by_start: BTreeSet<(i64, FragId)>,
    max_len: i64,
}

impl<'a> Frame<'a> {
    fn new(ds: &'a Dataset, params: &'a PipelineParams) -> Frame<'a> {
        Frame {
            ds,
            lengths: ds.lengths(),
            params,
            placed: vec![None; ds.fragments.len()],
            layouts: Vec::new(),
        }
    }

    fn new_layout(&mut self) -> usize {
        self.layouts.push(Layout::default());
        self.layouts.len() - 1
    }

    fn put(&mut self, f: FragId, l: usize, p: Placement) {
        self.placed[f.index()] = Some((l, p));
        let lay = &mut self.layouts[l];
        lay.by_start.insert((p.start, f));
        lay.max_len = lay.max_len.max(self.lengths[f.index()]);
    }

    fn take(&mut self, f: FragId) -> Option<(usize, Placement)> {
        let (l, p) = self.placed[f.index()].take()?;
        self.layouts[l].by_start.remove(&(p.start, f));
        Some((l, p))
    }

    fn members(&self, l: usize) -> Vec<(FragId, Placement)> {
        self.layouts[l]
            .by_start
            .iter()
            .map(|&(_, f)| (f, self.placed[f.index()].unwrap().1))
            .collect()
    }

    /// Would `f` at `pf` sit soundly in layout `target`? Every usable overlap to a
    /// member must agree, and every member overlapping by more than the implied
    /// overlap threshold must be witnessed by a usable overlap.
    fn fits(
        &self,
        f: FragId,
        pf: Placement,
        target: usize,
        idx: &OverlapIndex,
        usable: &dyn Fn(usize) -> bool,
    ) -> bool {
        let tol = self.params.offset_tolerance;
        for &oi in idx.of(f) {
            if !usable(oi) {
                continue;
            }
            let ov = idx.get(oi);
            if let Some((l, pg)) = self.placed[ov.other(f).index()] {
                if l == target && !agrees(ov, f, pf, pg, &self.lengths, tol) {
                    return false;
                }
            }
        }
        let lf = self.lengths[f.index()];
        let lay = &self.layouts[target];
        let lo = (pf.start - lay.max_len, FragId(0));
        let hi = (pf.start + lf, FragId(u32::MAX));
        for &(start, g) in lay.by_start.range(lo..=hi) {
            if g == f {
                continue;
            }
            let shared = intersection(pf.start, lf, start, self.lengths[g.index()]);
            if shared > self.params.implied_overlap_threshold {
                match idx.find(f, g) {
                    Some(oi) if usable(oi) => {}
                    _ => return false,
                }
            }
        }
        true
    }

    fn subcontigs(&self) -> Vec<Subcontig> {
        let mut groups: Vec<Vec<PlacedFragment>> = self
            .layouts
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.by_start.is_empty())
            .map(|(l, _)| {
                self.members(l)
                    .into_iter()
                    .map(|(frag, p)| PlacedFragment {
                        frag,
                        start: p.start,
                        orientation: p.orientation,
                    })
                    .collect()
            })
            .collect();
        groups.sort_by_key(|g| g.iter().map(|p| p.frag).min());
        groups
            .into_iter()
            .enumerate()
            .map(|(i, g)| Subcontig::from_placements(SubcontigId(i as u32), g, self.ds))
            .collect()
    }

    fn load(ds: &'a Dataset, params: &'a PipelineParams, subcontigs: &[Subcontig]) -> Frame<'a> {
        let mut frame = Frame::new(ds, params);
        for sc in subcontigs {
            let l = frame.new_layout();
            for p in &sc.placements {
                frame.put(p.frag, l, p.placement());
            }
        }
        frame
    }
}

#[derive(Debug, Clone, Default)]
pub struct MaximalAssembly {
    pub subcontigs: Vec<Subcontig>,
    /// Indices into the overlap index of overlaps held back for clone-graph resolution.
    pub deferred: BTreeSet<usize>,
}

/// Overlaps that take part in some inconsistent composition through a shared fragment.
pub fn inconsistent_overlaps(idx: &OverlapIndex, lengths: &[i64], params: &PipelineParams) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for ovs in &idx.by_frag {
        for (i, &x) in ovs.iter().enumerate() {
            for &y in &ovs[i + 1..] {
                let c = check_consistency(idx.get(x), idx.get(y), idx, lengths, params);
                if matches!(c, Ok(Consistency::Inconsistent)) {
                    out.insert(x);
                    out.insert(y);
                }
            }
        }
    }
    out
}

/// Greedy consistency-checked merging of maximal fragments into subcontigs.
/// Singleton fragments become one-fragment subcontigs; subfragments are left out.
pub fn assemble_maximal(
    ds: &Dataset,
    classes: &[FragmentClass],
    idx: &OverlapIndex,
    params: &PipelineParams,
) -> MaximalAssembly {
    let mut frame = Frame::new(ds, params);
    let mut deferred = inconsistent_overlaps(idx, &frame.lengths, params);
    for (i, class) in classes.iter().enumerate() {
        if !matches!(class, FragmentClass::Subfragment(_)) {
            let l = frame.new_layout();
            frame.put(FragId(i as u32), l, Placement::new(0, Orientation::Forward));
        }
    }
    let is_maximal = |f: FragId| classes[f.index()] == FragmentClass::Maximal;
    let mut order: Vec<usize> = (0..idx.len())
        .filter(|&i| {
            let o = idx.get(i);
            o.kind != OverlapKind::Containment && is_maximal(o.a) && is_maximal(o.b) && !deferred.contains(&i)
        })
        .collect();
    order.sort_by_key(|&i| {
        let o = idx.get(i);
        (std::cmp::Reverse(o.overlap_length), o.a, o.b)
    });
    for oi in order {
        let ov = idx.get(oi).clone();
        let (la, pa) = frame.placed[ov.a.index()].unwrap();
        let (lb, pb) = frame.placed[ov.b.index()].unwrap();
        let usable = |i: usize| !deferred.contains(&i) && classes_allow(classes, idx.get(i));
        if la == lb {
            if !agrees(&ov, ov.a, pa, pb, &frame.lengths, params.offset_tolerance) {
                deferred.insert(oi);
            }
            continue;
        }
        // Move the smaller layout into the frame of the larger.
        let (keep, moving, anchor, anchor_at, mover, mover_at) =
            if frame.layouts[la].by_start.len() >= frame.layouts[lb].by_start.len() {
                (la, lb, ov.a, pa, ov.b, pb)
            } else {
                (lb, la, ov.b, pb, ov.a, pa)
            };
        let want = ov.place_other(anchor, anchor_at, &frame.lengths);
        let len_m = frame.lengths[mover.index()];
        let transform = |p: Placement, len: i64| -> Placement {
            if want.orientation == mover_at.orientation {
                Placement::new(p.start + want.start - mover_at.start, p.orientation)
            } else {
                let c = want.start + mover_at.start + len_m;
                Placement::new(c - p.start - len, p.orientation.flip())
            }
        };
        let moved: Vec<(FragId, Placement)> = frame
            .members(moving)
            .into_iter()
            .map(|(f, p)| (f, transform(p, frame.lengths[f.index()])))
            .collect();
        let ok = moved.iter().all(|&(f, p)| frame.fits(f, p, keep, idx, &usable));
        if !ok {
            deferred.insert(oi);
            continue;
        }
        for &(f, p) in &moved {
            frame.take(f);
            frame.put(f, keep, p);
        }
    }
    MaximalAssembly {
        subcontigs: frame.subcontigs(),
        deferred,
    }
}

/// Overlaps among maximal fragments are the ones the merge pass may rely on.
fn classes_allow(classes: &[FragmentClass], ov: &ValidOverlap) -> bool {
    !matches!(classes[ov.a.index()], FragmentClass::Subfragment(_))
        && !matches!(classes[ov.b.index()], FragmentClass::Subfragment(_))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubfragmentRejection {
    ConflictingEvidence,
    OrphanContainer,
}

impl SubfragmentRejection {
    pub fn as_str(self) -> &'static str {
        match self {
            SubfragmentRejection::ConflictingEvidence => "conflicting_evidence",
            SubfragmentRejection::OrphanContainer => "orphan_container",
        }
    }
}

/// Put subfragments back inside placed containers when all placed evidence agrees.
/// Nested subfragments are handled by repeating until nothing more can be placed.
pub fn place_subfragments(
    ds: &Dataset,
    subcontigs: &[Subcontig],
    classes: &[FragmentClass],
    idx: &OverlapIndex,
    deferred: &BTreeSet<usize>,
    params: &PipelineParams,
) -> (Vec<Subcontig>, Vec<(FragId, SubfragmentRejection)>) {
    let mut frame = Frame::load(ds, params, subcontigs);
    let usable = |i: usize| !deferred.contains(&i);
    let mut pending: Vec<FragId> = classes
        .iter()
        .enumerate()
        .filter(|(i, c)| matches!(c, FragmentClass::Subfragment(_)) && frame.placed[*i].is_none())
        .map(|(i, _)| FragId(i as u32))
        .collect();
    let mut rejected: BTreeMap<FragId, SubfragmentRejection> = BTreeMap::new();
    loop {
        let mut progress = false;
        let mut still = Vec::new();
        for f in pending {
            let via = idx
                .of(f)
                .iter()
                .copied()
                .filter(|&oi| usable(oi))
                .map(|oi| idx.get(oi))
                .filter(|o| o.kind == OverlapKind::Containment && o.contained == Some(f))
                .filter_map(|o| {
                    let c = o.other(f);
                    frame.placed[c.index()].map(|(l, pc)| (c, l, o.place_other(c, pc, &frame.lengths)))
                })
                .min_by_key(|&(c, _, _)| c);
            match via {
                None => still.push(f),
                Some((_, l, p)) => {
                    // Short overlaps into another subcontig impose no constraint.
                    let foreign = idx.of(f).iter().any(|&oi| {
                        let o = idx.get(oi);
                        usable(oi)
                            && o.overlap_length > params.implied_overlap_threshold
                            && frame.placed[o.other(f).index()].is_some_and(|(lg, _)| lg != l)
                    });
                    if !foreign && frame.fits(f, p, l, idx, &usable) {
                        frame.put(f, l, p);
                        rejected.remove(&f);
                        progress = true;
                    } else {
                        rejected.insert(f, SubfragmentRejection::ConflictingEvidence);
                    }
                }
            }
        }
        pending = still;
        if !progress || pending.is_empty() {
            break;
        }
    }
    for f in pending {
        rejected.insert(f, SubfragmentRejection::OrphanContainer);
    }
    let mut out = frame.subcontigs();
    // Keep the ids of the incoming subcontigs.
    let owner: HashMap<FragId, SubcontigId> = subcontigs
        .iter()
        .flat_map(|s| s.placements.iter().map(move |p| (p.frag, s.id)))
        .collect();
    for sc in &mut out {
        if let Some(id) = sc.placements.iter().find_map(|p| owner.get(&p.frag)) {
            sc.id = *id;
        }
    }
    out.sort_by_key(|s| s.id);
    (out, rejected.into_iter().collect())
}

/// Pairs of fragments in `sc` that overlap by more than the implied overlap
/// threshold without an agreeing overlap in `idx`.
pub fn unwitnessed_pairs(
    sc: &Subcontig,
    idx: &OverlapIndex,
    lengths: &[i64],
    params: &PipelineParams,
) -> Vec<(FragId, FragId)> {
    let mut bad = Vec::new();
    for (i, x) in sc.placements.iter().enumerate() {
        let lx = lengths[x.frag.index()];
        for y in &sc.placements[i + 1..] {
            if y.start >= x.start + lx {
                continue;
            }
            let shared = intersection(x.start, lx, y.start, lengths[y.frag.index()]);
            if shared <= params.implied_overlap_threshold {
                continue;
            }
            let ok = idx.find(x.frag, y.frag).is_some_and(|oi| {
                agrees(idx.get(oi), x.frag, x.placement(), y.placement(), lengths, params.offset_tolerance)
            });
            if !ok {
                bad.push((x.frag.min(y.frag), x.frag.max(y.frag)));
            }
        }
    }
    bad
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChromosomeStatus {
    Clean,
    /// A single clone disagrees with the majority label.
    MinorityDissent(CloneId),
    /// Tie or at least two dissenting clones; no label is assigned.
    Conflicted(Vec<CloneId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChromosomeCall {
    pub chromosome: Chromosome,
    pub status: ChromosomeStatus,
}

pub fn resolve_chromosome(clones: &[CloneId], ds: &Dataset) -> ChromosomeCall {
    let mut votes: BTreeMap<&str, Vec<CloneId>> = BTreeMap::new();
    for &c in clones {
        if let Some(label) = ds.clone(c).chromosome.label() {
            votes.entry(label).or_default().push(c);
        }
    }
    let Some(best) = votes.values().map(Vec::len).max() else {
        return ChromosomeCall {
            chromosome: Chromosome::Unknown,
            status: ChromosomeStatus::Clean,
        };
    };
    let leaders: Vec<&str> = votes.iter().filter(|(_, v)| v.len() == best).map(|(k, _)| *k).collect();
    let dissenters: Vec<CloneId> = votes
        .iter()
        .filter(|(k, _)| leaders.len() > 1 || **k != leaders[0])
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    if leaders.len() > 1 || dissenters.len() >= 2 {
        let mut all = dissenters;
        all.sort();
        return ChromosomeCall {
            chromosome: Chromosome::Unknown,
            status: ChromosomeStatus::Conflicted(all),
        };
    }
    ChromosomeCall {
        chromosome: Chromosome::Assigned(leaders[0].to_string()),
        status: match dissenters.first() {
            Some(&c) => ChromosomeStatus::MinorityDissent(c),
            None => ChromosomeStatus::Clean,
        },
    }
}

pub fn resolve_chromosome_conflicts(subcontigs: &[Subcontig], ds: &Dataset) -> Vec<ChromosomeCall> {
    subcontigs
        .iter()
        .map(|sc| resolve_chromosome(&sc.member_clones, ds))
        .collect()
}

/// TSV `subcontig_id frag_id start orientation`.
pub fn write_subcontigs(subcontigs: &[Subcontig], ds: &Dataset) -> String {
    let mut out = String::from("#subcontig_id\tfrag_id\tstart\torientation\n");
    for sc in subcontigs {
        for p in &sc.placements {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                sc.id.0,
                ds.frag(p.frag).name,
                p.start,
                p.orientation.as_str()
            );
        }
    }
    out
}

pub fn parse_subcontigs(text: &str, ds: &Dataset) -> Result<Vec<Subcontig>> {
    let mut groups: BTreeMap<u32, Vec<PlacedFragment>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 4 {
            return Err(Error::parse(line_no, "expected `subcontig_id frag_id start orientation`"));
        }
        let id: u32 = t[0].parse().map_err(|_| Error::parse(line_no, "bad subcontig id"))?;
        let frag = ds.frag_id(t[1]).ok_or_else(|| Error::UnknownFragment(t[1].to_string()))?;
        let start: i64 = t[2].parse().map_err(|_| Error::parse(line_no, "bad start"))?;
        let orientation: Orientation = t[3].parse().map_err(|_| Error::parse(line_no, "bad orientation"))?;
        groups.entry(id).or_default().push(PlacedFragment {
            frag,
            start,
            orientation,
        });
    }
    Ok(groups
        .into_iter()
        .map(|(id, ps)| Subcontig::from_placements(SubcontigId(id), ps, ds))
        .collect())
}
