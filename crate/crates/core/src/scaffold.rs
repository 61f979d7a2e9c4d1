//! Ordering and orienting subcontigs into contigs.
//!
//! Subcontigs are oriented by the interval ranks of their clones, sorted by the
//! interval span of their clones, and then checked against the adjacency
//! condition: the facing end clones of consecutive subcontigs must be the same
//! clone or overlap in the clone graph.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::layout::{resolve_chromosome, PlacedFragment, Subcontig, SubcontigId};
use crate::model::{
    Chromosome, CloneId, Dataset, EndMarker, FragId, Orientation, OrientationPair, Phase,
    PipelineParams, Placement,
};

/// Clone-graph adjacency as seen by the scaffolder.
pub type Adjacency<'a> = dyn Fn(CloneId, CloneId) -> bool + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Confidence {
    /// The lowest- and highest-ranked clones do not overlap.
    Sure,
    /// Provisional orientation from ranks alone.
    Unsure,
    /// Fixed by declared end fragments or fragment order.
    ExtraInfo,
    /// Decided by orientation-pair evidence.
    Evidence,
    /// Unsure and no evidence either way; left Forward.
    LowConfidence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub sub: Subcontig,
    pub orientation: Orientation,
    pub confidence: Confidence,
    /// (min clone left, max clone right, id) in the interval model.
    pub key: (i64, i64, SubcontigId),
    /// Start coordinate in the contig.
    pub start: i64,
}

impl Member {
    /// Placement of `p` along the member's oriented axis, before the contig offset.
    pub fn local(&self, p: &PlacedFragment, ds: &Dataset) -> Placement {
        match self.orientation {
            Orientation::Forward => p.placement(),
            Orientation::Reverse => Placement::new(
                self.sub.length - p.start - ds.len(p.frag),
                p.orientation.flip(),
            ),
        }
    }

    pub fn global(&self, p: &PlacedFragment, ds: &Dataset) -> Placement {
        let l = self.local(p, ds);
        Placement::new(self.start + l.start, l.orientation)
    }

    /// Clone of the fragment reaching furthest left on the oriented axis.
    pub fn left_clone(&self, ds: &Dataset) -> CloneId {
        let p = self
            .sub
            .placements
            .iter()
            .min_by_key(|p| (self.local(p, ds).start, p.frag))
            .expect("empty subcontig");
        ds.clone_of(p.frag)
    }

    pub fn right_clone(&self, ds: &Dataset) -> CloneId {
        let p = self
            .sub
            .placements
            .iter()
            .max_by_key(|p| (self.local(p, ds).start + ds.len(p.frag), std::cmp::Reverse(p.frag)))
            .expect("empty subcontig");
        ds.clone_of(p.frag)
    }

    pub fn flip(&mut self) {
        self.orientation = self.orientation.flip();
    }

    fn is_flexible(&self) -> bool {
        matches!(self.confidence, Confidence::Unsure | Confidence::LowConfidence)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contig {
    pub id: u32,
    pub component: u32,
    pub chromosome: Chromosome,
    pub members: Vec<Member>,
    /// Junctions (by the subcontig ids on either side) accepted as FN-affected.
    pub fn_junctions: BTreeSet<(SubcontigId, SubcontigId)>,
    pub length: i64,
}

impl Contig {
    /// Recompute member starts with `gap` bases between consecutive subcontigs.
    pub fn relayout(&mut self, gap: i64) {
        let mut at = 0;
        for m in &mut self.members {
            m.start = at;
            at += m.sub.length + gap;
        }
        self.length = if self.members.is_empty() { 0 } else { at - gap };
    }

    /// Index ranges of consecutive members with identical (left, right) keys.
    pub fn tie_groups(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.members.len() {
            let k = (self.members[i].key.0, self.members[i].key.1);
            let mut j = i + 1;
            while j < self.members.len() && (self.members[j].key.0, self.members[j].key.1) == k {
                j += 1;
            }
            if j - i > 1 {
                out.push(i..j);
            }
            i = j;
        }
        out
    }

    pub fn fragments(&self) -> impl Iterator<Item = (&Member, &PlacedFragment)> {
        self.members
            .iter()
            .flat_map(|m| m.sub.placements.iter().map(move |p| (m, p)))
    }
}

/// Orientation of a subcontig from the ranks of its clones along its axis.
pub fn orient_subcontig(
    sub: &Subcontig,
    rank: &dyn Fn(CloneId) -> usize,
    adjacent: &Adjacency<'_>,
    ds: &Dataset,
) -> (Orientation, Confidence) {
    let mut centre: BTreeMap<CloneId, (i64, i64)> = BTreeMap::new();
    for p in &sub.placements {
        let e = centre.entry(ds.clone_of(p.frag)).or_default();
        e.0 += 2 * p.start + ds.len(p.frag);
        e.1 += 2;
    }
    let pts: Vec<(f64, usize, CloneId)> = centre
        .iter()
        .map(|(&c, &(s, n))| (s as f64 / n as f64, rank(c), c))
        .collect();
    let mut concord: i64 = 0;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let dp = (a.0 - b.0).partial_cmp(&0.0).map_or(0, |o| o as i64);
            let dr = (a.1 as i64 - b.1 as i64).signum();
            concord += dp * dr;
        }
    }
    let orientation = if concord < 0 {
        Orientation::Reverse
    } else {
        Orientation::Forward
    };
    let lo = pts.iter().min_by_key(|p| (p.1, p.2)).map(|p| p.2);
    let hi = pts.iter().max_by_key(|p| (p.1, std::cmp::Reverse(p.2))).map(|p| p.2);
    let sure = match (lo, hi) {
        (Some(x), Some(y)) => x != y && concord != 0 && !adjacent(x, y),
        _ => false,
    };
    (
        orientation,
        if sure { Confidence::Sure } else { Confidence::Unsure },
    )
}

/// Interval key of a subcontig: (min left, max right, id) over member clones.
pub fn coordinate_key(sub: &Subcontig, interval: &dyn Fn(CloneId) -> Interval) -> (i64, i64, SubcontigId) {
    let l = sub.member_clones.iter().map(|&c| interval(c).left).min().unwrap_or(0);
    let r = sub.member_clones.iter().map(|&c| interval(c).right).max().unwrap_or(0);
    (l, r, sub.id)
}

/// Orient, key and sort the subcontigs of one interval component.
pub fn assign_coordinates_and_order(
    id: u32,
    component: u32,
    subs: Vec<Subcontig>,
    interval: &dyn Fn(CloneId) -> Interval,
    rank: &dyn Fn(CloneId) -> usize,
    adjacent: &Adjacency<'_>,
    ds: &Dataset,
    params: &PipelineParams,
) -> Contig {
    let mut members: Vec<Member> = subs
        .into_iter()
        .map(|sub| {
            let (orientation, confidence) = orient_subcontig(&sub, rank, adjacent, ds);
            let key = coordinate_key(&sub, interval);
            Member {
                sub,
                orientation,
                confidence,
                key,
                start: 0,
            }
        })
        .collect();
    members.sort_by_key(|m| m.key);
    place_single_clone_members(&mut members, adjacent, ds, params.gap_spacer);
    let clones: BTreeSet<CloneId> = members
        .iter()
        .flat_map(|m| m.sub.member_clones.iter().copied())
        .collect();
    let clones: Vec<CloneId> = clones.into_iter().collect();
    let mut contig = Contig {
        id,
        component,
        chromosome: resolve_chromosome(&clones, ds).chromosome,
        members,
        fn_junctions: BTreeSet::new(),
        length: 0,
    };
    contig.relayout(params.gap_spacer);
    contig
}

fn clone_extent(m: &Member, x: CloneId, ds: &Dataset) -> Option<(i64, i64)> {
    m.sub
        .placements
        .iter()
        .filter(|p| ds.clone_of(p.frag) == x)
        .map(|p| {
            let l = m.local(p, ds);
            (l.start, l.start + ds.len(p.frag))
        })
        .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
}

/// Span of `x` over `seq` laid out with `gap` between members.
fn span_in(seq: &[&Member], x: CloneId, ds: &Dataset, gap: i64) -> i64 {
    let (mut lo, mut hi, mut at) = (i64::MAX, i64::MIN, 0);
    for m in seq {
        if let Some((a, b)) = clone_extent(m, x, ds) {
            lo = lo.min(at + a);
            hi = hi.max(at + b);
        }
        at += m.sub.length + gap;
    }
    hi - lo
}

/// Move subcontigs holding a single clone, which the interval key cannot order
/// against that clone's other subcontigs, to the positions giving the clone its
/// smallest span.
pub fn place_single_clone_members(members: &mut Vec<Member>, adjacent: &Adjacency<'_>, ds: &Dataset, gap: i64) {
    let single = |m: &Member| m.sub.member_clones.len() == 1;
    let clones: BTreeSet<CloneId> = members
        .iter()
        .filter(|m| single(m))
        .map(|m| m.sub.member_clones[0])
        .filter(|x| members.iter().any(|o| !single(o) && o.sub.member_clones.contains(x)))
        .collect();
    for x in clones {
        let mut taken = Vec::new();
        let mut k = 0;
        while k < members.len() {
            if single(&members[k]) && members[k].sub.member_clones[0] == x {
                taken.push((k, members.remove(k)));
            } else {
                k += 1;
            }
        }
        for (i, m) in taken {
            let holders: Vec<usize> = (0..members.len())
                .filter(|&k| members[k].sub.member_clones.contains(&x))
                .collect();
            let (a, b) = (holders[0], *holders.last().unwrap());
            let i = i.min(members.len());
            let fits = |p: usize| -> bool {
                let ok = |c: CloneId| c == x || adjacent(c, x);
                (p == 0 || ok(members[p - 1].right_clone(ds))) && (p == members.len() || ok(members[p].left_clone(ds)))
            };
            let cost = |p: usize| -> i64 {
                let (lo, hi) = (a.min(p), (b + 1).max(p));
                let mut seq: Vec<&Member> = members[lo..hi].iter().collect();
                seq.insert(p - lo, &m);
                span_in(&seq, x, ds, gap)
            };
            let mut candidates: Vec<usize> = (a..=b + 1).collect();
            if !candidates.contains(&i) {
                candidates.push(i);
            }
            // A piece seen only in `x` should not sit inside another clone.
            let lo = *candidates.iter().min().unwrap();
            let hi = *candidates.iter().max().unwrap();
            let nearby: BTreeSet<CloneId> = members[lo.saturating_sub(1)..(hi + 1).min(members.len())]
                .iter()
                .flat_map(|m| m.sub.member_clones.iter().copied())
                .filter(|&c| c != x)
                .collect();
            let mut reach: BTreeMap<CloneId, (usize, usize)> = BTreeMap::new();
            for (k, o) in members.iter().enumerate() {
                for c in o.sub.member_clones.iter().filter(|c| nearby.contains(c)) {
                    let e = reach.entry(*c).or_insert((k, k));
                    e.1 = k;
                }
            }
            let straddled = |p: usize| reach.values().filter(|&&(f, l)| f < p && p <= l).count();
            let best = candidates
                .into_iter()
                .min_by_key(|&p| (!fits(p), straddled(p), cost(p), p != i, p.abs_diff(i), p))
                .unwrap();
            members.insert(best, m);
        }
    }
}

/// Sum over `clones` of their spans in the laid-out contig.
fn total_span(contig: &Contig, clones: &BTreeSet<CloneId>, ds: &Dataset) -> i64 {
    let mut ext: BTreeMap<CloneId, (i64, i64)> = BTreeMap::new();
    for m in &contig.members {
        if !m.sub.member_clones.iter().any(|c| clones.contains(c)) {
            continue;
        }
        for p in &m.sub.placements {
            let x = ds.clone_of(p.frag);
            if clones.contains(&x) {
                let g = m.global(p, ds);
                let e = ext.entry(x).or_insert((i64::MAX, i64::MIN));
                e.0 = e.0.min(g.start);
                e.1 = e.1.max(g.start + ds.len(p.frag));
            }
        }
    }
    ext.values().map(|(a, b)| b - a).sum()
}

const MAX_COMPACT_FLIPS: usize = 3;

/// Reorder tie groups and flip members without orientation evidence where
/// that shortens the clones they hold and adds no adjacency violation.
pub fn compact(contig: &mut Contig, adjacent: &Adjacency<'_>, ds: &Dataset, gap: i64) {
    contig.relayout(gap);
    for g in contig.tie_groups() {
        if g.len() > MAX_TIE_PERMUTE {
            continue;
        }
        let clones: BTreeSet<CloneId> = contig.members[g.clone()]
            .iter()
            .flat_map(|m| m.sub.member_clones.iter().copied())
            .collect();
        let flexible: Vec<usize> = g
            .clone()
            .filter(|&k| contig.members[k].is_flexible())
            .take(MAX_COMPACT_FLIPS)
            .collect();
        let original: Vec<Member> = contig.members[g.clone()].to_vec();
        let score = |c: &Contig| (violation_pairs(c, adjacent, ds).len(), total_span(c, &clones, ds));
        let mut best = (score(contig), original.clone());
        for perm in permutations(g.len()) {
            for mask in 0..1usize << flexible.len() {
                for (slot, &k) in perm.iter().enumerate() {
                    contig.members[g.start + slot] = original[k].clone();
                }
                for (bit, &k) in flexible.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        let slot = perm.iter().position(|&q| q == k - g.start).unwrap();
                        contig.members[g.start + slot].flip();
                    }
                }
                contig.relayout(gap);
                let sc = score(contig);
                if sc < best.0 {
                    best = (sc, contig.members[g.clone()].to_vec());
                }
            }
        }
        for (slot, m) in best.1.into_iter().enumerate() {
            contig.members[g.start + slot] = m;
        }
        contig.relayout(gap);
    }
    for k in 0..contig.members.len() {
        if !contig.members[k].is_flexible() {
            continue;
        }
        let clones: BTreeSet<CloneId> = contig.members[k].sub.member_clones.iter().copied().collect();
        let before = (violation_pairs(contig, adjacent, ds), total_span(contig, &clones, ds));
        contig.members[k].flip();
        let after = (violation_pairs(contig, adjacent, ds), total_span(contig, &clones, ds));
        if !(after.0.is_subset(&before.0) && after.1 < before.1) {
            contig.members[k].flip();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    /// Index of the left member of the junction.
    pub at: usize,
    pub left: SubcontigId,
    pub right: SubcontigId,
    pub left_clone: CloneId,
    pub right_clone: CloneId,
}

/// Junctions whose facing end clones are neither identical nor adjacent.
pub fn check_adjacency(contig: &Contig, adjacent: &Adjacency<'_>, ds: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, w) in contig.members.windows(2).enumerate() {
        let x = w[0].right_clone(ds);
        let y = w[1].left_clone(ds);
        if x != y && !adjacent(x, y) {
            out.push(Violation {
                at: i,
                left: w[0].sub.id,
                right: w[1].sub.id,
                left_clone: x,
                right_clone: y,
            });
        }
    }
    out
}

fn open_violations(contig: &Contig, adjacent: &Adjacency<'_>, ds: &Dataset) -> Vec<Violation> {
    check_adjacency(contig, adjacent, ds)
        .into_iter()
        .filter(|v| !contig.fn_junctions.contains(&(v.left, v.right)))
        .collect()
}

fn violation_pairs(contig: &Contig, adjacent: &Adjacency<'_>, ds: &Dataset) -> BTreeSet<(SubcontigId, SubcontigId)> {
    open_violations(contig, adjacent, ds)
        .into_iter()
        .map(|v| (v.left, v.right))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FnCause {
    Unclassified,
    RepeatMasking,
    LowAccuracy,
    ChimericFragment,
    Polymorphism,
}

impl FnCause {
    pub fn as_str(self) -> &'static str {
        match self {
            FnCause::Unclassified => "unclassified",
            FnCause::RepeatMasking => "repeat_masking",
            FnCause::LowAccuracy => "low_accuracy",
            FnCause::ChimericFragment => "chimeric_fragment",
            FnCause::Polymorphism => "polymorphism",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FnReport {
    pub contig: u32,
    pub violation: Violation,
    /// Subcontig whose fragments were taken out, if any.
    pub removed: Option<SubcontigId>,
    pub fragments: Vec<FragId>,
    pub cause: FnCause,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut cur: Vec<usize> = (0..n).collect();
    fn go(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in k..cur.len() {
            cur.swap(k, i);
            go(k + 1, cur, out);
            cur.swap(k, i);
        }
    }
    go(0, &mut cur, &mut out);
    out.sort();
    out
}

const MAX_TIE_PERMUTE: usize = 6;

/// Try orders of the tie group touching junction `at`; keep the first that
/// removes violations without adding any.
fn fix_by_tie_order(contig: &mut Contig, at: usize, adjacent: &Adjacency<'_>, ds: &Dataset) -> bool {
    let before = violation_pairs(contig, adjacent, ds);
    for g in contig.tie_groups() {
        if !(g.contains(&at) || g.contains(&(at + 1))) || g.len() > MAX_TIE_PERMUTE {
            continue;
        }
        let original: Vec<Member> = contig.members[g.clone()].to_vec();
        for perm in permutations(g.len()).into_iter().skip(1) {
            for (k, &p) in perm.iter().enumerate() {
                contig.members[g.start + k] = original[p].clone();
            }
            let after = violation_pairs(contig, adjacent, ds);
            if after.len() < before.len() && after.iter().all(|v| before.contains(v) || !touches(v, &original)) {
                return true;
            }
        }
        for (k, m) in original.into_iter().enumerate() {
            contig.members[g.start + k] = m;
        }
    }
    false
}

fn touches(v: &(SubcontigId, SubcontigId), members: &[Member]) -> bool {
    members.iter().any(|m| m.sub.id == v.0 || m.sub.id == v.1)
}

/// Flip unsure members at the junction when that strictly reduces violations.
fn fix_by_flip(contig: &mut Contig, at: usize, adjacent: &Adjacency<'_>, ds: &Dataset) -> bool {
    let before = open_violations(contig, adjacent, ds).len();
    let choices: [&[usize]; 3] = [&[at], &[at + 1], &[at, at + 1]];
    for set in choices {
        if set.iter().any(|&i| !contig.members[i].is_flexible()) {
            continue;
        }
        for &i in set {
            contig.members[i].flip();
        }
        if open_violations(contig, adjacent, ds).len() < before {
            return true;
        }
        for &i in set {
            contig.members[i].flip();
        }
    }
    false
}

/// Find FN-affected subcontigs; removes their fragments from the contig and reports them.
pub fn detect_fns(
    contig: &mut Contig,
    adjacent: &Adjacency<'_>,
    ds: &Dataset,
    params: &PipelineParams,
) -> Vec<FnReport> {
    let mut reports = Vec::new();
    let mut budget = 4 * contig.members.len() + 4;
    while budget > 0 {
        budget -= 1;
        let Some(v) = open_violations(contig, adjacent, ds).into_iter().next() else {
            break;
        };
        if fix_by_tie_order(contig, v.at, adjacent, ds) || fix_by_flip(contig, v.at, adjacent, ds) {
            continue;
        }
        let n = contig.members.len();
        let bridges = |skip: usize| -> bool {
            if skip == 0 || skip + 1 >= n {
                return true;
            }
            let x = contig.members[skip - 1].right_clone(ds);
            let y = contig.members[skip + 1].left_clone(ds);
            x == y || adjacent(x, y)
        };
        let mut blame: Vec<usize> = [v.at, v.at + 1].into_iter().filter(|&i| bridges(i)).collect();
        let open = open_violations(contig, adjacent, ds);
        let touching = |i: usize| open.iter().filter(|w| w.at == i || w.at + 1 == i).count();
        blame.sort_by_key(|&i| {
            (
                std::cmp::Reverse(touching(i)),
                contig.members[i].sub.placements.len(),
                contig.members[i].sub.id,
            )
        });
        match blame.first() {
            Some(&i) => {
                let m = contig.members.remove(i);
                reports.push(FnReport {
                    contig: contig.id,
                    violation: v,
                    removed: Some(m.sub.id),
                    fragments: m.sub.placements.iter().map(|p| p.frag).collect(),
                    cause: FnCause::Unclassified,
                });
            }
            None => {
                contig.fn_junctions.insert((v.left, v.right));
                reports.push(FnReport {
                    contig: contig.id,
                    violation: v,
                    removed: None,
                    fragments: Vec::new(),
                    cause: FnCause::Unclassified,
                });
            }
        }
    }
    contig.relayout(params.gap_spacer);
    reports
}

/// Assembled span over estimated length, using the contig where the clone spans most.
pub fn compute_warp(clone: CloneId, contigs: &[Contig], ds: &Dataset) -> Result<f64> {
    let span = clone_span(clone, contigs, ds).ok_or_else(|| Error::NoPlacedFragments(ds.clone(clone).name.clone()))?;
    let est = ds.clone(clone).estimated_length;
    if est <= 0 {
        return Err(Error::InvalidParam {
            key: "estimated_length".into(),
            msg: format!("clone {} has no positive estimate", ds.clone(clone).name),
        });
    }
    Ok(span.span as f64 / est as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CloneSpan {
    pub contig: u32,
    pub span: i64,
    pub leftmost: FragId,
    pub rightmost: FragId,
}

pub fn clone_span(clone: CloneId, contigs: &[Contig], ds: &Dataset) -> Option<CloneSpan> {
    let mut best: Option<CloneSpan> = None;
    for c in contigs {
        let mut lo: Option<(i64, FragId)> = None;
        let mut hi: Option<(i64, FragId)> = None;
        for (m, p) in c.fragments() {
            if ds.clone_of(p.frag) != clone {
                continue;
            }
            let g = m.global(p, ds);
            let end = g.start + ds.len(p.frag);
            if lo.is_none_or(|(s, f)| (g.start, p.frag) < (s, f)) {
                lo = Some((g.start, p.frag));
            }
            if hi.is_none_or(|(e, f)| end > e || (end == e && p.frag < f)) {
                hi = Some((end, p.frag));
            }
        }
        if let (Some(l), Some(h)) = (lo, hi) {
            let s = CloneSpan {
                contig: c.id,
                span: h.0 - l.0,
                leftmost: l.1,
                rightmost: h.1,
            };
            if best.is_none_or(|b| s.span > b.span) {
                best = Some(s);
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpReport {
    pub clone: CloneId,
    pub span: i64,
    pub warp: f64,
    pub long_clone: bool,
    /// The fragments at the two ends of the stretched span.
    pub stretch: (FragId, FragId),
}

/// Flag clones whose assembled span suggests a misassembly. Flag only.
pub fn detect_residual_fps(contigs: &[Contig], ds: &Dataset, params: &PipelineParams) -> (Vec<FpReport>, Vec<String>) {
    let mut reports = Vec::new();
    let mut notes = Vec::new();
    for c in &ds.clones {
        let Some(s) = clone_span(c.id, contigs, ds) else { continue };
        if c.estimated_length <= 0 {
            notes.push(format!("clone {} skipped: unknown estimated length", c.name));
            continue;
        }
        let warp = s.span as f64 / c.estimated_length as f64;
        let long_clone = s.span > params.long_bac_length_flag;
        if warp > params.warp_flag_threshold || long_clone {
            reports.push(FpReport {
                clone: c.id,
                span: s.span,
                warp,
                long_clone,
                stretch: (s.leftmost, s.rightmost),
            });
        }
    }
    (reports, notes)
}

/// Satisfied declared-end and declared-order constraints inside the contig.
fn extra_info_score(contig: &Contig, ds: &Dataset) -> usize {
    let mut per_clone: BTreeMap<CloneId, Vec<(i64, i64, FragId)>> = BTreeMap::new();
    for (m, p) in contig.fragments() {
        let f = ds.frag(p.frag);
        if f.end_marker.is_some() || f.declared_order.is_some() || ds.clone(f.clone).phase == Phase::Two {
            let g = m.global(p, ds);
            per_clone.entry(f.clone).or_default().push((g.start, g.start + f.length, p.frag));
        }
    }
    let mut score = 0;
    for (c, mut frs) in per_clone {
        frs.sort();
        let all: Vec<i64> = contig
            .fragments()
            .filter(|(_, p)| ds.clone_of(p.frag) == c)
            .map(|(m, p)| m.global(p, ds).start)
            .collect();
        let (lo, hi) = (all.iter().min().copied(), all.iter().max().copied());
        for &(s, _, f) in &frs {
            if matches!(ds.frag(f).end_marker, Some(EndMarker::Left | EndMarker::Right))
                && (Some(s) == lo || Some(s) == hi)
            {
                score += 1;
            }
        }
        let orders: Vec<u32> = frs.iter().filter_map(|&(_, _, f)| ds.frag(f).declared_order).collect();
        if orders.len() >= 2 && (orders.windows(2).all(|w| w[0] <= w[1]) || orders.windows(2).all(|w| w[0] >= w[1])) {
            score += 1;
        }
    }
    score
}

/// Use declared end fragments and fragment orders to fix flexible orientations
/// and tie orders, keeping only changes that add no adjacency violation.
pub fn apply_extra_info(
    contig: &mut Contig,
    adjacent: &Adjacency<'_>,
    ds: &Dataset,
    params: &PipelineParams,
) -> Vec<String> {
    let mut log = Vec::new();
    let mut best = extra_info_score(contig, ds);
    let mut improved = true;
    let mut rounds = contig.members.len() + 1;
    while improved && rounds > 0 {
        improved = false;
        rounds -= 1;
        let before = violation_pairs(contig, adjacent, ds);
        let mut moves: Vec<(usize, Option<usize>)> = (0..contig.members.len())
            .filter(|&i| contig.members[i].is_flexible())
            .map(|i| (i, None))
            .collect();
        for g in contig.tie_groups() {
            for i in g.start..g.end - 1 {
                moves.push((i, Some(i + 1)));
            }
        }
        for (i, swap) in moves {
            match swap {
                None => contig.members[i].flip(),
                Some(j) => contig.members.swap(i, j),
            }
            contig.relayout(params.gap_spacer);
            let score = extra_info_score(contig, ds);
            let after = violation_pairs(contig, adjacent, ds);
            let feasible = after.is_subset(&before);
            let what = match swap {
                None => format!("flip subcontig {}", contig.members[i].sub.id.0),
                Some(j) => format!(
                    "swap subcontigs {} and {}",
                    contig.members[j].sub.id.0, contig.members[i].sub.id.0
                ),
            };
            if score > best && feasible {
                best = score;
                if swap.is_none() {
                    contig.members[i].confidence = Confidence::ExtraInfo;
                }
                log.push(format!("contig {}: {what} applied", contig.id));
                improved = true;
                break;
            }
            if score > best {
                log.push(format!("contig {}: {what} skipped, breaks adjacency", contig.id));
            }
            match swap {
                None => contig.members[i].flip(),
                Some(j) => contig.members.swap(i, j),
            }
            contig.relayout(params.gap_spacer);
        }
    }
    log
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OrientSummary {
    pub flips: usize,
    pub initial_disagreement: u64,
    pub final_disagreement: u64,
}

/// Greedily flip unsure subcontigs to minimise weighted disagreement with
/// orientation pairs. Sure subcontigs never flip; flips that would add an
/// adjacency violation are not taken.
pub fn orient_unsure(
    contigs: &mut [Contig],
    pairs: &[OrientationPair],
    adjacent: &Adjacency<'_>,
    ds: &Dataset,
) -> OrientSummary {
    let mut loc: HashMap<FragId, (usize, usize, usize)> = HashMap::new();
    for (ci, c) in contigs.iter().enumerate() {
        for (mi, m) in c.members.iter().enumerate() {
            for (pi, p) in m.sub.placements.iter().enumerate() {
                loc.insert(p.frag, (ci, mi, pi));
            }
        }
    }
    let mut touching: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let usable: Vec<(usize, (usize, usize, usize), (usize, usize, usize))> = pairs
        .iter()
        .enumerate()
        .filter_map(|(k, p)| {
            let a = *loc.get(&p.a)?;
            let b = *loc.get(&p.b)?;
            ((a.0, a.1) != (b.0, b.1)).then_some((k, a, b))
        })
        .collect();
    for (u, &(_, a, b)) in usable.iter().enumerate() {
        touching.entry((a.0, a.1)).or_default().push(u);
        touching.entry((b.0, b.1)).or_default().push(u);
    }
    let orient_of = |contigs: &[Contig], at: (usize, usize, usize)| -> Orientation {
        let m = &contigs[at.0].members[at.1];
        m.local(&m.sub.placements[at.2], ds).orientation
    };
    let disagree = |contigs: &[Contig], u: usize| -> u64 {
        let (k, a, b) = usable[u];
        let rel = orient_of(contigs, a).relative_to(orient_of(contigs, b));
        if rel == pairs[k].strand {
            0
        } else {
            pairs[k].evidence_count as u64
        }
    };
    let weight = |u: usize| pairs[usable[u].0].evidence_count as u64;
    let total = |contigs: &[Contig]| -> u64 { (0..usable.len()).map(|u| disagree(contigs, u)).sum() };
    let mut summary = OrientSummary {
        initial_disagreement: total(contigs),
        ..Default::default()
    };
    let mut flexible: Vec<(usize, usize)> = Vec::new();
    for (ci, c) in contigs.iter().enumerate() {
        for (mi, m) in c.members.iter().enumerate() {
            if m.confidence == Confidence::Unsure {
                flexible.push((ci, mi));
            }
        }
    }
    // Each pair asks for equal or opposite flip states of its two members.
    // Merge requests heaviest first with a parity union-find; members whose
    // orientation is settled share one anchor that never flips.
    let flex_set: BTreeSet<(usize, usize)> = flexible.iter().copied().collect();
    const ANCHOR: (usize, usize) = (usize::MAX, usize::MAX);
    let node = |k: (usize, usize)| if flex_set.contains(&k) { k } else { ANCHOR };
    let mut want: BTreeMap<((usize, usize), (usize, usize)), [u64; 2]> = BTreeMap::new();
    for (u, &(_, a, b)) in usable.iter().enumerate() {
        let (x, y) = (node((a.0, a.1)), node((b.0, b.1)));
        if x == y {
            continue;
        }
        let parity = usize::from(disagree(contigs, u) > 0);
        want.entry((x.min(y), x.max(y))).or_insert([0, 0])[parity] += weight(u);
    }
    let mut requests: Vec<(u64, (usize, usize), (usize, usize), u8)> = want
        .into_iter()
        .filter(|(_, w)| w[0] != w[1])
        .map(|((x, y), w)| (w[0].abs_diff(w[1]), x, y, u8::from(w[1] > w[0])))
        .collect();
    requests.sort_by(|a, b| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut parent: BTreeMap<(usize, usize), ((usize, usize), u8)> = BTreeMap::new();
    fn root(p: &mut BTreeMap<(usize, usize), ((usize, usize), u8)>, k: (usize, usize)) -> ((usize, usize), u8) {
        let (up, par) = *p.entry(k).or_insert((k, 0));
        if up == k {
            return (k, 0);
        }
        let (r, pr) = root(p, up);
        p.insert(k, (r, par ^ pr));
        (r, par ^ pr)
    }
    for (_, x, y, parity) in requests {
        let (rx, px) = root(&mut parent, x);
        let (ry, py) = root(&mut parent, y);
        if rx == ry {
            continue;
        }
        // The anchor always stays a root.
        let (child, top) = if ry == ANCHOR || (rx != ANCHOR && rx > ry) { (rx, ry) } else { (ry, rx) };
        parent.insert(child, (top, px ^ py ^ parity));
    }
    let mut groups: BTreeMap<(usize, usize), Vec<((usize, usize), u8)>> = BTreeMap::new();
    for &k in &flexible {
        let (r, p) = root(&mut parent, k);
        groups.entry(r).or_default().push((k, p));
    }
    for members in groups.into_values() {
        let flips: Vec<(usize, usize)> = members.iter().filter(|&&(_, p)| p == 1).map(|&(k, _)| k).collect();
        if flips.is_empty() {
            continue;
        }
        let touched: BTreeSet<usize> = flips.iter().map(|k| k.0).collect();
        let before: Vec<_> = touched.iter().map(|&ci| violation_pairs(&contigs[ci], adjacent, ds)).collect();
        for &(ci, mi) in &flips {
            contigs[ci].members[mi].flip();
        }
        let ok = touched
            .iter()
            .zip(&before)
            .all(|(&ci, b)| violation_pairs(&contigs[ci], adjacent, ds).is_subset(b));
        if ok {
            summary.flips += flips.len();
        } else {
            for &(ci, mi) in &flips {
                contigs[ci].members[mi].flip();
            }
        }
    }
    for &(ci, mi) in &flexible {
        let m = &mut contigs[ci].members[mi];
        m.confidence = if touching.contains_key(&(ci, mi)) {
            Confidence::Evidence
        } else {
            Confidence::LowConfidence
        };
    }
    summary.final_disagreement = total(contigs);
    summary
}

fn complement(b: u8) -> u8 {
    match b {
        b'A' => b'T',
        b'C' => b'G',
        b'G' => b'C',
        b'T' => b'A',
        _ => b'N',
    }
}

/// Consensus sequence of a laid-out contig, or `None` without sequences.
/// Overlapping bases come from the fragment ranked highest by: maximal over
/// subfragment, finished over draft, longer, then lower id.
pub fn consensus(contig: &Contig, maximal: &dyn Fn(FragId) -> bool, ds: &Dataset) -> Option<String> {
    let mut frags: Vec<(&Member, &PlacedFragment)> = contig.fragments().collect();
    if frags.iter().any(|(_, p)| ds.frag(p.frag).sequence.is_none()) {
        return None;
    }
    let rank = |f: FragId| {
        let fr = ds.frag(f);
        (
            maximal(f),
            ds.clone(fr.clone).phase.is_finished(),
            fr.length,
            std::cmp::Reverse(f),
        )
    };
    frags.sort_by_key(|(_, p)| rank(p.frag));
    let mut canvas = vec![b'N'; contig.length.max(0) as usize];
    for (m, p) in frags {
        let g = m.global(p, ds);
        let seq = ds.frag(p.frag).sequence.as_deref().unwrap().as_bytes();
        let start = g.start as usize;
        match g.orientation {
            Orientation::Forward => canvas[start..start + seq.len()].copy_from_slice(seq),
            Orientation::Reverse => {
                for (k, &b) in seq.iter().rev().enumerate() {
                    canvas[start + k] = complement(b);
                }
            }
        }
    }
    Some(String::from_utf8(canvas).expect("ASCII bases"))
}

fn orientation_code(m: &Member) -> &'static str {
    match (m.confidence, m.orientation) {
        (Confidence::LowConfidence, _) => "U",
        (_, o) => o.as_str(),
    }
}

/// Text layout: a `contig` header per contig, then `subcontig_id orientation start`
/// rows, then `frag_id clone_id global_start orientation subcontig_id` rows.
pub fn write_layout(contigs: &[Contig], ds: &Dataset) -> String {
    let mut out = String::new();
    for c in contigs {
        let _ = writeln!(out, "contig\t{}\t{}\t{}\t{}", c.id, c.component, c.chromosome, c.length);
        for m in &c.members {
            let _ = writeln!(out, "{}\t{}\t{}", m.sub.id.0, orientation_code(m), m.start);
        }
        let mut rows: Vec<(i64, FragId, Placement, SubcontigId)> = c
            .fragments()
            .map(|(m, p)| (m.global(p, ds).start, p.frag, m.global(p, ds), m.sub.id))
            .collect();
        rows.sort_by_key(|r| (r.0, r.1));
        for (_, f, g, s) in rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                ds.frag(f).name,
                ds.clone(ds.clone_of(f)).name,
                g.start,
                g.orientation.as_str(),
                s.0
            );
        }
    }
    out
}

/// One fragment row of a parsed layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutRow {
    pub contig: u32,
    pub frag: String,
    pub clone: String,
    pub start: i64,
    pub orientation: Orientation,
    pub subcontig: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutHeader {
    pub contig: u32,
    pub component: u32,
    pub chromosome: Chromosome,
    pub length: i64,
}

/// Parse a layout file without needing the clone table.
pub fn parse_layout(text: &str) -> Result<(Vec<LayoutHeader>, Vec<LayoutRow>)> {
    let mut headers = Vec::new();
    let mut rows = Vec::new();
    let num = |s: &str, line: usize| -> Result<i64> { s.parse().map_err(|_| Error::parse(line, format!("bad number {s:?}"))) };
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let t: Vec<&str> = line.split('\t').collect();
        match t.as_slice() {
            [] | [""] => {}
            ["contig", id, comp, chr, len] => headers.push(LayoutHeader {
                contig: num(id, n)? as u32,
                component: num(comp, n)? as u32,
                chromosome: Chromosome::parse(chr),
                length: num(len, n)?,
            }),
            [_, _, _] => {}
            [frag, clone, start, o, sub] => {
                let contig = headers.last().ok_or_else(|| Error::parse(n, "fragment row before contig header"))?.contig;
                rows.push(LayoutRow {
                    contig,
                    frag: frag.to_string(),
                    clone: clone.to_string(),
                    start: num(start, n)?,
                    orientation: o.parse().map_err(|_| Error::parse(n, "bad orientation"))?,
                    subcontig: num(sub, n)? as u32,
                });
            }
            _ => return Err(Error::parse(n, "unrecognised layout row")),
        }
    }
    Ok((headers, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Clone, Fragment, Strand};

    /// Clones `C0..` with one fragment each; lengths given.
    fn dataset(lengths: &[i64]) -> Dataset {
        let clones = lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| Clone {
                id: CloneId(i as u32),
                name: format!("C{i}"),
                estimated_length: l,
                phase: Phase::One,
                chromosome: Chromosome::Assigned("1".into()),
                fragments: vec![FragId(i as u32)],
            })
            .collect();
        let frags = lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| Fragment {
                id: FragId(i as u32),
                name: format!("C{i}~1"),
                clone: CloneId(i as u32),
                record_start: 1,
                record_end: l,
                length: l,
                declared_order: None,
                end_marker: None,
                sequence: None,
            })
            .collect();
        Dataset::new(clones, frags)
    }

    fn sub(ds: &Dataset, id: u32, frags: &[(u32, i64)]) -> Subcontig {
        Subcontig::from_placements(
            SubcontigId(id),
            frags
                .iter()
                .map(|&(f, s)| PlacedFragment { frag: FragId(f), start: s, orientation: Orientation::Forward })
                .collect(),
            ds,
        )
    }

    fn member(s: Subcontig, key: (i64, i64), confidence: Confidence) -> Member {
        let id = s.id;
        Member { sub: s, orientation: Orientation::Forward, confidence, key: (key.0, key.1, id), start: 0 }
    }

    fn contig(members: Vec<Member>) -> Contig {
        let mut c = Contig {
            id: 0,
            component: 0,
            chromosome: Chromosome::Unknown,
            members,
            fn_junctions: BTreeSet::new(),
            length: 0,
        };
        c.relayout(100);
        c
    }

    #[test]
    fn orientation_from_ranks() {
        let ds = dataset(&[10, 10, 10, 10, 10, 10]);
        let s = sub(&ds, 0, &[(0, 0), (1, 10), (2, 20)]);
        let ranks = [5usize, 3, 1, 0, 0, 0];
        let never = |_: CloneId, _: CloneId| false;
        let (o, c) = orient_subcontig(&s, &|c| ranks[c.index()], &never, &ds);
        assert_eq!(o, Orientation::Reverse);
        assert_eq!(c, Confidence::Sure);
        let single = sub(&ds, 1, &[(3, 0)]);
        assert_eq!(orient_subcontig(&single, &|_| 2, &never, &ds), (Orientation::Forward, Confidence::Unsure));
        let two = sub(&ds, 2, &[(4, 0), (5, 5)]);
        let r2 = [0, 0, 0, 0, 1, 4];
        assert_eq!(
            orient_subcontig(&two, &|c| r2[c.index()], &never, &ds),
            (Orientation::Forward, Confidence::Sure)
        );
        let always = |_: CloneId, _: CloneId| true;
        assert_eq!(orient_subcontig(&two, &|c| r2[c.index()], &always, &ds).1, Confidence::Unsure);
    }

    #[test]
    fn adjacency_checks() {
        let ds = dataset(&[10, 10, 10]);
        let c = contig(vec![
            member(sub(&ds, 0, &[(0, 0)]), (0, 1), Confidence::Sure),
            member(sub(&ds, 1, &[(1, 0)]), (2, 3), Confidence::Sure),
            member(sub(&ds, 2, &[(2, 0)]), (4, 5), Confidence::Sure),
        ]);
        let adj = |x: CloneId, y: CloneId| (x.0.min(y.0), x.0.max(y.0)) == (0, 1);
        let v = check_adjacency(&c, &adj, &ds);
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].left_clone, v[0].right_clone), (CloneId(1), CloneId(2)));
        // Same end clone on both sides passes.
        let ds2 = {
            let mut d = dataset(&[10, 10]);
            d.fragments[1].clone = CloneId(0);
            d
        };
        let c2 = contig(vec![
            member(sub(&ds2, 0, &[(0, 0)]), (0, 1), Confidence::Sure),
            member(sub(&ds2, 1, &[(1, 0)]), (2, 3), Confidence::Sure),
        ]);
        assert!(check_adjacency(&c2, &|_, _| false, &ds2).is_empty());
    }

    #[test]
    fn stranded_subcontig_is_removed_as_fn() {
        // Chain 0-1-2 with a stranded subcontig of clone 3 between 0 and 1.
        let ds = dataset(&[10, 10, 10, 10]);
        let mut c = contig(vec![
            member(sub(&ds, 0, &[(0, 0)]), (0, 3), Confidence::Sure),
            member(sub(&ds, 3, &[(3, 0)]), (1, 9), Confidence::Sure),
            member(sub(&ds, 1, &[(1, 0)]), (2, 5), Confidence::Sure),
            member(sub(&ds, 2, &[(2, 0)]), (4, 7), Confidence::Sure),
        ]);
        let edges = [(0, 1), (1, 2), (2, 3)];
        let adj = |x: CloneId, y: CloneId| edges.contains(&(x.0.min(y.0), x.0.max(y.0)));
        let reports = detect_fns(&mut c, &adj, &ds, &PipelineParams::default());
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].removed, Some(SubcontigId(3)));
        assert_eq!(reports[0].fragments, vec![FragId(3)]);
        assert!(check_adjacency(&c, &adj, &ds).is_empty());
        let mut clean = contig(vec![member(sub(&ds, 0, &[(0, 0)]), (0, 3), Confidence::Sure)]);
        assert!(detect_fns(&mut clean, &adj, &ds, &PipelineParams::default()).is_empty());
    }

    #[test]
    fn tie_swap_is_not_an_fn() {
        let ds = dataset(&[10, 10, 10]);
        let mut c = contig(vec![
            member(sub(&ds, 0, &[(0, 0)]), (0, 5), Confidence::Sure),
            member(sub(&ds, 2, &[(2, 0)]), (1, 6), Confidence::Sure),
            member(sub(&ds, 1, &[(1, 0)]), (1, 6), Confidence::Sure),
        ]);
        let edges = [(0, 1), (1, 2)];
        let adj = |x: CloneId, y: CloneId| edges.contains(&(x.0.min(y.0), x.0.max(y.0)));
        let reports = detect_fns(&mut c, &adj, &ds, &PipelineParams::default());
        assert!(reports.is_empty());
        let order: Vec<u32> = c.members.iter().map(|m| m.sub.id.0).collect();
        assert_eq!(order, vec![0, 1, 2]);
    }

    #[test]
    fn warp_examples() {
        let ds = dataset(&[95_456]);
        let c = contig(vec![member(sub(&ds, 0, &[(0, 0)]), (0, 1), Confidence::Sure)]);
        assert_eq!(compute_warp(CloneId(0), &[c], &ds).unwrap(), 1.0);
        let mut ds2 = dataset(&[95_456, 95_456]);
        ds2.fragments[1].clone = CloneId(0);
        ds2.clones[0].fragments.push(FragId(1));
        let c2 = contig(vec![member(sub(&ds2, 0, &[(0, 0), (1, 95_456)]), (0, 1), Confidence::Sure)]);
        assert_eq!(compute_warp(CloneId(0), std::slice::from_ref(&c2), &ds2).unwrap(), 2.0);
        assert!(matches!(compute_warp(CloneId(1), &[c2], &ds2), Err(Error::NoPlacedFragments(_))));
    }

    #[test]
    fn residual_fp_flags() {
        let mut ds = dataset(&[1_556_292, 100_000]);
        ds.clones[0].estimated_length = 1_556_292;
        ds.clones[1].estimated_length = 62_500;
        let c = contig(vec![
            member(sub(&ds, 0, &[(0, 0)]), (0, 1), Confidence::Sure),
            member(sub(&ds, 1, &[(1, 0)]), (2, 3), Confidence::Sure),
        ]);
        let (r, _) = detect_residual_fps(&[c], &ds, &PipelineParams::default());
        assert_eq!(r.len(), 2);
        assert!(r[0].long_clone && r[0].warp == 1.0);
        assert!(!r[1].long_clone && (r[1].warp - 1.6).abs() < 1e-12);
    }

    #[test]
    fn unsure_flip_by_evidence() {
        let ds = dataset(&[10, 10, 10, 10]);
        let mut cs = vec![contig(vec![
            member(sub(&ds, 0, &[(0, 0)]), (0, 1), Confidence::Sure),
            member(sub(&ds, 1, &[(1, 0), (2, 5)]), (2, 3), Confidence::Unsure),
            member(sub(&ds, 3, &[(3, 0)]), (4, 5), Confidence::Unsure),
        ])];
        let pairs: Vec<OrientationPair> = [(0, 1), (0, 2), (0, 1)]
            .iter()
            .map(|&(a, b)| OrientationPair { a: FragId(a), b: FragId(b), strand: Strand::Reverse, evidence_count: 1 })
            .collect();
        let all = |_: CloneId, _: CloneId| true;
        let s = orient_unsure(&mut cs, &pairs, &all, &ds);
        assert_eq!(s.flips, 1);
        assert_eq!(s.final_disagreement, 0);
        assert_eq!(cs[0].members[1].orientation, Orientation::Reverse);
        assert_eq!(cs[0].members[1].confidence, Confidence::Evidence);
        assert_eq!(cs[0].members[2].orientation, Orientation::Forward);
        assert_eq!(cs[0].members[2].confidence, Confidence::LowConfidence);
    }

    #[test]
    fn interlocking_evidence_reaches_local_optimum() {
        // Two unsure subcontigs with conflicting pair evidence; compare with all four states.
        let ds = dataset(&[10, 10, 10]);
        let build = || {
            vec![contig(vec![
                member(sub(&ds, 0, &[(0, 0)]), (0, 1), Confidence::Sure),
                member(sub(&ds, 1, &[(1, 0)]), (2, 3), Confidence::Unsure),
                member(sub(&ds, 2, &[(2, 0)]), (4, 5), Confidence::Unsure),
            ])]
        };
        let pairs = vec![
            OrientationPair { a: FragId(0), b: FragId(1), strand: Strand::Reverse, evidence_count: 2 },
            OrientationPair { a: FragId(1), b: FragId(2), strand: Strand::Same, evidence_count: 1 },
            OrientationPair { a: FragId(0), b: FragId(2), strand: Strand::Same, evidence_count: 2 },
        ];
        let all = |_: CloneId, _: CloneId| true;
        let mut cs = build();
        let s = orient_unsure(&mut cs, &pairs, &all, &ds);
        assert!(s.final_disagreement <= s.initial_disagreement);
        let cost = |f1: bool, f2: bool| {
            let o = |f: bool| if f { Orientation::Reverse } else { Orientation::Forward };
            let os = [Orientation::Forward, o(f1), o(f2)];
            pairs
                .iter()
                .filter(|p| os[p.a.index()].relative_to(os[p.b.index()]) != p.strand)
                .map(|p| p.evidence_count as u64)
                .sum::<u64>()
        };
        let f1 = cs[0].members[1].orientation == Orientation::Reverse;
        let f2 = cs[0].members[2].orientation == Orientation::Reverse;
        assert_eq!(cost(f1, f2), s.final_disagreement);
        assert!(cost(!f1, f2) >= s.final_disagreement && cost(f1, !f2) >= s.final_disagreement);
    }

    #[test]
    fn consensus_examples() {
        let mut ds = dataset(&[8, 6]);
        ds.fragments[0].sequence = Some("ACGTACGT".into());
        ds.fragments[1].sequence = Some("ACGTTT".into());
        let single = contig(vec![member(sub(&ds, 0, &[(0, 0)]), (0, 1), Confidence::Sure)]);
        assert_eq!(consensus(&single, &|_| true, &ds).unwrap(), "ACGTACGT");
        let two = contig(vec![member(sub(&ds, 0, &[(0, 0), (1, 4)]), (0, 1), Confidence::Sure)]);
        let s = consensus(&two, &|_| true, &ds).unwrap();
        assert_eq!(s.len(), 8 + 6 - 4);
        assert_eq!(s, "ACGTACGTTT");
        let mut rev = two.clone();
        rev.members[0].orientation = Orientation::Reverse;
        assert_eq!(consensus(&rev, &|_| true, &ds).unwrap(), "AAACGTACGT");
    }

    #[test]
    fn extra_info_flips_unsure_subcontig() {
        // Clone 0 has three fragments; the one declared as an end sits in the middle
        // until the unsure subcontig holding fragments 1 and 2 is flipped.
        let mut ds = dataset(&[10, 10, 10]);
        for f in &mut ds.fragments {
            f.clone = CloneId(0);
        }
        ds.clones[0].fragments = vec![FragId(0), FragId(1), FragId(2)];
        ds.fragments[1].end_marker = Some(EndMarker::Right);
        let mut c = contig(vec![
            member(sub(&ds, 0, &[(0, 0)]), (0, 1), Confidence::Sure),
            member(sub(&ds, 1, &[(1, 0), (2, 10)]), (2, 3), Confidence::Unsure),
        ]);
        let log = apply_extra_info(&mut c, &|_, _| true, &ds, &PipelineParams::default());
        assert_eq!(c.members[1].orientation, Orientation::Reverse);
        assert_eq!(c.members[1].confidence, Confidence::ExtraInfo);
        assert_eq!(log.len(), 1);
        let mut none = contig(vec![member(sub(&ds, 0, &[(0, 0)]), (0, 1), Confidence::Unsure)]);
        let before = none.clone();
        let mut plain = dataset(&[10]);
        plain.fragments[0].end_marker = None;
        apply_extra_info(&mut none, &|_, _| true, &plain, &PipelineParams::default());
        assert_eq!(none, before);
    }

    #[test]
    fn layout_round_trip() {
        let ds = dataset(&[10, 10]);
        let mut c = contig(vec![
            member(sub(&ds, 0, &[(0, 0)]), (0, 1), Confidence::Sure),
            member(sub(&ds, 1, &[(1, 0)]), (2, 3), Confidence::LowConfidence),
        ]);
        c.chromosome = Chromosome::Assigned("17".into());
        let text = write_layout(&[c], &ds);
        assert_eq!(
            text,
            "contig\t0\t0\t17\t120\n0\tF\t0\n1\tU\t110\nC0~1\tC0\t0\tF\t0\nC1~1\tC1\t110\tF\t1\n"
        );
        let (h, rows) = parse_layout(&text).unwrap();
        assert_eq!(h[0].length, 120);
        assert_eq!(rows[1].start, 110);
    }
}
