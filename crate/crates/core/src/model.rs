//! Domain types shared by every pipeline stage.
//!
//! Coordinates are integer base pairs. A fragment placed at `start` with
//! length `len` covers the half-open range `[start, start + len)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FragId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CloneId(pub u32);

impl FragId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl CloneId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    One,
    Two,
    Three,
}

impl Phase {
    pub fn from_number(n: u8) -> Option<Phase> {
        match n {
            1 => Some(Phase::One),
            2 => Some(Phase::Two),
            3 => Some(Phase::Three),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Phase::One => 1,
            Phase::Two => 2,
            Phase::Three => 3,
        }
    }

    pub fn is_finished(self) -> bool {
        self == Phase::Three
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Chromosome {
    Assigned(String),
    Unknown,
}

impl Chromosome {
    pub fn parse(token: &str) -> Chromosome {
        if token == "U" {
            Chromosome::Unknown
        } else {
            Chromosome::Assigned(token.to_string())
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            Chromosome::Assigned(s) => Some(s),
            Chromosome::Unknown => None,
        }
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chromosome::Assigned(s) => f.write_str(s),
            Chromosome::Unknown => f.write_str("U"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EndMarker {
    Left,
    Right,
    Unknown,
}

impl EndMarker {
    pub fn as_str(self) -> &'static str {
        match self {
            EndMarker::Left => "left",
            EndMarker::Right => "right",
            EndMarker::Unknown => "unknown",
        }
    }
}

impl FromStr for EndMarker {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "left" | "L" => Ok(EndMarker::Left),
            "right" | "R" => Ok(EndMarker::Right),
            "unknown" | "?" => Ok(EndMarker::Unknown),
            other => Err(format!("bad end marker {other:?}")),
        }
    }
}

/// Relative orientation of two fragments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strand {
    Same,
    Reverse,
}

impl Strand {
    pub fn compose(self, other: Strand) -> Strand {
        if self == other {
            Strand::Same
        } else {
            Strand::Reverse
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strand::Same => "Same",
            Strand::Reverse => "Reverse",
        }
    }
}

impl FromStr for Strand {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "Same" | "same" | "+" => Ok(Strand::Same),
            "Reverse" | "reverse" | "-" => Ok(Strand::Reverse),
            other => Err(format!("bad strand {other:?}")),
        }
    }
}

/// Orientation of a placed fragment or subcontig on a layout axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orientation {
    Forward,
    Reverse,
}

impl Orientation {
    pub fn flip(self) -> Orientation {
        match self {
            Orientation::Forward => Orientation::Reverse,
            Orientation::Reverse => Orientation::Forward,
        }
    }

    pub fn apply(self, strand: Strand) -> Orientation {
        match strand {
            Strand::Same => self,
            Strand::Reverse => self.flip(),
        }
    }

    /// Strand relating two absolute orientations.
    pub fn relative_to(self, other: Orientation) -> Strand {
        if self == other {
            Strand::Same
        } else {
            Strand::Reverse
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Forward => "F",
            Orientation::Reverse => "R",
        }
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "F" | "Forward" | "+" => Ok(Orientation::Forward),
            "R" | "Reverse" | "-" => Ok(Orientation::Reverse),
            other => Err(format!("bad orientation {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub id: FragId,
    pub name: String,
    pub clone: CloneId,
    /// Coordinates of the fragment inside its clone's sequence record (1-based, inclusive).
    pub record_start: i64,
    pub record_end: i64,
    pub length: i64,
    pub declared_order: Option<u32>,
    pub end_marker: Option<EndMarker>,
    pub sequence: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clone {
    pub id: CloneId,
    pub name: String,
    pub estimated_length: i64,
    pub phase: Phase,
    pub chromosome: Chromosome,
    pub fragments: Vec<FragId>,
}

/// Clones and fragments with name lookup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub clones: Vec<Clone>,
    pub fragments: Vec<Fragment>,
    frag_names: HashMap<String, FragId>,
    clone_names: HashMap<String, CloneId>,
}

impl Dataset {
    pub fn new(clones: Vec<Clone>, fragments: Vec<Fragment>) -> Dataset {
        let frag_names = fragments.iter().map(|f| (f.name.clone(), f.id)).collect();
        let clone_names = clones.iter().map(|c| (c.name.clone(), c.id)).collect();
        Dataset {
            clones,
            fragments,
            frag_names,
            clone_names,
        }
    }

    pub fn frag_id(&self, name: &str) -> Option<FragId> {
        self.frag_names.get(name).copied()
    }

    pub fn clone_id(&self, name: &str) -> Option<CloneId> {
        self.clone_names.get(name).copied()
    }

    pub fn frag(&self, id: FragId) -> &Fragment {
        &self.fragments[id.index()]
    }

    pub fn clone(&self, id: CloneId) -> &Clone {
        &self.clones[id.index()]
    }

    pub fn len(&self, id: FragId) -> i64 {
        self.fragments[id.index()].length
    }

    pub fn clone_of(&self, id: FragId) -> CloneId {
        self.fragments[id.index()].clone
    }

    pub fn phase_of(&self, id: FragId) -> Phase {
        self.clones[self.clone_of(id).index()].phase
    }

    pub fn contains(&self, id: FragId) -> bool {
        id.index() < self.fragments.len()
    }

    pub fn lengths(&self) -> Vec<i64> {
        self.fragments.iter().map(|f| f.length).collect()
    }

    pub fn has_sequences(&self) -> bool {
        self.fragments.iter().any(|f| f.sequence.is_some())
    }

    /// End-allowed-error of a fragment: fixed for finished clones, proportional (capped) for drafts.
    pub fn end_tolerance(&self, id: FragId, params: &PipelineParams) -> i64 {
        end_tolerance(self.len(id), self.phase_of(id), params)
    }
}

pub fn end_tolerance(length: i64, phase: Phase, params: &PipelineParams) -> i64 {
    if phase.is_finished() {
        params.end_error_finished
    } else {
        let frac = (length as f64 * params.end_error_draft_fraction).floor() as i64;
        frac.min(params.end_error_draft_cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OverlapKind {
    Dovetail,
    Containment,
    NtPair,
}

impl OverlapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OverlapKind::Dovetail => "Dovetail",
            OverlapKind::Containment => "Containment",
            OverlapKind::NtPair => "NtPair",
        }
    }
}

/// A fragment placed on a layout axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Placement {
    pub start: i64,
    pub orientation: Orientation,
}

impl Placement {
    pub fn new(start: i64, orientation: Orientation) -> Placement {
        Placement { start, orientation }
    }
}

/// Length of the intersection of `[a, a + la)` and `[b, b + lb)`; negative when disjoint.
pub fn intersection(a: i64, la: i64, b: i64, lb: i64) -> i64 {
    (a + la).min(b + lb) - a.max(b)
}

/// Offset of the frame fragment in the placed fragment's frame.
///
/// `offset` is the leftmost coordinate of the placed fragment (length `len_placed`)
/// in the forward frame of the frame fragment (length `len_frame`).
pub fn reframe(offset: i64, strand: Strand, len_frame: i64, len_placed: i64) -> i64 {
    match strand {
        Strand::Same => -offset,
        Strand::Reverse => offset + len_placed - len_frame,
    }
}

/// Place fragment `b` given fragment `a`'s placement and `b`'s offset/strand in `a`'s frame.
pub fn place_from(a: Placement, len_a: i64, offset: i64, strand: Strand, len_b: i64) -> Placement {
    match a.orientation {
        Orientation::Forward => Placement::new(a.start + offset, a.orientation.apply(strand)),
        Orientation::Reverse => Placement::new(
            a.start + len_a - offset - len_b,
            a.orientation.apply(strand),
        ),
    }
}

/// A classified fragment-pair overlap.
///
/// `offset` is the leftmost coordinate of `b` in the forward frame of `a`;
/// `strand` is `b`'s orientation relative to `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidOverlap {
    pub a: FragId,
    pub b: FragId,
    pub kind: OverlapKind,
    pub offset: i64,
    pub strand: Strand,
    pub identity: f64,
    pub overlap_length: i64,
    /// For containments, the fragment lying inside the other.
    pub contained: Option<FragId>,
}

impl ValidOverlap {
    pub fn other(&self, f: FragId) -> FragId {
        if f == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn involves(&self, f: FragId) -> bool {
        self.a == f || self.b == f
    }

    pub fn pair(&self) -> (FragId, FragId) {
        (self.a.min(self.b), self.a.max(self.b))
    }

    /// Offset and strand of `other(from)` expressed in `from`'s frame.
    pub fn offset_from(&self, from: FragId, len_a: i64, len_b: i64) -> (i64, Strand) {
        if from == self.a {
            (self.offset, self.strand)
        } else {
            (reframe(self.offset, self.strand, len_a, len_b), self.strand)
        }
    }

    /// Placement implied for `other(from)` when `from` sits at `at`.
    pub fn place_other(&self, from: FragId, at: Placement, lengths: &[i64]) -> Placement {
        let (la, lb) = (lengths[self.a.index()], lengths[self.b.index()]);
        let (off, strand) = self.offset_from(from, la, lb);
        let (len_from, len_to) = if from == self.a { (la, lb) } else { (lb, la) };
        place_from(at, len_from, off, strand, len_to)
    }
}

/// Re-express an oriented overlap so that `a < b`, converting the offset into `a`'s frame.
pub fn canonicalize_overlap(ov: ValidOverlap, ds: &Dataset) -> Result<ValidOverlap> {
    for f in [ov.a, ov.b] {
        if !ds.contains(f) {
            return Err(Error::UnknownFragment(format!("#{}", f.0)));
        }
    }
    if ov.a <= ov.b {
        return Ok(ov);
    }
    let (len_frame, len_placed) = (ds.len(ov.a), ds.len(ov.b));
    Ok(ValidOverlap {
        a: ov.b,
        b: ov.a,
        offset: reframe(ov.offset, ov.strand, len_frame, len_placed),
        ..ov
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientationPair {
    pub a: FragId,
    pub b: FragId,
    pub strand: Strand,
    pub evidence_count: u32,
}

/// Every threshold used by the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub end_error_finished: i64,
    pub end_error_draft_fraction: f64,
    pub end_error_draft_cap: i64,
    pub min_identity: f64,
    /// Implied overlaps at or below this length impose no consistency constraint.
    pub implied_overlap_threshold: i64,
    /// Maximum offset disagreement between two pieces of evidence for the same placement.
    pub offset_tolerance: i64,
    pub warp_flag_threshold: f64,
    pub long_bac_length_flag: i64,
    /// Clones shorter than this are sidelined rather than removed during interval repair.
    pub short_clone_floor: i64,
    pub gap_spacer: i64,
    pub random_seed: u64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            end_error_finished: 350,
            end_error_draft_fraction: 0.10,
            end_error_draft_cap: 1000,
            min_identity: 0.97,
            implied_overlap_threshold: 1000,
            offset_tolerance: 300,
            warp_flag_threshold: 1.5,
            long_bac_length_flag: 250_000,
            short_clone_floor: 10_000,
            gap_spacer: 100,
            random_seed: 0,
        }
    }
}

impl PipelineParams {
    pub const KEYS: &'static [&'static str] = &[
        "end_error_finished",
        "end_error_draft_fraction",
        "end_error_draft_cap",
        "min_identity",
        "implied_overlap_threshold",
        "offset_tolerance",
        "warp_flag_threshold",
        "long_bac_length_flag",
        "short_clone_floor",
        "gap_spacer",
        "random_seed",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |msg: String| Error::InvalidParam {
            key: key.to_string(),
            msg,
        };
        fn int(v: &str) -> std::result::Result<i64, String> {
            v.parse::<i64>().map_err(|e| e.to_string())
        }
        fn float(v: &str) -> std::result::Result<f64, String> {
            v.parse::<f64>().map_err(|e| e.to_string())
        }
        match key {
            "end_error_finished" => self.end_error_finished = int(value).map_err(bad)?,
            "end_error_draft_fraction" => self.end_error_draft_fraction = float(value).map_err(bad)?,
            "end_error_draft_cap" => self.end_error_draft_cap = int(value).map_err(bad)?,
            "min_identity" => self.min_identity = float(value).map_err(bad)?,
            "implied_overlap_threshold" => {
                self.implied_overlap_threshold = int(value).map_err(bad)?
            }
            "offset_tolerance" => self.offset_tolerance = int(value).map_err(bad)?,
            "warp_flag_threshold" => self.warp_flag_threshold = float(value).map_err(bad)?,
            "long_bac_length_flag" => self.long_bac_length_flag = int(value).map_err(bad)?,
            "short_clone_floor" => self.short_clone_floor = int(value).map_err(bad)?,
            "gap_spacer" => self.gap_spacer = int(value).map_err(bad)?,
            "random_seed" => {
                self.random_seed = value.parse::<u64>().map_err(|e| bad(e.to_string()))?
            }
            _ => return Err(bad("unknown key".to_string())),
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParam {
                    key: key.to_string(),
                    msg: msg.to_string(),
                })
            }
        };
        check(self.end_error_finished > 0, "end_error_finished", "must be positive")?;
        check(
            self.end_error_draft_fraction > 0.0,
            "end_error_draft_fraction",
            "must be positive",
        )?;
        check(self.end_error_draft_cap > 0, "end_error_draft_cap", "must be positive")?;
        check(
            self.min_identity > 0.0 && self.min_identity <= 1.0,
            "min_identity",
            "must lie in (0, 1]",
        )?;
        check(
            self.implied_overlap_threshold > 0,
            "implied_overlap_threshold",
            "must be positive",
        )?;
        check(self.offset_tolerance > 0, "offset_tolerance", "must be positive")?;
        check(self.warp_flag_threshold > 0.0, "warp_flag_threshold", "must be positive")?;
        check(self.long_bac_length_flag > 0, "long_bac_length_flag", "must be positive")?;
        check(self.short_clone_floor > 0, "short_clone_floor", "must be positive")?;
        check(self.gap_spacer > 0, "gap_spacer", "must be positive")
    }

    /// Parse flat `key=value` text; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<PipelineParams> {
        let mut params = PipelineParams::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got {line:?}")))?;
            params.set(k.trim(), v.trim())?;
        }
        Ok(params)
    }

    pub fn to_text(&self) -> String {
        format!(
            "end_error_finished={}\nend_error_draft_fraction={}\nend_error_draft_cap={}\n\
             min_identity={}\nimplied_overlap_threshold={}\noffset_tolerance={}\n\
             warp_flag_threshold={}\nlong_bac_length_flag={}\nshort_clone_floor={}\n\
             gap_spacer={}\nrandom_seed={}\n",
            self.end_error_finished,
            self.end_error_draft_fraction,
            self.end_error_draft_cap,
            self.min_identity,
            self.implied_overlap_threshold,
            self.offset_tolerance,
            self.warp_flag_threshold,
            self.long_bac_length_flag,
            self.short_clone_floor,
            self.gap_spacer,
            self.random_seed
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let mk = |i: u32, len: i64| Fragment {
            id: FragId(i),
            name: format!("f{i}"),
            clone: CloneId(i),
            record_start: 1,
            record_end: len,
            length: len,
            declared_order: None,
            end_marker: None,
            sequence: None,
        };
        let frags = vec![mk(0, 10_000), mk(1, 4_000)];
        let clones = (0..2)
            .map(|i| Clone {
                id: CloneId(i),
                name: format!("c{i}"),
                estimated_length: 10_000,
                phase: Phase::Three,
                chromosome: Chromosome::Unknown,
                fragments: vec![FragId(i)],
            })
            .collect();
        Dataset::new(clones, frags)
    }

    fn ov(a: u32, b: u32, offset: i64, strand: Strand) -> ValidOverlap {
        ValidOverlap {
            a: FragId(a),
            b: FragId(b),
            kind: OverlapKind::Dovetail,
            offset,
            strand,
            identity: 0.99,
            overlap_length: 0,
            contained: None,
        }
    }

    /// Genome-frame placement of both fragments, used as an independent check of the frame algebra.
    /// Returns the leftmost coordinate of `placed` in the forward frame of `frame`.
    fn brute_offset(frame: (i64, i64, Orientation), placed: (i64, i64, Orientation)) -> (i64, Strand) {
        let (fs, fl, fo) = frame;
        let (ps, pl, po) = placed;
        // Map each base of `placed` into frame coordinates and take the minimum.
        let to_frame = |g: i64| match fo {
            Orientation::Forward => g - fs,
            Orientation::Reverse => fs + fl - 1 - g,
        };
        let lo = (ps..ps + pl).map(to_frame).min().unwrap();
        (lo, fo.relative_to(po))
    }

    #[test]
    fn same_strand_swap_is_sign_flip() {
        let ds = toy();
        let c = canonicalize_overlap(ov(1, 0, -50, Strand::Same), &ds).unwrap();
        assert_eq!((c.a, c.b, c.offset, c.strand), (FragId(0), FragId(1), 50, Strand::Same));
        let again = canonicalize_overlap(c.clone(), &ds).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn reverse_swap_matches_coordinate_simulation() {
        let ds = toy();
        // f0 (10 kb) forward at genome 1000, f1 (4 kb) reverse at genome 9000.
        let g0 = (1000, 10_000, Orientation::Forward);
        let g1 = (9000, 4_000, Orientation::Reverse);
        let (o_10, s_10) = brute_offset(g1, g0);
        let (o_01, s_01) = brute_offset(g0, g1);
        let c = canonicalize_overlap(ov(1, 0, o_10, s_10), &ds).unwrap();
        assert_eq!((c.offset, c.strand), (o_01, s_01));
        assert_eq!(o_01, 8000);
        assert_eq!(o_10, 2000);
    }

    #[test]
    fn unknown_fragment_rejected() {
        let ds = toy();
        assert!(canonicalize_overlap(ov(0, 7, 0, Strand::Same), &ds).is_err());
    }

    #[test]
    fn place_other_round_trip() {
        let lens = vec![10_000, 4_000];
        let o = ov(0, 1, 8000, Strand::Reverse);
        for orient in [Orientation::Forward, Orientation::Reverse] {
            let a = Placement::new(500, orient);
            let b = o.place_other(FragId(0), a, &lens);
            assert_eq!(o.place_other(FragId(1), b, &lens), a);
        }
    }

    #[test]
    fn tolerances() {
        let p = PipelineParams::default();
        assert_eq!(end_tolerance(100_000, Phase::Three, &p), 350);
        assert_eq!(end_tolerance(5_000, Phase::One, &p), 500);
        assert_eq!(end_tolerance(50_000, Phase::Two, &p), 1000);
    }

    #[test]
    fn params_text_round_trip() {
        let mut p = PipelineParams::default();
        p.set("offset_tolerance", "250").unwrap();
        p.set("random_seed", "42").unwrap();
        let q = PipelineParams::from_text(&p.to_text()).unwrap();
        assert_eq!(p, q);
        assert!(p.clone().set("min_identity", "1.5").is_err());
        assert!(p.clone().set("bogus", "1").is_err());
    }

    proptest::proptest! {
        #[test]
        fn canonicalize_is_frame_consistent(
            s0 in -50_000i64..50_000, s1 in -50_000i64..50_000,
            r0 in proptest::bool::ANY, r1 in proptest::bool::ANY,
        ) {
            let ds = toy();
            let o = |r: bool| if r { Orientation::Reverse } else { Orientation::Forward };
            let g0 = (s0, 10_000, o(r0));
            let g1 = (s1, 4_000, o(r1));
            let (o_10, st_10) = brute_offset(g1, g0);
            let (o_01, st_01) = brute_offset(g0, g1);
            let c = canonicalize_overlap(ov(1, 0, o_10, st_10), &ds).unwrap();
            proptest::prop_assert_eq!((c.offset, c.strand), (o_01, st_01));
            // Back to the B frame reproduces the input exactly.
            proptest::prop_assert_eq!(reframe(c.offset, c.strand, 10_000, 4_000), o_10);
        }
    }
}
