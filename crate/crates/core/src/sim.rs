//! Synthetic genomes, clones, fragments and overlaps with planted noise and a
//! full ground truth.
//!
//! Everything is coordinate level: clones are intervals on chromosome lines,
//! fragments tile clones, and true overlaps come straight from the geometry.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::report::AssemblyView;
use crate::scaffold::LayoutRow;
use crate::ingest::{write_alignments, write_clone_table, write_nt_pairs, write_orientation_pairs, write_sequences, Bundle, RawAlignment};
use crate::model::{
    intersection, Chromosome, Clone, CloneId, Dataset, EndMarker, FragId, Fragment, Orientation,
    OrientationPair, OverlapKind, Phase, Strand, ValidOverlap,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub genome_length: i64,
    pub n_chromosomes: u32,
    pub clone_length_mean: i64,
    pub clone_length_spread: i64,
    pub coverage: f64,
    /// Probabilities of phase 1, 2 and 3.
    pub phase_mix: [f64; 3],
    pub fragments_mean: u32,
    pub fragments_spread: u32,
    pub gap_min: i64,
    pub gap_max: i64,
    pub fp_rate: f64,
    /// Share of planted FPs that are consistent (end-of-contig or short repeat).
    pub fp_consistent_share: f64,
    pub fn_rate: f64,
    /// Drop only overlaps that are the sole overlap between their two clones.
    pub fn_critical_only: bool,
    pub chimera_rate: f64,
    pub mislabel_rate: f64,
    pub orientation_pair_rate: f64,
    pub end_marker_rate: f64,
    /// Overlap length threshold used for planting inconsistent FPs.
    pub implied_overlap_threshold: i64,
    pub with_sequences: bool,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            genome_length: 10_000_000,
            n_chromosomes: 2,
            clone_length_mean: 150_000,
            clone_length_spread: 20_000,
            coverage: 4.0,
            phase_mix: [0.5, 0.1, 0.4],
            fragments_mean: 10,
            fragments_spread: 4,
            gap_min: 0,
            gap_max: 200,
            fp_rate: 0.0,
            fp_consistent_share: 0.5,
            fn_rate: 0.0,
            fn_critical_only: false,
            chimera_rate: 0.0,
            mislabel_rate: 0.0,
            orientation_pair_rate: 0.5,
            end_marker_rate: 0.2,
            implied_overlap_threshold: 1_000,
            with_sequences: false,
            seed: 1,
        }
    }
}

fn bad(key: &str, msg: impl Into<String>) -> Error {
    Error::InvalidParam {
        key: key.into(),
        msg: msg.into(),
    }
}

impl SimParams {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn p<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim().parse().map_err(|_| bad(key, format!("cannot parse {v:?}")))
        }
        match key {
            "genome_length" => self.genome_length = p(key, value)?,
            "n_chromosomes" => self.n_chromosomes = p(key, value)?,
            "clone_length_mean" => self.clone_length_mean = p(key, value)?,
            "clone_length_spread" => self.clone_length_spread = p(key, value)?,
            "coverage" => self.coverage = p(key, value)?,
            "phase_mix" => {
                let parts: Vec<f64> = value.split(',').map(|v| p(key, v)).collect::<Result<_>>()?;
                self.phase_mix = parts
                    .try_into()
                    .map_err(|_| bad(key, "expected three comma-separated values"))?;
            }
            "fragments_mean" => self.fragments_mean = p(key, value)?,
            "fragments_spread" => self.fragments_spread = p(key, value)?,
            "gap_min" => self.gap_min = p(key, value)?,
            "gap_max" => self.gap_max = p(key, value)?,
            "fp_rate" => self.fp_rate = p(key, value)?,
            "fp_consistent_share" => self.fp_consistent_share = p(key, value)?,
            "fn_rate" => self.fn_rate = p(key, value)?,
            "fn_critical_only" => self.fn_critical_only = p(key, value)?,
            "chimera_rate" => self.chimera_rate = p(key, value)?,
            "mislabel_rate" => self.mislabel_rate = p(key, value)?,
            "orientation_pair_rate" => self.orientation_pair_rate = p(key, value)?,
            "end_marker_rate" => self.end_marker_rate = p(key, value)?,
            "implied_overlap_threshold" => self.implied_overlap_threshold = p(key, value)?,
            "with_sequences" => self.with_sequences = p(key, value)?,
            "seed" => self.seed = p(key, value)?,
            _ => return Err(bad(key, "unknown simulator parameter")),
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<SimParams> {
        let mut p = SimParams::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected key=value"))?;
            p.set(k.trim(), v.trim())?;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn to_text(&self) -> String {
        let m = self.phase_mix;
        format!(
            "genome_length={}\nn_chromosomes={}\nclone_length_mean={}\nclone_length_spread={}\ncoverage={}\n\
             phase_mix={},{},{}\nfragments_mean={}\nfragments_spread={}\ngap_min={}\ngap_max={}\nfp_rate={}\n\
             fp_consistent_share={}\nfn_rate={}\nfn_critical_only={}\nchimera_rate={}\nmislabel_rate={}\n\
             orientation_pair_rate={}\nend_marker_rate={}\nimplied_overlap_threshold={}\nwith_sequences={}\nseed={}\n",
            self.genome_length,
            self.n_chromosomes,
            self.clone_length_mean,
            self.clone_length_spread,
            self.coverage,
            m[0],
            m[1],
            m[2],
            self.fragments_mean,
            self.fragments_spread,
            self.gap_min,
            self.gap_max,
            self.fp_rate,
            self.fp_consistent_share,
            self.fn_rate,
            self.fn_critical_only,
            self.chimera_rate,
            self.mislabel_rate,
            self.orientation_pair_rate,
            self.end_marker_rate,
            self.implied_overlap_threshold,
            self.with_sequences,
            self.seed
        )
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("fp_rate", self.fp_rate),
            ("fp_consistent_share", self.fp_consistent_share),
            ("fn_rate", self.fn_rate),
            ("chimera_rate", self.chimera_rate),
            ("mislabel_rate", self.mislabel_rate),
            ("orientation_pair_rate", self.orientation_pair_rate),
            ("end_marker_rate", self.end_marker_rate),
        ];
        for (k, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(bad(k, format!("{r} is not in [0, 1]")));
            }
        }
        if !(self.coverage > 0.0) {
            return Err(bad("coverage", "must be positive"));
        }
        if self.n_chromosomes == 0 {
            return Err(bad("n_chromosomes", "must be at least 1"));
        }
        if self.phase_mix.iter().any(|&x| x < 0.0) || self.phase_mix.iter().sum::<f64>() <= 0.0 {
            return Err(bad("phase_mix", "weights must be non-negative with a positive sum"));
        }
        if self.clone_length_spread < 0 || self.clone_length_mean - self.clone_length_spread < 2_000 {
            return Err(bad("clone_length_mean", "shortest clone must be at least 2000 bp"));
        }
        if self.clone_length_mean + self.clone_length_spread > self.chromosome_length() {
            return Err(bad(
                "clone_length_mean",
                format!(
                    "clones up to {} bp do not fit chromosomes of {} bp",
                    self.clone_length_mean + self.clone_length_spread,
                    self.chromosome_length()
                ),
            ));
        }
        if self.gap_min < 0 || self.gap_max < self.gap_min {
            return Err(bad("gap_max", "need 0 <= gap_min <= gap_max"));
        }
        if self.fragments_mean == 0 {
            return Err(bad("fragments_mean", "must be at least 1"));
        }
        if self.implied_overlap_threshold <= 0 {
            return Err(bad("implied_overlap_threshold", "must be positive"));
        }
        Ok(())
    }

    pub fn chromosome_length(&self) -> i64 {
        self.genome_length / self.n_chromosomes.max(1) as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FpClass {
    Inconsistent,
    ConsistentEnd,
    ConsistentRepeat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OverlapLabel {
    True,
    RepeatInduced(FpClass),
}

impl OverlapLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            OverlapLabel::True => "true",
            OverlapLabel::RepeatInduced(FpClass::Inconsistent) => "inconsistent",
            OverlapLabel::RepeatInduced(FpClass::ConsistentEnd) => "consistent_end",
            OverlapLabel::RepeatInduced(FpClass::ConsistentRepeat) => "consistent_repeat",
        }
    }

    fn parse(s: &str) -> Option<OverlapLabel> {
        Some(match s {
            "true" => OverlapLabel::True,
            "inconsistent" => OverlapLabel::RepeatInduced(FpClass::Inconsistent),
            "consistent_end" => OverlapLabel::RepeatInduced(FpClass::ConsistentEnd),
            "consistent_repeat" => OverlapLabel::RepeatInduced(FpClass::ConsistentRepeat),
            _ => return None,
        })
    }

    pub fn is_repeat_induced(self) -> bool {
        matches!(self, OverlapLabel::RepeatInduced(_))
    }
}

/// One contiguous source interval of a clone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Piece {
    pub chromosome: u32,
    pub start: i64,
    pub end: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloneTruth {
    pub name: String,
    pub chromosome: u32,
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragTruth {
    pub name: String,
    pub clone: String,
    pub chromosome: u32,
    pub start: i64,
    pub length: i64,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledOverlap {
    pub a: String,
    pub b: String,
    pub label: OverlapLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundTruth {
    pub clones: Vec<CloneTruth>,
    pub fragments: Vec<FragTruth>,
    pub overlaps: Vec<LabeledOverlap>,
    pub dropped: Vec<(String, String)>,
    pub chimeras: Vec<String>,
    /// (clone, true chromosome, given label)
    pub mislabels: Vec<(String, String, String)>,
}

const TRUTH_HEADER: &str = "#barnacle-truth v1";

pub const TRUTH: &str = "truth.txt";
pub const SIM_PARAMS: &str = "sim_params.txt";

impl GroundTruth {
    pub fn to_text(&self) -> String {
        let mut out = String::from(TRUTH_HEADER);
        out.push('\n');
        for c in &self.clones {
            for p in &c.pieces {
                let _ = writeln!(out, "clone\t{}\t{}\t{}\t{}", c.name, p.chromosome, p.start, p.end);
            }
        }
        for f in &self.fragments {
            let _ = writeln!(
                out,
                "frag\t{}\t{}\t{}\t{}\t{}\t{}",
                f.name,
                f.clone,
                f.chromosome,
                f.start,
                f.length,
                f.orientation.as_str()
            );
        }
        for o in &self.overlaps {
            let _ = writeln!(out, "overlap\t{}\t{}\t{}", o.a, o.b, o.label.as_str());
        }
        for (a, b) in &self.dropped {
            let _ = writeln!(out, "dropped\t{a}\t{b}");
        }
        for c in &self.chimeras {
            let _ = writeln!(out, "chimera\t{c}");
        }
        for (c, t, g) in &self.mislabels {
            let _ = writeln!(out, "mislabel\t{c}\t{t}\t{g}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<GroundTruth> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == TRUTH_HEADER => {}
            _ => return Err(Error::parse(1, format!("expected {TRUTH_HEADER:?}"))),
        }
        let mut t = GroundTruth::default();
        let mut clone_at: HashMap<String, usize> = HashMap::new();
        for (i, line) in lines {
            let n = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let tok: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| -> Result<i64> { s.parse().map_err(|_| Error::parse(n, format!("bad number {s:?}"))) };
            match tok.as_slice() {
                ["clone", name, chr, s, e] => {
                    let piece = Piece {
                        chromosome: num(chr)? as u32,
                        start: num(s)?,
                        end: num(e)?,
                    };
                    match clone_at.get(*name) {
                        Some(&k) => t.clones[k].pieces.push(piece),
                        None => {
                            clone_at.insert(name.to_string(), t.clones.len());
                            t.clones.push(CloneTruth {
                                name: name.to_string(),
                                chromosome: piece.chromosome,
                                pieces: vec![piece],
                            });
                        }
                    }
                }
                ["frag", name, clone, chr, s, len, o] => t.fragments.push(FragTruth {
                    name: name.to_string(),
                    clone: clone.to_string(),
                    chromosome: num(chr)? as u32,
                    start: num(s)?,
                    length: num(len)?,
                    orientation: o.parse().map_err(|_| Error::parse(n, "bad orientation"))?,
                }),
                ["overlap", a, b, label] => t.overlaps.push(LabeledOverlap {
                    a: a.to_string(),
                    b: b.to_string(),
                    label: OverlapLabel::parse(label).ok_or_else(|| Error::parse(n, format!("bad label {label:?}")))?,
                }),
                ["dropped", a, b] => t.dropped.push((a.to_string(), b.to_string())),
                ["chimera", c] => t.chimeras.push(c.to_string()),
                ["mislabel", c, tr, g] => t.mislabels.push((c.to_string(), tr.to_string(), g.to_string())),
                _ => return Err(Error::parse(n, "unrecognised truth row")),
            }
        }
        Ok(t)
    }

    pub fn fragment(&self, name: &str) -> Option<&FragTruth> {
        self.fragments.iter().find(|f| f.name == name)
    }

    /// Labels keyed by the unordered fragment-name pair.
    pub fn labels(&self) -> HashMap<(String, String), OverlapLabel> {
        self.overlaps
            .iter()
            .map(|o| (name_pair(&o.a, &o.b), o.label))
            .collect()
    }
}

pub fn name_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub dataset: Dataset,
    pub alignments: Vec<RawAlignment>,
    pub nt_pairs: Vec<ValidOverlap>,
    pub orientation_pairs: Vec<OrientationPair>,
    pub truth: GroundTruth,
}

impl Simulation {
    pub fn bundle(&self) -> Bundle {
        let ds = &self.dataset;
        Bundle {
            clones: write_clone_table(ds),
            alignments: write_alignments(&self.alignments, ds),
            nt_pairs: write_nt_pairs(&self.nt_pairs, ds),
            orientation_pairs: write_orientation_pairs(&self.orientation_pairs, ds),
            sequences: ds.has_sequences().then(|| write_sequences(ds)),
        }
    }
}

/// Genome placement of one simulated fragment.
#[derive(Debug, Clone, Copy)]
struct Site {
    chrom: u32,
    start: i64,
    len: i64,
    orient: Orientation,
}

impl Site {
    fn end(&self) -> i64 {
        self.start + self.len
    }
}

/// Alignment of `a` and `b` over their shared genome stretch `[x, y)`.
fn align(a: FragId, sa: &Site, b: FragId, sb: &Site, x: i64, y: i64, identity: f64) -> RawAlignment {
    let local = |s: &Site| match s.orient {
        Orientation::Forward => (x - s.start + 1, y - s.start),
        Orientation::Reverse => (s.end() - y + 1, s.end() - x),
    };
    let (a_start, a_end) = local(sa);
    let (b_start, b_end) = local(sb);
    RawAlignment {
        a,
        a_start,
        a_end,
        b,
        b_start,
        b_end,
        strand: sa.orient.relative_to(sb.orient),
        identity,
    }
}

/// Cut a clone of length `len` into fragments; returns clone-local (start, length).
fn tile(rng: &mut ChaCha8Rng, len: i64, phase: Phase, p: &SimParams, min_pieces: usize) -> Vec<(i64, i64)> {
    if phase == Phase::Three && min_pieces <= 1 {
        return vec![(0, len)];
    }
    let lo = p.fragments_mean.saturating_sub(p.fragments_spread).max(1);
    let hi = p.fragments_mean + p.fragments_spread;
    let k = (rng.gen_range(lo..=hi) as usize)
        .max(min_pieces)
        .min((len / 1_000).max(1) as usize);
    let gaps: Vec<i64> = (1..k).map(|_| rng.gen_range(p.gap_min..=p.gap_max)).collect();
    let room = len - gaps.iter().sum::<i64>();
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..1.5)).collect();
    let wsum: f64 = w.iter().sum();
    let mut lens: Vec<i64> = w.iter().map(|x| ((room as f64) * x / wsum) as i64).collect();
    let used: i64 = lens.iter().sum();
    lens[k - 1] += room - used;
    let mut out = Vec::with_capacity(k);
    let mut at = 0;
    for (i, l) in lens.into_iter().enumerate() {
        out.push((at, l));
        at += l + gaps.get(i).copied().unwrap_or(0);
    }
    out
}

fn pick_phase(rng: &mut ChaCha8Rng, mix: [f64; 3]) -> Phase {
    let total: f64 = mix.iter().sum();
    let r = rng.gen_range(0.0..total);
    if r < mix[0] {
        Phase::One
    } else if r < mix[0] + mix[1] {
        Phase::Two
    } else {
        Phase::Three
    }
}

fn count_of(rate: f64, n: usize) -> usize {
    if rate <= 0.0 || n == 0 {
        0
    } else {
        ((rate * n as f64).round() as usize).clamp(1, n)
    }
}

/// Minimum clone depth over `[lo, hi)` on `chrom`.
fn min_depth(intervals: &[(u32, i64, i64)], chrom: u32, lo: i64, hi: i64) -> usize {
    let mut events: Vec<(i64, i32)> = Vec::new();
    for &(c, s, e) in intervals {
        if c == chrom && s < hi && e > lo {
            events.push((s.max(lo), 1));
            events.push((e.min(hi), -1));
        }
    }
    events.sort();
    let mut depth = 0i32;
    let mut best = i32::MAX;
    let mut at = lo;
    for (x, d) in events {
        if x > at {
            best = best.min(depth);
            at = x;
        }
        depth += d;
    }
    if at < hi {
        best = best.min(depth);
    }
    best.max(0) as usize
}

struct Layout {
    sites: Vec<Site>,
}

pub fn simulate(params: &SimParams) -> Result<Simulation> {
    params.validate()?;
    let p = params;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let chr_len = p.chromosome_length();
    let n_clones = ((p.coverage * p.genome_length as f64) / p.clone_length_mean as f64).round().max(1.0) as usize;

    // Clone intervals.
    let mut spans: Vec<(u32, i64, i64)> = (0..n_clones)
        .map(|_| {
            let len = rng.gen_range(p.clone_length_mean - p.clone_length_spread..=p.clone_length_mean + p.clone_length_spread);
            let chrom = rng.gen_range(1..=p.n_chromosomes);
            let s = rng.gen_range(0..=chr_len - len);
            (chrom, s, s + len)
        })
        .collect();
    spans.sort();
    let phases: Vec<Phase> = (0..n_clones).map(|_| pick_phase(&mut rng, p.phase_mix)).collect();

    let mut order: Vec<usize> = (0..n_clones).collect();
    order.shuffle(&mut rng);
    let chimeras: BTreeSet<usize> = order[..count_of(p.chimera_rate, n_clones)].iter().copied().collect();
    order.shuffle(&mut rng);
    let mislabeled: BTreeSet<usize> = order[..count_of(p.mislabel_rate, n_clones)].iter().copied().collect();
    let normal: Vec<(u32, i64, i64)> = spans
        .iter()
        .enumerate()
        .filter(|(i, _)| !chimeras.contains(i))
        .map(|(_, &s)| s)
        .collect();

    let mut clones = Vec::with_capacity(n_clones);
    let mut fragments: Vec<Fragment> = Vec::new();
    let mut sites: Vec<Site> = Vec::new();
    let mut truth = GroundTruth::default();
    for (ci, &(chrom, s, e)) in spans.iter().enumerate() {
        let name = format!("BAC{:06}", ci + 1);
        let len = e - s;
        let chimeric = chimeras.contains(&ci);
        let phase = if chimeric { Phase::One } else { phases[ci] };
        let tiles = tile(&mut rng, len, phase, p, if chimeric { 2 } else { 1 });
        // Pieces in clone coordinates: (clone-local start, length, genome chrom, genome start, strand).
        let pieces: Vec<(i64, i64, u32, i64, Orientation)> = if chimeric {
            let cut = tiles[tiles.len() / 2].0;
            let mut out = Vec::new();
            let mut first: Option<(u32, i64)> = None;
            for (lo, plen) in [(0, cut), (cut, len - cut)] {
                let mut best = None;
                for _ in 0..400 {
                    let c = rng.gen_range(1..=p.n_chromosomes);
                    let gs = rng.gen_range(0..=chr_len - plen);
                    let far = first.is_none_or(|(fc, fs)| fc != c || (fs - gs).abs() > 4 * p.clone_length_mean);
                    if !far {
                        continue;
                    }
                    let flank = p.clone_length_mean / 2;
                    if min_depth(&normal, c, (gs - flank).max(0), (gs + plen + flank).min(chr_len)) >= 2 {
                        best = Some((c, gs));
                        break;
                    }
                    best.get_or_insert((c, gs));
                }
                let (c, gs) = best.expect("at least one candidate");
                first.get_or_insert((c, gs));
                let strand = if rng.gen_bool(0.5) { Orientation::Forward } else { Orientation::Reverse };
                out.push((lo, plen, c, gs, strand));
            }
            out
        } else {
            let strand = if rng.gen_bool(0.5) { Orientation::Forward } else { Orientation::Reverse };
            vec![(0, len, chrom, s, strand)]
        };
        let home = pieces[0].2;
        truth.clones.push(CloneTruth {
            name: name.clone(),
            chromosome: home,
            pieces: pieces
                .iter()
                .map(|&(_, plen, c, gs, _)| Piece { chromosome: c, start: gs, end: gs + plen })
                .collect(),
        });
        if chimeric {
            truth.chimeras.push(name.clone());
        }
        // Fragments in clone order, with genome sites.
        let mut in_order: Vec<(Site, i64)> = Vec::new();
        for &(x, flen) in &tiles {
            let &(lo, plen, c, gs, strand) = pieces
                .iter()
                .rev()
                .find(|pc| pc.0 <= x)
                .expect("tile inside a piece");
            debug_assert!(x + flen <= lo + plen);
            let (start, base) = match strand {
                Orientation::Forward => (gs + (x - lo), Orientation::Forward),
                Orientation::Reverse => (gs + plen - (x - lo) - flen, Orientation::Reverse),
            };
            let orient = if phase == Phase::One {
                if rng.gen_bool(0.5) { Orientation::Forward } else { Orientation::Reverse }
            } else {
                base
            };
            in_order.push((Site { chrom: c, start, len: flen, orient }, x));
        }
        let k = in_order.len();
        let marked = phase == Phase::One && k >= 2 && rng.gen_bool(p.end_marker_rate);
        let mut listing: Vec<usize> = (0..k).collect();
        if phase == Phase::One {
            listing.shuffle(&mut rng);
        }
        let clone_id = CloneId(ci as u32);
        let mut ids = Vec::with_capacity(k);
        let mut record = 1i64;
        for (pos, &t) in listing.iter().enumerate() {
            let (site, _) = in_order[t];
            let id = FragId(fragments.len() as u32);
            let fname = format!("{name}~{}", pos + 1);
            let end_marker = match (marked, t) {
                (true, 0) => Some(EndMarker::Left),
                (true, t) if t == k - 1 => Some(EndMarker::Right),
                _ => None,
            };
            fragments.push(Fragment {
                id,
                name: fname.clone(),
                clone: clone_id,
                record_start: record,
                record_end: record + site.len - 1,
                length: site.len,
                declared_order: (phase == Phase::Two).then_some(pos as u32),
                end_marker,
                sequence: None,
            });
            record += site.len;
            truth.fragments.push(FragTruth {
                name: fname,
                clone: name.clone(),
                chromosome: site.chrom,
                start: site.start,
                length: site.len,
                orientation: site.orient,
            });
            sites.push(site);
            ids.push(id);
        }
        let chromosome = if mislabeled.contains(&ci) {
            let n = p.n_chromosomes.max(2);
            let mut other = rng.gen_range(1..=n);
            while other == home {
                other = rng.gen_range(1..=n);
            }
            truth.mislabels.push((name.clone(), home.to_string(), other.to_string()));
            Chromosome::Assigned(other.to_string())
        } else {
            Chromosome::Assigned(home.to_string())
        };
        clones.push(Clone {
            id: clone_id,
            name,
            estimated_length: len,
            phase,
            chromosome,
            fragments: ids,
        });
    }
    let mut ds = Dataset::new(clones, fragments);
    let layout = Layout { sites };

    if p.with_sequences {
        attach_sequences(&mut ds, &layout, p, &mut rng);
    }
    let (alignments, nt_pairs) = emit_overlaps(&ds, &layout, p, &mut rng, &mut truth);
    let orientation_pairs = emit_orientation_pairs(&ds, &layout, p, &mut rng);
    Ok(Simulation {
        dataset: ds,
        alignments,
        nt_pairs,
        orientation_pairs,
        truth,
    })
}

fn attach_sequences(ds: &mut Dataset, layout: &Layout, p: &SimParams, rng: &mut ChaCha8Rng) {
    const BASES: [u8; 4] = *b"ACGT";
    let chr_len = p.chromosome_length() as usize;
    let genome: Vec<Vec<u8>> = (0..p.n_chromosomes)
        .map(|_| (0..chr_len).map(|_| BASES[rng.gen_range(0..4)]).collect())
        .collect();
    for (f, site) in ds.fragments.iter_mut().zip(&layout.sites) {
        let slice = &genome[site.chrom as usize - 1][site.start as usize..site.end() as usize];
        let seq: Vec<u8> = match site.orient {
            Orientation::Forward => slice.to_vec(),
            Orientation::Reverse => slice
                .iter()
                .rev()
                .map(|&b| match b {
                    b'A' => b'T',
                    b'C' => b'G',
                    b'G' => b'C',
                    _ => b'A',
                })
                .collect(),
        };
        f.sequence = Some(String::from_utf8(seq).expect("ASCII"));
    }
}

/// Pairs of fragments from different clones whose genome sites intersect.
fn true_pairs(ds: &Dataset, sites: &[Site]) -> Vec<(FragId, FragId, i64, i64)> {
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by_key(|&i| (sites[i].chrom, sites[i].start, i));
    let mut out = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let s = &sites[i];
        active.retain(|&j| sites[j].chrom == s.chrom && sites[j].end() > s.start);
        for &j in &active {
            let (a, b) = (FragId(j.min(i) as u32), FragId(j.max(i) as u32));
            if ds.clone_of(a) != ds.clone_of(b) {
                let x = s.start.max(sites[j].start);
                let y = s.end().min(sites[j].end());
                out.push((a, b, x, y));
            }
        }
        active.push(i);
    }
    out.sort();
    out
}

fn contained(sa: &Site, sb: &Site) -> bool {
    (sa.start <= sb.start && sb.end() <= sa.end()) || (sb.start <= sa.start && sa.end() <= sb.end())
}

fn emit_overlaps(
    ds: &Dataset,
    layout: &Layout,
    p: &SimParams,
    rng: &mut ChaCha8Rng,
    truth: &mut GroundTruth,
) -> (Vec<RawAlignment>, Vec<ValidOverlap>) {
    let sites = &layout.sites;
    let mut pairs = true_pairs(ds, sites);

    // False negatives.
    let mut per_clone_pair: BTreeMap<(CloneId, CloneId), usize> = BTreeMap::new();
    for &(a, b, _, _) in &pairs {
        let (x, y) = (ds.clone_of(a), ds.clone_of(b));
        *per_clone_pair.entry((x.min(y), x.max(y))).or_default() += 1;
    }
    let mut droppable: Vec<usize> = (0..pairs.len())
        .filter(|&k| {
            let (a, b, _, _) = pairs[k];
            let (x, y) = (ds.clone_of(a), ds.clone_of(b));
            !p.fn_critical_only || per_clone_pair[&(x.min(y), x.max(y))] == 1
        })
        .collect();
    droppable.shuffle(rng);
    let n_drop = count_of(p.fn_rate, pairs.len()).min(droppable.len());
    let drop: BTreeSet<usize> = droppable[..n_drop].iter().copied().collect();
    for &k in &drop {
        let (a, b, _, _) = pairs[k];
        truth.dropped.push((ds.frag(a).name.clone(), ds.frag(b).name.clone()));
    }
    let mut k = 0;
    pairs.retain(|_| {
        k += 1;
        !drop.contains(&(k - 1))
    });

    let mut alignments = Vec::new();
    let mut nt_pairs = Vec::new();
    let mut emitted: BTreeSet<(FragId, FragId)> = BTreeSet::new();
    for &(a, b, x, y) in &pairs {
        let (sa, sb) = (&sites[a.index()], &sites[b.index()]);
        let finished = ds.phase_of(a).is_finished() && ds.phase_of(b).is_finished();
        if finished && sa.orient == sb.orient && !contained(sa, sb) {
            // `first` is the one read first along the shared strand.
            let forward = sa.orient == Orientation::Forward;
            let (first, second) = if (sa.start < sb.start) == forward { (a, b) } else { (b, a) };
            let ov = y - x;
            let lf = ds.len(first);
            nt_pairs.push(ValidOverlap {
                a: first,
                b: second,
                kind: OverlapKind::NtPair,
                offset: lf - ov,
                strand: Strand::Same,
                identity: 1.0,
                overlap_length: intersection(0, lf, lf - ov, ds.len(second)),
                contained: None,
            });
        } else {
            let identity = (rng.gen_range(0.985..=1.0f64) * 10_000.0).round() / 10_000.0;
            alignments.push(align(a, sa, b, sb, x, y, identity));
        }
        emitted.insert((a, b));
        truth.overlaps.push(LabeledOverlap {
            a: ds.frag(a).name.clone(),
            b: ds.frag(b).name.clone(),
            label: OverlapLabel::True,
        });
    }

    // False positives.
    let n_fp = count_of(p.fp_rate, pairs.len());
    let n_consistent = ((n_fp as f64) * p.fp_consistent_share).round() as usize;
    let n_inconsistent = n_fp - n_consistent;
    let spans: Vec<Vec<Piece>> = truth.clones.iter().map(|c| c.pieces.clone()).collect();
    let near = |f: FragId, g: FragId| -> bool {
        let margin = 2 * p.clone_length_mean;
        spans[ds.clone_of(f).index()].iter().any(|x| {
            spans[ds.clone_of(g).index()]
                .iter()
                .any(|y| x.chromosome == y.chromosome && x.start < y.end + margin && y.start < x.end + margin)
        })
    };
    let n_frags = sites.len();
    let mut plant = |a: FragId, h: FragId, site_h: Site, x: i64, y: i64, class: FpClass, rng: &mut ChaCha8Rng| {
        let key = (a.min(h), a.max(h));
        if !emitted.insert(key) {
            return false;
        }
        let identity = (rng.gen_range(0.975..=1.0f64) * 10_000.0).round() / 10_000.0;
        alignments.push(align(a, &sites[a.index()], h, &site_h, x, y, identity));
        truth.overlaps.push(LabeledOverlap {
            a: ds.frag(a).name.clone(),
            b: ds.frag(h).name.clone(),
            label: OverlapLabel::RepeatInduced(class),
        });
        true
    };
    let random_orient = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { Orientation::Forward } else { Orientation::Reverse };

    // Inconsistent: copy a long dovetail's geometry onto a distant fragment.
    let sources: Vec<(FragId, FragId, i64, i64)> = pairs
        .iter()
        .copied()
        .filter(|&(a, b, x, y)| y - x >= 2 * p.implied_overlap_threshold && !contained(&sites[a.index()], &sites[b.index()]))
        .collect();
    let mut planted = 0;
    let mut tries = 0;
    while planted < n_inconsistent && !sources.is_empty() && tries < 50 * n_inconsistent + 100 {
        tries += 1;
        let &(f, g, x, y) = sources.choose(rng).expect("non-empty");
        let (a, b) = if rng.gen_bool(0.5) { (f, g) } else { (g, f) };
        let (sa, sb) = (sites[a.index()], sites[b.index()]);
        let ov = y - x;
        let h = FragId(rng.gen_range(0..n_frags) as u32);
        if h == a || h == b || near(h, a) || near(h, b) || ds.len(h) <= ov {
            continue;
        }
        let lh = ds.len(h);
        let start = if sb.start > sa.start { sb.start } else { sb.end() - lh };
        let virt = Site { chrom: sa.chrom, start, len: lh, orient: random_orient(rng) };
        if plant(a, h, virt, x, y, FpClass::Inconsistent, rng) {
            planted += 1;
        }
    }

    // Consistent: join island ends (coverage gaps), or a short repeat below the window.
    let mut right_ends: Vec<FragId> = Vec::new();
    let mut left_ends: Vec<FragId> = Vec::new();
    {
        let mut order: Vec<usize> = (0..n_frags).collect();
        order.sort_by_key(|&i| (sites[i].chrom, sites[i].start, i));
        let mut i = 0;
        while i < order.len() {
            let first = order[i];
            let chrom = sites[first].chrom;
            let mut reach = sites[first].end();
            let mut last = first;
            let mut j = i + 1;
            while j < order.len() && sites[order[j]].chrom == chrom && sites[order[j]].start < reach {
                if sites[order[j]].end() > reach {
                    reach = sites[order[j]].end();
                    last = order[j];
                }
                j += 1;
            }
            left_ends.push(FragId(first as u32));
            right_ends.push(FragId(last as u32));
            i = j;
        }
    }
    let mut planted = 0;
    let mut tries = 0;
    while planted < n_consistent && tries < 50 * n_consistent + 100 {
        tries += 1;
        let end_join = planted % 2 == 0 && right_ends.len() >= 2;
        let (a, h) = if end_join {
            (*right_ends.choose(rng).expect("islands"), *left_ends.choose(rng).expect("islands"))
        } else {
            (FragId(rng.gen_range(0..n_frags) as u32), FragId(rng.gen_range(0..n_frags) as u32))
        };
        if a == h || near(a, h) {
            continue;
        }
        let (la, lh) = (ds.len(a), ds.len(h));
        let cap = la.min(lh) / 2;
        let (lo, hi) = if end_join {
            (p.implied_overlap_threshold / 2, 2 * p.implied_overlap_threshold)
        } else {
            (100, p.implied_overlap_threshold / 2)
        };
        let hi = hi.min(cap);
        if hi <= lo {
            continue;
        }
        let ov = rng.gen_range(lo..=hi);
        let sa = sites[a.index()];
        let virt = Site { chrom: sa.chrom, start: sa.end() - ov, len: lh, orient: random_orient(rng) };
        let class = if end_join { FpClass::ConsistentEnd } else { FpClass::ConsistentRepeat };
        if plant(a, h, virt, sa.end() - ov, sa.end(), class, rng) {
            planted += 1;
        }
    }
    (alignments, nt_pairs)
}

fn emit_orientation_pairs(ds: &Dataset, layout: &Layout, p: &SimParams, rng: &mut ChaCha8Rng) -> Vec<OrientationPair> {
    let mut out = Vec::new();
    for c in &ds.clones {
        if c.phase != Phase::One {
            continue;
        }
        let mut frs = c.fragments.clone();
        frs.sort_by_key(|f| (layout.sites[f.index()].chrom, layout.sites[f.index()].start));
        for w in frs.windows(2) {
            if rng.gen_bool(p.orientation_pair_rate) {
                let (a, b) = (&layout.sites[w[0].index()], &layout.sites[w[1].index()]);
                out.push(OrientationPair {
                    a: w[0],
                    b: w[1],
                    strand: a.orient.relative_to(b.orient),
                    evidence_count: rng.gen_range(1..=3),
                });
            }
        }
    }
    out
}

/// Counts for one class of planted repeat-induced overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FpCounts {
    pub planted: usize,
    /// Both fragments placed in one subcontig with intersecting intervals.
    pub accepted: usize,
}

impl FpCounts {
    pub fn rejection_recall(&self) -> f64 {
        ratio(self.planted - self.accepted, self.planted)
    }
}

/// Assembly quality against the simulator's ground truth.
#[derive(Debug, Clone, Default)]
pub struct Metrics {
    /// Contigs with at least one pair of truth-disjoint clones.
    pub contigs_scored: usize,
    /// Of those, contigs whose clone order matches the truth up to reversal.
    pub contigs_in_order: usize,
    pub discordant_pairs: usize,
    /// Fragment offset errors relative to each subcontig's first fragment.
    pub placement_errors: Vec<i64>,
    /// Fragments placed with a reference fragment from another chromosome.
    pub cross_chromosome: usize,
    pub fp: BTreeMap<FpClass, FpCounts>,
    pub rejected_pairs: usize,
    pub rejected_repeat_induced: usize,
    pub fn_dropped: usize,
    /// Dropped overlaps whose clone pair received an inferred edge.
    pub fn_edges_added: usize,
    /// Dropped overlaps whose fragments still intersect in one subcontig.
    pub fn_placed: usize,
    pub chimeras_planted: usize,
    pub chimeras_removed: usize,
    pub false_removals: usize,
    pub n_clones: usize,
    /// (clone, span, warp)
    pub warps: Vec<(String, i64, f64)>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn order_agreement(&self) -> f64 {
        ratio(self.contigs_in_order, self.contigs_scored)
    }

    pub fn max_placement_error(&self) -> i64 {
        self.placement_errors.iter().copied().max().unwrap_or(0)
    }

    pub fn fp_total(&self) -> FpCounts {
        self.fp.values().fold(FpCounts::default(), |a, c| FpCounts {
            planted: a.planted + c.planted,
            accepted: a.accepted + c.accepted,
        })
    }

    pub fn rejection_precision(&self) -> f64 {
        ratio(self.rejected_repeat_induced, self.rejected_pairs)
    }

    pub fn chimera_recall(&self) -> f64 {
        ratio(self.chimeras_removed, self.chimeras_planted)
    }

    pub fn chimera_precision(&self) -> f64 {
        ratio(self.chimeras_removed, self.chimeras_removed + self.false_removals)
    }

    pub fn fn_recall(&self) -> f64 {
        ratio(self.fn_edges_added + self.fn_placed, self.fn_dropped)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "order_agreement\t{}/{}", self.contigs_in_order, self.contigs_scored);
        let _ = writeln!(out, "discordant_pairs\t{}", self.discordant_pairs);
        let _ = writeln!(out, "placed_fragments_scored\t{}", self.placement_errors.len());
        let _ = writeln!(out, "max_placement_error\t{}", self.max_placement_error());
        let _ = writeln!(out, "cross_chromosome\t{}", self.cross_chromosome);
        for (class, c) in &self.fp {
            let label = OverlapLabel::RepeatInduced(*class).as_str();
            let _ = writeln!(out, "fp_{label}\tplanted={}\taccepted={}", c.planted, c.accepted);
        }
        let _ = writeln!(out, "rejected\t{}\trepeat_induced={}", self.rejected_pairs, self.rejected_repeat_induced);
        let _ = writeln!(
            out,
            "fn\tdropped={}\tedges_added={}\tplaced={}",
            self.fn_dropped, self.fn_edges_added, self.fn_placed
        );
        let _ = writeln!(
            out,
            "chimeras\tplanted={}\tremoved={}\tfalse_removals={}",
            self.chimeras_planted, self.chimeras_removed, self.false_removals
        );
        let within = self.warps.iter().filter(|w| (0.98..=1.02).contains(&w.2)).count();
        let _ = writeln!(out, "warps_within_2pct\t{within}/{}", self.warps.len());
        out
    }
}

/// Score an assembly read back from its artifacts against the truth of the
/// simulation that produced its input.
pub fn score_assembly(view: &AssemblyView, truth: &GroundTruth, ds: &Dataset) -> Result<Metrics> {
    let frags: HashMap<&str, &FragTruth> = truth.fragments.iter().map(|f| (f.name.as_str(), f)).collect();
    let clones: HashMap<&str, &CloneTruth> = truth.clones.iter().map(|c| (c.name.as_str(), c)).collect();
    for r in &view.rows {
        if !frags.contains_key(r.frag.as_str()) {
            return Err(Error::IdMismatch(format!("fragment {} is not in the truth", r.frag)));
        }
    }
    let chimeras: BTreeSet<&str> = truth.chimeras.iter().map(String::as_str).collect();
    let mut m = Metrics {
        n_clones: truth.clones.len(),
        ..Metrics::default()
    };

    // Clone order per contig.
    let mut by_contig: BTreeMap<u32, BTreeMap<&str, (i64, i64)>> = BTreeMap::new();
    for r in &view.rows {
        let e = by_contig
            .entry(r.contig)
            .or_default()
            .entry(r.clone.as_str())
            .or_insert((i64::MAX, i64::MIN));
        e.0 = e.0.min(r.start);
        e.1 = e.1.max(r.start + frags[r.frag.as_str()].length);
    }
    for members in by_contig.values() {
        let placed: Vec<(i64, &CloneTruth)> = members
            .iter()
            .filter(|(c, _)| !chimeras.contains(*c))
            .filter_map(|(c, &(lo, hi))| clones.get(c).map(|t| (lo + hi, *t)))
            .collect();
        let (mut conc, mut disc, mut mixed) = (0usize, 0usize, false);
        for (i, (ca, ta)) in placed.iter().enumerate() {
            for (cb, tb) in &placed[i + 1..] {
                let (pa, pb) = (ta.pieces[0], tb.pieces[0]);
                if pa.chromosome != pb.chromosome {
                    mixed = true;
                    continue;
                }
                if pa.end <= pb.start || pb.end <= pa.start {
                    if (ca < cb) == (pa.start < pb.start) {
                        conc += 1;
                    } else {
                        disc += 1;
                    }
                }
            }
        }
        if conc + disc > 0 || mixed {
            m.contigs_scored += 1;
            if !mixed && (conc == 0 || disc == 0) {
                m.contigs_in_order += 1;
            }
            m.discordant_pairs += conc.min(disc);
        }
    }

    // Placement error inside each subcontig, up to reflection.
    let mut by_sub: BTreeMap<(u32, u32), Vec<&LayoutRow>> = BTreeMap::new();
    for r in &view.rows {
        by_sub.entry((r.contig, r.subcontig)).or_default().push(r);
    }
    for rows in by_sub.values() {
        let r0 = rows[0];
        let t0 = frags[r0.frag.as_str()];
        let reflected = r0.orientation != t0.orientation;
        for r in &rows[1..] {
            let t = frags[r.frag.as_str()];
            if t.chromosome != t0.chromosome {
                m.cross_chromosome += 1;
                continue;
            }
            let d_asm = r.start - r0.start;
            let d_true = if reflected {
                (t0.start + t0.length) - (t.start + t.length)
            } else {
                t.start - t0.start
            };
            m.placement_errors.push((d_asm - d_true).abs());
        }
    }

    // Repeat-induced overlaps: accepted when realised inside one subcontig.
    let placed_at: HashMap<&str, (u32, u32, i64, i64)> = view
        .rows
        .iter()
        .map(|r| {
            let len = frags[r.frag.as_str()].length;
            (r.frag.as_str(), (r.contig, r.subcontig, r.start, len))
        })
        .collect();
    let realised = |a: &str, b: &str| -> bool {
        match (placed_at.get(a), placed_at.get(b)) {
            (Some(&(ca, sa, pa, la)), Some(&(cb, sb, pb, lb))) => {
                ca == cb && sa == sb && intersection(pa, la, pb, lb) > 0
            }
            _ => false,
        }
    };
    for o in &truth.overlaps {
        if let OverlapLabel::RepeatInduced(class) = o.label {
            let c = m.fp.entry(class).or_default();
            c.planted += 1;
            if realised(&o.a, &o.b) {
                c.accepted += 1;
            }
        }
    }
    let labels = truth.labels();
    for (a, b, _) in &view.rejected {
        if b == "-" {
            continue;
        }
        m.rejected_pairs += 1;
        if labels.get(&name_pair(a, b)).is_some_and(|l| l.is_repeat_induced()) {
            m.rejected_repeat_induced += 1;
        }
    }

    // Dropped true overlaps.
    let fn_edges: BTreeSet<(String, String)> = view
        .actions
        .iter()
        .filter(|a| a.kind == "add_fn_edge" && a.args.len() >= 2)
        .map(|a| name_pair(&a.args[0], &a.args[1]))
        .collect();
    for (a, b) in &truth.dropped {
        m.fn_dropped += 1;
        let (ca, cb) = (&frags.get(a.as_str()), &frags.get(b.as_str()));
        let pair = match (ca, cb) {
            (Some(x), Some(y)) => name_pair(&x.clone, &y.clone),
            _ => continue,
        };
        if fn_edges.contains(&pair) {
            m.fn_edges_added += 1;
        } else if realised(a, b) {
            m.fn_placed += 1;
        }
    }

    // Chimera removal.
    let removed: BTreeSet<&str> = view
        .actions
        .iter()
        .filter(|a| a.kind == "remove_vertex")
        .filter_map(|a| a.args.first().map(String::as_str))
        .collect();
    m.chimeras_planted = chimeras.len();
    m.chimeras_removed = chimeras.intersection(&removed).count();
    m.false_removals = removed.difference(&chimeras).count();

    m.warps = view.warps(ds)?;
    Ok(m)
}
