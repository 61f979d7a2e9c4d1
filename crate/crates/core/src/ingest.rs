//! Input parsing and raw-alignment classification.
//!
//! File formats (whitespace separated, `#` comment lines ignored):
//!
//! * clone table: a header row `accession estimated_length phase chromosome n_fragments`
//!   followed by `n_fragments` rows `frag_id start end length [end=left|right|unknown] [order=N]`.
//! * alignments: `frag_a a_start a_end frag_b b_start b_end strand identity`.
//! * orientation pairs: `frag_a frag_b Same|Reverse [count]`.
//! * nt-pairs: `frag_a frag_b overlap_bp`, with `frag_b` following `frag_a` on the same strand.
//! * sequences: `frag_id bases`.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::model::{
    canonicalize_overlap, end_tolerance, intersection, Chromosome, Clone, CloneId, Dataset,
    EndMarker, FragId, Fragment, OrientationPair, OverlapKind, Phase, PipelineParams, Strand,
    ValidOverlap,
};

/// Parsed records plus the rows that were skipped with a warning.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub items: Vec<T>,
    pub warnings: Vec<String>,
}

impl<T> Default for Parsed<T> {
    fn default() -> Self {
        Parsed {
            items: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

impl<T> Parsed<T> {
    fn warn(&mut self, msg: String) {
        warn!("{msg}");
        self.warnings.push(msg);
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            None
        } else {
            Some((i + 1, l.split_whitespace().collect()))
        }
    })
}

fn int(tok: &str, line: usize, what: &str) -> Result<i64> {
    tok.parse::<i64>()
        .map_err(|_| Error::parse(line, format!("{what}: expected integer, got {tok:?}")))
}

fn is_int(tok: &str) -> bool {
    tok.parse::<i64>().is_ok()
}

fn is_header_row(toks: &[&str]) -> bool {
    toks.len() == 5
        && is_int(toks[1])
        && matches!(toks[2], "1" | "2" | "3")
        && is_int(toks[4])
}

fn is_fragment_row(toks: &[&str]) -> bool {
    toks.len() >= 4
        && toks[1..4].iter().all(|t| is_int(t))
        && toks[4..].iter().all(|t| t.contains('='))
}

/// Parse the clone table. Fragment ids are assigned in file order.
pub fn parse_clone_table(text: &str) -> Result<(Dataset, Parsed<()>)> {
    let mut report = Parsed::default();
    let mut clones: Vec<Clone> = Vec::new();
    let mut fragments: Vec<Fragment> = Vec::new();
    let mut seen_clones = HashSet::new();
    let mut seen_frags = HashSet::new();

    let lines: Vec<(usize, Vec<&str>)> = data_lines(text).collect();
    let mut i = 0;
    while i < lines.len() {
        let (line, toks) = &lines[i];
        if !is_header_row(toks) {
            if is_fragment_row(toks) {
                if let Some(prev) = clones.last() {
                    let extra = lines[i..]
                        .iter()
                        .take_while(|(_, t)| is_fragment_row(t) && !is_header_row(t))
                        .count();
                    return Err(Error::FragmentCount {
                        clone: prev.name.clone(),
                        declared: prev.fragments.len(),
                        found: prev.fragments.len() + extra,
                    });
                }
            }
            return Err(Error::parse(
                *line,
                "expected header `accession estimated_length phase chromosome n_fragments`",
            ));
        }
        let name = toks[0].to_string();
        if !seen_clones.insert(name.clone()) {
            return Err(Error::DuplicateAccession(name));
        }
        let estimated_length = int(toks[1], *line, "estimated length")?;
        if estimated_length <= 0 {
            return Err(Error::parse(*line, "estimated length must be positive"));
        }
        let phase = Phase::from_number(toks[2].parse().unwrap_or(0))
            .ok_or_else(|| Error::parse(*line, "phase must be 1, 2 or 3"))?;
        let chromosome = Chromosome::parse(toks[3]);
        let n = int(toks[4], *line, "fragment count")?;
        if n <= 0 {
            return Err(Error::parse(*line, "clone must have at least one fragment"));
        }
        let n = n as usize;
        let clone_id = CloneId(clones.len() as u32);
        let mut frag_ids = Vec::with_capacity(n);
        let mut orders = HashSet::new();
        i += 1;
        for k in 0..n {
            let Some((fline, ftoks)) = lines.get(i) else {
                return Err(Error::FragmentCount {
                    clone: name,
                    declared: n,
                    found: k,
                });
            };
            if !is_fragment_row(ftoks) || is_header_row(ftoks) {
                return Err(Error::FragmentCount {
                    clone: name,
                    declared: n,
                    found: k,
                });
            }
            let fname = ftoks[0].to_string();
            if !seen_frags.insert(fname.clone()) {
                return Err(Error::DuplicateFragment(fname));
            }
            let start = int(ftoks[1], *fline, "start")?;
            let end = int(ftoks[2], *fline, "end")?;
            let length = int(ftoks[3], *fline, "length")?;
            if length <= 0 {
                return Err(Error::parse(*fline, "fragment length must be positive"));
            }
            if end - start + 1 != length {
                return Err(Error::parse(
                    *fline,
                    format!("fragment {fname}: start {start}..end {end} spans {} bp, length says {length}", end - start + 1),
                ));
            }
            let mut end_marker = None;
            let mut declared_order = None;
            for extra in &ftoks[4..] {
                let (k, v) = extra.split_once('=').unwrap_or((extra, ""));
                match k {
                    "end" => {
                        end_marker = Some(v.parse::<EndMarker>().map_err(|e| Error::parse(*fline, e))?)
                    }
                    "order" => {
                        let o = v
                            .parse::<u32>()
                            .map_err(|_| Error::parse(*fline, format!("bad order {v:?}")))?;
                        declared_order = Some(o);
                    }
                    _ => report.warn(format!("line {fline}: ignoring unknown field {extra:?}")),
                }
            }
            if phase == Phase::Two && declared_order.is_none() {
                declared_order = Some(k as u32);
            }
            if let Some(o) = declared_order {
                if !orders.insert(o) {
                    return Err(Error::parse(
                        *fline,
                        format!("declared order {o} repeated within clone {name}"),
                    ));
                }
            }
            let id = FragId(fragments.len() as u32);
            fragments.push(Fragment {
                id,
                name: fname,
                clone: clone_id,
                record_start: start,
                record_end: end,
                length,
                declared_order,
                end_marker,
                sequence: None,
            });
            frag_ids.push(id);
            i += 1;
        }
        if phase == Phase::Three && n != 1 {
            report.warn(format!(
                "clone {name} is phase 3 but has {n} fragments; phase treated as advisory"
            ));
        }
        clones.push(Clone {
            id: clone_id,
            name,
            estimated_length,
            phase,
            chromosome,
            fragments: frag_ids,
        });
    }
    Ok((Dataset::new(clones, fragments), report))
}

pub fn write_clone_table(ds: &Dataset) -> String {
    let mut out = String::new();
    for c in &ds.clones {
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            c.name,
            c.estimated_length,
            c.phase.number(),
            c.chromosome,
            c.fragments.len()
        );
        for &f in &c.fragments {
            let f = ds.frag(f);
            let _ = write!(out, "\t{} {} {} {}", f.name, f.record_start, f.record_end, f.length);
            if let Some(m) = f.end_marker {
                let _ = write!(out, " end={}", m.as_str());
            }
            if let (Some(o), false) = (f.declared_order, c.phase == Phase::Two) {
                let _ = write!(out, " order={o}");
            }
            out.push('\n');
        }
    }
    out
}

/// A local alignment between two fragments, 1-based inclusive coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAlignment {
    pub a: FragId,
    pub a_start: i64,
    pub a_end: i64,
    pub b: FragId,
    pub b_start: i64,
    pub b_end: i64,
    pub strand: Strand,
    pub identity: f64,
}

pub fn parse_alignments(text: &str, ds: &Dataset) -> Result<Parsed<RawAlignment>> {
    let mut out = Parsed::default();
    for (line, toks) in data_lines(text) {
        if toks.len() != 8 {
            return Err(Error::parse(line, format!("expected 8 columns, got {}", toks.len())));
        }
        let (Some(a), Some(b)) = (ds.frag_id(toks[0]), ds.frag_id(toks[3])) else {
            out.warn(format!("line {line}: unknown fragment in alignment, skipped"));
            continue;
        };
        let aln = RawAlignment {
            a,
            a_start: int(toks[1], line, "a_start")?,
            a_end: int(toks[2], line, "a_end")?,
            b,
            b_start: int(toks[4], line, "b_start")?,
            b_end: int(toks[5], line, "b_end")?,
            strand: toks[6].parse().map_err(|e| Error::parse(line, e))?,
            identity: toks[7]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad identity {:?}", toks[7])))?,
        };
        let within = |s: i64, e: i64, len: i64| 1 <= s && s <= e && e <= len;
        if !within(aln.a_start, aln.a_end, ds.len(a)) || !within(aln.b_start, aln.b_end, ds.len(b)) {
            return Err(Error::parse(line, "alignment coordinates outside fragment bounds"));
        }
        if a == b {
            out.warn(format!("line {line}: self alignment skipped"));
            continue;
        }
        out.items.push(aln);
    }
    Ok(out)
}

pub fn write_alignments(alns: &[RawAlignment], ds: &Dataset) -> String {
    let mut out = String::new();
    for x in alns {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            ds.frag(x.a).name,
            x.a_start,
            x.a_end,
            ds.frag(x.b).name,
            x.b_start,
            x.b_end,
            x.strand.as_str(),
            x.identity
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    LowIdentity,
    Internal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Valid(ValidOverlap),
    Rejected(RejectReason),
}

/// Classify a raw alignment as a dovetail, a containment, or reject it.
///
/// The returned overlap is expressed in `aln.a`'s frame; it is not canonicalized.
pub fn classify_overlap(
    aln: &RawAlignment,
    len_a: i64,
    len_b: i64,
    phase_a: Phase,
    phase_b: Phase,
    params: &PipelineParams,
) -> Classification {
    if aln.identity < params.min_identity {
        return Classification::Rejected(RejectReason::LowIdentity);
    }
    let ea = end_tolerance(len_a, phase_a, params);
    let eb = end_tolerance(len_b, phase_b, params);

    let a_left = aln.a_start - 1;
    let a_right = len_a - aln.a_end;
    let (b_left, b_right, offset) = match aln.strand {
        Strand::Same => (aln.b_start - 1, len_b - aln.b_end, aln.a_start - aln.b_start),
        Strand::Reverse => (
            len_b - aln.b_end,
            aln.b_start - 1,
            (aln.a_start - 1) - (len_b - aln.b_end),
        ),
    };

    let b_in_a = b_left <= eb && b_right <= eb;
    let a_in_b = a_left <= ea && a_right <= ea;
    let (kind, contained) = if b_in_a && a_in_b {
        let inner = if len_b <= len_a { aln.b } else { aln.a };
        (OverlapKind::Containment, Some(inner))
    } else if b_in_a {
        (OverlapKind::Containment, Some(aln.b))
    } else if a_in_b {
        (OverlapKind::Containment, Some(aln.a))
    } else if (a_right <= ea && b_left <= eb) || (a_left <= ea && b_right <= eb) {
        (OverlapKind::Dovetail, None)
    } else {
        return Classification::Rejected(RejectReason::Internal);
    };

    Classification::Valid(ValidOverlap {
        a: aln.a,
        b: aln.b,
        kind,
        offset,
        strand: aln.strand,
        identity: aln.identity,
        overlap_length: intersection(0, len_a, offset, len_b).max(0),
        contained,
    })
}

/// Summary of classifying a batch of alignments.
#[derive(Debug, Clone, Default)]
pub struct ClassifiedSet {
    pub overlaps: Vec<ValidOverlap>,
    pub low_identity: usize,
    pub internal: usize,
}

/// Classify every alignment and canonicalize the accepted overlaps.
pub fn classify_all(
    alns: &[RawAlignment],
    ds: &Dataset,
    params: &PipelineParams,
) -> Result<ClassifiedSet> {
    let mut out = ClassifiedSet::default();
    for aln in alns {
        match classify_overlap(
            aln,
            ds.len(aln.a),
            ds.len(aln.b),
            ds.phase_of(aln.a),
            ds.phase_of(aln.b),
            params,
        ) {
            Classification::Valid(ov) => out.overlaps.push(canonicalize_overlap(ov, ds)?),
            Classification::Rejected(RejectReason::LowIdentity) => out.low_identity += 1,
            Classification::Rejected(RejectReason::Internal) => out.internal += 1,
        }
    }
    Ok(out)
}

pub fn parse_orientation_pairs(text: &str, ds: &Dataset) -> Result<Parsed<OrientationPair>> {
    let mut out = Parsed::default();
    let mut merged: BTreeMap<(FragId, FragId, Strand), u32> = BTreeMap::new();
    for (line, toks) in data_lines(text) {
        if toks.len() != 3 && toks.len() != 4 {
            return Err(Error::parse(line, format!("expected 3 columns, got {}", toks.len())));
        }
        let strand: Strand = toks[2].parse().map_err(|e| Error::parse(line, e))?;
        let count = match toks.get(3) {
            Some(t) => {
                let c = int(t, line, "count")?;
                if c < 1 {
                    return Err(Error::parse(line, "evidence count must be at least 1"));
                }
                c as u32
            }
            None => 1,
        };
        let (Some(a), Some(b)) = (ds.frag_id(toks[0]), ds.frag_id(toks[1])) else {
            out.warn(format!("line {line}: unknown fragment in orientation pair, skipped"));
            continue;
        };
        if a == b {
            out.warn(format!("line {line}: self pair {} skipped", toks[0]));
            continue;
        }
        *merged.entry((a.min(b), a.max(b), strand)).or_default() += count;
    }
    out.items = merged
        .into_iter()
        .map(|((a, b, strand), evidence_count)| OrientationPair {
            a,
            b,
            strand,
            evidence_count,
        })
        .collect();
    Ok(out)
}

pub fn write_orientation_pairs(pairs: &[OrientationPair], ds: &Dataset) -> String {
    let mut out = String::new();
    for p in pairs {
        let _ = write!(out, "{}\t{}\t{}", ds.frag(p.a).name, ds.frag(p.b).name, p.strand.as_str());
        if p.evidence_count != 1 {
            let _ = write!(out, "\t{}", p.evidence_count);
        }
        out.push('\n');
    }
    out
}

/// Parse annotation-derived overlaps. The third column is the number of overlapping
/// bases between the end of `frag_a` and the start of `frag_b` (0 for abutting fragments).
pub fn parse_nt_pairs(text: &str, ds: &Dataset) -> Result<Vec<ValidOverlap>> {
    let mut out = Vec::new();
    for (line, toks) in data_lines(text) {
        if toks.len() != 3 {
            return Err(Error::parse(line, format!("expected 3 columns, got {}", toks.len())));
        }
        let a = ds
            .frag_id(toks[0])
            .ok_or_else(|| Error::UnknownFragment(toks[0].to_string()))?;
        let b = ds
            .frag_id(toks[1])
            .ok_or_else(|| Error::UnknownFragment(toks[1].to_string()))?;
        if a == b {
            return Err(Error::parse(line, "nt-pair joins a fragment to itself"));
        }
        let overlap = int(toks[2], line, "overlap")?;
        if overlap < 0 {
            return Err(Error::parse(line, "nt-pair overlap must be non-negative"));
        }
        let offset = ds.len(a) - overlap;
        let ov = ValidOverlap {
            a,
            b,
            kind: OverlapKind::NtPair,
            offset,
            strand: Strand::Same,
            identity: 1.0,
            overlap_length: intersection(0, ds.len(a), offset, ds.len(b)).max(0),
            contained: None,
        };
        out.push(canonicalize_overlap(ov, ds)?);
    }
    Ok(out)
}

pub fn write_nt_pairs(pairs: &[ValidOverlap], ds: &Dataset) -> String {
    let mut out = String::new();
    for p in pairs {
        // Express as "first then second" with the stored overlap length.
        let (first, second) = if p.offset >= 0 { (p.a, p.b) } else { (p.b, p.a) };
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            ds.frag(first).name,
            ds.frag(second).name,
            p.overlap_length
        );
    }
    out
}

/// Attach sequences from the side file. Unknown ids are skipped with a warning.
pub fn parse_sequences(text: &str, ds: &mut Dataset) -> Result<Parsed<()>> {
    let mut out = Parsed::default();
    for (line, toks) in data_lines(text) {
        if toks.len() != 2 {
            return Err(Error::parse(line, "expected `frag_id bases`"));
        }
        let Some(id) = ds.frag_id(toks[0]) else {
            out.warn(format!("line {line}: unknown fragment {} skipped", toks[0]));
            continue;
        };
        let seq = toks[1].to_ascii_uppercase();
        if let Some(c) = seq.chars().find(|c| !matches!(c, 'A' | 'C' | 'G' | 'T' | 'N')) {
            return Err(Error::parse(line, format!("invalid base {c:?}")));
        }
        let frag = &mut ds.fragments[id.index()];
        if seq.len() as i64 != frag.length {
            return Err(Error::parse(
                line,
                format!("sequence of {} has {} bases, expected {}", frag.name, seq.len(), frag.length),
            ));
        }
        frag.sequence = Some(seq);
    }
    Ok(out)
}

pub fn write_sequences(ds: &Dataset) -> String {
    let mut out = String::new();
    for f in &ds.fragments {
        if let Some(s) = &f.sequence {
            let _ = writeln!(out, "{}\t{}", f.name, s);
        }
    }
    out
}

pub const CLONE_TABLE: &str = "clones.txt";
pub const ALIGNMENTS: &str = "alignments.txt";
pub const NT_PAIRS: &str = "nt_pairs.txt";
pub const ORIENTATION_PAIRS: &str = "orientation_pairs.txt";
pub const SEQUENCES: &str = "sequences.txt";

/// The text of one input bundle. Only the clone table is mandatory on disk.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bundle {
    pub clones: String,
    pub alignments: String,
    pub nt_pairs: String,
    pub orientation_pairs: String,
    pub sequences: Option<String>,
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_optional(path: &Path) -> Result<Option<String>> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(path, e)),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

impl Bundle {
    pub fn read(dir: &Path) -> Result<Bundle> {
        Ok(Bundle {
            clones: read_text(&dir.join(CLONE_TABLE))?,
            alignments: read_optional(&dir.join(ALIGNMENTS))?.unwrap_or_default(),
            nt_pairs: read_optional(&dir.join(NT_PAIRS))?.unwrap_or_default(),
            orientation_pairs: read_optional(&dir.join(ORIENTATION_PAIRS))?.unwrap_or_default(),
            sequences: read_optional(&dir.join(SEQUENCES))?,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_text(&dir.join(CLONE_TABLE), &self.clones)?;
        write_text(&dir.join(ALIGNMENTS), &self.alignments)?;
        write_text(&dir.join(NT_PAIRS), &self.nt_pairs)?;
        write_text(&dir.join(ORIENTATION_PAIRS), &self.orientation_pairs)?;
        if let Some(s) = &self.sequences {
            write_text(&dir.join(SEQUENCES), s)?;
        }
        Ok(())
    }
}

/// Parsed bundle contents.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub dataset: Dataset,
    pub alignments: Vec<RawAlignment>,
    pub nt_pairs: Vec<ValidOverlap>,
    pub orientation_pairs: Vec<OrientationPair>,
    pub warnings: Vec<String>,
}

impl Bundle {
    pub fn parse(&self) -> Result<Inputs> {
        let (mut dataset, ct) = parse_clone_table(&self.clones)?;
        let mut warnings = ct.warnings;
        if let Some(s) = &self.sequences {
            warnings.extend(parse_sequences(s, &mut dataset)?.warnings);
        }
        let alns = parse_alignments(&self.alignments, &dataset)?;
        warnings.extend(alns.warnings);
        let nt_pairs = parse_nt_pairs(&self.nt_pairs, &dataset)?;
        let op = parse_orientation_pairs(&self.orientation_pairs, &dataset)?;
        warnings.extend(op.warnings);
        Ok(Inputs {
            dataset,
            alignments: alns.items,
            nt_pairs,
            orientation_pairs: op.items,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reframe;

    const TABLE1: &str = "\
# accession estimated_length phase chromosome n_fragments
AC002092.1 95456 1 17 4
    AC002092.1~1   1      888    888
    AC002092.1~2   889    46200  45312
    AC002092.1~3   46201  84925  38725
    AC002092.1~4.1 84926  95170  10245
";

    #[test]
    fn parses_example_bac() {
        let (ds, rep) = parse_clone_table(TABLE1).unwrap();
        assert!(rep.warnings.is_empty());
        assert_eq!(ds.clones.len(), 1);
        let c = &ds.clones[0];
        assert_eq!(c.estimated_length, 95456);
        assert_eq!(c.phase, Phase::One);
        assert_eq!(c.chromosome, Chromosome::Assigned("17".into()));
        assert_eq!(c.fragments.len(), 4);
        assert_eq!(ds.frag(c.fragments[0]).length, 888);
        assert_eq!(ds.frag(c.fragments[3]).name, "AC002092.1~4.1");
    }

    #[test]
    fn fragment_count_mismatch_reports_both_counts() {
        let text = TABLE1.replace("17 4", "17 3");
        match parse_clone_table(&text) {
            Err(Error::FragmentCount { declared, found, .. }) => {
                assert_eq!((declared, found), (3, 4))
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = TABLE1.replace("17 4", "17 5");
        assert!(matches!(
            parse_clone_table(&text),
            Err(Error::FragmentCount { declared: 5, found: 4, .. })
        ));
    }

    #[test]
    fn bad_rows_are_errors() {
        let dup = format!("{TABLE1}{}", TABLE1.replace("~", "_"));
        assert!(matches!(
            parse_clone_table(&dup),
            Err(Error::DuplicateAccession(_))
        ));
        let bad_len = TABLE1.replace("888    888", "888    889");
        assert!(matches!(parse_clone_table(&bad_len), Err(Error::Parse { line: 3, .. })));
        let phase3 = "X 1000 3 U 2\n x~1 1 500 500\n x~2 501 1000 500\n";
        let (ds, rep) = parse_clone_table(phase3).unwrap();
        assert_eq!(rep.warnings.len(), 1);
        assert_eq!(ds.clones[0].chromosome, Chromosome::Unknown);
    }

    #[test]
    fn phase_two_gets_declared_order_and_extras_parse() {
        let text = "P 3000 2 4 2\n p~1 1 1000 1000\n p~2 1001 3000 2000\n\
                    Q 3000 1 4 2\n q~1 1 1000 1000 end=left order=1\n q~2 1001 3000 2000 end=right\n";
        let (ds, _) = parse_clone_table(text).unwrap();
        assert_eq!(ds.fragments[0].declared_order, Some(0));
        assert_eq!(ds.fragments[1].declared_order, Some(1));
        assert_eq!(ds.fragments[2].end_marker, Some(EndMarker::Left));
        assert_eq!(ds.fragments[2].declared_order, Some(1));
        assert_eq!(ds.fragments[3].declared_order, None);
        let again = parse_clone_table(&write_clone_table(&ds)).unwrap().0;
        assert_eq!(again.fragments, ds.fragments);
        assert_eq!(again.clones, ds.clones);
    }

    fn aln(a_s: i64, a_e: i64, b_s: i64, b_e: i64, strand: Strand, id: f64) -> RawAlignment {
        RawAlignment {
            a: FragId(0),
            a_start: a_s,
            a_end: a_e,
            b: FragId(1),
            b_start: b_s,
            b_end: b_e,
            strand,
            identity: id,
        }
    }

    #[test]
    fn exact_dovetail() {
        let p = PipelineParams::default();
        let x = aln(8001, 10000, 1, 2000, Strand::Same, 0.99);
        match classify_overlap(&x, 10000, 10000, Phase::Three, Phase::Three, &p) {
            Classification::Valid(o) => {
                assert_eq!(o.kind, OverlapKind::Dovetail);
                assert_eq!(o.offset, 8000);
                assert_eq!(o.overlap_length, 2000);
            }
            r => panic!("{r:?}"),
        }
        let low = aln(8001, 10000, 1, 2000, Strand::Same, 0.95);
        assert_eq!(
            classify_overlap(&low, 10000, 10000, Phase::Three, Phase::Three, &p),
            Classification::Rejected(RejectReason::LowIdentity)
        );
    }

    /// Independent classifier: enumerate the four end-gap conditions directly on genome-style
    /// intervals rather than through the alignment-frame arithmetic.
    fn brute_kind(x: &RawAlignment, la: i64, lb: i64, ea: i64, eb: i64) -> Option<(OverlapKind, i64)> {
        // Unaligned bases at each end of b, measured in b's own orientation as laid against a.
        let b_ends = match x.strand {
            Strand::Same => [x.b_start - 1, lb - x.b_end],
            Strand::Reverse => [lb - x.b_end, x.b_start - 1],
        };
        let a_ends = [x.a_start - 1, la - x.a_end];
        let conds = [
            b_ends[0] <= eb && b_ends[1] <= eb,
            a_ends[0] <= ea && a_ends[1] <= ea,
            a_ends[1] <= ea && b_ends[0] <= eb,
            a_ends[0] <= ea && b_ends[1] <= eb,
        ];
        // Offset by walking base positions: a's 0-based aligned start minus b's oriented 0-based start.
        let b0 = b_ends[0];
        let off = (x.a_start - 1) - b0;
        if conds[0] || conds[1] {
            Some((OverlapKind::Containment, off))
        } else if conds[2] || conds[3] {
            Some((OverlapKind::Dovetail, off))
        } else {
            None
        }
    }

    #[test]
    fn containment_example_matches_brute_force() {
        let p = PipelineParams::default();
        let x = aln(40001, 44800, 101, 4900, Strand::Same, 0.99);
        let got = classify_overlap(&x, 100_000, 5000, Phase::One, Phase::One, &p);
        let want = brute_kind(&x, 100_000, 5000, 1000, 500).unwrap();
        match got {
            Classification::Valid(o) => {
                assert_eq!((o.kind, o.offset), want);
                assert_eq!(o.contained, Some(FragId(1)));
            }
            r => panic!("{r:?}"),
        }
    }

    proptest::proptest! {
        #[test]
        fn classification_agrees_with_brute_force_and_is_symmetric(
            la in 2000i64..20000, lb in 2000i64..20000,
            a_s in 1i64..20000, b_s in 1i64..20000, span in 100i64..20000,
            rev in proptest::bool::ANY, pa in 1u8..4, pb in 1u8..4,
        ) {
            let span = span.min(la - a_s + 1).min(lb - b_s + 1);
            proptest::prop_assume!(span > 0 && a_s <= la && b_s <= lb);
            let strand = if rev { Strand::Reverse } else { Strand::Same };
            let x = aln(a_s, a_s + span - 1, b_s, b_s + span - 1, strand, 0.99);
            let (pa, pb) = (Phase::from_number(pa).unwrap(), Phase::from_number(pb).unwrap());
            let p = PipelineParams::default();
            let ea = end_tolerance(la, pa, &p);
            let eb = end_tolerance(lb, pb, &p);
            let got = classify_overlap(&x, la, lb, pa, pb, &p);
            let want = brute_kind(&x, la, lb, ea, eb);
            match (&got, want) {
                (Classification::Valid(o), Some((k, off))) => {
                    proptest::prop_assert_eq!(o.kind, k);
                    proptest::prop_assert_eq!(o.offset, off);
                }
                (Classification::Rejected(RejectReason::Internal), None) => {}
                (g, w) => proptest::prop_assert!(false, "{:?} vs {:?}", g, w),
            }
            let swapped = RawAlignment {
                a: x.b, a_start: x.b_start, a_end: x.b_end,
                b: x.a, b_start: x.a_start, b_end: x.a_end,
                strand, identity: x.identity,
            };
            let back = classify_overlap(&swapped, lb, la, pb, pa, &p);
            match (got, back) {
                (Classification::Valid(o1), Classification::Valid(o2)) => {
                    proptest::prop_assert_eq!(o1.kind, o2.kind);
                    proptest::prop_assert_eq!(o1.overlap_length, o2.overlap_length);
                    proptest::prop_assert_eq!(reframe(o1.offset, strand, la, lb), o2.offset);
                }
                (Classification::Rejected(r1), Classification::Rejected(r2)) => {
                    proptest::prop_assert_eq!(r1, r2)
                }
                (g, b) => proptest::prop_assert!(false, "{:?} vs {:?}", g, b),
            }
        }
    }

    fn two_frag_ds() -> Dataset {
        parse_clone_table("A 5000 3 1 1\n f1 1 5000 5000\nB 4000 3 1 1\n f2 1 4000 4000\n")
            .unwrap()
            .0
    }

    #[test]
    fn orientation_pairs_merge_and_skip() {
        let ds = two_frag_ds();
        let p = parse_orientation_pairs("f1 f2 Same\nf2 f1 Same\nf1 f1 Same\nf1 zz Reverse\n", &ds)
            .unwrap();
        assert_eq!(p.items.len(), 1);
        assert_eq!(p.items[0].evidence_count, 2);
        assert_eq!(p.warnings.len(), 2);
        assert!(parse_orientation_pairs("", &ds).unwrap().items.is_empty());
        let again = parse_orientation_pairs(&write_orientation_pairs(&p.items, &ds), &ds).unwrap();
        assert_eq!(again.items, p.items);
    }

    #[test]
    fn nt_pairs() {
        let ds = two_frag_ds();
        let v = parse_nt_pairs("f1 f2 0\n", &ds).unwrap();
        assert_eq!(v[0].kind, OverlapKind::NtPair);
        assert_eq!(v[0].overlap_length, 0);
        assert_eq!(v[0].offset, 5000);
        let v = parse_nt_pairs("f1 f2 1200\n", &ds).unwrap();
        assert_eq!(v[0].overlap_length, 1200);
        let w = parse_nt_pairs(&write_nt_pairs(&v, &ds), &ds).unwrap();
        assert_eq!(w, v);
        assert!(matches!(parse_nt_pairs("f1 zz 5\n", &ds), Err(Error::UnknownFragment(_))));
    }

    #[test]
    fn sequences_checked() {
        let mut ds = parse_clone_table("A 4 3 1 1\n f1 1 4 4\n").unwrap().0;
        parse_sequences("f1 acgt\n", &mut ds).unwrap();
        assert_eq!(ds.fragments[0].sequence.as_deref(), Some("ACGT"));
        assert!(parse_sequences("f1 ACG\n", &mut ds).is_err());
        assert!(parse_sequences("f1 ACGX\n", &mut ds).is_err());
    }
}
